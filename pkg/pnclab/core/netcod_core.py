"""
Linear network coding above the physical layer.

Relays forward F_q linear combinations of the packets they hear; a
destination collects enough combinations and solves for the originals.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .galois_core import (
    FieldError,
    FieldMatrix,
    FieldVector,
    UnsolvableSystemError,
    check_modulus,
    random_vector,
    rank,
    solve,
)

HEADER_DTYPE = np.dtype("<u2")


@dataclass(frozen=True)
class Packet:
    payload: FieldVector

    @property
    def q(self) -> int:
        return self.payload.q

    @property
    def k(self) -> int:
        return len(self.payload)


@dataclass(frozen=True)
class Combination:
    """A relay output: coefficient header plus the combined payload."""

    coeffs: FieldVector
    payload: FieldVector

    def __post_init__(self):
        if self.coeffs.q != self.payload.q:
            raise FieldError(f"modulus mismatch: {self.coeffs.q} vs {self.payload.q}")

    @property
    def q(self) -> int:
        return self.payload.q


@dataclass(frozen=True)
class CollectedSystem:
    A: FieldMatrix
    U: FieldMatrix
    combinations: Tuple[Combination, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.A.rows != self.U.rows:
            raise FieldError(f"{self.A.rows} coefficient rows but {self.U.rows} payload rows")
        if self.A.q != self.U.q:
            raise FieldError(f"modulus mismatch: {self.A.q} vs {self.U.q}")

    @property
    def L(self) -> int:
        return self.A.cols


def _check_packets(packets: Sequence[Packet]) -> Tuple[int, int]:
    if not packets:
        raise FieldError("at least one packet is required")
    q, k = packets[0].q, packets[0].k
    for p in packets:
        if p.q != q:
            raise FieldError(f"modulus mismatch: {q} vs {p.q}")
        if p.k != k:
            raise FieldError(f"packet length mismatch: {k} vs {p.k}")
    return q, k


def relay_combine(packets: Sequence[Packet], coeffs: FieldVector) -> Combination:
    """u = a_1 w_1 + ... + a_L w_L over F_q, componentwise."""
    q, _ = _check_packets(packets)
    if len(coeffs) != len(packets):
        raise FieldError(f"{len(coeffs)} coefficients for {len(packets)} packets")
    if coeffs.q != q:
        raise FieldError(f"modulus mismatch: {coeffs.q} vs {q}")
    W = FieldMatrix.from_rows([p.payload for p in packets])
    # u^T = a^T W
    u = coeffs.gf() @ W.gf()
    return Combination(coeffs, FieldVector(u, q))


def route(packets: Sequence[Packet], index: int) -> Combination:
    """Forward packet `index` (1-based) unchanged."""
    q, _ = _check_packets(packets)
    if not 1 <= index <= len(packets):
        raise FieldError(f"packet index {index} out of range 1..{len(packets)}")
    return Combination(FieldVector.unit(len(packets), index - 1, q), packets[index - 1].payload)


def collect(combinations: Sequence[Combination]) -> CollectedSystem:
    """Stack received combinations; duplicates are kept."""
    if not combinations:
        raise FieldError("no combinations collected")
    A = FieldMatrix.from_rows([c.coeffs for c in combinations])
    U = FieldMatrix.from_rows([c.payload for c in combinations])
    return CollectedSystem(A, U, tuple(combinations))


def is_solvable(system: CollectedSystem) -> bool:
    return rank(system.A) == system.L


def recover_messages(system: CollectedSystem) -> List[Packet]:
    W = solve(system.A, system.U)
    return [Packet(W.row(i)) for i in range(W.rows)]


def random_coefficients(L: int, q: int, rng: np.random.Generator) -> FieldVector:
    if L < 1:
        raise FieldError(f"need at least one coefficient, got L={L}")
    return random_vector(L, q, rng)


def encode_combination(combination: Combination) -> bytes:
    """
    Serialize a combination for the wire.

    Layout: header (q, k, L) then L coefficients then k payload symbols,
    every value a little-endian unsigned 16-bit integer. q = 2**16 does not
    fit the header and is rejected.
    """
    q = combination.q
    if q > np.iinfo(HEADER_DTYPE).max:
        raise FieldError(f"modulus {q} does not fit the 16-bit header")
    k, L = len(combination.payload), len(combination.coeffs)
    header = np.array([q, k, L], dtype=HEADER_DTYPE)
    body = np.concatenate([combination.coeffs.entries, combination.payload.entries]).astype(HEADER_DTYPE)
    return header.tobytes() + body.tobytes()


def decode_combination(data: bytes) -> Combination:
    """Inverse of encode_combination."""
    width = HEADER_DTYPE.itemsize
    if len(data) < 3 * width or len(data) % width:
        raise FieldError(f"truncated combination ({len(data)} bytes)")
    values = np.frombuffer(data, dtype=HEADER_DTYPE).astype(np.int64)
    q, k, L = (int(v) for v in values[:3])
    check_modulus(q)
    if len(values) != 3 + L + k:
        raise FieldError(f"expected {3 + L + k} symbols, found {len(values)}")
    coeffs = FieldVector(values[3:3 + L], q)
    payload = FieldVector(values[3 + L:], q)
    return Combination(coeffs, payload)


__all__ = [
    "Packet",
    "Combination",
    "CollectedSystem",
    "UnsolvableSystemError",
    "relay_combine",
    "route",
    "collect",
    "is_solvable",
    "recover_messages",
    "random_coefficients",
    "encode_combination",
    "decode_combination",
]
