"""
Finite-field multiple-access channels and computation coding.

Covers the noiseless modulo-q adder, the one-in-three erasure adder with its
parity code, and the modulo-additive noise adder where every user employs
the same linear code so the receiver can decode the modulo sum directly.
"""

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .galois_core import (
    FieldElement,
    FieldError,
    FieldMatrix,
    FieldVector,
    check_modulus,
    prime_field,
    random_matrix,
    rank,
)
from .netcod_core import Packet

PMF_TOLERANCE = 1e-12
MAX_CODEBOOK = 2 ** 16


class ChannelError(ValueError):
    """Mismatched channel inputs or an unrecoverable channel output."""


@dataclass(frozen=True)
class ErasureSpec:
    block_len: int = 3
    erasures_per_block: int = 1

    def __post_init__(self):
        if (self.block_len, self.erasures_per_block) != (3, 1):
            raise ChannelError("only the one-in-three erasure adder is supported")


@dataclass(frozen=True)
class ModqChannelSpec:
    """
    A modulo-q multiple-access channel.

    Args:
        q: field size (prime)
        L: number of transmitters
        noise_pmf: distribution of the additive noise symbol, length q;
            None means noiseless
        erasure: erasure structure, None for no erasures
    """

    q: int
    L: int
    noise_pmf: Optional[Tuple[float, ...]] = None
    erasure: Optional[ErasureSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "q", check_modulus(self.q))
        if self.L < 1:
            raise ChannelError(f"need at least one transmitter, got L={self.L}")
        if self.noise_pmf is not None:
            pmf = tuple(float(p) for p in self.noise_pmf)
            object.__setattr__(self, "noise_pmf", _check_pmf(pmf, self.q))

    @property
    def pmf(self) -> np.ndarray:
        if self.noise_pmf is None:
            return np.eye(1, self.q, 0).ravel()
        return np.asarray(self.noise_pmf)


def _check_pmf(pmf: Tuple[float, ...], q: int) -> Tuple[float, ...]:
    if len(pmf) != q:
        raise ChannelError(f"noise pmf has {len(pmf)} entries, expected {q}")
    if min(pmf) < 0:
        raise ChannelError("noise pmf has negative mass")
    if abs(math.fsum(pmf) - 1.0) > PMF_TOLERANCE:
        raise ChannelError(f"noise pmf sums to {math.fsum(pmf)!r}, not 1")
    return pmf


@dataclass(frozen=True)
class ChannelOutputSymbol:
    """A received symbol, or an erasure when `value` is None."""

    value: Optional[FieldElement] = None

    @property
    def erased(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class CompCode:
    """
    Computation code: every user sends a_l * G * w_l with the same G.

    Args:
        G: n x k generator matrix over F_q
        scales: a_1..a_L, one per user
    """

    G: FieldMatrix
    scales: Tuple[FieldElement, ...] = field(default=())

    def __post_init__(self):
        if self.G.q ** self.G.cols > MAX_CODEBOOK:
            raise FieldError(f"codebook q^k = {self.G.q}^{self.G.cols} exceeds {MAX_CODEBOOK}")
        for a in self.scales:
            if a.q != self.G.q:
                raise FieldError(f"scale modulus {a.q} differs from code modulus {self.G.q}")

    @property
    def q(self) -> int:
        return self.G.q

    @property
    def n(self) -> int:
        return self.G.rows

    @property
    def k(self) -> int:
        return self.G.cols

    @property
    def rate(self) -> float:
        """Information rate k log2(q) / n in bits per channel use."""
        return self.k * math.log2(self.q) / self.n

    def scale(self, user: int) -> FieldElement:
        if not self.scales:
            return FieldElement(1, self.q)
        if not 1 <= user <= len(self.scales):
            raise ChannelError(f"user {user} out of range 1..{len(self.scales)}")
        return self.scales[user - 1]


@functools.lru_cache(maxsize=32)
def enumerate_codebook(G: FieldMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """All messages in lexicographic order and their codewords."""
    GF = prime_field(G.q)
    messages = np.array(list(itertools.product(range(G.q), repeat=G.cols)), dtype=np.int64)
    codewords = (GF(messages) @ G.gf().T).view(np.ndarray).astype(np.int64)
    messages.setflags(write=False)
    codewords.setflags(write=False)
    return messages, codewords


def _check_inputs(inputs: Sequence[FieldVector]) -> Tuple[int, int]:
    if not inputs:
        raise ChannelError("no channel inputs")
    q, n = inputs[0].q, len(inputs[0])
    for x in inputs:
        if x.q != q:
            raise ChannelError(f"modulus mismatch: {q} vs {x.q}")
        if len(x) != n:
            raise ChannelError(f"input length mismatch: {n} vs {len(x)}")
    return q, n


def noiseless_mac(inputs: Sequence[FieldVector]) -> FieldVector:
    """Componentwise modulo-q sum of all inputs."""
    q, _ = _check_inputs(inputs)
    total = inputs[0].gf()
    for x in inputs[1:]:
        total = total + x.gf()
    return FieldVector(total, q)


def precoded_onehot_transmit(packets: Sequence[Packet], coeffs: FieldVector) -> FieldVector:
    """Each user pre-multiplies its packet by a_l; the channel does the rest."""
    if len(packets) != len(coeffs):
        raise ChannelError(f"{len(coeffs)} coefficients for {len(packets)} packets")
    inputs = []
    for p, a in zip(packets, coeffs):
        if p.q != coeffs.q:
            raise ChannelError(f"modulus mismatch: {p.q} vs {coeffs.q}")
        inputs.append(p.payload.scale(a))
    return noiseless_mac(inputs)


def parity3_encode(b1: FieldElement, b2: FieldElement) -> FieldVector:
    if b1.q != b2.q:
        raise FieldError(f"modulus mismatch: {b1.q} vs {b2.q}")
    return FieldVector([b1.value, b2.value, (b1 + b2).value], b1.q)


def parity3_decode_sum(y: Sequence[ChannelOutputSymbol]) -> Tuple[FieldElement, FieldElement]:
    """
    Recover (b1+c1, b2+c2) from the erasure-adder output of two parity3
    codewords. At most one of the three symbols may be erased.
    """
    if len(y) != 3:
        raise ChannelError(f"parity block must have 3 symbols, got {len(y)}")
    erased = [i for i, s in enumerate(y) if s.erased]
    if len(erased) > 1:
        raise ChannelError(f"{len(erased)} erasures in one parity block, cannot recover")
    y1, y2, y3 = (s.value for s in y)
    if not erased or erased == [2]:
        return y1, y2
    if erased == [0]:
        return y3 - y2, y2
    return y1, y3 - y1


def modnoise_mac(inputs: Sequence[FieldVector], rng: np.random.Generator, spec: ModqChannelSpec) -> FieldVector:
    """y = x_1 + ... + x_L + z with z drawn i.i.d. from the noise pmf."""
    q, n = _check_inputs(inputs)
    if q != spec.q:
        raise ChannelError(f"inputs over F_{q} on a channel over F_{spec.q}")
    z = FieldVector(rng.choice(q, size=n, p=spec.pmf), q)
    return noiseless_mac(list(inputs) + [z])


def erasure_mac(
    inputs: Sequence[FieldVector], rng: np.random.Generator, spec: ModqChannelSpec
) -> List[ChannelOutputSymbol]:
    """Modulo sum, then one uniformly chosen symbol of every aligned 3-block is erased."""
    q, n = _check_inputs(inputs)
    erasure = spec.erasure or ErasureSpec()
    if n % erasure.block_len:
        raise ChannelError(f"block length {n} is not a multiple of {erasure.block_len}")
    total = noiseless_mac(inputs)
    blocks = n // erasure.block_len
    hits = rng.integers(0, erasure.block_len, size=blocks) + erasure.block_len * np.arange(blocks)
    erased = set(int(i) for i in hits)
    return [ChannelOutputSymbol(None if i in erased else total[i]) for i in range(n)]


def compcode_encode(code: CompCode, w: Packet, user: int) -> FieldVector:
    if w.q != code.q or w.k != code.k:
        raise ChannelError(f"packet (q={w.q}, k={w.k}) does not fit code (q={code.q}, k={code.k})")
    return (code.G @ w.payload).scale(code.scale(user))


def compcode_decode(code: CompCode, y: FieldVector) -> Packet:
    """Minimum Hamming distance decoding of the modulo sum; ties go to the smallest message."""
    if y.q != code.q or len(y) != code.n:
        raise ChannelError(f"received word (q={y.q}, n={len(y)}) does not fit code (q={code.q}, n={code.n})")
    messages, codewords = enumerate_codebook(code.G)
    distances = np.count_nonzero(codewords != y.entries, axis=1)
    best = int(np.argmin(distances))
    return Packet(FieldVector(messages[best], code.q))


def random_compcode(q: int, n: int, k: int, rng: np.random.Generator, L: int = 2) -> CompCode:
    """Draw G uniformly until it has rank k; unit scales for all L users."""
    if k > n:
        raise FieldError(f"k={k} exceeds n={n}")
    while True:
        G = random_matrix(n, k, q, rng)
        if rank(G) == k:
            return CompCode(G, tuple(FieldElement(1, q) for _ in range(L)))


def noise_entropy(spec: ModqChannelSpec) -> float:
    """H(Z) in bits."""
    return float(stats.entropy(spec.pmf, base=2))


def comp_rate_modq(spec: ModqChannelSpec) -> float:
    return max(0.0, math.log2(spec.q) - noise_entropy(spec))


def separation_rate_modq(spec: ModqChannelSpec, L: int) -> float:
    if L < 1:
        raise ChannelError(f"L must be at least 1, got {L}")
    return comp_rate_modq(spec) / L


def noiseless_comp_rate(q: int) -> float:
    return math.log2(check_modulus(q))


def noiseless_separation_rate(q: int, L: int) -> float:
    if L < 1:
        raise ChannelError(f"L must be at least 1, got {L}")
    return noiseless_comp_rate(q) / L


def comp_rate_erasure(q: int) -> float:
    """Two sums per three channel uses."""
    return 2.0 * math.log2(check_modulus(q)) / 3.0


def separation_rate_erasure(q: int) -> float:
    """Take turns over the erasure adder: each user gets half of (2/3) log2 q."""
    return math.log2(check_modulus(q)) / 3.0


def systematic_rate_erasure(q: int, L: int = 2) -> float:
    """Uncoded uses followed by L parity turns."""
    if L < 1:
        raise ChannelError(f"L must be at least 1, got {L}")
    return 2.0 * math.log2(check_modulus(q)) / (2 + L)


def symmetric_noise_pmf(q: int, p: float) -> Tuple[float, ...]:
    """Mass 1-p at zero, p spread evenly over the q-1 nonzero symbols."""
    q = check_modulus(q)
    if not 0.0 <= p <= 1.0:
        raise ChannelError(f"crossover probability {p} outside [0, 1]")
    rest = p / (q - 1)
    return (1.0 - p,) + (rest,) * (q - 1)


def bpsk_noise_pmf(sigma2: float) -> Tuple[float, float]:
    """The modulo-2 adder seen through the BPSK sum detector at noise variance sigma2."""
    from .wireless_twoway import bpsk_sum_error_prob

    p = bpsk_sum_error_prob(sigma2)
    return (1.0 - p, p)
