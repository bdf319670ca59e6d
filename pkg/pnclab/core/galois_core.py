"""
Exact arithmetic over prime fields F_q.

Field elements, packet vectors and coefficient/generator matrices are thin
immutable wrappers around integer arrays that remember their modulus. The
arithmetic itself is done by `galois.GF(q)` arrays.
"""

import functools
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Sequence, Union

import galois
import numpy as np

MAX_MODULUS: int = 2 ** 16


class FieldError(ValueError):
    """Bad modulus, modulus mismatch or malformed shape."""


class ZeroInverseError(FieldError, ZeroDivisionError):
    """Multiplicative inverse of zero requested."""


class UnsolvableSystemError(FieldError):
    """A linear system over F_q has no unique solution."""

    def __init__(self, rank: int, required: int, reason: str = "coefficient matrix is rank deficient"):
        self.rank = rank
        self.required = required
        super().__init__(f"unsolvable system: {reason} (rank {rank}, need {required})")


def check_modulus(q: int) -> int:
    """Validate that q is a prime no larger than MAX_MODULUS."""
    if isinstance(q, bool) or not isinstance(q, (int, np.integer)):
        raise FieldError(f"modulus must be an integer, got {q!r}")
    q = int(q)
    if q < 2 or q > MAX_MODULUS:
        raise FieldError(f"modulus {q} outside [2, {MAX_MODULUS}]")
    if not galois.is_prime(q):
        raise FieldError(f"modulus {q} is not prime")
    return q


@functools.lru_cache(maxsize=None)
def prime_field(q: int):
    """Return the galois field class GF(q) for a validated prime q."""
    return galois.GF(check_modulus(q))


def _as_int_array(values, ndim: int) -> np.ndarray:
    if isinstance(values, galois.FieldArray):
        arr = values.view(np.ndarray).astype(np.int64)
    elif isinstance(values, np.ndarray):
        arr = values.astype(np.int64)
    elif ndim == 1:
        arr = np.array([int(v) for v in values], dtype=np.int64)
    else:
        arr = np.array([[int(v) for v in row] for row in values], dtype=np.int64)
    if arr.ndim != ndim:
        raise FieldError(f"expected a {ndim}-d array, got shape {arr.shape}")
    return arr


def _check_entries(arr: np.ndarray, q: int) -> None:
    if arr.size == 0 or 0 in arr.shape:
        raise FieldError(f"empty field object (shape {arr.shape})")
    if arr.min() < 0 or arr.max() >= q:
        raise FieldError(f"entries must lie in [0, {q - 1}]")


@dataclass(frozen=True)
class FieldElement:
    value: int
    q: int

    def __post_init__(self):
        q = check_modulus(self.q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "value", int(self.value))
        if not 0 <= self.value < q:
            raise FieldError(f"value {self.value} outside [0, {q - 1}]")

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value

    def __add__(self, other: "FieldElement") -> "FieldElement":
        return gf_add(self, other)

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        return gf_sub(self, other)

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        return gf_mul(self, other)

    def __neg__(self) -> "FieldElement":
        return gf_neg(self)


class FieldVector:
    """A length-k (packet) or length-n (codeword) vector over F_q."""

    __slots__ = ("_entries", "_q")

    def __init__(self, entries: Union[Sequence[int], np.ndarray], q: int):
        self._q = check_modulus(q)
        arr = _as_int_array(entries, 1)
        _check_entries(arr, self._q)
        arr.setflags(write=False)
        self._entries = arr

    @classmethod
    def reduce(cls, values, q: int) -> "FieldVector":
        """Build a vector from arbitrary integers, reducing them mod q."""
        return cls(np.mod(np.asarray(values, dtype=np.int64), q), q)

    @classmethod
    def zeros(cls, length: int, q: int) -> "FieldVector":
        return cls(np.zeros(length, dtype=np.int64), q)

    @classmethod
    def unit(cls, length: int, index: int, q: int) -> "FieldVector":
        e = np.zeros(length, dtype=np.int64)
        e[index] = 1
        return cls(e, q)

    @property
    def q(self) -> int:
        return self._q

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    def gf(self):
        return prime_field(self._q)(self._entries)

    def to_list(self) -> List[int]:
        return [int(v) for v in self._entries]

    def __len__(self) -> int:
        return int(self._entries.shape[0])

    def __iter__(self) -> Iterator[int]:
        return iter(self.to_list())

    def __getitem__(self, index: int) -> FieldElement:
        return FieldElement(int(self._entries[index]), self._q)

    def __add__(self, other: "FieldVector") -> "FieldVector":
        _same_modulus(self, other)
        if len(self) != len(other):
            raise FieldError(f"length mismatch: {len(self)} vs {len(other)}")
        return FieldVector(self.gf() + other.gf(), self._q)

    def scale(self, a: Union[int, FieldElement]) -> "FieldVector":
        a = int(a) % self._q
        return FieldVector(prime_field(self._q)(a) * self.gf(), self._q)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldVector):
            return NotImplemented
        return self._q == other._q and np.array_equal(self._entries, other._entries)

    def __hash__(self) -> int:
        return hash((self._q, self._entries.tobytes()))

    def __repr__(self) -> str:
        return f"FieldVector({self.to_list()}, q={self._q})"


class FieldMatrix:
    """A rows x cols matrix over F_q, row-major."""

    __slots__ = ("_entries", "_q")

    def __init__(self, entries: Union[Sequence[Sequence[int]], np.ndarray], q: int):
        self._q = check_modulus(q)
        arr = _as_int_array(entries, 2)
        _check_entries(arr, self._q)
        arr.setflags(write=False)
        self._entries = arr

    @classmethod
    def reduce(cls, values, q: int) -> "FieldMatrix":
        return cls(np.mod(np.asarray(values, dtype=np.int64), q), q)

    @classmethod
    def from_rows(cls, rows: Iterable[FieldVector]) -> "FieldMatrix":
        rows = list(rows)
        if not rows:
            raise FieldError("cannot build a matrix from zero rows")
        q = rows[0].q
        for r in rows:
            _same_modulus(rows[0], r)
        return cls(np.vstack([r.entries for r in rows]), q)

    @classmethod
    def identity(cls, size: int, q: int) -> "FieldMatrix":
        return cls(np.eye(size, dtype=np.int64), q)

    @property
    def q(self) -> int:
        return self._q

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def rows(self) -> int:
        return int(self._entries.shape[0])

    @property
    def cols(self) -> int:
        return int(self._entries.shape[1])

    @property
    def shape(self):
        return self._entries.shape

    def gf(self):
        return prime_field(self._q)(self._entries)

    def row(self, index: int) -> FieldVector:
        return FieldVector(self._entries[index], self._q)

    def to_lists(self) -> List[List[int]]:
        return [[int(v) for v in row] for row in self._entries]

    def __matmul__(self, other):
        _same_modulus(self, other)
        if isinstance(other, FieldVector):
            if self.cols != len(other):
                raise FieldError(f"shape mismatch: {self.shape} @ ({len(other)},)")
            return FieldVector(self.gf() @ other.gf(), self._q)
        if isinstance(other, FieldMatrix):
            if self.cols != other.rows:
                raise FieldError(f"shape mismatch: {self.shape} @ {other.shape}")
            return FieldMatrix(self.gf() @ other.gf(), self._q)
        return NotImplemented

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self._q == other._q and np.array_equal(self._entries, other._entries)

    def __hash__(self) -> int:
        return hash((self._q, self.shape, self._entries.tobytes()))

    def __repr__(self) -> str:
        return f"FieldMatrix({self.to_lists()}, q={self._q})"


def _same_modulus(a, b) -> None:
    if a.q != b.q:
        raise FieldError(f"modulus mismatch: {a.q} vs {b.q}")


def gf_add(a: FieldElement, b: FieldElement) -> FieldElement:
    _same_modulus(a, b)
    GF = prime_field(a.q)
    return FieldElement(int(GF(a.value) + GF(b.value)), a.q)


def gf_sub(a: FieldElement, b: FieldElement) -> FieldElement:
    _same_modulus(a, b)
    GF = prime_field(a.q)
    return FieldElement(int(GF(a.value) - GF(b.value)), a.q)


def gf_neg(a: FieldElement) -> FieldElement:
    GF = prime_field(a.q)
    return FieldElement(int(-GF(a.value)), a.q)


def gf_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    _same_modulus(a, b)
    GF = prime_field(a.q)
    return FieldElement(int(GF(a.value) * GF(b.value)), a.q)


def gf_inv(a: FieldElement) -> FieldElement:
    if a.value == 0:
        raise ZeroInverseError(f"0 has no inverse in F_{a.q}")
    GF = prime_field(a.q)
    return FieldElement(int(GF(a.value) ** -1), a.q)


def rank(M: FieldMatrix) -> int:
    """Rank over F_q by Gaussian elimination."""
    return int(np.linalg.matrix_rank(M.gf()))


def solve(A: FieldMatrix, U: FieldMatrix) -> FieldMatrix:
    """
    Solve A·W = U over F_q for the unique W.

    Args:
        A: M x L coefficient matrix, must have rank L
        U: M x k matrix whose rows are the received combinations

    Returns:
        W, the L x k matrix of original packets
    """
    _same_modulus(A, U)
    if U.rows != A.rows:
        raise FieldError(f"row mismatch: A has {A.rows} rows, U has {U.rows}")
    achieved = rank(A)
    if achieved < A.cols:
        raise UnsolvableSystemError(achieved, A.cols)

    GF = prime_field(A.q)
    augmented = GF(np.hstack([A.entries, U.entries]))
    reduced = augmented.row_reduce().view(np.ndarray)
    L = A.cols
    # Rows below the pivots must vanish, otherwise U is not in the column space of A.
    if np.any(reduced[L:, L:] != 0):
        raise UnsolvableSystemError(achieved, L, "received combinations are inconsistent")
    return FieldMatrix(reduced[:L, L:], A.q)


def random_matrix(rows: int, cols: int, q: int, rng: np.random.Generator) -> FieldMatrix:
    """I.i.d. uniform entries over {0, ..., q-1}."""
    q = check_modulus(q)
    if rows < 1 or cols < 1:
        raise FieldError(f"matrix dimensions must be positive, got {rows}x{cols}")
    return FieldMatrix(rng.integers(0, q, size=(rows, cols)), q)


def random_vector(length: int, q: int, rng: np.random.Generator) -> FieldVector:
    q = check_modulus(q)
    if length < 1:
        raise FieldError(f"vector length must be positive, got {length}")
    return FieldVector(rng.integers(0, q, size=length), q)
