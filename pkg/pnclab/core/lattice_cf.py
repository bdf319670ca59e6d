"""
Nested lattice codes and the compute-and-forward receiver.

The coarse lattice is beta*q*Z^n and the fine lattice is beta*(code(G) + qZ^n),
with codewords centered so the uniform codebook has average power P. A receiver
scales its observation by alpha, quantizes to the fine lattice, reduces
modulo the coarse lattice and maps the result back to an F_q combination of
the messages.
"""

import itertools
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .galois_core import (
    FieldError,
    FieldMatrix,
    FieldVector,
    check_modulus,
    random_matrix,
    rank,
    solve,
)
from .modq_phy import MAX_CODEBOOK, enumerate_codebook
from .netcod_core import Packet
from .rng import trial_rng

MEMBERSHIP_TOLERANCE = 1e-9


class LatticeError(ValueError):
    """Non-codebook point, odd split length or an all-zero coefficient vector."""


@dataclass(frozen=True, eq=False)
class LatticePoint:
    """
    A point of the fine lattice.

    `shift_weight` counts how many copies of the centering offset the point
    carries: 1 for a transmitted codeword, sum(a) for a combination.
    """

    coords: np.ndarray
    shift_weight: int = 1

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "shift_weight", int(self.shift_weight))

    @property
    def n(self) -> int:
        return int(self.coords.shape[0])

    @property
    def power(self) -> float:
        return float(np.mean(self.coords ** 2))


class NestedLatticeCode:
    """
    Desk-scale nested lattice code built from a linear code over F_q.

    Args:
        G: n x k generator of the fine code
        P: average power per symbol
    """

    def __init__(self, G: FieldMatrix, P: float):
        if P <= 0:
            raise LatticeError(f"power must be positive, got {P}")
        if G.q ** G.cols > MAX_CODEBOOK:
            raise FieldError(f"codebook q^k = {G.q}^{G.cols} exceeds {MAX_CODEBOOK}")
        self.G = G
        self.P = float(P)
        self.q = G.q
        self.n = G.rows
        self.k = G.cols
        self.beta = math.sqrt(12.0 * self.P / (self.q ** 2 - 1))
        self.center_shift = (self.q - 1) / 2.0

    @classmethod
    def from_generator(cls, G: FieldMatrix, P: float) -> "NestedLatticeCode":
        return cls(G, P)

    @classmethod
    def random(cls, q: int, n: int, k: int, P: float, rng: np.random.Generator) -> "NestedLatticeCode":
        """Uniform generator, redrawn until it has full column rank."""
        q = check_modulus(q)
        if k > n:
            raise FieldError(f"k={k} exceeds n={n}")
        while True:
            G = random_matrix(n, k, q, rng)
            if rank(G) == k:
                return cls(G, P)

    @property
    def coarse_modulus(self) -> float:
        return self.beta * self.q

    @property
    def rate(self) -> float:
        return self.k * math.log2(self.q) / self.n

    def codebook(self) -> Tuple[np.ndarray, np.ndarray]:
        return enumerate_codebook(self.G)

    def codebook_points(self) -> np.ndarray:
        _, codewords = self.codebook()
        return self.beta * (codewords - self.center_shift)

    @property
    def peak_power(self) -> float:
        return float(np.max(np.mean(self.codebook_points() ** 2, axis=1)))

    @property
    def average_power(self) -> float:
        return float(np.mean(self.codebook_points() ** 2))

    def min_distance_sq(self) -> float:
        """Squared minimum distance of the fine lattice, by enumeration."""
        messages, codewords = self.codebook()
        nonzero = np.any(messages != 0, axis=1)
        centered = codewords[nonzero] - self.q * np.floor(codewords[nonzero] / self.q + 0.5)
        return float(self.beta ** 2 * np.min(np.sum(centered ** 2, axis=1)))

    def contains(self, x) -> bool:
        """True if x lies in the fundamental Voronoi region of the coarse lattice."""
        x = np.asarray(x, dtype=float)
        half = self.coarse_modulus / 2.0
        return bool(np.all(x >= -half) and np.all(x < half))

    def __repr__(self) -> str:
        return f"NestedLatticeCode(q={self.q}, n={self.n}, k={self.k}, P={self.P})"


def phi_map(code: NestedLatticeCode, w: Packet) -> LatticePoint:
    if w.q != code.q or w.k != code.k:
        raise LatticeError(f"packet (q={w.q}, k={w.k}) does not fit {code!r}")
    c = (code.G @ w.payload).entries
    return LatticePoint(code.beta * (c - code.center_shift), 1)


def phi_inv(code: NestedLatticeCode, x: LatticePoint) -> Packet:
    """Map a fine-lattice point back to its message."""
    if x.n != code.n:
        raise LatticeError(f"point has length {x.n}, code has n={code.n}")
    unscaled = x.coords / code.beta + code.center_shift * x.shift_weight
    rounded = np.round(unscaled)
    if np.max(np.abs(unscaled - rounded)) > MEMBERSHIP_TOLERANCE:
        raise LatticeError("point is not on the fine lattice")
    c = np.mod(rounded.astype(np.int64), code.q)
    messages, codewords = code.codebook()
    hits = np.flatnonzero(np.all(codewords == c, axis=1))
    if hits.size == 0:
        raise LatticeError("point is not a codebook member")
    return Packet(FieldVector(messages[hits[0]], code.q))


def mod_coarse(code: NestedLatticeCode, x) -> np.ndarray:
    """[x] mod coarse lattice, each coordinate in [-beta*q/2, beta*q/2)."""
    x = np.asarray(x, dtype=float)
    m = code.coarse_modulus
    return x - m * np.floor(x / m + 0.5)


def _nearest_message(code: NestedLatticeCode, x: np.ndarray, shift_weight: int) -> Tuple[int, np.ndarray]:
    _, codewords = code.codebook()
    offsets = code.beta * (codewords - code.center_shift * shift_weight)
    residues = mod_coarse(code, x[np.newaxis, :] - offsets)
    distances = np.sum(residues ** 2, axis=1)
    best = int(np.argmin(distances))
    return best, residues[best]


def quantize_fine(code: NestedLatticeCode, x, shift_weight: int = 1) -> LatticePoint:
    """Nearest fine-lattice point; ties go to the smallest message."""
    x = np.asarray(x, dtype=float)
    if x.shape != (code.n,):
        raise LatticeError(f"expected a length-{code.n} vector, got shape {x.shape}")
    _, residue = _nearest_message(code, x, shift_weight)
    return LatticePoint(x - residue, shift_weight)


def lattice_decode_point(code: NestedLatticeCode, y, alpha: float, shift_weight: int = 1) -> LatticePoint:
    """x_hat = [Q_fine(alpha * y)] mod coarse."""
    estimate = quantize_fine(code, alpha * np.asarray(y, dtype=float), shift_weight)
    return LatticePoint(mod_coarse(code, estimate.coords), shift_weight)


def lattice_combine(code: NestedLatticeCode, points: Sequence[LatticePoint], a: Sequence[int]) -> LatticePoint:
    """[sum a_l x_l] mod coarse."""
    if len(points) != len(a):
        raise LatticeError(f"{len(a)} coefficients for {len(points)} points")
    total = np.zeros(code.n)
    weight = 0
    for x, coeff in zip(points, a):
        total = total + int(coeff) * x.coords
        weight += int(coeff) * x.shift_weight
    return LatticePoint(mod_coarse(code, total), weight)


# ----------------------------------------------------------------------------
# MMSE scaling and computation rates
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CfProblem:
    h: Tuple
    a: Tuple
    P: float
    sigma2: float
    alpha: complex = 1.0

    def __post_init__(self):
        if self.P <= 0 or self.sigma2 <= 0:
            raise LatticeError(f"P and sigma2 must be positive, got P={self.P}, sigma2={self.sigma2}")
        if len(self.h) != len(self.a):
            raise LatticeError(f"h has {len(self.h)} entries, a has {len(self.a)}")


@dataclass(frozen=True)
class EffectiveNoise:
    value: float


def _check_coeffs(a) -> np.ndarray:
    a = np.asarray(a)
    if not np.any(a != 0):
        raise LatticeError("coefficient vector must not be all zero")
    return a


def alpha_mmse_single(P: float, sigma2: float) -> float:
    return P / (P + sigma2)


def alpha_mmse_equal(P: float, sigma2: float) -> float:
    return 2.0 * P / (2.0 * P + sigma2)


def alpha_mmse_cf(h, a, P: float, sigma2: float) -> float:
    h = np.asarray(h, dtype=float)
    a = np.asarray(a, dtype=float)
    return float(P * np.dot(h, a) / (sigma2 + P * np.dot(h, h)))


def alpha_mmse_complex(h, a, P: float, sigma2: float) -> complex:
    h = np.asarray(h, dtype=complex)
    a = np.asarray(a, dtype=complex)
    return complex(P * np.vdot(h, a) / (sigma2 + P * np.vdot(h, h).real))


def n_effec(prob: CfProblem) -> EffectiveNoise:
    """alpha^2 sigma^2 + P sum (alpha h_l - a_l)^2, real channel."""
    h = np.asarray(prob.h, dtype=float)
    a = np.asarray(prob.a, dtype=float)
    alpha = float(np.real(prob.alpha))
    return EffectiveNoise(float(alpha ** 2 * prob.sigma2 + prob.P * np.sum((alpha * h - a) ** 2)))


def n_effec_complex(prob: CfProblem) -> EffectiveNoise:
    h = np.asarray(prob.h, dtype=complex)
    a = np.asarray(prob.a, dtype=complex)
    alpha = complex(prob.alpha)
    return EffectiveNoise(float(abs(alpha) ** 2 * prob.sigma2 + prob.P * np.sum(np.abs(alpha * h - a) ** 2)))


def _mismatch(norms, inner_sq, h_norm_sq, P: float, sigma2: float):
    # ||a||^2 - P |h^H a|^2 / (sigma2 + P ||h||^2), strictly positive for sigma2 > 0
    return norms - P * inner_sq / (sigma2 + P * h_norm_sq)


def comp_rate_real(h, a, P: float, sigma2: float) -> float:
    """Computation rate of a real channel, bits per real dimension, clamped at 0."""
    a = _check_coeffs(a).astype(float)
    h = np.asarray(h, dtype=float)
    value = _mismatch(np.dot(a, a), np.dot(h, a) ** 2, np.dot(h, h), P, sigma2)
    return max(0.0, 0.5 * math.log2(1.0 / value))


def comp_rate_complex(h, a, P: float, sigma2: float) -> float:
    """Computation rate of a complex channel with total noise variance sigma2."""
    a = _check_coeffs(a).astype(complex)
    h = np.asarray(h, dtype=complex)
    value = _mismatch(np.vdot(a, a).real, abs(np.vdot(h, a)) ** 2, np.vdot(h, h).real, P, sigma2)
    return max(0.0, math.log2(1.0 / value))


def comp_rate_at_alpha(h, a, P: float, sigma2: float, alpha: float) -> float:
    """Rate before substituting the MMSE alpha: 1/2 log2(P / N_effec)."""
    noise = n_effec(CfProblem(tuple(h), tuple(a), P, sigma2, alpha)).value
    return max(0.0, 0.5 * math.log2(P / noise))


def interference_as_noise_rate(h, m: int, P: float, sigma2: float, complex_channel: bool = False) -> float:
    """Decode message m (1-based) alone, everything else treated as noise."""
    gains = np.abs(np.asarray(h)) ** 2
    if not 1 <= m <= len(gains):
        raise LatticeError(f"message index {m} out of range 1..{len(gains)}")
    others = np.sum(gains) - gains[m - 1]
    rate = math.log2(1.0 + P * gains[m - 1] / (sigma2 + P * others))
    return rate if complex_channel else 0.5 * rate


def best_single_message_rate(h, P: float, sigma2: float, complex_channel: bool = False) -> Tuple[int, float]:
    rates = [interference_as_noise_rate(h, m, P, sigma2, complex_channel) for m in range(1, len(h) + 1)]
    best = int(np.argmax(rates))
    return best + 1, rates[best]


def _canonical(candidates: np.ndarray) -> np.ndarray:
    """Keep one representative per unit multiple: first nonzero entry in re > 0, im >= 0."""
    first = np.argmax(candidates != 0, axis=1)
    lead = candidates[np.arange(len(candidates)), first]
    return (lead.real > 0) & (lead.imag >= 0)


def best_coeffs(h, P: float, sigma2: float, search_radius: int = 2, complex_channel: bool = False):
    """
    Exhaustive search for the integer (or Gaussian-integer) vector with the
    highest computation rate.

    Args:
        h: channel gains
        P: power per user
        sigma2: noise variance
        search_radius: bound on every coefficient part
        complex_channel: search Gaussian integers and use the complex rate

    Returns:
        (a, rate), with a a tuple of ints or complex numbers. Sign (and, for
        Gaussian integers, unit) ambiguity is resolved by requiring the first
        nonzero coefficient to lie in the quadrant re > 0, im >= 0; remaining
        ties go to the lexicographically first vector.
    """
    if search_radius < 1:
        raise LatticeError(f"search radius must be at least 1, got {search_radius}")
    L = len(h)
    span = range(-search_radius, search_radius + 1)
    if complex_channel:
        parts = np.array(list(itertools.product(span, repeat=2 * L)), dtype=float)
        candidates = parts[:, 0::2] + 1j * parts[:, 1::2]
    else:
        candidates = np.array(list(itertools.product(span, repeat=L)), dtype=float).astype(complex)
    candidates = candidates[np.any(candidates != 0, axis=1)]
    candidates = candidates[_canonical(candidates)]

    hv = np.asarray(h, dtype=complex)
    norms = np.sum(np.abs(candidates) ** 2, axis=1)
    inner_sq = np.abs(candidates @ np.conj(hv)) ** 2
    value = _mismatch(norms, inner_sq, np.sum(np.abs(hv) ** 2), P, sigma2)
    rates = np.maximum(0.0, np.log2(1.0 / value))
    if not complex_channel:
        rates = 0.5 * rates
    top = float(np.max(rates))
    best = int(np.flatnonzero(rates >= top - 1e-12)[0])
    if complex_channel:
        a = tuple(complex(int(v.real), int(v.imag)) for v in candidates[best])
    else:
        a = tuple(int(v.real) for v in candidates[best])
    return a, float(rates[best])


# ----------------------------------------------------------------------------
# Receivers
# ----------------------------------------------------------------------------


def cf_decode(code: NestedLatticeCode, y, h, a, P: float, sigma2: float) -> Packet:
    """Decode the F_q combination sum a_l w_l from a real observation y."""
    a = _check_coeffs(a)
    alpha = alpha_mmse_cf(h, a, P, sigma2)
    point = lattice_decode_point(code, y, alpha, int(np.sum(a)))
    return phi_inv(code, point)


def split_complex_encode(w: Packet) -> Tuple[Packet, Packet]:
    """Split a length-k message into real and imaginary halves."""
    if w.k % 2:
        raise LatticeError(f"message length {w.k} is odd, cannot split")
    half = w.k // 2
    return Packet(FieldVector(w.payload.entries[:half], w.q)), Packet(FieldVector(w.payload.entries[half:], w.q))


def split_complex_decode(u_re: Packet, u_im: Packet) -> Packet:
    if u_re.q != u_im.q:
        raise FieldError(f"modulus mismatch: {u_re.q} vs {u_im.q}")
    return Packet(FieldVector(np.concatenate([u_re.payload.entries, u_im.payload.entries]), u_re.q))


def complex_combination(halves: Sequence[Tuple[Packet, Packet]], a: Sequence[complex], q: int) -> Tuple[Packet, Packet]:
    """
    The two functions a Gaussian-integer receiver recovers:
    u_re = sum(a_re w_re - a_im w_im), u_im = sum(a_im w_re + a_re w_im), mod q.
    """
    if len(halves) != len(a):
        raise LatticeError(f"{len(a)} coefficients for {len(halves)} users")
    u_re = 0
    u_im = 0
    for (w_re, w_im), coeff in zip(halves, a):
        a_re, a_im = int(round(complex(coeff).real)), int(round(complex(coeff).imag))
        u_re = u_re + a_re * w_re.payload.entries - a_im * w_im.payload.entries
        u_im = u_im + a_im * w_re.payload.entries + a_re * w_im.payload.entries
    return Packet(FieldVector.reduce(u_re, q)), Packet(FieldVector.reduce(u_im, q))


def complex_shift_weights(a: Sequence[complex]) -> Tuple[int, int]:
    re = sum(int(round(complex(c).real)) for c in a)
    im = sum(int(round(complex(c).imag)) for c in a)
    return re - im, im + re


def cf_decode_complex(code: NestedLatticeCode, y, h, a, P: float, sigma2: float) -> Tuple[Packet, Packet]:
    """
    Complex compute-and-forward receiver. `code` is the per-dimension code
    (k/2 message symbols); returns (u_re, u_im).
    """
    a = _check_coeffs(np.asarray(a, dtype=complex))
    alpha = alpha_mmse_complex(h, a, P, sigma2)
    scaled = alpha * np.asarray(y, dtype=complex)
    weight_re, weight_im = complex_shift_weights(a)
    u_re = phi_inv(code, lattice_decode_point(code, scaled.real, 1.0, weight_re))
    u_im = phi_inv(code, lattice_decode_point(code, scaled.imag, 1.0, weight_im))
    return u_re, u_im


def _real_image(A, q: int) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    re = np.rint(A.real).astype(np.int64)
    im = np.rint(A.imag).astype(np.int64)
    return np.mod(np.block([[re, -im], [im, re]]), q)


def full_rank_complex(A, q: int) -> bool:
    """Rank test of a Gaussian-integer matrix through its real image over F_q."""
    image = FieldMatrix(_real_image(A, q), q)
    return rank(image) == image.cols


def recover_from_complex_equations(A, U_re: Sequence[Packet], U_im: Sequence[Packet], q: int) -> List[Packet]:
    """Solve the embedded real system for every user's full message."""
    image = FieldMatrix(_real_image(A, q), q)
    U = FieldMatrix.from_rows([p.payload for p in list(U_re) + list(U_im)])
    W = solve(image, U)
    L = image.cols // 2
    return [split_complex_decode(Packet(W.row(i)), Packet(W.row(L + i))) for i in range(L)]


# ----------------------------------------------------------------------------
# Monte Carlo
# ----------------------------------------------------------------------------


def cf_trial(code: NestedLatticeCode, h, a, sigma2: float, rng: np.random.Generator) -> bool:
    """One real compute-and-forward transmission; True if the combination was decoded wrongly."""
    q = code.q
    messages = [Packet(FieldVector(rng.integers(0, q, size=code.k), q)) for _ in h]
    y = sum(g * phi_map(code, w).coords for g, w in zip(h, messages))
    y = y + rng.normal(0.0, math.sqrt(sigma2), size=code.n)
    expected = FieldVector.reduce(sum(int(c) * w.payload.entries for c, w in zip(a, messages)), q)
    decoded = cf_decode(code, y, h, a, code.P, sigma2)
    return decoded.payload != expected


def cf_trial_complex(code: NestedLatticeCode, h, a, sigma2: float, rng: np.random.Generator) -> bool:
    """
    One complex transmission. Messages have 2k symbols, one half per real
    dimension, so the power per complex symbol is 2 * code.P; sigma2 is the
    total complex noise variance.
    """
    q = code.q
    messages = [Packet(FieldVector(rng.integers(0, q, size=2 * code.k), q)) for _ in h]
    halves = [split_complex_encode(w) for w in messages]
    x = [phi_map(code, w_re).coords + 1j * phi_map(code, w_im).coords for w_re, w_im in halves]
    y = sum(complex(g) * xl for g, xl in zip(h, x))
    scale = math.sqrt(sigma2 / 2.0)
    y = y + rng.normal(0.0, scale, size=code.n) + 1j * rng.normal(0.0, scale, size=code.n)
    expected = complex_combination(halves, a, q)
    decoded = cf_decode_complex(code, y, h, a, 2.0 * code.P, sigma2)
    return decoded != expected


def cf_error_rate(
    code: NestedLatticeCode,
    h,
    a,
    sigma2: float,
    trials: int,
    seed: int,
    *prefix: int,
    complex_channel: bool = False,
) -> Tuple[float, int]:
    """Fraction of wrongly decoded combinations over seeded trials; also returns the error count."""
    trial = cf_trial_complex if complex_channel else cf_trial
    errors = sum(trial(code, h, a, sigma2, trial_rng(seed, t, *prefix)) for t in range(trials))
    return errors / trials, errors
