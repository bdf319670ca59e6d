"""
Gaussian channels and the two-way relay strategies.

Two users exchange messages through a relay with no direct link. Routing
needs four slots, network coding three, and the physical-layer schemes
(analog, lattice compute-and-forward, BPSK sum detection) two.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special, stats

from .galois_core import FieldVector
from .lattice_cf import (
    NestedLatticeCode,
    alpha_mmse_cf,
    best_coeffs,
    best_single_message_rate,
    cf_decode,
    lattice_decode_point,
    phi_inv,
    phi_map,
)
from .modq_phy import ChannelError, CompCode, compcode_decode
from .netcod_core import Packet

POWER_TOLERANCE = 1e-9
Z_95 = 1.96


class PowerConstraintError(ChannelError):
    """A transmitted block exceeds its power limit."""


class StrategyId(Enum):
    ROUTING = "routing"
    NETCOD = "netcod"
    ANALOG = "analog"
    LATTICE = "lattice"
    BPSK = "bpsk"
    UPPER = "upper"

    @property
    def label(self) -> str:
        return self.value


SLOTS = {
    StrategyId.ROUTING: 4,
    StrategyId.NETCOD: 3,
    StrategyId.ANALOG: 2,
    StrategyId.LATTICE: 2,
    StrategyId.BPSK: 2,
}


@dataclass(frozen=True)
class AwgnSpec:
    """
    Additive white Gaussian noise channel.

    Args:
        P: power per user
        sigma2: noise variance (real channel), total variance (complex channel)
        complex: circularly symmetric complex channel when True
        h: channel gains, all ones when omitted
        power_limit: per-block bound checked on transmit, defaults to P
    """

    P: float
    sigma2: float
    complex: bool = False
    h: Optional[Tuple] = None
    power_limit: Optional[float] = None

    def __post_init__(self):
        if self.P <= 0 or self.sigma2 <= 0:
            raise ChannelError(f"P and sigma2 must be positive, got P={self.P}, sigma2={self.sigma2}")
        if self.h is not None:
            object.__setattr__(self, "h", tuple(self.h))

    @property
    def limit(self) -> float:
        return self.P if self.power_limit is None else self.power_limit

    @property
    def snr(self) -> float:
        return self.P / self.sigma2

    def gains(self, users: int) -> np.ndarray:
        if self.h is None:
            return np.ones(users)
        if len(self.h) != users:
            raise ChannelError(f"{len(self.h)} gains for {users} transmitters")
        return np.asarray(self.h, dtype=complex if self.complex else float)


@dataclass(frozen=True)
class RatePoint:
    strategy: Union[StrategyId, str]
    snr_db: float
    rate: float
    mc_halfwidth: Optional[float] = None

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"rate must be non-negative, got {self.rate}")

    @property
    def label(self) -> str:
        return self.strategy.label if isinstance(self.strategy, StrategyId) else str(self.strategy)


@dataclass(frozen=True)
class ExchangeSummary:
    strategy: StrategyId
    trials: int
    errors: int
    error_rate: float
    throughput: float
    halfwidth: float


def awgn_transmit(xs: Sequence, spec: AwgnSpec, rng: np.random.Generator) -> np.ndarray:
    """y = sum h_l x_l + z."""
    if not len(xs):
        raise ChannelError("no transmitters")
    blocks = [np.asarray(x, dtype=complex if spec.complex else float) for x in xs]
    n = blocks[0].shape[0]
    for i, x in enumerate(blocks, start=1):
        if x.shape != (n,):
            raise ChannelError(f"transmitter {i} sends shape {x.shape}, expected ({n},)")
        power = float(np.mean(np.abs(x) ** 2))
        if power > spec.limit + POWER_TOLERANCE:
            raise PowerConstraintError(f"transmitter {i} power {power:.6g} exceeds {spec.limit:.6g}")
    h = spec.gains(len(blocks))
    y = sum(g * x for g, x in zip(h, blocks))
    if spec.complex:
        scale = math.sqrt(spec.sigma2 / 2.0)
        z = rng.normal(0.0, scale, size=n) + 1j * rng.normal(0.0, scale, size=n)
    else:
        z = rng.normal(0.0, math.sqrt(spec.sigma2), size=n)
    return y + z


def q_function(x):
    """Gaussian tail probability Q(x) = P(N(0,1) > x)."""
    result = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(result) if np.ndim(result) == 0 else result


def capacity_awgn(P: float, sigma2: float) -> float:
    return math.log2(1.0 + P / sigma2)


# ----------------------------------------------------------------------------
# BPSK sum detection (unit amplitude per user, real noise variance sigma2)
# ----------------------------------------------------------------------------


def bpsk_threshold(sigma2: float) -> float:
    return 1.0 + sigma2 * math.log(2.0) / 2.0


def bpsk_map_decide(y, sigma2: float):
    """1 (bits differ) iff |y| <= threshold."""
    decision = (np.abs(y) <= bpsk_threshold(sigma2)).astype(np.int64)
    return int(decision) if np.ndim(decision) == 0 else decision


def bpsk_density(y, b: int, sigma2: float, far_lobe: bool = False):
    """
    f(y | U=b). U=1 centers the sum at 0, U=0 at +2 or -2 with equal odds.

    The threshold rule keeps only the lobe nearest to y for U=0; pass
    far_lobe=True for the full two-lobe mixture.
    """
    sd = math.sqrt(sigma2)
    if b == 1:
        return stats.norm.pdf(y, 0.0, sd)
    near = 0.5 * stats.norm.pdf(np.abs(y), 2.0, sd)
    if not far_lobe:
        return near
    return near + 0.5 * stats.norm.pdf(np.abs(y), -2.0, sd)


def bpsk_sum_error_prob(sigma2: float) -> float:
    """P(U_hat != U) for equiprobable bits."""
    if sigma2 <= 0:
        raise ChannelError(f"sigma2 must be positive, got {sigma2}")
    t = bpsk_threshold(sigma2)
    sd = math.sqrt(sigma2)
    miss_one = 2.0 * q_function(t / sd)
    miss_zero = q_function((2.0 - t) / sd) - q_function((2.0 + t) / sd)
    return 0.5 * (miss_one + miss_zero)


def binary_entropy(p: float) -> float:
    return float(stats.entropy([p, 1.0 - p], base=2))


def bpsk_end_to_end_rate(P: float, sigma2: float) -> float:
    """
    Per-user rate of BPSK sum detection followed by end-to-end coding.

    Both real dimensions carry BPSK, so the multiple-access phase delivers
    2(1 - H2(p_e)) bits per use and the broadcast bit pipe log2(1 + P/sigma2);
    two equal slots halve the smaller of the two.
    """
    p_e = bpsk_sum_error_prob(sigma2 / P)
    mac = 2.0 * (1.0 - binary_entropy(p_e))
    broadcast = capacity_awgn(P, sigma2)
    return max(0.0, 0.5 * min(mac, broadcast))


# ----------------------------------------------------------------------------
# Analog network coding and rate curves
# ----------------------------------------------------------------------------


def analog_relay_scale(P: float, sigma2: float) -> float:
    return math.sqrt(P / (2.0 * P + sigma2))


def analog_snr(P: float, sigma2: float) -> float:
    """End-to-end SNR after the user removes its own signal."""
    return (P / sigma2) * (P / (3.0 * P + sigma2))


def rate_curve(strategy: Union[StrategyId, str], P: float, sigma2: float) -> float:
    """Analytic per-user rate in bits per channel use."""
    strategy = StrategyId(strategy)
    snr = P / sigma2
    if strategy is StrategyId.UPPER:
        return 0.5 * math.log2(1.0 + snr)
    if strategy is StrategyId.ANALOG:
        return 0.5 * math.log2(1.0 + analog_snr(P, sigma2))
    if strategy is StrategyId.ROUTING:
        return 0.25 * math.log2(1.0 + snr)
    if strategy is StrategyId.NETCOD:
        return math.log2(1.0 + snr) / 3.0
    if strategy is StrategyId.LATTICE:
        return max(0.0, 0.5 * math.log2(0.5 + snr))
    return bpsk_end_to_end_rate(P, sigma2)


def slot_count(strategy: Union[StrategyId, str]) -> int:
    strategy = StrategyId(strategy)
    if strategy not in SLOTS:
        raise ValueError(f"{strategy.label} has no slot schedule")
    return SLOTS[strategy]


def slot_prefactor(strategy: Union[StrategyId, str]) -> float:
    return 1.0 / slot_count(strategy)


def snr_from_db(snr_db: float, sigma2: float = 1.0) -> float:
    """Power P giving P/sigma2 = 10^(snr_db/10)."""
    return sigma2 * 10.0 ** (snr_db / 10.0)


def twoway_curves(
    snr_db_grid: Sequence[float], strategies: Optional[Sequence[StrategyId]] = None, sigma2: float = 1.0
) -> List[RatePoint]:
    strategies = list(strategies) if strategies else list(StrategyId)
    table = []
    for strategy in strategies:
        for snr_db in snr_db_grid:
            table.append(RatePoint(strategy, float(snr_db), rate_curve(strategy, snr_from_db(snr_db, sigma2), sigma2)))
    return table


def limiting_slope(strategy: Union[StrategyId, str], snr: float, factor: float = 2.0) -> float:
    """Finite-difference slope of the rate curve against log2(1 + snr)."""
    lo, hi = snr, snr * factor
    rise = rate_curve(strategy, hi, 1.0) - rate_curve(strategy, lo, 1.0)
    run = math.log2(1.0 + hi) - math.log2(1.0 + lo)
    return rise / run


def monte_carlo_halfwidth(p: float, trials: int) -> float:
    """95% normal-approximation halfwidth of an estimated probability."""
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    return Z_95 * math.sqrt(max(p * (1.0 - p), 0.0) / trials)


# ----------------------------------------------------------------------------
# End-to-end exchange simulation
# ----------------------------------------------------------------------------


def _random_packet(code: NestedLatticeCode, rng: np.random.Generator) -> Packet:
    return Packet(FieldVector(rng.integers(0, code.q, size=code.k), code.q))


def _hop(code: NestedLatticeCode, w: Packet, gain: float, spec: AwgnSpec, rng: np.random.Generator) -> Packet:
    """Point-to-point lattice transmission over one link."""
    y = awgn_transmit([phi_map(code, w).coords], replace(spec, h=(gain,)), rng)
    alpha = alpha_mmse_cf([gain], [1], spec.P, spec.sigma2)
    return phi_inv(code, lattice_decode_point(code, y, alpha))


def _subtract(u: Packet, own: Packet) -> Packet:
    return Packet(FieldVector.reduce(u.payload.entries - own.payload.entries, u.q))


def _exchange_once(
    strategy: StrategyId, spec: AwgnSpec, code: NestedLatticeCode, rng: np.random.Generator
) -> Tuple[Packet, Packet, Packet, Packet]:
    """Run one message exchange; returns (w1, w2, w1 as seen by user 2, w2 as seen by user 1)."""
    h1, h2 = spec.gains(2)
    w1, w2 = _random_packet(code, rng), _random_packet(code, rng)

    if strategy is StrategyId.ROUTING:
        at_relay_1 = _hop(code, w1, h1, spec, rng)
        at_user_2 = _hop(code, at_relay_1, h2, spec, rng)
        at_relay_2 = _hop(code, w2, h2, spec, rng)
        at_user_1 = _hop(code, at_relay_2, h1, spec, rng)
        return w1, w2, at_user_2, at_user_1

    if strategy is StrategyId.NETCOD:
        at_relay_1 = _hop(code, w1, h1, spec, rng)
        at_relay_2 = _hop(code, w2, h2, spec, rng)
        u = Packet(at_relay_1.payload + at_relay_2.payload)
        u_1 = _hop(code, u, h1, spec, rng)
        u_2 = _hop(code, u, h2, spec, rng)
        return w1, w2, _subtract(u_2, w2), _subtract(u_1, w1)

    if strategy is StrategyId.LATTICE:
        x1, x2 = phi_map(code, w1).coords, phi_map(code, w2).coords
        y = awgn_transmit([x1, x2], spec, rng)
        u = cf_decode(code, y, (h1, h2), (1, 1), spec.P, spec.sigma2)
        u_1 = _hop(code, u, h1, spec, rng)
        u_2 = _hop(code, u, h2, spec, rng)
        return w1, w2, _subtract(u_2, w2), _subtract(u_1, w1)

    if strategy is StrategyId.ANALOG:
        x1, x2 = phi_map(code, w1).coords, phi_map(code, w2).coords
        y_relay = awgn_transmit([x1, x2], spec, rng)
        g = analog_relay_scale(spec.P, spec.sigma2)
        relay_spec = replace(spec, power_limit=math.inf, h=None)
        y_1 = awgn_transmit([h1 * g * y_relay], relay_spec, rng)
        y_2 = awgn_transmit([h2 * g * y_relay], relay_spec, rng)
        estimates = []
        for y_user, own, own_gain, gain_user, other_gain in ((y_1, x1, h1, h1, h2), (y_2, x2, h2, h2, h1)):
            scale = gain_user * g
            clean = (y_user - scale * own_gain * own) / (scale * other_gain)
            sigma_eff = (spec.sigma2 * gain_user ** 2 + spec.sigma2 / g ** 2) / (gain_user * other_gain) ** 2
            alpha = spec.P / (spec.P + sigma_eff)
            estimates.append(phi_inv(code, lattice_decode_point(code, clean, alpha)))
        return w1, w2, estimates[1], estimates[0]

    if strategy is StrategyId.BPSK:
        if code.q != 2:
            raise ChannelError(f"BPSK exchange needs q=2, code has q={code.q}")
        amplitude = math.sqrt(spec.P)
        c1 = (code.G @ w1.payload).entries
        c2 = (code.G @ w2.payload).entries
        y = awgn_transmit([amplitude * (1 - 2 * c1), amplitude * (1 - 2 * c2)], spec, rng)
        hard = bpsk_map_decide(y / amplitude, spec.sigma2 / spec.P)
        u = compcode_decode(CompCode(code.G), FieldVector(hard, 2))
        return w1, w2, _subtract(u, w2), _subtract(u, w1)

    raise ValueError(f"{strategy.label} is not a simulated strategy")


def simulate_exchange(
    strategy: Union[StrategyId, str],
    spec: AwgnSpec,
    code: NestedLatticeCode,
    trials: int,
    rng: np.random.Generator,
) -> ExchangeSummary:
    """
    Monte Carlo two-way exchange over a real channel.

    Args:
        strategy: any strategy with a slot schedule
        spec: channel; P must match the code's average power
        code: lattice code used on every hop (its generator doubles as the
            binary code for BPSK)
        trials: number of message exchanges
        rng: random stream

    Returns:
        ExchangeSummary with the per-message error rate over 2 * trials
        messages and the achieved throughput in bits per channel use
    """
    strategy = StrategyId(strategy)
    slot_count(strategy)
    if spec.complex:
        raise ChannelError("exchange simulation runs on real channels")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if not math.isclose(code.P, spec.P, rel_tol=1e-9):
        raise ChannelError(f"code power {code.P} differs from channel power {spec.P}")
    spec = replace(spec, power_limit=max(spec.limit, code.peak_power))

    errors = 0
    for _ in range(trials):
        w1, w2, w1_hat, w2_hat = _exchange_once(strategy, spec, code, rng)
        errors += int(w1_hat != w1) + int(w2_hat != w2)
    messages = 2 * trials
    error_rate = errors / messages
    return ExchangeSummary(
        strategy=strategy,
        trials=trials,
        errors=errors,
        error_rate=error_rate,
        throughput=slot_prefactor(strategy) * code.rate,
        halfwidth=monte_carlo_halfwidth(error_rate, messages),
    )


# ----------------------------------------------------------------------------
# Decode-an-equation sweep
# ----------------------------------------------------------------------------


def geteqm3_sweep(
    snr_db_grid: Sequence[float],
    trials: int,
    rng: np.random.Generator,
    search_radius: int = 2,
    users: int = 3,
    sigma2: float = 1.0,
) -> List[RatePoint]:
    """
    Average computation rate over Gaussian fading for the best equation and
    for the best single message with interference treated as noise. The same
    fading draws are reused at every SNR.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    fades = rng.normal(size=(trials, users))
    table = []
    for snr_db in snr_db_grid:
        P = snr_from_db(snr_db, sigma2)
        equation = np.array([best_coeffs(h, P, sigma2, search_radius)[1] for h in fades])
        single = np.array([best_single_message_rate(h, P, sigma2)[1] for h in fades])
        for label, rates in (("decode_equation", equation), ("interference_as_noise", single)):
            halfwidth = Z_95 * float(np.std(rates)) / math.sqrt(trials)
            table.append(RatePoint(label, float(snr_db), float(np.mean(rates)), halfwidth))
    return table
