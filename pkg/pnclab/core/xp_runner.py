"""
Experiment runner.

Every grid point is an independent task. Its random streams come from the
seed path (seed, point index, strategy index), so results are the same for
any worker count and are merged back in grid order.
"""

import math
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import ExperimentConfig
from .galois_core import FieldVector
from .lattice_cf import NestedLatticeCode, best_coeffs, best_single_message_rate, cf_error_rate
from .modq_phy import (
    CompCode,
    ModqChannelSpec,
    bpsk_noise_pmf,
    comp_rate_modq,
    compcode_decode,
    compcode_encode,
    modnoise_mac,
    random_compcode,
    separation_rate_modq,
    symmetric_noise_pmf,
)
from .netcod_core import Packet
from .results import ResultRow, read_rows, write_rows
from .rng import derive_rng
from .wireless_twoway import (
    SLOTS,
    AwgnSpec,
    StrategyId,
    geteqm3_sweep,
    monte_carlo_halfwidth,
    rate_curve,
    simulate_exchange,
    snr_from_db,
)

SIGMA2 = 1.0


def _row(config: ExperimentConfig, label: str, snr_db: float, rate: float, error_rate: float = 0.0, halfwidth: float = 0.0):
    return ResultRow(config.experiment, label, snr_db, rate, error_rate, halfwidth, config.seed)


# ----------------------------------------------------------------------------
# Experiments (one grid point each)
# ----------------------------------------------------------------------------


def twoway_curves_point(config: ExperimentConfig, index: int, snr_db: float) -> List[ResultRow]:
    P = snr_from_db(snr_db, SIGMA2)
    return [_row(config, name, snr_db, rate_curve(name, P, SIGMA2)) for name in config.strategies]


def simulated_strategies(config: ExperimentConfig) -> List[StrategyId]:
    """Strategies of the config that have a slot schedule and fit the field size."""
    chosen = []
    for name in config.strategies:
        strategy = StrategyId(name)
        if strategy not in SLOTS:
            continue
        if strategy is StrategyId.BPSK and config.q != 2:
            continue
        chosen.append(strategy)
    return chosen


def exchange_generator(config: ExperimentConfig):
    """The generator shared by every grid point of a twoway_sim run."""
    return NestedLatticeCode.random(config.q, config.n, config.k, 1.0, derive_rng(config.seed)).G


def twoway_sim_point(config: ExperimentConfig, index: int, snr_db: float) -> List[ResultRow]:
    P = snr_from_db(snr_db, SIGMA2)
    code = NestedLatticeCode(exchange_generator(config), P)
    spec = AwgnSpec(P, SIGMA2)
    rows = []
    for position, strategy in enumerate(simulated_strategies(config)):
        summary = simulate_exchange(strategy, spec, code, config.trials, derive_rng(config.seed, index, position))
        rows.append(_row(config, strategy.label, snr_db, summary.throughput, summary.error_rate, summary.halfwidth))
    return rows


def geteqm3_point(config: ExperimentConfig, index: int, snr_db: float) -> List[ResultRow]:
    # Same fading draws at every grid point.
    table = geteqm3_sweep([snr_db], config.trials, derive_rng(config.seed), config.search_radius, config.L, SIGMA2)
    return [_row(config, p.label, snr_db, p.rate, 0.0, p.mc_halfwidth) for p in table]


def modq_pmf(q: int, snr_db: float) -> Tuple[float, ...]:
    """Noise pmf induced by BPSK sum detection at this SNR."""
    sigma2 = 10.0 ** (-snr_db / 10.0)
    if q == 2:
        return bpsk_noise_pmf(sigma2)
    return symmetric_noise_pmf(q, bpsk_noise_pmf(sigma2)[1])


def modq_decode_error_rate(
    code: CompCode, spec: ModqChannelSpec, trials: int, rng: np.random.Generator
) -> float:
    """Monte Carlo error rate of decoding the modulo sum with a shared linear code."""
    errors = 0
    for _ in range(trials):
        packets = [Packet(FieldVector(rng.integers(0, code.q, size=code.k), code.q)) for _ in range(spec.L)]
        inputs = [compcode_encode(code, w, user) for user, w in enumerate(packets, start=1)]
        y = modnoise_mac(inputs, rng, spec)
        expected = FieldVector.reduce(sum(w.payload.entries for w in packets), code.q)
        errors += int(compcode_decode(code, y).payload != expected)
    return errors / trials


def modq_demo_point(config: ExperimentConfig, index: int, snr_db: float) -> List[ResultRow]:
    spec = ModqChannelSpec(config.q, config.L, modq_pmf(config.q, snr_db))
    code = random_compcode(config.q, config.n, config.k, derive_rng(config.seed), config.L)
    error_rate = modq_decode_error_rate(code, spec, config.trials, derive_rng(config.seed, index, 0))
    return [
        _row(config, "computation", snr_db, comp_rate_modq(spec), error_rate, monte_carlo_halfwidth(error_rate, config.trials)),
        _row(config, "separation", snr_db, separation_rate_modq(spec, config.L)),
    ]


def cf_channel(config: ExperimentConfig):
    """Channel gains from the config, or a Gaussian draw from the seed."""
    if config.h is not None:
        return np.asarray(config.h, dtype=complex if config.complex else float)
    rng = derive_rng(config.seed, 0)
    if config.complex:
        return (rng.normal(size=config.L) + 1j * rng.normal(size=config.L)) / math.sqrt(2.0)
    return rng.normal(size=config.L)


def coeff_label(a: Sequence) -> str:
    """'a=2;1' for integers, 'a=1+0j;0-1j' for Gaussian integers."""
    parts = []
    for c in a:
        if isinstance(c, complex):
            parts.append(f"{int(c.real)}{int(c.imag):+d}j")
        else:
            parts.append(str(int(c)))
    return "a=" + ";".join(parts)


def cf_single_point(config: ExperimentConfig, index: int, snr_db: float) -> List[ResultRow]:
    h = cf_channel(config)
    P = snr_from_db(snr_db, SIGMA2)
    a, rate = best_coeffs(h, P, SIGMA2, config.search_radius, config.complex)
    # Complex messages are split in half, one half per real dimension.
    k = config.k // 2 if config.complex else config.k
    per_dimension = P / 2.0 if config.complex else P
    G = NestedLatticeCode.random(config.q, config.n, k, 1.0, derive_rng(config.seed, 1)).G
    code = NestedLatticeCode(G, per_dimension)
    error_rate, _ = cf_error_rate(code, h, a, SIGMA2, config.trials, config.seed, index, complex_channel=config.complex)
    _, single = best_single_message_rate(h, P, SIGMA2, config.complex)
    return [
        _row(config, coeff_label(a), snr_db, rate, error_rate, monte_carlo_halfwidth(error_rate, config.trials)),
        _row(config, "interference_as_noise", snr_db, single),
    ]


EXPERIMENT_POINTS = {
    "twoway_curves": twoway_curves_point,
    "twoway_sim": twoway_sim_point,
    "geteqm3": geteqm3_point,
    "modq_demo": modq_demo_point,
    "cf_single": cf_single_point,
}


def _run_point(task: Tuple[ExperimentConfig, int, float]) -> List[ResultRow]:
    config, index, snr_db = task
    return EXPERIMENT_POINTS[config.experiment](config, index, snr_db)


# ----------------------------------------------------------------------------
# run / verify
# ----------------------------------------------------------------------------


def collect_rows(config: ExperimentConfig, workers: int = 1, verbose: bool = False) -> List[ResultRow]:
    """All rows of an experiment in grid order."""
    tasks = [(config, index, snr_db) for index, snr_db in enumerate(config.snr_grid())]
    if workers > 1 and len(tasks) > 1:
        with Pool(processes=min(workers, len(tasks))) as pool:
            per_point = pool.map(_run_point, tasks)
    else:
        per_point = []
        for task in tasks:
            per_point.append(_run_point(task))
            if verbose:
                print(f"   • {task[2]:g} dB: {len(per_point[-1])} rows")
    return [row for rows in per_point for row in rows]


def report_path(output: str) -> str:
    return f"{output}.report.txt"


def write_report(config: ExperimentConfig, rows: Sequence[ResultRow], notes: Sequence[str]) -> str:
    path = report_path(config.output)
    labels: Dict[str, int] = {}
    for row in rows:
        labels[row.label] = labels.get(row.label, 0) + 1
    lines = ["# PNC lab run report", ""]
    lines += config.describe()
    lines += ["", "## warnings"]
    lines += [f"- {w}" for w in notes] or ["- none"]
    lines += ["", "## summary", f"rows = {len(rows)}"]
    lines += [f"{label}: {count} rows" for label, count in labels.items()]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return path


def run(config: ExperimentConfig, workers: Optional[int] = None, verbose: bool = False) -> int:
    """
    Run an experiment and write its CSV and report.

    Args:
        config: parsed experiment
        workers: process count, defaults to config.workers
        verbose: print one line per grid point

    Returns:
        Exit code, 0 on success
    """
    workers = workers or config.workers
    grid = config.snr_grid()
    print(f"🧪 Running {config.experiment} over {len(grid)} SNR points (seed {config.seed}, {workers} worker(s))")

    notes = list(config.warnings)
    if config.experiment == "twoway_sim":
        skipped = [s for s in config.strategies if StrategyId(s) not in simulated_strategies(config)]
        if skipped:
            notes.append(f"not simulated for q={config.q}: {', '.join(skipped)}")
    for note in notes:
        print(f"⚠️  {note}")

    rows = collect_rows(config, workers, verbose)
    count = write_rows(config.output, rows)
    report = write_report(config, rows, notes)
    print(f"✅ Wrote {count} rows to {config.output}")
    print(f"📄 Report: {report}")
    return 0


def compare_rows(golden: Sequence[ResultRow], fresh: Sequence[ResultRow], tolerance: float) -> List[str]:
    """
    Differences between two result sets. Rows with zero halfwidth are
    analytic and must agree within `tolerance`; Monte Carlo rows may differ
    by the sum of the two halfwidths.
    """
    problems = []
    if len(golden) != len(fresh):
        problems.append(f"row count differs: {len(golden)} vs {len(fresh)}")
    for number, (g, f) in enumerate(zip(golden, fresh), start=2):
        if g.key != f.key:
            problems.append(f"row {number}: {g.key} vs {f.key}")
            continue
        slack = tolerance
        if g.halfwidth > 0 or f.halfwidth > 0:
            slack += g.halfwidth + f.halfwidth
        for column in ("rate", "error_rate"):
            diff = abs(getattr(g, column) - getattr(f, column))
            if diff > slack:
                problems.append(f"row {number} ({g.label} @ {g.snr_db:g} dB): {column} differs by {diff:.3g}")
    return problems


def verify(golden_path: str, fresh_path: str, tolerance: float = 1e-9) -> bool:
    """Compare a fresh CSV against a golden one."""
    golden = read_rows(golden_path)
    fresh = read_rows(fresh_path)
    problems = compare_rows(golden, fresh, tolerance)
    for problem in problems:
        print(f"❌ {problem}")
    if not problems:
        print(f"✅ {fresh_path} matches {golden_path} ({len(golden)} rows)")
    return not problems


__all__ = ["run", "verify", "collect_rows", "compare_rows", "report_path", "EXPERIMENT_POINTS"]
