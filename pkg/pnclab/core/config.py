import math
import os
from configparser import ConfigParser
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .galois_core import FieldError, check_modulus

EXPERIMENTS = ("twoway_curves", "twoway_sim", "geteqm3", "modq_demo", "cf_single")
STRATEGY_NAMES = ("routing", "netcod", "analog", "lattice", "bpsk", "upper")
MAX_CODEBOOK = 2 ** 16
MAX_BLOCKLENGTH = 64
MAX_USERS = 4
GETEQM3_USERS = 3


def load_pncrc_config(base_dir: str):
    """Load tool settings from .pncrc files."""
    config = ConfigParser()

    # 우선순위: 현재 디렉토리 > 홈 디렉토리
    possible_paths = [
        os.path.join(base_dir, ".pncrc"),
        os.path.expanduser("~/.pncrc")
    ]

    for path in possible_paths:
        if os.path.exists(path):
            config.read(path)
            print(f"⚙️  Loaded settings from {path}")
            return config

    return config  # 빈 ConfigParser


class LabConfig:
    """PNC lab settings manager."""

    def __init__(self, base_dir: str):
        self.base_dir = base_dir
        self.config = load_pncrc_config(base_dir)

    @property
    def workers(self) -> int:
        return self.config.getint("general", "workers", fallback=1)

    @property
    def output_dir(self) -> str:
        return self.config.get("general", "output_dir", fallback="results")

    @property
    def verify_tolerance(self) -> float:
        return self.config.getfloat("general", "verify_tolerance", fallback=1e-9)

    @property
    def default_seed(self) -> int:
        return self.config.getint("general", "default_seed", fallback=2010)


class ConfigError(ValueError):
    """Invalid experiment configuration, located by line and key when known."""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"'{key}'")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    snr_start: float = -5.0
    snr_stop: float = 25.0
    snr_step: float = 5.0
    q: int = 5
    k: int = 2
    n: int = 8
    L: int = 2
    trials: int = 1000
    seed: int = 2010
    search_radius: int = 2
    output: str = ""
    workers: int = 1
    h: Optional[Tuple[float, ...]] = None
    complex: bool = False
    strategies: Tuple[str, ...] = STRATEGY_NAMES
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    def snr_grid(self) -> List[float]:
        """Inclusive grid snr_start, snr_start + step, ..., <= snr_stop."""
        count = int(math.floor((self.snr_stop - self.snr_start) / self.snr_step + 1e-9)) + 1
        return [round(self.snr_start + i * self.snr_step, 10) for i in range(count)]

    def describe(self) -> List[str]:
        return [
            f"experiment = {self.experiment}",
            f"snr_db = {self.snr_start} .. {self.snr_stop} step {self.snr_step}",
            f"q = {self.q}, k = {self.k}, n = {self.n}, L = {self.L}",
            f"trials = {self.trials}, seed = {self.seed}, search_radius = {self.search_radius}",
            f"h = {self.h}, complex = {self.complex}",
            f"strategies = {','.join(self.strategies)}",
            f"output = {self.output}",
        ]


def _to_int(raw: str):
    return int(raw)


def _to_float(raw: str):
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError(f"{raw!r} is not finite")
    return value


def _to_bool(raw: str):
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{raw!r} is not a boolean")


def _to_floats(raw: str):
    return tuple(_to_float(part.strip()) for part in raw.split(",") if part.strip())


def _to_names(raw: str):
    return tuple(part.strip().lower() for part in raw.split(",") if part.strip())


CONVERTERS = {
    "experiment": str,
    "snr_start": _to_float,
    "snr_stop": _to_float,
    "snr_step": _to_float,
    "q": _to_int,
    "k": _to_int,
    "n": _to_int,
    "L": _to_int,
    "trials": _to_int,
    "seed": _to_int,
    "search_radius": _to_int,
    "output": str,
    "workers": _to_int,
    "h": _to_floats,
    "complex": _to_bool,
    "strategies": _to_names,
}


def _validate(values: Dict[str, object], lines: Dict[str, int]) -> None:
    def fail(key: str, message: str):
        raise ConfigError(message, lines.get(key), key)

    if values["experiment"] not in EXPERIMENTS:
        fail("experiment", f"unknown experiment {values['experiment']!r}, expected one of {', '.join(EXPERIMENTS)}")
    try:
        check_modulus(values["q"])
    except FieldError as e:
        fail("q", str(e))
    for key, low in (("k", 1), ("n", 1), ("L", 1), ("trials", 1), ("search_radius", 1), ("workers", 1), ("seed", 0)):
        if values[key] < low:
            fail(key, f"must be at least {low}, got {values[key]}")
    if values["n"] > MAX_BLOCKLENGTH:
        fail("n", f"must be at most {MAX_BLOCKLENGTH}, got {values['n']}")
    if values["L"] > MAX_USERS:
        fail("L", f"must be at most {MAX_USERS}, got {values['L']}")
    if values["k"] > values["n"]:
        fail("k", f"k={values['k']} exceeds n={values['n']}")
    if values["q"] ** values["k"] > MAX_CODEBOOK:
        fail("k", f"codebook q^k = {values['q']}^{values['k']} exceeds {MAX_CODEBOOK}")
    if values["experiment"] == "geteqm3" and values["L"] != GETEQM3_USERS:
        fail("L", f"geteqm3 sweeps {GETEQM3_USERS} users, got L={values['L']}")
    if values["snr_step"] <= 0:
        fail("snr_step", f"must be positive, got {values['snr_step']}")
    if values["snr_stop"] < values["snr_start"]:
        fail("snr_stop", f"{values['snr_stop']} is below snr_start {values['snr_start']}")
    unknown = [s for s in values["strategies"] if s not in STRATEGY_NAMES]
    if unknown or not values["strategies"]:
        fail("strategies", f"unknown or empty strategy list {','.join(unknown)!r}")
    h = values["h"]
    if h is not None and (len(h) != values["L"] or not any(h)):
        fail("h", f"need {values['L']} gains, not all zero")
    if values["experiment"] == "cf_single" and values["complex"] and values["k"] % 2:
        fail("k", "complex cf_single splits messages in half, k must be even")


def parse_config(
    text: str, default_seed: int = 2010, default_workers: int = 1, output_dir: str = "results"
) -> ExperimentConfig:
    """
    Parse a `key = value` experiment file.

    Args:
        text: file contents; blank lines and `#` comments are ignored
        default_seed: seed used when the file has none
        default_workers: worker count used when the file has none
        output_dir: directory of the default output path

    Returns:
        ExperimentConfig with defaults filled in. A repeated key keeps its
        last value and adds a warning.
    """
    values: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    warnings: List[str] = []

    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", number)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in CONVERTERS:
            raise ConfigError("unknown key", number, key)
        try:
            value = CONVERTERS[key](raw)
        except ValueError as e:
            raise ConfigError(f"bad value {raw!r} ({e})", number, key)
        if key in values:
            warnings.append(f"line {number}: duplicate key '{key}', using the last value")
        values[key] = value
        lines[key] = number

    if "experiment" not in values:
        raise ConfigError("missing required key", None, "experiment")

    merged = {
        name: getattr(ExperimentConfig, name)
        for name in CONVERTERS
        if name not in ("experiment", "output", "h")
    }
    merged.update({"seed": default_seed, "workers": default_workers, "h": None})
    if values["experiment"] == "geteqm3":
        merged["L"] = GETEQM3_USERS
    merged.update(values)
    if not merged.get("output"):
        merged["output"] = os.path.join(output_dir, f"{merged['experiment']}.csv")

    _validate(merged, lines)
    return ExperimentConfig(warnings=tuple(warnings), **merged)


def load_experiment(path: str, lab: Optional[LabConfig] = None) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    if lab is None:
        return parse_config(text)
    return parse_config(text, lab.default_seed, lab.workers, lab.output_dir)
