"""Experiment configuration: a flat ``key = value`` file plus command-line overrides.

Every key has a default, so an empty file is a valid configuration for a
synthetic linear experiment.  Blank lines and lines starting with ``#`` are
ignored.  Optional numeric keys accept ``none``.
"""

from __future__ import annotations

import argparse
import dataclasses
import enum
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from .errors import ConfigError, DuplicateKey, InfeasibleConfig, MissingRequired, UnknownKey
from .subproblems import SamplingMode


class Kind(str, enum.Enum):
    SYNTH_LINEAR = "synth_linear"
    SYNTH_LOGISTIC = "synth_logistic"
    SYNTH_TREE = "synth_tree"
    REAL_CSV = "real_csv"


class Method(str, enum.Enum):
    BACKBONE = "backbone"
    SIS_ENET = "sis_enet"
    EXACT_SR = "exact_sr"
    CART = "cart"
    OCT_LOCAL_SEARCH = "oct_local_search"
    ORACLE = "oracle"


TREE_METHODS = (Method.CART, Method.OCT_LOCAL_SEARCH)


def parse_seeds(text: str) -> Tuple[int, ...]:
    """Non-negative seeds: ``"0-9"``, ``"1,4,7"`` or a mix such as ``"0-2,10"``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = (int(s) for s in part.split("-", 1))
            if hi < lo:
                raise ConfigError(f"empty seed range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in str(text).split(",") if v.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    # data
    kind: Kind = Kind.SYNTH_LINEAR
    n: int = 500
    p: int = 2000
    k: int = 10
    rho: float = 0.0
    snr: float = 6.0
    depth: int = 3
    r: int = 1
    f: float = 0.5
    n_classes: int = 2
    n_test: int = 2000
    csv_path: Optional[str] = None
    response_column: str = "-1"
    csv_header: bool = False
    csv_task: str = "regression"
    test_fraction: float = 0.3
    expand_copies: int = 0
    # method
    method: Method = Method.BACKBONE
    M: int = 10
    alpha: Optional[float] = None
    beta: float = 0.5
    B_max: int = 50
    k_max: int = 10
    sampling_mode: SamplingMode = SamplingMode.SCREENING
    early_stop: bool = False
    skip_small: bool = True
    subproblem_solver: str = "subgradient"
    sr_k: Optional[int] = None
    gamma: Optional[float] = None
    time_limit: float = 60.0
    enet_mus: Tuple[float, ...] = (0.2, 0.4, 0.6, 0.8, 1.0)
    enet_grid: int = 20
    tree_depth: int = 3
    sub_depth: Optional[int] = None
    min_bucket: int = 1
    complexity: float = 0.0
    restarts: int = 5
    tree_cv: bool = True
    nmin_grid: Tuple[int, ...] = (1, 10)
    complexity_grid: Tuple[float, ...] = (0.0, 0.002, 0.01)
    # run
    seeds: Tuple[int, ...] = tuple(range(10))
    name: str = "experiment"
    output: str = "results.csv"
    workers: Optional[int] = None

    def validate(self) -> "ExperimentConfig":
        """Check cross-key constraints; raises ``MissingRequired`` or ``InfeasibleConfig``."""
        missing = []
        if self.kind is Kind.REAL_CSV and not self.csv_path:
            missing.append("csv_path")
        if missing:
            raise MissingRequired(missing)
        if not self.seeds:
            raise InfeasibleConfig("seeds must not be empty")
        if self.kind is not Kind.REAL_CSV:
            if self.n < 2 or self.p < 1 or self.n_test < 2:
                raise InfeasibleConfig("n, p and n_test must be positive (n, n_test at least 2)")
            if self.kind is not Kind.SYNTH_TREE and not 1 <= self.k <= self.p:
                raise InfeasibleConfig("k must lie in [1, p]")
            if not -1.0 < self.rho < 1.0:
                raise InfeasibleConfig("rho must lie in (-1, 1)")
            if self.kind is not Kind.SYNTH_TREE and self.snr <= 0:
                raise InfeasibleConfig("snr must be positive")
        if self.kind is Kind.SYNTH_TREE:
            from .synth import TreeGenConfig

            TreeGenConfig(self.depth, self.k, self.r, self.f, self.n_classes)
        is_classification = self.kind in (Kind.SYNTH_LOGISTIC, Kind.SYNTH_TREE) or (
            self.kind is Kind.REAL_CSV and self.csv_task != "regression"
        )
        if self.method in TREE_METHODS and not is_classification:
            raise InfeasibleConfig(f"method {self.method.value} needs a classification task")
        if self.subproblem_solver not in ("subgradient", "elastic_net"):
            raise InfeasibleConfig("subproblem_solver must be subgradient or elastic_net")
        if not self.nmin_grid or not self.complexity_grid:
            raise InfeasibleConfig("tree grids must not be empty")
        if self.workers is not None and self.workers < 1:
            raise InfeasibleConfig("workers must be positive")
        if self.csv_task not in ("regression", "binary", "multiclass"):
            raise InfeasibleConfig("csv_task must be regression, binary or multiclass")
        return self

    @property
    def is_tree_kind(self) -> bool:
        return self.kind is Kind.SYNTH_TREE or self.method in TREE_METHODS

    def hash(self) -> str:
        """Short digest of everything that affects results (not seeds, output or workers)."""
        skip = {"seeds", "output", "workers"}
        text = "\n".join(f"{k}={_render(v)}" for k, v in sorted(as_dict(self).items()) if k not in skip)
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def _render(v) -> str:
    if isinstance(v, enum.Enum):
        return str(v.value)
    if isinstance(v, tuple):
        return ",".join(repr(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return "none" if v is None else str(v)


def as_dict(cfg: ExperimentConfig) -> Dict[str, object]:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


def dumps(cfg: ExperimentConfig) -> str:
    return "".join(f"{k} = {_render(v)}\n" for k, v in as_dict(cfg).items())


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_DEFAULTS = ExperimentConfig()


def _convert(key: str, text: str):
    default = getattr(_DEFAULTS, key)
    text = text.strip()
    ann = str(_FIELDS[key].type)
    try:
        if "Optional" in ann and text.lower() in ("none", ""):
            return None
        if key == "seeds":
            return parse_seeds(text)
        if key in ("enet_mus", "complexity_grid"):
            return _floats(text)
        if key == "nmin_grid":
            return tuple(int(v) for v in _floats(text))
        if isinstance(default, enum.Enum):
            return type(default)(text.lower())
        if isinstance(default, bool):
            if text.lower() in ("true", "yes", "1", "on"):
                return True
            if text.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if "int" in ann:
            return int(text)
        if "float" in ann:
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value {text!r} for key {key!r}") from exc


def read_config_lines(text: str) -> Dict[str, str]:
    """Raw ``key -> value`` strings of a config file body."""
    out: Dict[str, str] = {}
    seen_at: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise UnknownKey(key, lineno)
        if key in seen_at:
            raise DuplicateKey(key, lineno)
        seen_at[key] = lineno
        out[key] = value
    return out


def build_config(values: Dict[str, object]) -> ExperimentConfig:
    """Config from raw strings (or already typed values); validates the result."""
    typed = {}
    for key, value in values.items():
        if key not in _FIELDS:
            raise UnknownKey(key)
        typed[key] = _convert(key, value) if isinstance(value, str) else value
    return dataclasses.replace(_DEFAULTS, **typed).validate()


def parse_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    """Read a config file and apply ``overrides`` (command-line values win)."""
    values: Dict[str, object] = {}
    if path is not None:
        values.update(read_config_lines(Path(path).read_text()))
    values.update(overrides or {})
    return build_config(values)


def add_config_flags(parser: argparse.ArgumentParser):
    """One ``--key`` flag per config key; unset flags do not override the file."""
    for name in _FIELDS:
        parser.add_argument(f"--{name}", dest=f"cfg_{name}", default=None, metavar="VALUE")


def flag_overrides(args: argparse.Namespace) -> Dict[str, str]:
    return {name: getattr(args, f"cfg_{name}") for name in _FIELDS if getattr(args, f"cfg_{name}") is not None}
