"""Experiment configuration: a flat ``key=value`` file, list-valued keys repeated.

Example::

    seed = 7
    network = core-periphery, nodes=500
    network = erdos-renyi, nodes=500, seeds=5
    network = file:data/grqc.txt, directed=0
    beta = 0.1
    beta = 0.5
    variant = Bayesian
    variant = CO-DAG
    cascades = 10
    solver.max_iterations = 1

Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..cascade import SeedPolicy
from ..inference import VARIANTS, SolverConfig
from ..netgen import KINDS, GeneratorSpec

BASELINE = "Bayesian"
ALL_VARIANTS = (BASELINE,) + VARIANTS  # fixed order: variant index feeds the seed derivation
DEFAULT_SEEDS = {"hierarchical": 50}   # every other synthetic kind uses 5
FILE_SEED_FRACTION = 0.05


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkConfig:
    kind: str                 # a generator kind or "file"
    nodes: int = 500
    path: str | None = None
    directed: bool = True
    seeds: float | None = None  # count for synthetic kinds, fraction when < 1
    label: str | None = None

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        return Path(self.path).stem if self.kind == "file" else self.kind

    def seed_policy(self, window=(0.25, 0.75), retries: int = 100) -> SeedPolicy:
        if self.seeds is None:
            if self.kind == "file":
                return SeedPolicy("fraction", FILE_SEED_FRACTION, window, retries)
            return SeedPolicy("fixed-count", DEFAULT_SEEDS.get(self.kind, 5), window, retries)
        mode = "fraction" if self.seeds < 1 else "fixed-count"
        return SeedPolicy(mode, self.seeds, window, retries)

    def generator_spec(self, seed) -> GeneratorSpec:
        return GeneratorSpec(self.kind, self.nodes, seed=seed)


def parse_network(text: str) -> NetworkConfig:
    head, *opts = [t.strip() for t in text.split(",")]
    kw = {}
    if head.startswith("file:"):
        kw.update(kind="file", path=head[5:])
    elif head in KINDS:
        kw["kind"] = head
    else:
        raise ConfigError(f"unknown network {head!r}; use one of {KINDS} or file:<path>")
    for opt in opts:
        key, sep, val = opt.partition("=")
        if not sep:
            raise ConfigError(f"network option {opt!r} is not key=value")
        key = key.strip()
        try:
            if key == "nodes":
                kw["nodes"] = int(val)
            elif key == "seeds":
                kw["seeds"] = float(val)
            elif key == "directed":
                kw["directed"] = val.strip().lower() in ("1", "true", "yes")
            elif key == "label":
                kw["label"] = val.strip()
            else:
                raise ConfigError(f"unknown network option {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for network option {key!r}: {val!r}") from None
    return NetworkConfig(**kw)


@dataclass
class ExperimentConfig:
    networks: list = field(default_factory=lambda: [NetworkConfig("core-periphery")])
    betas: list = field(default_factory=lambda: [0.5])
    variants: list = field(default_factory=lambda: list(ALL_VARIANTS))
    cascades: int = 10
    seed: int = 0
    eta: float = 0.01
    n_max: int = 100
    sweep_eta: list = field(default_factory=list)
    sweep_n_max: list = field(default_factory=list)
    size_window: tuple = (0.25, 0.75)
    max_retries: int = 100
    bayes_prior: float | None = None  # None: debiased population estimate
    solver: SolverConfig = field(default_factory=SolverConfig)
    out: str = "results"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.networks:
            raise ConfigError("at least one network is required")
        if not self.betas or any(not 0.0 <= b < 1.0 for b in self.betas):
            raise ConfigError("beta values must be given and lie in [0, 1)")
        if not self.variants:
            raise ConfigError("at least one variant is required")
        bad = [v for v in self.variants if v not in ALL_VARIANTS]
        if bad:
            raise ConfigError(f"unknown variants {bad}; expected some of {ALL_VARIANTS}")
        if self.cascades < 1:
            raise ConfigError("cascades must be >= 1")
        if self.eta <= 0 or self.n_max < 1:
            raise ConfigError("need eta > 0 and n_max >= 1")
        if any(e <= 0 for e in self.sweep_eta) or any(m < 1 for m in self.sweep_n_max):
            raise ConfigError("sweep values must be positive")
        if self.bayes_prior is not None and not 0.0 < self.bayes_prior < 1.0:
            raise ConfigError("bayes_prior must lie in (0, 1)")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    def variant_index(self, variant: str) -> int:
        return ALL_VARIANTS.index(variant)


_SCALARS = {
    "seed": int, "cascades": int, "eta": float, "n_max": int, "max_retries": int,
    "bayes_prior": float, "out": str,
}
_LISTS = {"beta": ("betas", float), "variant": ("variants", str),
          "sweep_eta": ("sweep_eta", float), "sweep_n_max": ("sweep_n_max", int)}


def _solver_field(name: str):
    for f in dataclasses.fields(SolverConfig):
        if f.name == name:
            return f
    raise ConfigError(f"unknown solver option {name!r}")


def _coerce_solver(name: str, raw: str):
    f = _solver_field(name)
    default = f.default
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    kw: dict = {}
    lists: dict = {}
    networks = []
    solver = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        try:
            if key == "network":
                networks.append(parse_network(val))
            elif key == "window":
                lo, hi = (float(t) for t in val.split(","))
                kw["size_window"] = (lo, hi)
            elif key.startswith("solver."):
                solver[key[7:]] = _coerce_solver(key[7:], val)
            elif key in _LISTS:
                name, cast = _LISTS[key]
                lists.setdefault(name, []).extend(cast(t.strip()) for t in val.split(",") if t.strip())
            elif key in _SCALARS:
                kw[key] = _SCALARS[key](val)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value {val!r} for {key!r}") from None
    if networks:
        kw["networks"] = networks
    kw.update(lists)
    try:
        kw["solver"] = SolverConfig(**solver)
    except ValueError as exc:
        raise ConfigError(f"{source}: solver: {exc}") from None
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, str(path))
