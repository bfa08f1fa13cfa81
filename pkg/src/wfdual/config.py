"""Experiment configuration: strict TOML schema, canonical hashing.

Unknown keys are errors; silent typos in stochastic experiments are
unrecoverable.  The config hash is the sha256 of the canonical JSON form
(sorted keys) and is embedded in every output record.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .drift import DriftSpec, binomial_coeffs
from .spde import Domain, InitialCondition


class ConfigError(Exception):
    pass


def _require_keys(table: dict, allowed: set[str], where: str):
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(unknown)}")


def drift_from_table(table: dict) -> DriftSpec:
    _require_keys(table, {"coeffs", "b_inf", "binomial_q", "truncate_k"}, "drift")
    if "binomial_q" in table:
        if "coeffs" in table:
            raise ConfigError("give either coeffs or binomial_q, not both")
        k = int(table.get("truncate_k", 8))
        return binomial_coeffs(float(table["binomial_q"]), k)
    coeffs = table.get("coeffs")
    if coeffs is None:
        raise ConfigError("[drift] needs coeffs or binomial_q")
    return DriftSpec(coeffs=tuple(float(c) for c in coeffs),
                     b_inf=float(table.get("b_inf", 0.0)))


def initial_from_table(table: dict) -> InitialCondition:
    _require_keys(table, {"kind", "c", "a", "b"}, "initial")
    kind = table.get("kind", "constant")
    if kind == "constant":
        return InitialCondition(kind="constant", c=float(table.get("c", 0.5)))
    if kind == "gaussian_bump":
        return InitialCondition(kind="gaussian_bump",
                                a=float(table.get("a", 0.0)),
                                b=float(table.get("b", 0.0)))
    if kind in ("one", "zero"):
        return InitialCondition(kind=kind)
    raise ConfigError(f"unknown initial kind {kind!r}")


@dataclass
class ExperimentConfig:
    drift: dict
    initial: dict = field(default_factory=lambda: {"kind": "constant", "c": 0.5})
    points: list = field(default_factory=list)
    T: float = 0.25
    domain_X: float = 8.0
    dx: float = 1.0 / 32.0
    dt_field: float | None = None  # default dx^2/4
    dt_particles: float = 1e-4
    l: int | None = None
    m: int | None = None
    k_mode: str = "auto"
    reps_field: int = 2000
    reps_dual: int = 20000
    reps: int | None = None  # generic rep count for moments/diagnostics
    seed: int = 0
    threads: int = 1
    z_threshold: float = 3.0
    hard_cap: int = 1_000_000
    output_dir: str = "out"
    sample_times: list = field(default_factory=list)
    snapshot_times: list = field(default_factory=list)
    # moments / diagnostics blocks
    moment_x: float = 0.0
    moment_t: float = 0.5
    l_list: list = field(default_factory=lambda: [4, 8, 16])
    m_list: list = field(default_factory=lambda: [4, 8, 16])
    diagonal_only: bool = False
    checks: list = field(default_factory=lambda: ["branching"])
    mu: float = 1.0
    t_list: list = field(default_factory=lambda: [0.01, 0.04, 0.1])
    delta: float = 0.05
    horizon: float = 4.0
    R: float = 1.0
    times: list = field(default_factory=lambda: [0.1, 0.25, 0.5])
    coupled_m: list = field(default_factory=list)

    _TOP_KEYS = {"drift", "initial", "run", "moments", "diagnose"}
    _RUN_KEYS = {"points", "T", "domain_X", "dx", "dt_field", "dt_particles",
                 "l", "m", "k_mode", "reps_field", "reps_dual", "reps", "seed",
                 "threads", "z_threshold", "hard_cap", "output_dir",
                 "sample_times", "snapshot_times", "coupled_m"}
    _MOMENT_KEYS = {"x", "t", "l_list", "m_list", "diagonal_only"}
    _DIAG_KEYS = {"checks", "mu", "t_list", "l_list", "m_list", "delta",
                  "horizon", "R", "times", "points"}

    @classmethod
    def from_toml(cls, path: str) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        _require_keys(raw, cls._TOP_KEYS, "top level")
        if "drift" not in raw:
            raise ConfigError("config needs a [drift] table")
        cfg = cls(drift=dict(raw["drift"]))
        drift_from_table(cfg.drift)  # validate early
        if "initial" in raw:
            cfg.initial = dict(raw["initial"])
            initial_from_table(cfg.initial)
        run = dict(raw.get("run", {}))
        _require_keys(run, cls._RUN_KEYS, "run")
        for key, value in run.items():
            setattr(cfg, key, value)
        mom = dict(raw.get("moments", {}))
        _require_keys(mom, cls._MOMENT_KEYS, "moments")
        if "x" in mom:
            cfg.moment_x = float(mom["x"])
        if "t" in mom:
            cfg.moment_t = float(mom["t"])
        if "l_list" in mom:
            cfg.l_list = [int(v) for v in mom["l_list"]]
        if "m_list" in mom:
            cfg.m_list = [int(v) for v in mom["m_list"]]
        if "diagonal_only" in mom:
            cfg.diagonal_only = bool(mom["diagonal_only"])
        diag = dict(raw.get("diagnose", {}))
        _require_keys(diag, cls._DIAG_KEYS, "diagnose")
        for key in ("checks", "t_list", "times"):
            if key in diag:
                setattr(cfg, key, list(diag[key]))
        for key in ("mu", "delta", "horizon", "R"):
            if key in diag:
                setattr(cfg, key, float(diag[key]))
        if "l_list" in diag:
            cfg.l_list = [int(v) for v in diag["l_list"]]
        if "m_list" in diag:
            cfg.m_list = [int(v) for v in diag["m_list"]]
        if "points" in diag:
            cfg.points = list(diag["points"])
        cfg.validate()
        return cfg

    def validate(self):
        if self.dt_field is None:
            self.dt_field = self.dx * self.dx / 4.0
        if self.dt_field > self.dx * self.dx / 2.0 + 1e-15:
            raise ConfigError("dt_field violates the CFL bound dx^2/2")
        if self.dt_particles <= 0:
            raise ConfigError("dt_particles must be positive")
        if self.k_mode not in ("auto", "plain", "truncated"):
            raise ConfigError(f"bad k_mode {self.k_mode!r}")
        if self.T < 0 or not math.isfinite(self.T):
            raise ConfigError("bad horizon T")

    # -- derived objects -------------------------------------------------------

    def drift_spec(self) -> DriftSpec:
        return drift_from_table(self.drift)

    def initial_condition(self) -> InitialCondition:
        return initial_from_table(self.initial)

    def domain(self) -> Domain:
        return Domain(X=float(self.domain_X), dx=float(self.dx))

    # -- canonical form ----------------------------------------------------------

    def canonical_dict(self) -> dict:
        d = asdict(self)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True,
                          separators=(",", ":"), allow_nan=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]
