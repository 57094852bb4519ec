"""Model configuration dataclasses and the flat ``key = value`` config format.

A config file is a list of ``key = value`` lines; ``#`` starts a comment.
Lists are comma separated.  Keys are lower_snake_case and unknown keys are
rejected, e.g.::

    m = 3
    regime_type = I
    seasonal_periods = 4, 4, 4
    n_iter = 1500
    burn_in = 500
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError

REGIME_TYPES = ("I", "II", "III", "IV", "none")


@dataclass(frozen=True)
class PriorSpec:
    """Hyperparameters of the priors on the four parameter blocks.

    ``None`` for a degrees-of-freedom field means ``m + 2``; ``None`` for
    ``expected_predictors`` means half of the candidate predictors per asset.
    Scale matrices are ``scale * I``.
    """

    h: float = 0.05
    c_star: float = 0.10
    w_u: float | None = None
    w_v: float | None = None
    w_w: float | None = None
    scale_u: float = 0.01
    scale_v: float = 0.01
    scale_w: float = 0.01
    phi: float | None = None
    nu: float = 0.01
    psi: float = 1.0
    c_gamma: float = 0.0
    expected_predictors: float | None = None

    def validate(self, m: int) -> None:
        if not 0.0 < self.h < 1.0 / 3.0:
            raise ConfigError(f"h must lie in (0, 1/3), got {self.h}")
        if not 0.0 < self.c_star < 1.0 - 3.0 * self.h:
            raise ConfigError(f"c_star must lie in (0, 1 - 3h), got {self.c_star}")
        for name in ("w_u", "w_v", "w_w", "phi"):
            df = getattr(self, name)
            if df is not None and df <= m - 1:
                raise ConfigError(f"{name} must exceed m - 1 = {m - 1}, got {df}")
        for name in ("scale_u", "scale_v", "scale_w", "nu"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.psi <= 0:
            raise ConfigError(f"psi must be positive, got {self.psi}")
        if self.expected_predictors is not None and self.expected_predictors < 0:
            raise ConfigError("expected_predictors must be non-negative")

    def df(self, name: str, m: int) -> float:
        value = getattr(self, name)
        return float(m + 2) if value is None else float(value)


@dataclass(frozen=True)
class McmcSpec:
    n_iter: int = 1500
    burn_in: int = 500
    rw_scale: float | None = None  # None -> 2.38**2 / dim
    rw_init_var: float = 1e-3
    adapt_jitter: float = 1e-8
    report_thin: int = 10

    def validate(self) -> None:
        if self.n_iter < 0 or self.burn_in < 0:
            raise ConfigError("n_iter and burn_in must be non-negative")
        if self.n_iter > 0 and self.burn_in >= self.n_iter:
            raise ConfigError(f"burn_in ({self.burn_in}) must be < n_iter ({self.n_iter})")
        if self.n_iter == 0 and self.burn_in != 0:
            raise ConfigError("a zero-iteration run needs burn_in = 0")
        if self.report_thin < 1:
            raise ConfigError("report_thin must be >= 1")


@dataclass(frozen=True)
class ModelSpec:
    """Full model configuration.

    ``regime_type`` is one of I-IV, or ``"none"`` for the single-regime
    (no hysteresis) baseline.  ``regressors`` selects the candidate design:
    ``"own"`` uses lags of the asset's own driver series, ``"all"`` uses lags
    of every driver series (a VAR-style design).
    """

    m: int
    lag_order: int = 3
    regime_type: str = "I"
    k_star: float = 2.0 / 3.0
    seasonal_periods: tuple[int, ...] = ()
    cyclical_enabled: bool = False
    regressors: str = "own"
    initial_regime: int = 0
    initial_state_variance: float = 1e6
    rho: tuple[float, ...] = ()
    slope: tuple[float, ...] = ()
    update_trend: bool = True
    damping: tuple[float, ...] = ()
    frequency: tuple[float, ...] = ()
    prior: PriorSpec = field(default_factory=PriorSpec)
    mcmc: McmcSpec = field(default_factory=McmcSpec)
    seed: int = 0

    def __post_init__(self):
        m = self.m
        # broadcast scalars / empty tuples to one entry per series
        defaults = {
            "seasonal_periods": 4,
            "rho": 0.5,
            "slope": 0.0,
            "damping": 0.9,
            "frequency": 0.5,
        }
        for name, default in defaults.items():
            value = getattr(self, name)
            if isinstance(value, (int, float)):
                value = (value,)
            value = tuple(value)
            if len(value) == 0:
                value = (default,) * m
            elif len(value) == 1 and m > 1:
                value = value * m
            object.__setattr__(self, name, value)
        object.__setattr__(
            self, "seasonal_periods", tuple(int(s) for s in self.seasonal_periods)
        )
        self.validate()

    def validate(self) -> None:
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        if self.lag_order < 1:
            raise ConfigError("lag_order must be >= 1")
        if self.regime_type not in REGIME_TYPES:
            raise ConfigError(f"regime_type must be one of {REGIME_TYPES}")
        if not 0.5 <= self.k_star <= 1.0:
            raise ConfigError(f"k_star must lie in [0.5, 1], got {self.k_star}")
        if self.regressors not in ("own", "all"):
            raise ConfigError("regressors must be 'own' or 'all'")
        if self.initial_regime not in (0, 1):
            raise ConfigError("initial_regime must be 0 or 1")
        for name in ("seasonal_periods", "rho", "slope", "damping", "frequency"):
            if len(getattr(self, name)) != self.m:
                raise ConfigError(f"{name} needs {self.m} entries")
        if any(s < 1 for s in self.seasonal_periods):
            raise ConfigError("seasonal periods must be >= 1 (1 disables the block)")
        if any(not 0.0 < r < 1.0 for r in self.rho):
            raise ConfigError("rho entries must lie in (0, 1)")
        if any(not 0.0 < z < 1.0 for z in self.damping):
            raise ConfigError("damping entries must lie in (0, 1)")
        if any(not 0.0 <= f <= 3.141592653589793 for f in self.frequency):
            raise ConfigError("frequency entries must lie in [0, pi]")
        if self.initial_state_variance < 0:
            raise ConfigError("initial_state_variance must be >= 0")
        self.prior.validate(self.m)
        self.mcmc.validate()

    def n_candidates(self) -> int:
        """Candidate predictors per asset and regime."""
        per_lag = 1 if self.regressors == "own" else self.m
        return per_lag * self.lag_order

    def replace(self, **changes) -> "ModelSpec":
        return dataclasses.replace(self, **changes)


# -- flat config files ------------------------------------------------------

def _parse_scalar(text: str) -> Any:
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", ""):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_config_text(text: str) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or key != key.lower() or not key.replace("_", "").isalnum():
            raise ConfigError(f"line {lineno}: key {key!r} is not lower_snake_case")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if "," in value:
            out[key] = tuple(_parse_scalar(v.strip()) for v in value.split(","))
        else:
            out[key] = _parse_scalar(value)
    return out


def read_config(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text())


_PRIOR_KEYS = {f.name for f in dataclasses.fields(PriorSpec)}
_MCMC_KEYS = {f.name for f in dataclasses.fields(McmcSpec)}
_MODEL_KEYS = {f.name for f in dataclasses.fields(ModelSpec)} - {"prior", "mcmc"}
MODEL_CONFIG_KEYS = frozenset(_PRIOR_KEYS | _MCMC_KEYS | _MODEL_KEYS)

_TUPLE_KEYS = {"seasonal_periods", "rho", "slope", "damping", "frequency"}


def check_keys(cfg: dict[str, Any], allowed) -> None:
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")


def model_spec_from_dict(cfg: dict[str, Any], *, extra_keys=()) -> ModelSpec:
    """Build a :class:`ModelSpec` from a flat mapping; ``extra_keys`` are
    tolerated (they belong to another consumer, e.g. the backtest)."""
    check_keys(cfg, MODEL_CONFIG_KEYS | set(extra_keys))
    if "m" not in cfg:
        raise ConfigError("config must set m")
    prior = {k: cfg[k] for k in _PRIOR_KEYS if k in cfg}
    mcmc = {k: cfg[k] for k in _MCMC_KEYS if k in cfg}
    model = {k: cfg[k] for k in _MODEL_KEYS if k in cfg}
    for key in _TUPLE_KEYS & set(model):
        if not isinstance(model[key], tuple):
            model[key] = (model[key],)
    if "regime_type" in model:
        rt = model["regime_type"]
        model["regime_type"] = "none" if rt is None else str(rt)
    try:
        return ModelSpec(prior=PriorSpec(**prior), mcmc=McmcSpec(**mcmc), **model)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def model_spec_to_dict(spec: ModelSpec) -> dict[str, Any]:
    out = {k: getattr(spec, k) for k in sorted(_MODEL_KEYS)}
    out.update({k: getattr(spec.prior, k) for k in sorted(_PRIOR_KEYS)})
    out.update({k: getattr(spec.mcmc, k) for k in sorted(_MCMC_KEYS)})
    return {k: list(v) if isinstance(v, tuple) else v for k, v in out.items()}


def format_config(cfg: dict[str, Any]) -> str:
    lines = []
    for key, value in cfg.items():
        if isinstance(value, (list, tuple)):
            value = ", ".join(str(v) for v in value)
        elif value is None:
            value = "none"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
