"""JSON run configuration with strict validation."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from esmda import schedule as sched
from esmda.analysis import NoiseModel, SolverChoice
from esmda.ensemble import GaussianPrior, read_csv
from esmda.forward import DeclineCurveModel, ForwardModel, LinearModel


class ConfigError(ValueError):
    """Invalid configuration; ``where`` is a dotted location inside the document."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


_TOP_KEYS = {
    "seed": True,
    "n_e": True,
    "schedule": True,
    "prior": True,
    "forward_model": True,
    "d_hist": True,
    "std_devs": True,
    "allow_invalid_schedule": False,
    "solver": False,
    "parallelism": False,
    "output_dir": False,
}


@dataclass(eq=False)
class RunConfig:
    seed: int
    n_e: int
    schedule: sched.AlphaSchedule
    prior: GaussianPrior
    model: ForwardModel
    d_hist: np.ndarray
    noise: NoiseModel
    solver: SolverChoice = field(default_factory=SolverChoice)
    parallelism: int = 1
    output_dir: str = "esmda_out"
    allow_invalid_schedule: bool = False

    def __post_init__(self):
        self.d_hist = np.array(self.d_hist, dtype=np.float64)
        check_dimensions(self)

    def to_dict(self) -> dict[str, Any]:
        if isinstance(self.model, LinearModel):
            model = {"type": "linear", "G": self.model.G.tolist(), "bias": self.model.bias.tolist()}
        elif isinstance(self.model, DeclineCurveModel):
            model = {"type": "decline", "times": self.model.times.tolist()}
        else:
            raise TypeError(f"cannot serialize forward model {self.model!r}")
        return {
            "seed": self.seed,
            "n_e": self.n_e,
            "schedule": self.schedule.to_dict(),
            "allow_invalid_schedule": self.allow_invalid_schedule,
            "prior": {"mean": self.prior.mean.tolist(), "factor": self.prior.factor.tolist()},
            "forward_model": model,
            "d_hist": self.d_hist.tolist(),
            "std_devs": self.noise.std.tolist(),
            "solver": {"mode": self.solver.mode, "energy_fraction": self.solver.energy_fraction},
            "parallelism": self.parallelism,
            "output_dir": self.output_dir,
        }

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return json.dumps(self.to_dict(), sort_keys=True) == json.dumps(other.to_dict(), sort_keys=True)


def check_dimensions(cfg: RunConfig) -> None:
    n_m, n_d = cfg.prior.n_m, cfg.d_hist.size
    if cfg.model.n_m != n_m:
        raise ConfigError("config.forward_model", f"expects N_m={cfg.model.n_m} parameters, prior has N_m={n_m}")
    if cfg.model.n_d != n_d:
        raise ConfigError("config.d_hist", f"expected N_d={cfg.model.n_d} values (forward model output), found {n_d}")
    if cfg.noise.n_d != n_d:
        raise ConfigError("config.std_devs", f"expected N_d={n_d} values, found {cfg.noise.n_d}")
    if cfg.n_e < 2:
        raise ConfigError("config.n_e", f"ensemble size must be >= 2, found {cfg.n_e}")
    if cfg.parallelism < 1:
        raise ConfigError("config.parallelism", f"must be >= 1, found {cfg.parallelism}")
    status = sched.validate(cfg.schedule)
    if not status.ok and not cfg.allow_invalid_schedule:
        raise ConfigError(
            "config.schedule",
            f"{status.message}. Set allow_invalid_schedule to run anyway",
        )


def load_config(path, allow_invalid_schedule: bool = False) -> RunConfig:
    """Read and validate a config; ``allow_invalid_schedule`` overrides the document's flag."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}")
    if allow_invalid_schedule and isinstance(doc, dict):
        doc["allow_invalid_schedule"] = True
    return parse_config(doc, base_dir=path.parent)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")


def parse_config(doc: Any, base_dir=".") -> RunConfig:
    base_dir = Path(base_dir)
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be a JSON object")
    _check_keys(doc, "config", _TOP_KEYS)

    seed = _int(doc["seed"], "config.seed", minimum=0)
    n_e = _int(doc["n_e"], "config.n_e", minimum=2)
    try:
        schedule = sched.from_dict(_obj(doc["schedule"], "config.schedule"))
    except sched.ScheduleError as exc:
        raise ConfigError("config.schedule", str(exc)) from None
    prior = _prior(_obj(doc["prior"], "config.prior"), base_dir)
    model = _model(_obj(doc["forward_model"], "config.forward_model"), base_dir)
    d_hist = _vector(doc["d_hist"], "config.d_hist", base_dir)
    std = _vector(doc["std_devs"], "config.std_devs", base_dir)
    try:
        noise = NoiseModel(std)
    except ValueError as exc:
        raise ConfigError("config.std_devs", str(exc)) from None

    solver = SolverChoice()
    if "solver" in doc:
        spec = _obj(doc["solver"], "config.solver")
        _check_keys(spec, "config.solver", {"mode": True, "energy_fraction": False})
        try:
            solver = SolverChoice(spec["mode"], float(spec.get("energy_fraction", 0.999)))
        except (TypeError, ValueError) as exc:
            raise ConfigError("config.solver", str(exc)) from None

    parallelism = _int(doc.get("parallelism", 1), "config.parallelism", minimum=1)
    output_dir = doc.get("output_dir", "esmda_out")
    if not isinstance(output_dir, str):
        raise ConfigError("config.output_dir", "must be a string")
    allow = doc.get("allow_invalid_schedule", False)
    if not isinstance(allow, bool):
        raise ConfigError("config.allow_invalid_schedule", "must be true or false")

    return RunConfig(
        seed=seed,
        n_e=n_e,
        schedule=schedule,
        prior=prior,
        model=model,
        d_hist=d_hist,
        noise=noise,
        solver=solver,
        parallelism=parallelism,
        output_dir=output_dir,
        allow_invalid_schedule=allow,
    )


def _check_keys(doc: dict, where: str, spec: dict[str, bool]) -> None:
    unknown = sorted(set(doc) - set(spec))
    if unknown:
        raise ConfigError(where, f"unknown keys {unknown}; allowed keys are {sorted(spec)}")
    missing = sorted(k for k, required in spec.items() if required and k not in doc)
    if missing:
        raise ConfigError(where, f"missing required keys {missing}")


def _obj(value, where) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(where, "must be a JSON object")
    return value


def _int(value, where, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(where, f"must be an integer, found {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(where, f"must be >= {minimum}, found {value}")
    return value


def _array(value, where, base_dir: Path, ndim: int) -> np.ndarray:
    if isinstance(value, str):
        p = Path(value)
        p = p if p.is_absolute() else base_dir / p
        try:
            arr = read_csv(p, header=True)
        except (OSError, ValueError) as exc:
            raise ConfigError(where, f"cannot read {p}: {exc}") from None
        if ndim == 1:
            arr = arr.ravel()
    else:
        try:
            arr = np.array(value, dtype=np.float64)
        except (TypeError, ValueError):
            raise ConfigError(where, "must be numeric") from None
    if arr.ndim != ndim:
        raise ConfigError(where, f"expected a {ndim}-D array, found shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(where, "contains non-finite values")
    return arr


def _vector(value, where, base_dir):
    return _array(value, where, base_dir, 1)


def _prior(spec: dict, base_dir: Path) -> GaussianPrior:
    _check_keys(spec, "config.prior", {"mean": True, "std": False, "covariance": False, "factor": False})
    given = [k for k in ("std", "covariance", "factor") if k in spec]
    if len(given) != 1:
        raise ConfigError("config.prior", "give exactly one of 'std', 'covariance' or 'factor'")
    mean = _vector(spec["mean"], "config.prior.mean", base_dir)
    kind = given[0]
    where = f"config.prior.{kind}"
    n = mean.size
    try:
        if kind == "std":
            std = _vector(spec[kind], where, base_dir)
            if std.size != n:
                raise ConfigError(where, f"expected {n} values, found {std.size}")
            if np.any(std < 0.0):
                raise ConfigError(where, "standard deviations must be >= 0")
            return GaussianPrior.from_std(mean, std)
        mat = _array(spec[kind], where, base_dir, 2)
        if mat.shape != (n, n):
            raise ConfigError(where, f"expected shape ({n}, {n}), found {mat.shape}")
        if kind == "covariance":
            return GaussianPrior.from_covariance(mean, mat)
        return GaussianPrior(mean, mat)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from None


def _model(spec: dict, base_dir: Path) -> ForwardModel:
    kind = spec.get("type")
    if kind == "linear":
        _check_keys(spec, "config.forward_model", {"type": True, "G": True, "bias": False})
        G = _array(spec["G"], "config.forward_model.G", base_dir, 2)
        bias = None
        if "bias" in spec:
            bias = _vector(spec["bias"], "config.forward_model.bias", base_dir)
            if bias.size != G.shape[0]:
                raise ConfigError(
                    "config.forward_model.bias", f"expected {G.shape[0]} values (rows of G), found {bias.size}"
                )
        return LinearModel(G, bias)
    if kind == "decline":
        _check_keys(spec, "config.forward_model", {"type": True, "times": True})
        times = _vector(spec["times"], "config.forward_model.times", base_dir)
        try:
            return DeclineCurveModel(times)
        except ValueError as exc:
            raise ConfigError("config.forward_model.times", str(exc)) from None
    raise ConfigError("config.forward_model.type", f"unknown forward model {kind!r}; expected 'linear' or 'decline'")
