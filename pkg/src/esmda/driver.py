"""The ES-MDA loop, run records and their on-disk form."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from esmda import schedule as sched
from esmda.analysis import Mismatch, analysis_update, data_mismatch, perturb_observations
from esmda.config import RunConfig
from esmda.ensemble import Ensemble, RandomStreams, sample_prior, write_csv
from esmda.forward import RunCounter, evaluate_batch

log = logging.getLogger(__name__)


class NumericalFailure(ArithmeticError):
    """A numerical error raised inside the loop, tagged with where it happened."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


@dataclass(eq=False)
class IterationRecord:
    iteration: int
    alpha: float
    forecast: Ensemble  # g(m) of the ensemble entering this iteration
    mismatch: Mismatch
    ensemble: Ensemble  # ensemble after this iteration's analysis


@dataclass(eq=False)
class RunRecord:
    config: RunConfig
    prior: Ensemble
    iterations: list[IterationRecord] = field(default_factory=list)
    final_forecast: Ensemble | None = None
    final_mismatch: Mismatch | None = None
    evaluations: int = 0
    schedule_status: sched.Validation | None = None

    @property
    def final_ensemble(self) -> Ensemble:
        return self.iterations[-1].ensemble if self.iterations else self.prior

    @property
    def initial_mismatch(self) -> float:
        return self.iterations[0].mismatch.mean


def run_esmda(config: RunConfig, parallelism: int | None = None) -> RunRecord:
    """Run ``N_a`` forecast/perturb/analysis passes then one final forecast.

    Total forward evaluations are ``(N_a + 1) * N_e``.
    """
    parallelism = config.parallelism if parallelism is None else parallelism
    status = sched.validate(config.schedule)
    if not status.ok:
        if not config.allow_invalid_schedule:
            raise sched.ScheduleError(status.message)
        log.warning("running with an invalid schedule: %s", status.message)

    streams = RandomStreams(config.seed)
    counter = RunCounter()
    models = sample_prior(config.prior, config.n_e, streams)
    record = RunRecord(config=config, prior=models, schedule_status=status)

    for ell, alpha in enumerate(config.schedule, start=1):
        try:
            sims = evaluate_batch(config.model, models, parallelism, counter)
            mismatch = data_mismatch(sims, config.d_hist, config.noise)
            perturbed = perturb_observations(
                config.d_hist, config.noise, alpha, streams, config.n_e, iteration=ell
            )
            updated = analysis_update(models, sims, perturbed, config.noise, alpha, config.solver)
        except (ArithmeticError, np.linalg.LinAlgError) as exc:
            raise NumericalFailure(f"iteration {ell}: {exc}", iteration=ell) from exc
        log.info("iteration %d alpha=%.6g mean mismatch=%.6g", ell, alpha, mismatch.mean)
        record.iterations.append(IterationRecord(ell, alpha, sims, mismatch, updated))
        models = updated

    try:
        record.final_forecast = evaluate_batch(config.model, models, parallelism, counter)
    except ArithmeticError as exc:
        raise NumericalFailure(f"final forecast: {exc}", iteration=len(config.schedule) + 1) from exc
    record.final_mismatch = data_mismatch(record.final_forecast, config.d_hist, config.noise)
    record.evaluations = counter.total
    return record


def summarize(record: RunRecord) -> list[dict]:
    """One row per forecast (iterations 1..N_a, then the final forecast)."""
    rows = []
    forecasts = [(it.iteration, it.alpha, it.mismatch) for it in record.iterations]
    forecasts.append((len(record.iterations) + 1, None, record.final_mismatch))
    for ell, alpha, mm in forecasts:
        rows.append(
            {
                "iteration": ell,
                "alpha": alpha,
                "phi_mean": mm.mean,
                "phi_min": float(np.min(mm.per_member)),
                "phi_max": float(np.max(mm.per_member)),
            }
        )
    return rows


def write_record(record: RunRecord, out_dir) -> list[Path]:
    """Write ensembles, the final forecast, mismatch table and diagnostics; return the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def _csv(name, rows, prefix):
        path = out / name
        write_csv(path, rows, prefix)
        written.append(path)
        return name

    _csv("ensemble_iter0.csv", record.prior.members, "m")
    snapshots = [_csv(f"ensemble_iter{it.iteration}.csv", it.ensemble.members, "m") for it in record.iterations]
    _csv("forecast_final.csv", record.final_forecast.members, "d")

    n_final = len(record.iterations) + 1
    lines = ["iteration,member,phi"]
    for it in record.iterations:
        lines += [f"{it.iteration},{j},{float(p)!r}" for j, p in enumerate(it.mismatch.per_member)]
    lines += [f"{n_final},{j},{float(p)!r}" for j, p in enumerate(record.final_mismatch.per_member)]
    path = out / "mismatch.csv"
    path.write_text("\n".join(lines) + "\n", newline="\n")
    written.append(path)

    cfg = record.config
    status = record.schedule_status
    diagnostics = {
        "seed": cfg.seed,
        "n_e": cfg.n_e,
        "n_a": len(record.iterations),
        "alphas": list(cfg.schedule.alphas),
        "schedule_valid": bool(status.ok),
        "schedule_residual": status.residual,
        "evaluations": record.evaluations,
        "solver": {"mode": cfg.solver.mode, "energy_fraction": cfg.solver.energy_fraction},
        "iterations": [
            {
                "iteration": it.iteration,
                "alpha": it.alpha,
                "phi_mean": it.mismatch.mean,
                "ensemble": snap,
            }
            for it, snap in zip(record.iterations, snapshots)
        ],
        "final_forecast": {
            "iteration": n_final,
            "phi_mean": record.final_mismatch.mean,
            "forecast": "forecast_final.csv",
        },
        "excluded_data": list(record.final_mismatch.excluded),
    }
    path = out / "diagnostics.json"
    path.write_text(json.dumps(diagnostics, indent=2) + "\n", newline="\n")
    written.append(path)
    return written
