"""Monte Carlo trial execution, sweeps and CSV output."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from ..array import synthesize
from ..pipeline import run as run_pipeline
from .baselines import baseline_grid_music, baseline_narrowband_lasso
from .metrics import MetricsRow, TrialRecord, aggregate
from .scenario import GRID_LASSO, GRID_MUSIC, PROPOSED, Scenario

SNAPSHOT_GRID = (50, 100, 200, 400)
SNAPSHOT_SWEEP_SNR = 5.0
ALPHA_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0)
ALPHA_SWEEP_SNR = 10.0


@dataclass(frozen=True)
class TrialTask:
    scenario_json: str
    estimator: str
    trial: int
    value: float
    snr_db: float
    snapshots: int
    alpha: float | None = None


def run_trial(task: TrialTask) -> TrialRecord:
    """One trial: synthesize data with seed ``scenario.seed + trial`` and estimate."""
    scn = Scenario.from_json(task.scenario_json)
    X, truth = synthesize(scn.array, scn.sources, scn.coupling, task.snapshots, task.snr_db,
                          seed=scn.seed + task.trial)
    k = scn.n_sources
    coupling = None
    warnings: list[str] = []
    t0 = time.perf_counter()
    if task.estimator == PROPOSED:
        pcfg = scn.pipeline if task.alpha is None else replace(scn.pipeline, alpha=task.alpha)
        res = run_pipeline(X, scn.array, pcfg)
        doas, k_est = res.doas, res.k
        coupling = [complex(v) for v in res.coupling.coeffs]
        n_atoms = sum(t.n_bands for t in res.trace)
        warnings = res.warnings
    elif task.estimator == GRID_MUSIC:
        doas = baseline_grid_music(X, scn.array, k, scn.baseline_step[GRID_MUSIC])
        k_est = len(doas)
        n_atoms = _music_points(scn.baseline_step[GRID_MUSIC])
    elif task.estimator == GRID_LASSO:
        doas, n_atoms = baseline_narrowband_lasso(X, scn.array, k, scn.baseline_step[GRID_LASSO],
                                                  alpha=scn.pipeline.alpha)
        k_est = len(doas)
    else:
        raise ValueError(f"unknown estimator {task.estimator!r}")
    runtime = time.perf_counter() - t0
    return TrialRecord(task.trial, task.estimator, task.value, [tuple(d) for d in doas],
                       list(truth.angles), coupling, [complex(v) for v in scn.coupling.coeffs],
                       k_est, n_atoms, runtime, list(warnings))


def _music_points(step: float) -> int:
    from .baselines import point_grid

    az, el = point_grid(step)
    return len(az) * len(el)


def execute(tasks: list[TrialTask], parallel: int = 1) -> list[TrialRecord]:
    """Run tasks, in worker processes when ``parallel > 1``.

    Every trial derives its randomness from its own seed, so the records do
    not depend on ``parallel``.
    """
    if parallel <= 1 or len(tasks) <= 1:
        return [run_trial(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(run_trial, tasks, chunksize=max(1, len(tasks) // (4 * parallel))))


def _estimators(scn: Scenario, estimator: str | None) -> list[str]:
    return [estimator] if estimator else list(scn.estimators)


def sweep_snr(scn: Scenario, parallel: int = 1, estimator: str | None = None):
    """Records over the scenario's SNR grid at its snapshot count."""
    js = scn.to_json()
    tasks = [TrialTask(js, est, m, snr, snr, scn.snapshots)
             for est in _estimators(scn, estimator) for snr in scn.snr_db
             for m in range(scn.trials)]
    return execute(tasks, parallel)


def sweep_snapshots(scn: Scenario, snapshots=SNAPSHOT_GRID, snr_db: float = SNAPSHOT_SWEEP_SNR,
                    parallel: int = 1, estimator: str | None = None):
    """Records over snapshot counts at a fixed SNR."""
    js = scn.to_json()
    tasks = [TrialTask(js, est, m, float(t), snr_db, int(t))
             for est in _estimators(scn, estimator) for t in snapshots
             for m in range(scn.trials)]
    return execute(tasks, parallel)


def sweep_alpha(scn: Scenario, alphas=ALPHA_GRID, snr_db: float = ALPHA_SWEEP_SNR,
                parallel: int = 1):
    """Records of the proposed estimator over penalty fractions alpha."""
    js = scn.to_json()
    tasks = [TrialTask(js, PROPOSED, m, float(a), snr_db, scn.snapshots, float(a))
             for a in alphas for m in range(scn.trials)]
    return execute(tasks, parallel)


def alpha_sweep(scn: Scenario, alphas=ALPHA_GRID, snr_db: float = ALPHA_SWEEP_SNR,
                parallel: int = 1) -> dict[float, float]:
    """Correct-order probability P(k_hat = K) per alpha."""
    rows = aggregate(sweep_alpha(scn, alphas, snr_db, parallel), "alpha")
    return {r.value: r.correct_order_prob for r in rows}


# -- output ------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(round(v, 12))
    return str(v)


def metrics_csv(rows: list[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = MetricsRow.csv_fields()
    w.writerow(cols)
    for r in rows:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in cols])
    return buf.getvalue()


def long_csv(rows: list[MetricsRow]) -> str:
    """One (sweep, value, estimator, metric, metric_value) row per number."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep", "value", "estimator", "metric", "metric_value"])
    for r in rows:
        for m in ("rmse_angles", "rmse_coupling_pct", "correct_order_prob"):
            w.writerow([r.sweep, _fmt(r.value), r.estimator, m, _fmt(getattr(r, m))])
    return buf.getvalue()


def timing_csv(rows: list[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep", "value", "estimator", "mean_atoms", "mean_runtime_s"])
    for r in rows:
        w.writerow([r.sweep, _fmt(r.value), r.estimator, _fmt(r.mean_atoms),
                    f"{r.mean_runtime:.4f}"])
    return buf.getvalue()


def write_outputs(rows: list[MetricsRow], out: Path, name: str) -> list[Path]:
    """Write ``<name>.csv``, ``<name>_long.csv`` and ``<name>_timing.csv``.

    Only the timing file depends on the machine; the other two are
    byte-identical for identical scenario and seed.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{name}.csv", out / f"{name}_long.csv", out / f"{name}_timing.csv"]
    for p, text in zip(paths, (metrics_csv(rows), long_csv(rows), timing_csv(rows))):
        p.write_text(text)
    return paths
