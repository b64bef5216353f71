"""Accuracy metrics and per-trial records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from ..pipeline import angular_distance, match_estimates


@dataclass
class AngleErrors:
    """Outcome of :func:`angle_errors`.

    ``rmse`` is NaN when no trial could be matched.
    """

    rmse: float
    n_used: int
    n_unmatched: int


def angle_errors(trials) -> AngleErrors:
    """Root-mean-square DOA error over trials.

    Parameters
    ----------
    trials : iterable of (estimates, truth)
        Each entry is a pair of lists of (azimuth, elevation) in degrees.
        Estimates are paired with the truth by :func:`match_estimates`;
        azimuth differences are circular.

    Trials whose estimate count differs from the truth are skipped and
    counted in ``n_unmatched``.
    """
    total, count, used, unmatched = 0.0, 0, 0, 0
    for est, truth in trials:
        est, truth = list(est), list(truth)
        if len(est) != len(truth) or not truth:
            unmatched += 1
            continue
        perm = match_estimates(est, truth)
        for i, t in enumerate(truth):
            daz, del_ = angular_distance(est[perm[i]], t)
            total += daz ** 2 + del_ ** 2
        count += len(truth)
        used += 1
    rmse = math.sqrt(total / count) if count else float("nan")
    return AngleErrors(rmse, used, unmatched)


def rmse_angles(trials) -> float:
    """sqrt( 1/(K M) * sum_m sum_k [(el_err)^2 + (az_err)^2] ) in degrees."""
    return angle_errors(trials).rmse


def rmse_coupling(trials, literal: bool = False) -> float:
    """Relative coupling error in percent.

    ``sqrt(1/M * sum_m ||c_hat_m - c||^2) / ||c|| * 100``. With
    ``literal=True`` the 1/M factor is dropped, so the value grows with the
    trial count.
    """
    trials = list(trials)
    if not trials:
        raise ValueError("need at least one trial")
    sq, ref = 0.0, None
    for c_hat, c in trials:
        c_hat = getattr(c_hat, "coeffs", c_hat)
        c = np.asarray(getattr(c, "coeffs", c))
        if len(c_hat) != len(c):
            raise ValueError("coupling vectors of different lengths")
        sq += float(np.sum(np.abs(np.asarray(c_hat) - c) ** 2))
        ref = c
    m = 1 if literal else len(trials)
    return math.sqrt(sq / m) / float(np.linalg.norm(ref)) * 100.0


@dataclass
class TrialRecord:
    """Result of one Monte Carlo trial of one estimator."""

    trial: int
    estimator: str
    value: float
    doas: list[tuple[float, float]]
    truth: list[tuple[float, float]]
    coupling: list[complex] | None
    true_coupling: list[complex]
    k_est: int
    n_atoms: int
    runtime: float = 0.0
    warnings: list[str] = field(default_factory=list)


@dataclass
class MetricsRow:
    """Aggregate over the trials of one sweep point and estimator.

    ``rmse_coupling_pct`` is NaN for estimators that do not estimate the
    coupling. ``mean_runtime`` is not part of the deterministic CSV.
    """

    sweep: str
    value: float
    estimator: str
    trials: int
    rmse_angles: float
    rmse_coupling_pct: float
    correct_order_prob: float
    matched_trials: int
    unmatched_trials: int
    mean_atoms: float
    mean_runtime: float = float("nan")

    @classmethod
    def csv_fields(cls) -> list[str]:
        return [f.name for f in fields(cls) if f.name != "mean_runtime"]


def aggregate(records, sweep: str, literal_coupling: bool = False) -> list[MetricsRow]:
    """Reduce trial records to one row per (value, estimator).

    The reduction sorts records first, so it does not depend on the order in
    which trials finished.
    """
    groups: dict[tuple[float, str], list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.value, r.estimator), []).append(r)
    rows = []
    for (value, est), recs in sorted(groups.items()):
        recs.sort(key=lambda r: r.trial)
        ang = angle_errors((r.doas, r.truth) for r in recs)
        with_c = [r for r in recs if r.coupling is not None]
        rc = (rmse_coupling([(r.coupling, r.true_coupling) for r in with_c], literal_coupling)
              if with_c else float("nan"))
        correct = sum(r.k_est == len(r.truth) for r in recs) / len(recs)
        rows.append(MetricsRow(sweep, float(value), est, len(recs), ang.rmse, rc, correct,
                               ang.n_used, ang.n_unmatched,
                               float(np.mean([r.n_atoms for r in recs])),
                               float(np.mean([r.runtime for r in recs]))))
    return rows
