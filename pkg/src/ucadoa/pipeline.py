"""Joint DOA / mutual coupling estimation with iterative band zooming."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .array import ArrayConfig, CouplingVector, coupling_matrix
from .bootstrap import bootstrap_coupling
from .coupling import DegenerateCouplingError, coupling_cost, estimate_coupling, refine_joint
from .dictionary import AZ_SPAN, BandGrid, build_dictionary, refine, uniform_grid
from .lasso import GROUP, StackedSystem, active_bands, solve_lasso
from .subspace import reduce, select_model_order

log = logging.getLogger(__name__)

REFERENCE_SCHEDULE = ((120, 30), (10, 10), (3, 3))


@dataclass
class PipelineConfig:
    """Estimator settings.

    ``stage_schedule[0]`` is the stage-0 (azimuth, elevation) band count;
    later entries are the per-band split applied at each zoom stage. The
    LASSO penalty at every stage is ``2 * alpha * gamma_max`` so that
    ``alpha = 1`` is exactly the zero-solution boundary. ``tol`` is the
    stage-0 LASSO optimality tolerance relative to the stage's
    ``gamma_max``; ``zoom_tol`` applies to the later stages, whose narrow
    bands are nearly collinear and make coordinate descent slow.

    ``bootstrap`` replaces the identity starting coupling by a coarse joint
    estimate (two or more sources only). ``polish`` refines the final DOAs
    and coupling jointly by least squares, each DOA confined to its stage-0
    ancestor band widened by one band on every side.
    """

    stage_schedule: list[tuple[int, int]] = field(default_factory=lambda: list(REFERENCE_SCHEDULE))
    alpha: float = 0.3
    rel_threshold: float = 0.05
    tol: float = 1e-6
    zoom_tol: float = 1e-4
    max_iter: int = 20_000
    k_max: int | None = None
    n_sources: int | None = None
    mode: str = GROUP
    polish: bool = True
    bootstrap: bool = True

    def __post_init__(self):
        self.stage_schedule = [tuple(int(v) for v in s) for s in self.stage_schedule]
        if not self.stage_schedule:
            raise ValueError("need at least one stage")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if not 0 < self.rel_threshold <= 1:
            raise ValueError("rel_threshold must be in (0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown pipeline keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class StageTrace:
    depth: int
    n_bands: int
    gamma: float
    gamma_max: float
    active: list[int]
    active_edges: list[list[float]]
    iterations: int
    converged: bool
    kkt: float
    coupling_updated: bool


@dataclass
class EstimationResult:
    doas: list[tuple[float, float]]
    coupling: CouplingVector
    k: int
    k_selected: int
    trace: list[StageTrace] = field(default_factory=list)
    final_bands: list[list[float]] = field(default_factory=list)
    band_doas: list[tuple[float, float]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def detected(self) -> bool:
        return self.k > 0

    def to_dict(self) -> dict:
        return {
            "doas": [list(d) for d in self.doas],
            "coupling": self.coupling.to_json(),
            "k": self.k,
            "k_selected": self.k_selected,
            "final_bands": self.final_bands,
            "band_doas": [list(d) for d in self.band_doas],
            "warnings": self.warnings,
            "trace": [asdict(t) for t in self.trace],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


@lru_cache(maxsize=8)
def _stage0_dictionary(cfg: ArrayConfig, n_az: int, n_el: int):
    return build_dictionary(cfg, uniform_grid(n_az, n_el))


def _touching(e1, e2, slack=1e-9):
    """Closed rectangles share at least a boundary point (azimuth circular)."""
    el_ok = e1[2] <= e2[3] + slack and e2[2] <= e1[3] + slack
    if not el_ok:
        return False
    for shift in (-AZ_SPAN, 0.0, AZ_SPAN):
        if e1[0] <= e2[1] + shift + slack and e2[0] + shift <= e1[1] + slack:
            return True
    return False


def cluster_bands(grid: BandGrid, active, magnitudes) -> list[list[int]]:
    """Group active bands into connected clusters, strongest cluster first.

    Each cluster lists its band indices with the strongest band first.
    """
    active = sorted(active)
    parent = {q: q for q in active}

    def find(q):
        while parent[q] != q:
            parent[q] = parent[parent[q]]
            q = parent[q]
        return q

    for i, p in enumerate(active):
        for q in active[i + 1:]:
            if _touching(grid.edges[p], grid.edges[q]):
                parent[find(p)] = find(q)
    groups: dict[int, list[int]] = {}
    for q in active:
        groups.setdefault(find(q), []).append(q)
    clusters = [sorted(g, key=lambda q: (-magnitudes[q], q)) for g in groups.values()]
    clusters.sort(key=lambda g: (-magnitudes[g[0]], g[0]))
    return clusters


def _couple_and_normalize(c_hat: CouplingVector, atoms: np.ndarray) -> np.ndarray:
    A = coupling_matrix(c_hat) @ atoms
    norms = np.linalg.norm(A, axis=0)
    return A / np.where(norms > 0, norms, 1.0)[None, :]


def _ancestor(grids: list[BandGrid], q: int) -> int:
    """Index of the stage-0 band that band ``q`` of the last grid descends from."""
    for g in reversed(grids[1:]):
        q = int(g.parent[q])
    return q


def select_clusters(clusters: list[list[int]], groups: list[int], k: int) -> list[int]:
    """Pick the head bands of ``k`` clusters, spreading over coarse groups first.

    ``groups[i]`` labels the stage-0 cluster that ``clusters[i]`` descends
    from. Zooming can split one source into several fine clusters that no
    longer touch, so the strongest cluster of every group is taken before a
    group contributes a second one. ``clusters`` must be strongest first.
    """
    first, rest, seen = [], [], set()
    for c, g in zip(clusters, groups):
        (rest if g in seen else first).append(c[0])
        seen.add(g)
    return (first + rest)[:k]


def _polish_box(grids: list[BandGrid], q: int) -> list[float]:
    """Stage-0 ancestor of final band ``q`` widened by one band on every side."""
    q = _ancestor(grids, q)
    az0, az1, el0, el1 = grids[0].edges[q]
    daz, del_ = az1 - az0, el1 - el0
    return [az0 - daz, az1 + daz, max(el0 - del_, 0.0), min(el1 + del_, 90.0)]


def run(X: np.ndarray, cfg: ArrayConfig, pcfg: PipelineConfig | None = None,
        initial_coupling: CouplingVector | None = None) -> EstimationResult:
    """Estimate DOAs and coupling from snapshots ``X`` (N x T).

    Stage 0 solves the LASSO over the integrated dictionary of the full
    direction rectangle with the current coupling estimate applied to the
    atoms. Every later stage keeps only the active bands, splits them, and
    re-solves; the coupling vector is re-estimated from the strongest band
    centers after each stage (skipped for a single source, and kept when
    the cost has no unique minimiser).

    ``initial_coupling`` replaces the starting estimate and disables the
    bootstrap. ``band_doas`` in the result holds the final band centers;
    ``doas`` the polished estimates when polishing ran.
    """
    pcfg = pcfg or PipelineConfig()
    X = np.asarray(X)
    n = cfg.n_sensors
    if X.ndim != 2 or X.shape[0] != n:
        raise ValueError(f"expected an N x T snapshot matrix with N={n}")
    c_hat = initial_coupling or CouplingVector.identity(n)
    warnings: list[str] = []

    k_sel = pcfg.n_sources or select_model_order(X, pcfg.k_max)
    sub = reduce(X, k_sel)
    if pcfg.bootstrap and initial_coupling is None and k_sel >= 2:
        c_hat = bootstrap_coupling(cfg, sub).coupling

    grid = None
    grids: list[BandGrid] = []
    active: set[int] = set()
    trace: list[StageTrace] = []
    doas: list[tuple[float, float]] = []
    chosen: list[int] = []
    for depth, split in enumerate(pcfg.stage_schedule):
        if depth == 0:
            dic = _stage0_dictionary(cfg, *split)
            grid = dic.grid
        else:
            grid = refine(grid, active, split)
            dic = build_dictionary(cfg, grid)
        grids.append(grid)
        system = StackedSystem(_couple_and_normalize(c_hat, dic.atoms), sub.reduced, pcfg.mode)
        gmax = system.gamma_max()
        gamma = 2 * pcfg.alpha * gmax
        tol = pcfg.tol if depth == 0 else pcfg.zoom_tol
        sol = solve_lasso(system, gamma, tol=tol * gmax, max_iter=pcfg.max_iter)
        if not sol.converged:
            warnings.append(f"stage {depth}: LASSO did not converge (kkt={sol.kkt:.3g})")
        active = active_bands(sol, pcfg.rel_threshold)
        stage = StageTrace(depth, len(grid), gamma, gmax, sorted(active),
                           grid.edges[sorted(active)].tolist(), sol.iterations,
                           sol.converged, sol.kkt, False)
        trace.append(stage)
        if not active:
            warnings.append(f"stage {depth}: no sources detected")
            doas, chosen = [], []
            break

        clusters = cluster_bands(grid, active, sol.magnitudes)
        if depth == 0:
            coarse = {q: i for i, c in enumerate(clusters) for q in c}
        groups = [coarse[_ancestor(grids, c[0])] for c in clusters]
        chosen = select_clusters(clusters, groups, k_sel)
        doas = [tuple(float(v) for v in grid.centers[q]) for q in chosen]
        if len(doas) < 2:
            # One direction cannot separate the coupling from the steering vector.
            if depth == 0:
                warnings.append("coupling not re-estimated: fewer than two sources")
            continue
        try:
            c_hat = estimate_coupling(coupling_cost(doas, sub.noise_basis, cfg))
            stage.coupling_updated = True
        except DegenerateCouplingError as exc:
            warnings.append(f"stage {depth}: coupling kept ({exc})")

    if doas and len(doas) < k_sel:
        warnings.append(f"resolved {len(doas)} of {k_sel} sources")
    final_edges = grid.edges[chosen].tolist() if doas else []
    band_doas = list(doas)
    if pcfg.polish and len(doas) >= 2:
        boxes = [_polish_box(grids, q) for q in chosen]
        doas, c = refine_joint(cfg, sub.noise_basis, doas, boxes, c_hat.coeffs)
        c_hat = CouplingVector(c, n, check_decay=False)

    for w in warnings:
        log.info(w)
    return EstimationResult(doas=doas, coupling=c_hat, k=len(doas), k_selected=k_sel,
                            trace=trace, final_bands=final_edges, band_doas=band_doas,
                            warnings=warnings)


def angular_distance(est: tuple[float, float], truth: tuple[float, float]) -> tuple[float, float]:
    """(azimuth, elevation) differences in degrees; azimuth taken circularly."""
    daz = (est[0] - truth[0] + 180.0) % 360.0 - 180.0
    return daz, est[1] - truth[1]


def match_estimates(estimated, truth) -> list[int]:
    """Assignment minimising the total squared angular distance.

    Returns ``perm`` with ``estimated[perm[i]]`` paired to ``truth[i]``.
    """
    estimated, truth = list(estimated), list(truth)
    if len(estimated) != len(truth):
        raise ValueError("estimated and truth must have equal lengths")
    if not truth:
        return []
    cost = np.empty((len(truth), len(estimated)))
    for i, t in enumerate(truth):
        for j, e in enumerate(estimated):
            daz, del_ = angular_distance(e, t)
            cost[i, j] = daz ** 2 + del_ ** 2
    rows, cols = linear_sum_assignment(cost)
    return [int(c) for c in cols[np.argsort(rows)]]
