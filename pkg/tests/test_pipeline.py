import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ucadoa import (CouplingVector, PipelineConfig, SourceSet, match_estimates, reduce,
                    reference_array, reference_coupling, reference_sources, run, synthesize)
from ucadoa.bootstrap import azimuth_candidates, azimuth_spectrum, bootstrap_coupling
from ucadoa.coupling import coupling_cost, estimate_coupling
from ucadoa.pipeline import angular_distance, cluster_bands, select_clusters
from ucadoa.dictionary import uniform_grid

FINAL_AZ = 360 / 120 / 10 / 3
FINAL_EL = 90 / 30 / 10 / 3


def max_errors(doas, truth):
    perm = match_estimates(doas, truth)
    errs = np.array([angular_distance(doas[perm[i]], t) for i, t in enumerate(truth)])
    return np.abs(errs).max(axis=0)


@pytest.fixture(scope="module")
def noiseless_result(noiseless, cfg):
    return run(noiseless[0], cfg)


# -- end to end ------------------------------------------------------------------

def test_noiseless_reference(noiseless_result):
    res = noiseless_result
    assert res.k == 3 and not res.warnings
    daz, del_ = max_errors(res.doas, reference_sources().angles)
    assert daz < FINAL_AZ and del_ < FINAL_EL
    c = reference_coupling().coeffs
    assert np.linalg.norm(res.coupling.coeffs - c) / np.linalg.norm(c) < 1e-6


def test_polish_boxes_contain_sources(noiseless_result):
    """Band centers can sit a few bands off the source, but the polish box
    (stage-0 ancestor widened by one band on each side) always holds it."""
    res = noiseless_result
    grid0 = uniform_grid(120, 30)
    truth = reference_sources().angles
    perm = match_estimates(res.band_doas, truth)
    for i, (az, el) in enumerate(truth):
        (q,) = grid0.locate(*res.band_doas[perm[i]])
        a0, a1, e0, e1 = grid0.edges[q]
        assert (az - (a0 - 3.0)) % 360.0 <= (a1 + 3.0) - (a0 - 3.0)
        assert e0 - 3.0 <= el <= e1 + 3.0


def test_zoom_consistency(noiseless_result):
    """Each final band center lies in an active band of every stage."""
    res = noiseless_result
    for az, el in res.band_doas:
        for stage in res.trace:
            assert any(_inside(az, el, e) for e in stage.active_edges)


def _inside(az, el, e):
    daz = (az - e[0]) % 360.0
    return daz <= e[1] - e[0] and e[2] <= el <= e[3]


def test_monotone_localisation(noiseless_result):
    res = noiseless_result
    areas = []
    for stage in res.trace:
        e = np.array(stage.active_edges)
        areas.append(np.unique(np.round((e[:, 1] - e[:, 0]) * (e[:, 3] - e[:, 2]), 12)))
    assert all(len(a) == 1 for a in areas)
    assert areas[0][0] == pytest.approx(3 * 3)
    assert areas[1][0] == pytest.approx(areas[0][0] / 100)
    assert areas[2][0] == pytest.approx(areas[1][0] / 9)


def test_fixed_point_at_truth(noiseless, cfg):
    """Starting at the true coupling, one pass keeps DOAs and coupling."""
    res = run(noiseless[0], cfg, initial_coupling=reference_coupling())
    daz, del_ = max_errors(res.doas, reference_sources().angles)
    assert daz < FINAL_AZ and del_ < FINAL_EL
    assert np.linalg.norm(res.coupling.coeffs - reference_coupling().coeffs) < 1e-6


def test_without_polish_band_centers_reported(noiseless, cfg):
    res = run(noiseless[0], cfg, PipelineConfig(polish=False, bootstrap=False),
              initial_coupling=reference_coupling())
    assert res.doas == res.band_doas and res.k == 3
    for w in res.final_bands:
        assert w[1] - w[0] == pytest.approx(FINAL_AZ) and w[3] - w[2] == pytest.approx(FINAL_EL)


@pytest.mark.parametrize("az, el", [(100.05, 40.05), (243.45, 18.35), (0.05, 80.05),
                                    (200.15, 5.05)])
def test_single_source_band_center(cfg, az, el):
    X, _ = synthesize(cfg, SourceSet.from_angles([(az, el)]), None, 200, 30.0, seed=0)
    res = run(X, cfg)
    assert res.k == 1
    assert res.doas[0] == pytest.approx((az, el), abs=1e-9)
    assert np.array_equal(res.coupling.coeffs, CouplingVector.identity(15).coeffs)


def test_identity_coupling_close_to_estimation_floor(cfg):
    """At 20 dB the coupling error stays within a small factor of an oracle
    that knows the true DOAs."""
    e1 = CouplingVector.identity(15).coeffs
    ours, oracle = [], []
    for seed in range(8):
        X, _ = synthesize(cfg, reference_sources(), None, 200, 20.0, seed=seed)
        ours.append(np.linalg.norm(run(X, cfg).coupling.coeffs - e1))
        c = estimate_coupling(coupling_cost(reference_sources().angles,
                                            reduce(X, 3).noise_basis, cfg))
        oracle.append(np.linalg.norm(c.coeffs - e1))
    assert np.median(ours) < 2 * np.median(oracle)
    assert np.max(ours) < 0.02


def test_identity_coupling_error_scales_with_snr(cfg):
    e1 = CouplingVector.identity(15).coeffs
    med = []
    for snr in (20.0, 40.0):
        errs = [np.linalg.norm(run(synthesize(cfg, reference_sources(), None, 200, snr,
                                              seed=s)[0], cfg).coupling.coeffs - e1)
                for s in range(4)]
        med.append(np.median(errs))
    # 20 dB more SNR shrinks the error by about 10x.
    assert 5 < med[0] / med[1] < 20
    assert med[1] < 1e-3


@pytest.mark.xfail(strict=True, reason="below the statistical floor at 20 dB, T = 200: even "
                   "with the true DOAs the coupling error is about 3e-3")
def test_identity_coupling_1e3_at_20db(cfg):
    e1 = CouplingVector.identity(15).coeffs
    errs = [np.linalg.norm(run(synthesize(cfg, reference_sources(), None, 200, 20.0,
                                          seed=s)[0], cfg).coupling.coeffs - e1)
            for s in range(3)]
    assert max(errs) < 1e-3


def test_no_sources_detected(cfg):
    X, _ = synthesize(cfg, reference_sources(), reference_coupling(), 200, 20.0, seed=0)
    res = run(X, cfg, PipelineConfig(alpha=1.0))
    assert res.k == 0 and not res.detected
    assert any("no sources detected" in w for w in res.warnings)


def test_known_source_count_and_json(cfg):
    X, _ = synthesize(cfg, reference_sources(), reference_coupling(), 200, 20.0, seed=3)
    res = run(X, cfg, PipelineConfig(n_sources=3))
    d = json.loads(res.to_json())
    assert d["k"] == 3 and len(d["doas"]) == 3 and len(d["trace"]) == 3
    assert len(d["coupling"]) == 8


def test_bad_input_shape(cfg):
    with pytest.raises(ValueError):
        run(np.zeros((14, 20)), cfg)


def test_pipeline_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(alpha=0.0)
    with pytest.raises(ValueError):
        PipelineConfig(stage_schedule=[])
    with pytest.raises(ValueError):
        PipelineConfig.from_dict({"alpha": 0.3, "gamma": 1.0})


# -- bootstrap -------------------------------------------------------------------

def test_bootstrap_needs_two_sources(cfg):
    X, _ = synthesize(cfg, SourceSet.from_angles([(10.0, 30.0)]), None, 50, 20.0, seed=0)
    with pytest.raises(ValueError):
        bootstrap_coupling(cfg, reduce(X, 1))


def test_bootstrap_noiseless(noiseless, cfg):
    boot = bootstrap_coupling(cfg, reduce(noiseless[0], 3))
    c = reference_coupling().coeffs
    assert np.linalg.norm(boot.coupling.coeffs - c) / np.linalg.norm(c) < 1e-3
    daz, del_ = max_errors(boot.doas, reference_sources().angles)
    assert daz < 0.5 and del_ < 0.5


def test_azimuth_spectrum_nulls(noiseless, cfg):
    az = np.arange(0.0, 360.0, 0.5)
    spectrum = azimuth_spectrum(cfg, reduce(noiseless[0], 3).noise_basis, az)
    fams = azimuth_candidates(spectrum, az, 4)
    found = [a for f in fams for a in f]
    for true_az, _ in reference_sources().angles:
        d = min(abs((a - true_az + 180) % 360 - 180) for a in found)
        assert d <= 3.0


def test_azimuth_candidates_pairs_antipodes():
    az = np.arange(0.0, 360.0, 1.0)
    spectrum = np.ones_like(az)
    spectrum[[10, 190, 100]] = [0.1, 0.2, 0.15]
    fams = azimuth_candidates(spectrum, az, 2)
    assert fams == [[10.0, 190.0], [100.0]]


# -- helpers ---------------------------------------------------------------------

def test_cluster_bands_merges_neighbours():
    grid = uniform_grid(12, 3)
    mags = np.zeros(len(grid))
    mags[[0, 1, 11, 20]] = [1.0, 0.5, 0.7, 0.9]
    clusters = cluster_bands(grid, [0, 1, 11, 20], mags)
    # 0, 1 and 11 touch across the 360 -> 0 seam.
    assert clusters == [[0, 11, 1], [20]]


def test_select_clusters_spreads_over_coarse_groups():
    clusters = [[5], [7, 8], [2], [9]]
    # Two fine clusters descend from coarse group 0, the weaker source is group 1.
    assert select_clusters(clusters, [0, 0, 1, 2], 3) == [5, 2, 9]
    assert select_clusters(clusters, [0, 0, 1, 2], 2) == [5, 2]
    # Fewer groups than sources: the group's next cluster fills in.
    assert select_clusters(clusters, [0, 0, 1, 1], 3) == [5, 2, 7]


def test_split_source_does_not_displace_weak_source(cfg):
    # At this seed zooming splits the 243 deg source into two fine clusters that
    # outrank the near-horizon source; every source must still be resolved.
    X, truth = synthesize(cfg, reference_sources(), reference_coupling(), 200, 20.0, seed=118)
    res = run(X, cfg)
    assert res.k == 3
    assert np.all(max_errors(res.doas, truth.angles) < 1.0)


def test_match_examples():
    t = [(10.0, 20.0), (200.0, 50.0)]
    assert match_estimates(t, t) == [0, 1]
    assert match_estimates(t[::-1], t) == [1, 0]
    assert angular_distance((359.9, 10.0), (0.1, 10.0))[0] == pytest.approx(-0.2)
    assert match_estimates([(0.1, 5.0), (180.0, 5.0)], [(179.0, 5.0), (359.9, 5.0)]) == [1, 0]
    with pytest.raises(ValueError):
        match_estimates(t, t[:1])


angle_pairs = st.tuples(st.integers(0, 35999).map(lambda v: v / 100),
                        st.integers(0, 9000).map(lambda v: v / 100))


@given(st.lists(angle_pairs, min_size=1, max_size=5, unique=True), st.randoms())
def test_match_recovers_permutation(truth, rnd):
    perm = list(range(len(truth)))
    rnd.shuffle(perm)
    est = [truth[p] for p in perm]
    got = match_estimates(est, truth)
    assert [est[g] for g in got] == truth


@given(angle_pairs, angle_pairs)
def test_angular_distance_circular(a, b):
    daz, _ = angular_distance(a, b)
    assert -180 <= daz < 180
    assert abs(daz) == pytest.approx(min(abs(a[0] - b[0]), 360 - abs(a[0] - b[0])), abs=1e-9)
