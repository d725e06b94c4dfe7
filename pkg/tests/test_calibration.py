import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from webster_inverse.calibration import (
    BAND,
    SweepItem,
    cross_validate,
    find_l_lme,
    fit_fcut_regression,
    rms_errors,
    sweep,
)
from webster_inverse.config import PipelineConfig, fcut_model
from webster_inverse.errors import DegenerateFit, EmptyInterval, GridMismatch, InsufficientGroups
from webster_inverse.horns import SYNTHETIC_SUITE, TaperedParabolic, Uniform, generate_area, synthesize
from webster_inverse.pipeline import estimate
from webster_inverse.signal_core import ImpedanceSpectrum


def _spec(values, freqs=BAND):
    return ImpedanceSpectrum(freqs, values)


def test_rms_examples():
    rng = np.random.default_rng(0)
    z = _spec(rng.normal(size=BAND.size) + 1j * rng.normal(size=BAND.size))
    r = rms_errors(z, z)
    assert r.L_rmse == 0 and r.theta_rmse == 0 and r.n_f == 91
    r = rms_errors(_spec(2 * z.values), z)
    assert r.L_rmse == pytest.approx(6.0206, abs=1e-4) and r.theta_rmse == pytest.approx(0, abs=1e-12)
    r = rms_errors(_spec(z.values * np.exp(1j * np.radians(10))), z)
    assert r.theta_rmse == pytest.approx(10.0) and r.L_rmse == pytest.approx(0, abs=1e-12)


def test_rms_resamples_and_rejects_short_band():
    f = np.arange(500.0, 12000.0, 50.0)
    z = ImpedanceSpectrum(f, 1 + f / 1e3 + 0j)
    assert rms_errors(z, z).L_rmse == 0
    with pytest.raises(GridMismatch):
        rms_errors(ImpedanceSpectrum(f[f < 8000], np.ones((f < 8000).sum())), z)


@settings(max_examples=30)
@given(st.lists(st.tuples(st.floats(0.1, 10), st.floats(-3, 3)), min_size=91, max_size=91))
def test_rms_symmetry(vals):
    mag, ph = np.array(vals).T
    a = _spec(mag * np.exp(1j * ph))
    b = _spec(np.ones(91) + 0.5j)
    ab, ba = rms_errors(a, b), rms_errors(b, a)
    assert ab.L_rmse == pytest.approx(ba.L_rmse)
    assert ab.theta_rmse == pytest.approx(ba.theta_rmse)


def test_l_lme_uniform_tube_self_consistent():
    # reference at the rigid end; a long uniform tube extends past it
    item = synthesize(Uniform(70e-6, 25e-3), ref_offset=0.0)
    af = generate_area(Uniform(70e-6, 40e-3), 1e-4)
    l_lme, curve = find_l_lme(af, item.z_ec, item.z_trans_ref, (15e-3, 35e-3))
    assert abs(l_lme - 25e-3) <= 0.5e-3
    assert curve.L_rmse[curve.best] == pytest.approx(curve.L_rmse.min())


def test_l_lme_estimated_uniform_tube_finds_reference_depth():
    item = synthesize(Uniform(70e-6, 25e-3))
    est = estimate(item.z_ec, PipelineConfig(f_lim=20e3, f_cut=28e3, termination="epsilon"))
    l_est, _ = find_l_lme(est.area, item.z_ec, item.z_trans_ref, (15e-3, 35e-3))
    assert abs(l_est - item.ref_depth) <= 0.5e-3


def test_l_lme_single_point_and_empty_interval():
    item = synthesize(Uniform(70e-6, 25e-3))
    af = generate_area(Uniform(70e-6, 40e-3), 1e-4)
    l, curve = find_l_lme(af, item.z_ec, item.z_trans_ref, (20e-3, 20e-3))
    assert l == pytest.approx(20e-3) and curve.x.size == 1
    l, _ = find_l_lme(af, item.z_ec, item.z_trans_ref, (20.03e-3, 20.03e-3))
    assert l == pytest.approx(20.03e-3)
    with pytest.raises(EmptyInterval):
        find_l_lme(af, item.z_ec, item.z_trans_ref, (45e-3, 50e-3))


def test_l_lme_tapered_parabolic_near_reference():
    spec = TaperedParabolic(45e-6, 20e-3, 28e-3, 12e-3, 4e-3, 0.4)
    item = synthesize(spec)
    est = estimate(item.z_ec, PipelineConfig(f_lim=20e3, f_cut=28e3, termination="epsilon"))
    l, _ = find_l_lme(est.area, item.z_ec, item.z_trans_ref, (5e-3, 45e-3))
    assert abs(l - (28e-3 - 3.5e-3)) <= 1.5e-3


def test_fcut_model_values_and_affinity():
    assert fcut_model(10e3) == pytest.approx(17.38e3)
    assert fcut_model(12e3) == pytest.approx(19.48e3)
    assert fcut_model(20e3) == pytest.approx(27.88e3)
    assert fcut_model(7e3) + fcut_model(9e3) == pytest.approx(fcut_model(16e3) + 6.88e3)
    with pytest.raises(ValueError):
        fcut_model(0.0)


def test_regression():
    xs = np.array([8e3, 10e3, 12e3, 20e3])
    fit = fit_fcut_regression(np.column_stack([xs, 1.05 * xs + 6.88e3]))
    assert fit.slope == pytest.approx(1.05) and fit.intercept == pytest.approx(6.88e3)
    assert fit.r_squared == 1.0
    assert fit_fcut_regression([(1.0, 3.0), (2.0, -1.0)]).r_squared == pytest.approx(1.0)
    with pytest.raises(DegenerateFit):
        fit_fcut_regression([(1.0, 2.0), (1.0, 3.0)])


def _grouped(n_groups, jitter, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for g in range(n_groups):
        for fl in (8e3, 10e3, 12e3, 16e3, 20e3):
            out.append((g, fl, 1.05 * fl + 6.88e3 + rng.normal(0, jitter)))
    return out


def test_cross_validation_noiseless_and_resubstitution():
    cv = cross_validate(_grouped(6, 0.0), iterations=20, split=(5, 1), seed=3)
    assert np.allclose(cv.slopes, 1.05) and np.allclose(cv.errors, 0, atol=1e-6)
    cv = cross_validate(_grouped(6, 500.0), iterations=1, split=(6, 0), resubstitution=True)
    assert cv.errors[0] == pytest.approx(0, abs=1e-6)


def test_cross_validation_jitter_and_determinism():
    data = _grouped(11, 500.0)
    cv = cross_validate(data, iterations=1000, split=(10, 1), seed=7)
    assert abs(cv.errors.mean()) < 100.0
    assert cv.errors.std() < 500.0
    again = cross_validate(data, iterations=1000, split=(10, 1), seed=7)
    assert np.array_equal(cv.errors, again.errors)
    with pytest.raises(InsufficientGroups):
        cross_validate(_grouped(3, 0.0), split=(3, 1))


def _items(names):
    its = [synthesize(SYNTHETIC_SUITE[n], item_id=n) for n in names]
    return [SweepItem(i.item_id, i.z_ec, i.z_trans_ref, i.interval) for i in its]


def test_sweep_single_item_holes_and_permutation():
    items = _items(["uniform_70x25", "conical_4to3", "parabolic_40_o20"])
    rec = sweep(items[:1], [28e3, 200e3], [3.5e6], 20e3)
    assert rec.L_mlme[0, 0] == rec.L_lme[0, 0, 0]
    # a cutoff above the synthesis Nyquist is a hole, not an abort
    rec = sweep(items[:1], [28e3], [48e3], 20e3)
    assert np.isnan(rec.L_lme).all()
    a = sweep(items, [24e3, 28e3], [3.5e6], 20e3)
    b = sweep(items[::-1], [24e3, 28e3], [3.5e6], 20e3)
    assert np.array_equal(a.L_mlme, b.L_mlme) and np.array_equal(a.theta_mlme, b.theta_mlme)


def test_sweep_fsup_saturation_trend():
    items = _items(["uniform_70x25", "exponential_40_m30", "conical_4to3",
                    "parabolic_40_o20", "tapered_parabolic"])
    rec = sweep(items, np.arange(20e3, 37e3, 2e3), [192e3, 3.5e6], 20e3)
    best = np.nanmin(rec.L_mlme, axis=1)
    assert best[1] <= best[0]


def test_sweep_parallel_matches_serial():
    items = _items(["uniform_70x25", "conical_4to3", "stepped_3"])
    a = sweep(items, [24e3, 28e3], [3.5e6], 20e3, parallel=1)
    b = sweep(items, [24e3, 28e3], [3.5e6], 20e3, parallel=3)
    assert np.array_equal(a.L_lme, b.L_lme, equal_nan=True)
