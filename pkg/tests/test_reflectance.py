import numpy as np
import pytest
from hypothesis import given, strategies as st

from webster_inverse.config import LegacyOptions, PipelineConfig
from webster_inverse.errors import NoConvergence, PoleAtBin
from webster_inverse.reflectance import (
    BlackmanWindowSpec,
    blackman_window,
    impedance_from_reflectance,
    initial_z0_guess,
    reflectance_from_impedance,
    surge_adjust,
    time_reversed_addition,
)
from webster_inverse.signal_core import FrequencyGrid, ImpedanceSpectrum, extrapolate_impedance

SPEC = BlackmanWindowSpec(f_cut=28e3, f_sup=3.5e6, n_fft=65536)


def test_window_endpoints():
    assert blackman_window(SPEC, 0) == 1.0
    n_cut = SPEC.n_fft * SPEC.f_cut / SPEC.f_sup
    assert blackman_window(SPEC, int(np.ceil(n_cut))) == 0.0
    w = SPEC.weights()
    freqs = np.arange(w.size) * SPEC.f_sup / SPEC.n_fft
    assert np.all(w[freqs > SPEC.f_cut] == 0.0)
    assert np.all(np.diff(w[freqs <= SPEC.f_cut]) <= 1e-15)


def test_window_closed_form_midpoint():
    # aleph = pi/2: (1 - a + 0 - a) / 2
    spec = BlackmanWindowSpec(f_cut=1000.0, f_sup=8192.0, n_fft=8192)
    assert blackman_window(spec, 500) == pytest.approx((1 - 2 * 0.16) / 2)


@given(st.integers(min_value=0, max_value=10**6), st.floats(min_value=100.0, max_value=1e6))
def test_window_bounded(n, f_cut):
    spec = BlackmanWindowSpec(f_cut=f_cut, f_sup=3.5e6, n_fft=65536)
    w = blackman_window(spec, n)
    assert 0.0 <= w <= 1.0


def test_reflectance_formula_and_inverse():
    z = np.array([1.0, 2.0 + 1j, 0.0])
    r = reflectance_from_impedance(z, 1.0)
    assert np.allclose(r, (z - 1) / (z + 1))
    assert r[2] == -1
    assert np.allclose(impedance_from_reflectance(r[:2], 1.0), z[:2])
    with pytest.raises(PoleAtBin):
        reflectance_from_impedance(np.array([-2.0]), 2.0)


def test_initial_guess():
    cfg = PipelineConfig()
    assert initial_z0_guess(cfg) == pytest.approx(1.1455 * 351.8 / 50e-6)


def test_time_reversed_addition():
    x = np.arange(8.0)
    y = time_reversed_addition(x)
    assert y.tolist() == [0, 1 + 7, 2 + 6, 3 + 5, 4, 5, 6, 7]


def _flat(z_true, cfg):
    grid = FrequencyGrid.for_rate(cfg.f_sup)
    z = ImpedanceSpectrum(grid.freqs, np.full(grid.n_bins, z_true, complex))
    return extrapolate_impedance(z, grid)


@pytest.mark.parametrize("surge", ["surge1", "surge2"])
def test_surge_finds_matched_impedance(surge):
    # a reflectionless line over the whole band: the fixed point is Z itself
    cfg = PipelineConfig(f_sup=1e6, f_cut="off", surge=surge)
    z_true = 1.1455 * 351.8 / 70e-6
    st_ = surge_adjust(_flat(z_true, cfg), cfg)
    assert st_.converged
    assert st_.z0 == pytest.approx(z_true, rel=1e-5)
    assert abs(st_.eta) < 1e-9
    assert np.max(np.abs(st_.tdr.samples)) < 1e-5


def test_surge_trace_records_iterations():
    cfg = PipelineConfig(f_sup=1e6, f_cut=100e3)
    st_ = surge_adjust(_flat(2e7, cfg), cfg)
    assert len(st_.surge_trace) >= 2
    assert st_.surge_trace[0]["z0"] == pytest.approx(initial_z0_guess(cfg))
    ratios = [abs(t["ratio"]) for t in st_.surge_trace]
    assert ratios[-1] < 1e-6


def test_surge_no_convergence():
    cfg = PipelineConfig(f_sup=1e6, f_cut="off", surge_max_iter=2)
    with pytest.raises(NoConvergence):
        surge_adjust(_flat(3e7, cfg), cfg)


def test_geometric_surge_uses_area():
    cfg = PipelineConfig(f_sup=1e6, f_cut=100e3, surge="geometric", geometric_area=70e-6)
    st_ = surge_adjust(_flat(1e7, cfg), cfg)
    assert st_.z0 == pytest.approx(1.1455 * 351.8 / 70e-6)
    assert st_.surge_trace == ()


def test_legacy_upsampling_grid_and_amplitude():
    z_true = 6e6
    base = FrequencyGrid(40e3, 4096)
    z = extrapolate_impedance(ImpedanceSpectrum(base.freqs, np.full(base.n_bins, 2 * z_true)), base)
    plain = PipelineConfig(surge="geometric", geometric_area=1.1455 * 351.8 / z_true, f_cut=17e3,
                           legacy=LegacyOptions(n_sup=3))
    amp = plain.replace(legacy=LegacyOptions(n_sup=3, amplitude_correction=True))
    s1, s2 = surge_adjust(z, plain), surge_adjust(z, amp)
    assert s1.tdr.samples.size == 3 * 4096
    assert s1.tdr.dt == pytest.approx(1 / 120e3)
    assert np.allclose(s2.tdr.samples, 3 * s1.tdr.samples)
