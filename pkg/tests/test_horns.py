from pathlib import Path

import numpy as np
import pytest

from webster_inverse.errors import ConfigError
from webster_inverse.horns import (
    SYNTHETIC_SUITE,
    Conical,
    Exponential,
    Parabolic,
    SteppedTubes,
    TaperedParabolic,
    Uniform,
    forward_segments,
    generate_area,
    load_stepped_toml,
    split_segments,
    synthesize,
)
from webster_inverse.transmission import chain, input_impedance

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_uniform_samples():
    af = generate_area(Uniform(70e-6, 25e-3), 1e-4)
    assert af.areas.size == 251
    assert np.all(af.areas == 70e-6)


def test_closed_form_ratios():
    af = generate_area(Exponential(40e-6, 50.0, 30e-3), 1e-4)
    assert af.areas[-1] / af.areas[0] == pytest.approx(np.exp(1.5))
    af = generate_area(Conical(3e-3, 6e-3, 20e-3), 1e-4)
    assert af.areas[-1] / af.areas[0] == pytest.approx(4.0)
    p = Parabolic(40e-6, 10e-3, 30e-3)
    assert p.area_at(30e-3) / p.area_at(0.0) == pytest.approx(4.0)
    t = TaperedParabolic(45e-6, 20e-3, 28e-3, 12e-3, 4e-3, 0.4)
    assert t.area_at(12e-3) == pytest.approx(0.6 * 45e-6 * 1.6)


def test_stepped_is_piecewise_constant():
    s = SteppedTubes(((10e-3, 8e-3), (8e-3, 7e-3)))
    af = generate_area(s, 1e-3)
    assert af.areas.size == 19
    assert len(set(af.areas[:10].tolist())) == 1 and len(set(af.areas[10:].tolist())) == 1
    assert af.areas[0] == pytest.approx(np.pi * 16e-6)
    assert af.areas[-1] == pytest.approx(np.pi * 12.25e-6)


def test_spec_validation():
    with pytest.raises(ConfigError):
        Uniform(-1.0, 0.02)
    with pytest.raises(ConfigError):
        SteppedTubes(())
    with pytest.raises(ConfigError):
        TaperedParabolic(45e-6, 20e-3, 28e-3, 12e-3, 4e-3, 1.2)


def test_placeholder_simulator_config():
    s = load_stepped_toml(CONFIGS / "ear_simulator_placeholder.toml")
    assert len(s.tubes) == 15
    text = (CONFIGS / "ear_simulator_placeholder.toml").read_text()
    assert "NOT AUTHORITATIVE" in text


def test_split_segments():
    segs = np.array([(1.0, 2e-3), (2.0, 3e-3)])
    lat, med = split_segments(segs, 3e-3)
    assert np.allclose(lat, [(1.0, 2e-3), (2.0, 1e-3)])
    assert np.allclose(med, [(2.0, 2e-3)])
    lat, med = split_segments(segs, 5e-3)
    assert len(med) == 0 and np.allclose(lat, segs)


def test_synthesize_reference_is_truncated_chain():
    spec = Conical(3e-3, 4e-3, 20e-3)
    f = np.array([1e3, 5e3, 9e3])
    item = synthesize(spec, f, h=1e-4)
    assert item.ref_depth == pytest.approx(16.5e-3)
    segs = forward_segments(spec, 1e-4)
    z = input_impedance(chain(segs, f))
    assert np.allclose(item.z_ec.values, z.values, rtol=1e-9)
    lat = chain(segs[:165], f)
    assert np.allclose(item.z_trans_ref.values, lat.e22 * z.values - lat.e12, rtol=1e-9)


def test_suite_is_fixed():
    assert len(SYNTHETIC_SUITE) == 10
    assert all(20e-3 <= s.length <= 35e-3 for s in SYNTHETIC_SUITE.values())
