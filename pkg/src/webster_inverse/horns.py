"""Synthetic horn geometries and their forward-model ground truth."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .inverse_solver import AreaFunction
from .signal_core import DEFAULT_CONSTANTS, ImpedanceSpectrum, PhysicalConstants
from .transmission import RIGID, TwoPortChain, chain, input_impedance

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FORWARD_STEP = 1e-5  # m, segment width of the ground-truth forward model
UMBO_OFFSET = 3.5e-3  # m, medial reference point lateral of the rigid end
MEASURED_FREQS = np.arange(100.0, 20000.0 + 1.0, 100.0)
SUITE_INTERVAL = (5e-3, 45e-3)


def _positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise ConfigError(f"{name} must be positive, got {v!r}")


@dataclass(frozen=True)
class Uniform:
    area: float
    length: float

    def __post_init__(self):
        _positive(area=self.area, length=self.length)

    def area_at(self, x):
        return np.full(np.shape(x), self.area, float)


@dataclass(frozen=True)
class Exponential:
    a0: float
    flare: float  # 1/m
    length: float

    def __post_init__(self):
        _positive(a0=self.a0, length=self.length)

    def area_at(self, x):
        return self.a0 * np.exp(self.flare * np.asarray(x, float))


@dataclass(frozen=True)
class Conical:
    r0: float
    r1: float
    length: float

    def __post_init__(self):
        _positive(r0=self.r0, r1=self.r1, length=self.length)

    def area_at(self, x):
        r = self.r0 + (self.r1 - self.r0) * np.asarray(x, float) / self.length
        return np.pi * r**2


@dataclass(frozen=True)
class Parabolic:
    """Area linear in x (radius growing like a square root): A = a0 (1 + x/offset)."""

    a0: float
    offset: float
    length: float

    def __post_init__(self):
        _positive(a0=self.a0, offset=self.offset, length=self.length)

    def area_at(self, x):
        return self.a0 * (1.0 + np.asarray(x, float) / self.offset)


@dataclass(frozen=True)
class TaperedParabolic:
    """Parabolic horn with a Gaussian constriction of relative depth ``depth``."""

    a0: float
    offset: float
    length: float
    center: float
    width: float
    depth: float

    def __post_init__(self):
        _positive(a0=self.a0, offset=self.offset, length=self.length, width=self.width)
        if not 0 <= self.depth < 1:
            raise ConfigError("depth must lie in [0, 1)")

    def area_at(self, x):
        x = np.asarray(x, float)
        dip = 1.0 - self.depth * np.exp(-(((x - self.center) / self.width) ** 2))
        return self.a0 * (1.0 + x / self.offset) * dip


@dataclass(frozen=True)
class SteppedTubes:
    """Concatenated uniform tubes given as (length, diameter) pairs in metres."""

    tubes: tuple

    def __post_init__(self):
        tubes = tuple((float(l), float(d)) for l, d in self.tubes)
        if not tubes:
            raise ConfigError("stepped tube list is empty")
        for l, d in tubes:
            _positive(length=l, diameter=d)
        object.__setattr__(self, "tubes", tubes)

    @property
    def length(self):
        return sum(l for l, _ in self.tubes)

    @property
    def areas(self):
        return np.array([np.pi * d**2 / 4 for _, d in self.tubes])

    def segments(self):
        return np.array([(np.pi * d**2 / 4, l) for l, d in self.tubes])

    def area_at(self, x):
        # a sample on a boundary belongs to the medial tube, except at the end
        edges = np.cumsum([l for l, _ in self.tubes])
        idx = np.searchsorted(edges, np.asarray(x, float) + 1e-12, side="right")
        return self.areas[np.minimum(idx, len(self.tubes) - 1)]


HornSpec = Uniform | Exponential | Conical | Parabolic | TaperedParabolic | SteppedTubes


def generate_area(spec, dx: float) -> AreaFunction:
    """Point samples A(j dx), j = 0 .. round(L/dx)."""
    if not dx > 0:
        raise ValueError("dx must be positive")
    n = int(round(spec.length / dx))
    return AreaFunction(dx, spec.area_at(np.arange(n + 1) * dx))


def forward_segments(spec, h: float = FORWARD_STEP):
    """(area, length) pairs of the ground-truth model, ordered lateral to medial."""
    if isinstance(spec, SteppedTubes):
        return spec.segments()
    n = max(1, int(round(spec.length / h)))
    w = spec.length / n
    mids = (np.arange(n) + 0.5) * w
    return np.column_stack([spec.area_at(mids), np.full(n, w)])


def split_segments(segments, x):
    """Split a segment list at depth x into (lateral, medial) lists."""
    segments = np.asarray(segments, float)
    ends = np.cumsum(segments[:, 1])
    i = int(np.searchsorted(ends, x - 1e-12, side="left"))
    if i >= len(segments):
        return segments, segments[:0]
    start = ends[i] - segments[i, 1]
    lat, med = list(segments[:i]), list(segments[i + 1:])
    if x - start > 1e-12:
        lat.append((segments[i, 0], x - start))
    if ends[i] - x > 1e-12:
        med.insert(0, (segments[i, 0], ends[i] - x))
    return np.array(lat).reshape(-1, 2), np.array(med).reshape(-1, 2)


@dataclass(frozen=True)
class SyntheticItem:
    item_id: str
    spec: object
    z_ec: ImpedanceSpectrum
    z_trans_ref: ImpedanceSpectrum
    ref_depth: float
    interval: tuple = SUITE_INTERVAL

    @property
    def length(self):
        return self.spec.length

    def true_area(self, dx: float = 1e-4) -> AreaFunction:
        return generate_area(self.spec, dx)


def _chain_of(segments, freqs, constants):
    if len(segments) == 0:
        return TwoPortChain.identity(freqs)
    return chain(segments, freqs, constants=constants)


def synthesize(spec, freqs=MEASURED_FREQS, item_id: str = "horn", load=RIGID,
               ref_offset: float = UMBO_OFFSET, h: float = FORWARD_STEP,
               constants: PhysicalConstants = DEFAULT_CONSTANTS,
               interval=SUITE_INTERVAL) -> SyntheticItem:
    """Forward-model Z_ec and the reference Z_trans at depth L - ref_offset."""
    freqs = np.asarray(freqs, float)
    segs = forward_segments(spec, h)
    ref_depth = max(spec.length - ref_offset, 0.0)
    lat, med = split_segments(segs, ref_depth)
    c_lat = _chain_of(lat, freqs, constants)
    c_med = _chain_of(med, freqs, constants)
    full = TwoPortChain(freqs, c_lat.matrices @ c_med.matrices)
    z_ec = input_impedance(full, load)
    z_trans = ImpedanceSpectrum(freqs, c_lat.e22 * z_ec.values - c_lat.e12)
    return SyntheticItem(item_id, spec, z_ec, z_trans, ref_depth, tuple(interval))


MM, MM2 = 1e-3, 1e-6

# fixed evaluation suite, chosen before any tuning
SYNTHETIC_SUITE = {
    "uniform_70x25": Uniform(70 * MM2, 25 * MM),
    "uniform_50x30": Uniform(50 * MM2, 30 * MM),
    "exponential_40_m30": Exponential(40 * MM2, 30.0, 30 * MM),
    "exponential_35_m50": Exponential(35 * MM2, 50.0, 22 * MM),
    "conical_4to3": Conical(4 * MM, 3 * MM, 28 * MM),
    "conical_3.2to4.2": Conical(3.2 * MM, 4.2 * MM, 24 * MM),
    "parabolic_40_o20": Parabolic(40 * MM2, 20 * MM, 30 * MM),
    "parabolic_45_o30": Parabolic(45 * MM2, 30 * MM, 35 * MM),
    "tapered_parabolic": TaperedParabolic(45 * MM2, 20 * MM, 28 * MM, 12 * MM, 4 * MM, 0.4),
    "stepped_3": SteppedTubes(((10 * MM, 8 * MM), (8 * MM, 7 * MM), (9 * MM, 8.5 * MM))),
}

# smooth horns with known growing area functions used for the diameter check
SMOOTH_HORNS = {
    "exponential": Exponential(40 * MM2, 50.0, 30 * MM),
    "conical": Conical(3 * MM, 6 * MM, 20 * MM),
    "parabolic": Parabolic(40 * MM2, 10 * MM, 30 * MM),
}


def suite_items(freqs=MEASURED_FREQS, names=None, **kw):
    names = list(SYNTHETIC_SUITE) if names is None else names
    return [synthesize(SYNTHETIC_SUITE[n], freqs, item_id=n, **kw) for n in names]


def load_stepped_toml(path) -> SteppedTubes:
    """Read ``[[tube]]`` tables with ``length_mm`` and ``diameter_mm`` keys."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    tubes = data.get("tube")
    if not tubes:
        raise ConfigError(f"{path}: no [[tube]] entries")
    try:
        return SteppedTubes(tuple((t["length_mm"] * MM, t["diameter_mm"] * MM) for t in tubes))
    except KeyError as exc:
        raise ConfigError(f"{path}: tube entry missing {exc}") from None
