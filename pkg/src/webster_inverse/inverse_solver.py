"""Layer-peeling inversion of the entrance TDR into an area function.

The medium is marched in layers of thickness dx = c dt. A layer's round trip
takes two TDR samples, so the TDR is first aggregated onto the round-trip
grid with a centred [1/2, 1, 1/2] kernel; after that every layer shifts the
backward wave by one sample relative to the forward wavefront.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import EmptyInterval, NoMinimumFound, ParseError, WavefrontLost
from .signal_core import DEFAULT_CONSTANTS, ImpedanceSpectrum, RealSignal, fmt

log = logging.getLogger(__name__)

WAVEFRONT_FLOOR = 1e-12
QUARTER_WAVE_F_MIN = 500.0  # Hz

# median offsets of the derived lengths beyond the optimal termination
EPSILON_CORRECTION = 1.8e-3
TDRMAX_CORRECTION = 0.9e-3
TDR50_CORRECTION = 4.3e-3


@dataclass(frozen=True)
class AreaFunction:
    """Point samples A(x_j), x_j = j dx.

    ``k_profile[j]`` is the reflection coefficient between sample j-1 and j
    (the first entry refers to the reference impedance at the entrance).
    """

    dx: float
    areas: np.ndarray
    k_profile: np.ndarray | None = None
    flags: tuple = ()
    epsilon: np.ndarray = field(init=False)

    def __post_init__(self):
        a = np.array(self.areas, float)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("areas must be a non-empty 1-D sequence")
        if np.any(~np.isfinite(a)) or np.any(a <= 0):
            raise ValueError("areas must be finite and positive")
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if self.k_profile is None:
            prev = np.concatenate([a[:1], a[:-1]])
            k = (prev - a) / (prev + a)
        else:
            k = np.array(self.k_profile, float)
            if k.shape != a.shape:
                raise ValueError("k_profile must match areas")
        eps = np.log(a[1:] / a[:-1]) / (2.0 * self.dx)
        for arr in (a, k, eps):
            arr.setflags(write=False)
        object.__setattr__(self, "areas", a)
        object.__setattr__(self, "k_profile", k)
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "flags", tuple(self.flags))

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.areas.size) * self.dx

    @property
    def length(self) -> float:
        return (self.areas.size - 1) * self.dx

    @property
    def diameters(self) -> np.ndarray:
        return 2.0 * np.sqrt(self.areas / np.pi)

    def area_at(self, x) -> np.ndarray:
        return np.interp(x, self.x, self.areas)

    def truncated(self, length: float) -> "AreaFunction":
        n = int(np.floor(length / self.dx + 1e-9)) + 1
        return AreaFunction(self.dx, self.areas[:n], self.k_profile[:n], self.flags)


@dataclass
class MarchState:
    """Forward and backward waves at depth index ``depth``.

    Both sequences use a local time origin at the wavefront's arrival, on the
    round-trip grid (one sample per layer).
    """

    depth: int
    forward: np.ndarray
    backward: np.ndarray


def spatial_step(f_sup: float, c: float = DEFAULT_CONSTANTS.c) -> float:
    return c / f_sup


def round_trip_samples(tdr: RealSignal, n_layers: int) -> np.ndarray:
    """Aggregate the TDR onto the two-sample round-trip grid."""
    r = tdr.samples
    if 2 * n_layers + 1 > r.size:
        raise ValueError("TDR too short for the requested depth")
    idx = 2 * np.arange(n_layers)
    before = r[idx - 1]  # index -1 wraps to the last (negative-time) sample
    return 0.5 * before + r[idx] + 0.5 * r[idx + 1]


def peel_layer(state: MarchState, area: float, clamp: float = 0.9999):
    """Strip one interface.

    Returns ``(k, next_area, next_state, clamped)``.
    """
    f, b = state.forward, state.backward
    if abs(f[0]) <= WAVEFRONT_FLOOR:
        raise WavefrontLost(f"wavefront vanished at depth index {state.depth}")
    k = b[0] / f[0]
    clamped = abs(k) > clamp
    if clamped:
        k = float(np.sign(k) * clamp)
    next_area = area * (1.0 - k) / (1.0 + k)
    with np.errstate(over="ignore", invalid="ignore"):
        g = (b - k * f) / (1.0 - k)
        f_next = (1.0 + k) * f - k * g
    # past a (near) rigid end the clamped recursion amplifies without bound
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(f_next)) and next_area > 0
            and np.isfinite(next_area)):
        raise WavefrontLost(f"marching diverged at depth index {state.depth}")
    nxt = MarchState(state.depth + 1, f_next[:-1], g[1:])
    return float(k), next_area, nxt, clamped


def invert(tdr: RealSignal, z0: float, cfg: PipelineConfig) -> AreaFunction:
    """March the TDR into depth up to ``cfg.l_max``."""
    c = cfg.constants.c
    dx = c * tdr.dt
    n_layers = int(np.floor(cfg.l_max / dx + 1e-9)) + 1
    n_layers = min(n_layers, (tdr.samples.size - 1) // 2)
    b = round_trip_samples(tdr, n_layers)
    f = np.zeros_like(b)
    f[0] = 1.0
    state = MarchState(0, f, b)

    area = cfg.constants.rho_c / z0
    areas, ks, flags = [], [], []
    n_clamped = 0
    for _ in range(n_layers):
        try:
            k, area, state, clamped = peel_layer(state, area, cfg.clamp)
        except WavefrontLost as exc:
            log.warning("%s; result truncated", exc)
            flags.append("wavefront_lost")
            break
        n_clamped += clamped
        areas.append(area)
        ks.append(k)
    if n_clamped:
        flags.append(f"clamped_reflection:{n_clamped}")
    if not areas:
        raise WavefrontLost("no layer could be peeled")
    return AreaFunction(dx, np.array(areas), np.array(ks), tuple(flags))


@dataclass(frozen=True)
class TerminationReport:
    interval: tuple[float, float]
    l_tdrmax: float
    l_tdr50: float | None
    l_epsilon: float
    l_quarter: float | None
    flags: tuple = ()

    @property
    def l_epsilon_corrected(self):
        return self.l_epsilon - EPSILON_CORRECTION

    @property
    def l_tdrmax_corrected(self):
        return self.l_tdrmax - TDRMAX_CORRECTION

    @property
    def l_tdr50_corrected(self):
        return None if self.l_tdr50 is None else self.l_tdr50 - TDR50_CORRECTION

    def length_for(self, rule: str) -> float | None:
        return {
            "epsilon": self.l_epsilon,
            "epsilon_corrected": self.l_epsilon_corrected,
            "tdrmax": self.l_tdrmax,
            "tdrmax_corrected": self.l_tdrmax_corrected,
            "tdr50": self.l_tdr50,
            "tdr50_corrected": self.l_tdr50_corrected,
        }[rule]

    def to_dict(self) -> dict:
        return {
            "interval_m": list(self.interval),
            "l_tdrmax_m": self.l_tdrmax,
            "l_tdr50_m": self.l_tdr50,
            "l_epsilon_m": self.l_epsilon,
            "l_quarter_m": self.l_quarter,
            "l_epsilon_corrected_m": self.l_epsilon_corrected,
            "l_tdrmax_corrected_m": self.l_tdrmax_corrected,
            "l_tdr50_corrected_m": self.l_tdr50_corrected,
            "flags": list(self.flags),
        }


def quarter_wave_length(z_ec: ImpedanceSpectrum, c: float = DEFAULT_CONSTANTS.c) -> float:
    """c / (4 f) at the first local minimum of |Z_ec| above 500 Hz."""
    f, v = z_ec.valid()
    mag = np.abs(v)
    for i in range(1, f.size - 1):
        if f[i] > QUARTER_WAVE_F_MIN and mag[i] < mag[i - 1] and mag[i] <= mag[i + 1]:
            return c / (4.0 * f[i])
    raise NoMinimumFound("|Z_ec| has no local minimum above 500 Hz")


def _interval_mask(x, interval):
    lo, hi = interval
    if lo > hi:
        raise EmptyInterval(f"interval [{lo:g}, {hi:g}] is empty")
    tol = 1e-9 * max(1.0, hi)
    m = (x >= lo - tol) & (x <= hi + tol)
    if not m.any():
        raise EmptyInterval(f"no samples in [{lo:g}, {hi:g}] m")
    return m


def termination_lengths(af: AreaFunction, z_ec: ImpedanceSpectrum, interval,
                        c: float = DEFAULT_CONSTANTS.c) -> TerminationReport:
    """Candidate termination lengths; argmax/argmin ties resolve to the smallest x."""
    x = af.x
    mask = _interval_mask(x, interval)
    idx = np.flatnonzero(mask)
    flags = []

    mag = np.abs(af.k_profile)
    i_max = idx[np.argmax(mag[idx])]
    l_tdrmax = float(x[i_max])

    half = 0.5 * mag[i_max]
    after = idx[(idx > i_max) & (mag[idx] <= half)]
    if after.size:
        l_tdr50 = float(x[after[0]])
    else:
        l_tdr50 = None
        flags.append("no_tdr50")

    eps_idx = idx[idx < af.epsilon.size]
    if eps_idx.size == 0:
        raise EmptyInterval("interval holds no epsilon sample")
    l_epsilon = float(x[eps_idx[np.argmin(af.epsilon[eps_idx])]])

    try:
        l_quarter = quarter_wave_length(z_ec, c)
    except NoMinimumFound:
        l_quarter = None
        flags.append("no_quarter_minimum")

    return TerminationReport((float(interval[0]), float(interval[1])), l_tdrmax, l_tdr50,
                             l_epsilon, l_quarter, tuple(flags))


# -- CSV I/O -----------------------------------------------------------------

AREA_HEADER = ("x_m", "area_m2")


def write_area_csv(path, af: AreaFunction) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(AREA_HEADER) + "\n")
        for x, a in zip(af.x, af.areas):
            fh.write(f"{fmt(x)},{fmt(a)}\n")


def read_area_csv(path) -> AreaFunction:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    if not rows or tuple(c.strip() for c in rows[0]) != AREA_HEADER:
        raise ParseError(f"{path}: expected header {','.join(AREA_HEADER)}", line=1)
    xs, areas = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            x, a = (float(c) for c in row)
        except ValueError:
            raise ParseError("expected two numeric columns", line=lineno) from None
        if a <= 0:
            raise ParseError("area must be positive", line=lineno)
        xs.append(x)
        areas.append(a)
    if len(xs) < 2:
        raise ParseError(f"{path}: need at least two samples")
    xs = np.array(xs)
    steps = np.diff(xs)
    dx = steps.mean()
    if xs[0] != 0 or np.any(np.abs(steps - dx) > 1e-6 * dx):
        raise ParseError(f"{path}: x must start at 0 with a uniform step")
    return AreaFunction(float(dx), np.array(areas))
