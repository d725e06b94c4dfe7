"""Lossless two-port transmission-line model of a duct with varying area.

Chains are products of per-segment matrices ordered from the lateral
(entrance) end to the medial end, evaluated for many frequencies at once.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import EmptyAreaFunction, GridMismatch
from .inverse_solver import AreaFunction
from .signal_core import DEFAULT_CONSTANTS, ImpedanceSpectrum, PhysicalConstants

log = logging.getLogger(__name__)

EA_STEP = 1e-4  # m, resolution of the electro-acoustic model
NEAR_ZERO = 1e-12


def segment_matrix(area, length, f, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Transfer matrix of one lossless duct segment.

    Scalar ``f`` gives a (2, 2) array, an array of frequencies gives (n, 2, 2).
    """
    if not (area > 0 and length > 0):
        raise ValueError("area and length must be positive")
    f = np.asarray(f, float)
    kl = 2 * np.pi * f / constants.c * length
    z0 = constants.rho_c / area
    m = np.empty(f.shape + (2, 2), complex)
    m[..., 0, 0] = np.cos(kl)
    m[..., 0, 1] = 1j * z0 * np.sin(kl)
    m[..., 1, 0] = 1j * np.sin(kl) / z0
    m[..., 1, 1] = np.cos(kl)
    return m


@dataclass(frozen=True)
class TwoPortChain:
    freqs: np.ndarray
    matrices: np.ndarray  # (n_freq, 2, 2)

    def __post_init__(self):
        f = np.asarray(self.freqs, float)
        m = np.asarray(self.matrices, complex)
        if m.shape != f.shape + (2, 2):
            raise ValueError("matrices must have shape (n_freq, 2, 2)")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "matrices", m)

    @classmethod
    def identity(cls, freqs):
        freqs = np.asarray(freqs, float)
        return cls(freqs, np.broadcast_to(np.eye(2, dtype=complex), freqs.shape + (2, 2)).copy())

    e11 = property(lambda self: self.matrices[:, 0, 0])
    e12 = property(lambda self: self.matrices[:, 0, 1])
    e21 = property(lambda self: self.matrices[:, 1, 0])
    e22 = property(lambda self: self.matrices[:, 1, 1])

    @property
    def det(self) -> np.ndarray:
        return self.e11 * self.e22 - self.e12 * self.e21

    def to_json(self) -> str:
        def cplx(a):
            return [[float(v.real), float(v.imag)] for v in a]

        return json.dumps({
            "frequency_hz": [float(f) for f in self.freqs],
            "e11": cplx(self.e11), "e12": cplx(self.e12),
            "e21": cplx(self.e21), "e22": cplx(self.e22),
        })


def resample_segments(af: AreaFunction, dx: float = EA_STEP, length: float | None = None):
    """Cut ``af`` into segments of width dx (the last may be shorter).

    Each segment takes the linearly interpolated area at its midpoint.
    Returns ``(areas, lengths)``.
    """
    if af.areas.size == 0:
        raise EmptyAreaFunction("area function is empty")
    total = af.length if length is None else float(length)
    if total <= 0:
        return np.empty(0), np.empty(0)
    n_full = int(np.floor(total / dx + 1e-9))
    edges = np.arange(n_full + 1) * dx
    if total - edges[-1] > 1e-9 * dx:
        edges = np.append(edges, total)
    lengths = np.diff(edges)
    mids = edges[:-1] + lengths / 2
    return af.area_at(mids), lengths


def _as_segments(geometry, dx):
    if isinstance(geometry, AreaFunction):
        return resample_segments(geometry, dx)
    seg = np.asarray(geometry, float).reshape(-1, 2)
    if seg.size == 0:
        raise EmptyAreaFunction("no segments given")
    return seg[:, 0], seg[:, 1]


def chain(geometry, freqs, dx: float = EA_STEP,
          constants: PhysicalConstants = DEFAULT_CONSTANTS) -> TwoPortChain:
    """Chain matrix of an AreaFunction (resampled to ``dx``) or of (area, length) pairs."""
    areas, lengths = _as_segments(geometry, dx)
    if np.any(areas <= 0):
        raise ValueError("all areas must be positive")
    freqs = np.asarray(freqs, float)
    total = TwoPortChain.identity(freqs).matrices
    for a, l in zip(areas, lengths):
        total = total @ segment_matrix(a, l, freqs, constants)
    return TwoPortChain(freqs, total)


def prefix_chains(af: AreaFunction, freqs, dx: float = EA_STEP, length: float | None = None,
                  constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Chains truncated after 0, 1, 2, ... segments.

    Returns ``(x, matrices)`` where ``matrices[j]`` is the chain of the first
    j segments and ``x[j]`` its length.
    """
    areas, lengths = resample_segments(af, dx, length)
    freqs = np.asarray(freqs, float)
    out = np.empty((areas.size + 1, freqs.size, 2, 2), complex)
    out[0] = TwoPortChain.identity(freqs).matrices
    for j, (a, l) in enumerate(zip(areas, lengths)):
        out[j + 1] = out[j] @ segment_matrix(a, l, freqs, constants)
    x = np.concatenate([[0.0], np.cumsum(lengths)])
    return x, out


@dataclass(frozen=True)
class RigidTermination:
    pass


@dataclass(frozen=True)
class TabulatedImpedance:
    """Load impedance given at increasing frequencies; values are held beyond the table."""

    freqs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs, float)
        v = np.asarray(self.values, complex)
        if f.shape != v.shape or f.size == 0:
            raise ValueError("load table must be non-empty with matching shapes")
        if np.any(np.diff(f) <= 0):
            raise ValueError("load frequencies must be increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("load impedance must be finite")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "values", v)

    def at(self, freqs):
        return np.interp(freqs, self.freqs, self.values.real) + 1j * np.interp(
            freqs, self.freqs, self.values.imag)


RIGID = RigidTermination()


def _safe_divide(num, den):
    scale = np.maximum(np.abs(num), np.abs(den))
    tiny = np.abs(den) < NEAR_ZERO * scale
    if np.any(tiny):
        # keep the result finite and of the same phase as a small reactive denominator
        den = np.where(tiny, 1j * NEAR_ZERO * np.where(scale > 0, scale, 1.0), den)
    return num / den, np.flatnonzero(tiny)


def input_impedance(ch: TwoPortChain, load=RIGID, with_flags: bool = False):
    """Z at the lateral port for a load at the medial port.

    Near-zero denominators (a rigid end at 0 Hz, for instance) are replaced by
    a tiny reactive value and reported.
    """
    if isinstance(load, RigidTermination):
        num, den = ch.e11, ch.e21
    else:
        zl = load.at(ch.freqs)
        num, den = ch.e11 * zl + ch.e12, ch.e21 * zl + ch.e22
    z, flagged = _safe_divide(num, den)
    if flagged.size:
        log.info("input impedance regularized at %d frequencies", flagged.size)
    spec = ImpedanceSpectrum(ch.freqs, z)
    return (spec, flagged) if with_flags else spec


def transfer_impedance(ch: TwoPortChain, z_ec: ImpedanceSpectrum) -> ImpedanceSpectrum:
    """Medial pressure over lateral volume velocity, e22 Z_ec - e12.

    The term with the medial load in parallel is neglected.
    """
    if ch.freqs.shape != z_ec.freqs.shape or not np.allclose(ch.freqs, z_ec.freqs, rtol=1e-12, atol=0):
        raise GridMismatch("chain and Z_ec are on different frequency grids")
    return ImpedanceSpectrum(z_ec.freqs, ch.e22 * z_ec.values - ch.e12, f_lim=z_ec.f_lim)
