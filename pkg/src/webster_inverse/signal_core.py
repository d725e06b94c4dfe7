"""Physical constants, frequency grids, impedance spectra and their extrapolation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptySpectrum, MismatchedGrid, ParseError

MIN_FFT_LENGTH = 2**12
MAX_BIN_SPACING = 80.0  # Hz


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 351.8
    rho: float = 1.1455
    temperature: float = 308.0

    def __post_init__(self):
        if not (self.c > 0 and self.rho > 0):
            raise ValueError("c and rho must be positive")

    @property
    def rho_c(self):
        return self.rho * self.c


DEFAULT_CONSTANTS = PhysicalConstants()


def fft_length_for(f_sup: float) -> int:
    """Smallest power of two >= 4096 whose bin spacing f_sup/N is at most 80 Hz."""
    if not f_sup > 0:
        raise ValueError("f_sup must be positive")
    n = MIN_FFT_LENGTH
    while f_sup / n > MAX_BIN_SPACING:
        n *= 2
    return n


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform single-sided grid 0, df, ..., f_sup/2 with df = f_sup / n_fft.

    ``n_fft`` is a power of two when built by :meth:`for_rate`; the legacy
    integer-upsampling path may produce other even lengths.
    """

    f_sup: float
    n_fft: int

    def __post_init__(self):
        if self.f_sup <= 0:
            raise ValueError("f_sup must be positive")
        if self.n_fft < MIN_FFT_LENGTH or self.n_fft % 2:
            raise ValueError(f"n_fft must be even and >= {MIN_FFT_LENGTH}")
        if self.df > MAX_BIN_SPACING + 1e-9:
            raise ValueError(f"bin spacing {self.df:.3g} Hz exceeds {MAX_BIN_SPACING} Hz")

    @classmethod
    def for_rate(cls, f_sup: float) -> "FrequencyGrid":
        return cls(float(f_sup), fft_length_for(f_sup))

    @property
    def df(self) -> float:
        return self.f_sup / self.n_fft

    @property
    def dt(self) -> float:
        return 1.0 / self.f_sup

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.df


@dataclass(frozen=True)
class ImpedanceSpectrum:
    """Complex acoustic impedance (Pa s/m^3) sampled at increasing frequencies.

    ``f_lim`` marks the highest valid frequency; it defaults to the last one.
    """

    freqs: np.ndarray
    values: np.ndarray
    f_lim: float | None = None

    def __post_init__(self):
        f = _frozen(self.freqs, float)
        v = _frozen(self.values, complex)
        if f.ndim != 1 or f.shape != v.shape:
            raise ValueError("freqs and values must be 1-D and of equal length")
        if f.size == 0:
            raise EmptySpectrum("impedance spectrum has no points")
        if np.any(np.diff(f) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(v))):
            raise ValueError("impedance spectrum contains NaN or Inf")
        f_lim = float(f[-1]) if self.f_lim is None else float(self.f_lim)
        if f_lim > f[-1] * (1 + 1e-12):
            raise ValueError("f_lim exceeds the highest frequency present")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "f_lim", f_lim)

    def __len__(self):
        return self.freqs.size

    def valid(self):
        """Points at or below f_lim."""
        m = self.freqs <= self.f_lim * (1 + 1e-12)
        return self.freqs[m], self.values[m]

    def resample(self, freqs) -> "ImpedanceSpectrum":
        """Linear interpolation of real and imaginary parts onto ``freqs``."""
        freqs = np.asarray(freqs, float)
        vals = np.interp(freqs, self.freqs, self.values.real) + 1j * np.interp(
            freqs, self.freqs, self.values.imag
        )
        return ImpedanceSpectrum(freqs, vals)


@dataclass(frozen=True)
class RealSignal:
    samples: np.ndarray
    dt: float

    def __post_init__(self):
        s = _frozen(self.samples, float)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not np.all(np.isfinite(s)):
            raise ValueError("signal contains NaN or Inf")
        object.__setattr__(self, "samples", s)

    @property
    def times(self):
        return np.arange(self.samples.size) * self.dt


def extrapolate_impedance(z: ImpedanceSpectrum, grid: FrequencyGrid) -> ImpedanceSpectrum:
    """Place ``z`` on every bin of ``grid``.

    Below the first valid frequency the first valid value is held, between the
    first valid frequency and f_lim values are interpolated linearly, and
    above f_lim the impedance is zero (reflectance of -1).
    """
    f, v = z.valid()
    if f.size == 0:
        raise EmptySpectrum("no valid points at or below f_lim")
    nyquist = grid.f_sup / 2
    if z.f_lim > nyquist * (1 + 1e-12):
        raise MismatchedGrid(f"f_lim {z.f_lim:g} Hz above grid Nyquist {nyquist:g} Hz")
    bins = grid.freqs
    out = np.zeros(bins.size, complex)
    inside = bins <= z.f_lim * (1 + 1e-12)
    out[inside] = np.interp(bins[inside], f, v.real) + 1j * np.interp(bins[inside], f, v.imag)
    return ImpedanceSpectrum(bins, out, f_lim=min(z.f_lim, float(bins[-1])))


def amplitude_correction_legacy(r_spectrum, n_sup: int) -> np.ndarray:
    """Scale a reflectance spectrum by the integer upsampling factor."""
    if n_sup < 1:
        raise ValueError("n_sup must be >= 1")
    return np.asarray(r_spectrum, complex) * n_sup


# -- CSV I/O -----------------------------------------------------------------

IMPEDANCE_HEADER = ("frequency_hz", "real", "imag")


def fmt(x: float) -> str:
    """Shortest round-tripping float repr (<= 17 significant digits)."""
    return repr(float(x))


def write_impedance_csv(path, z: ImpedanceSpectrum) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(IMPEDANCE_HEADER) + "\n")
        for f, v in zip(z.freqs, z.values):
            fh.write(f"{fmt(f)},{fmt(v.real)},{fmt(v.imag)}\n")


def read_impedance_csv(path, f_lim: float | None = None) -> ImpedanceSpectrum:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptySpectrum(f"{path}: empty file")
    header = tuple(c.strip() for c in rows[0])
    if header != IMPEDANCE_HEADER:
        raise ParseError(f"expected header {','.join(IMPEDANCE_HEADER)}, got {','.join(header)}", line=1)
    freqs, vals = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 columns, got {len(row)}", line=lineno)
        try:
            f, re_, im = (float(c) for c in row)
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if not all(math.isfinite(x) for x in (f, re_, im)):
            raise ParseError("non-finite value", line=lineno)
        if freqs and f <= freqs[-1]:
            raise ParseError("frequencies must be strictly increasing", line=lineno)
        freqs.append(f)
        vals.append(complex(re_, im))
    if not freqs:
        raise EmptySpectrum(f"{path}: no data rows")
    if f_lim is not None:
        f_lim = min(f_lim, freqs[-1])
    return ImpedanceSpectrum(np.array(freqs), np.array(vals), f_lim=f_lim)
