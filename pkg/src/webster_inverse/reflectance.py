"""Windowed reflectance, entrance TDR, and characteristic-impedance adjustment."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .errors import NoConvergence, NonPositiveZ0, PoleAtBin
from .signal_core import ImpedanceSpectrum, RealSignal, amplitude_correction_legacy

log = logging.getLogger(__name__)

BLACKMAN_A = 0.16


@dataclass(frozen=True)
class BlackmanWindowSpec:
    f_cut: float
    f_sup: float
    n_fft: int
    a: float = BLACKMAN_A

    def phase(self, n):
        return np.pi * np.asarray(n, float) * self.f_sup / (self.n_fft * self.f_cut)

    def weights(self) -> np.ndarray:
        """Weights for bins 0..N/2."""
        return _blackman(self.phase(np.arange(self.n_fft // 2 + 1)), self.a)


def _blackman(aleph, a):
    # (1 - a + cos + a cos2) / 2 regrouped so that W(0) is exactly 1
    w = (1.0 + np.cos(aleph)) / 2.0 + a * (np.cos(2.0 * aleph) - 1.0) / 2.0
    return np.where(aleph <= np.pi, np.clip(w, 0.0, 1.0), 0.0)


def blackman_window(spec: BlackmanWindowSpec, n) -> float:
    return float(_blackman(spec.phase(n), spec.a))


@dataclass(frozen=True)
class ReflectanceState:
    z0: float
    r_freq: np.ndarray
    tdr: RealSignal
    window: BlackmanWindowSpec | None
    surge_trace: tuple = ()
    eta: float = 0.0
    converged: bool = True

    @property
    def z0_complex(self) -> complex:
        return self.z0 * (1 + 1j * self.eta)

    def diagnostics(self, n_samples: int | None = None) -> dict:
        tdr = self.tdr.samples if n_samples is None else self.tdr.samples[:n_samples]
        return {
            "z0": self.z0,
            "eta": self.eta,
            "converged": self.converged,
            "surge_trace": list(self.surge_trace),
            "window": None
            if self.window is None
            else {"a": self.window.a, "f_cut_hz": self.window.f_cut,
                  "f_sup_hz": self.window.f_sup, "n_fft": self.window.n_fft},
            "tdr": {"dt": self.tdr.dt, "n_total": int(self.tdr.samples.size),
                    "samples": [float(x) for x in tdr]},
        }


def reflectance_from_impedance(z_ec, z0) -> np.ndarray:
    """Bin-wise (Z - z0) / (Z + z0)."""
    z = z_ec.values if isinstance(z_ec, ImpedanceSpectrum) else np.asarray(z_ec, complex)
    den = z + z0
    bad = den == 0
    if np.any(bad):
        raise PoleAtBin(f"Z_ec equals -z0 at bin(s) {np.flatnonzero(bad)[:5].tolist()}")
    return (z - z0) / den


def impedance_from_reflectance(r, z0) -> np.ndarray:
    r = np.asarray(r, complex)
    return z0 * (1 + r) / (1 - r)


def initial_z0_guess(cfg: PipelineConfig) -> float:
    return cfg.constants.rho_c / cfg.a_guess


def tdr_from_spectrum(spectrum, n_fft: int, dt: float) -> RealSignal:
    """Real inverse transform of a single-sided spectrum (conjugate symmetry implied)."""
    return RealSignal(np.fft.irfft(spectrum, n=n_fft), dt)


def time_reversed_addition(samples) -> np.ndarray:
    """Fold the negative-time half onto positive times: x[n] += x[N-n], 0 < n < N/2."""
    x = np.array(samples, float)
    n = x.size
    pos = np.arange(1, n // 2)
    x[pos] = x[pos] + x[n - pos]
    return x


def _tdr_at_zero(spec, n_fft):
    # irfft(spec)[0] without the transform
    inner = 2.0 * spec[1:-1].real.sum()
    return (spec[0].real + inner + spec[-1].real) / n_fft


class _ReflectanceSynth:
    """Maps an impedance estimate to the reflectance on the synthesis grid."""

    def __init__(self, z_ext: ImpedanceSpectrum, cfg: PipelineConfig):
        self.z = z_ext.values
        n_base = 2 * (len(z_ext) - 1)
        df = float(z_ext.freqs[1] - z_ext.freqs[0])
        legacy = cfg.legacy
        self.n_up = legacy.n_sup if legacy.upsampling else 1
        self.amp = legacy.upsampling and legacy.amplitude_correction
        self.n_fft = n_base * self.n_up
        self.f_sup = self.n_fft * df
        f_cut = cfg.resolved_f_cut(z_ext.f_lim)
        if f_cut is None:
            self.window = None
            self.w = np.ones(self.n_fft // 2 + 1)
        else:
            self.window = BlackmanWindowSpec(f_cut, self.f_sup, self.n_fft, cfg.window_a)
            self.w = self.window.weights()
        self.m_w = self.w.mean()

    def reflectance(self, zc) -> np.ndarray:
        r = reflectance_from_impedance(self.z, zc)
        if self.n_up > 1:
            padded = np.zeros(self.n_fft // 2 + 1, complex)
            padded[: r.size] = r
            r = padded
        return r

    def windowed(self, zc, corrected: bool = False) -> np.ndarray:
        wr = self.w * self.reflectance(zc)
        if corrected and self.amp:
            # applied after the Z0 loop: the scale leaves the fixed point alone
            # but would multiply the loop gain by n_sup
            wr = amplitude_correction_legacy(wr, self.n_up)
        return wr


def surge_adjust(z_ec: ImpedanceSpectrum, cfg: PipelineConfig) -> ReflectanceState:
    """Adjust Z0 at the entrance and return the windowed reflectance and TDR.

    ``z_ec`` must already be extrapolated onto a full single-sided grid (the
    f_sup grid, or the base f_s grid when legacy upsampling is enabled).
    surge1 iterates Z0 <- Z0 (1 + m_R/m_W), where m_R is the mean real part of
    the windowed reflectance and m_W the mean window weight. surge2 runs the
    same loop on a complex impedance Z0 (1 + j eta), driving the mean
    imaginary part to zero as well. geometric uses rho c / A(0) directly.
    """
    synth = _ReflectanceSynth(z_ec, cfg)
    trace = []
    eta = 0.0
    converged = True

    if cfg.surge == "geometric":
        z0 = cfg.constants.rho_c / cfg.geometric_area
    else:
        z0 = initial_z0_guess(cfg)
        complex_z0 = cfg.surge == "surge2"
        converged = False
        step = np.inf
        for k in range(cfg.surge_max_iter):
            wr = synth.windowed(z0 * (1 + 1j * eta))
            ratio = wr.real.mean() / synth.m_w
            trace.append({"iteration": k, "z0": z0, "eta": eta, "ratio": float(ratio),
                          "tdr0": float(_tdr_at_zero(wr, synth.n_fft))})
            factor = 1.0 + ratio
            if factor <= 0:
                raise NonPositiveZ0(f"surge iterate {k} drives z0 to {z0 * factor:g}")
            z_next = z0 * factor
            step = abs(z_next / z0 - 1.0)
            if complex_z0:
                d_eta = wr.imag.mean() / synth.m_w
                eta += d_eta
                step = max(step, abs(d_eta))
            z0 = z_next
            if step < cfg.surge_tol:
                converged = True
                break
        if not converged:
            if step > 1e-4:
                raise NoConvergence(f"surge did not converge in {cfg.surge_max_iter} steps "
                                    f"(last relative step {step:.2e})")
            log.warning("surge stopped at iteration cap with relative step %.2e", step)

    wr = synth.windowed(z0 * (1 + 1j * eta), corrected=True)
    samples = np.fft.irfft(wr, n=synth.n_fft)
    if cfg.legacy.time_reversed_addition:
        samples = time_reversed_addition(samples)
    tdr = RealSignal(samples, 1.0 / synth.f_sup)
    return ReflectanceState(z0=float(z0), r_freq=wr, tdr=tdr, window=synth.window,
                            surge_trace=tuple(trace), eta=float(eta), converged=converged)
