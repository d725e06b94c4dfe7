"""End-to-end estimation: extrapolate, window, adjust Z0, invert, terminate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import find_l_lme, rms_errors
from .config import PipelineConfig
from .errors import ConfigError, TerminationBeyondArea
from .horns import SyntheticItem
from .inverse_solver import AreaFunction, TerminationReport, invert, termination_lengths
from .reflectance import ReflectanceState, surge_adjust
from .signal_core import FrequencyGrid, ImpedanceSpectrum, extrapolate_impedance, fft_length_for
from .transmission import TwoPortChain, chain, resample_segments, transfer_impedance


@dataclass(frozen=True)
class Estimate:
    config: PipelineConfig
    f_lim: float
    f_cut: float | None
    grid: FrequencyGrid
    reflectance: ReflectanceState
    area: AreaFunction
    termination: TerminationReport
    length: float | None
    flags: tuple

    def diagnostics(self, n_tdr: int = 2048) -> dict:
        return {
            "config": self.config.to_dict(),
            "resolved": {"f_lim_hz": self.f_lim, "f_cut_hz": self.f_cut,
                         "f_sup_hz": self.grid.f_sup, "n_fft": self.grid.n_fft,
                         "dx_m": self.area.dx, "termination_m": self.length},
            "reflectance": self.reflectance.diagnostics(n_tdr),
            "flags": list(self.flags),
        }


def analysis_grid(cfg: PipelineConfig, f_lim: float) -> FrequencyGrid:
    """Grid on which Z_ec is extrapolated (the base f_s grid in legacy mode)."""
    if cfg.legacy.upsampling:
        f_s = cfg.legacy_f_s(f_lim)
        return FrequencyGrid(f_s, fft_length_for(f_s))
    return FrequencyGrid.for_rate(cfg.f_sup)


def estimate(z_ec: ImpedanceSpectrum, cfg: PipelineConfig,
             z_trans_ref: ImpedanceSpectrum | None = None) -> Estimate:
    f_lim = z_ec.f_lim if cfg.f_lim is None else min(float(cfg.f_lim), float(z_ec.freqs[-1]))
    z = ImpedanceSpectrum(z_ec.freqs, z_ec.values, f_lim=f_lim)
    grid = analysis_grid(cfg, f_lim)
    z_ext = extrapolate_impedance(z, grid)
    state = surge_adjust(z_ext, cfg)
    af = invert(state.tdr, state.z0, cfg)

    lo, hi = cfg.resolved_interval()
    report = termination_lengths(af, z, (lo, min(hi, af.length)), cfg.constants.c)

    rule = cfg.termination
    if rule == "fixed":
        length = cfg.termination_length
    elif rule == "lme":
        if z_trans_ref is None:
            raise ConfigError("termination 'lme' needs a reference Z_trans")
        length, _ = find_l_lme(af, z, z_trans_ref, (lo, hi))
    else:
        length = report.length_for(rule)

    flags = list(af.flags) + list(report.flags)
    if not state.converged:
        flags.append("surge_iteration_cap")
    if length is None:
        flags.append(f"no_{rule}_length")
    f_cut = cfg.resolved_f_cut(z_ext.f_lim)
    return Estimate(cfg, f_lim, f_cut, FrequencyGrid(1.0 / state.tdr.dt, state.tdr.samples.size),
                    state, af, report, length, tuple(flags))


def predict_ztrans(z_ec: ImpedanceSpectrum, af: AreaFunction, termination: float) -> ImpedanceSpectrum:
    """Z_trans for the area function truncated at ``termination`` (m)."""
    if termination > af.length + 1e-9 * max(af.dx, 1.0):
        raise TerminationBeyondArea(
            f"termination {termination:g} m beyond area function end {af.length:g} m")
    if termination < 0:
        raise ValueError("termination must be non-negative")
    areas, lengths = resample_segments(af, length=termination)
    if areas.size == 0:
        ch = TwoPortChain.identity(z_ec.freqs)
    else:
        ch = chain(np.column_stack([areas, lengths]), z_ec.freqs)
    return transfer_impedance(ch, z_ec)


def interior_diameter_error(af: AreaFunction, spec, f_cut: float, c: float) -> dict:
    """Max relative diameter deviation away from the ends.

    One resolution cell c / (2 f_cut) is excluded at each end, where the
    band limit smears the entrance and the termination.
    """
    margin = c / (2.0 * f_cut)
    x = af.x
    sel = (x >= margin) & (x <= spec.length - margin)
    true_d = 2 * np.sqrt(spec.area_at(x[sel]) / np.pi)
    dev = af.diameters[sel] / true_d - 1
    return {"max_abs_rel_dev": float(np.max(np.abs(dev))) if dev.size else float("nan"),
            "margin_m": margin, "n_points": int(dev.size)}


def roundtrip(item: SyntheticItem, cfg: PipelineConfig) -> dict:
    """Estimate from synthetic Z_ec and score the Z_trans predictions against the reference."""
    est = estimate(item.z_ec, cfg, z_trans_ref=item.z_trans_ref)
    l_lme, curve = find_l_lme(est.area, item.z_ec, item.z_trans_ref, cfg.resolved_interval())
    out = {
        "item_id": item.item_id,
        "true_length_m": item.length,
        "reference_depth_m": item.ref_depth,
        "z0": est.reflectance.z0,
        "z0_geometric": cfg.constants.rho_c / float(item.spec.area_at(0.0)),
        "surge_iterations": len(est.reflectance.surge_trace),
        "termination": est.termination.to_dict(),
        "l_lme_m": l_lme,
        "lme": {"L_rmse_db": float(curve.L_rmse[curve.best]),
                "theta_rmse_deg": float(curve.theta_rmse[curve.best])},
        "flags": list(est.flags),
    }
    if est.length is not None:
        length = min(max(est.length, 0.0), est.area.length)
        rep = rms_errors(predict_ztrans(item.z_ec, est.area, length), item.z_trans_ref)
        out["selected"] = {"rule": cfg.termination, "length_m": length, **rep.to_dict()}
    if est.f_cut is not None:
        out["diameter"] = interior_diameter_error(est.area, item.spec, est.f_cut, cfg.constants.c)
    return out
