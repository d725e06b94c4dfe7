"""Error metrics, optimal-termination search, parameter sweeps and f_cut regression."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig, fcut_model  # noqa: F401  (re-exported)
from .errors import DegenerateFit, EmptyInterval, GridMismatch, InsufficientGroups, WebsterError
from .inverse_solver import AreaFunction
from .signal_core import ImpedanceSpectrum, fmt
from .transmission import EA_STEP, prefix_chains, resample_segments, chain

log = logging.getLogger(__name__)

BAND = np.arange(1000.0, 10000.0 + 1.0, 100.0)


def on_band(z: ImpedanceSpectrum, band=BAND) -> np.ndarray:
    """Values of z on the band, selected exactly or interpolated linearly."""
    f = z.freqs
    if band[0] < f[0] * (1 - 1e-12) or band[-1] > f[-1] * (1 + 1e-12):
        raise GridMismatch(f"spectrum covers {f[0]:g}-{f[-1]:g} Hz, band needs "
                           f"{band[0]:g}-{band[-1]:g} Hz")
    idx = np.searchsorted(f, band)
    idx = np.minimum(idx, f.size - 1)
    if np.allclose(f[idx], band, rtol=1e-12, atol=1e-9):
        return z.values[idx]
    return np.interp(band, f, z.values.real) + 1j * np.interp(band, f, z.values.imag)


@dataclass(frozen=True)
class ErrorReport:
    L_rmse: float
    theta_rmse: float
    level_error: np.ndarray
    phase_error: np.ndarray
    band: tuple = (float(BAND[0]), float(BAND[-1]))

    @property
    def n_f(self) -> int:
        return int(self.level_error.size)

    def to_dict(self) -> dict:
        return {"L_rmse_db": self.L_rmse, "theta_rmse_deg": self.theta_rmse,
                "band_hz": list(self.band), "n_f": self.n_f}


def _errors(z_mod, z_ref):
    """Level (dB) and principal-value phase (deg) of z_mod / z_ref."""
    level = 20 * np.log10(np.abs(z_mod)) - 20 * np.log10(np.abs(z_ref))
    d = np.angle(z_mod) - np.angle(z_ref)
    # wrap into (-pi, pi]
    phase = np.degrees(np.pi - np.mod(np.pi - d, 2 * np.pi))
    return level, phase


def rms_errors(z_mod: ImpedanceSpectrum, z_ref: ImpedanceSpectrum, band=BAND) -> ErrorReport:
    level, phase = _errors(on_band(z_mod, band), on_band(z_ref, band))
    return ErrorReport(float(np.sqrt(np.mean(level**2))), float(np.sqrt(np.mean(phase**2))),
                       level, phase, (float(band[0]), float(band[-1])))


@dataclass(frozen=True)
class LmeCurve:
    x: np.ndarray
    L_rmse: np.ndarray
    theta_rmse: np.ndarray

    @property
    def best(self) -> int:
        return int(np.argmin(self.L_rmse))  # first minimum = smallest x

    @property
    def l_lme(self) -> float:
        return float(self.x[self.best])


def _curve_from_chains(x, mats, zb, zr):
    zt = mats[:, :, 1, 1] * zb - mats[:, :, 0, 1]
    level, phase = _errors(zt, zr)
    return LmeCurve(x, np.sqrt(np.mean(level**2, axis=1)), np.sqrt(np.mean(phase**2, axis=1)))


def find_l_lme(af: AreaFunction, z_ec: ImpedanceSpectrum, z_trans_ref: ImpedanceSpectrum,
               interval, dx: float = EA_STEP, band=BAND):
    """Termination length minimizing the level error of the predicted Z_trans.

    Candidates lie on the dx grid inside the interval. Returns ``(l_lme, curve)``.
    """
    lo, hi = float(interval[0]), min(float(interval[1]), af.length)
    if lo > hi + 1e-12:
        raise EmptyInterval(f"interval [{interval[0]:g}, {interval[1]:g}] m lies beyond "
                            f"the area function ({af.length:g} m)")
    zb, zr = on_band(z_ec, band), on_band(z_trans_ref, band)
    x, mats = prefix_chains(af, band, dx, length=hi)
    keep = (x >= lo - 1e-9 * dx) & (x <= hi + 1e-9 * dx)
    if not keep.any():
        # interval narrower than one grid step: evaluate its lower end directly
        areas, lengths = resample_segments(af, dx, length=lo)
        segs = np.column_stack([areas, lengths])
        m = chain(segs, band).matrices if len(segs) else np.broadcast_to(
            np.eye(2, dtype=complex), band.shape + (2, 2))
        curve = _curve_from_chains(np.array([lo]), m[None], zb, zr)
    else:
        curve = _curve_from_chains(x[keep], mats[keep], zb, zr)
    return curve.l_lme, curve


# -- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepItem:
    item_id: str
    z_ec: ImpedanceSpectrum
    z_trans_ref: ImpedanceSpectrum
    interval: tuple


@dataclass
class CalibrationRecord:
    f_lim: float
    f_cut_grid: np.ndarray
    f_sup_grid: np.ndarray
    item_ids: list
    L_lme: np.ndarray  # (n_f_sup, n_f_cut, n_items), NaN for failed runs
    theta_lme: np.ndarray
    slope: float | None = None
    intercept: float | None = None

    @property
    def L_mlme(self) -> np.ndarray:
        return _order_free_nanmean(self.L_lme)

    @property
    def theta_mlme(self) -> np.ndarray:
        return _order_free_nanmean(self.theta_lme)

    def best_f_cut(self, i_sup: int = 0) -> float:
        row = self.L_mlme[i_sup]
        if np.all(np.isnan(row)):
            raise ValueError("no valid grid point for this f_sup")
        return float(self.f_cut_grid[int(np.nanargmin(row))])

    def long_rows(self):
        for i, fs in enumerate(self.f_sup_grid):
            for j, fc in enumerate(self.f_cut_grid):
                for k, item in enumerate(self.item_ids):
                    yield fs, fc, self.f_lim, item, self.L_lme[i, j, k], self.theta_lme[i, j, k]

    def write_long_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("f_sup_hz,f_cut_hz,f_lim_hz,item_id,L_lme_db,theta_lme_deg\n")
            for fs, fc, fl, item, L, th in self.long_rows():
                fh.write(f"{fmt(fs)},{fmt(fc)},{fmt(fl)},{item},{fmt(L)},{fmt(th)}\n")

    def write_matrix_csv(self, path, quantity: str = "L_mlme"):
        mat = getattr(self, quantity)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("f_sup_hz\\f_cut_hz," + ",".join(fmt(c) for c in self.f_cut_grid) + "\n")
            for fs, row in zip(self.f_sup_grid, mat):
                fh.write(fmt(fs) + "," + ",".join(fmt(v) for v in row) + "\n")


def _order_free_nanmean(a):
    # exact summation so the mean does not depend on item order
    out = np.full(a.shape[:-1], np.nan)
    for idx in np.ndindex(*a.shape[:-1]):
        v = a[idx][~np.isnan(a[idx])]
        if v.size:
            out[idx] = math.fsum(v) / v.size
    return out


def _sweep_task(args):
    from .pipeline import estimate

    item, f_sup, f_cut, f_lim, base = args
    try:
        cfg = base.replace(f_sup=float(f_sup), f_cut=float(f_cut), f_lim=float(f_lim))
        est = estimate(item.z_ec, cfg)
        _, curve = find_l_lme(est.area, item.z_ec, item.z_trans_ref, item.interval)
        b = curve.best
        return float(curve.L_rmse[b]), float(curve.theta_rmse[b])
    except (WebsterError, ValueError) as exc:
        log.warning("sweep item %s at f_sup=%g f_cut=%g failed: %s", item.item_id, f_sup, f_cut, exc)
        return math.nan, math.nan


def sweep(dataset, f_cut_grid, f_sup_grid, f_lim: float,
          base: PipelineConfig | None = None, parallel: int = 1) -> CalibrationRecord:
    """Run the pipeline for every (f_sup, f_cut, item); failed runs become NaN holes."""
    dataset = list(dataset)
    f_cut_grid = np.asarray(f_cut_grid, float)
    f_sup_grid = np.asarray(f_sup_grid, float)
    if not dataset or f_cut_grid.size == 0 or f_sup_grid.size == 0:
        raise ValueError("dataset and grids must be non-empty")
    base = base or PipelineConfig(termination="epsilon")
    tasks = [(item, fs, fc, f_lim, base)
             for fs in f_sup_grid for fc in f_cut_grid for item in dataset]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_sweep_task, tasks, chunksize=max(1, len(tasks) // (4 * parallel))))
    else:
        results = [_sweep_task(t) for t in tasks]
    res = np.array(results, float).reshape(f_sup_grid.size, f_cut_grid.size, len(dataset), 2)
    return CalibrationRecord(float(f_lim), f_cut_grid, f_sup_grid, [d.item_id for d in dataset],
                             res[..., 0], res[..., 1])


# -- f_cut regression --------------------------------------------------------

@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float

    def predict(self, x):
        return self.slope * np.asarray(x, float) + self.intercept

    def to_dict(self):
        return {"slope": self.slope, "intercept_hz": self.intercept, "r_squared": self.r_squared}


def fit_fcut_regression(points) -> LinearFit:
    """Ordinary least squares of optimal f_cut on f_lim."""
    pts = np.asarray(points, float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    if np.unique(x).size < 2:
        raise DegenerateFit("need at least two distinct f_lim values")
    xm, ym = x.mean(), y.mean()
    slope = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    if ss_tot > 0 and ss_res <= 1e-24 * ss_tot:
        r2 = 1.0
    return LinearFit(slope, intercept, r2)


@dataclass(frozen=True)
class CrossValidation:
    slopes: np.ndarray
    intercepts: np.ndarray
    errors: np.ndarray  # mean (predicted - observed) f_cut on test groups, Hz

    def summary(self) -> dict:
        def stats(a):
            return {"mean": float(np.mean(a)), "std": float(np.std(a)),
                    "p05": float(np.percentile(a, 5)), "p95": float(np.percentile(a, 95))}

        return {"iterations": int(self.errors.size), "slope": stats(self.slopes),
                "intercept_hz": stats(self.intercepts), "error_hz": stats(self.errors)}


def _group_means(samples, groups):
    by_flim = {}
    for g, fl, fc in samples:
        if g in groups:
            by_flim.setdefault(fl, []).append(fc)
    return np.array([(fl, math.fsum(v) / len(v)) for fl, v in sorted(by_flim.items())])


def cross_validate(samples, iterations: int = 1000, split=None, seed: int = 0,
                   resubstitution: bool = False) -> CrossValidation:
    """Repeated random group split; fit on training group means, test on the rest.

    ``samples`` holds (group_id, f_lim, optimal f_cut) triples; a group is one
    subject. ``split`` is (n_train, n_test) and defaults to leave-one-out.
    With ``resubstitution`` the training groups are also the test groups.
    """
    samples = [(g, float(fl), float(fc)) for g, fl, fc in samples]
    groups = sorted({g for g, _, _ in samples}, key=str)
    n = len(groups)
    n_train, n_test = split if split is not None else (n - 1, 1)
    if resubstitution:
        n_test = 0
    needed = n_train if resubstitution else n_train + max(n_test, 1)
    if n < needed or n_train < 1:
        raise InsufficientGroups(f"{n} groups cannot supply a {n_train}/{n_test} split")
    rng = np.random.default_rng(seed)
    slopes, intercepts, errors = [], [], []
    for _ in range(iterations):
        order = rng.permutation(n)
        train = {groups[i] for i in order[:n_train]}
        test = train if resubstitution else {groups[i] for i in order[n_train:n_train + n_test]}
        fit = fit_fcut_regression(_group_means(samples, train))
        obs = _group_means(samples, test)
        slopes.append(fit.slope)
        intercepts.append(fit.intercept)
        errors.append(float(np.mean(fit.predict(obs[:, 0]) - obs[:, 1])))
    return CrossValidation(np.array(slopes), np.array(intercepts), np.array(errors))
