"""Fit optimal cutoff against bandwidth limit on the synthetic suite and cross-validate.

For every horn and every f_lim the cutoff with the lowest lme level error is
taken as that horn's optimum. A straight line through those optima is then
checked by repeated leave-one-out splits over horns, and compared with the
packaged cutoff model.
"""

import argparse
import json

import numpy as np

from webster_inverse.calibration import SweepItem, cross_validate, fcut_model, fit_fcut_regression, sweep
from webster_inverse.horns import suite_items


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--f-lim", default="8,10,12,16,20", help="kHz list")
    p.add_argument("--f-cut-step", type=float, default=1.0, help="kHz")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallel", type=int, default=1)
    a = p.parse_args()

    items = [SweepItem(it.item_id, it.z_ec, it.z_trans_ref, it.interval) for it in suite_items()]
    samples = []
    for fl in (float(v) * 1e3 for v in a.f_lim.split(",")):
        # search from f_lim up to twice the packaged model value
        grid = np.arange(fl, 2 * fcut_model(fl), a.f_cut_step * 1e3)
        rec = sweep(items, grid, [3.5e6], fl, parallel=a.parallel)
        for k, item in enumerate(rec.item_ids):
            row = rec.L_lme[0, :, k]
            if np.all(np.isnan(row)):
                continue
            samples.append((item, fl, float(grid[int(np.nanargmin(row))])))
        best = rec.best_f_cut()
        print(f"f_lim {fl / 1e3:5.1f} kHz: suite optimum {best / 1e3:5.1f} kHz, "
              f"model {fcut_model(fl) / 1e3:5.2f} kHz")

    fit = fit_fcut_regression([(fl, fc) for _, fl, fc in samples])
    print(f"\nfit: f_cut = {fit.slope:.3f} f_lim + {fit.intercept / 1e3:.2f} kHz  (R^2 {fit.r_squared:.3f})")
    cv = cross_validate(samples, iterations=a.iterations, seed=a.seed)
    print(json.dumps(cv.summary(), indent=2))


if __name__ == "__main__":
    main()
