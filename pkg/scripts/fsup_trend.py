"""Mean lme level error over f_cut for a range of synthesis rates.

Runs the built-in synthetic suite through the sweep harness and prints, per
f_sup, the best mean error and the cutoff where it occurs. Finer spatial
steps (higher f_sup) should lower the error until it saturates.
"""

import argparse
from pathlib import Path

import numpy as np

from webster_inverse.calibration import SweepItem, sweep
from webster_inverse.horns import suite_items
from webster_inverse.inverse_solver import spatial_step


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--f-lim", type=float, default=20.0, help="kHz")
    p.add_argument("--f-sup", default="192,384,768,1536,3500", help="kHz list")
    p.add_argument("--f-cut", default="16:40:2", help="kHz start:stop:step (inclusive)")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--out-dir", type=Path, help="write sweep CSVs here")
    a = p.parse_args()

    start, stop, step = (float(v) for v in a.f_cut.split(":"))
    f_cut = np.arange(start, stop + step / 2, step) * 1e3
    f_sup = np.array([float(v) for v in a.f_sup.split(",")]) * 1e3
    items = [SweepItem(it.item_id, it.z_ec, it.z_trans_ref, it.interval) for it in suite_items()]
    rec = sweep(items, f_cut, f_sup, a.f_lim * 1e3, parallel=a.parallel)

    print(f"{'f_sup kHz':>10} {'dx mm':>7} {'best f_cut kHz':>15} {'min L_mlme dB':>14} {'holes':>6}")
    for i, fs in enumerate(f_sup):
        row = rec.L_mlme[i]
        holes = int(np.isnan(rec.L_lme[i]).sum())
        if np.all(np.isnan(row)):
            print(f"{fs / 1e3:10.0f} {spatial_step(fs) * 1e3:7.3f} {'-':>15} {'-':>14} {holes:6d}")
            continue
        j = int(np.nanargmin(row))
        print(f"{fs / 1e3:10.0f} {spatial_step(fs) * 1e3:7.3f} {f_cut[j] / 1e3:15.1f} "
              f"{row[j]:14.3f} {holes:6d}")

    if a.out_dir:
        a.out_dir.mkdir(parents=True, exist_ok=True)
        rec.write_long_csv(a.out_dir / "sweep_long.csv")
        rec.write_matrix_csv(a.out_dir / "L_mlme.csv", "L_mlme")
        rec.write_matrix_csv(a.out_dir / "theta_mlme.csv", "theta_mlme")


if __name__ == "__main__":
    main()
