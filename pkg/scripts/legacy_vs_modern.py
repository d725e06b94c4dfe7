"""Compare the integer-upsampling method with direct synthesis on the suite.

The legacy path extrapolates to 2 f_lim and zero-pads the reflectance by
n_sup; the direct path synthesizes the TDR on the 3.5 MHz grid. Both are
scored by the lme level error and the interior diameter deviation.
"""

import argparse

import numpy as np

from webster_inverse.config import LegacyOptions, PipelineConfig
from webster_inverse.horns import SUITE_INTERVAL, suite_items
from webster_inverse.pipeline import roundtrip

VARIANTS = {
    "direct 3.5 MHz": LegacyOptions(),
    "n_sup 4": LegacyOptions(n_sup=4),
    "n_sup 4, amp corr": LegacyOptions(n_sup=4, amplitude_correction=True),
    "n_sup 4, trev add": LegacyOptions(n_sup=4, time_reversed_addition=True),
    "n_sup 16": LegacyOptions(n_sup=16),
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--f-lim", type=float, default=20.0, help="kHz")
    a = p.parse_args()

    items = suite_items()
    print(f"{'variant':<20} {'dx mm':>7} {'median L dB':>12} {'median diam dev':>16} {'failed':>7}")
    for name, legacy in VARIANTS.items():
        cfg = PipelineConfig(f_lim=a.f_lim * 1e3, interval=SUITE_INTERVAL, legacy=legacy)
        L, dev, failed, dx = [], [], 0, None
        for it in items:
            try:
                r = roundtrip(it, cfg)
            except Exception as exc:  # a variant may not survive every horn
                failed += 1
                print(f"  {name}: {it.item_id} failed ({type(exc).__name__})")
                continue
            L.append(r["lme"]["L_rmse_db"])
            dev.append(r["diameter"]["max_abs_rel_dev"])
        dx = 351.8 / cfg.effective_f_sup(a.f_lim * 1e3) * 1e3
        print(f"{name:<20} {dx:7.3f} {np.median(L):12.3f} {np.median(dev):16.1%} {failed:7d}")


if __name__ == "__main__":
    main()
