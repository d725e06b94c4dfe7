"""Command-line interface.

Human-facing flags use mm, mm^2 and kHz; every file is strictly SI.
Exit codes: 0 success, 2 flagged but usable result, 1 error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import calibration, horns
from .config import INTERVAL_PRESETS, LegacyOptions, PipelineConfig, SURGE_VARIANTS, TERMINATION_RULES
from .errors import ConfigError, WebsterError
from .inverse_solver import read_area_csv, write_area_csv
from .pipeline import estimate, predict_ztrans, roundtrip
from .signal_core import PhysicalConstants, read_impedance_csv, write_impedance_csv
from .transmission import TabulatedImpedance, RIGID

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("webster_inverse")

EXIT_OK, EXIT_ERROR, EXIT_FLAGGED = 0, 1, 2
KHZ, MM, MM2 = 1e3, 1e-3, 1e-6

# keys accepted in a TOML config file, with the same units as the flags
PIPELINE_KEYS = ("f_lim", "f_cut", "f_sup", "surge", "geometric_area", "l_max", "termination",
                 "termination_mm", "interval", "rho", "c", "seed", "legacy_nsup",
                 "legacy_amp_corr", "legacy_trev_add")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


def dump_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _interval(text):
    if text in INTERVAL_PRESETS:
        return text
    try:
        lo, hi = (float(v) * MM for v in str(text).split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"interval must be a preset {sorted(INTERVAL_PRESETS)} or 'lo,hi' in mm") from None
    return (lo, hi)


def _f_cut(text):
    if text in ("auto", "off"):
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("f-cut must be kHz, 'auto' or 'off'") from None


def add_pipeline_flags(p):
    g = p.add_argument_group("pipeline")
    g.add_argument("--config", type=Path, help="TOML file with pipeline keys (flags override)")
    g.add_argument("--f-lim", type=float, help="highest valid frequency, kHz")
    g.add_argument("--f-cut", type=_f_cut, help="Blackman cutoff in kHz, 'auto' or 'off'")
    g.add_argument("--f-sup", type=float, help="synthesis rate, kHz (default 3500)")
    g.add_argument("--surge", choices=SURGE_VARIANTS)
    g.add_argument("--geometric-area", type=float, help="entrance area for geometric surge, mm^2")
    g.add_argument("--l-max", type=float, help="marching depth, mm (default 50)")
    g.add_argument("--termination", choices=TERMINATION_RULES)
    g.add_argument("--termination-mm", type=float, help="length for the fixed rule, mm")
    g.add_argument("--interval", type=_interval, help="preset name or 'lo,hi' in mm")
    g.add_argument("--rho", type=float, help="air density, kg/m^3")
    g.add_argument("--c", type=float, help="speed of sound, m/s")
    g.add_argument("--seed", type=int, help="random seed (fallback: $WEBSTER_INVERSE_SEED)")
    g.add_argument("--legacy-nsup", type=int, help="integer upsampling factor of the legacy method")
    g.add_argument("--legacy-amp-corr", action="store_const", const=True,
                   help="scale the upsampled reflectance by n_sup")
    g.add_argument("--legacy-trev-add", action="store_const", const=True,
                   help="add the time-reversed TDR to positive times")
    g.add_argument("--reference", type=Path, help="reference Z_trans CSV (needed for 'lme')")


def resolve_settings(args) -> dict:
    settings = {}
    if getattr(args, "config", None):
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
        unknown = set(data) - set(PIPELINE_KEYS)
        if unknown:
            raise ConfigError(f"{args.config}: unknown keys {sorted(unknown)}")
        settings.update(data)
        if isinstance(settings.get("interval"), list):
            settings["interval"] = tuple(v * MM for v in settings["interval"])
    for key in PIPELINE_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            settings[key] = v
    if settings.get("seed") is None and os.environ.get("WEBSTER_INVERSE_SEED"):
        settings["seed"] = int(os.environ["WEBSTER_INVERSE_SEED"])
    settings.setdefault("seed", 0)
    return settings


def build_config(s: dict, **overrides) -> PipelineConfig:
    kw = {}
    if "f_lim" in s:
        kw["f_lim"] = s["f_lim"] * KHZ
    if "f_cut" in s:
        kw["f_cut"] = s["f_cut"] if isinstance(s["f_cut"], str) else s["f_cut"] * KHZ
    if "f_sup" in s:
        kw["f_sup"] = s["f_sup"] * KHZ
    if "surge" in s:
        kw["surge"] = s["surge"]
    if "geometric_area" in s:
        kw["geometric_area"] = s["geometric_area"] * MM2
    if "l_max" in s:
        kw["l_max"] = s["l_max"] * MM
    if "termination" in s:
        kw["termination"] = s["termination"]
    if "termination_mm" in s:
        kw["termination_length"] = s["termination_mm"] * MM
    if "interval" in s:
        kw["interval"] = s["interval"]
    if "rho" in s or "c" in s:
        kw["constants"] = PhysicalConstants(c=s.get("c", 351.8), rho=s.get("rho", 1.1455))
    kw["legacy"] = LegacyOptions(n_sup=s.get("legacy_nsup"),
                                 amplitude_correction=bool(s.get("legacy_amp_corr", False)),
                                 time_reversed_addition=bool(s.get("legacy_trev_add", False)))
    kw.update(overrides)
    return PipelineConfig(**kw)


# -- commands ----------------------------------------------------------------

def cmd_estimate(args) -> int:
    s = resolve_settings(args)
    cfg = build_config(s)
    z = read_impedance_csv(args.zec)
    ref = read_impedance_csv(args.reference) if args.reference else None
    est = estimate(z, cfg, z_trans_ref=ref)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_area_csv(out / "area.csv", est.area)
    term = est.termination.to_dict()
    term["rule"] = cfg.termination
    term["selected_m"] = est.length
    dump_json(term, out / "termination.json")
    diag = est.diagnostics()
    diag["seed"] = s["seed"]
    dump_json(diag, out / "diagnostics.json")
    log.info("resolved f_cut %s Hz, z0 %.6g, termination %s m", est.f_cut,
             est.reflectance.z0, est.length)
    return EXIT_FLAGGED if est.flags else EXIT_OK


def cmd_ztrans(args) -> int:
    z = read_impedance_csv(args.zec)
    af = read_area_csv(args.area)
    if args.termination_mm is not None:
        length = args.termination_mm * MM
    else:
        data = json.loads(Path(args.termination_json).read_text(encoding="utf-8"))
        key = "selected_m" if args.rule is None else f"l_{args.rule}_m"
        length = data.get(key)
        if length is None:
            raise ConfigError(f"{args.termination_json} has no value for {key}")
    zt = predict_ztrans(z, af, length)
    write_impedance_csv(args.out, zt)
    log.info("Z_trans written for termination %.6g m", length)
    return EXIT_OK


HORN_KINDS = ("uniform", "exponential", "conical", "parabolic", "tapered", "stepped")


def add_horn_flags(p, kinds=HORN_KINDS):
    p.add_argument("kind", choices=kinds)
    p.add_argument("--area-mm2", type=float)
    p.add_argument("--a0-mm2", type=float)
    p.add_argument("--length-mm", type=float)
    p.add_argument("--flare", type=float, help="exponential flare rate, 1/m")
    p.add_argument("--r0-mm", type=float)
    p.add_argument("--r1-mm", type=float)
    p.add_argument("--offset-mm", type=float)
    p.add_argument("--center-mm", type=float)
    p.add_argument("--width-mm", type=float)
    p.add_argument("--depth", type=float)
    p.add_argument("--horn-config", type=Path, help="TOML with [[tube]] entries (stepped)")
    p.add_argument("--load", type=Path, help="tabulated load impedance CSV (default rigid)")


def horn_from_args(a):
    def need(*names):
        missing = [n for n in names if getattr(a, n) is None]
        if missing:
            raise ConfigError(f"{a.kind} horn needs --{', --'.join(m.replace('_', '-') for m in missing)}")
        return [getattr(a, n) for n in names]

    if a.kind == "uniform":
        area, length = need("area_mm2", "length_mm")
        return horns.Uniform(area * MM2, length * MM)
    if a.kind == "exponential":
        a0, flare, length = need("a0_mm2", "flare", "length_mm")
        return horns.Exponential(a0 * MM2, flare, length * MM)
    if a.kind == "conical":
        r0, r1, length = need("r0_mm", "r1_mm", "length_mm")
        return horns.Conical(r0 * MM, r1 * MM, length * MM)
    if a.kind == "parabolic":
        a0, off, length = need("a0_mm2", "offset_mm", "length_mm")
        return horns.Parabolic(a0 * MM2, off * MM, length * MM)
    if a.kind == "tapered":
        a0, off, length, ctr, w, d = need("a0_mm2", "offset_mm", "length_mm", "center_mm",
                                          "width_mm", "depth")
        return horns.TaperedParabolic(a0 * MM2, off * MM, length * MM, ctr * MM, w * MM, d)
    (path,) = need("horn_config")
    return horns.load_stepped_toml(path)


def _load(a):
    if getattr(a, "load", None) is None:
        return RIGID
    z = read_impedance_csv(a.load)
    return TabulatedImpedance(z.freqs, z.values)


def cmd_genhorn(args) -> int:
    spec = horn_from_args(args)
    item = horns.synthesize(spec, item_id=args.kind, load=_load(args))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_area_csv(out / "area.csv", horns.generate_area(spec, 1e-4))
    write_impedance_csv(out / "zec.csv", item.z_ec)
    write_impedance_csv(out / "ztrans_ref.csv", item.z_trans_ref)
    log.info("wrote %s horn (L = %.4g m, reference depth %.4g m) to %s",
             args.kind, spec.length, item.ref_depth, out)
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    s = resolve_settings(args)
    cfg = build_config(s)
    if cfg.interval is None:
        cfg = cfg.replace(interval=horns.SUITE_INTERVAL)
    if args.kind == "suite":
        items = horns.suite_items()
    else:
        items = [horns.synthesize(horn_from_args(args), item_id=args.kind, load=_load(args))]
    reports = [roundtrip(it, cfg) for it in items]
    result = {"config": cfg.to_dict(), "items": reports}
    if len(reports) > 1:
        result["median"] = {
            "lme_L_rmse_db": float(np.median([r["lme"]["L_rmse_db"] for r in reports])),
            "lme_theta_rmse_deg": float(np.median([r["lme"]["theta_rmse_deg"] for r in reports])),
        }
        sel = [r["selected"]["L_rmse_db"] for r in reports if "selected" in r]
        if sel:
            result["median"]["selected_L_rmse_db"] = float(np.median(sel))
    dump_json(result, args.out)
    return EXIT_FLAGGED if any(r["flags"] for r in reports) else EXIT_OK


def _grid(text, scale=KHZ):
    """'a,b,c' or 'start:stop:step' (inclusive) in kHz."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        n = int(round((stop - start) / step))
        return (start + step * np.arange(n + 1)) * scale
    return np.array([float(v) for v in text.split(",")]) * scale


def load_dataset(path):
    """Subdirectories holding zec.csv and ztrans_ref.csv, sorted by name."""
    items = []
    for d in sorted(p for p in Path(path).iterdir() if p.is_dir()):
        if (d / "zec.csv").exists() and (d / "ztrans_ref.csv").exists():
            items.append(calibration.SweepItem(d.name, read_impedance_csv(d / "zec.csv"),
                                               read_impedance_csv(d / "ztrans_ref.csv"),
                                               horns.SUITE_INTERVAL))
    if not items:
        raise ConfigError(f"{path}: no items with zec.csv and ztrans_ref.csv")
    return items


def cmd_sweep(args) -> int:
    s = resolve_settings(args)
    base = build_config(s, termination="epsilon")
    if args.dataset:
        dataset = load_dataset(args.dataset)
    else:
        dataset = [calibration.SweepItem(it.item_id, it.z_ec, it.z_trans_ref, it.interval)
                   for it in horns.suite_items()]
    f_lim = s.get("f_lim", 20.0) * KHZ
    rec = calibration.sweep(dataset, _grid(args.f_cut_grid), _grid(args.f_sup_grid), f_lim,
                            base=base, parallel=args.parallel)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rec.write_long_csv(out / "sweep_long.csv")
    rec.write_matrix_csv(out / "L_mlme.csv", "L_mlme")
    rec.write_matrix_csv(out / "theta_mlme.csv", "theta_mlme")
    holes = int(np.isnan(rec.L_lme).sum())
    dump_json({"seed": s["seed"], "f_lim_hz": f_lim, "items": rec.item_ids, "holes": holes,
               "best_f_cut_hz": [rec.best_f_cut(i) if not np.all(np.isnan(rec.L_mlme[i])) else None
                                 for i in range(rec.f_sup_grid.size)]},
              out / "sweep_summary.json")
    return EXIT_FLAGGED if holes else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="webster-inverse",
                                description="Ear-canal area functions and transfer impedances "
                                            "from input-impedance spectra.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    # accept -v after the subcommand too without clobbering the global flag
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    e = add("estimate", help="area function and termination lengths from Z_ec")
    e.add_argument("zec", type=Path)
    e.add_argument("--out-dir", type=Path, default=Path("."))
    add_pipeline_flags(e)
    e.set_defaults(func=cmd_estimate)

    z = add("ztrans", help="predict Z_trans from Z_ec and an area function")
    z.add_argument("zec", type=Path)
    z.add_argument("area", type=Path)
    grp = z.add_mutually_exclusive_group(required=True)
    grp.add_argument("--termination-mm", type=float)
    grp.add_argument("--termination-json", type=Path)
    z.add_argument("--rule", help="length key from termination.json, e.g. epsilon_corrected")
    z.add_argument("--out", type=Path, required=True)
    z.set_defaults(func=cmd_ztrans)

    g = add("gen-horn", help="synthetic horn with forward-model ground truth")
    add_horn_flags(g)
    g.add_argument("--out-dir", type=Path, default=Path("."))
    g.set_defaults(func=cmd_genhorn)

    r = add("roundtrip", help="gen-horn, estimate and score against the reference")
    add_horn_flags(r, HORN_KINDS + ("suite",))
    add_pipeline_flags(r)
    r.add_argument("--out", type=Path, help="JSON report path (default stdout)")
    r.set_defaults(func=cmd_roundtrip)

    s = add("sweep", help="L_mlme over f_sup x f_cut grids")
    s.add_argument("--dataset", type=Path, help="directory of items (default: built-in suite)")
    s.add_argument("--f-cut-grid", default="8:44:1", help="kHz list or start:stop:step")
    s.add_argument("--f-sup-grid", default="3500", help="kHz list or start:stop:step")
    s.add_argument("--parallel", type=int, default=1)
    s.add_argument("--out-dir", type=Path, default=Path("."))
    add_pipeline_flags(s)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors must not look like a flagged result
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except WebsterError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
