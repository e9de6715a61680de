"""Batch front end: simulate, bound, validate, and figure-grid campaigns.

Configs are flat JSON; outputs are CSV curves plus a JSON manifest that
embeds the fully resolved config, so re-running a manifest reproduces the
outputs bit for bit.
"""

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, replace

from . import __version__
from .analysis import AbepCurve
from .montecarlo import (
    SimConfig,
    compare_with_bound,
    compute_bound,
    run_point,
    run_sweep,
)

CSV_HEADER = ["snr_db", "abep_bound", "ber_sim", "ci95", "errors", "bits"]

MODES = ("simulate", "bound", "validate", "figures")

# paper-matched figure grids: total scatterers, modulated scatterers, PSK order
FIGURE_GRIDS = {
    "fig1": [dict(l_total=l, l_selected=4, mod_order=4) for l in (6, 12, 18)],
    "fig2": [dict(l_total=12, l_selected=ls, mod_order=4) for ls in (2, 4, 8)],
    "fig3": [dict(l_total=12, l_selected=4, mod_order=m) for m in (2, 4, 8)],
}

_REQUIRED_KEYS = {
    "L": "l_total",
    "L_s": "l_selected",
    "M": "mod_order",
    "snr_db": "snr_grid_db",
}
_OPTIONAL_KEYS = {
    "N_t": "n_t",
    "N_r": "n_r",
    "N_h": "n_h",
    "N_v": "n_v",
    "tx_spacing": "tx_spacing",
    "rx_spacing": "rx_spacing",
    "ris_spacing": "ris_spacing",
    "channel_draws": "channel_draws",
    "symbols_per_draw": "symbols_per_draw",
    "fidelity": "fidelity",
    "seed": "seed",
    "min_angular_separation": "min_angular_separation",
    "disable_noise": "disable_noise",
    "target_bit_errors": "target_bit_errors",
    "batch_draws": "batch_draws",
    "n_jobs": "n_jobs",
    "bound_draws": "bound_draws",
}


class ConfigError(ValueError):
    """Configuration file is missing keys or violates an invariant."""


@dataclass(frozen=True)
class RunManifest:
    """What ran: resolved config, mode, destination, version, and duration."""

    config: SimConfig
    mode: str
    output_path: str
    tool_version: str
    wall_time: float


def parse_config(path: str) -> SimConfig:
    """Read and validate a flat JSON config (or the config inside a manifest).

    Required keys: L, L_s, M, snr_db.  Everything else falls back to the
    half-wavelength 32-antenna defaults of :class:`SimConfig`.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must contain a JSON object")
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]  # re-run straight from a manifest

    kwargs = {}
    for key, attr in _REQUIRED_KEYS.items():
        if key not in raw:
            raise ConfigError(f"missing required key: {key!r}")
        kwargs[attr] = raw[key]
    for key, value in raw.items():
        if key in _REQUIRED_KEYS:
            continue
        if key not in _OPTIONAL_KEYS:
            allowed = sorted(list(_REQUIRED_KEYS) + list(_OPTIONAL_KEYS))
            raise ConfigError(f"unknown config key {key!r}; allowed keys: {allowed}")
        kwargs[_OPTIONAL_KEYS[key]] = value

    try:
        cfg = SimConfig(**kwargs)
        cfg.validate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def config_to_json(cfg: SimConfig) -> dict:
    """Inverse of :func:`parse_config`: a dict that parses back to ``cfg``."""
    out = {}
    for key, attr in {**_REQUIRED_KEYS, **_OPTIONAL_KEYS}.items():
        value = getattr(cfg, attr)
        if attr == "snr_grid_db":
            value = list(value)
        if value is not None:
            out[key] = value
    return out


def emit_csv(records, path):
    """Write curve records with the fixed header; missing fields stay empty.

    Each record is a dict with any subset of the header columns.  Floats are
    written with repr so a round trip recovers them exactly.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            row = []
            for col in CSV_HEADER:
                value = rec.get(col)
                if value is None:
                    row.append("")
                elif isinstance(value, float):
                    row.append(repr(value))
                else:
                    row.append(str(value))
            writer.writerow(row)


def _rows_from_sweep(estimates=None, curve: AbepCurve = None):
    if estimates is None:
        grid = curve.snr_grid_db
    else:
        grid = [e.snr_db for e in estimates]
    rows = []
    for i, snr in enumerate(grid):
        rec = {"snr_db": float(snr)}
        if curve is not None:
            rec["abep_bound"] = float(curve.abep[i])
        if estimates is not None:
            est = estimates[i]
            rec.update(
                ber_sim=float(est.point),
                ci95=float(est.ci95_half_width),
                errors=est.bit_errors,
                bits=est.bits_sent,
            )
        rows.append(rec)
    return rows


def _write_manifest(manifest: RunManifest, out_dir, outputs):
    payload = {
        "mode": manifest.mode,
        "tool_version": manifest.tool_version,
        "wall_time_s": manifest.wall_time,
        "outputs": outputs,
        "config": config_to_json(manifest.config),
    }
    with open(f"{out_dir}/manifest.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_mode(manifest: RunManifest) -> int:
    """Execute one mode and write its artifacts; returns the process exit code."""
    cfg = manifest.config
    out = manifest.output_path
    started = time.perf_counter()
    outputs = []
    status = 0

    if manifest.mode == "simulate":
        estimates = [run_point(cfg, s, i) for i, s in enumerate(cfg.snr_grid_db)]
        emit_csv(_rows_from_sweep(estimates=estimates), f"{out}/simulate.csv")
        outputs.append("simulate.csv")
    elif manifest.mode == "bound":
        curve = compute_bound(cfg)
        emit_csv(_rows_from_sweep(curve=curve), f"{out}/bound.csv")
        outputs.append("bound.csv")
    elif manifest.mode == "validate":
        estimates, curve = run_sweep(cfg)
        report = compare_with_bound(estimates, curve)
        emit_csv(_rows_from_sweep(estimates, curve), f"{out}/validate.csv")
        outputs.append("validate.csv")
        lines = []
        for c in report.points:
            verdict = "ok" if c.dominated else "VIOLATED"
            lines.append(
                f"{c.snr_db:g} dB: sim={c.ber_sim:.6g} bound={c.bound:.6g} "
                f"sigma={c.sigma:.3g} tightness={c.tightness:.3g} {verdict}"
            )
        lines.append("PASS" if report.passed else "FAIL")
        with open(f"{out}/validate_report.txt", "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        outputs.append("validate_report.txt")
        print("\n".join(lines))
        status = 0 if report.passed else 1
    elif manifest.mode == "figures":
        for fig, grid in FIGURE_GRIDS.items():
            for override in grid:
                sub = replace(cfg, **override)
                sub.validate()
                curve = compute_bound(sub)
                if fig == "fig1":
                    name = f"{fig}_L{override['l_total']}.csv"
                elif fig == "fig2":
                    name = f"{fig}_Ls{override['l_selected']}.csv"
                else:
                    name = f"{fig}_M{override['mod_order']}.csv"
                emit_csv(_rows_from_sweep(curve=curve), f"{out}/{name}")
                outputs.append(name)
    else:
        raise ConfigError(f"unknown mode {manifest.mode!r}")

    manifest = replace(manifest, wall_time=time.perf_counter() - started)
    _write_manifest(manifest, out, outputs)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ris-ssm",
        description="BER simulation and ABEP union bounds for scatterer-index "
        "modulation through a phase-tuned reflecting surface",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="flat JSON config file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument(
        "--fidelity", choices=("beamspace", "physical"), default=None,
        help="override config fidelity",
    )
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.fidelity is not None:
            cfg = replace(cfg, fidelity=args.fidelity)
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2

    manifest = RunManifest(
        config=cfg,
        mode=args.mode,
        output_path=args.out,
        tool_version=__version__,
        wall_time=0.0,
    )
    try:
        return run_mode(manifest)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
