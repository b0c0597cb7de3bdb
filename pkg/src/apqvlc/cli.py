"""
Command-line driver.

    apqvlc gain       --config scenario.json [--rx X Y [Z]]
    apqvlc ser-sweep  --config scenario.json --out results/
    apqvlc heatmap    --config scenario.json --out results/
    apqvlc validate   [--seed N]

CSV outputs start with a ``# config_hash=...`` comment line followed by a
header row. They contain nothing time-dependent, so re-running a command
with the same config and seed rewrites identical bytes. Timestamps and run
ids live in the ``record_<command>.json`` file next to them.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import uuid
from datetime import datetime, timezone
from pathlib import Path

from . import analysis
from .apq import serving_gain
from .channel import channel_gain
from .montecarlo import ApqScheme, run_snr_sweep, scheme_scales, throughput_map
from .scenario import ConfigError, ScenarioConfig, load_scenario

log = logging.getLogger("apqvlc")

SWEEP_COLUMNS = ["snr_db", "ser_mc", "stderr", "ser_analytic", "scheme", "rx_x", "rx_y"]


def _csv_text(cfg: ScenarioConfig, header: list[str], rows, comment: str = "") -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={cfg.config_hash()}{comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8", newline="")
    return path


def gain_table(cfg: ScenarioConfig, rx) -> str:
    """Per-LED gain CSV for one receiver position; the serving LED goes in the comment line."""
    scene = cfg.scene(rx)
    gains = [channel_gain(tx, scene.receiver) for tx in scene.luminaires]
    best, best_gain = serving_gain(scene.luminaires, scene.receiver)
    serving = f"Tx{best + 1}" if best_gain > 0 else "none"
    rows = [[f"Tx{k + 1}", repr(g), repr(20 * math.log10(g)) if g > 0 else "-inf"] for k, g in enumerate(gains)]
    comment = f" rx={tuple(rx)} serving_led={serving}"
    return _csv_text(cfg, ["led_id", "gain", "gain_db"], rows, comment)


def sweep_table(cfg: ScenarioConfig, workers: int = 1) -> str:
    scheme = cfg.build_scheme()
    with_analytic = isinstance(scheme, ApqScheme) and scheme.m_total == 16
    rows = []
    for rx in cfg.receivers:
        scene = cfg.scene(rx)
        sweep = run_snr_sweep(scheme, scene, cfg.snr_db, cfg.trials, cfg.seed, workers=workers)
        for snr, est in zip(sweep.snr_db, sweep.estimates):
            analytic = ""
            if with_analytic:
                analytic = repr(float(analysis.ser_total(scheme_scales(scheme, scene, snr), scheme.cfg.powers)))
            rows.append([repr(snr), repr(est.ser), repr(est.stderr), analytic, scheme.name, repr(rx[0]), repr(rx[1])])
            log.info("%s rx=(%g, %g) %g dB: SER %.4g", scheme.name, rx[0], rx[1], snr, est.ser)
    return _csv_text(cfg, SWEEP_COLUMNS, rows)


def heatmap_outputs(cfg: ScenarioConfig, workers: int = 1) -> tuple[str, str]:
    """Row-major throughput matrix CSV and its JSON sidecar."""
    scheme = cfg.build_scheme()
    scene = cfg.scene((0.0, 0.0, cfg.receiver_height))
    tmap = throughput_map(scheme, scene, cfg.heatmap_snr_db, cfg.grid_spacing, cfg.heatmap_trials,
                          cfg.seed, room=cfg.room[:2], workers=workers)
    header = ["y\\x"] + [repr(float(x)) for x in tmap.xs]
    rows = [[repr(float(y))] + [repr(float(v)) for v in row] for y, row in zip(tmap.ys, tmap.values)]
    sidecar = {
        "config_hash": cfg.config_hash(),
        "scheme": tmap.scheme,
        "m": tmap.m_total,
        "snr_db": tmap.snr_db,
        "origin": list(tmap.origin),
        "spacing": tmap.spacing,
        "shape": list(tmap.values.shape),
        "receiver_height": cfg.receiver_height,
        "trials_per_cell": cfg.heatmap_trials,
        "seed": cfg.seed,
        "layout": "rows are y (ascending), columns are x (ascending)",
        "peak_success_rate": float((1 - tmap.ser).max()),
        "data_rate_bps": cfg.data_rate_bps,
        "peak_throughput_bps": float(cfg.data_rate_bps * math.log2(tmap.m_total) * (1 - tmap.ser).max()),
    }
    return _csv_text(cfg, header, rows), json.dumps(sidecar, indent=2, sort_keys=True) + "\n"


def _record(cfg: ScenarioConfig, out: Path, command: str, files: list[Path]) -> Path:
    record = {
        "run_id": uuid.uuid4().hex,
        "command": command,
        "config_hash": cfg.config_hash(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "files": [str(p) for p in files],
        "config": cfg.to_dict(),
    }
    return _write(out, f"record_{command}.json", json.dumps(record, indent=2) + "\n")


def _load(args) -> ScenarioConfig:
    cfg = load_scenario(args.config, allow_floor=True if args.allow_floor else None)
    heatmap = args.command == "heatmap"
    return cfg.with_overrides(seed=args.seed, trials=None if heatmap else args.trials,
                              heatmap_trials=args.trials if heatmap else None)


def cmd_gain(args) -> int:
    cfg = _load(args)
    if args.rx:
        rx = tuple(args.rx) if len(args.rx) == 3 else (args.rx[0], args.rx[1], cfg.receiver_height)
    else:
        rx = cfg.receivers[0]
    text = gain_table(cfg, rx)
    if not args.quiet:
        sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        _record(cfg, out, "gain", [_write(out, "gain.csv", text)])
    return 0


def cmd_ser_sweep(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    path = _write(out, "ser_sweep.csv", sweep_table(cfg, args.workers))
    _record(cfg, out, "ser-sweep", [path])
    if not args.quiet:
        print(path)
    return 0


def cmd_heatmap(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    matrix, sidecar = heatmap_outputs(cfg, args.workers)
    files = [_write(out, "heatmap.csv", matrix), _write(out, "heatmap.json", sidecar)]
    _record(cfg, out, "heatmap", files)
    if not args.quiet:
        print(files[0])
    return 0


def cmd_validate(args) -> int:
    from .acceptance import CHECKS, format_result

    kwargs = {"workers": args.workers}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.trials is not None:
        kwargs["trials"] = args.trials
    failed = 0
    for check in CHECKS:
        result = check(**kwargs)
        failed += not result.passed
        print(format_result(result), flush=True)
    print(f"{len(CHECKS) - failed}/{len(CHECKS)} criteria passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apqvlc", description="APQ / GSSK visible light link simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--trials", type=int, help="override the Monte Carlo trial budget")
        p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
        p.add_argument("--allow-floor", action="store_true", help="accept power splits that violate P1 > P2 + P3")
        p.add_argument("--quiet", action="store_true")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("gain", help="per-LED channel gains at a receiver position")
    common(p)
    p.add_argument("--rx", type=float, nargs="+", metavar="COORD", help="receiver x y [z]; default: first receiver")
    p.add_argument("--out", help="also write gain.csv here")
    p.set_defaults(func=cmd_gain)

    p = sub.add_parser("ser-sweep", help="SER versus transmit SNR for every configured receiver")
    common(p)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_ser_sweep)

    p = sub.add_parser("heatmap", help="normalized throughput over the floor")
    common(p)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("validate", help="run the acceptance criteria")
    common(p, needs_config=False)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "gain" and args.rx and len(args.rx) not in (2, 3):
        print("apqvlc: --rx takes 2 or 3 coordinates", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"apqvlc: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
