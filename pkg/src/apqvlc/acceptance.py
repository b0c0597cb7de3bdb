"""
Exit criteria of the simulator, runnable from the CLI (``apqvlc validate``)
and from the test suite. Each check returns a :class:`CheckResult`; nothing
here raises on a failed criterion.
"""

from __future__ import annotations

import filecmp
import json
import math
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis
from .apq import ApqConfig, apq_modulate, index_to_components, sic_demodulate
from .channel import Luminaire, Photodetector, Vec3, channel_gain, detection_scale
from .gssk import GsskConfig
from .montecarlo import ApqScheme, GsskScheme, run_ser_at_scales, run_snr_sweep, throughput_map
from .scenario import REFERENCE_RECEIVERS, scenario_from_dict

__all__ = ["CheckResult", "CHECKS", "run_all", "format_result"]

SNR_GRID = tuple(float(s) for s in range(110, 155, 5))


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str


def format_result(r: CheckResult) -> str:
    return f"[{'PASS' if r.passed else 'FAIL'}] {r.criterion}. {r.name}: {r.detail}"


def _reference_scene(spacing: float, rx_xy):
    cfg = scenario_from_dict({"scheme": "apq16", "layout": {"spacing": spacing}})
    return cfg.scene((*rx_xy, cfg.receiver_height))


def guessing_limits(**_) -> CheckResult:
    powers = ApqConfig(16, 0.3).powers
    got = [float(f(0.0, powers)) for f in (analysis.ser_amplitude, analysis.ser_phase,
                                           analysis.ser_quadrant, analysis.ser_total)]
    want = [0.5, 0.5, 0.75, 15 / 16]
    worst = max(abs(g - w) for g, w in zip(got, want))
    return CheckResult(1, "guessing-limit exactness", worst <= 1e-9,
                       f"(Pr1, Pr2, Pr3, Pr) = {tuple(round(g, 12) for g in got)}, max deviation {worst:.1e} <= 1e-9")


def analytic_vs_monte_carlo(seed: int = 2024, trials: int = 1_000_000, **_) -> CheckResult:
    cfg = ApqConfig(16, 0.3)
    scene = _reference_scene(1.0, REFERENCE_RECEIVERS["Rx1"])
    sweep = run_snr_sweep(ApqScheme(cfg, mean_normalized=False), scene, SNR_GRID, trials, seed)
    worst, failures = 0.0, []
    gain = channel_gain(scene.luminaires[0], scene.receiver)
    for snr, est in zip(sweep.snr_db, sweep.estimates):
        p = float(analysis.ser_total(detection_scale(gain, snr).value, cfg.powers))
        tol = 3 * math.sqrt(p * (1 - p) / trials)
        gap = abs(p - est.ser)
        if tol > 0:
            worst = max(worst, gap / tol * 3)
        if gap > tol:
            failures.append(f"{snr:g} dB: analytic {p:.4g} vs MC {est.ser:.4g} (tol {tol:.2g})")
    detail = f"{len(SNR_GRID)} points 110-150 dB, N={trials}, worst |z| = {worst:.2f} (limit 3)"
    if failures:
        detail += "; " + "; ".join(failures)
    return CheckResult(2, "analytic vs Monte Carlo SER", not failures, detail)


def noiseless_round_trip(**_) -> CheckResult:
    bad = {}
    for m in (8, 16, 32):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cfg = ApqConfig(m, 0.3)
        wrong = [k for k in range(m)
                 if sic_demodulate(apq_modulate(c := index_to_components(k, cfg), cfg), 1.0, cfg) != c]
        if wrong:
            bad[m] = wrong
    detail = "all symbols recovered for M = 8, 16, 32" if not bad else "; ".join(
        f"M={m}: {len(w)}/{m} symbols wrong (e.g. {w[:4]})" for m, w in bad.items())
    return CheckResult(3, "noiseless SIC round trip", not bad, detail)


def gain_spot_value(**_) -> CheckResult:
    g = channel_gain(Luminaire(Vec3(1, 1, 3)), Photodetector(Vec3(1, 1, 0.75)))
    rel = abs(g - 1.646e-4) / 1.646e-4
    return CheckResult(4, "channel gain spot value", rel <= 0.01,
                       f"gain {g:.6e} vs 1.646e-4, relative error {rel:.2e} <= 1e-2")


def gssk_symmetry_floor(seed: int = 7, trials: int = 100_000, **_) -> CheckResult:
    cfg = GsskConfig(3)
    h = 1.646e-4
    gains = np.array([h, h, 0.5 * h])
    sers = [run_ser_at_scales(cfg, gains * 10 ** (snr / 20), trials, seed, point=k).ser
            for k, snr in enumerate(SNR_GRID)]
    ok = min(sers) >= 0.2
    return CheckResult(5, "GSSK equal-gain error floor", ok,
                       f"min SER {min(sers):.4f} over 110-150 dB (N={trials}/point) >= 0.2")


def gssk_directional(seed: int = 11, trials: int = 100_000, **_) -> CheckResult:
    scheme = GsskScheme(GsskConfig(3))
    near = run_snr_sweep(scheme, _reference_scene(1.0, REFERENCE_RECEIVERS["Rx2"]), SNR_GRID, trials, seed)
    center = run_snr_sweep(scheme, _reference_scene(1.0, REFERENCE_RECEIVERS["Rx3"]), SNR_GRID, trials, seed)
    ser, se = near.ser, near.stderr
    # decreasing within sampling noise: each step may rise by at most 3 combined sigma
    monotone = all(b <= a + 3 * math.hypot(sa, sb) for a, b, sa, sb in zip(ser, ser[1:], se, se[1:]))
    strictly_falls = ser[-1] < ser[0]
    reaches = ser[-1] <= 1e-3
    center_floor = center.ser.min() >= 0.2
    parts = [
        f"Rx2 decreasing={'yes' if monotone and strictly_falls else 'no'}",
        f"Rx2 SER@150dB={ser[-1]:.4f} (need <= 1e-3)",
        f"Rx3 min SER={center.ser.min():.4f} (need >= 0.2)",
    ]
    return CheckResult(6, "GSSK near-center vs center", monotone and strictly_falls and reaches and center_floor,
                       ", ".join(parts))


def _adjacent_max_jump(values: np.ndarray) -> float:
    return float(max(np.abs(np.diff(values, axis=0)).max(), np.abs(np.diff(values, axis=1)).max()))


def heatmap_structure(seed: int = 5, trials: int = 10_000, workers: int = 1, **_) -> CheckResult:
    wide = scenario_from_dict({"scheme": "apq16", "layout": {"spacing": 1.0}})
    apq = throughput_map(wide.build_scheme(), wide.scene((0.0, 0.0, wide.receiver_height)), 140.0,
                         0.1, trials, seed, workers=workers)
    xx, yy = np.meshgrid(apq.xs, apq.ys)
    near = np.zeros_like(apq.values, dtype=bool)
    for x, y, _ in wide.luminaires:
        near |= np.hypot(xx - x, yy - y) <= 0.75 + 1e-9
    apq_min = float(apq.values[near].min())

    tight = scenario_from_dict({"scheme": "gssk4", "layout": {"spacing": 0.1}})
    gssk = throughput_map(tight.build_scheme(), tight.scene((0.0, 0.0, tight.receiver_height)), 140.0,
                          0.1, trials, seed, workers=workers)
    jump = _adjacent_max_jump(gssk.values)
    ok = apq_min >= 0.95 and jump >= 0.3
    return CheckResult(7, "throughput heatmap structure", ok,
                       f"APQ-16 min within 0.75 m of an LED = {apq_min:.4f} (>= 0.95); "
                       f"GSSK-4 d=0.1 largest adjacent jump = {jump:.3f} (>= 0.3); N={trials}/cell")


def determinism(seed: int = 3, **_) -> CheckResult:
    from .cli import main

    scenarios = {
        "apq": {"scheme": "apq16", "trials": 20_000, "heatmap_trials": 2_000, "heatmap": {"grid_spacing": 0.5}},
        "gssk": {"scheme": "gssk3", "trials": 20_000, "heatmap_trials": 2_000, "heatmap": {"grid_spacing": 0.5}},
    }
    mismatched = []
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        for label, doc in scenarios.items():
            path = root / f"{label}.json"
            path.write_text(json.dumps(doc))
            for cmd in ("gain", "ser-sweep", "heatmap"):
                outs = []
                for run, workers in (("a", "1"), ("b", "2")):
                    out = root / label / cmd / run
                    main([cmd, "--config", str(path), "--seed", str(seed), "--out", str(out),
                          "--workers", workers, "--quiet"])
                    outs.append(out)
                for csv in sorted(outs[0].glob("*.csv")):
                    if not filecmp.cmp(csv, outs[1] / csv.name, shallow=False):
                        mismatched.append(f"{label}/{cmd}/{csv.name}")
    return CheckResult(8, "byte-identical re-runs", not mismatched,
                       "gain, ser-sweep and heatmap CSVs identical across re-runs (1 vs 2 workers)"
                       if not mismatched else "differing: " + ", ".join(mismatched))


CHECKS = (
    guessing_limits,
    analytic_vs_monte_carlo,
    noiseless_round_trip,
    gain_spot_value,
    gssk_symmetry_floor,
    gssk_directional,
    heatmap_structure,
    determinism,
)


def run_all(seed: int | None = None, trials: int | None = None, workers: int = 1) -> list[CheckResult]:
    """
    Run every criterion. ``seed`` replaces each check's default seed;
    ``trials`` replaces the pinned trial budgets (smoke runs only).
    """
    kwargs = {"workers": workers}
    if seed is not None:
        kwargs["seed"] = seed
    if trials is not None:
        kwargs["trials"] = trials
    return [check(**kwargs) for check in CHECKS]
