"""Command-line front end: ``artifact {weights,phase,sdim,checks}``.

Experiments are described by a JSON config; ``--n``, ``--r``, ``--m-grid``,
``--trials``, ``--seed`` and ``--out`` override individual fields. Exit codes are
0 on success, 1 on a runtime or numeric failure, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from artifact import __version__, geometry, numerics, optweights, recovery, sdim
from artifact.errors import ArtifactError, ConfigError
from artifact.geometry import SubspacePrior
from artifact.weighting import WeightVector

log = logging.getLogger("artifact")

CSV_HEADER = ("program", "m", "successes", "trials", "rate", "mean_rel_err")
NEAR_EQUAL_TOL = 1e-2

DEFAULT_CONFIG: dict[str, Any] = {
    "n": 10,
    "r": 3,
    "r_prime": 3,
    "theta_u": [0.0196, 0.0156, 0.005],
    "theta_v": [0.0258, 0.0146, 0.0098],
    "seed": 0,
    "m_grid": None,
    "trials": 50,
    "programs": ["nuclear", "weighted_optimal"],
    "program": "nuclear",
}

# (n1, n2, gamma, reference S, reference S_ap)
TABLE_ROWS = (
    (10, 100, 0.3, 0.48, 0.487),
    (100, 1000, 0.5, 0.26, 0.27),
    (10, 1000, 0.9, 0.0096, 0.01),
    (5, 5, 0.2, 0.69, 0.71),
)
TABLE_TOL_S = 0.02
TABLE_TOL_SAP = 0.01
KS_SHAPE = (400, 800)
KS_TOL = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    r: int
    r_prime: int
    theta_u: tuple[float, ...]
    theta_v: tuple[float, ...]
    seed: int = 0
    m_grid: tuple[int, ...] = ()
    trials: int = 50
    programs: tuple[Any, ...] = ("nuclear", "weighted_optimal")
    program: Any = "nuclear"

    def prior(self) -> SubspacePrior:
        return SubspacePrior(self.n, self.r, self.r_prime, self.theta_u, self.theta_v)

    def canonical(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _check_program(entry: Any) -> Any:
    if entry in ("nuclear", "weighted_optimal"):
        return entry
    if isinstance(entry, dict) and "weights" in entry:
        w = entry["weights"]
        if not (isinstance(w, list) and len(w) == 3):
            raise ConfigError(f"custom weights need three numbers, got {w!r}")
        try:
            WeightVector(*(float(x) for x in w))
        except (TypeError, ValueError, ArtifactError) as exc:
            raise ConfigError(f"invalid custom weights {w!r}: {exc}") from exc
        return {"weights": [float(x) for x in w]}
    raise ConfigError(f"unknown program {entry!r}")


def build_config(raw: dict, overrides: dict) -> ExperimentConfig:
    merged = {**DEFAULT_CONFIG, **raw}
    merged.update({k: v for k, v in overrides.items() if v is not None})
    if "r" in overrides and overrides["r"] is not None and "r_prime" not in raw:
        merged["r_prime"] = merged["r"]
    try:
        n, r, rp = int(merged["n"]), int(merged["r"]), int(merged["r_prime"])
        theta_u = tuple(float(x) for x in merged["theta_u"])
        theta_v = tuple(float(x) for x in merged["theta_v"])
        seed, trials = int(merged["seed"]), int(merged["trials"])
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"malformed config field: {exc}") from exc
    grid = merged["m_grid"]
    if grid is None:
        grid = list(range(5, n * n + 1, 5)) or [n * n]
    grid = tuple(int(m) for m in grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("m_grid must be strictly increasing")
    if grid and (grid[0] < 1 or grid[-1] > n * n):
        raise ConfigError(f"m_grid entries must lie in [1, {n * n}]")
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    programs = tuple(_check_program(p) for p in merged["programs"])
    cfg = ExperimentConfig(n, r, rp, theta_u, theta_v, seed, grid, trials, programs, _check_program(merged["program"]))
    try:
        cfg.prior()
    except ArtifactError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    return build_config(raw, overrides)


def _program_label(entry: Any) -> str:
    if isinstance(entry, dict):
        return "weighted_custom(" + ";".join(f"{x:g}" for x in entry["weights"]) + ")"
    return entry


def _write_json(path: Path | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _envelope(cfg: ExperimentConfig) -> dict:
    return {"config": cfg.canonical(), "config_hash": cfg.digest(), "version": __version__}


def _optimal(cfg: ExperimentConfig) -> optweights.OptimalWeights:
    return optweights.optimize_weights(cfg.prior())


def cmd_weights(cfg: ExperimentConfig, out: Path | None) -> dict:
    p = cfg.prior()
    res = optweights.optimize_weights(p)
    w = res.w_star
    nuc = sdim.nuclear_threshold(p.n, p.r, p.r_prime)
    band = sdim.error_band(p.n, p.r, sdim.angle_constant(p.clamped()[0]))
    free = (w.w1, w.w2, w.w3)
    report = {
        **_envelope(cfg),
        "theta_u": list(p.theta_u),
        "theta_v": list(p.theta_v),
        "v_star": list(res.v_star),
        "w_star_normalized": list(w.as_tuple()),
        "w4": w.w4,
        "m_hat_weighted": res.m_hat,
        "m_hat_nuclear": nuc.m_hat,
        "error_band": band,
        "near_equal": max(free) / min(free) - 1.0 <= NEAR_EQUAL_TOL,
    }
    _write_json(out, report)
    return report


def _trial_seed(base: int, m: int, k: int) -> int:
    return int(np.random.SeedSequence([base, m, k]).generate_state(1)[0])


def _run_cell(args: tuple) -> tuple[bool, float]:
    """One recovery trial; numeric failures count as unsuccessful."""
    X, ut, vt, weights, m, seed = args
    e = recovery.measure(X, m, seed)
    try:
        if weights is None:
            x_hat, _ = recovery.solve_nuclear(e)
        else:
            x_hat, _ = recovery.solve_weighted_nuclear(e, WeightVector(*weights), ut, vt)
    except ArtifactError as exc:
        log.warning("trial m=%d seed=%d failed: %s", m, seed, exc)
        return False, math.nan
    err = recovery.relative_error(X, x_hat)
    return err <= recovery.SolverParams().success_threshold, err


def _threads() -> int:
    raw = os.environ.get("RECOVERY_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"RECOVERY_THREADS must be an integer, got {raw!r}") from exc


@dataclass(frozen=True)
class PhaseRow:
    program: str
    m: int
    successes: int
    trials: int
    mean_rel_err: float

    @property
    def rate(self) -> float:
        return self.successes / self.trials


def run_phase(cfg: ExperimentConfig) -> tuple[list[PhaseRow], dict]:
    p = cfg.prior()
    inst = geometry.make_prior_instance(p, cfg.seed)
    X = inst.truth.matrix
    meta: dict[str, Any] = {"m_hat_nuclear": sdim.nuclear_threshold(p.n, p.r, p.r_prime).m_hat}
    resolved = []
    for entry in cfg.programs:
        if entry == "nuclear":
            resolved.append(("nuclear", None))
        elif entry == "weighted_optimal":
            opt = _optimal(cfg)
            meta["w_star"] = list(opt.w_star.as_tuple())
            meta["m_hat_weighted_optimal"] = opt.m_hat
            resolved.append(("weighted_optimal", opt.v_star))
        else:
            w = entry["weights"]
            meta[f"m_hat_{_program_label(entry)}"] = sdim.weighted_threshold(WeightVector(*w), p).m_hat
            resolved.append((_program_label(entry), tuple(w)))
    jobs = [
        (X, inst.Utilde, inst.Vtilde, weights, m, _trial_seed(cfg.seed, m, k))
        for _, weights in resolved
        for m in cfg.m_grid
        for k in range(cfg.trials)
    ]
    workers = _threads()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_cell, jobs, chunksize=max(1, cfg.trials // 4)))
    else:
        outcomes = [_run_cell(j) for j in jobs]
    rows = []
    it = iter(outcomes)
    for label, _ in resolved:
        for m in cfg.m_grid:
            cell = [next(it) for _ in range(cfg.trials)]
            errs = [e for _, e in cell if not math.isnan(e)]
            mean = float(np.mean(errs)) if errs else math.nan
            rows.append(PhaseRow(label, m, sum(ok for ok, _ in cell), cfg.trials, mean))
    return rows, meta


def phase_csv(rows: Sequence[PhaseRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([row.program, row.m, row.successes, row.trials, f"{row.rate:.4f}", f"{row.mean_rel_err:.6e}"])
    return buf.getvalue()


def phase_svg(rows: Sequence[PhaseRow], markers: dict[str, float], n_sq: int) -> str:
    """Success rate against m, one polyline per program, dashed lines at the thresholds."""
    width, height, pad = 640, 400, 50
    sx = lambda m: pad + (width - 2 * pad) * m / n_sq
    sy = lambda rate: height - pad - (height - 2 * pad) * rate
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle">measurements m</text>',
        f'<text x="14" y="{height / 2}" transform="rotate(-90 14 {height / 2})" text-anchor="middle">success rate</text>',
    ]
    for tick in (0.0, 0.5, 1.0):
        parts.append(f'<text x="{pad - 6}" y="{sy(tick) + 4:.1f}" text-anchor="end">{tick:g}</text>')
    parts.append(f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="end">{n_sq}</text>')
    programs = list(dict.fromkeys(r.program for r in rows))
    for i, prog in enumerate(programs):
        color = colors[i % len(colors)]
        pts = " ".join(f"{sx(r.m):.1f},{sy(r.rate):.1f}" for r in rows if r.program == prog)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        parts.append(f'<text x="{width - pad - 150}" y="{pad + 16 * i}" fill="{color}">{prog}</text>')
        if prog in markers:
            x = sx(markers[prog])
            parts.append(
                f'<line x1="{x:.1f}" y1="{pad}" x2="{x:.1f}" y2="{height - pad}" stroke="{color}" stroke-dasharray="4 3"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_phase(cfg: ExperimentConfig, out: Path | None, svg: Path | None) -> list[PhaseRow]:
    rows, meta = run_phase(cfg)
    text = phase_csv(rows)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
        _write_json(out.with_suffix(out.suffix + ".json"), {**_envelope(cfg), **meta})
    if svg is not None:
        n_sq = cfg.n * cfg.n
        markers = {"nuclear": n_sq * meta["m_hat_nuclear"]}
        if "m_hat_weighted_optimal" in meta:
            markers["weighted_optimal"] = n_sq * meta["m_hat_weighted_optimal"]
        svg.write_text(phase_svg(rows, markers, n_sq))
    return rows


def cmd_sdim(cfg: ExperimentConfig, out: Path | None) -> dict:
    p = cfg.prior()
    inst = geometry.make_prior_instance(p, cfg.seed)
    entry = cfg.program
    if entry == "nuclear":
        rep = sdim.nuclear_threshold(p.n, p.r, p.r_prime)
        program: Any = "nuclear"
    else:
        w = WeightVector(*_optimal(cfg).v_star) if entry == "weighted_optimal" else WeightVector(*entry["weights"])
        rep = sdim.weighted_threshold(w, p)
        program = w
    est = sdim.mc_statistical_dimension(program, inst, cfg.trials, cfg.seed)
    stderr = None if math.isnan(est.stderr) else est.stderr
    inside = None
    if stderr is not None:
        inside = rep.error_lower - 3 * stderr <= est.mean <= rep.m_hat + 3 * stderr
    report = {
        **_envelope(cfg),
        "program": _program_label(entry),
        "m_hat_closed_form": rep.m_hat,
        "mc_mean": est.mean,
        "mc_stderr": stderr,
        "mc_discarded": est.discarded,
        "error_lower": rep.error_lower,
        "inside_band": inside,
    }
    _write_json(out, report)
    return report


def run_checks(seed: int, trials: int) -> list[dict]:
    results = []
    ks = numerics.mp_ks_distance(*KS_SHAPE, seed)
    results.append({"check": "mp_ks_400x800", "measured": ks, "reference": 0.0, "tolerance": KS_TOL, "pass": ks <= KS_TOL})
    for n1, n2, gamma, ref_s, ref_sap in TABLE_ROWS:
        f = numerics.table_thresholds(n1, n2, gamma, seed)
        s = numerics.expected_shrinkage_mc(n1, n2, f, trials, seed + 10_000)
        sap = numerics.expected_shrinkage_mp(n1, n2, f)
        tag = f"table_{n1}x{n2}_g{gamma:g}"
        results.append({"check": tag + "_S", "measured": s, "reference": ref_s, "tolerance": TABLE_TOL_S,
                        "pass": abs(s - ref_s) <= TABLE_TOL_S})
        results.append({"check": tag + "_Sap", "measured": sap, "reference": ref_sap, "tolerance": TABLE_TOL_SAP,
                        "pass": abs(sap - ref_sap) <= TABLE_TOL_SAP})
    return results


def checks_csv(results: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("check", "measured", "reference", "tolerance", "pass"))
    for r in results:
        writer.writerow([r["check"], f"{r['measured']:.6e}", f"{r['reference']:g}", f"{r['tolerance']:g}",
                         "PASS" if r["pass"] else "FAIL"])
    return buf.getvalue()


def cmd_checks(seed: int, trials: int, out: Path | None) -> list[dict]:
    results = run_checks(seed, trials)
    text = checks_csv(results)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
    return results


def _parse_grid(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad m grid {text!r}") from exc


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--n", type=int)
    common.add_argument("--r", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--out", type=Path, help="output file (stdout if omitted)")
    common.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("weights", parents=[common], help="optimal weights for a prior")
    ph = sub.add_parser("phase", parents=[common], help="success-rate curves")
    ph.add_argument("--m-grid", type=_parse_grid, help="comma-separated measurement counts")
    ph.add_argument("--svg", type=Path, help="also draw the curves")
    sub.add_parser("sdim", parents=[common], help="closed-form vs Monte-Carlo dimension")
    ck = sub.add_parser("checks", help="Marchenko-Pastur and shrinkage table checks")
    ck.add_argument("--seed", type=int, default=0)
    ck.add_argument("--trials", type=int, default=5000)
    ck.add_argument("--out", type=Path)
    ck.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "checks":
            if args.trials < 1:
                raise ConfigError("trials must be at least 1")
            cmd_checks(args.seed, args.trials, args.out)
            return 0
        overrides = {"n": args.n, "r": args.r, "seed": args.seed, "trials": args.trials}
        if args.command == "phase":
            overrides["m_grid"] = args.m_grid
        cfg = load_config(args.config, overrides)
        if args.command == "weights":
            cmd_weights(cfg, args.out)
        elif args.command == "phase":
            cmd_phase(cfg, args.out, args.svg)
        else:
            cmd_sdim(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArtifactError, ArithmeticError, np.linalg.LinAlgError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
