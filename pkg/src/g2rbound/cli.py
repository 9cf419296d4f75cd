"""Command-line front door: ``verify``, ``sweep``, ``estimate`` and ``report``.

Exit codes: 0 success, 1 property or validation failure, 2 usage error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .core import make_rng
from .errors import G2RError, ParseError, ValidationError
from .estimators import CSV_COLUMNS, BoundReport, ConfidenceConfig
from .oracle import INEQUALITY_TOL, IDENTITY_TOL, exact_bounds, verify_proof_chain
from .pipeline import run_scenario
from .predictions import estimate_from_records, read_predictions, records_from_run, write_predictions
from .synthgen import KNOBS, ScenarioConfig, make_fuzz_instance, sweep
from .training import TrainConfig

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

CURVES = ("eps_test_g_h", "eps_test_r_h", "lambda_hat", "d_g2r_hat", "d_da_hat", "b_g2r_hat", "b_da_hat")


class UsageError(G2RError):
    pass


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(fuzz_count: int, seed: int = 0, self_test: bool = False, out: Path | None = None) -> tuple[int, dict]:
    """Fuzz the exact oracle over random discrete worlds.

    Checks, per instance: the G2R and DA bounds for a random member ``h``,
    dominance of the single-pair distance by the supremum, and the proof
    chain for both the joint minimizer and a random (non-optimal) ``h*``.
    ``self_test`` lowers every G2R bound by 0.5 to prove violations are caught.
    """
    if fuzz_count < 1:
        raise UsageError("--fuzz must be >= 1")
    failures = []
    min_slack = min_g2r = min_da = math.inf
    max_gap = -math.inf
    for i in range(fuzz_count):
        inst = make_fuzz_instance(seed * 1_000_003 + i)
        rng = make_rng(seed, 70, i)
        members = inst.space.members
        h = members[int(rng.integers(len(members)))]
        h_adv = members[int(rng.integers(len(members)))]
        rep = exact_bounds(inst, h)
        b_g2r = rep.b_g2r - 0.5 if self_test else rep.b_g2r
        chain = verify_proof_chain(inst, h, rep.h_star)
        chain_adv = verify_proof_chain(inst, h, h_adv)

        problems = []
        if rep.eps_r_h > b_g2r + INEQUALITY_TOL:
            problems.append("g2r-bound")
        if rep.eps_r_h > rep.b_da + INEQUALITY_TOL:
            problems.append("da-bound")
        if rep.d_hdh > rep.d_HdH + IDENTITY_TOL:
            problems.append("dominance")
        if not chain.all_hold:
            problems.append("proof-chain")
        if not chain_adv.all_hold:
            problems.append("proof-chain-adversarial")

        min_g2r = min(min_g2r, b_g2r - rep.eps_r_h)
        min_da = min(min_da, rep.b_da - rep.eps_r_h)
        min_slack = min(min_slack, chain.final_slack, chain_adv.final_slack)
        max_gap = max(max_gap, rep.d_hdh - rep.d_HdH)
        if problems:
            failures.append({
                "index": i, "problems": problems, "instance": inst.to_dict(),
                "h": int(members.index(h)), "h_adversarial": int(members.index(h_adv)),
            })

    summary = {
        "instances": fuzz_count, "seed": seed, "self_test": self_test,
        "violations": len(failures),
        "min_final_slack": min_slack, "min_g2r_slack": min_g2r, "min_da_slack": min_da,
        "max_dhdh_minus_dHdH": max_gap,
        "failures": failures[:10],
    }
    if out is not None and failures:
        out.mkdir(parents=True, exist_ok=True)
        for f in failures:
            (out / f"violation_{f['index']:05d}.json").write_text(json.dumps(f))
    return (EXIT_FAIL if failures else EXIT_OK), summary


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def load_config(path: Path | None) -> tuple[dict, bytes]:
    """Parse a TOML config with sections ``[scenario]``, ``[train]`` and ``[sweep]``."""
    if path is None:
        return {}, b""
    raw = Path(path).read_bytes()
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as e:
        raise ValidationError(f"{path}: {e}") from None
    allowed = {
        "scenario": {f.name for f in dataclasses.fields(ScenarioConfig)},
        "train": {f.name for f in dataclasses.fields(TrainConfig)},
        "sweep": {"knob", "values", "seeds", "delta", "workers"},
    }
    for section, body in doc.items():
        if section not in allowed or not isinstance(body, dict):
            raise ValidationError(f"{path}: unknown section [{section}]")
        unknown = set(body) - allowed[section]
        if unknown:
            raise ValidationError(f"{path}: unknown keys in [{section}]: {sorted(unknown)}")
    return doc, raw


def _run_point(args):
    cfg, tc, delta, keep_predictions = args
    res = run_scenario(cfg, tc, ConfidenceConfig(delta))
    recs = records_from_run(res.data, res.h, res.h_star_hat, res.h_da) if keep_predictions else None
    return res.report, recs


def cmd_sweep(config: Path | None, knob: str | None, values, seeds, out: Path,
              workers: int | None = None, delta: float | None = None,
              save_predictions: bool = False) -> tuple[int, dict]:
    doc, raw = load_config(config)
    sw = doc.get("sweep", {})
    knob = knob or sw.get("knob", "gamma")
    if knob not in KNOBS:
        raise UsageError(f"--knob must be one of {KNOBS}")
    values = list(values if values is not None else sw.get("values", []))
    seeds = list(seeds if seeds is not None else sw.get("seeds", [0]))
    if not values:
        raise UsageError("sweep needs at least one value")
    delta = delta if delta is not None else sw.get("delta", 0.05)
    workers = workers or sw.get("workers", 1)
    base = ScenarioConfig(**doc.get("scenario", {}))
    tc = TrainConfig(**doc.get("train", {}))
    conf = ConfidenceConfig(delta)
    configs = sweep(base, knob, values, seeds)

    started = datetime.now(timezone.utc).isoformat()
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise OSError(f"output directory {out} is not writable: {e}") from e

    jobs = [(c, tc, conf.delta, save_predictions) for c in configs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(j) for j in jobs]
    reports = [r for r, _ in results]

    outputs = {"csv": str(out / "bounds.csv"), "series": str(out / "series.json")}
    write_reports_csv(reports, out / "bounds.csv")
    (out / "series.json").write_text(json.dumps(aggregate(reports, knob), indent=2))
    if save_predictions:
        pdir = out / "predictions"
        pdir.mkdir(exist_ok=True)
        for i, (_, recs) in enumerate(results):
            write_predictions(recs, pdir / f"run_{i:04d}.csv")
        outputs["predictions"] = str(pdir)
    manifest = {
        "command": "sweep", "knob": knob, "values": values, "seeds": seeds,
        "config_digest": hashlib.sha256(raw).hexdigest(),
        "seed": base.seed, "tool_version": __version__,
        "started": started, "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": outputs,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return EXIT_OK, {"rows": len(reports), **outputs}


# ---------------------------------------------------------------------------
# report CSV I/O and aggregation
# ---------------------------------------------------------------------------


def write_reports_csv(reports, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in reports:
            w.writerow(r.csv_row())


def _num(v: str):
    if v == "":
        return None
    try:
        return int(v)
    except ValueError:
        return float(v)


def read_reports_csv(path: Path) -> list[BoundReport]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_COLUMNS:
            raise ValidationError(f"{path}: column schema differs from {','.join(CSV_COLUMNS)}")
        out = []
        for row in reader:
            if len(row) != len(CSV_COLUMNS):
                raise ParseError(f"{path}: expected {len(CSV_COLUMNS)} fields", reader.line_num)
            try:
                vals = dict(zip(CSV_COLUMNS, map(_num, row)))
            except ValueError as e:
                raise ParseError(f"{path}: {e}", reader.line_num) from None
            out.append(BoundReport(**vals))
    return out


def _detect_knob(reports, knob: str | None) -> str:
    varying = [k for k in KNOBS if len({getattr(r, k) for r in reports}) > 1]
    if len(varying) > 1:
        raise ValidationError("rows mix gamma and rho sweeps")
    if knob is not None:
        if varying and varying[0] != knob:
            raise ValidationError(f"rows vary {varying[0]}, not {knob}")
        return knob
    return varying[0] if varying else "gamma"


def aggregate(reports, knob: str | None = None) -> dict:
    """Mean and sample standard deviation of every curve per knob value."""
    if not reports:
        raise ValidationError("nothing to aggregate")
    knob = _detect_knob(reports, knob)
    groups: dict[float, list] = {}
    for r in reports:
        groups.setdefault(getattr(r, knob), []).append(r)
    xs = sorted(groups)
    curves = {}
    for c in CURVES:
        means, stds = [], []
        for x in xs:
            vals = [getattr(r, c) for r in groups[x] if getattr(r, c) is not None]
            means.append(statistics.fmean(vals) if vals else None)
            stds.append(statistics.stdev(vals) if len(vals) > 1 else (0.0 if vals else None))
        curves[c] = {"mean": means, "std": stds}
    return {"knob": knob, "values": xs, "counts": [len(groups[x]) for x in xs], "curves": curves}


def cmd_report(inputs, out: Path, knob: str | None = None) -> tuple[int, dict]:
    reports = []
    for p in inputs:
        reports.extend(read_reports_csv(Path(p)))
    series = aggregate(reports, knob)
    Path(out).write_text(json.dumps(series, indent=2))
    return EXIT_OK, {"rows": len(reports), "points": len(series["values"]), "out": str(out)}


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def cmd_estimate(path: Path, delta: float = 0.05, out: Path | None = None) -> tuple[int, dict]:
    records = read_predictions(path)
    report = estimate_from_records(records, ConfidenceConfig(delta))
    warnings = []
    if report.d_da_hat is None:
        warnings.append("pred_hda absent: d_da_hat and b_da_hat skipped")
        print("warning: " + warnings[0], file=sys.stderr)
    if out is not None:
        write_reports_csv([report], Path(out))
    return EXIT_OK, {**report.to_dict(), "warnings": warnings}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="g2rbound", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="fuzz the exact oracle against every bound inequality")
    v.add_argument("--fuzz", type=int, default=500)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", type=Path, help="directory for offending instances")
    v.add_argument("--self-test", action="store_true", help="corrupt bounds on purpose (negative control)")

    s = sub.add_parser("sweep", help="run a gamma or rho sweep and write bound reports")
    s.add_argument("--config", type=Path)
    s.add_argument("--knob", choices=KNOBS)
    s.add_argument("--values", type=_floats)
    s.add_argument("--seeds", type=_ints)
    s.add_argument("--delta", type=float)
    s.add_argument("--workers", type=int)
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--save-predictions", action="store_true")

    e = sub.add_parser("estimate", help="estimate bounds from a prediction CSV")
    e.add_argument("predictions", type=Path)
    e.add_argument("--delta", type=float, default=0.05)
    e.add_argument("--out", type=Path, help="also write the report as a one-row CSV")

    r = sub.add_parser("report", help="aggregate bound CSVs into plot series")
    r.add_argument("inputs", nargs="+", type=Path)
    r.add_argument("--knob", choices=KNOBS)
    r.add_argument("--out", type=Path, required=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            code, summary = cmd_verify(args.fuzz, args.seed, args.self_test, args.out)
        elif args.command == "sweep":
            code, summary = cmd_sweep(args.config, args.knob, args.values, args.seeds, args.out,
                                      args.workers, args.delta, args.save_predictions)
        elif args.command == "estimate":
            code, summary = cmd_estimate(args.predictions, args.delta, args.out)
        else:
            code, summary = cmd_report(args.inputs, args.out, args.knob)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except G2RError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL
    print(json.dumps(summary, indent=2, default=str))
    return code


if __name__ == "__main__":
    sys.exit(main())
