"""Command-line front end and benchmark harness.

Three subcommands:

* ``solve`` — run one instance and print the result (human, csv or json).
* ``batch`` — run a manifest of instances, write one CSV row per run plus
  aggregate CSVs grouped by p and by instance.
* ``profile`` — turn two or more result CSVs into performance-profile
  points (ratio to the best configuration vs. cumulative fraction).

Exit codes: 0 success, 1 error (including argument and parse errors),
2 when any run hit the time limit.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from collections import defaultdict
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .engine import (
    DEFAULT_DOMINATION_CUTOFF,
    DEFAULT_TIME_LIMIT,
    STATUS_OPTIMAL,
    STATUS_TIMEOUT,
    SolveResult,
    SolverParams,
    solve_by_rounding,
)
from .instance import load_instance

CSV_HEADER = [
    "instance",
    "n",
    "m",
    "p",
    "status",
    "radius",
    "lb",
    "ub",
    "gap_percent",
    "wall_seconds",
    "peak_reps",
    "outer_iterations",
    "cover_probes",
    "seed",
    "feature_flags",
]

DEFAULT_FLAGS_LABEL = "default"


@dataclass
class RunRecord:
    """One solver run in the shape the result CSVs use.

    ``status`` is OPTIMAL, TIMEOUT or ERROR; on ERROR the numeric result
    fields are -1.  ``gap_percent`` is 100 * (ub - lb) / ub (zero when the
    bounds meet).  ``feature_flags`` is the canonical flag summary, or
    "default" when no knob was changed.
    """

    instance: str
    n: int
    m: int
    p: int
    status: str
    radius: int
    lb: int
    ub: int
    gap_percent: float
    wall_seconds: float
    peak_reps: int
    outer_iterations: int
    cover_probes: int
    seed: int
    feature_flags: str

    def to_row(self) -> list[str]:
        return [str(getattr(self, f.name)) for f in fields(self)]

    @classmethod
    def from_row(cls, row: list[str]) -> "RunRecord":
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"expected {len(CSV_HEADER)} columns, got {len(row)}")
        typed = {}
        for f, raw in zip(fields(cls), row):
            if f.type == "int":
                typed[f.name] = int(raw)
            elif f.type == "float":
                typed[f.name] = float(raw)
            else:
                typed[f.name] = raw
        return cls(**typed)

    def key(self) -> tuple[str, int, int]:
        return (self.instance, self.p, self.seed)


def gap_percent(lower: int, upper: int) -> float:
    if upper == lower:
        return 0.0
    return 100.0 * (upper - lower) / upper


def flags_label(params: SolverParams) -> str:
    """Canonical one-token-per-knob summary of the non-default settings."""
    tokens = []
    if not params.use_dominations:
        tokens.append("no-dominations")
    if not params.use_local_search:
        tokens.append("no-local-search")
    if not params.use_rounding:
        tokens.append("no-rounding")
    if params.k is not None:
        tokens.append(f"k={params.k}")
    if params.time_limit != DEFAULT_TIME_LIMIT:
        tokens.append(f"time-limit={params.time_limit:g}")
    if params.domination_cutoff != DEFAULT_DOMINATION_CUTOFF:
        tokens.append(f"domination-cutoff={params.domination_cutoff}")
    return ";".join(tokens) if tokens else DEFAULT_FLAGS_LABEL


def apply_manifest_tokens(params: SolverParams, tokens: list[str]) -> SolverParams:
    """Apply manifest flag tokens (the CLI flags, minus leading dashes)."""
    for tok in tokens:
        if tok == "no-dominations":
            params.use_dominations = False
        elif tok == "no-local-search":
            params.use_local_search = False
        elif tok == "no-rounding":
            params.use_rounding = False
        elif tok.startswith("k="):
            params.k = int(tok[2:])
        elif tok.startswith("time-limit="):
            params.time_limit = float(tok.split("=", 1)[1])
        elif tok.startswith("domination-cutoff="):
            params.domination_cutoff = int(tok.split("=", 1)[1])
        else:
            raise ValueError(f"unknown manifest flag {tok!r}")
    return params


def run_single(path: str, p: int, params: SolverParams) -> tuple[RunRecord, SolveResult | None]:
    """Solve one instance; exceptions become an ERROR record, not a crash."""
    label = flags_label(params)
    try:
        inst = load_instance(path, p=p)
        result = solve_by_rounding(inst, params)
    except Exception as exc:  # noqa: BLE001 - harness boundary
        print(f"error: {path}: {exc}", file=sys.stderr)
        record = RunRecord(
            instance=Path(path).stem,
            n=-1,
            m=-1,
            p=p,
            status="ERROR",
            radius=-1,
            lb=-1,
            ub=-1,
            gap_percent=0.0,
            wall_seconds=0.0,
            peak_reps=0,
            outer_iterations=0,
            cover_probes=0,
            seed=params.seed,
            feature_flags=label,
        )
        return record, None
    record = RunRecord(
        instance=inst.name or Path(path).stem,
        n=inst.n,
        m=inst.m,
        p=p,
        status="OPTIMAL" if result.status == STATUS_OPTIMAL else "TIMEOUT",
        radius=result.radius,
        lb=result.lower,
        ub=result.upper,
        gap_percent=gap_percent(result.lower, result.upper),
        wall_seconds=result.stats.wall_seconds,
        peak_reps=result.stats.peak_reps,
        outer_iterations=len(result.stats.iterations),
        cover_probes=result.stats.cover_probes,
        seed=params.seed,
        feature_flags=label,
    )
    return record, result


def write_records(records: list[RunRecord], stream) -> None:
    writer = csv.writer(stream)
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(rec.to_row())


def read_records(path: str) -> list[RunRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header")
        return [RunRecord.from_row(row) for row in reader if row]


def parse_manifest(text: str) -> list[tuple[str, int, int, list[str]]]:
    """Manifest lines are ``path p seed [flags...]``; '#' starts a comment."""
    runs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 3:
            raise ValueError(f"manifest line {lineno}: need at least `path p seed`")
        try:
            p = int(parts[1])
            seed = int(parts[2])
        except ValueError as exc:
            raise ValueError(f"manifest line {lineno}: {exc}") from exc
        runs.append((parts[0], p, seed, parts[3:]))
    return runs


# ---------------------------------------------------------------------------
# Aggregation and profiles
# ---------------------------------------------------------------------------


def _commonly_solved(records: list[RunRecord]) -> set[tuple[str, int, int]]:
    """Keys that every configuration in the batch solved to optimality."""
    configs = sorted({r.feature_flags for r in records})
    per_key: dict[tuple[str, int, int], dict[str, str]] = defaultdict(dict)
    for rec in records:
        per_key[rec.key()][rec.feature_flags] = rec.status
    return {
        key
        for key, statuses in per_key.items()
        if all(statuses.get(cfg) == "OPTIMAL" for cfg in configs)
    }


def aggregate_records(records: list[RunRecord], by: str) -> list[list[str]]:
    """Aggregate rows grouped by ``by`` ("p" or "instance") and flags.

    Reports run and optimum counts, the mean gap over non-error rows, and
    the mean time over the keys every configuration solved (so slow
    configurations are not flattered by the instances they gave up on).
    """
    common = _commonly_solved(records)
    groups: dict[tuple[str, object], list[RunRecord]] = defaultdict(list)
    for rec in records:
        groups[(rec.feature_flags, getattr(rec, by))].append(rec)
    out = [[by, "feature_flags", "runs", "optimal", "mean_gap_percent", "mean_time_seconds"]]
    for (cfg, group_key) in sorted(groups, key=lambda t: (str(t[1]), t[0])):
        recs = groups[(cfg, group_key)]
        gaps = [r.gap_percent for r in recs if r.status != "ERROR"]
        times = [r.wall_seconds for r in recs if r.key() in common]
        out.append(
            [
                str(group_key),
                cfg,
                str(len(recs)),
                str(sum(1 for r in recs if r.status == "OPTIMAL")),
                f"{sum(gaps) / len(gaps):.6g}" if gaps else "",
                f"{sum(times) / len(times):.6g}" if times else "",
            ]
        )
    return out


def performance_profile(csv_paths: list[str]) -> list[list[str]]:
    """Ratio-to-best profile points for time and gap across configurations.

    Each input CSV is one configuration (labelled by file stem); all must
    cover the same (instance, p, seed) keys.  For every key the best
    configuration gets ratio 1; a configuration's time ratio exists only
    where it solved to optimality, and gap ratios treat 0/0 as 1 and
    positive/0 as unreachable.  Fractions are cumulative over all keys.
    """
    if len(csv_paths) < 2:
        raise ValueError("need at least two result CSVs to compare")
    labels = []
    per_config: dict[str, dict[tuple[str, int, int], RunRecord]] = {}
    for path in csv_paths:
        label = Path(path).stem
        if label in per_config:
            raise ValueError(f"duplicate configuration label {label!r}")
        records = read_records(path)
        table = {rec.key(): rec for rec in records}
        if len(table) != len(records):
            raise ValueError(f"{path}: duplicate (instance, p, seed) keys")
        labels.append(label)
        per_config[label] = table
    keys = set(per_config[labels[0]])
    for label in labels[1:]:
        if set(per_config[label]) != keys:
            raise ValueError("result CSVs do not cover the same (instance, p, seed) keys")
    total = len(keys)

    ratios: dict[tuple[str, str], list[float]] = {
        (label, metric): [] for label in labels for metric in ("time", "gap")
    }
    for key in keys:
        recs = {label: per_config[label][key] for label in labels}
        solved_times = {
            label: r.wall_seconds for label, r in recs.items() if r.status == "OPTIMAL"
        }
        if solved_times:
            best_time = min(solved_times.values())
            for label, t in solved_times.items():
                ratios[(label, "time")].append(1.0 if best_time == 0 else t / best_time)
        gaps = {label: r.gap_percent for label, r in recs.items() if r.status != "ERROR"}
        if gaps:
            best_gap = min(gaps.values())
            for label, g in gaps.items():
                if best_gap == 0.0:
                    if g == 0.0:
                        ratios[(label, "gap")].append(1.0)
                    # positive gap against a zero best: no finite ratio
                else:
                    ratios[(label, "gap")].append(g / best_gap)

    out = [["config", "metric", "ratio", "fraction"]]
    for label in labels:
        for metric in ("time", "gap"):
            values = sorted(ratios[(label, metric)])
            for i, ratio in enumerate(values, start=1):
                out.append([label, metric, f"{ratio:.6g}", f"{i / total:.6g}"])
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _print_human(record: RunRecord, result: SolveResult | None) -> None:
    print(
        f"{record.instance} (n={record.n}, m={record.m}) "
        f"p={record.p} seed={record.seed} flags={record.feature_flags}"
    )
    if result is not None:
        for it in result.stats.iterations:
            print(
                f"  precision 10^{it.exponent}: lb={it.lower} ub={it.upper} "
                f"reps={it.reps_count} probes={it.probes} time={it.seconds:.3f}s"
            )
    print(
        f"{record.status}: radius={record.radius} lb={record.lb} ub={record.ub} "
        f"gap={record.gap_percent:.2f}% time={record.wall_seconds:.3f}s"
    )


def _cmd_solve(ns: argparse.Namespace) -> int:
    params = SolverParams(
        k=ns.k,
        seed=ns.seed,
        time_limit=ns.time_limit,
        use_dominations=not ns.no_dominations,
        domination_cutoff=ns.domination_cutoff,
        use_local_search=not ns.no_local_search,
        use_rounding=not ns.no_rounding,
    )
    record, result = run_single(ns.instance, ns.p, params)
    if ns.format == "human":
        _print_human(record, result)
    elif ns.format == "csv":
        buf = io.StringIO()
        write_records([record], buf)
        sys.stdout.write(buf.getvalue())
    else:
        print(json.dumps(asdict(record), indent=2))
    if record.status == "ERROR":
        return 1
    return 2 if record.status == "TIMEOUT" else 0


def _cmd_batch(ns: argparse.Namespace) -> int:
    try:
        text = Path(ns.manifest).read_text()
        runs = parse_manifest(text)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    records = []
    for i, (path, p, seed, tokens) in enumerate(runs, start=1):
        try:
            params = apply_manifest_tokens(SolverParams(seed=seed), tokens)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        record, _ = run_single(path, p, params)
        records.append(record)
        print(
            f"[{i}/{len(runs)}] {record.instance} p={p} seed={seed} "
            f"-> {record.status} radius={record.radius} {record.wall_seconds:.3f}s"
        )
    out = Path(ns.out)
    with open(out, "w", newline="") as fh:
        write_records(records, fh)
    for by, suffix in (("p", "_by_p.csv"), ("instance", "_by_instance.csv")):
        table = aggregate_records(records, by)
        with open(out.with_name(out.stem + suffix), "w", newline="") as fh:
            csv.writer(fh).writerows(table)
    print(f"wrote {len(records)} rows to {out}")
    if any(r.status == "TIMEOUT" for r in records):
        return 2
    if any(r.status == "ERROR" for r in records):
        return 1
    return 0


def _cmd_profile(ns: argparse.Namespace) -> int:
    try:
        table = performance_profile(ns.csvs)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if ns.out:
        with open(ns.out, "w", newline="") as fh:
            csv.writer(fh).writerows(table)
        print(f"wrote {len(table) - 1} profile points to {ns.out}")
    else:
        writer = csv.writer(sys.stdout)
        writer.writerows(table)
    return 0


class _Parser(argparse.ArgumentParser):
    """Argument errors exit with code 1 (2 is reserved for timeouts)."""

    def error(self, message: str):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _add_solver_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--k", type=_positive_int, default=None, help="cluster count (default p+2)")
    sub.add_argument("--seed", type=int, default=0, help="random seed")
    sub.add_argument(
        "--time-limit", type=float, default=DEFAULT_TIME_LIMIT, help="seconds before giving up"
    )
    sub.add_argument(
        "--no-dominations", action="store_true", help="keep dominated sites as columns"
    )
    sub.add_argument(
        "--no-local-search", action="store_true", help="skip alternative-solution search"
    )
    sub.add_argument(
        "--no-rounding", action="store_true", help="solve at full precision immediately"
    )
    sub.add_argument(
        "--domination-cutoff",
        type=int,
        default=DEFAULT_DOMINATION_CUTOFF,
        help="disable dominations above this site count",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcenter", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="solve one instance")
    solve.add_argument("instance", help="instance file (.tsp or .json)")
    solve.add_argument("--p", type=_positive_int, required=True, help="number of sites to open")
    _add_solver_flags(solve)
    solve.add_argument(
        "--format", choices=("human", "csv", "json"), default="human", help="output format"
    )
    solve.set_defaults(func=_cmd_solve)

    batch = commands.add_parser("batch", help="run a manifest of instances")
    batch.add_argument("manifest", help="text file: `path p seed [flags...]` per line")
    batch.add_argument("out", help="result CSV path (aggregates written alongside)")
    batch.set_defaults(func=_cmd_batch)

    profile = commands.add_parser("profile", help="performance profile from result CSVs")
    profile.add_argument("csvs", nargs="+", help="two or more result CSVs")
    profile.add_argument("--out", default=None, help="write profile CSV here (default stdout)")
    profile.set_defaults(func=_cmd_profile)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 1
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
