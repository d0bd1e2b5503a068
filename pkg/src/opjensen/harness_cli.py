"""Campaign runner and command-line interface.

Subcommands:
  campaign --config cfg.json [--jobs N] [--out PATH]
  check    --name check_cfl --d1 2 --d2 2 --function square --seed 7 --trials 100 ...
  search   --target petz_drop_f0 --trials 10 --seed 1 [--dims 2,3] [--out PATH]
  replay   --witness reports.jsonl

Exit codes: 0 all pass, 1 inequality violation in a non-ablation check,
2 usage/config error, 3 numeric error. The OPJENSEN_SEED environment
variable overrides the master seed when set.

Reports are JSON Lines (one report per trial, ordered by trial index,
byte-identical for identical config and seed) plus a CSV summary per
parameter cell.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .convex_catalog import ScalarFunction, parse_function_spec
from .errors import (
    NumericError,
    OpJensenError,
    UnknownFunctionError,
    UsageError,
)
from .jensen_checks import (
    ABLATION_TARGETS,
    ablation_search,
    replay_report,
    run_trial,
    trial_compatible,
)
from .linalg_core import ToleranceConfig
from .positive_maps import MAP_KINDS

CHECK_NAMES = (
    "check_cfl",
    "check_main_tracial",
    "check_petz",
    "check_vector_jensen",
    "check_spectral_preorder_lemma",
    "check_pinching_chain",
    "check_partial_trace_duality",
    "check_state_version",
    "check_hansen_pedersen",
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

_SEED_ENV = "OPJENSEN_SEED"


@dataclass
class CampaignConfig:
    checks: list[str]
    trials: int = 100
    dims: list[tuple[int, int]] = field(default_factory=lambda: [(2, 2), (2, 3), (3, 2)])
    functions: list[str] = field(default_factory=lambda: ["square", "abs", "hinge:0"])
    map_kinds: list[str] = field(default_factory=lambda: list(MAP_KINDS))
    weights: list[tuple[float, float]] = field(default_factory=lambda: [(1.0, 1.0)])
    master_seed: int = 0
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    out_path: str = "campaign_reports.jsonl"

    @classmethod
    def from_dict(cls, obj: dict) -> "CampaignConfig":
        try:
            tol_obj = obj.get("tolerances", {})
            return cls(
                checks=list(obj["checks"]),
                trials=int(obj.get("trials", 100)),
                dims=[(int(d[0]), int(d[1])) for d in obj.get("dims", [(2, 2), (2, 3), (3, 2)])],
                functions=list(obj.get("functions", ["square", "abs", "hinge:0"])),
                map_kinds=list(obj.get("map_kinds", MAP_KINDS)),
                weights=[(float(w[0]), float(w[1])) for w in obj.get("weights", [(1.0, 1.0)])],
                master_seed=int(obj.get("master_seed", 0)),
                tolerances=ToleranceConfig(
                    atol=float(tol_obj.get("atol", 1e-9)),
                    rtol=float(tol_obj.get("rtol", 1e-9)),
                    eig_cluster_tol=float(tol_obj.get("eig_cluster_tol", 1e-10)),
                ),
                out_path=str(obj.get("out_path", "campaign_reports.jsonl")),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise UsageError(f"malformed campaign config: {exc}") from exc

    @classmethod
    def from_file(cls, path: str) -> "CampaignConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read campaign config {path!r}: {exc}") from exc
        return cls.from_dict(obj)


def default_campaign(master_seed: int = 12345, out_path: str = "campaign_reports.jsonl") -> CampaignConfig:
    """The built-in smoke campaign: every check over small dims."""
    return CampaignConfig(
        checks=list(CHECK_NAMES),
        trials=40,
        dims=[(2, 2), (2, 3), (3, 2)],
        functions=[
            "square", "abs", "quartic", "exp", "hinge:0",
            "shifted_square:-1", "power:1.5", "inv",
        ],
        map_kinds=list(MAP_KINDS),
        weights=[(1.0, 1.0), (0.3, 2.5)],
        master_seed=master_seed,
        out_path=out_path,
    )


# ---------------------------------------------------------------------------
# Cell expansion
# ---------------------------------------------------------------------------

_CHECK_AXES = {
    "check_cfl": ("dims", "functions"),
    "check_main_tracial": ("dims", "functions", "weights", "branches"),
    "check_petz": ("dims", "functions", "map_kinds", "weights"),
    "check_vector_jensen": ("dims", "functions", "map_kinds"),
    "check_spectral_preorder_lemma": ("dims", "functions", "map_kinds", "weights"),
    "check_pinching_chain": ("dims", "functions", "map_kinds", "weights"),
    "check_partial_trace_duality": ("dims", "weights"),
    "check_state_version": ("dims", "functions"),
    "check_hansen_pedersen": ("dims", "functions"),
}


def _parse_functions(specs: list[str]) -> list[ScalarFunction]:
    try:
        return [parse_function_spec(s) for s in specs]
    except UnknownFunctionError as exc:
        raise UsageError(str(exc)) from exc


def expand_cells(config: CampaignConfig, check_name: str) -> list[dict]:
    """All valid parameter cells for one check, in deterministic order.

    The cross-product runs over the axes the check consumes; cells whose
    (function, map kind, branch) combination violates the check's hypotheses
    are filtered out.
    """
    if check_name not in _CHECK_AXES:
        raise UsageError(
            f"unknown check {check_name!r}; valid checks: {', '.join(CHECK_NAMES)}"
        )
    axes = _CHECK_AXES[check_name]
    functions = _parse_functions(config.functions) if "functions" in axes else [None]
    dims = config.dims or []
    if not dims:
        raise UsageError("config needs at least one (d1, d2) entry in dims")
    for d1, d2 in dims:
        if d1 < 1 or d2 < 1:
            raise UsageError(f"invalid dims ({d1}, {d2})")
    kinds = list(config.map_kinds) if "map_kinds" in axes else [None]
    for k in kinds:
        if k is not None and k not in MAP_KINDS:
            raise UsageError(f"unknown map kind {k!r}; valid kinds: {', '.join(MAP_KINDS)}")
    weights = list(config.weights) if "weights" in axes else [(1.0, 1.0)]
    for w1, w2 in weights:
        if w1 <= 0 or w2 <= 0:
            raise UsageError(f"trace weights must be positive, got ({w1}, {w2})")
    branches = ("normalized", "subnormalized") if "branches" in axes else (None,)
    cells = []
    for d1, d2 in dims:
        for f in functions:
            for kind in kinds:
                for w1, w2 in weights:
                    for branch in branches:
                        cell = {"d1": d1, "d2": d2, "w1": w1, "w2": w2}
                        if f is not None:
                            cell["function"] = f
                        if kind is not None:
                            cell["map_kind"] = kind
                        if branch is not None:
                            cell["branch"] = branch
                        if trial_compatible(check_name, cell):
                            cells.append(cell)
    if not cells:
        raise UsageError(
            f"{check_name}: no valid parameter cells after hypothesis filtering; "
            f"check the configured functions/map kinds"
        )
    return cells


def _cell_key(check_name: str, cell: dict) -> tuple:
    f = cell.get("function")
    return (
        check_name,
        cell.get("d1", ""),
        cell.get("d2", ""),
        (f.label if f is not None else "") + ("/" + cell["branch"] if "branch" in cell else ""),
        cell.get("map_kind", ""),
    )


def build_tasks(config: CampaignConfig) -> list[tuple]:
    """Deterministic, globally indexed task list for the whole campaign."""
    if not config.checks:
        raise UsageError("config lists no checks to run")
    if config.trials < 1:
        raise UsageError("trials must be >= 1")
    tasks = []
    index = 0
    for check_name in config.checks:
        cells = expand_cells(config, check_name)
        for t in range(config.trials):
            cell = cells[t % len(cells)]
            tasks.append((check_name, cell, index))
            index += 1
    return tasks


def _task_payload(task: tuple, config: CampaignConfig) -> tuple:
    """Picklable payload for a pool worker (functions go as spec strings)."""
    check_name, cell, index = task
    flat = {k: v for k, v in cell.items() if k != "function"}
    f = cell.get("function")
    if f is not None:
        flat["function_spec"] = f.label
    tol = config.tolerances
    return (check_name, flat, index, config.master_seed,
            (tol.atol, tol.rtol, tol.eig_cluster_tol))


def _execute_payload(payload: tuple) -> str:
    check_name, flat, index, master_seed, tol_triple = payload
    cell = {k: v for k, v in flat.items() if k != "function_spec"}
    if "function_spec" in flat:
        cell["function"] = parse_function_spec(flat["function_spec"])
    tol = ToleranceConfig(*tol_triple)
    report = run_trial(check_name, cell, master_seed, index, tol)
    return report.to_json_line()


def _csv_path_for(out_path: str) -> str:
    root, ext = os.path.splitext(out_path)
    return (root if ext == ".jsonl" else out_path) + ".csv"


def _write_summary_csv(path: str, tasks: list[tuple], reports: list[dict]) -> None:
    stats: dict[tuple, dict] = {}
    order: list[tuple] = []
    for (check_name, cell, index), rep in zip(tasks, reports):
        key = _cell_key(check_name, cell)
        if key not in stats:
            stats[key] = {"trials": 0, "failures": 0, "gaps": []}
            order.append(key)
        st = stats[key]
        st["trials"] += 1
        st["failures"] += 0 if rep["pass"] else 1
        st["gaps"].append(rep["gap"])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "check", "d1", "d2", "function", "map_kind",
            "trials", "failures", "min_gap", "max_gap", "mean_gap",
        ])
        for key in order:
            st = stats[key]
            gaps = st["gaps"]
            writer.writerow([
                *key, st["trials"], st["failures"],
                repr(min(gaps)), repr(max(gaps)), repr(sum(gaps) / len(gaps)),
            ])


def run_campaign(config: CampaignConfig, jobs: int | None = None) -> dict:
    """Execute a campaign and write the JSONL report plus the CSV summary.

    Each trial's randomness is keyed by (master_seed, global trial index), so
    the output is byte-identical for identical (config, seed) regardless of
    how many workers execute it.
    """
    tasks = build_tasks(config)
    payloads = [_task_payload(t, config) for t in tasks]
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs > 1 and len(payloads) > 1:
        chunk = max(1, len(payloads) // (jobs * 8))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            lines = list(pool.map(_execute_payload, payloads, chunksize=chunk))
    else:
        lines = [_execute_payload(p) for p in payloads]
    try:
        with open(config.out_path, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")
    except OSError as exc:
        raise UsageError(f"cannot write report file {config.out_path!r}: {exc}") from exc
    reports = [json.loads(line) for line in lines]
    _write_summary_csv(_csv_path_for(config.out_path), tasks, reports)
    gaps = [r["gap"] for r in reports]
    summary = {
        "total": len(reports),
        "passed": sum(1 for r in reports if r["pass"]),
        "failed": sum(1 for r in reports if not r["pass"]),
        "resampled": sum(int(r["params"].get("resampled", 0)) for r in reports),
        "max_negative_gap": min(gaps) if gaps else 0.0,
    }
    return summary


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opjensen",
        description="Numerical verification campaigns for trace Jensen inequalities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_campaign = sub.add_parser("campaign", help="run a configured campaign")
    p_campaign.add_argument("--config", help="JSON campaign config (default: built-in smoke campaign)")
    p_campaign.add_argument("--jobs", type=int, default=None, help="parallel workers")
    p_campaign.add_argument("--out", help="override the report output path")

    p_check = sub.add_parser("check", help="run one check as a mini campaign")
    p_check.add_argument("--name", required=True)
    p_check.add_argument("--d1", type=int, default=2)
    p_check.add_argument("--d2", type=int, default=2)
    p_check.add_argument("--function", default="square", help="catalog name, e.g. hinge:0")
    p_check.add_argument("--map", default="ucp_stinespring", dest="map_kind")
    p_check.add_argument("--w1", type=float, default=1.0)
    p_check.add_argument("--w2", type=float, default=1.0)
    p_check.add_argument("--branch", default="normalized",
                         choices=["normalized", "subnormalized"])
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--trials", type=int, default=100)
    p_check.add_argument("--tol", type=float, default=1e-9)
    p_check.add_argument("--out", help="write the trial reports to this JSONL path")

    p_search = sub.add_parser("search", help="hypothesis-ablation search")
    p_search.add_argument("--target", required=True)
    p_search.add_argument("--trials", type=int, default=10)
    p_search.add_argument("--seed", type=int, default=0)
    p_search.add_argument("--dims", default="2,3", help="comma-separated dims")
    p_search.add_argument("--out", help="write the worst-gap witness report to this path")

    p_replay = sub.add_parser("replay", help="re-run a serialized failure witness")
    p_replay.add_argument("--witness", required=True, help="report file (JSON or JSONL)")
    return parser


def _env_seed(default: int) -> int:
    raw = os.environ.get(_SEED_ENV)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"{_SEED_ENV} must be an integer, got {raw!r}") from exc


def _cmd_campaign(args) -> int:
    config = CampaignConfig.from_file(args.config) if args.config else default_campaign()
    config.master_seed = _env_seed(config.master_seed)
    if args.out:
        config.out_path = args.out
    summary = run_campaign(config, jobs=args.jobs)
    print(json.dumps(summary, sort_keys=True))
    print(f"reports: {config.out_path}")
    print(f"summary: {_csv_path_for(config.out_path)}")
    return EXIT_OK if summary["failed"] == 0 else EXIT_VIOLATION


def _cmd_check(args) -> int:
    if args.name not in CHECK_NAMES:
        raise UsageError(f"unknown check {args.name!r}; valid checks: {', '.join(CHECK_NAMES)}")
    seed = _env_seed(args.seed)
    tol = ToleranceConfig(atol=args.tol, rtol=args.tol)
    try:
        f = parse_function_spec(args.function)
    except UnknownFunctionError as exc:
        raise UsageError(str(exc)) from exc
    cell = {
        "d1": args.d1, "d2": args.d2, "w1": args.w1, "w2": args.w2,
        "function": f, "map_kind": args.map_kind, "branch": args.branch,
    }
    if not trial_compatible(args.name, cell):
        raise UsageError(
            f"{args.name} with function {f.label!r} and map {args.map_kind!r} "
            f"violates the check's hypotheses"
        )
    reports = [run_trial(args.name, cell, seed, t, tol) for t in range(args.trials)]
    failed = [r for r in reports if not r.passed]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for r in reports:
                fh.write(r.to_json_line() + "\n")
    gaps = [r.gap for r in reports]
    print(json.dumps({
        "check": args.name, "trials": len(reports), "failures": len(failed),
        "min_gap": min(gaps), "max_gap": max(gaps),
    }, sort_keys=True))
    return EXIT_OK if not failed else EXIT_VIOLATION


def _cmd_search(args) -> int:
    if args.target not in ABLATION_TARGETS:
        raise UsageError(
            f"unknown ablation target {args.target!r}; valid targets: {', '.join(ABLATION_TARGETS)}"
        )
    try:
        dims = [int(d) for d in args.dims.split(",") if d.strip()]
    except ValueError as exc:
        raise UsageError(f"--dims must be comma-separated integers, got {args.dims!r}") from exc
    seed = _env_seed(args.seed)
    result = ablation_search(args.target, args.trials, dims, seed)
    payload = {
        "target": result.target,
        "trials": result.trials,
        "max_violation": result.max_violation,
        "violation_found": result.found_violation,
    }
    print(json.dumps(payload, sort_keys=True))
    if result.witness is not None:
        line = result.witness.to_json_line()
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(line + "\n")
            print(f"witness: {args.out}")
        else:
            print(line)
    return EXIT_OK


def _cmd_replay(args) -> int:
    try:
        with open(args.witness, "r", encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except OSError as exc:
        raise UsageError(f"cannot read witness file {args.witness!r}: {exc}") from exc
    original = None
    for line in lines:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise UsageError(f"witness file is not JSON/JSONL: {exc}") from exc
        if isinstance(obj, dict) and obj.get("witness"):
            original = obj
            break
    if original is None:
        raise UsageError("no report with a witness found in the file")
    replayed = replay_report(original)
    rel = 1e-12
    reproduced = all(
        abs(a - b) <= rel * max(1.0, abs(a), abs(b))
        for a, b in (
            (replayed.lhs, original["lhs"]),
            (replayed.rhs, original["rhs"]),
            (replayed.gap, original["gap"]),
        )
    )
    print(json.dumps({
        "check": replayed.check_name,
        "lhs": replayed.lhs, "rhs": replayed.rhs, "gap": replayed.gap,
        "recorded_gap": original["gap"], "reproduced": reproduced,
    }, sort_keys=True))
    return EXIT_OK if reproduced else EXIT_VIOLATION


def cli_entry(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "campaign":
            return _cmd_campaign(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "search":
            return _cmd_search(args)
        if args.command == "replay":
            return _cmd_replay(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OpJensenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli_entry())


if __name__ == "__main__":
    main()
