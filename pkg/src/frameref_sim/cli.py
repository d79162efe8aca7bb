"""Operator command surface: ingest, split, embed-import, fit-persona,
diagnose, simulate, report.

Exit codes: 0 success, 1 validation error (bad arguments, bad config,
malformed inputs), 2 runtime error. Diagnostics go to stderr; data goes
to files or stdout.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .corpus import (
    RecordSchema,
    load_pool,
    parse_record,
    summarize_corpus,
    write_split_records,
)
from .embeddings import (
    WindowAggregate,
    build_store,
    export_store,
    import_store,
)
from .environment import SimConfig, run_monte_carlo
from .errors import (
    ConfigParse,
    DomainError,
    SimError,
    UnknownKey,
)
from .metrics import (
    curve_to_csv,
    diagnostic_eval,
    diagnostic_to_csv,
    per_step_curve,
    summary_to_csv,
    trajectory_summary,
)
from .personas import (
    Policy,
    fit_synthetic_persona,
    load_persona,
    load_targets,
    save_persona,
)
from .splitter import (
    Split,
    assign_splits,
    build_components,
    load_assignment,
    load_evidence_index,
    verify_no_leakage,
    write_assignment,
)
from .trajlog import read_trajectories, write_trajectories
from ._jsonl import iter_lines


class _CliError(SimError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; the contract here is 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _CliError(message)


_CONFIG_KEYS = {
    "claims": str,
    "embeddings": str,
    "persona": str,
    "k": int,
    "window_size": int,
    "horizon": int,
    "softmax_temperature": (int, float),
    "policy": str,
    "n_trajectories": int,
    "master_seed": int,
    "h0": (int, float),
    "window_aggregate": str,
    "refuted_sticky": bool,
}
_REQUIRED_CONFIG_KEYS = ("claims", "embeddings", "persona")


def load_config(path) -> tuple[SimConfig, dict[str, str]]:
    """Parse a simulate config file (strict JSON: unknown keys are fatal)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParse(f"cannot read config {path}: {exc}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParse(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigParse(f"config {path} must be a JSON object")

    unknown = sorted(set(payload) - set(_CONFIG_KEYS))
    if unknown:
        raise UnknownKey(f"unknown config key(s): {', '.join(unknown)}")
    missing = [key for key in _REQUIRED_CONFIG_KEYS if key not in payload]
    if missing:
        raise ConfigParse(f"config missing required key(s): {', '.join(missing)}")
    for key, expected in _CONFIG_KEYS.items():
        if key not in payload:
            continue
        value = payload[key]
        # bool is an int subclass; reject it for the numeric knobs.
        if expected is not bool and isinstance(value, bool):
            raise ConfigParse(f"config key {key} has wrong type")
        if not isinstance(value, expected):
            raise ConfigParse(f"config key {key} has wrong type")

    try:
        policy = Policy[payload.get("policy", "GREEDY").upper()]
    except KeyError:
        raise DomainError(f"unknown policy: {payload['policy']!r}") from None
    try:
        aggregate = WindowAggregate[payload.get("window_aggregate", "MEAN").upper()]
    except KeyError:
        raise DomainError(
            f"unknown window_aggregate: {payload['window_aggregate']!r}"
        ) from None

    config = SimConfig(
        k=payload.get("k", 5),
        window_size=payload.get("window_size", 3),
        horizon=payload.get("horizon", 100),
        softmax_temperature=float(payload.get("softmax_temperature", 1.0)),
        policy=policy,
        n_trajectories=payload.get("n_trajectories", 100),
        master_seed=payload.get("master_seed", 0),
        h0=float(payload.get("h0", 0.0)),
        window_aggregate=aggregate,
        refuted_sticky=payload.get("refuted_sticky", False),
    )
    config.validate()
    paths = {key: payload[key] for key in _REQUIRED_CONFIG_KEYS}
    return config, paths


def dump_config(config: SimConfig, paths: dict[str, str]) -> dict:
    return {
        **paths,
        "k": config.k,
        "window_size": config.window_size,
        "horizon": config.horizon,
        "softmax_temperature": config.softmax_temperature,
        "policy": config.policy.value,
        "n_trajectories": config.n_trajectories,
        "master_seed": config.master_seed,
        "h0": config.h0,
        "window_aggregate": config.window_aggregate.value,
        "refuted_sticky": config.refuted_sticky,
    }


@dataclass
class RunManifest:
    tool_version: str
    master_seed: int
    kernel_backend: str
    config: dict
    input_digests: dict[str, str]
    created_unix: float

    # Wall-clock metadata is excluded when comparing manifests.
    COMPARE_EXCLUDE = ("created_unix",)

    def to_json(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "master_seed": self.master_seed,
            "kernel_backend": self.kernel_backend,
            "config": self.config,
            "input_digests": self.input_digests,
            "created_unix": self.created_unix,
        }


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(path, config: SimConfig, paths: dict[str, str]) -> None:
    manifest = RunManifest(
        tool_version=__version__,
        master_seed=config.master_seed,
        kernel_backend=kernels.BACKEND,
        config=dump_config(config, paths),
        input_digests={name: _sha256(p) for name, p in sorted(paths.items())},
        created_unix=time.time(),
    )
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_ingest(args) -> int:
    schema = RecordSchema[args.schema.upper()]
    pool = load_pool(args.infile, schema, keep_failed=args.keep_failed)

    keep_groups = None
    if args.assignment:
        if not args.only_split:
            raise _CliError("--assignment requires --only-split")
        wanted = Split[args.only_split.upper()]
        assignment = load_assignment(args.assignment)
        keep_groups = {g for g, s in assignment.items() if s is wanted}

    variants = [
        v
        for v in pool.variants()
        if keep_groups is None or v.group_id in keep_groups
    ]
    with open(args.out, "w", encoding="utf-8") as fh:
        write_split_records(variants, fh)

    if args.summary_out:
        if schema is not RecordSchema.RAW:
            raise _CliError("--summary-out requires --schema raw")
        records = (
            parse_record(line, RecordSchema.RAW) for line in iter_lines(args.infile)
        )
        rows = summarize_corpus(records)
        with open(args.summary_out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["framing", "failed", "passed", "pass_rate", "mean_whitespace_tokens"]
            )
            for row in rows:
                writer.writerow(
                    [
                        row.framing,
                        row.failed,
                        row.passed,
                        "" if row.pass_rate is None else repr(row.pass_rate),
                        ""
                        if row.mean_whitespace_tokens is None
                        else repr(row.mean_whitespace_tokens),
                    ]
                )
    print(
        f"ingested {len(variants)} variants in {len({v.group_id for v in variants})} groups",
        file=sys.stderr,
    )
    return 0


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        raise _CliError(f"ratios must be numbers: {text!r}") from None
    if len(values) != 3:
        raise _CliError(f"ratios must have three components: {text!r}")
    return values  # range/sum validation happens in assign_splits


def _cmd_split(args) -> int:
    index = load_evidence_index(args.evidence)
    components = build_components(index)
    assignment = assign_splits(components, _parse_ratios(args.ratios), seed=args.seed)
    report = verify_no_leakage(assignment, index)
    if not report.ok:
        # Unreachable for assign_splits output; belt-and-braces.
        print(f"leakage violations: {report.violations}", file=sys.stderr)
        return 2
    with open(args.out, "w", encoding="utf-8") as fh:
        write_assignment(assignment, fh)
    counts = {split.value: assignment.counts[split] for split in Split}
    print(
        f"{len(components)} components over {len(index)} groups -> {counts}",
        file=sys.stderr,
    )
    return 0


def _cmd_embed_import(args) -> int:
    if args.format == "fremb1":
        store = import_store(args.infile)
    else:
        pairs = []
        dimension = None
        for line in iter_lines(args.infile):
            obj = json.loads(line)
            values = obj["values"]
            if dimension is None:
                dimension = len(values)
            pairs.append((obj["variant_id"], values))
        if dimension is None:
            raise _CliError(f"no embedding records in {args.infile}")
        store = build_store(pairs, dimension)
    export_store(store, args.out)
    print(
        f"imported {len(store)} vectors (dimension {store.dimension}) "
        f"-> {args.out}",
        file=sys.stderr,
    )
    return 0


def _cmd_fit_persona(args) -> int:
    with open(args.targets, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    name, targets = load_targets(payload)
    config = fit_synthetic_persona(targets, name=name)
    config.validate_complete()
    save_persona(config, args.out)
    print(f"fitted persona {name!r} ({len(config.cells)} cells) -> {args.out}", file=sys.stderr)
    return 0


def _cmd_diagnose(args) -> int:
    with open(args.persona, "r", encoding="utf-8") as fh:
        persona = load_persona(json.load(fh), Policy[args.policy.upper()])
    pool = load_pool(args.claims, RecordSchema.SPLIT)
    claims = list(pool.variants())
    rng = np.random.default_rng(args.seed)
    rows = diagnostic_eval(persona, claims, rng)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            diagnostic_to_csv(rows, fh)
    else:
        diagnostic_to_csv(rows, sys.stdout)
    return 0


def _cmd_simulate(args) -> int:
    config, paths = load_config(args.config)
    pool = load_pool(paths["claims"], RecordSchema.SPLIT)
    store = import_store(paths["embeddings"])
    with open(paths["persona"], "r", encoding="utf-8") as fh:
        persona = load_persona(json.load(fh), config.policy)
    trajectories = run_monte_carlo(pool, store, persona, config)
    with open(args.out, "w", encoding="utf-8") as fh:
        write_trajectories(trajectories, fh)
    manifest_path = args.manifest or (str(args.out) + ".manifest.json")
    _write_manifest(manifest_path, config, paths)
    failures = sum(1 for t in trajectories if t.error)
    print(
        f"wrote {len(trajectories)} trajectories -> {args.out} "
        f"(manifest {manifest_path}"
        + (f", {failures} aborted" if failures else "")
        + ")",
        file=sys.stderr,
    )
    return 0


def _cmd_report(args) -> int:
    trajectories = read_trajectories(args.curves or args.summary)
    if args.curves:
        curve_to_csv(per_step_curve(trajectories), sys.stdout)
    else:
        summary_to_csv(trajectory_summary(trajectories), sys.stdout)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="frameref-sim", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("ingest", help="validate records and write split-schema claims")
    p.add_argument("--schema", choices=["raw", "split"], required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--keep-failed", action="store_true")
    p.add_argument("--summary-out", default=None)
    p.add_argument("--assignment", default=None, help="split assignment file")
    p.add_argument("--only-split", default=None, help="keep groups of this split")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("split", help="build leakage-free train/dev/test splits")
    p.add_argument("--evidence", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("embed-import", help="validate/normalize an embedding store")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["fremb1", "jsonl"], default="fremb1")
    p.set_defaults(func=_cmd_embed_import)

    p = sub.add_parser("fit-persona", help="calibrate a synthetic persona to targets")
    p.add_argument("--targets", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit_persona)

    p = sub.add_parser("diagnose", help="per-framing diagnostic metrics for a persona")
    p.add_argument("--persona", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=["GREEDY", "SAMPLE"], default="GREEDY")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("simulate", help="run Monte Carlo trajectories")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("report", help="tables from a trajectory log")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--curves", default=None, help="per-step health curve CSV")
    group.add_argument("--summary", default=None, help="trajectory summary CSV")
    p.set_defaults(func=_cmd_report)

    return parser


def cmd_dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            print("error: a command is required", file=sys.stderr)
            return 1
        return args.func(args)
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cmd_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
