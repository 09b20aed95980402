"""Command-line front end: generate / cluster / check / sweep.

Machine-parseable JSON goes to stdout, human logs to stderr.  Exit codes:
0 success, 1 runtime or convergence failure, 2 invalid input.  The default
seed is 0; the SPECLUSTER_SEED environment variable overrides it, and an
explicit --seed flag overrides both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import condition_report, score
from .errors import ConvergenceError, InvalidInputError, SpeclusterError
from .harness import SweepSpec, run_sweep, write_csv, write_records_jsonl
from .models import (
    BsbmParams,
    MixtureModel,
    bsbm_to_mixture,
    load_dataset,
    sample,
    save_dataset,
)
from .pipeline import cluster_detailed

ENV_SEED = "SPECLUSTER_SEED"


def _log(args, message: str) -> None:
    if getattr(args, "verbose", False):
        print(message, file=sys.stderr)


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True, indent=2))


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    raw = os.environ.get(ENV_SEED)
    if raw is not None:
        try:
            return int(raw)
        except ValueError as exc:
            raise InvalidInputError(f"{ENV_SEED} must be an integer, got {raw!r}") from exc
    return 0


def _parse_kv(text: str) -> dict:
    out = {}
    for item in text.split(","):
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidInputError(f"expected key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _bsbm_from_inline(text: str) -> BsbmParams:
    fields = _parse_kv(text)
    missing = {"m", "n", "k", "p", "q"} - set(fields)
    if missing:
        raise InvalidInputError(f"--bsbm is missing {sorted(missing)}")
    try:
        return BsbmParams.balanced(
            m=int(fields["m"]),
            n=int(fields["n"]),
            k=int(fields["k"]),
            p=float(fields["p"]),
            q=float(fields["q"]),
        )
    except ValueError as exc:
        raise InvalidInputError(f"bad --bsbm value: {exc}") from exc


def _model_from_file(path) -> tuple[MixtureModel, int, BsbmParams | None]:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read model file {path}: {exc}") from exc
    kind = obj.get("kind")
    try:
        if kind == "bsbm":
            if "left_sizes" in obj or "right_assignment" in obj:
                params = BsbmParams(
                    m=int(obj["m"]),
                    n=int(obj["n"]),
                    k=int(obj["k"]),
                    p=float(obj["p"]),
                    q=float(obj["q"]),
                    left_sizes=tuple(int(s) for s in obj["left_sizes"]),
                    right_assignment=np.asarray(obj["right_assignment"], dtype=np.int64),
                )
            else:
                params = BsbmParams.balanced(
                    int(obj["m"]), int(obj["n"]), int(obj["k"]), float(obj["p"]), float(obj["q"])
                )
            return bsbm_to_mixture(params), params.m, params
        if kind == "mixture":
            model = MixtureModel(
                np.asarray(obj["means"], dtype=np.float64),
                np.asarray(obj["weights"], dtype=np.float64),
                sigma_sq=obj.get("sigma_sq"),
            )
            return model, int(obj["m"]), None
    except KeyError as exc:
        raise InvalidInputError(f"model file {path} is missing field {exc}") from exc
    raise InvalidInputError(f"model file {path}: 'kind' must be 'bsbm' or 'mixture'")


def cmd_generate(args) -> int:
    seed = _resolve_seed(args)
    if (args.bsbm is None) == (args.model is None):
        raise InvalidInputError("generate needs exactly one of --bsbm or --model")
    if args.bsbm is not None:
        params = _bsbm_from_inline(args.bsbm)
        model, m, bsbm = bsbm_to_mixture(params), params.m, params
    else:
        model, m, bsbm = _model_from_file(args.model)
    dataset = sample(model, m, seed)
    dataset.bsbm = bsbm
    mtx_path, json_path = save_dataset(dataset, args.out)
    _log(args, f"wrote {mtx_path} and {json_path}")
    if model.k >= 2:
        _emit(condition_report(dataset).to_json())
    else:
        _emit({"note": "condition report needs at least two components"})
    return 0


def cmd_cluster(args) -> int:
    seed = _resolve_seed(args)
    dataset = load_dataset(args.data)
    if dataset.m < 2 * args.k:
        raise InvalidInputError(f"need m >= 2k, got m={dataset.m}, k={args.k}")
    detail = cluster_detailed(dataset.matrix, args.k, seed)
    Path(args.out).write_text(json.dumps(detail.labels.tolist()) + "\n")
    _log(args, f"wrote labels to {args.out}")
    out: dict = {"labels_path": str(args.out)}
    if dataset.truth is not None:
        out.update(score(detail.labels, dataset.truth, args.k).to_json())
    if args.diagnostics:
        out["diagnostics"] = {
            "match_ambiguous": detail.match_ambiguous,
            "matching": detail.matching.tolist(),
            "half_sizes": [int(detail.first_half.size), int(detail.second_half.size)],
            "first_cluster_sizes": detail.first_centers.cluster_sizes.tolist(),
            "second_cluster_sizes": detail.second_centers.cluster_sizes.tolist(),
        }
    _emit(out)
    return 0


def cmd_check(args) -> int:
    dataset = load_dataset(args.data)
    _emit(condition_report(dataset).to_json())
    return 0


def cmd_sweep(args) -> int:
    spec = SweepSpec.from_json(args.spec)
    result = run_sweep(spec, threads=args.threads)
    csv_path = Path(args.out).with_suffix(".csv")
    write_csv(result, csv_path)
    out = {
        "csv": str(csv_path),
        "cells": len(result.cells),
        "trials_per_cell": spec.trials_per_cell,
        "records": None,
    }
    if args.trial_log:
        jsonl_path = Path(args.out).with_suffix(".jsonl")
        write_records_jsonl(result, jsonl_path)
        out["records"] = str(jsonl_path)
    _log(args, f"wrote {csv_path}")
    _emit(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specluster",
        description="Two-phase spectral clustering of binary data: generators, "
        "clustering, recovery-condition checks, and Monte-Carlo sweeps.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample a dataset and write it to disk")
    gen.add_argument("--bsbm", help="inline block model, e.g. m=400,n=400,k=2,p=0.45,q=0.05")
    gen.add_argument("--model", help="JSON model file (kind: bsbm | mixture)")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", required=True, help="output path prefix")
    gen.set_defaults(func=cmd_generate)

    clu = sub.add_parser("cluster", help="cluster a dataset file")
    clu.add_argument("--data", required=True, help="dataset path prefix")
    clu.add_argument("--k", type=int, required=True)
    clu.add_argument("--seed", type=int, default=None)
    clu.add_argument("--out", required=True, help="labels JSON output path")
    clu.add_argument("--diagnostics", action="store_true")
    clu.set_defaults(func=cmd_cluster)

    chk = sub.add_parser("check", help="print the recovery-condition report")
    chk.add_argument("--data", required=True, help="dataset path prefix")
    chk.set_defaults(func=cmd_check)

    swp = sub.add_parser("sweep", help="run a Monte-Carlo parameter sweep")
    swp.add_argument("--spec", required=True, help="sweep spec JSON file")
    swp.add_argument("--out", required=True, help="output path prefix")
    swp.add_argument("--threads", type=int, default=1)
    swp.add_argument("--trial-log", action="store_true", help="also write per-trial JSON Lines")
    swp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 1
    except SpeclusterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
