"""Seeded Monte-Carlo sweeps over model-parameter grids.

A sweep evaluates the full pipeline (and optional bound diagnostics) on
every cell of a parameter grid, ``trials_per_cell`` times.  Trial seeds
depend only on (base_seed, cell parameters, trial index) — the cell key is
a hash of the parameter values, not the grid position — so editing the grid
never shifts the seeds of surviving cells, and trials can run concurrently
with a deterministic reduction.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .analysis import (
    center_error_check,
    condition_report,
    margin_batch,
    match_centers_to_means,
    overlap_check,
    score,
)
from .errors import InvalidInputError
from .linalg import spectral_norm
from .models import (
    BinaryDataset,
    BsbmParams,
    MixtureModel,
    bsbm_to_mixture,
    expected_from_truth,
    sample,
)
from .pipeline import cluster, find_centers_detailed

DIAGNOSTICS = ("conditions", "center_error", "overlap", "margins")

# Aggregate CSV columns contributed by each diagnostic, in stable order.
_DIAG_COLUMNS = {
    "conditions": ("mean_talagrand_ratio", "mean_noise_to_threshold"),
    "center_error": ("center_error_hold_count", "mean_max_center_error"),
    "overlap": ("overlap_hold_count", "mean_min_overlap"),
    "margins": (
        "margin_correct_fraction",
        "margin_part1_fraction",
        "margin_part2_fraction",
    ),
}

_BASE_COLUMNS = ("trials", "exact_count", "mean_accuracy")


@dataclass(frozen=True)
class SweepSpec:
    """Declarative description of one sweep.

    ``axes`` maps parameter names to value lists; cells are the cartesian
    product of the axes merged over ``fixed``.  ``family`` selects the model
    builder: "bsbm" (parameters m, n, k, p, q; balanced clusters) or
    "general" (parameters m, means, weights, and optionally sigma_sq).
    """

    family: str
    axes: dict
    fixed: dict
    trials_per_cell: int
    base_seed: int
    diagnostics: tuple[str, ...] = ()
    margin_draws: int = 200

    def __post_init__(self):
        if self.family not in ("bsbm", "general"):
            raise InvalidInputError(f"unknown model family {self.family!r}")
        if not self.axes:
            raise InvalidInputError("sweep needs at least one grid axis")
        for name, values in self.axes.items():
            if not isinstance(values, (list, tuple)) or not values:
                raise InvalidInputError(f"axis {name!r} must be a nonempty list")
        if self.trials_per_cell < 1:
            raise InvalidInputError("trials_per_cell must be at least 1")
        unknown = set(self.diagnostics) - set(DIAGNOSTICS)
        if unknown:
            raise InvalidInputError(f"unknown diagnostics: {sorted(unknown)}")
        if self.margin_draws < 1:
            raise InvalidInputError("margin_draws must be at least 1")

    @classmethod
    def from_json(cls, path) -> "SweepSpec":
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read sweep spec {path}: {exc}") from exc
        try:
            return cls(
                family=obj["family"],
                axes=dict(obj["axes"]),
                fixed=dict(obj.get("fixed", {})),
                trials_per_cell=int(obj["trials_per_cell"]),
                base_seed=int(obj.get("base_seed", 0)),
                diagnostics=tuple(obj.get("diagnostics", ())),
                margin_draws=int(obj.get("margin_draws", 200)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed sweep spec {path}: {exc}") from exc

    def cells(self) -> list[dict]:
        """Cell parameter dicts in deterministic grid order."""
        names = sorted(self.axes)
        out = []
        for combo in itertools.product(*(self.axes[name] for name in names)):
            params = dict(self.fixed)
            params.update(dict(zip(names, combo)))
            out.append(params)
        return out


def cell_index(params: dict) -> int:
    """Stable 64-bit key of a cell's canonical JSON-encoded parameters."""
    payload = json.dumps(params, sort_keys=True, separators=(",", ":")).encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


def derive(base_seed, cell, trial):
    """Collision-resistant 63-bit trial seed from (base_seed, cell, trial).

    Accepts plain integers or numpy arrays (broadcast elementwise).
    """
    if any(isinstance(x, np.ndarray) for x in (base_seed, cell, trial)):
        mixed = rng.mix64_parts(rng.TAG_TRIAL, base_seed, cell, trial)
        return (mixed & np.uint64((1 << 63) - 1)).astype(np.int64)
    return rng.mix64(rng.TAG_TRIAL, base_seed, cell, trial) & ((1 << 63) - 1)


def build_cell(family: str, params: dict):
    """Validate one cell and return (model, m, k, bsbm-or-None)."""
    try:
        if family == "bsbm":
            bsbm = BsbmParams.balanced(
                m=int(params["m"]),
                n=int(params["n"]),
                k=int(params["k"]),
                p=float(params["p"]),
                q=float(params["q"]),
            )
            return bsbm_to_mixture(bsbm), bsbm.m, bsbm.k, bsbm
        model = MixtureModel(
            np.asarray(params["means"], dtype=np.float64),
            np.asarray(params["weights"], dtype=np.float64),
            sigma_sq=params.get("sigma_sq"),
        )
        return model, int(params["m"]), model.k, None
    except KeyError as exc:
        raise InvalidInputError(f"cell {params} is missing parameter {exc}") from exc


@dataclass(frozen=True)
class TrialRecord:
    parameters: dict
    trial: int
    seed: int
    exact: bool
    accuracy: float
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "parameters": self.parameters,
            "trial": self.trial,
            "seed": self.seed,
            "exact": self.exact,
            "accuracy": self.accuracy,
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class CellAggregate:
    parameters: dict
    trials: int
    exact_count: int
    mean_accuracy: float
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    cells: tuple[CellAggregate, ...]
    records: tuple[TrialRecord, ...]


def run_trial(spec: SweepSpec, params: dict, trial: int) -> TrialRecord:
    model, m, k, bsbm = build_cell(spec.family, params)
    seed = derive(spec.base_seed, cell_index(params), trial)
    dataset = sample(model, m, seed)
    dataset.bsbm = bsbm
    labels = cluster(dataset.matrix, k, seed)
    sc = score(labels, dataset.truth, k)
    diag: dict = {}
    if spec.diagnostics:
        diag = _run_diagnostics(spec, dataset, model, k, seed)
    return TrialRecord(
        parameters=params,
        trial=trial,
        seed=seed,
        exact=sc.exact,
        accuracy=sc.accuracy,
        diagnostics=diag,
    )


def _run_diagnostics(spec, dataset: BinaryDataset, model, k, seed) -> dict:
    out: dict = {}
    expected = expected_from_truth(model, dataset.truth)
    noise = spectral_norm(dataset.matrix - expected)
    if "conditions" in spec.diagnostics:
        report = condition_report(dataset, spectral_noise=noise)
        out["talagrand_ratio"] = report.talagrand_ratio
        out["noise_to_threshold"] = (
            report.spectral_noise_sq / report.spectral_threshold
            if report.spectral_threshold > 0
            else float("inf")
        )
    needs_centers = {"center_error", "overlap", "margins"} & set(spec.diagnostics)
    if needs_centers:
        detail = find_centers_detailed(dataset.matrix, k, rng.mix64(seed, rng.TAG_DIAG))
        matched = match_centers_to_means(detail.center_set, model)
        if "center_error" in spec.diagnostics:
            rep = center_error_check(matched, model, noise, dataset.m)
            out["center_error_holds"] = rep.within_bound
            out["max_center_error"] = float(rep.errors.max())
        if "overlap" in spec.diagnostics:
            fractions = overlap_check(detail.labels, dataset.truth, k)
            out["overlap_holds"] = bool(np.all(fractions >= 0.9))
            out["min_overlap"] = float(fractions.min())
        if "margins" in spec.diagnostics:
            draws = correct = part1 = part2 = 0
            for r in range(k):
                grid = rng.uniform_grid(
                    rng.mix64(seed, rng.TAG_FRESH, r), spec.margin_draws, model.n
                )
                fresh = (grid < model.means[r]).astype(np.float64)
                batch = margin_batch(fresh, r, matched, model)
                draws += batch.draws
                correct += batch.correct
                part1 += batch.part1_all
                part2 += batch.part2_all
            out["margin_correct_fraction"] = correct / draws
            out["margin_part1_fraction"] = part1 / draws
            out["margin_part2_fraction"] = part2 / draws
    return out


def _aggregate(spec: SweepSpec, params: dict, records: list[TrialRecord]) -> CellAggregate:
    trials = len(records)
    exact_count = sum(1 for r in records if r.exact)
    mean_accuracy = sum(r.accuracy for r in records) / trials
    diag: dict = {}
    if "conditions" in spec.diagnostics:
        diag["mean_talagrand_ratio"] = (
            sum(r.diagnostics["talagrand_ratio"] for r in records) / trials
        )
        diag["mean_noise_to_threshold"] = (
            sum(r.diagnostics["noise_to_threshold"] for r in records) / trials
        )
    if "center_error" in spec.diagnostics:
        diag["center_error_hold_count"] = sum(
            1 for r in records if r.diagnostics["center_error_holds"]
        )
        diag["mean_max_center_error"] = (
            sum(r.diagnostics["max_center_error"] for r in records) / trials
        )
    if "overlap" in spec.diagnostics:
        diag["overlap_hold_count"] = sum(1 for r in records if r.diagnostics["overlap_holds"])
        diag["mean_min_overlap"] = sum(r.diagnostics["min_overlap"] for r in records) / trials
    if "margins" in spec.diagnostics:
        for key in ("margin_correct_fraction", "margin_part1_fraction", "margin_part2_fraction"):
            diag[key] = sum(r.diagnostics[key] for r in records) / trials
    return CellAggregate(params, trials, exact_count, mean_accuracy, diag)


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Run every (cell, trial) and aggregate per cell.

    All cells are validated before any trial runs.  With ``threads > 1``
    trials execute in a thread pool; records are reduced in sorted order so
    the result does not depend on completion order.
    """
    cells = spec.cells()
    for params in cells:
        build_cell(spec.family, params)

    tasks = [(ci, params, t) for ci, params in enumerate(cells) for t in range(spec.trials_per_cell)]
    results: dict[tuple[int, int], TrialRecord] = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {
                pool.submit(run_trial, spec, params, t): (ci, t) for ci, params, t in tasks
            }
            for future, key in futures.items():
                results[key] = future.result()
    else:
        for ci, params, t in tasks:
            results[(ci, t)] = run_trial(spec, params, t)

    records = tuple(results[key] for key in sorted(results))
    aggregates = tuple(
        _aggregate(spec, params, [results[(ci, t)] for t in range(spec.trials_per_cell)])
        for ci, params in enumerate(cells)
    )
    return SweepResult(spec, aggregates, records)


def csv_columns(spec: SweepSpec) -> list[str]:
    """Stable CSV header: sorted parameter names, then aggregate columns."""
    names = sorted(set(spec.fixed) | set(spec.axes))
    columns = names + list(_BASE_COLUMNS)
    for diag in DIAGNOSTICS:
        if diag in spec.diagnostics:
            columns.extend(_DIAG_COLUMNS[diag])
    return columns


def _csv_value(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(result: SweepResult, path) -> None:
    """One row per cell; column set and order given by :func:`csv_columns`."""
    columns = csv_columns(result.spec)
    param_names = sorted(set(result.spec.fixed) | set(result.spec.axes))
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for cell in result.cells:
            row = [_csv_value(cell.parameters[name]) for name in param_names]
            row.extend(
                [
                    _csv_value(cell.trials),
                    _csv_value(cell.exact_count),
                    _csv_value(cell.mean_accuracy),
                ]
            )
            for diag in DIAGNOSTICS:
                if diag in result.spec.diagnostics:
                    row.extend(_csv_value(cell.diagnostics[key]) for key in _DIAG_COLUMNS[diag])
            writer.writerow(row)


def write_records_jsonl(result: SweepResult, path) -> None:
    """Per-trial records as JSON Lines, in deterministic (cell, trial) order."""
    with open(path, "w") as handle:
        for record in result.records:
            handle.write(json.dumps(record.to_json(), sort_keys=True) + "\n")
