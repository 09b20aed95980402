"""Data models: Bernoulli-product mixtures and the bipartite block model.

Provides the parameter types, their exact separation/variance statistics,
seeded samplers with entry-level stream splitting, and the on-disk format
(Matrix Market array file plus a JSON sidecar for labels and parameters).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng
from .errors import InvalidInputError
from .linalg import as_matrix

_WEIGHT_SUM_TOL = 1e-12
_COUNT_TOL = 1e-6
SIDECAR_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """Mixture of k product-Bernoulli distributions on {0,1}^n.

    Parameters
    ----------
    means : ndarray
        (k, n) matrix whose row r is the mean vector of component r; every
        entry must lie in [0, 1].
    weights : ndarray
        k mixing weights, all positive, summing to 1.
    sigma_sq : float, optional
        Variance proxy dominating every mean entry.  Defaults to the largest
        mean entry; block-model constructors override it with the exact
        two-sided Bernoulli-variance bound.
    """

    means: np.ndarray
    weights: np.ndarray
    sigma_sq: float | None = None

    def __post_init__(self):
        means = as_matrix(self.means, "means")
        weights = np.asarray(self.weights, dtype=np.float64)
        if means.shape[0] < 1:
            raise InvalidInputError("model needs at least one component")
        if np.any(means < 0.0) or np.any(means > 1.0):
            raise InvalidInputError("mean entries must lie in [0, 1]")
        if weights.shape != (means.shape[0],):
            raise InvalidInputError("weights must have one entry per component")
        if np.any(weights <= 0.0):
            raise InvalidInputError("weights must be positive")
        if abs(float(weights.sum()) - 1.0) > _WEIGHT_SUM_TOL:
            raise InvalidInputError("weights must sum to 1")
        sigma_sq = self.sigma_sq
        if sigma_sq is None:
            sigma_sq = float(means.max()) if means.size else 0.0
        sigma_sq = float(sigma_sq)
        if means.size and float(means.max()) > sigma_sq + 1e-12:
            raise InvalidInputError("sigma_sq must dominate every mean entry")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "sigma_sq", sigma_sq)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def n(self) -> int:
        return self.means.shape[1]

    @property
    def w_min(self) -> float:
        return float(self.weights.min())


@dataclass(frozen=True, eq=False)
class BsbmParams:
    """Bipartite stochastic block model instance.

    m left vertices in k clusters of sizes ``left_sizes``; n right vertices
    partitioned by ``right_assignment`` (vertex j belongs to right cluster
    ``right_assignment[j]``).  Matched cluster pairs connect with probability
    p, all others with q; both are constrained to [0, 0.5] so that the
    variance proxy ``2 max{p(1-p), q(1-q)}`` dominates both edge means.
    """

    m: int
    n: int
    k: int
    p: float
    q: float
    left_sizes: tuple[int, ...]
    right_assignment: np.ndarray

    def __post_init__(self):
        if self.k < 2:
            raise InvalidInputError("B-SBM needs at least two clusters")
        if not (0.0 <= self.p <= 0.5 and 0.0 <= self.q <= 0.5):
            raise InvalidInputError("p and q must lie in [0, 0.5]")
        if self.p == self.q:
            raise InvalidInputError("p and q must differ")
        sizes = tuple(int(s) for s in self.left_sizes)
        if len(sizes) != self.k or any(s < 1 for s in sizes):
            raise InvalidInputError("left_sizes must be k positive counts")
        if sum(sizes) != self.m:
            raise InvalidInputError("left_sizes must sum to m")
        assignment = np.asarray(self.right_assignment, dtype=np.int64)
        if assignment.shape != (self.n,):
            raise InvalidInputError("right_assignment must have one entry per right vertex")
        if assignment.size and (assignment.min() < 0 or assignment.max() >= self.k):
            raise InvalidInputError("right_assignment labels must lie in [0, k)")
        present = np.bincount(assignment, minlength=self.k)
        if np.any(present == 0):
            raise InvalidInputError("every right cluster must be nonempty")
        object.__setattr__(self, "left_sizes", sizes)
        object.__setattr__(self, "right_assignment", assignment)

    @classmethod
    def balanced(cls, m: int, n: int, k: int, p: float, q: float) -> "BsbmParams":
        """Near-equal left sizes and contiguous near-equal right blocks."""
        left = tuple(m // k + (1 if r < m % k else 0) for r in range(k))
        right = np.repeat(
            np.arange(k), [n // k + (1 if r < n % k else 0) for r in range(k)]
        )
        return cls(m, n, k, p, q, left, right)


def separation(model: MixtureModel) -> float:
    """Minimum Euclidean distance between any two component means."""
    if model.k < 2:
        raise InvalidInputError("separation needs at least two components")
    mu = model.means
    d = (
        np.sum(mu * mu, axis=1)[:, None]
        + np.sum(mu * mu, axis=1)[None, :]
        - 2.0 * (mu @ mu.T)
    )
    iu = np.triu_indices(model.k, 1)
    return float(np.sqrt(max(float(d[iu].min()), 0.0)))


def min_symmetric_difference(sets) -> int:
    """Smallest symmetric-difference size over all pairs of vertex sets."""
    families = [frozenset(int(v) for v in s) for s in sets]
    if len(families) < 2:
        raise InvalidInputError("need at least two sets")
    best = None
    for i in range(len(families)):
        for j in range(i + 1, len(families)):
            size = len(families[i] ^ families[j])
            best = size if best is None else min(best, size)
    return int(best)


def right_clusters(params: BsbmParams) -> list[np.ndarray]:
    """Right-vertex index sets V_1, ..., V_k."""
    return [np.flatnonzero(params.right_assignment == r) for r in range(params.k)]


def delta_v(params: BsbmParams) -> int:
    """Minimum number of right vertices distinguishing two clusters."""
    return min_symmetric_difference(right_clusters(params))


def bsbm_sigma_sq(p: float, q: float) -> float:
    """Variance proxy for edge indicators: twice the larger Bernoulli variance."""
    return 2.0 * max(p * (1.0 - p), q * (1.0 - q))


def bsbm_to_mixture(params: BsbmParams) -> MixtureModel:
    """Mean vectors in {p, q}^n induced by the right clustering.

    The resulting separation satisfies
    ``separation(model)**2 == (p - q)**2 * delta_v(params)`` exactly.
    """
    means = np.full((params.k, params.n), params.q, dtype=np.float64)
    for r in range(params.k):
        means[r, params.right_assignment == r] = params.p
    weights = np.asarray(params.left_sizes, dtype=np.float64) / params.m
    return MixtureModel(means, weights, sigma_sq=bsbm_sigma_sq(params.p, params.q))


def indicator_model(n: int, k: int, weights) -> MixtureModel:
    """Noiseless block means in {0, 1}: contiguous right blocks, indicator rows.

    Sampling from this model is deterministic, which makes it the zero-noise
    limit of the block model for sanity checks.
    """
    if k < 1 or n < k:
        raise InvalidInputError("need n >= k >= 1 for indicator blocks")
    assignment = np.repeat(np.arange(k), [n // k + (1 if r < n % k else 0) for r in range(k)])
    means = np.zeros((k, n))
    for r in range(k):
        means[r, assignment == r] = 1.0
    return MixtureModel(means, np.asarray(weights, dtype=np.float64), sigma_sq=1.0)


def cluster_counts(model: MixtureModel, m: int) -> np.ndarray:
    """Exact per-component sample counts w_r * m; rejects non-integral counts."""
    raw = model.weights * m
    counts = np.rint(raw)
    if np.any(np.abs(raw - counts) > _COUNT_TOL):
        raise InvalidInputError(
            f"weights {model.weights.tolist()} do not give whole sample counts for m={m}"
        )
    counts = counts.astype(np.int64)
    if counts.sum() != m or np.any(counts < 1):
        raise InvalidInputError("every component must contribute at least one sample")
    return counts


@dataclass(eq=False)
class BinaryDataset:
    """An m x n 0/1 sample matrix with optional ground truth and provenance."""

    matrix: np.ndarray
    truth: np.ndarray | None = None
    model: MixtureModel | None = None
    bsbm: BsbmParams | None = None
    seed: int | None = None

    def __post_init__(self):
        matrix = as_matrix(self.matrix)
        if not np.all((matrix == 0.0) | (matrix == 1.0)):
            raise InvalidInputError("dataset entries must be exactly 0 or 1")
        self.matrix = matrix
        if self.truth is not None:
            truth = np.asarray(self.truth, dtype=np.int64)
            if truth.shape != (matrix.shape[0],):
                raise InvalidInputError("truth must have one label per row")
            if truth.size and truth.min() < 0:
                raise InvalidInputError("truth labels must be nonnegative")
            self.truth = truth

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]


def _placement(model: MixtureModel, m: int, seed: int):
    """Canonical truth order (component blocks) and its seeded placement."""
    counts = cluster_counts(model, m)
    truth_blocks = np.repeat(np.arange(model.k), counts)
    perm = rng.permutation(rng.mix64(seed, rng.TAG_SAMPLE_ORDER, m), m)
    return truth_blocks, perm


def sample(model: MixtureModel, m: int, seed: int) -> BinaryDataset:
    """Draw exactly w_r * m rows from each component, in seeded random order.

    Entry (i, j) of the canonical (block-ordered) matrix is a Bernoulli draw
    addressed by hash(seed, i, j), so the dataset is reproducible bit for
    bit regardless of platform or generation schedule.
    """
    truth_blocks, perm = _placement(model, m, seed)
    grid = rng.uniform_grid(rng.mix64(seed, rng.TAG_SAMPLE_ENTRIES, m), m, model.n)
    bits = (grid < model.means[truth_blocks]).astype(np.float64)
    return BinaryDataset(
        matrix=bits[perm],
        truth=truth_blocks[perm],
        model=model,
        seed=seed,
    )


def expected_matrix(model: MixtureModel, m: int, seed: int) -> np.ndarray:
    """Row-wise expectation of ``sample(model, m, seed)``: row i is the mean
    of the component that generated row i under the same placement."""
    truth_blocks, perm = _placement(model, m, seed)
    return model.means[truth_blocks][perm]


def expected_from_truth(model: MixtureModel, truth) -> np.ndarray:
    """Expectation matrix for an explicit per-row truth labeling."""
    truth = np.asarray(truth, dtype=np.int64)
    if truth.size and (truth.min() < 0 or truth.max() >= model.k):
        raise InvalidInputError("truth labels out of range for model")
    return model.means[truth]


# ---------------------------------------------------------------------------
# Serialization: Matrix Market array file + JSON sidecar.
# ---------------------------------------------------------------------------


def write_matrix_market(path, matrix: np.ndarray) -> None:
    """Write a dense 0/1 matrix in Matrix Market array format (column-major)."""
    matrix = as_matrix(matrix)
    m, n = matrix.shape
    lines = ["%%MatrixMarket matrix array integer general", f"{m} {n}"]
    flat = matrix.T.reshape(-1)
    lines.extend(str(int(v)) for v in flat)
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_market(path) -> np.ndarray:
    """Read a dense Matrix Market array file (integer or real field)."""
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("%%MatrixMarket"):
        raise InvalidInputError(f"{path}: missing MatrixMarket header")
    header = text[0].lower().split()
    if len(header) < 4 or header[1] != "matrix" or header[2] != "array":
        raise InvalidInputError(f"{path}: expected a dense 'matrix array' file")
    body = [ln for ln in text[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    try:
        m, n = (int(tok) for tok in body[0].split())
        values = np.array([float(ln) for ln in body[1:]], dtype=np.float64)
    except (ValueError, IndexError) as exc:
        raise InvalidInputError(f"{path}: malformed Matrix Market body") from exc
    if values.size != m * n:
        raise InvalidInputError(f"{path}: expected {m * n} entries, found {values.size}")
    return values.reshape((n, m)).T.copy()


def _model_to_json(model: MixtureModel) -> dict:
    return {
        "means": model.means.tolist(),
        "weights": model.weights.tolist(),
        "sigma_sq": model.sigma_sq,
    }


def _model_from_json(obj: dict) -> MixtureModel:
    return MixtureModel(
        np.asarray(obj["means"], dtype=np.float64),
        np.asarray(obj["weights"], dtype=np.float64),
        sigma_sq=obj.get("sigma_sq"),
    )


def _bsbm_to_json(params: BsbmParams) -> dict:
    return {
        "m": params.m,
        "n": params.n,
        "k": params.k,
        "p": params.p,
        "q": params.q,
        "left_sizes": list(params.left_sizes),
        "right_assignment": params.right_assignment.tolist(),
    }


def _bsbm_from_json(obj: dict) -> BsbmParams:
    return BsbmParams(
        m=int(obj["m"]),
        n=int(obj["n"]),
        k=int(obj["k"]),
        p=float(obj["p"]),
        q=float(obj["q"]),
        left_sizes=tuple(int(s) for s in obj["left_sizes"]),
        right_assignment=np.asarray(obj["right_assignment"], dtype=np.int64),
    )


def dataset_paths(prefix) -> tuple[Path, Path]:
    prefix = Path(prefix)
    return prefix.with_suffix(".mtx"), prefix.with_suffix(".json")


def save_dataset(dataset: BinaryDataset, prefix) -> tuple[Path, Path]:
    """Write ``<prefix>.mtx`` and ``<prefix>.json``; returns both paths."""
    mtx_path, json_path = dataset_paths(prefix)
    write_matrix_market(mtx_path, dataset.matrix)
    sidecar: dict = {
        "format_version": SIDECAR_FORMAT_VERSION,
        "seed": dataset.seed,
        "truth": None if dataset.truth is None else dataset.truth.tolist(),
        "model": None if dataset.model is None else _model_to_json(dataset.model),
        "bsbm": None if dataset.bsbm is None else _bsbm_to_json(dataset.bsbm),
    }
    if dataset.model is not None:
        derived = {
            "sigma_sq": dataset.model.sigma_sq,
            "w_min": dataset.model.w_min,
        }
        if dataset.model.k >= 2:
            dm = separation(dataset.model)
            derived["delta_mu"] = dm
            derived["delta_mu_sq"] = dm * dm
        if dataset.bsbm is not None:
            derived["delta_v"] = delta_v(dataset.bsbm)
        sidecar["derived"] = derived
    json_path.write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
    return mtx_path, json_path


def load_dataset(prefix) -> BinaryDataset:
    """Load a dataset written by :func:`save_dataset`."""
    mtx_path, json_path = dataset_paths(prefix)
    if not mtx_path.exists():
        raise InvalidInputError(f"missing dataset file {mtx_path}")
    matrix = read_matrix_market(mtx_path)
    truth = model = bsbm = seed = None
    if json_path.exists():
        try:
            sidecar = json.loads(json_path.read_text())
            if not isinstance(sidecar, dict):
                raise TypeError("sidecar root must be an object")
            seed = sidecar.get("seed")
            if sidecar.get("truth") is not None:
                truth = np.asarray(sidecar["truth"], dtype=np.int64)
            if sidecar.get("model") is not None:
                model = _model_from_json(sidecar["model"])
            if sidecar.get("bsbm") is not None:
                bsbm = _bsbm_from_json(sidecar["bsbm"])
        except (json.JSONDecodeError, TypeError, KeyError, ValueError) as exc:
            raise InvalidInputError(f"malformed sidecar {json_path}: {exc}") from exc
    return BinaryDataset(matrix=matrix, truth=truth, model=model, bsbm=bsbm, seed=seed)
