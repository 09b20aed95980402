"""Dense linear-algebra kernels: truncated SVD, norms, and center matching.

The truncated SVD is self-contained by design: block power iteration
(subspace iteration) with modified Gram-Schmidt re-orthonormalization for
large inputs, and a full eigendecomposition of the Gram matrix by cyclic
Jacobi rotations when the small dimension is at most ``JACOBI_CUTOVER``.
The Jacobi path doubles as an independent oracle for the iterative path,
which is why both are kept side by side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import rng
from .errors import ConvergenceError, InvalidInputError

JACOBI_CUTOVER = 64
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000

_OVERSAMPLE = 8
_CHECK_EVERY = 8


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and convert input to a 2-D float64 array with finite entries."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {out.shape}")
    if out.size and not np.all(np.isfinite(out)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return out


def frobenius_norm(a) -> float:
    """Square root of the sum of squared entries."""
    a = as_matrix(a)
    return float(np.sqrt(np.sum(a * a)))


@dataclass(frozen=True, eq=False)
class RankKApprox:
    """Rank-k factorization ``left_vectors @ diag(singular_values) @ right_vectors.T``.

    Columns of both factor matrices are orthonormal and singular values are
    nonnegative and sorted in descending order.  Factors of a degenerate
    spectrum are not unique; compare materialized products, never factors.
    """

    k: int
    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    def __post_init__(self):
        s = self.singular_values
        if s.shape != (self.k,):
            raise InvalidInputError("singular_values must have length k")
        if np.any(s < 0) or np.any(s[:-1] < s[1:]):
            raise InvalidInputError("singular values must be descending and nonnegative")
        for mat, side in ((self.left_vectors, "left"), (self.right_vectors, "right")):
            if mat.ndim != 2 or mat.shape[1] != self.k:
                raise InvalidInputError(f"{side} factor must have k columns")
            gram = mat.T @ mat
            if not np.allclose(gram, np.eye(self.k), atol=1e-8):
                raise InvalidInputError(f"{side} factor columns are not orthonormal")

    def materialize(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def _orthonormal_columns(w: np.ndarray, pad: bool = True) -> np.ndarray:
    """Two-pass modified Gram-Schmidt on the columns of ``w``.

    Columns that turn out linearly dependent are replaced (when ``pad`` is
    set) by canonical basis vectors orthogonalized against the ones already
    accepted, keeping the output a full orthonormal set.
    """
    m, b = w.shape
    q = np.array(w, dtype=np.float64, copy=True)
    col_norms = np.sqrt(np.sum(q * q, axis=0))
    scale = float(col_norms.max()) if b else 0.0
    drop = 1e-12 * scale + 1e-300
    for j in range(b):
        v = q[:, j]
        for _ in range(2):
            if j:
                v = v - q[:, :j] @ (q[:, :j].T @ v)
        nv = float(np.sqrt(v @ v))
        if nv > drop:
            q[:, j] = v / nv
        elif pad:
            q[:, j] = _fresh_direction(q, j)
        else:
            q[:, j] = 0.0
    return q


def _fresh_direction(q: np.ndarray, j: int) -> np.ndarray:
    """First canonical basis vector with a usable component outside span(q[:, :j])."""
    m = q.shape[0]
    for t in range(m):
        v = np.zeros(m)
        v[t] = 1.0
        for _ in range(2):
            if j:
                v = v - q[:, :j] @ (q[:, :j].T @ v)
        nv = float(np.sqrt(v @ v))
        if nv > 1e-3:
            return v / nv
    raise ConvergenceError("could not complete an orthonormal basis")


def _jacobi_eigh(sym: np.ndarray, tol: float = 1e-13, max_sweeps: int = 64):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in descending order and the matching eigenvector
    columns.  Convergence: off-diagonal Frobenius mass at most ``tol`` times
    the Frobenius norm of the input.
    """
    a = np.array(sym, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    fro = float(np.sqrt(np.sum(a * a))) or 1.0
    skip = tol * fro / max(4 * n, 4)
    for _ in range(max_sweeps):
        off = a - np.diag(np.diag(a))
        if float(np.sqrt(np.sum(off * off))) <= tol * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                sgn = 1.0 if tau >= 0 else -1.0
                t = sgn / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    eigvals = np.diag(a).copy()
    order = np.argsort(-eigvals, kind="stable")
    return eigvals[order], v[:, order]


def _paired_vectors(a: np.ndarray, v: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Left factors ``a @ v / s``, with directions for negligible s padded in."""
    w = a @ v
    q = np.empty_like(w)
    thresh = (float(s[0]) if s.size else 0.0) * 1e-7 + 1e-300
    for i in range(s.size):
        if s[i] > thresh:
            q[:, i] = w[:, i] / s[i]
        else:
            q[:, i] = _fresh_direction(q, i)
    # Re-orthonormalize to kill the O(eps/sigma) drift of near-null columns.
    return _orthonormal_columns(q)


def jacobi_svd(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full SVD via Jacobi eigendecomposition of the smaller Gram matrix.

    Returns ``(u, s, v)`` with ``min(m, n)`` columns each.  Intended for
    small matrices and as the oracle for the iterative path.
    """
    a = as_matrix(a)
    m, n = a.shape
    if m == 0 or n == 0:
        raise InvalidInputError("matrix must be nonempty")
    if n <= m:
        lam, v = _jacobi_eigh(a.T @ a)
        s = np.sqrt(np.clip(lam, 0.0, None))
        u = _paired_vectors(a, v, s)
    else:
        lam, u = _jacobi_eigh(a @ a.T)
        s = np.sqrt(np.clip(lam, 0.0, None))
        v = _paired_vectors(a.T, u, s)
    return u, s, v


def _ritz_pairs(a: np.ndarray, v: np.ndarray):
    """Rayleigh-Ritz extraction of singular triplets from the subspace ``v``."""
    w = a @ v
    lam, q = _jacobi_eigh(w.T @ w)
    s = np.sqrt(np.clip(lam, 0.0, None))
    v_r = _orthonormal_columns(v @ q)
    u_r = np.empty((a.shape[0], v.shape[1]))
    wq = w @ q
    thresh = (float(s[0]) if s.size else 0.0) * 1e-7 + 1e-300
    for i in range(s.size):
        if s[i] > thresh:
            u_r[:, i] = wq[:, i] / s[i]
        else:
            u_r[:, i] = _fresh_direction(u_r, i)
    u_r = _orthonormal_columns(u_r)
    return u_r, s, v_r


def _subspace_svd(a: np.ndarray, k: int, tol: float, max_iter: int) -> RankKApprox:
    m, n = a.shape
    b = min(k + _OVERSAMPLE, m, n)
    init_key = rng.mix64(rng.TAG_SVD_INIT, m, n, b)
    v = _orthonormal_columns(
        2.0 * rng.uniform_grid(init_key, n, b) - 1.0
    )
    last_residual = np.inf
    root_tol = np.sqrt(tol)
    for it in range(max_iter + 1):
        if it % _CHECK_EVERY == 0 or it == max_iter:
            u_r, s, v_r = _ritz_pairs(a, v)
            # a @ v_r == s * u_r by construction, so the informative
            # residual is the transposed side.
            resid = a.T @ u_r[:, :k] - v_r[:, :k] * s[:k]
            resid_norms = np.sqrt(np.sum(resid * resid, axis=0))
            last_residual = float(resid_norms.max())
            scale = max(float(s[0]), 1e-300)
            strict = resid_norms <= tol * scale
            done = bool(np.all(strict))
            if not done and b > k:
                # Singular values tied at the cut position keep their Ritz
                # vectors rotating inside the tied cluster forever, yet any
                # basis of that cluster yields an equally good rank-k
                # approximation (within the cluster width).  Accept once
                # every value is tol-accurate (quadratic in the residual)
                # and all unconverged pairs sit against the boundary.
                loose = resid_norms <= root_tol * scale
                near_boundary = (s[:k] - s[k]) <= 8.0 * root_tol * scale
                done = bool(np.all(loose) and np.all(strict | near_boundary))
            if done:
                return RankKApprox(k, u_r[:, :k].copy(), s[:k].copy(), v_r[:, :k].copy())
            v = v_r
        if it == max_iter:
            break
        u = _orthonormal_columns(a @ v)
        v = _orthonormal_columns(a.T @ u)
    raise ConvergenceError(
        f"subspace iteration did not reach tol={tol} in {max_iter} iterations "
        f"(last residual {last_residual:.3e})"
    )


def truncated_svd(
    a,
    k: int,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    method: str = "auto",
) -> RankKApprox:
    """Best rank-k approximation of ``a`` as a :class:`RankKApprox`.

    Parameters
    ----------
    a : array_like
        Dense real matrix, shape (m, n).
    k : int
        Target rank, 1 <= k <= min(m, n).
    tol : float
        Relative residual tolerance for the iterative path.
    max_iter : int
        Iteration budget; exceeding it raises :class:`ConvergenceError`
        rather than silently returning an unconverged answer.
    method : str
        "auto" (Jacobi when min(m, n) <= JACOBI_CUTOVER, else subspace
        iteration), or force "jacobi" / "subspace".

    The result is deterministic: subspace iteration starts from a basis
    derived from a fixed internal key, not from global random state.
    """
    a = as_matrix(a)
    m, n = a.shape
    if m == 0 or n == 0:
        raise InvalidInputError("matrix must be nonempty")
    if not 1 <= k <= min(m, n):
        raise InvalidInputError(f"k={k} out of range for shape {a.shape}")
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    if method == "auto":
        method = "jacobi" if min(m, n) <= JACOBI_CUTOVER else "subspace"
    if method == "jacobi":
        u, s, v = jacobi_svd(a)
        return RankKApprox(k, u[:, :k].copy(), s[:k].copy(), v[:, :k].copy())
    if method == "subspace":
        return _subspace_svd(a, k, tol, max_iter)
    raise InvalidInputError(f"unknown SVD method {method!r}")


def spectral_norm(a, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Largest singular value of ``a``.

    Small matrices go through the exact Jacobi path.  Larger ones use
    subspace iteration on an oversampled block; the top Ritz value
    increases geometrically toward the answer, so the remaining error is
    extrapolated from consecutive increments (Aitken style) and iteration
    stops once the extrapolated tail falls below ``tol`` relative.
    """
    a = as_matrix(a)
    m, n = a.shape
    if m == 0 or n == 0:
        raise InvalidInputError("matrix must be nonempty")
    if min(m, n) <= JACOBI_CUTOVER:
        gram = a.T @ a if n <= m else a @ a.T
        lam, _ = _jacobi_eigh(gram)
        return float(np.sqrt(max(float(lam[0]), 0.0)))
    b = min(1 + _OVERSAMPLE, m, n)
    init_key = rng.mix64(rng.TAG_SVD_INIT, m, n, b)
    v = _orthonormal_columns(2.0 * rng.uniform_grid(init_key, n, b) - 1.0)
    x = np.ones(b) / np.sqrt(b)
    prev_sigma = None
    prev_diff = None
    streak = 0
    for _ in range(max_iter):
        w = a @ v
        top, x = _top_eig(w.T @ w, x)
        sigma = float(np.sqrt(max(top, 0.0)))
        if prev_sigma is not None:
            diff = abs(sigma - prev_sigma)
            scale = max(sigma, 1e-300)
            if diff <= 1e-3 * tol * scale:
                streak += 1
            elif prev_diff is not None and prev_diff > 0.0:
                # Geometric tail: remaining error ~ diff * rho / (1 - rho).
                rho = min(diff / prev_diff, 0.99)
                streak = streak + 1 if diff * rho / (1.0 - rho) <= 0.5 * tol * scale else 0
            else:
                streak = 0
            if streak >= 2:
                return sigma
            prev_diff = diff
        prev_sigma = sigma
        u = _orthonormal_columns(w)
        v = _orthonormal_columns(a.T @ u)
    raise ConvergenceError(f"spectral norm estimate did not stabilize in {max_iter} iterations")


def _top_eig(g: np.ndarray, x0: np.ndarray, iters: int = 400) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of a tiny symmetric PSD matrix by power iteration,
    warm-started from ``x0``; returns the value and the final vector."""
    x = x0
    lam = 0.0
    for _ in range(iters):
        y = g @ x
        ny = float(np.sqrt(y @ y))
        if ny == 0.0:
            return 0.0, x0
        x = y / ny
        new = float(x @ (g @ x))
        if abs(new - lam) <= 1e-16 * max(abs(new), 1.0):
            return new, x
        lam = new
    return lam, x


def _center_rows(c) -> np.ndarray:
    centers = getattr(c, "centers", c)
    return as_matrix(centers, "centers")


def match_center_sets(first, second) -> np.ndarray:
    """Permutation ``pi`` minimizing sum_r ||first_r - second_{pi[r]}||^2.

    Accepts CenterSet-like objects (anything with a ``centers`` attribute)
    or plain (k, n) arrays.  Solved exactly as a linear assignment problem
    on the k x k squared-distance cost matrix.
    """
    a = _center_rows(first)
    b = _center_rows(second)
    if a.shape != b.shape:
        raise InvalidInputError(f"center sets differ in shape: {a.shape} vs {b.shape}")
    cost = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(a.shape[0], dtype=np.int64)
    perm[rows] = cols
    return perm
