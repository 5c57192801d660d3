"""Integer least-squares ambiguity resolution.

Pipeline: LDL' factorization of the float covariance, unimodular integer
decorrelation (iterated integer Gaussian reduction plus symmetric
permutations, LAMBDA style), shrinking-ellipsoid depth-first search for the
n best integer candidates, and a ratio test for fix validation.

The back-transform to the original ambiguity basis uses an exact integer
inverse of the unimodular Z matrix, so no floating-point inversion can
perturb integer candidates. A brute-force enumeration oracle (dimensions
<= 4) backs the search in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exceptions import NumericError, ResourceLimitError

DEFAULT_NODE_CAP = 10_000_000
_RATIO_EPS = 1e-12


@dataclass(frozen=True)
class FloatAmbiguities:
    """Real-valued ambiguity estimate with its covariance (cycles, cycles^2)."""

    values: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.covariance, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] != len(self.values):
            raise ValueError("covariance shape does not match values")
        if not np.allclose(q, q.T, rtol=1e-9, atol=1e-12):
            raise NumericError("ambiguity covariance is not symmetric")
        try:
            np.linalg.cholesky(0.5 * (q + q.T))
        except np.linalg.LinAlgError as exc:
            raise NumericError("ambiguity covariance is not positive definite") from exc


@dataclass(frozen=True)
class IntegerCandidate:
    """Integer ambiguity vector with its weighted squared residual."""

    values: np.ndarray
    quadratic_residual: float


@dataclass(frozen=True)
class Decorrelation:
    """Unimodular transform Z with transformed covariance Z' Q Z."""

    z_transform: np.ndarray
    transformed_cov: np.ndarray


def _ldl(Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Factor Q = L' diag(d) L with L unit lower triangular."""
    n = Q.shape[0]
    L = np.zeros((n, n))
    d = np.zeros(n)
    A = Q.copy()
    for i in range(n - 1, -1, -1):
        d[i] = A[i, i]
        if d[i] <= 0.0:
            raise NumericError("LDL factorization failed: matrix not positive definite")
        L[i, : i + 1] = A[i, : i + 1] / np.sqrt(d[i])
        for j in range(i):
            A[j, : j + 1] -= L[i, : j + 1] * L[i, j]
        L[i, : i + 1] /= L[i, i]
    return L, d


def _reduce(L: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """LAMBDA reduction: integer Gauss steps and symmetric permutations.

    Returns updated (L, d) and the accumulated Z with z = Z' a.
    """
    n = len(d)
    Z = np.eye(n)
    j = k = n - 2
    while j >= 0:
        if j <= k:
            for i in range(j + 1, n):
                mu = round(L[i, j])
                if mu != 0:
                    L[i:, j] -= mu * L[i:, i]
                    Z[:, j] -= mu * Z[:, i]
        delta = d[j] + L[j + 1, j] ** 2 * d[j + 1]
        if delta + 1e-6 < d[j + 1]:
            eta = d[j] / delta
            lam = d[j + 1] * L[j + 1, j] / delta
            d[j] = eta * d[j + 1]
            d[j + 1] = delta
            L[j : j + 2, :j] = np.array([[-L[j + 1, j], 1.0], [eta, lam]]) @ L[j : j + 2, :j]
            L[j + 1, j] = lam
            L[j + 2 :, j], L[j + 2 :, j + 1] = (
                L[j + 2 :, j + 1].copy(),
                L[j + 2 :, j].copy(),
            )
            Z[:, j], Z[:, j + 1] = Z[:, j + 1].copy(), Z[:, j].copy()
            j, k = n - 2, j
        else:
            j -= 1
    return L, d, Z


def integer_determinant(M: np.ndarray) -> int:
    """Exact determinant of an integer matrix (fraction-free Bareiss)."""
    a = [[int(v) for v in row] for row in np.asarray(M)]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _integer_inverse(Z: np.ndarray) -> np.ndarray:
    """Exact inverse of a unimodular integer matrix via rational elimination."""
    n = Z.shape[0]
    aug = [
        [Fraction(int(Z[i, j])) for j in range(n)]
        + [Fraction(1 if i == j else 0) for j in range(n)]
        for i in range(n)
    ]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise NumericError("Z transform is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        pivot = aug[col][col]
        aug[col] = [v / pivot for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    inv = [[aug[i][n + j] for j in range(n)] for i in range(n)]
    if any(v.denominator != 1 for row in inv for v in row):
        raise NumericError("Z transform is not unimodular")
    return np.array([[int(v) for v in row] for row in inv], dtype=np.int64)


def decorrelate(Q: np.ndarray) -> Decorrelation:
    """Integer decorrelation of an SPD ambiguity covariance.

    Iterates integer Gaussian reduction and symmetric permutations until no
    off-diagonal reduction applies. |det Z| = 1, and the transformed
    covariance Z' Q Z is at least as well conditioned as Q.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError("Q must be square")
    L, d = _ldl(Q.copy())
    _, _, Zf = _reduce(L, d)
    Z = np.rint(Zf).astype(np.int64)
    if not np.allclose(Zf, Z, atol=1e-9):
        raise NumericError("reduction produced a non-integer transform")
    if abs(integer_determinant(Z)) != 1:
        raise NumericError("reduction produced a non-unimodular transform")
    return Decorrelation(z_transform=Z, transformed_cov=Z.T @ Q @ Z)


def _search(
    L: np.ndarray,
    d: np.ndarray,
    zs: np.ndarray,
    n_best: int,
    node_cap: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Shrinking-ellipsoid depth-first search over integer vectors.

    Sequential conditional rounding on the LDL' factorization; keeps the
    ``n_best`` smallest-residual candidates. Raises ResourceLimitError when
    more than ``node_cap`` nodes are visited.
    """
    n = len(d)
    chi2 = 1e18
    n_found = 0
    imax = 0
    S = np.zeros((n, n))
    dist = np.zeros(n)
    zb = np.zeros(n)
    z = np.zeros(n)
    step = np.zeros(n)
    zn = np.zeros((n, n_best))
    resid = np.zeros(n_best)

    k = n - 1
    zb[-1] = zs[-1]
    z[-1] = round(zb[-1])
    y = zb[-1] - z[-1]
    step[-1] = np.sign(y) or 1.0
    nodes = 0
    while True:
        nodes += 1
        if nodes > node_cap:
            raise ResourceLimitError(
                f"integer search exceeded the node cap ({node_cap})"
            )
        newdist = dist[k] + y * y / d[k]
        if newdist < chi2:
            if k != 0:
                k -= 1
                dist[k] = newdist
                S[k, : k + 1] = S[k + 1, : k + 1] + (z[k + 1] - zb[k + 1]) * L[k + 1, : k + 1]
                zb[k] = zs[k] + S[k, k]
                z[k] = round(zb[k])
                y = zb[k] - z[k]
                step[k] = np.sign(y) or 1.0
            else:
                if n_found < n_best:
                    if n_found == 0 or newdist > resid[imax]:
                        imax = n_found
                    zn[:, n_found] = z
                    resid[n_found] = newdist
                    n_found += 1
                    if n_found == n_best:
                        chi2 = resid[imax]
                else:
                    if newdist < resid[imax]:
                        zn[:, imax] = z
                        resid[imax] = newdist
                        imax = int(np.argmax(resid))
                    chi2 = resid[imax]
                z[0] += step[0]
                y = zb[0] - z[0]
                step[0] = -step[0] - np.sign(step[0])
        else:
            if k == n - 1:
                break
            k += 1
            z[k] += step[k]
            y = zb[k] - z[k]
            step[k] = -step[k] - np.sign(step[k])

    order = np.argsort(resid[:n_found], kind="stable")
    return zn[:, order], resid[order]


def ils_search(
    fa: FloatAmbiguities,
    n_best: int = 2,
    node_cap: int = DEFAULT_NODE_CAP,
    use_decorrelation: bool = True,
) -> list[IntegerCandidate]:
    """The ``n_best`` integer vectors minimizing (a-â)' Q^-1 (a-â).

    Searches in the decorrelated basis (unless disabled — the optimum is
    basis-invariant, decorrelation only changes speed) and returns
    candidates in the original basis, ascending by residual.
    """
    if n_best < 1:
        raise ValueError("n_best must be >= 1")
    a_hat = np.asarray(fa.values, dtype=float)
    Q = np.asarray(fa.covariance, dtype=float)
    if use_decorrelation:
        dec = decorrelate(Q)
        Z = dec.z_transform
        Qz = dec.transformed_cov
    else:
        Z = np.eye(len(a_hat), dtype=np.int64)
        Qz = Q
    L, d = _ldl(Qz.copy())
    z_hat = Z.T.astype(float) @ a_hat
    z_cands, _ = _search(L, d, z_hat, n_best, node_cap)
    z_inv = _integer_inverse(Z)
    a_cands = z_inv.T @ np.rint(z_cands).astype(np.int64)

    # report residuals recomputed in the original basis
    cho = np.linalg.cholesky(Q)
    out = []
    for col in range(a_cands.shape[1]):
        a = a_cands[:, col]
        v = a.astype(float) - a_hat
        w = np.linalg.solve(cho, v)
        out.append(IntegerCandidate(values=a.copy(), quadratic_residual=float(w @ w)))
    out.sort(key=lambda c: c.quadratic_residual)
    return out


def brute_force_oracle(fa: FloatAmbiguities, box_radius: int) -> IntegerCandidate:
    """Exhaustive minimizer over the integer box around round(â).

    Verification oracle only; refuses dimensions above 4 (cost guard). The
    caller picks ``box_radius`` large enough to enclose the minimizer's
    ellipsoid.
    """
    a_hat = np.asarray(fa.values, dtype=float)
    n = len(a_hat)
    if n > 4:
        raise ValueError("brute-force oracle supports dimensions <= 4")
    center = np.rint(a_hat).astype(np.int64)
    if box_radius == 0:
        v = center.astype(float) - a_hat
        w = np.linalg.solve(np.linalg.cholesky(fa.covariance), v)
        return IntegerCandidate(values=center, quadratic_residual=float(w @ w))
    offsets = np.arange(-box_radius, box_radius + 1)
    grids = np.meshgrid(*([offsets] * n), indexing="ij")
    cands = np.stack([g.ravel() for g in grids], axis=1) + center
    diffs = cands.astype(float) - a_hat
    q_inv = np.linalg.inv(fa.covariance)
    residuals = np.einsum("ni,ij,nj->n", diffs, q_inv, diffs)
    best = int(np.argmin(residuals))
    return IntegerCandidate(
        values=cands[best].copy(), quadratic_residual=float(residuals[best])
    )


def ratio_test(
    best: IntegerCandidate, second: IntegerCandidate, threshold: float
) -> bool:
    """Accept the fix when second/best residual ratio reaches the threshold."""
    if second.quadratic_residual < best.quadratic_residual:
        raise ValueError("second-best residual is smaller than the best")
    return second.quadratic_residual / max(best.quadratic_residual, _RATIO_EPS) >= threshold
