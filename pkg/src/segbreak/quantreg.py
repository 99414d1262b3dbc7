"""Linear quantile regression for the segmented model.

The solver runs a Frisch-Newton (primal-dual, Mehrotra predictor-corrector)
interior point method on the bounded dual LP, then moves to a basic solution
that interpolates ``k`` observations and finishes with exact descent pivots.
The pivots stop only when no edge direction decreases the loss, so the
returned coefficients sit on an optimal vertex and the sign conditions hold
exactly rather than up to interior-point slack.

Inference follows the local-density ("nid") sandwich with the Hall-Sheather
bandwidth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg
from scipy.stats import norm

from segbreak.datamodel import (
    DEFAULT_MIN_SEGMENT,
    Dataset,
    SegmentedCoefficients,
    SegmentedFit,
    check_partition,
    design_matrix,
    segment_masks,
)
from segbreak.errors import BandwidthOutOfRange, InputError, NonConvergence, RankDeficient
from segbreak.olscore import RANK_RTOL

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

GAP_TOL = 1e-10
MAX_ITER = 200
MAX_PIVOTS = 500
_STEP = 0.99995


@dataclass(frozen=True)
class QuantileSpec:
    """Quantile level plus the sandwich tuning constants."""

    p: float
    alpha: float = 0.05
    sparsity_eps: float = field(default=np.finfo(float).eps ** (2 / 3))

    def __post_init__(self) -> None:
        if not 0 < self.p < 1:
            raise InputError(f"quantile level p={self.p} must lie in (0, 1)")
        if not 0 < self.alpha < 1:
            raise InputError(f"alpha={self.alpha} must lie in (0, 1)")


def pinball_loss(u: ArrayLike, p: float) -> NDArray[np.float64] | float:
    """Check function ``u * (p - 1{u < 0})``; elementwise on arrays."""
    u_arr = np.asarray(u, dtype=float)
    out = np.where(u_arr < 0, (p - 1.0) * u_arr, p * u_arr)
    return float(out) if out.ndim == 0 else out


def total_loss(X: NDArray[np.float64], y: NDArray[np.float64], beta: NDArray[np.float64], p: float) -> float:
    return float(np.sum(pinball_loss(y - X @ beta, p)))


def _max_step(v: NDArray[np.float64], dv: NDArray[np.float64]) -> float:
    neg = dv < 0
    if not neg.any():
        return 1e20
    return float(np.min(-v[neg] / dv[neg]))


def _frisch_newton(
    X: NDArray[np.float64], y: NDArray[np.float64], p: float, tol: float, max_iter: int
) -> tuple[NDArray[np.float64], int, float]:
    """Interior point solve of ``min -y'a  s.t.  X'a = (1-p) X'1,  0 <= a <= 1``.

    The coefficients are minus the equality multipliers. Returns
    ``(beta, iterations, relative_gap)``.
    """
    n, _ = X.shape
    A = X.T
    c = -y
    b = (1.0 - p) * X.sum(axis=0)
    u = np.ones(n)
    x = np.full(n, 1.0 - p)
    s = u - x
    yd = scipy.linalg.lstsq(X, c)[0]
    r = c - X @ yd
    # both slacks of a (near) zero residual start strictly positive
    shift = 1e-3 * (1.0 + float(np.abs(r).mean()))
    pad = np.where(np.abs(r) < shift, shift, 0.0)
    z = np.maximum(r, 0.0) + pad
    w = np.maximum(-r, 0.0) + pad
    gap = float(c @ x - yd @ b + w @ u)
    scale = 1.0 + float(np.abs(y).sum())
    it = 0
    while gap > tol * scale and it < max_iter:
        it += 1
        state = (x, s, yd, w, z, gap)
        with np.errstate(all="ignore"):
            x, s, yd, w, z = _newton_step(A, b, c, x, s, yd, w, z)
            gap = float(c @ x - yd @ b + w @ u)
        interior = min(x.min(), s.min()) > 0 and min(w.min(), z.min()) >= 0
        if not (interior and np.isfinite(gap) and np.all(np.isfinite(yd))):
            # iterates hit the boundary at the limit of float precision
            x, s, yd, w, z, gap = state
            break
    return -yd, it, gap / scale


def _newton_step(A, b, c, x, s, yd, w, z):
    """One predictor-corrector step; returns the updated ``(x, s, yd, w, z)``."""
    n = x.size
    q = 1.0 / (z / x + w / s)
    r = z - w
    Q = A * q
    AQA = Q @ A.T
    rhs = Q @ r
    try:
        cho = scipy.linalg.cho_factor(AQA)
    except (np.linalg.LinAlgError, ValueError):
        return x, s, yd + np.nan, w, z
    dy = scipy.linalg.cho_solve(cho, rhs, check_finite=False)
    dx = q * (A.T @ dy - r)
    ds = -dx
    dz = -z * (dx / x + 1.0)
    dw = -w * (ds / s + 1.0)
    fp = min(_STEP * min(_max_step(x, dx), _max_step(s, ds)), 1.0)
    fd = min(_STEP * min(_max_step(w, dw), _max_step(z, dz)), 1.0)
    if min(fp, fd) < 1.0:
        # Mehrotra corrector
        mu = float(z @ x + w @ s)
        g = float((z + fd * dz) @ (x + fp * dx) + (w + fd * dw) @ (s + fp * ds))
        mu = mu * (g / mu) ** 3 / (2 * n)
        dxdz = dx * dz
        dsdw = ds * dw
        xinv = 1.0 / x
        sinv = 1.0 / s
        xi = mu * (xinv - sinv)
        rhs = rhs + Q @ (dxdz - dsdw - xi)
        dy = scipy.linalg.cho_solve(cho, rhs, check_finite=False)
        dx = q * (A.T @ dy + xi - r - dxdz + dsdw)
        ds = -dx
        dz = mu * xinv - z - xinv * z * dx - dxdz
        dw = mu * sinv - w - sinv * w * ds - dsdw
        fp = min(_STEP * min(_max_step(x, dx), _max_step(s, ds)), 1.0)
        fd = min(_STEP * min(_max_step(w, dw), _max_step(z, dz)), 1.0)
    return x + fp * dx, s + fp * ds, yd + fd * dy, w + fd * dw, z + fd * dz


def _pick_basis(X: NDArray[np.float64], r: NDArray[np.float64]) -> NDArray[np.intp]:
    """``k`` linearly independent rows, preferring the smallest ``|r|``."""
    n, k = X.shape
    order = np.argsort(np.abs(r), kind="stable")
    Xo = X[order]
    norms = np.linalg.norm(Xo, axis=1)
    resid = Xo.copy()
    chosen: list[int] = []
    for _ in range(k):
        rn = np.linalg.norm(resid, axis=1)
        ok = rn > 1e-9 * np.maximum(norms, 1e-300)
        if chosen:
            ok[chosen] = False
        if not ok.any():
            raise RankDeficient("could not find a nonsingular basis")
        j = int(np.argmax(ok))
        chosen.append(j)
        v = resid[j] / rn[j]
        resid = resid - np.outer(resid @ v, v)
    return order[np.array(chosen)]


def _vertex_descent(
    X: NDArray[np.float64], y: NDArray[np.float64], p: float, basis: NDArray[np.intp], max_pivots: int
) -> tuple[NDArray[np.float64], bool]:
    """Exact edge-descent pivots from a basic solution.

    Each pivot releases one interpolated observation in the steepest
    improving edge direction and does an exact line search over the
    piecewise-linear loss; the observation whose residual hits zero first at
    the minimizer enters the basis. Returns ``(beta, certified_optimal)``.
    """
    n, k = X.shape
    basis = basis.copy()
    ztol = 1e-12 * max(1.0, float(np.abs(y).max()))
    for _ in range(max_pivots):
        B = X[basis]
        try:
            lu = scipy.linalg.lu_factor(B)
        except (ValueError, np.linalg.LinAlgError):
            raise RankDeficient("singular basis") from None
        beta = scipy.linalg.lu_solve(lu, y[basis])
        r = y - X @ beta
        r[basis] = 0.0
        # V[i, j] = x_i . d_j with d_j the j-th column of inv(B)
        V = scipy.linalg.lu_solve(lu, X.T, trans=1).T
        nonbasic = np.ones(n, dtype=bool)
        nonbasic[basis] = False
        zero = nonbasic & (np.abs(r) <= ztol)
        live = nonbasic & ~zero
        r[zero] = 0.0
        psi = np.where(r[live] > 0, p, p - 1.0)
        lin = psi @ V[live]
        Vz = V[zero]
        # directional derivative of rho at 0 in direction v is max(p*v, (p-1)*v)
        up = -lin + np.maximum(-p * Vz, (1 - p) * Vz).sum(axis=0) + (1 - p)
        down = lin + np.maximum(p * Vz, (p - 1) * Vz).sum(axis=0) + p
        slopes = np.concatenate([up, down])
        tol = 1e-11 * (1.0 + np.abs(V[nonbasic]).sum(axis=0))
        tol = np.concatenate([tol, tol])
        if np.all(slopes >= -tol):
            return beta, True
        m = int(np.argmin(slopes / (1.0 + tol)))
        j, sign = (m, 1.0) if m < k else (m - k, -1.0)
        v = sign * V[:, j]
        v[basis] = 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            t = r / v
        cand = np.flatnonzero(live & (v != 0) & (t > 0))
        if cand.size == 0:
            raise NonConvergence("unbounded descent direction; design is degenerate")
        cand = cand[np.argsort(t[cand], kind="stable")]
        cum = slopes[m] + np.cumsum(np.abs(v[cand]))
        reached = cum >= 0
        hit = int(np.argmax(reached)) if reached.any() else cand.size - 1
        basis[j] = cand[hit]
    return beta, False


@dataclass(frozen=True)
class QRResult:
    beta: NDArray[np.float64]
    total_loss: float
    iterations: int
    gap: float
    vertex: bool


def qr_solve(
    X: ArrayLike,
    y: ArrayLike,
    p: float,
    tol: float = GAP_TOL,
    max_iter: int = MAX_ITER,
) -> QRResult:
    """Full quantile regression solve; :func:`qr_fit` is the short form."""
    if not 0 < p < 1:
        raise InputError(f"quantile level p={p} must lie in (0, 1)")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, k = X.shape
    if n <= k:
        raise RankDeficient(f"need more rows than columns (got {n}x{k})")
    diag = np.abs(np.diag(scipy.linalg.qr(X, mode="r", pivoting=True)[0]))
    if diag.min() <= RANK_RTOL * float(np.max(np.linalg.norm(X, axis=0))):
        raise RankDeficient("design is not of full column rank")

    beta_ip, iters, gap = _frisch_newton(X, y, p, tol, max_iter)
    loss_ip = total_loss(X, y, beta_ip, p)
    basis = _pick_basis(X, y - X @ beta_ip)
    beta_v, certified = _vertex_descent(X, y, p, basis, MAX_PIVOTS)
    loss_v = total_loss(X, y, beta_v, p)
    if certified and loss_v <= loss_ip + 1e-12 * (1.0 + abs(loss_ip)):
        return QRResult(beta_v, loss_v, iters, gap, True)
    # degenerate vertex or pivot cap: the interior point answer must stand on its own
    if gap > tol:
        raise NonConvergence(
            f"interior point stopped after {iters} iterations with relative gap {gap:.3g} > {tol:g}"
        )
    if loss_v < loss_ip:
        return QRResult(beta_v, loss_v, iters, gap, False)
    return QRResult(beta_ip, loss_ip, iters, gap, False)


def qr_fit(X: ArrayLike, y: ArrayLike, p: float) -> tuple[NDArray[np.float64], float]:
    """Minimize total pinball loss; returns ``(beta, total_loss)``."""
    res = qr_solve(X, y, p)
    return res.beta, res.total_loss


def normal_quantile(q: float) -> float:
    return float(norm.ppf(q))


def hall_sheather_bandwidth(p: float, n: int, alpha: float = 0.05) -> float:
    """Hall-Sheather bandwidth (probability scale) for sparsity estimation.

    Symmetric in ``p`` about 0.5: the distance from 0.5 is rounded to 12
    decimals so float pairs such as 0.15 / 0.85 give identical results.
    """
    x0 = normal_quantile(0.5 + round(abs(p - 0.5), 12))
    f0 = float(norm.pdf(x0))
    z = normal_quantile(1.0 - alpha / 2.0)
    return n ** (-1.0 / 3.0) * z ** (2.0 / 3.0) * (1.5 * f0**2 / (2.0 * x0**2 + 1.0)) ** (1.0 / 3.0)


def qr_sandwich_covariance(
    X: ArrayLike, y: ArrayLike, p: float | QuantileSpec, spec: QuantileSpec | None = None
) -> NDArray[np.float64]:
    """Local-density sandwich ``p(1-p) H^-1 X'X H^-1`` with ``H = X' diag(f) X``.

    The densities ``f_i`` come from difference quotients of the fitted
    quantile surfaces at ``p +/- h``, truncated below at zero.
    """
    if isinstance(p, QuantileSpec):
        spec = p
    elif spec is None:
        spec = QuantileSpec(p)
    elif spec.p != p:
        raise InputError("p disagrees with spec.p")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = X.shape[0]
    q = spec.p
    h = hall_sheather_bandwidth(q, n, spec.alpha)
    if q - h <= 0 or q + h >= 1:
        raise BandwidthOutOfRange(
            f"p={q} with bandwidth h={h:.4g} gives [{q - h:.4g}, {q + h:.4g}] outside (0, 1)"
        )
    b_hi, _ = qr_fit(X, y, q + h)
    b_lo, _ = qr_fit(X, y, q - h)
    dyhat = X @ (b_hi - b_lo)
    f = np.maximum(0.0, (2.0 * h) / (dyhat - spec.sparsity_eps))
    H = (X * f[:, None]).T @ X
    diag = np.abs(np.diag(scipy.linalg.qr(np.sqrt(f)[:, None] * X, mode="r", pivoting=True)[0]))
    if diag.size == 0 or diag.min() <= RANK_RTOL * max(float(diag.max()), 1e-300):
        raise RankDeficient("sparsity-weighted Gram matrix is singular")
    Hinv = scipy.linalg.inv(H)
    return q * (1.0 - q) * Hinv @ (X.T @ X) @ Hinv


def fit_segmented_quantile(
    dataset: Dataset,
    tau: float,
    p: float | QuantileSpec,
    spec: QuantileSpec | None = None,
    min_segment: int = DEFAULT_MIN_SEGMENT,
) -> SegmentedFit:
    """Quantile fit of raw well-being on the segmented log-income design."""
    if isinstance(p, QuantileSpec):
        spec = p
    elif spec is None:
        spec = QuantileSpec(p)
    check_partition(dataset, tau, min_segment)
    X, y = design_matrix(dataset, tau, "raw")
    beta, loss = qr_fit(X, y, spec.p)
    cov = qr_sandwich_covariance(X, y, spec)
    se_vec = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    left, right = segment_masks(dataset, tau)
    return SegmentedFit(
        coefficients=SegmentedCoefficients(*map(float, beta), tau=float(tau)),
        std_errors=tuple(map(float, se_vec)),
        t_stats=SegmentedFit.t_from(beta, se_vec),
        objective=loss,
        n_left=int(left.sum()),
        n_right=int(right.sum()),
        estimator_tag=quantile_tag(spec.p),
        dependent_tag="raw",
        se_flavor="nid-hall-sheather",
    )


def quantile_tag(p: float) -> str:
    return f"quantile({p:g})"
