"""Differential-geometric machinery on the local connection.

Contains the body-frame reparametrization (weighted-average-of-links frames),
the exterior derivative and local Lie bracket of the connection, the total
curvature DA = dA + [A1, A2], surface integration of DA over shape-space
regions (the corrected body velocity integral), and variational optimization
of the frame weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import se2
from .errors import ConfigError, NonSimpleRegion

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class BodyFrameSpec:
    """Moving frame in which body velocity is expressed.

    ``middle-link`` is the frame attached to the central link.  ``weighted``
    places the frame at the convex-weighted average of the link centers, with
    orientation offset equal to the convex-weighted average of the link
    angles.  Weights are constant over shape space.
    """

    kind: str
    position_weights: tuple = (1.0, 0.0, 0.0)
    orientation_weights: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("middle-link", "weighted"):
            raise ConfigError(f"unknown frame kind {self.kind!r}")
        for w in (self.position_weights, self.orientation_weights):
            w = np.asarray(w, dtype=float)
            if w.shape != (3,) or np.any(w < -_WEIGHT_TOL):
                raise ConfigError("frame weights must be three nonnegative numbers")
            if abs(w.sum() - 1.0) > _WEIGHT_TOL:
                raise ConfigError("frame weights must sum to 1")

    @classmethod
    def middle_link(cls):
        return cls("middle-link")

    @classmethod
    def weighted(cls, position_weights, orientation_weights):
        return cls("weighted", tuple(float(w) for w in position_weights),
                   tuple(float(w) for w in orientation_weights))


def framed_connection(model, frame, phi):
    """Local connection expressed in ``frame``; phi (..., 2) -> (..., 3, 2).

    For a weighted frame at offset (d(phi), delta(phi)) from the middle link,
    the new connection follows from differentiating the frame's world pose:
    xy rows R(delta)^T (A_xy + d_phi + S d A_theta), omega row
    A_theta + delta_phi, with S the 90-degree rotation.
    """
    A = model.connection(phi)
    if frame.kind == "middle-link":
        return A

    w = np.asarray(frame.position_weights)
    v = np.asarray(frame.orientation_weights)
    beta, centers, dcenters = model.chain_kinematics(phi)
    delta = np.einsum("i,...i->...", v, beta)
    d = np.einsum("i,...ik->...k", w, centers)
    d_phi = np.einsum("i,...ikj->...kj", w, dcenters)  # (..., 2, 2)
    delta_phi = np.einsum("i,...ij->...j", v, _dbeta(beta))  # (..., 2)
    return _reframe(A, d, delta, d_phi, delta_phi)


def _dbeta(beta):
    """d(beta_i)/d(phi_j) for beta = (0, phi1, phi2): constant (..., 3, 2)."""
    out = np.zeros(beta.shape + (2,), dtype=beta.dtype)
    out[..., 1, 0] = 1.0
    out[..., 2, 1] = 1.0
    return out


def _reframe(A, d, delta, d_phi, delta_phi):
    Axy = A[..., :2, :]
    Ath = A[..., 2, :]
    # S d = (-dy, dx)
    Sd = np.stack([-d[..., 1], d[..., 0]], axis=-1)
    pre = Axy + d_phi + Sd[..., :, None] * Ath[..., None, :]
    c, s = np.cos(delta), np.sin(delta)
    newx = c[..., None] * pre[..., 0, :] + s[..., None] * pre[..., 1, :]
    newy = -s[..., None] * pre[..., 0, :] + c[..., None] * pre[..., 1, :]
    return np.stack([newx, newy, Ath + delta_phi], axis=-2)


def _fd_step(phi, h):
    phi = np.asarray(phi, dtype=float)
    if h is not None:
        return np.full(phi.shape[:-1], float(h))
    return 1e-5 * np.maximum(1.0, np.max(np.abs(phi), axis=-1))


def exterior_derivative(model, frame, phi, h=None, richardson=False):
    """Row-wise curl d(col2)/dphi1 - d(col1)/dphi2 of the framed connection.

    Central differences with per-point step h (default 1e-5 * max(1, |phi|));
    with ``richardson=True`` a second evaluation at h/2 is extrapolated to
    fourth order.
    """
    phi = np.asarray(phi, dtype=float)
    step = _fd_step(phi, h)
    d = _curl_fd(model, frame, phi, step)
    if richardson:
        d_half = _curl_fd(model, frame, phi, step / 2.0)
        d = (4.0 * d_half - d) / 3.0
    return d


def _curl_fd(model, frame, phi, step):
    e1 = np.zeros_like(phi)
    e1[..., 0] = step
    e2 = np.zeros_like(phi)
    e2[..., 1] = step
    batch = np.stack([phi + e1, phi - e1, phi + e2, phi - e2])
    A = framed_connection(model, frame, batch)
    inv2h = 1.0 / (2.0 * step)
    dcol2_dphi1 = (A[0, ..., 1] - A[1, ..., 1]) * inv2h[..., None]
    dcol1_dphi2 = (A[2, ..., 0] - A[3, ..., 0]) * inv2h[..., None]
    return dcol2_dphi1 - dcol1_dphi2


def lie_bracket(A):
    """Local Lie bracket of the two connection columns as planar twists.

    The rotational component vanishes identically (planar rotations commute);
    it is returned as an exact zero.
    """
    A = np.asarray(A)
    bx = A[..., 1, 0] * A[..., 2, 1] - A[..., 1, 1] * A[..., 2, 0]
    by = A[..., 0, 1] * A[..., 2, 0] - A[..., 0, 0] * A[..., 2, 1]
    return np.stack([bx, by, np.zeros_like(bx)], axis=-1)


@dataclass(frozen=True)
class CurvatureSample:
    """Total curvature DA = dA + [A1, A2] at one or more shape points."""

    phi: np.ndarray
    dA: np.ndarray
    bracket: np.ndarray
    DA: np.ndarray


def curvature(model, frame, phi, h=None, richardson=False):
    """Sample the total curvature of the framed connection at ``phi``."""
    phi = np.asarray(phi, dtype=float)
    dA = exterior_derivative(model, frame, phi, h=h, richardson=richardson)
    br = lie_bracket(framed_connection(model, frame, phi))
    # Sign fixed by the tiny-loop limit: displacement/area -> DA at the center.
    return CurvatureSample(phi=phi, dA=dA, bracket=br, DA=dA + br)


# ---------------------------------------------------------------------------
# Surface integration (corrected body velocity integral)
# ---------------------------------------------------------------------------


def _close_polyline(poly):
    poly = np.asarray(poly, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise NonSimpleRegion("region must be a polyline of at least 3 points")
    if np.linalg.norm(poly[0] - poly[-1]) > 1e-12:
        poly = np.vstack([poly, poly[0]])
    return poly


def signed_area(poly):
    """Signed (shoelace) area of a closed polyline; positive is ccw."""
    poly = _close_polyline(poly)
    x, y = poly[:-1, 0], poly[:-1, 1]
    xn, yn = poly[1:, 0], poly[1:, 1]
    return 0.5 * float(np.sum(x * yn - xn * y))


def is_simple_polygon(poly, tol=1e-12):
    """True if no two non-adjacent edges of the closed polyline intersect."""
    poly = _close_polyline(poly)
    p = poly[:-1]
    q = poly[1:]
    n = len(p)
    for i in range(n - 2):
        a, b = p[i], q[i]
        js = np.arange(i + 2, n - 1 if i == 0 else n)
        if len(js) == 0:
            continue
        c, d = p[js], q[js]
        if np.any(_segments_cross(a, b, c, d, tol)):
            return False
    return True


def _segments_cross(a, b, c, d, tol):
    """Vectorized proper-intersection test of segment (a,b) vs segments (c,d)."""
    r = b - a
    s = d - c
    denom = r[0] * s[:, 1] - r[1] * s[:, 0]
    qp = c - a
    t_num = qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]
    u_num = qp[:, 0] * r[1] - qp[:, 1] * r[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = t_num / denom
        u = u_num / denom
    hit = (np.abs(denom) > tol) & (t > tol) & (t < 1 - tol) & (u > tol) & (u < 1 - tol)
    return hit


_EVAL_CHUNK = 16384  # triangles per field evaluation, bounds peak memory


def _triangle_rule(verts, f):
    """Degree-2 rule (edge midpoints, equal weights) on signed triangles.

    ``verts`` is (n, 3, 2); returns (integrals (n, 3), signed areas (n,)).
    """
    a, b, c = verts[:, 0], verts[:, 1], verts[:, 2]
    area = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    mids = np.stack([(a + b) / 2, (b + c) / 2, (c + a) / 2], axis=1)
    means = np.empty((len(verts), 3))
    for lo in range(0, len(verts), _EVAL_CHUNK):
        means[lo: lo + _EVAL_CHUNK] = np.mean(
            f(mids[lo: lo + _EVAL_CHUNK]), axis=1)
    return area[:, None] * means, area


def _split4(verts):
    a, b, c = verts[:, 0], verts[:, 1], verts[:, 2]
    ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
    return np.concatenate([
        np.stack([a, ab, ca], axis=1),
        np.stack([ab, b, bc], axis=1),
        np.stack([ca, bc, c], axis=1),
        np.stack([ab, bc, ca], axis=1),
    ])


def integrate_over_region(f, region, tol=1e-7, max_levels=22):
    """Adaptively integrate a vectorized field f((..., 2)) -> (..., 3) over the
    region enclosed by a simple closed polyline.

    The polygon is decomposed into signed triangles fanned from its centroid
    (signed contributions make the decomposition exact for any simple
    polygon), then each triangle is refined midpoint-style until its local
    estimate stabilizes.  Orientation of the polyline carries through as the
    sign of the result.
    """
    poly = _close_polyline(region)
    if not is_simple_polygon(poly):
        raise NonSimpleRegion("region polyline self-intersects")
    total_area = signed_area(poly)
    if abs(total_area) < 1e-300:
        return np.zeros(3)

    centroid = poly[:-1].mean(axis=0)
    tris = np.stack([
        np.broadcast_to(centroid, (len(poly) - 1, 2)),
        poly[:-1],
        poly[1:],
    ], axis=1)
    # Drop degenerate fan triangles.
    u = tris[:, 1] - tris[:, 0]
    v = tris[:, 2] - tris[:, 0]
    keep = np.abs(0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])) > 1e-300
    tris = tris[keep]

    coarse, areas = _triangle_rule(tris, f)
    total = np.zeros(3)
    abs_area = float(np.sum(np.abs(areas)))
    for _ in range(max_levels):
        if len(tris) == 0:
            break
        children = _split4(tris)
        fine_parts, child_areas = _triangle_rule(children, f)
        fine = (fine_parts[: len(tris)] + fine_parts[len(tris): 2 * len(tris)]
                + fine_parts[2 * len(tris): 3 * len(tris)] + fine_parts[3 * len(tris):])
        err = np.max(np.abs(fine - coarse), axis=1)
        # |fine - coarse| bounds the error of coarse; fine (which is what we
        # keep) converges at least two orders faster, hence the 1/8 factor.
        budget = tol * np.maximum(np.abs(areas) / abs_area, 1e-9)
        done = (err / 8.0 <= budget) | (len(tris) > 100_000)
        total += fine[done].sum(axis=0)
        undone = ~done
        idx = np.concatenate([np.flatnonzero(undone) + k * len(tris) for k in range(4)])
        tris = children[idx]
        coarse = fine_parts[idx]
        areas = child_areas[idx]
    if len(tris):
        # Refinement budget exhausted; keep the finest available estimates.
        total += coarse.sum(axis=0)
    return total


def cbvi_integral(model, frame, region, tol=1e-7):
    """Pre-exponential corrected body velocity integral: the surface integral
    of DA over the enclosed region, as a 3-vector."""
    def field(pts):
        return curvature(model, frame, pts).DA

    return integrate_over_region(field, region, tol=tol)


def cbvi(model, frame, region, tol=1e-7):
    """Displacement estimate exp(integral of DA) over the region, as a pose.

    When the rotational component of the integral is negligible the
    translation components pass through unchanged; otherwise the closed-form
    planar exponential (constant-twist screw motion) applies.
    """
    return se2.exp(cbvi_integral(model, frame, region, tol=tol), omega_tol=1e-12)


# ---------------------------------------------------------------------------
# Minimum-perturbation frame optimization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrameOptimization:
    frame: BodyFrameSpec
    objective: float
    initial_objective: float
    improved: bool


def _frame_objective_factory(model, window, grid):
    p1 = np.linspace(window[0], window[1], grid)
    p2 = np.linspace(window[2], window[3], grid)
    P1, P2 = np.meshgrid(p1, p2, indexing="ij")
    phi = np.stack([P1.ravel(), P2.ravel()], axis=-1)
    A = model.connection(phi)
    beta, centers, dcenters = model.chain_kinematics(phi)
    dbeta = _dbeta(beta)

    def objective(w, v):
        delta = beta @ v
        d = np.einsum("i,nik->nk", w, centers)
        d_phi = np.einsum("i,nikj->nkj", w, dcenters)
        delta_phi = np.einsum("i,nij->nj", v, dbeta)
        Af = _reframe(A, d, delta, d_phi, delta_phi)
        return float(np.mean(np.sum(Af**2, axis=(-2, -1))))

    return objective


def _simplex(x2):
    """Map two free coordinates to a point of the 3-simplex (clipped)."""
    w1, w2 = x2
    w = np.array([1.0 - w1 - w2, w1, w2])
    return np.clip(w, 0.0, None) / max(np.clip(w, 0.0, None).sum(), 1e-300)


def frame_weights(frame):
    return (np.asarray(frame.position_weights, dtype=float),
            np.asarray(frame.orientation_weights, dtype=float))


def optimize_frame(model, window, init=None, grid=25, improvement_tol=1e-12):
    """Choose constant link weights minimizing the mean squared Frobenius norm
    of the framed connection over a rectangular shape-space window.

    ``window`` is (phi1_min, phi1_max, phi2_min, phi2_max).  Deterministic
    given the init (Nelder-Mead simplex descent from the init's weights).
    Returns the init with ``improved=False`` if the objective cannot be
    reduced by more than ``improvement_tol``.
    """
    if init is None:
        init = BodyFrameSpec.middle_link()
    objective = _frame_objective_factory(model, window, grid)
    w0, v0 = frame_weights(init)
    f0 = objective(w0, v0)

    def packed(x):
        w = _simplex(x[:2])
        v = _simplex(x[2:])
        pen = float(np.sum(np.clip(-np.array([1 - x[0] - x[1], x[0], x[1],
                                              1 - x[2] - x[3], x[2], x[3]]), 0, None) ** 2))
        return objective(w, v) + 10.0 * pen

    x0 = np.array([w0[1], w0[2], v0[1], v0[2]])
    res = minimize(packed, x0, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
    w = _simplex(res.x[:2])
    v = _simplex(res.x[2:])
    f_opt = objective(w, v)
    if f0 - f_opt < improvement_tol:
        return FrameOptimization(frame=init, objective=f0, initial_objective=f0,
                                 improved=False)
    frame = BodyFrameSpec.weighted(w, v)
    return FrameOptimization(frame=frame, objective=f_opt, initial_objective=f0,
                             improved=True)
