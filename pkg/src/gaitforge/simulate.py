"""Exact gait integration: the ground-truth line integral.

Integrates the reconstruction equation q_dot = R(theta) A(phi(s)) phi'(s)
along a closed shape-space curve with an adaptive embedded Runge-Kutta 4(5)
pair.  Net displacement from here is the reference against which both the
variational and geometric pipelines are judged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp

from . import se2
from .connection import BodyFrameSpec, framed_connection
from .errors import ConfigError, IntegrationFailure

CLOSURE_TOL = 1e-12


@dataclass(frozen=True)
class Gait:
    """Closed, oriented, piecewise-smooth curve in shape space.

    Analytic families (circle, square) or an ordered closed polyline.
    ``orientation`` is "ccw" or "cw" and flips the traversal direction.
    """

    kind: str
    center: tuple = (0.0, 0.0)
    amplitude: float = 0.0  # circle radius or square half-side
    vertices: tuple = ()  # polyline only: ((phi1, phi2), ...), not repeated
    orientation: str = "ccw"

    def __post_init__(self):
        if self.kind not in ("circle", "square", "polyline"):
            raise ConfigError(f"unknown gait kind {self.kind!r}")
        if self.orientation not in ("ccw", "cw"):
            raise ConfigError("orientation must be 'ccw' or 'cw'")
        if self.kind in ("circle", "square"):
            if self.amplitude < 0:
                raise ConfigError("gait amplitude must be nonnegative")
        else:
            verts = np.asarray(self.vertices, dtype=float)
            if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
                raise ConfigError("polyline gait needs at least 3 vertices")
            seg = np.diff(np.vstack([verts, verts[:1]]), axis=0)
            if np.any(np.linalg.norm(seg, axis=1) < CLOSURE_TOL):
                raise ConfigError("polyline gait has a zero-length segment")

    @classmethod
    def circle(cls, center=(0.0, 0.0), radius=1.0, orientation="ccw"):
        return cls("circle", center=tuple(center), amplitude=float(radius),
                   orientation=orientation)

    @classmethod
    def square(cls, center=(0.0, 0.0), half_side=1.0, orientation="ccw"):
        return cls("square", center=tuple(center), amplitude=float(half_side),
                   orientation=orientation)

    @classmethod
    def polyline(cls, vertices, orientation="ccw"):
        verts = np.asarray(vertices, dtype=float)
        if len(verts) > 1 and np.linalg.norm(verts[0] - verts[-1]) < CLOSURE_TOL:
            verts = verts[:-1]
        return cls("polyline", vertices=tuple(map(tuple, verts)),
                   orientation=orientation)

    def reversed(self):
        flip = "cw" if self.orientation == "ccw" else "ccw"
        return Gait(self.kind, self.center, self.amplitude, self.vertices, flip)

    # -- parametrization --------------------------------------------------

    @cached_property
    def _closed_loop(self):
        if self.kind == "square":
            cx, cy = self.center
            e = self.amplitude
            verts = np.array([[cx + e, cy - e], [cx + e, cy + e],
                              [cx - e, cy + e], [cx - e, cy - e]])
        else:
            verts = np.asarray(self.vertices, dtype=float)
        if self.orientation == "cw":
            verts = verts[::-1]
        loop = np.vstack([verts, verts[:1]])
        loop.setflags(write=False)
        return loop

    def _poly_vertices(self):
        """Closed vertex loop (first point repeated) in traversal order.

        Cached: the tuple-of-tuples storage is too slow to rebuild inside
        integrator callbacks."""
        return self._closed_loop

    def breakpoints(self):
        """Parameter values of the C0 corners (uniform per edge), including
        the endpoints 0 and 1.  A circle has no interior corners."""
        if self.kind == "circle":
            return np.array([0.0, 1.0])
        n = len(self._poly_vertices()) - 1
        return np.linspace(0.0, 1.0, n + 1)

    def point(self, s):
        """Shape point(s) at curve parameter s in [0, 1]; vectorized."""
        s = np.asarray(s, dtype=float)
        if self.kind == "circle":
            sign = 1.0 if self.orientation == "ccw" else -1.0
            ang = 2.0 * np.pi * sign * s
            return np.stack([self.center[0] + self.amplitude * np.cos(ang),
                             self.center[1] + self.amplitude * np.sin(ang)], axis=-1)
        verts = self._poly_vertices()
        n = len(verts) - 1
        u = np.clip(s, 0.0, 1.0) * n
        idx = np.minimum(u.astype(int), n - 1)
        frac = u - idx
        a = verts[idx]
        b = verts[idx + 1]
        return a + frac[..., None] * (b - a)

    def velocity(self, s):
        """d(point)/ds; piecewise constant on polyline edges."""
        s = np.asarray(s, dtype=float)
        if self.kind == "circle":
            sign = 1.0 if self.orientation == "ccw" else -1.0
            ang = 2.0 * np.pi * sign * s
            r = 2.0 * np.pi * sign * self.amplitude
            return np.stack([-r * np.sin(ang), r * np.cos(ang)], axis=-1)
        verts = self._poly_vertices()
        n = len(verts) - 1
        idx = np.minimum((np.clip(s, 0.0, 1.0) * n).astype(int), n - 1)
        return (verts[idx + 1] - verts[idx]) * n


@dataclass(frozen=True)
class Trajectory:
    """Sampled pose history of one gait traversal; pose(0) = (0, 0, 0)."""

    s: np.ndarray
    shapes: np.ndarray  # (n, 2)
    poses: np.ndarray  # (n, 3)
    displacement: np.ndarray  # pose at s = 1
    nfev: int = 0
    nsegments: int = 1

    @property
    def dx(self):
        return float(self.displacement[0])


def _segment_rhs(model, frame, gait, reparam):
    sigma, dsigma = reparam

    def rhs(t, q):
        s = sigma(t)
        phi = gait.point(s)
        A = framed_connection(model, frame, phi)
        dphi = gait.velocity(s) * dsigma(t)
        body = A @ dphi
        c, th_s = np.cos(q[2]), np.sin(q[2])
        return np.array([c * body[0] - th_s * body[1],
                         th_s * body[0] + c * body[1],
                         body[2]])

    return rhs


_IDENTITY_REPARAM = (lambda t: t, lambda t: 1.0)


def integrate_gait(model, gait, frame=None, rtol=1e-9, atol=1e-11,
                   samples_per_segment=64, reparam=None, corner_restarts=True):
    """Integrate the reconstruction equation along one gait cycle.

    ``frame`` defaults to the middle-link frame.  Corners of square/polyline
    gaits restart the integrator so the adaptive pair keeps its order;
    ``corner_restarts=False`` integrates the whole cycle in one adaptive run,
    which is much cheaper for densely sampled nearly-smooth polylines.
    ``reparam`` is an optional (sigma, sigma') speed profile with sigma a
    monotone bijection of [0, 1]; the displacement is invariant to it.
    """
    if frame is None:
        frame = BodyFrameSpec.middle_link()
    if gait.kind != "circle" and gait.amplitude == 0.0 and not gait.vertices:
        raise ConfigError("degenerate gait")
    reparam = reparam or _IDENTITY_REPARAM
    rhs = _segment_rhs(model, frame, gait, reparam)

    breaks = gait.breakpoints()
    if not corner_restarts:
        samples_per_segment = min(4096, samples_per_segment * (len(breaks) - 1))
        breaks = np.array([0.0, 1.0])
    q = np.zeros(3)
    all_s = [np.array([0.0])]
    all_q = [q.reshape(1, 3)]
    nfev = 0
    for a, b in zip(breaks[:-1], breaks[1:]):
        t_eval = np.linspace(a, b, samples_per_segment + 1)[1:]
        sol = solve_ivp(rhs, (a, b), q, method="RK45", rtol=rtol, atol=atol,
                        t_eval=t_eval, dense_output=False)
        nfev += sol.nfev
        if not sol.success:
            raise IntegrationFailure(f"integration failed: {sol.message}", location=float(sol.t[-1]) if len(sol.t) else a)
        q = sol.y[:, -1].copy()
        all_s.append(sol.t)
        all_q.append(sol.y.T)
    s = np.concatenate(all_s)
    poses = np.vstack(all_q)
    return Trajectory(s=s, shapes=gait.point(s), poses=poses,
                      displacement=poses[-1].copy(), nfev=nfev,
                      nsegments=len(breaks) - 1)


def time_reparametrization_check(model, gait, reparam_a, reparam_b,
                                 frame=None, rtol=1e-11, atol=1e-13):
    """Max componentwise displacement discrepancy between two speed profiles
    of the same geometric curve.  Contract: below 1e-8."""
    ta = integrate_gait(model, gait, frame=frame, rtol=rtol, atol=atol,
                        reparam=reparam_a)
    tb = integrate_gait(model, gait, frame=frame, rtol=rtol, atol=atol,
                        reparam=reparam_b)
    return float(np.max(np.abs(ta.displacement - tb.displacement)))


@dataclass(frozen=True)
class SweepResult:
    """Net displacement vs gait amplitude for one analytic family."""

    family: str
    eps: np.ndarray
    displacements: np.ndarray  # (n, 3) columns dx, dy, dtheta
    argmax_eps: float
    argmax_dx: float
    argmin_eps: float
    argmin_dx: float

    def table(self):
        return np.column_stack([self.eps, self.displacements])


def _make_gait(family, eps):
    if family == "circle":
        return Gait.circle(radius=eps)
    if family == "square":
        return Gait.square(half_side=eps)
    raise ConfigError(f"unknown gait family {family!r}")


def _quadratic_refine(model, family, eps, dx, idx, rtol, atol):
    """Refine a grid extremum of dx(eps) by one parabolic fit step."""
    if idx == 0 or idx == len(eps) - 1:
        return float(eps[idx]), float(dx[idx])
    e = eps[idx - 1: idx + 2]
    d = dx[idx - 1: idx + 2]
    denom = (d[0] - 2 * d[1] + d[2])
    if abs(denom) < 1e-300:
        return float(eps[idx]), float(dx[idx])
    e_star = e[1] - 0.5 * (e[2] - e[1]) * (d[2] - d[0]) / denom
    e_star = float(np.clip(e_star, e[0], e[2]))
    traj = integrate_gait(model, _make_gait(family, e_star), rtol=rtol, atol=atol)
    return e_star, traj.dx


def _sweep_one(args):
    model, family, eps, rtol, atol = args
    traj = integrate_gait(model, _make_gait(family, eps), rtol=rtol, atol=atol)
    return traj.displacement


def displacement_sweep(model, family, eps_grid, rtol=1e-9, atol=1e-11,
                       workers=1):
    """Net displacement per cycle over a strictly increasing amplitude grid,
    with quadratic refinement of the dx extrema."""
    eps = np.asarray(eps_grid, dtype=float)
    if len(eps) == 0 or np.any(np.diff(eps) <= 0) or eps[0] <= 0:
        raise ConfigError("eps grid must be strictly increasing and positive")
    jobs = [(model, family, e, rtol, atol) for e in eps]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            disp = list(pool.map(_sweep_one, jobs, chunksize=8))
    else:
        disp = [_sweep_one(j) for j in jobs]
    disp = np.array(disp)
    dx = disp[:, 0]
    imax = int(np.argmax(dx))
    imin = int(np.argmin(dx))
    emax, dmax = _quadratic_refine(model, family, eps, dx, imax, rtol, atol)
    emin, dmin = _quadratic_refine(model, family, eps, dx, imin, rtol, atol)
    return SweepResult(family=family, eps=eps, displacements=disp,
                       argmax_eps=emax, argmax_dx=dmax,
                       argmin_eps=emin, argmin_dx=dmin)


def compose_displacements(*gaits_displacements):
    """SE(2) composition of successive per-cycle displacements."""
    out = np.zeros(3)
    for d in gaits_displacements:
        out = se2.compose(out, d)
    return out
