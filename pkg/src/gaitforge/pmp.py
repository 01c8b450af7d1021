"""Variational gait optimization by the maximum principle.

The cost is net x-displacement per cycle with unit-speed joint inputs, so the
Hamiltonian is input-linear and optimal arcs are singular: the control is
recovered from successive time derivatives of H_u.  One quarter of the gait
is integrated between the two reflection symmetry lines of the swimmer,
from phi1 = -phi2 (where the costate initialization Psi = 0 is solvable
for lam3) to phi1 = phi2, and the full closed gait follows from the
reflection symmetries.  Joint bounds enter by the direct adjoining
approach, adding bang arcs with the bounded joint pinned.

States are ordered (phi1, phi2, theta, lam3, lam1, lam2): lam3 drives the
unbounded problem; lam1, lam2 are needed on bound arcs and kept as
diagnostics elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (BoundNeverReached, ConfigError, IntegrationFailure,
                     NoBracket, NoRoot, SingularArcBreakdown)
from .simulate import Gait, integrate_gait

_CS_STEP = 1e-20  # complex step for first partials of the connection
_FD_STEP = 1e-6  # outer real step for partials of Psi
_TANGENT_EPS2 = 1e-20  # breakdown threshold on A^2 + B^2
_T_MAX = 40.0  # unit-speed arc length bound; gaits here are far shorter
_ESCAPE_RADIUS = 2.0 * np.pi  # default validity radius: joints past a full turn
_EVAL_BUDGET = 40000  # RHS evaluations per arc; stiff wanderers abort early


@dataclass(frozen=True)
class OcpState:
    """State and costates at one instant of the optimal control problem."""

    phi1: float
    phi2: float
    theta: float
    lambda1: float
    lambda2: float
    lambda3: float

    def as_array(self):
        return np.array([self.phi1, self.phi2, self.theta,
                         self.lambda3, self.lambda1, self.lambda2])


@dataclass(frozen=True)
class ArcSegment:
    """One integrated arc of the quarter gait."""

    kind: str  # "singular-arc" | "bound-arc"
    t: np.ndarray
    states: np.ndarray  # (n, 6) rows (phi1, phi2, theta, lam3, lam1, lam2)
    controls: np.ndarray  # (n, 2)


@dataclass(frozen=True)
class PmpSolution:
    """Converged quarter-gait trajectory plus the reconstructed full gait."""

    segments: tuple
    bound: float | None
    phi1_0: float
    tau1: float | None
    tau2: float | None
    t_final: float
    gait: Gait
    displacement: np.ndarray
    residuals: dict
    converged: bool

    @property
    def dx(self):
        return float(self.displacement[0])

    def quarter_path(self):
        """Shape-space polyline of the quarter gait."""
        return np.vstack([seg.states[:, :2] for seg in self.segments])


# ---------------------------------------------------------------------------
# Connection partials and the singular-arc algebra
# ---------------------------------------------------------------------------


def _connection_with_partials(model, phi):
    """A and its two joint-angle partials by one batched complex step."""
    pts = np.array([[phi[0] + 1j * _CS_STEP, phi[1]],
                    [phi[0], phi[1] + 1j * _CS_STEP]])
    Ac = model.connection(pts)
    return Ac[0].real, Ac[0].imag / _CS_STEP, Ac[1].imag / _CS_STEP


def _x_row(theta, M):
    """World x-row pair of R(theta) M for connection-shaped M, batched OK."""
    return np.cos(theta) * M[..., 0, :] - np.sin(theta) * M[..., 1, :]


def cost_integrand(model, phi, theta):
    """(g, h): world-frame x-velocity per unit joint rate, the running cost."""
    return tuple(_x_row(theta, model.connection(np.asarray(phi, dtype=float))))


def _psi_pieces(model, phi, theta, parts=None):
    """Everything Psi needs at one point.

    Returns (gh, gh_t, d1, d2, pq, pq1, pq2) where gh = (g, h), gh_t their
    theta-partials, d1/d2 the x-row of dA/dphi_j, pq the omega-row of A and
    pq1/pq2 its joint partials.  ``parts`` lets callers reuse an already
    computed (A, dA/dphi1, dA/dphi2) triple.
    """
    A0, A1, A2 = parts if parts is not None else _connection_with_partials(
        model, phi)
    gh = _x_row(theta, A0)
    gh_t = _x_row(theta + np.pi / 2.0, A0)
    d1 = _x_row(theta, A1)
    d2 = _x_row(theta, A2)
    return gh, gh_t, d1, d2, A0[2], A1[2], A2[2]


def _psi_split_many(model, phis, theta):
    """(psi0, psi_l3) at several shape points with one connection call."""
    phis = np.asarray(phis, dtype=float)
    pts = np.zeros(phis.shape[:-1] + (2, 2), dtype=complex)
    pts[..., 0, :] = phis
    pts[..., 1, :] = phis
    pts[..., 0, 0] += 1j * _CS_STEP
    pts[..., 1, 1] += 1j * _CS_STEP
    Ac = model.connection(pts)
    A0 = Ac[..., 0, :, :].real
    A1 = Ac[..., 0, :, :].imag / _CS_STEP
    A2 = Ac[..., 1, :, :].imag / _CS_STEP
    gh_t = _x_row(theta + np.pi / 2.0, A0)
    d1 = _x_row(theta, A1)
    d2 = _x_row(theta, A2)
    pq = A0[..., 2, :]
    psi0 = (d2[..., 0] - d1[..., 1]
            + gh_t[..., 0] * pq[..., 1] - gh_t[..., 1] * pq[..., 0])
    psi_l3 = A2[..., 2, 0] - A1[..., 2, 1]
    return psi0, psi_l3


def _psi_split(model, phi, theta):
    """Psi = psi0 + lam3 * psi_l3 (Psi is affine in lam3)."""
    psi0, psi_l3 = _psi_split_many(model, np.asarray(phi, dtype=float), theta)
    return float(psi0), float(psi_l3)


def psi(model, phi, theta, lam3):
    """First time derivative coefficient of H_u: vanishes on singular arcs."""
    psi0, psi_l3 = _psi_split(model, phi, theta)
    return psi0 + lam3 * psi_l3


def initial_costate(model, phi0, bounded=False):
    """Costates at the symmetric start point (phi0, -phi0, theta=0).

    The start sits on the symmetry line phi1 = -phi2, the only line where
    the lam3 coefficient of Psi is nonzero for a symmetric swimmer.  lam3
    solves Psi = 0 (closed form: Psi is affine in lam3); lam1, lam2
    additionally zero both components of H_u, which every singular arc start
    requires.
    """
    phi = np.array([phi0, -phi0])
    psi0, psi_l3 = _psi_split(model, phi, 0.0)
    if abs(psi_l3) < 1e-14:
        raise NoRoot("lam3 coefficient of Psi is degenerate at the start point",
                     bracket=(phi0, -phi0))
    lam3 = -psi0 / psi_l3
    A0 = model.connection(phi)
    gh = _x_row(0.0, A0)
    pq = A0[2]
    lam1 = -(gh[0] + lam3 * pq[0])
    lam2 = -(gh[1] + lam3 * pq[1])
    return lam3, lam1, lam2


def _singular_direction(model, phi, theta, lam3, parts=None):
    """Unnormalized singular-arc tangent (B, -A) from d/dt Psi = 0."""
    if parts is None:
        parts = _connection_with_partials(model, phi)
    A0, A1, A2 = parts
    _, gh_t, _, _, pq, pq1, pq2 = _psi_pieces(model, phi, theta, parts=parts)
    p, q = pq
    psi_l3 = pq2[0] - pq1[1]

    phi = np.asarray(phi, dtype=float)
    fd_pts = np.array([phi + (_FD_STEP, 0.0), phi - (_FD_STEP, 0.0),
                       phi + (0.0, _FD_STEP), phi - (0.0, _FD_STEP)])
    psi0s, psi_l3s = _psi_split_many(model, fd_pts, theta)
    psis = psi0s + lam3 * psi_l3s
    psi_p1 = (psis[0] - psis[1]) / (2.0 * _FD_STEP)
    psi_p2 = (psis[2] - psis[3]) / (2.0 * _FD_STEP)
    # theta-partial of Psi in closed form: rotating x-rows by pi/2 again.
    gh_tt = _x_row(theta + np.pi, A0)
    d1_t = _x_row(theta + np.pi / 2.0, A1)
    d2_t = _x_row(theta + np.pi / 2.0, A2)
    psi_th = d2_t[0] - d1_t[1] + gh_tt[0] * q - gh_tt[1] * p
    coef_a = psi_p1 + psi_th * p - psi_l3 * gh_t[0]
    coef_b = psi_p2 + psi_th * q - psi_l3 * gh_t[1]
    return coef_b, -coef_a


def _costate_rates(model, phi, theta, lam3, u, parts=None):
    """(lam1', lam2', lam3') = -dH/d(phi1, phi2, theta)."""
    _, gh_t, d1, d2, _, pq1, pq2 = _psi_pieces(model, phi, theta, parts=parts)
    lam1_dot = -((d1[0] + lam3 * pq1[0]) * u[0] + (d1[1] + lam3 * pq1[1]) * u[1])
    lam2_dot = -((d2[0] + lam3 * pq2[0]) * u[0] + (d2[1] + lam3 * pq2[1]) * u[1])
    lam3_dot = -(gh_t[0] * u[0] + gh_t[1] * u[1])
    return lam1_dot, lam2_dot, lam3_dot


def hamiltonian(model, y, u):
    """H at a packed state y = (phi1, phi2, theta, lam3, lam1, lam2)."""
    phi = y[:2]
    theta = y[2]
    lam3, lam1, lam2 = y[3], y[4], y[5]
    A0 = model.connection(phi)
    gh = _x_row(theta, A0)
    p, q = A0[2]
    return ((gh[0] + lam1 + lam3 * p) * u[0]
            + (gh[1] + lam2 + lam3 * q) * u[1])


def h_u(model, y):
    """Both components of dH/du at a packed state."""
    phi = y[:2]
    theta = y[2]
    lam3, lam1, lam2 = y[3], y[4], y[5]
    A0 = model.connection(phi)
    gh = _x_row(theta, A0)
    p, q = A0[2]
    return np.array([gh[0] + lam1 + lam3 * p, gh[1] + lam2 + lam3 * q])


def singular_control(model, y, sigma, parts=None):
    """Unit control on the singular arc; raises on tangent degeneracy."""
    b, na = _singular_direction(model, y[:2], y[2], y[3], parts=parts)
    den2 = b * b + na * na
    if den2 < _TANGENT_EPS2:
        raise SingularArcBreakdown(
            "singular-arc tangent undefined (A^2 + B^2 ~ 0)",
            state=tuple(y[:4]), time=None)
    den = np.sqrt(den2)
    return np.array([sigma * b / den, sigma * na / den])


def _singular_rhs(model, sigma):
    def rhs(t, y):
        parts = _connection_with_partials(model, y[:2])
        u = singular_control(model, y, sigma, parts=parts)
        p, q = parts[0][2]
        lam1_dot, lam2_dot, lam3_dot = _costate_rates(model, y[:2], y[2],
                                                      y[3], u, parts=parts)
        return np.array([u[0], u[1], p * u[0] + q * u[1],
                         lam3_dot, lam1_dot, lam2_dot])

    return rhs


def _bound_rhs(model, u2):
    u = np.array([0.0, u2])

    def rhs(t, y):
        parts = _connection_with_partials(model, y[:2])
        q = parts[0][2, 1]
        lam1_dot, lam2_dot, lam3_dot = _costate_rates(model, y[:2], y[2],
                                                      y[3], u, parts=parts)
        return np.array([0.0, u[1], q * u[1], lam3_dot, lam1_dot, lam2_dot])

    return rhs


# ---------------------------------------------------------------------------
# Quarter-gait integration
# ---------------------------------------------------------------------------


def _start_state(model, phi0):
    lam3, lam1, lam2 = initial_costate(model, phi0)
    return np.array([phi0, -phi0, 0.0, lam3, lam1, lam2])


def _start_sigma(model, y0):
    """Tangent sign picking one of the two arcs leaving the start line.

    The gait crosses its symmetry lines perpendicularly, so the start
    tangent is parallel to (1, 1); the sign with u1 + u2 matching phi1(0)
    traverses the loop counterclockwise, the orientation whose enclosed
    curvature sign matches the displacement sign.
    """
    u = singular_control(model, y0, 1.0)
    progress = u[0] + u[1]
    want = np.sign(y0[0])
    if progress == 0.0:
        return 1.0
    return 1.0 if np.sign(progress) == want else -1.0


def _diagonal_event(direction):
    """Terminal crossing of the quarter-gait end line phi1 = phi2."""

    def ev(t, y):
        return y[0] - y[1]

    ev.terminal = True
    ev.direction = direction
    return ev


def _bound_event(b, phi0):
    """Leading joint reaching its active limit sign(phi0) * b."""
    level = np.sign(phi0) * b

    def ev(t, y):
        return y[0] - level

    ev.terminal = True
    ev.direction = np.sign(phi0)
    return ev


def _radius_escape_event(radius):
    """Joint excursion past the validity radius: abort the arc.  Extremal
    candidates that wander far from the origin before coming back are not
    gait quarters; cutting them keeps the residual scan honest."""

    def ev(t, y):
        return np.hypot(y[0], y[1]) - radius

    ev.terminal = True
    ev.direction = 1.0
    return ev


def _box_escape_event(bound):
    """Leaving the admissible joint box, with a small event-ordering margin
    so the limit and corner events fire first on the box faces."""

    def ev(t, y):
        return max(abs(y[0]), abs(y[1])) - (bound + 1e-3)

    ev.terminal = True
    ev.direction = 1.0
    return ev


def _run_arc(model, rhs, y0, t0, events, rtol=1e-10, atol=1e-12,
             max_step=np.inf, escape=None):
    if escape is None:
        escape = _radius_escape_event(_ESCAPE_RADIUS)
    budget = [_EVAL_BUDGET]

    def metered(t, y):
        budget[0] -= 1
        if budget[0] < 0:
            raise IntegrationFailure("arc exceeded its evaluation budget",
                                     location=float(t))
        return rhs(t, y)

    sol = solve_ivp(metered, (t0, t0 + _T_MAX), y0, method="RK45", rtol=rtol,
                    atol=atol, events=list(events) + [escape],
                    dense_output=True, max_step=max_step)
    if not sol.success:
        raise IntegrationFailure(f"arc integration failed: {sol.message}",
                                 location=float(sol.t[-1]))
    if len(sol.t_events[-1]) > 0:
        raise IntegrationFailure("arc escaped the shape window",
                                 location=float(sol.t[-1]))
    return sol


def _integrate_quarter(model, phi0, bound=None, dtau=None, rtol=1e-10,
                       atol=1e-12, escape_radius=None):
    """Integrate one quarter gait from phi1 = -phi2 to phi1 = phi2.

    Without a bound: a single singular arc to the end line.  With one:
    singular arc until phi1 reaches its limit, then a bang arc of duration
    dtau with phi1 pinned, then a singular arc to the end line.  Returns
    (segments, tau1, tau2).
    """
    y0 = _start_state(model, phi0)
    sigma = _start_sigma(model, y0)
    events = [_diagonal_event(-np.sign(phi0))]
    # Joint-limited quarters must stay inside the box; free quarters only
    # need the coarse validity radius.
    if bound is not None:
        escape = _box_escape_event(bound)
    else:
        escape = _radius_escape_event(escape_radius or _ESCAPE_RADIUS)
    if bound is not None:
        events.append(_bound_event(bound, phi0))

    sol = _run_arc(model, _singular_rhs(model, sigma), y0, 0.0, events,
                   rtol=rtol, atol=atol, escape=escape)
    segs = []

    def record(sol, kind, u_of=None):
        n = max(len(sol.t), 2)
        # Cap segment sampling: the assembled gait polyline drives a full
        # trajectory integration, whose cost scales with vertex count.
        t = np.linspace(sol.t[0], sol.t[-1], min(max(n, 33), 385))
        states = sol.sol(t).T
        if kind == "singular-arc":
            controls = np.array([singular_control(model, s, sigma)
                                 for s in states])
        else:
            controls = np.broadcast_to(u_of, (len(t), 2)).copy()
        segs.append(ArcSegment(kind=kind, t=t, states=states,
                               controls=controls))
        return states[-1], t[-1]

    def check_sector(segs):
        # A quarter of a simple loop symmetric about both lines stays in the
        # 90-degree wedge between them; arcs that leave it are not gait
        # quarters even if they eventually cross the end line.
        q = np.vstack([seg.states[:, :2] for seg in segs])
        s = (q[:, 0] + q[:, 1]) * np.sign(phi0)
        d = (q[:, 0] - q[:, 1]) * np.sign(phi0)
        if np.any(s[1:] < -1e-9) or np.any(d < -1e-9):
            raise IntegrationFailure("quarter arc left its symmetry sector",
                                     location=float(segs[-1].t[-1]))
        return segs

    hit_bound = bound is not None and len(sol.t_events[1]) > 0
    hit_end = len(sol.t_events[0]) > 0
    if bound is None:
        if not hit_end:
            raise IntegrationFailure("quarter gait never reached the "
                                     "end line", location=float(sol.t[-1]))
        record(sol, "singular-arc")
        return tuple(check_sector(segs)), None, None

    if not hit_bound:
        raise BoundNeverReached(
            f"singular arc ended before reaching the phi1 limit {bound}")
    y1, tau1 = record(sol, "singular-arc")

    # Bang arc on the bound: the pinned joint rests, the free joint runs at
    # unit rate toward the end line.
    u2 = np.sign(phi0) if phi0 != 0 else 1.0
    if dtau is None:
        raise ConfigError("bound arc requires an exit time")
    sol2 = solve_ivp(_bound_rhs(model, u2), (tau1, tau1 + dtau), y1,
                     method="RK45", rtol=rtol, atol=atol, dense_output=True,
                     events=[_diagonal_event(-np.sign(phi0))])
    if not sol2.success:
        raise IntegrationFailure(f"bound arc failed: {sol2.message}",
                                 location=float(sol2.t[-1]))
    y2, tau2 = record(sol2, "bound-arc", u_of=np.array([0.0, u2]))
    if len(sol2.t_events[0]) > 0:
        # Hit the end-line corner while still pinned.
        return tuple(check_sector(segs)), tau1, tau2

    sol3 = _run_arc(model, _singular_rhs(model, sigma), y2, tau2,
                    [_diagonal_event(-np.sign(phi0))], rtol=rtol, atol=atol,
                    escape=escape)
    if len(sol3.t_events[0]) == 0:
        raise IntegrationFailure("exit arc never reached the end line",
                                 location=float(sol3.t[-1]))
    record(sol3, "singular-arc")
    return tuple(check_sector(segs)), tau1, tau2


# ---------------------------------------------------------------------------
# Symmetry reconstruction and solution assembly
# ---------------------------------------------------------------------------


def _full_gait_from_quarter(quarter):
    """Reflect the quarter path into the full closed gait polyline.

    The second quarter mirrors across the end line phi1 = phi2, the third
    is the point reflection of the first, the fourth mirrors across the
    start line phi1 = -phi2.
    """
    q = np.asarray(quarter, dtype=float)
    second = np.stack([q[::-1, 1], q[::-1, 0]], axis=-1)
    third = -q
    fourth = np.stack([-q[::-1, 1], -q[::-1, 0]], axis=-1)
    full = np.vstack([q, second[1:], third[1:], fourth[1:]])
    # Drop consecutive duplicates from shared symmetry-line endpoints.
    keep = np.ones(len(full), dtype=bool)
    keep[1:] = np.linalg.norm(np.diff(full, axis=0), axis=1) > 1e-12
    return full[keep]


def _solution(model, segments, bound, phi0, tau1, tau2, residuals,
              converged=True):
    quarter = np.vstack([seg.states[:, :2] for seg in segments])
    full = _full_gait_from_quarter(quarter)
    closure = float(np.linalg.norm(full[0] - full[-1]))
    gait = Gait.polyline(full)
    # Displacement reporting only; 1e-7 keeps dx good to ~1e-5 and is far
    # cheaper than the reference tolerance on a dense polyline.
    traj = integrate_gait(model, gait, corner_restarts=False, rtol=1e-7,
                          atol=1e-9)
    residuals = dict(residuals)
    residuals["gait_closure"] = closure
    return PmpSolution(segments=tuple(segments), bound=bound, phi1_0=phi0,
                       tau1=tau1, tau2=tau2,
                       t_final=float(segments[-1].t[-1]), gait=gait,
                       displacement=traj.displacement, residuals=residuals,
                       converged=converged)


# ---------------------------------------------------------------------------
# Shooting
# ---------------------------------------------------------------------------


def _scan_brackets(f, lo, hi, step):
    """All sign-change brackets of f on [lo, hi] at the given scan step.

    Points where f raises a solver error are skipped.
    """
    xs = np.arange(lo, hi + 0.5 * step, step)
    vals = []
    for x in xs:
        try:
            vals.append((x, f(x)))
        except (SingularArcBreakdown, IntegrationFailure, BoundNeverReached,
                NoRoot):
            vals.append((x, None))
    brackets = []
    for (xa, fa), (xb, fb) in zip(vals[:-1], vals[1:]):
        if fa is None or fb is None:
            continue
        if np.sign(fa) != np.sign(fb) and fa != fb:
            brackets.append((xa, xb))
    return brackets


def shoot_unbounded(model, interval=(0.05, 2.8), scan_step=0.02,
                    residual_tol=1e-8, escape_radius=None):
    """Solve the unbounded quarter-gait problem by shooting on phi1(0).

    The start point is (phi0, -phi0) and the residual is the transversality
    defect lam3(t_f) where the singular arc reaches phi1 = phi2.  Raises
    NoBracket when the residual never changes sign over the scanned
    start-line interval.  ``escape_radius`` widens the default validity
    radius for models whose optimal loops reach past a full joint turn.
    """

    def residual(phi0, rtol=1e-10, atol=1e-12):
        segs, _, _ = _integrate_quarter(model, phi0, rtol=rtol, atol=atol,
                                        escape_radius=escape_radius)
        return float(segs[-1].states[-1, 3])

    def coarse(phi0):
        # The scan only needs residual signs; loose tolerances are ~5x faster.
        return residual(phi0, rtol=1e-7, atol=1e-9)

    brackets = _scan_brackets(coarse, interval[0], interval[1], scan_step)
    if not brackets:
        raise NoBracket("shooting residual lam3(t_f) never changes sign",
                        interval=tuple(interval))
    lo, hi = brackets[0]
    phi0 = brentq(residual, lo, hi, xtol=1e-12, rtol=8.9e-16)
    res = residual(phi0)
    if abs(res) > residual_tol:
        raise NoRoot(f"shooting residual {res:.3e} above tolerance",
                     bracket=(lo, hi))
    segs, _, _ = _integrate_quarter(model, phi0, escape_radius=escape_radius)
    return _solution(model, segs, None, phi0, None, None,
                     {"lam3_tf": res})


def shoot_bounded(model, bound, interval=(2.0, 3.05), scan_step=0.02,
                  residual_tol=1e-8):
    """Solve the joint-limited problem by shooting on phi1(0).

    The quarter runs a singular arc from the start line to the limit
    phi1 = b, then rides the limit with the pinned joint at rest until the
    free joint reaches the end line at the corner (b, b).  Both limits are
    active at the corner, so the end-line costate defect is absorbed by the
    corner jump and the only shooting condition left is lam3(t_f) = 0.
    """
    if bound <= 0:
        raise ConfigError("joint bound must be positive")
    hi = min(interval[1], bound - 1e-3)
    if hi <= interval[0]:
        raise ConfigError("scan interval must start below the joint bound")
    # Long enough for the free joint to cross the whole limit segment.
    dtau = 2.0 * bound + 1.0

    def quarter(phi0, rtol=1e-10, atol=1e-12):
        segs, tau1, tau2 = _integrate_quarter(model, phi0, bound=bound,
                                              dtau=dtau, rtol=rtol, atol=atol)
        end = segs[-1].states[-1]
        if segs[-1].kind != "bound-arc" or abs(end[0] - end[1]) > 1e-6:
            raise IntegrationFailure("bound arc released before the corner",
                                     location=float(segs[-1].t[-1]))
        return segs, tau1, tau2

    def residual(phi0, rtol=1e-10, atol=1e-12):
        segs, _, _ = quarter(phi0, rtol=rtol, atol=atol)
        return float(segs[-1].states[-1, 3])

    def coarse(phi0):
        return residual(phi0, rtol=1e-7, atol=1e-9)

    brackets = _scan_brackets(coarse, interval[0], hi, scan_step)
    if not brackets:
        raise NoBracket("bounded shooting residual lam3(t_f) never changes "
                        "sign", interval=(interval[0], hi))
    lo, up = brackets[0]
    phi0 = brentq(residual, lo, up, xtol=1e-12, rtol=8.9e-16)
    res = residual(phi0)
    if abs(res) > residual_tol:
        raise NoRoot(f"bounded shooting residual {res:.3e} above tolerance",
                     bracket=(lo, up))
    segs, tau1, tau2 = quarter(phi0)
    return _solution(model, segs, bound, phi0, tau1, tau2,
                     {"lam3_tf": res})


# ---------------------------------------------------------------------------
# Diagnostics on converged solutions
# ---------------------------------------------------------------------------


def necessary_conditions(model, solution):
    """Stationarity diagnostics along a converged quarter gait.

    Returns a dict of worst-case magnitudes: ``h_u`` (active components of
    dH/du; on bound arcs only the free joint's component must vanish, the
    pinned one is absorbed by the constraint multiplier), ``psi`` on singular
    arcs, ``h_drift`` (the Hamiltonian is a first integral on each arc),
    ``h_jump`` (continuity across arc boundaries), and ``lam3_tf``.
    """
    h_u_worst = 0.0
    psi_worst = 0.0
    drift_worst = 0.0
    jump_worst = 0.0
    h_prev_end = None
    for seg in solution.segments:
        h_vals = np.array([hamiltonian(model, y, u)
                           for y, u in zip(seg.states, seg.controls)])
        drift_worst = max(drift_worst, float(np.max(np.abs(h_vals - h_vals[0]))))
        if h_prev_end is not None:
            jump_worst = max(jump_worst, abs(float(h_vals[0]) - h_prev_end))
        h_prev_end = float(h_vals[-1])
        for y, u in zip(seg.states, seg.controls):
            hu = h_u(model, y)
            if seg.kind == "singular-arc":
                h_u_worst = max(h_u_worst, float(np.max(np.abs(hu))))
                psi_worst = max(psi_worst,
                                abs(psi(model, y[:2], y[2], y[3])))
            else:
                free = 1 if abs(u[1]) > abs(u[0]) else 0
                h_u_worst = max(h_u_worst, abs(float(hu[free])))
    return {"h_u": h_u_worst, "psi": psi_worst, "h_drift": drift_worst,
            "h_jump": jump_worst,
            "lam3_tf": abs(float(solution.segments[-1].states[-1, 3]))}


def costate_rate_samples(model, rng, n=100, box=2.8):
    """(state, control, kernel costate rates) at random admissible points.

    The test suite checks these against an independent finite-difference
    gradient of the Hamiltonian.
    """
    out = []
    for _ in range(n):
        phi = rng.uniform(-box, box, size=2)
        theta = rng.uniform(-np.pi, np.pi)
        lam = rng.uniform(-1.0, 1.0, size=3)
        ang = rng.uniform(0.0, 2.0 * np.pi)
        u = np.array([np.cos(ang), np.sin(ang)])
        y = np.array([phi[0], phi[1], theta, lam[2], lam[0], lam[1]])
        rates = _costate_rates(model, phi, theta, lam[2], u)
        out.append((y, u, np.array(rates)))
    return out
