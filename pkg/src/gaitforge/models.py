"""Three-link swimmer models and their local connections.

Both models share the same chain geometry: a middle link (index 0) with the
body frame at its center, a rear link (index 1) hinged at the middle link's
back end with relative joint angle phi1, and a front link (index 2) hinged at
the front end with relative joint angle phi2.  Link i's absolute orientation
is theta + beta_i with beta = (0, phi1, phi2).

The local connection A(phi) is a 3x2 matrix mapping joint velocities
(phi1_dot, phi2_dot) to body-frame velocities (vx, vy, omega) of the middle
link.  Rows are (vx, vy, omega); columns are (d/dphi1, d/dphi2).

All evaluators are vectorized: phi may be shape (2,) or (..., 2), giving a
connection of shape (3, 2) or (..., 3, 2).  They are also complex-step safe
(no abs/comparison on phi), which the PMP module exploits for derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SingularInertia, SingularResistance

# Condition-number threshold above which a 3x3 solve is declared singular.
COND_LIMIT = 1e12


@dataclass(frozen=True)
class ShapePoint:
    """Point in joint space (radians)."""

    phi1: float
    phi2: float

    def __post_init__(self):
        if not (math.isfinite(self.phi1) and math.isfinite(self.phi2)):
            raise ConfigError("shape point must be finite")

    def as_array(self):
        return np.array([self.phi1, self.phi2])


@dataclass(frozen=True)
class BodyPose:
    """Planar pose (x, y, theta) of the body frame."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.x, self.y, self.theta))):
            raise ConfigError("body pose must be finite")

    def as_array(self):
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class BodyVelocity:
    """Body-frame velocity (vx, vy, omega) of the middle link."""

    vx: float
    vy: float
    omega: float

    def as_array(self):
        return np.array([self.vx, self.vy, self.omega])


@dataclass(frozen=True)
class PurcellParams:
    """Resistive-force-theory swimmer parameters.

    Link lengths default to 1/3 each (total length 1) and the drag
    coefficients to the classical slender-body 2:1 normal/tangential ratio.
    The connection is invariant to common scaling of (ct, cn), so only the
    ratio matters for gait shape.
    """

    l0: float = 1.0 / 3.0
    l1: float = 1.0 / 3.0
    l2: float = 1.0 / 3.0
    ct: float = 1.0
    cn: float = 2.0

    def __post_init__(self):
        if self.l1 != self.l2:
            raise ConfigError("outer links must have equal length (l1 == l2)")
        if min(self.l0, self.l1, self.l2) <= 0:
            raise ConfigError("link lengths must be positive")
        # cn == ct (isotropic drag) is allowed as a physical limit case.
        if not (self.cn >= self.ct > 0):
            raise ConfigError("drag coefficients must satisfy cn >= ct > 0")

    @property
    def link_lengths(self):
        return np.array([self.l0, self.l1, self.l2])


@dataclass(frozen=True)
class PerfectFluidParams:
    """Potential-flow (added-mass) swimmer parameters.

    Each link is a solid ellipse of density rho with semi-axes a_i along the
    link and b_i = alpha * a_i across it.  Link lengths are derived from the
    middle-to-outer length ratio eta = l0 / l1 with the total normalized to
    ``total_length``: l1 = l2 = L / (2 + eta) and l0 = eta * l1, so smaller
    eta means a shorter middle link.

    ``added_mass_form`` selects the rotational added-mass term:
      * "classical": pi * rho * (a^2 - b^2)^2 / 8 (Lamb's result, default)
      * "literal":   pi * rho * (a^2 - b^2) / 8
    """

    rho: float = 1.0
    eta: float = 1.0 / 3.0
    alpha: float = 0.2
    total_length: float = 1.0
    added_mass_form: str = "classical"

    def __post_init__(self):
        if self.rho <= 0 or self.alpha <= 0 or self.total_length <= 0:
            raise ConfigError("rho, alpha and total_length must be positive")
        if self.eta <= 0:
            raise ConfigError("eta must be positive")
        if self.added_mass_form not in ("classical", "literal"):
            raise ConfigError("added_mass_form must be 'classical' or 'literal'")
        if np.any(self.masses <= 0) or np.any(self.inertias <= 0):
            raise ConfigError("derived link masses/inertias must be positive")

    @property
    def link_lengths(self):
        L = self.total_length
        outer = L / (2.0 + self.eta)
        return np.array([self.eta * outer, outer, outer])

    @property
    def a(self):
        """Semi-axis along each link."""
        return 0.5 * self.link_lengths

    @property
    def b(self):
        """Semi-axis across each link."""
        return self.alpha * self.a

    @property
    def masses(self):
        return self.rho * np.pi * self.a * self.b

    @property
    def inertias(self):
        # Solid ellipse: I = m (a^2 + b^2) / 4.
        return self.masses * (self.a**2 + self.b**2) / 4.0


def _chain_kinematics(link_lengths, phi):
    """Body-frame link angles and center positions for the three-link chain.

    Returns (beta, centers, dcenters) with shapes (..., 3), (..., 3, 2) and
    (..., 3, 2, 2); dcenters[..., i, :, j] is d(center_i)/d(phi_j+1).
    """
    phi = np.asarray(phi)
    l0, l1, l2 = link_lengths
    p1 = phi[..., 0]
    p2 = phi[..., 1]
    zero = np.zeros_like(p1)

    beta = np.stack([zero, p1, p2], axis=-1)

    c1, s1 = np.cos(p1), np.sin(p1)
    c2, s2 = np.cos(p2), np.sin(p2)

    centers = np.empty(phi.shape[:-1] + (3, 2), dtype=phi.dtype)
    centers[..., 0, 0] = 0.0
    centers[..., 0, 1] = 0.0
    # Rear link hangs off the back end, front link off the front end.
    centers[..., 1, 0] = -l0 / 2 - (l1 / 2) * c1
    centers[..., 1, 1] = -(l1 / 2) * s1
    centers[..., 2, 0] = l0 / 2 + (l2 / 2) * c2
    centers[..., 2, 1] = (l2 / 2) * s2

    dcenters = np.zeros(phi.shape[:-1] + (3, 2, 2), dtype=phi.dtype)
    dcenters[..., 1, 0, 0] = (l1 / 2) * s1
    dcenters[..., 1, 1, 0] = -(l1 / 2) * c1
    dcenters[..., 2, 0, 1] = -(l2 / 2) * s2
    dcenters[..., 2, 1, 1] = (l2 / 2) * c2

    return beta, centers, dcenters


def link_jacobians(params, phi):
    """Per-link Jacobians J_i mapping [body velocity; joint rates] to the
    velocity of link i expressed in link i's own frame.

    ``phi`` may be (2,) or (..., 2); the result is (..., 3, 3, 5) stacked over
    links.  Rows of each J_i are (link-frame vx_i, vy_i, omega_i); columns are
    (vx, vy, omega, phi1_dot, phi2_dot).  J_i depends on phi only.
    """
    phi = np.asarray(phi, dtype=np.result_type(np.asarray(phi).dtype, float))
    beta, centers, dcenters = _chain_kinematics(params.link_lengths, phi)

    J = np.zeros(phi.shape[:-1] + (3, 3, 5), dtype=phi.dtype)
    cb, sb = np.cos(beta), np.sin(beta)

    # Link-frame components of the body-frame vector v: R(beta)^T v.
    def into_link(vx, vy):
        return cb * vx + sb * vy, -sb * vx + cb * vy

    # Translation columns (vx, vy).
    ex, ey = into_link(np.ones_like(beta), np.zeros_like(beta))
    J[..., :, 0, 0] = ex
    J[..., :, 1, 0] = ey
    ex, ey = into_link(np.zeros_like(beta), np.ones_like(beta))
    J[..., :, 0, 1] = ex
    J[..., :, 1, 1] = ey
    # Rotation column: omega x r = (-ry, rx).
    ex, ey = into_link(-centers[..., 1], centers[..., 0])
    J[..., :, 0, 2] = ex
    J[..., :, 1, 2] = ey
    # Joint columns: d(center)/d(phi_j).
    for j in range(2):
        ex, ey = into_link(dcenters[..., 0, j], dcenters[..., 1, j])
        J[..., :, 0, 3 + j] = ex
        J[..., :, 1, 3 + j] = ey

    # Angular-velocity rows: omega_0 = theta_dot, omega_i = theta_dot + phi_i_dot.
    J[..., :, 2, 2] = 1.0
    J[..., 1, 2, 3] = 1.0
    J[..., 2, 2, 4] = 1.0
    return J


def _solve_connection(block, error_cls, what):
    """A = -block[:, :3]^{-1} block[:, 3:], with a conditioning check."""
    bq = block[..., :3, :3]
    bs = block[..., :3, 3:]
    if not np.iscomplexobj(block):
        # The body block is symmetric, so eigvalsh gives the 2-norm
        # condition number much cheaper than an SVD.
        ev = np.abs(np.linalg.eigvalsh(bq))
        cond = ev.max(axis=-1) / ev.min(axis=-1)
        if np.any(cond > COND_LIMIT) or not np.all(np.isfinite(cond)):
            raise error_cls(f"{what} is numerically singular (cond > {COND_LIMIT:g})")
    return -np.linalg.solve(bq, bs)


def _congruence(J, W):
    """sum_i J_i^T W_i J_i for J (..., 3, 3, 5) and per-link weights W (3, 3, 3)."""
    WJ = W @ J
    return np.matmul(J.swapaxes(-1, -2), WJ).sum(axis=-3)


def purcell_connection(params, phi):
    """Viscous local connection of the resistive-force-theory swimmer.

    Solves the quasistatic force balance sum_i -J_i^T D_i J_i [q_dot; phi_dot] = 0
    for the body velocity, with D_i the slender-link drag matrix
    diag(ct*l, cn*l, cn*l^3/12) in link i's frame.
    """
    J = link_jacobians(params, phi)
    drag = np.zeros((3, 3, 3))
    for i, length in enumerate(params.link_lengths):
        drag[i] = np.diag(
            [params.ct * length, params.cn * length, params.cn * length**3 / 12.0]
        )
    # C = sum_i -J_i^T D_i J_i, partitioned into body and shape blocks.
    C = -_congruence(J, drag)
    return _solve_connection(C, SingularResistance, "resistance block C_q")


def perfect_fluid_connection(params, phi):
    """Local connection of the potential-flow swimmer, A = -M_bb^{-1} M_bs.

    Per-link generalized inertia combines the solid-ellipse mass/inertia with
    the added-mass diagonal pi*rho*(b^2, a^2, rotational term); the rotational
    term follows ``params.added_mass_form``.
    """
    J = link_jacobians(params, phi)
    a, b = params.a, params.b
    if params.added_mass_form == "classical":
        rot = (a**2 - b**2) ** 2 / 8.0
    else:
        rot = (a**2 - b**2) / 8.0
    M = np.zeros((3, 3, 3))
    for i in range(3):
        M[i] = np.diag(
            [
                params.masses[i] + np.pi * params.rho * b[i] ** 2,
                params.masses[i] + np.pi * params.rho * a[i] ** 2,
                params.inertias[i] + np.pi * params.rho * rot[i],
            ]
        )
    Mfull = _congruence(J, M)
    return _solve_connection(Mfull, SingularInertia, "inertia block M_bb")


@dataclass(frozen=True)
class SwimmerModel:
    """A swimmer model: parameters plus its local-connection evaluator.

    Immutable; ``connection`` is a pure function, safe for concurrent use.
    """

    kind: str
    params: object = field(hash=False)

    def __post_init__(self):
        if self.kind not in ("purcell", "perfect_fluid"):
            raise ConfigError(f"unknown model kind {self.kind!r}")

    def connection(self, phi):
        """Local connection A(phi); phi is (..., 2), result (..., 3, 2)."""
        if self.kind == "purcell":
            return purcell_connection(self.params, phi)
        return perfect_fluid_connection(self.params, phi)

    def chain_kinematics(self, phi):
        """Body-frame link angles, centers and center derivatives.

        Returns (beta, centers, dcenters) of shapes (..., 3), (..., 3, 2) and
        (..., 3, 2, 2); dcenters[..., i, :, j] is d(center_i)/d(phi_{j+1}).
        """
        phi = np.asarray(phi)
        phi = np.asarray(phi, dtype=np.result_type(phi.dtype, float))
        return _chain_kinematics(self.params.link_lengths, phi)

    def link_angles(self, phi):
        """Body-frame link angles (0, phi1, phi2), shape (..., 3)."""
        return self.chain_kinematics(phi)[0]

    def link_centers(self, phi):
        """Body-frame link centers, shape (..., 3, 2)."""
        return self.chain_kinematics(phi)[1]


def purcell_model(**kwargs):
    return SwimmerModel("purcell", PurcellParams(**kwargs))


def perfect_fluid_model(**kwargs):
    return SwimmerModel("perfect_fluid", PerfectFluidParams(**kwargs))
