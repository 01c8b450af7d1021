"""Independent brute-force verification oracles.

These deliberately share no arithmetic with the package kernels beyond
standard math functions: link placements are written out in the world frame
from scratch, Jacobians come from finite differences of positions, and the
force/energy balances are assembled directly.  Clarity over speed.
"""

from __future__ import annotations

import numpy as np

FD_STEP = 1e-6


def world_link_states(params, q, phi):
    """World-frame (x, y, angle) of each link center, written longhand.

    q = (x, y, theta) is the middle link's world pose.  Rear link (index 1)
    hangs off the back end with relative angle phi1, front link (index 2) off
    the front end with relative angle phi2.
    """
    x, y, theta = q
    phi1, phi2 = phi
    l0, l1, l2 = params.link_lengths
    out = np.zeros((3, 3))
    out[0] = [x, y, theta]

    back_joint = np.array([x - (l0 / 2) * np.cos(theta), y - (l0 / 2) * np.sin(theta)])
    ang1 = theta + phi1
    out[1, 0] = back_joint[0] - (l1 / 2) * np.cos(ang1)
    out[1, 1] = back_joint[1] - (l1 / 2) * np.sin(ang1)
    out[1, 2] = ang1

    front_joint = np.array([x + (l0 / 2) * np.cos(theta), y + (l0 / 2) * np.sin(theta)])
    ang2 = theta + phi2
    out[2, 0] = front_joint[0] + (l2 / 2) * np.cos(ang2)
    out[2, 1] = front_joint[1] + (l2 / 2) * np.sin(ang2)
    out[2, 2] = ang2
    return out


def world_jacobians(params, q, phi, h=FD_STEP):
    """Jacobian of each link's world (x, y, angle) w.r.t. (x, y, theta, phi1,
    phi2), by central finite differences.  Shape (3 links, 3, 5)."""
    base = np.concatenate([q, phi])
    K = np.zeros((3, 3, 5))
    for j in range(5):
        up = base.copy()
        dn = base.copy()
        up[j] += h
        dn[j] -= h
        su = world_link_states(params, up[:3], up[3:])
        sd = world_link_states(params, dn[:3], dn[3:])
        K[:, :, j] = (su - sd) / (2 * h)
    return K


def oracle_link_jacobians(params, phi, theta=0.0):
    """Link velocities in each link's own frame per unit (body velocity;
    joint rate), from world finite differences.

    Matches models.link_jacobians, which it must for any theta since J_i
    depends on phi only.
    """
    q = np.array([0.0, 0.0, theta])
    K = world_jacobians(params, q, phi)
    states = world_link_states(params, q, phi)
    # World rates per unit body input: world translation input is R(theta) e.
    c0, s0 = np.cos(theta), np.sin(theta)
    body_to_world = np.array([
        [c0, -s0, 0, 0, 0],
        [s0, c0, 0, 0, 0],
        [0, 0, 1, 0, 0],
        [0, 0, 0, 1, 0],
        [0, 0, 0, 0, 1],
    ])
    J = np.zeros((3, 3, 5))
    for i in range(3):
        ang = states[i, 2]
        c, s = np.cos(ang), np.sin(ang)
        world_to_link = np.array([[c, s, 0], [-s, c, 0], [0, 0, 1]])
        J[i] = world_to_link @ K[i] @ body_to_world
    return J


def oracle_purcell_connection(params, phi, theta=0.37):
    """Viscous connection from a world-frame force balance.

    Drag per link is assembled in the world frame from the link's tangent and
    normal directions; quasistatic equilibrium of the generalized forces
    conjugate to (x, y, theta) yields the world body velocity per unit joint
    rate, which is rotated back into the middle-link frame.  Evaluated at a
    nonzero theta so frame conversion is genuinely exercised.
    """
    q = np.array([0.0, 0.0, theta])
    K = world_jacobians(params, q, phi)
    states = world_link_states(params, q, phi)
    W = np.zeros((5, 5))
    for i in range(3):
        length = params.link_lengths[i]
        ang = states[i, 2]
        t = np.array([np.cos(ang), np.sin(ang)])
        n = np.array([-np.sin(ang), np.cos(ang)])
        D = np.zeros((3, 3))
        D[:2, :2] = params.ct * length * np.outer(t, t) + params.cn * length * np.outer(n, n)
        D[2, 2] = params.cn * length**3 / 12.0
        W += K[i].T @ D @ K[i]
    qdot_world = -np.linalg.solve(W[:3, :3], W[:3, 3:])
    c, s = np.cos(theta), np.sin(theta)
    to_body = np.array([[c, s, 0], [-s, c, 0], [0, 0, 1]])
    return to_body @ qdot_world


def oracle_perfect_fluid_connection(params, phi, theta=0.37):
    """Potential-flow connection from the kinetic energy written longhand.

    The total kinetic energy (solid-ellipse inertia plus added mass along the
    link tangent/normal) is evaluated as a function of generalized rates; the
    inertia matrix is recovered by polarization and the momentum-conservation
    solve done directly.
    """
    q = np.array([0.0, 0.0, theta])
    K = world_jacobians(params, q, phi)
    states = world_link_states(params, q, phi)
    a, b = params.a, params.b
    m, inertia = params.masses, params.inertias
    if params.added_mass_form == "classical":
        rot = (a**2 - b**2) ** 2 / 8.0
    else:
        rot = (a**2 - b**2) / 8.0

    def kinetic(rates):
        total = 0.0
        for i in range(3):
            vx, vy, om = K[i] @ rates
            ang = states[i, 2]
            vt = np.cos(ang) * vx + np.sin(ang) * vy
            vn = -np.sin(ang) * vx + np.cos(ang) * vy
            total += 0.5 * (m[i] * (vx**2 + vy**2) + inertia[i] * om**2)
            total += 0.5 * np.pi * params.rho * (b[i] ** 2 * vt**2 + a[i] ** 2 * vn**2
                                                 + rot[i] * om**2)
        return total

    M = np.zeros((5, 5))
    eye = np.eye(5)
    for i in range(5):
        for j in range(5):
            M[i, j] = (kinetic(eye[i] + eye[j]) - kinetic(eye[i]) - kinetic(eye[j]))
    qdot_world = -np.linalg.solve(M[:3, :3], M[:3, 3:])
    c, s = np.cos(theta), np.sin(theta)
    to_body = np.array([[c, s, 0], [-s, c, 0], [0, 0, 1]])
    return to_body @ qdot_world


def oracle_connection(model, phi, theta=0.37):
    """Dispatch to the model-appropriate independent connection oracle."""
    if model.kind == "purcell":
        return oracle_purcell_connection(model.params, phi, theta)
    return oracle_perfect_fluid_connection(model.params, phi, theta)


def oracle_commutator(A):
    """Lie bracket of the connection columns as a 3x3 matrix commutator of
    planar twists embedded homogeneously."""
    A = np.asarray(A)

    def embed(v):
        return np.array([[0.0, -v[2], v[0]], [v[2], 0.0, v[1]], [0.0, 0.0, 0.0]])

    X1 = embed(A[:, 0])
    X2 = embed(A[:, 1])
    C = X1 @ X2 - X2 @ X1
    return np.array([C[0, 2], C[1, 2], C[1, 0]])


def oracle_costate_gradient(model, state, lam, u, h=FD_STEP):
    """-dH/dz by central differences of the Hamiltonian over z = (phi1, phi2,
    theta).  H is assembled directly from the model connection."""

    def hamiltonian(z):
        phi = z[:2]
        theta = z[2]
        A = model.connection(phi)
        c, s = np.cos(theta), np.sin(theta)
        g = c * A[0, 0] - s * A[1, 0]
        hh = c * A[0, 1] - s * A[1, 1]
        p, qq = A[2, 0], A[2, 1]
        return ((g + lam[0] + lam[2] * p) * u[0]
                + (hh + lam[1] + lam[2] * qq) * u[1])

    z0 = np.asarray(state, dtype=float)
    out = np.zeros(3)
    for j in range(3):
        up = z0.copy()
        dn = z0.copy()
        up[j] += h
        dn[j] -= h
        out[j] = -(hamiltonian(up) - hamiltonian(dn)) / (2 * h)
    return out
