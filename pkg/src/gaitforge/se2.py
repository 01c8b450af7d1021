"""Planar rigid-body (SE(2)) helpers.

Poses are (x, y, theta) triples; twists are (vx, vy, omega).  All functions
accept array-likes and return numpy arrays.
"""

from __future__ import annotations

import numpy as np


def rotation(theta):
    """2x2 rotation matrix.  Supports batched theta (returns (..., 2, 2))."""
    theta = np.asarray(theta)
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape + (2, 2), dtype=c.dtype)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def compose(g1, g2):
    """Group product g1 * g2 of two poses."""
    x1, y1, t1 = g1
    x2, y2, t2 = g2
    c, s = np.cos(t1), np.sin(t1)
    return np.array([x1 + c * x2 - s * y2, y1 + s * x2 + c * y2, t1 + t2])


def inverse(g):
    """Group inverse of a pose."""
    x, y, t = g
    c, s = np.cos(t), np.sin(t)
    return np.array([-(c * x + s * y), -(-s * x + c * y), -t])


def exp(xi, omega_tol=1e-12):
    """Exponential map from a twist (vx, vy, omega) to a pose.

    For |omega| below omega_tol the motion is treated as a pure translation
    (the translational components pass through unchanged).
    """
    vx, vy, om = xi
    if abs(om) < omega_tol:
        return np.array([vx, vy, om])
    s, c = np.sin(om), np.cos(om)
    # V(om) integrates a constant twist over unit time (screw motion).
    x = (s * vx - (1.0 - c) * vy) / om
    y = ((1.0 - c) * vx + s * vy) / om
    return np.array([x, y, om])


def twist_matrix(xi):
    """Homogeneous 3x3 matrix representation of a planar twist."""
    vx, vy, om = xi
    return np.array([[0.0, -om, vx], [om, 0.0, vy], [0.0, 0.0, 0.0]])
