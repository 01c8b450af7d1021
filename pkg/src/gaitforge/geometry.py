"""Height functions on the shape plane and their zero-level topology.

Samples a chosen component of the total curvature DA over a rectangular
shape-space window, extracts the zero-level curves that separate the
sign-definite regions, classifies them (closed loops, window-clipped arcs,
junction-bearing curves), and evaluates closed junction-free loops as gaits.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .connection import (BodyFrameSpec, cbvi, curvature, is_simple_polygon,
                         signed_area)
from .errors import ConfigError, EmptyContour, JunctionBearing
from .simulate import Gait, integrate_gait

_COMPONENT_INDEX = {"x": 0, "y": 1, "theta": 2}

DEFAULT_WINDOW = (-3.2, 3.2, -3.2, 3.2)
LARGE_WINDOW = (-6.0, 6.0, -6.0, 6.0)

# Grid chunk (points per curvature evaluation) bounding peak memory.
_SAMPLE_CHUNK = 8192


@dataclass(frozen=True)
class HeightField:
    """One curvature component sampled on a regular shape-space grid.

    ``values[i, j]`` is the field at (phi1[i], phi2[j]).
    """

    phi1: np.ndarray
    phi2: np.ndarray
    values: np.ndarray
    component: str
    window: tuple
    frame: BodyFrameSpec
    _spline_cache: list = dc_field(default_factory=list, repr=False,
                                   compare=False)

    @property
    def n(self):
        return len(self.phi1)

    @property
    def cell_size(self):
        return (float(self.phi1[1] - self.phi1[0]),
                float(self.phi2[1] - self.phi2[0]))

    @property
    def value_range(self):
        return float(self.values.max() - self.values.min())

    def spline(self):
        """Cubic interpolant of the sampled field (built once, cached)."""
        if not self._spline_cache:
            self._spline_cache.append(
                RectBivariateSpline(self.phi1, self.phi2, self.values))
        return self._spline_cache[0]

    def gradient(self, pts):
        """Interpolated field gradient at (..., 2) points."""
        pts = np.asarray(pts, dtype=float)
        sp = self.spline()
        gx = sp(pts[..., 0], pts[..., 1], dx=1, grid=False)
        gy = sp(pts[..., 0], pts[..., 1], dy=1, grid=False)
        return np.stack([gx, gy], axis=-1)

    def value(self, pts):
        pts = np.asarray(pts, dtype=float)
        return self.spline()(pts[..., 0], pts[..., 1], grid=False)


def _default_grid(window):
    span = max(window[1] - window[0], window[3] - window[2])
    # Finer grid on the wide window keeps junction cells at ~0.02 rad.
    return 401 if span <= 6.5 else 601


def sample_height_field(model, frame=None, window=None, n=None,
                        component="x"):
    """Sample curvature component ``component`` of the framed connection on an
    n-by-n grid over ``window`` = (phi1_min, phi1_max, phi2_min, phi2_max)."""
    if frame is None:
        frame = BodyFrameSpec.middle_link()
    if window is None:
        window = DEFAULT_WINDOW
    window = tuple(float(w) for w in window)
    if not (window[0] < window[1] and window[2] < window[3]):
        raise ConfigError("window must satisfy min < max on both axes")
    if component not in _COMPONENT_INDEX:
        raise ConfigError(f"unknown field component {component!r}")
    if n is None:
        n = _default_grid(window)
    n = int(n)
    if n < 33:
        raise ConfigError("grid resolution must be at least 33")

    phi1 = np.linspace(window[0], window[1], n)
    phi2 = np.linspace(window[2], window[3], n)
    P1, P2 = np.meshgrid(phi1, phi2, indexing="ij")
    pts = np.stack([P1.ravel(), P2.ravel()], axis=-1)
    comp = _COMPONENT_INDEX[component]
    vals = np.empty(len(pts))
    for lo in range(0, len(pts), _SAMPLE_CHUNK):
        chunk = pts[lo: lo + _SAMPLE_CHUNK]
        vals[lo: lo + _SAMPLE_CHUNK] = curvature(model, frame, chunk).DA[:, comp]
    if not np.all(np.isfinite(vals)):
        raise ConfigError("height field contains non-finite samples")
    return HeightField(phi1=phi1, phi2=phi2, values=vals.reshape(n, n),
                       component=component, window=window, frame=frame)


# ---------------------------------------------------------------------------
# Zero-contour extraction (marching squares)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContourSet:
    """Zero-level polylines of a height field with topology labels.

    ``kinds[k]`` is one of "closed-loop", "open-ended-at-window" or
    "junction-bearing".  Closed loops are stored without the repeated closing
    vertex.
    """

    field: HeightField
    contours: tuple
    kinds: tuple
    junctions: np.ndarray

    def closed_loops(self):
        """Indices of junction-free closed loops."""
        return [k for k, kind in enumerate(self.kinds) if kind == "closed-loop"]

    def innermost_loop(self, point=(0.0, 0.0)):
        """Index of the smallest-area closed loop enclosing ``point``."""
        best = None
        best_area = np.inf
        for k in self.closed_loops():
            poly = self.contours[k]
            if _winding_contains(poly, point):
                area = abs(signed_area(poly))
                if area < best_area:
                    best, best_area = k, area
        if best is None:
            raise EmptyContour(f"no closed loop encloses {tuple(point)}")
        return best


def _winding_contains(poly, point):
    """Point-in-polygon by the crossing-number test."""
    p = np.asarray(poly, dtype=float)
    x, y = float(point[0]), float(point[1])
    x1, y1 = p[:, 0], p[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    straddles = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
    return bool(np.sum(straddles & (xc > x)) % 2)


def _cell_segments(sb, sr, st, sl, center_positive):
    """Edge pairs cut by the zero level in one cell.

    sb, sr, st, sl are the "corner is positive" flags in the order bottom-left,
    bottom-right, top-right, top-left; edges are labeled b, r, t, l.
    """
    code = (sb << 0) | (sr << 1) | (st << 2) | (sl << 3)
    table = {
        0: [], 15: [],
        1: [("l", "b")], 14: [("l", "b")],
        2: [("b", "r")], 13: [("b", "r")],
        4: [("r", "t")], 11: [("r", "t")],
        8: [("t", "l")], 7: [("t", "l")],
        3: [("l", "r")], 12: [("l", "r")],
        6: [("b", "t")], 9: [("b", "t")],
    }
    if code in (5, 10):
        # Saddle-ambiguous: the bilinear cell-center sign picks the pairing.
        pos_corners_bl_tr = code == 5
        if center_positive == pos_corners_bl_tr:
            return [("l", "b"), ("r", "t")]
        return [("b", "r"), ("t", "l")]
    return table[code]


def _edge_key(i, j, edge):
    # Grid edges: ("h", i, j) spans phi1[i]..phi1[i+1] at phi2[j];
    # ("v", i, j) spans phi2[j]..phi2[j+1] at phi1[i].
    if edge == "b":
        return ("h", i, j)
    if edge == "t":
        return ("h", i, j + 1)
    if edge == "l":
        return ("v", i, j)
    return ("v", i + 1, j)


def _crossing_point(field, key, V):
    kind, i, j = key
    p1, p2 = field.phi1, field.phi2
    if kind == "h":
        a, b = V[i, j], V[i + 1, j]
        t = a / (a - b)
        return (p1[i] + t * (p1[i + 1] - p1[i]), p2[j])
    a, b = V[i, j], V[i, j + 1]
    t = a / (a - b)
    return (p1[i], p2[j] + t * (p2[j + 1] - p2[j]))


def _chain(segments):
    """Chain edge-key segments into paths and cycles.

    Returns a list of (keys, closed) with keys the ordered edge keys.
    """
    adj = {}
    for a, b in segments:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    used = set()

    def seg_id(a, b):
        return (min(a, b), max(a, b))

    def walk(start):
        keys = [start]
        cur = start
        while True:
            nxt = None
            for cand in adj.get(cur, ()):
                if seg_id(cur, cand) not in used:
                    nxt = cand
                    break
            if nxt is None:
                return keys, False
            used.add(seg_id(cur, nxt))
            if nxt == start:
                return keys, True
            keys.append(nxt)
            cur = nxt

    chains = []
    # Open chains first: start from odd-degree edge keys.
    for key in adj:
        if len(adj[key]) % 2 == 1:
            if all(seg_id(key, c) in used for c in adj[key]):
                continue
            chains.append(walk(key))
    # Remaining segments belong to cycles.
    for a, b in segments:
        if seg_id(a, b) not in used:
            chains.append(walk(a))
    return chains


def extract_zero_contours(field, refine=True):
    """Marching-squares zero-level curves of the field, chained, refined and
    classified.  Raises EmptyContour when the field has no sign change."""
    V = field.values
    vrange = field.value_range
    if vrange < 1e-300:
        raise EmptyContour("field is constant; no zero level curve")
    # Nudge exact zeros so every corner has a definite sign.
    V = np.where(V == 0.0, 1e-12 * vrange, V)
    pos = V > 0.0
    if np.all(pos) or not np.any(pos):
        raise EmptyContour("field is sign-definite on the window")

    n1, n2 = V.shape
    sb = pos[:-1, :-1]
    sr = pos[1:, :-1]
    st = pos[1:, 1:]
    sl = pos[:-1, 1:]
    active = np.argwhere((sb != sr) | (sr != st) | (st != sl))

    segments = []
    for i, j in active:
        center_pos = (V[i, j] + V[i + 1, j] + V[i + 1, j + 1] + V[i, j + 1]) > 0
        for ea, eb in _cell_segments(int(sb[i, j]), int(sr[i, j]),
                                     int(st[i, j]), int(sl[i, j]), center_pos):
            segments.append((_edge_key(i, j, ea), _edge_key(i, j, eb)))

    point_cache = {}

    def pt(key):
        if key not in point_cache:
            point_cache[key] = _crossing_point(field, key, V)
        return point_cache[key]

    polylines = []
    closed_flags = []
    for keys, closed in _chain(segments):
        poly = np.array([pt(k) for k in keys])
        if len(poly) < (3 if closed else 2):
            continue
        polylines.append(poly)
        closed_flags.append(closed)

    if refine:
        polylines = [_newton_refine(field, p) for p in polylines]

    junctions = detect_junctions(field, polylines)
    kinds = []
    h1, h2 = field.cell_size
    near = 1.5 * float(np.hypot(h1, h2))
    for poly, closed in zip(polylines, closed_flags):
        if len(junctions) and np.min(
                np.linalg.norm(poly[:, None, :] - junctions[None, :, :],
                               axis=-1)) < near:
            kinds.append("junction-bearing")
        elif closed:
            kinds.append("closed-loop" if is_simple_polygon(poly)
                         else "junction-bearing")
        else:
            kinds.append("open-ended-at-window")

    order = np.argsort([-len(p) for p in polylines])
    return ContourSet(field=field,
                      contours=tuple(polylines[k] for k in order),
                      kinds=tuple(kinds[k] for k in order),
                      junctions=junctions)


def _newton_refine(field, poly):
    """One Newton step per vertex toward the exact zero level."""
    g = field.gradient(poly)
    h = field.value(poly)
    norm2 = np.sum(g**2, axis=-1)
    ok = norm2 > 1e-30
    step = np.where(ok[:, None], (h / np.where(ok, norm2, 1.0))[:, None] * g, 0.0)
    out = poly - step
    out[:, 0] = np.clip(out[:, 0], field.window[0], field.window[1])
    out[:, 1] = np.clip(out[:, 1], field.window[2], field.window[3])
    return out


# ---------------------------------------------------------------------------
# Junction detection
# ---------------------------------------------------------------------------


def detect_junctions(field, contours=(), level_rtol=1e-3):
    """Locate zero-level junctions (saddles of the field on its zero set).

    Candidates come from saddle-ambiguous marching-squares cells whose cell
    center is near the zero level, and from distinct contour branches passing
    within a cell and a half of each other.  Each candidate is polished by
    Newton iteration on the stationarity system grad H = 0 and kept when the
    refined point sits on the zero level with a vanishing gradient; the
    gradient test runs after polishing because grid-limited approach points
    straddle the saddle by up to a cell.
    """
    V = field.values
    vrange = field.value_range
    if vrange < 1e-300:
        return np.zeros((0, 2))
    level_tol = level_rtol * vrange
    h1, h2 = field.cell_size
    win = field.window
    window_size = max(win[1] - win[0], win[3] - win[2])
    grad_tol = 1e-3 * vrange / window_size

    pos = V > 0
    saddle = (pos[:-1, :-1] == pos[1:, 1:]) & (pos[1:, :-1] == pos[:-1, 1:]) \
        & (pos[:-1, :-1] != pos[1:, :-1])
    center = 0.25 * (V[:-1, :-1] + V[1:, :-1] + V[1:, 1:] + V[:-1, 1:])
    cand_idx = np.argwhere(saddle & (np.abs(center) < level_tol))
    candidates = [
        (field.phi1[i] + 0.5 * h1, field.phi2[j] + 0.5 * h2)
        for i, j in cand_idx
    ]

    cell = float(np.hypot(h1, h2))
    candidates.extend(_close_approaches(contours, 1.5 * cell))

    refined = []
    for c in candidates:
        p = _polish_saddle(field, np.array(c, dtype=float))
        if p is None or np.linalg.norm(p - c) > 3.0 * cell:
            continue
        if abs(field.value(p)) > level_tol:
            continue
        if np.linalg.norm(field.gradient(p)) > grad_tol:
            continue
        if not (win[0] - h1 <= p[0] <= win[1] + h1
                and win[2] - h2 <= p[1] <= win[3] + h2):
            continue
        refined.append(p)

    # Merge duplicates within one cell diagonal.
    out = []
    for p in refined:
        if all(np.linalg.norm(p - q) > cell for q in out):
            out.append(p)
    return np.array(out) if out else np.zeros((0, 2))


def _close_approaches(contours, reach):
    """Midpoints where two different branches pass within ``reach``."""
    from scipy.spatial import cKDTree

    hits = []
    trees = [cKDTree(np.asarray(c)) for c in contours]
    for a in range(len(contours)):
        pa = np.asarray(contours[a])
        for b in range(a + 1, len(contours)):
            d, idx = trees[b].query(pa, k=1)
            ia = int(np.argmin(d))
            if d[ia] < reach:
                hits.append(tuple(0.5 * (pa[ia] + contours[b][idx[ia]])))
        # Self-approach: far-apart indices of one branch meeting in the plane.
        n = len(pa)
        for i, j in trees[a].query_pairs(reach):
            gap = min(abs(i - j), n - abs(i - j))
            if gap > 10:
                hits.append(tuple(0.5 * (pa[i] + pa[j])))
    return hits


def _polish_saddle(field, p0, iters=30, tol=1e-12):
    """Newton iteration on grad H = 0 from p0; None when it diverges."""
    sp = field.spline()
    p = p0.copy()
    h1, h2 = field.cell_size
    trust = 5.0 * max(h1, h2)
    for _ in range(iters):
        g = field.gradient(p)
        H = np.array([
            [sp(p[0], p[1], dx=2, grid=False), sp(p[0], p[1], dx=1, dy=1, grid=False)],
            [sp(p[0], p[1], dx=1, dy=1, grid=False), sp(p[0], p[1], dy=2, grid=False)],
        ], dtype=float)
        if abs(np.linalg.det(H)) < 1e-30:
            return None
        step = np.linalg.solve(H, g)
        p = p - step
        if np.linalg.norm(p - p0) > trust:
            return None
        if np.linalg.norm(step) < tol:
            break
    return p


def _resample_polyline(poly, spacing):
    """Vertices re-spaced along arc length so gaps never exceed ``spacing``."""
    poly = np.asarray(poly, dtype=float)
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    out = [poly[0]]
    for a, b, d in zip(poly[:-1], poly[1:], seg):
        if d <= spacing:
            out.append(b)
            continue
        k = int(np.ceil(d / spacing))
        for i in range(1, k + 1):
            out.append(a + (b - a) * (i / k))
    return np.asarray(out)


def hausdorff_distance(poly_a, poly_b, spacing=0.01):
    """Symmetric Hausdorff distance between two polylines (shape space).

    Both curves are resampled to the given vertex spacing first so the
    distance is between the curves, not their vertex sets.
    """
    from scipy.spatial import cKDTree

    a = _resample_polyline(poly_a, spacing)
    b = _resample_polyline(poly_b, spacing)
    tree_a = cKDTree(a)
    tree_b = cKDTree(b)
    d_ab = tree_b.query(a)[0].max()
    d_ba = tree_a.query(b)[0].max()
    return float(max(d_ab, d_ba))


# ---------------------------------------------------------------------------
# Contours as gaits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContourGaitReport:
    """Cross-method evaluation of a closed zero-contour loop as a gait."""

    gait: Gait
    displacement: np.ndarray  # exact line-integral pose change
    estimate: np.ndarray  # curvature surface-integral pose change
    relative_gap: float

    @property
    def dx(self):
        return float(self.displacement[0])


def contour_as_gait(model, contour_set, index, orientation="ccw", frame=None,
                    tol=1e-5):
    """Evaluate closed loop ``index`` of a ContourSet as a gait.

    Runs both the exact line integral and the curvature surface integral and
    reports the relative x-displacement gap.  Junction-bearing loops are
    rejected: the tangent field is not unique at a junction, so the loop
    cannot be traversed as a smooth optimal gait.
    """
    kind = contour_set.kinds[index]
    if kind == "junction-bearing":
        raise JunctionBearing(f"contour {index} passes through a junction")
    if kind != "closed-loop":
        raise ConfigError(f"contour {index} is not a closed loop ({kind})")
    if frame is None:
        frame = contour_set.field.frame
    poly = np.asarray(contour_set.contours[index], dtype=float)
    # Canonical ccw vertex order, then apply the requested orientation.
    if signed_area(poly) < 0:
        poly = poly[::-1]
    # Marching-squares output is far denser than the loop's curvature needs;
    # every kept vertex still lies on the zero level, so decimation only
    # shortcuts sub-cell wiggles.  It cuts both integration costs ~20x.
    stride = max(1, len(poly) // 192)
    poly = poly[::stride]
    gait = Gait.polyline(poly, orientation=orientation)
    traj = integrate_gait(model, gait, frame=frame,
                          corner_restarts=len(poly) <= 64)
    region = poly if orientation == "ccw" else poly[::-1]
    est = cbvi(model, frame, region, tol=tol)
    denom = max(abs(traj.dx), 1e-300)
    gap = abs(est[0] - traj.dx) / denom
    return ContourGaitReport(gait=gait, displacement=traj.displacement,
                             estimate=est, relative_gap=gap)
