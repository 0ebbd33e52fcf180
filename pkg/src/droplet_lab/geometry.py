"""Planar convex geometry for droplet boundaries.

Roughness of a closed boundary walk is measured against its own convex
hull by two functionals:

* average local roughness — the area trapped between the hull and the
  walk, normalized by hull perimeter;
* maximal local roughness — the largest distance from a walk vertex to the
  hull boundary.

All functions operate on ``(n, 2)`` coordinate arrays; objects exposing a
``vertices`` attribute (circuits) are accepted wherever a point array is.
Integer inputs are hulled with exact integer arithmetic; large float
clouds fall back to qhull.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize
from scipy.spatial import ConvexHull
from scipy.spatial.distance import cdist

#: Point count above which convex hulls are delegated to qhull.
_QHULL_THRESHOLD = 4096

#: Chunk size for point-to-edge distance matrices (keeps memory bounded).
_BLOCK = 16384


def _as_points(circuit_or_points) -> np.ndarray:
    """Coerce a circuit object or array-like to an ``(n, 2)`` float view."""
    arr = getattr(circuit_or_points, "vertices", circuit_or_points)
    arr = np.asarray(arr)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) point array, got shape {arr.shape}")
    return arr


def _monotone_chain(pts: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain on lexicographically sorted distinct points."""

    def cross(o, a, b) -> int:
        return int((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def convex_hull(points) -> np.ndarray:
    """Convex hull vertices in counterclockwise order.

    The first vertex is the lexicographically smallest point (by x, then
    y); no three output vertices are collinear.  Integer inputs below
    ``_QHULL_THRESHOLD`` points use exact arithmetic.

    Raises:
        ValueError: Fewer than 3 distinct points, or all points collinear.
    """
    arr = _as_points(points)
    pts = np.unique(arr, axis=0)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 distinct points, got {len(pts)}")

    if np.issubdtype(pts.dtype, np.integer) and len(pts) <= _QHULL_THRESHOLD:
        hull = _monotone_chain(pts.astype(np.int64))
        if len(hull) < 3:
            raise ValueError("all points are collinear")
        return hull

    fpts = pts.astype(np.float64)
    try:
        qh = ConvexHull(fpts)
    except Exception as exc:  # qhull rejects degenerate clouds
        raise ValueError(f"convex hull failed (degenerate input?): {exc}") from exc
    hull = fpts[qh.vertices]  # counterclockwise in 2D
    start = np.lexsort((hull[:, 1], hull[:, 0]))[0]
    return np.roll(hull, -start, axis=0)


def hull_area(hull: np.ndarray) -> float:
    """Area of a convex polygon given as an open CCW vertex loop."""
    v = np.asarray(hull, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def hull_perimeter(hull: np.ndarray) -> float:
    """Perimeter of a polygon given as an open vertex loop."""
    v = np.asarray(hull, dtype=np.float64)
    return float(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1).sum())


def enclosed_area(closed_vertices: np.ndarray) -> float:
    """Winding-weighted area of a closed vertex walk (first point repeated last)."""
    v = np.asarray(closed_vertices, dtype=np.float64)
    if len(v) < 4 or not np.array_equal(v[0], v[-1]):
        raise ValueError("expected a closed walk (first vertex repeated at the end)")
    x, y = v[:, 0], v[:, 1]
    return float(0.5 * abs(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1])))


def _closed_walk(points) -> np.ndarray:
    arr = _as_points(points)
    if len(arr) < 4 or not np.array_equal(arr[0], arr[-1]):
        raise ValueError("expected a closed boundary walk")
    return arr


def alr(circuit) -> float:
    """Average local roughness: hull-excess area per unit hull perimeter.

    Zero exactly when the walk is convex.
    """
    verts = _closed_walk(circuit)
    hull = convex_hull(verts[:-1])
    excess = hull_area(hull) - enclosed_area(verts)
    if excess < 0:  # float round-off on convex input
        excess = 0.0
    return excess / hull_perimeter(hull)


def boundary_distances(points, hull: np.ndarray) -> np.ndarray:
    """Distance from each point inside a convex polygon to its boundary.

    For points in the (closed) polygon this equals the minimum over edges
    of the distance to the edge's supporting line.  Points outside are
    clamped to zero distance.
    """
    pts = _as_points(points).astype(np.float64)
    hv = np.asarray(hull, dtype=np.float64)
    edges = np.roll(hv, -1, axis=0) - hv
    lengths = np.linalg.norm(edges, axis=1)
    if np.any(lengths == 0):
        raise ValueError("hull has a zero-length edge")
    # Inward normal of a CCW edge is the edge direction rotated +90 deg.
    normals = np.stack((-edges[:, 1], edges[:, 0]), axis=1) / lengths[:, None]
    offsets = np.einsum("ij,ij->i", normals, hv)
    out = np.empty(len(pts), dtype=np.float64)
    for k in range(0, len(pts), _BLOCK):
        block = pts[k : k + _BLOCK]
        signed = block @ normals.T - offsets  # (B, n_edges)
        out[k : k + _BLOCK] = signed.min(axis=1)
    return np.maximum(out, 0.0)


def mlr(circuit) -> float:
    """Maximal local roughness: deepest walk vertex below its own hull boundary.

    Zero exactly when every vertex lies on the hull boundary (convex walk).
    """
    verts = _closed_walk(circuit)
    pts = np.unique(np.asarray(verts[:-1], dtype=np.float64), axis=0)
    hull = convex_hull(pts)
    return float(boundary_distances(pts, hull).max())


def euclidean_diameter(points) -> float:
    """Largest pairwise Euclidean distance in a point set."""
    pts = np.unique(_as_points(points).astype(np.float64), axis=0)
    if len(pts) < 2:
        return 0.0
    if len(pts) > 64:
        try:
            pts = convex_hull(pts)
        except ValueError:
            pass  # collinear clouds: brute force below is exact
    return float(cdist(pts, pts).max())


def diameters(circuit_or_points, norm=None) -> tuple[float, float | None]:
    """Euclidean diameter and, when a norm is given, the norm-diameter.

    Args:
        circuit_or_points: Boundary walk or point array.
        norm: Optional callable mapping ``(..., 2)`` displacement arrays to
            nonnegative lengths; evaluated over hull vertex pairs.

    Returns:
        ``(euclidean_diameter, norm_diameter)``; the second entry is None
        when no norm is supplied.
    """
    pts = np.unique(_as_points(circuit_or_points).astype(np.float64), axis=0)
    if len(pts) < 2:
        return 0.0, (0.0 if norm is not None else None)
    if len(pts) > 64:
        try:
            pts = convex_hull(pts)
        except ValueError:
            pass
    euclid = float(cdist(pts, pts).max())
    if norm is None:
        return euclid, None
    diffs = pts[:, None, :] - pts[None, :, :]
    tau_diam = float(np.asarray(norm(diffs)).max())
    return euclid, tau_diam


def point_segment_distances(
    points: np.ndarray, seg_a: np.ndarray, seg_b: np.ndarray
) -> np.ndarray:
    """Distance from each point to the nearest of the given segments.

    Args:
        points: ``(n, 2)`` array.
        seg_a: ``(m, 2)`` segment start points.
        seg_b: ``(m, 2)`` segment end points.

    Returns:
        ``(n,)`` array of minimal distances.
    """
    pts = np.asarray(points, dtype=np.float64)
    a = np.asarray(seg_a, dtype=np.float64)
    b = np.asarray(seg_b, dtype=np.float64)
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    denom = np.where(denom == 0, 1.0, denom)
    out = np.empty(len(pts), dtype=np.float64)
    for k in range(0, len(pts), _BLOCK):
        block = pts[k : k + _BLOCK]
        rel = block[:, None, :] - a[None, :, :]  # (B, m, 2)
        t = np.clip(np.einsum("bmj,mj->bm", rel, ab) / denom, 0.0, 1.0)
        foot = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        d = np.linalg.norm(block[:, None, :] - foot, axis=2)
        out[k : k + _BLOCK] = d.min(axis=1)
    return out


def polygon_centroid(verts: np.ndarray) -> np.ndarray:
    """Area centroid of a simple polygon (open vertex loop)."""
    v = np.asarray(verts, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    if a == 0:
        raise ValueError("polygon has zero area")
    cx = ((x + xn) * cross).sum() / (6.0 * a)
    cy = ((y + yn) * cross).sum() / (6.0 * a)
    return np.array([cx, cy])


def _densify_polygon(verts: np.ndarray, max_spacing: float) -> np.ndarray:
    """Sample points along a polygon boundary at most ``max_spacing`` apart."""
    v = np.asarray(verts, dtype=np.float64)
    nxt = np.roll(v, -1, axis=0)
    pieces = []
    for p, q in zip(v, nxt):
        seg = q - p
        n = max(1, int(np.ceil(np.linalg.norm(seg) / max_spacing)))
        t = np.arange(n) / n
        pieces.append(p[None, :] + t[:, None] * seg[None, :])
    return np.concatenate(pieces)


def hausdorff_to_wulff(
    boundary_points,
    shape_vertices: np.ndarray,
    refine: bool = True,
    tol: float = 1e-3,
) -> float:
    """Symmetric Hausdorff distance from a boundary walk to a convex shape.

    The shape is translated and scaled for a best fit: the initial guess
    aligns centroids and matches areas, then (optionally) Nelder-Mead
    refines translation and scale to the requested tolerance.  The returned
    value is normalized by the fitted scale, so it is a relative deviation.

    Args:
        boundary_points: Droplet boundary walk (closed or open loop).
        shape_vertices: Convex reference polygon, CCW open loop.
        refine: Refine the fit by direct search (slower, tighter).
        tol: Convergence tolerance of the refinement.

    Returns:
        Scale-normalized symmetric Hausdorff distance of the best fit.
    """
    pts = _as_points(boundary_points).astype(np.float64)
    if len(pts) > 3 and np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
    shape = np.asarray(shape_vertices, dtype=np.float64)
    if len(shape) < 3:
        raise ValueError("reference shape needs at least 3 vertices")

    walk_closed = np.vstack((pts, pts[:1]))
    pts_area = enclosed_area(walk_closed)
    if pts_area <= 0:
        raise ValueError("boundary walk encloses zero area")
    shape_area = hull_area(shape)
    centroid_pts = polygon_centroid(pts)
    centroid_shape = polygon_centroid(shape)
    scale0 = float(np.sqrt(pts_area / shape_area))

    # Both curves are compared as closed polylines: sample points of one
    # against the segments of the other, densified to a spacing small
    # relative to the droplet scale (sample count kept bounded).
    spacing = max(scale0 * 4e-3, 0.02)
    walk_perim = hull_perimeter(pts)
    if walk_perim / spacing > 200_000:
        spacing = walk_perim / 200_000
    walk_samples = _densify_polygon(pts, max_spacing=spacing)
    walk_a = pts
    walk_b = np.roll(pts, -1, axis=0)
    shape0 = shape - centroid_shape

    def symmetric_hausdorff(params: np.ndarray) -> float:
        tx, ty, s = params
        if s <= 0:
            return np.inf
        placed = shape0 * s + np.array([tx, ty])
        seg_a = placed
        seg_b = np.roll(placed, -1, axis=0)
        d_walk = point_segment_distances(walk_samples, seg_a, seg_b).max()
        shape_samples = _densify_polygon(placed, max_spacing=spacing)
        d_shape = point_segment_distances(shape_samples, walk_a, walk_b).max()
        return max(d_walk, d_shape)

    x0 = np.array([centroid_pts[0], centroid_pts[1], scale0])
    best = symmetric_hausdorff(x0)
    if refine:
        res = optimize.minimize(
            symmetric_hausdorff,
            x0,
            method="Nelder-Mead",
            options={
                "xatol": tol * max(scale0, 1.0),
                "fatol": tol * max(scale0, 1.0),
                "maxiter": 150,
            },
        )
        best = min(best, float(res.fun))
        scale = float(res.x[2]) if res.x[2] > 0 else scale0
    else:
        scale = scale0
    return best / scale


def support_function(vertices: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Support values ``max_v <v, u>`` of a convex polygon in given directions.

    Args:
        vertices: ``(m, 2)`` polygon vertices.
        directions: ``(..., 2)`` direction array.

    Returns:
        Array of shape ``directions.shape[:-1]``.
    """
    v = np.asarray(vertices, dtype=np.float64)
    u = np.asarray(directions, dtype=np.float64)
    return np.einsum("...j,mj->...m", u, v).max(axis=-1)


def clip_polygon_convex(subject, clip) -> np.ndarray:
    """Clip a simple polygon against a convex polygon (Sutherland-Hodgman).

    Args:
        subject: Closed vertex loop (first == last) of a simple polygon,
            traversed counterclockwise.
        clip: Convex polygon vertices in counterclockwise order (open or
            closed loop).

    Returns:
        The clipped polygon as an open vertex array (may be empty).

    The result is exact for convex subjects and for subjects whose boundary
    crosses each clip edge at most twice (in particular whenever the subject
    lies entirely inside the clip polygon).  Subjects that weave across a
    clip edge more often are stitched together with bridge edges whose
    enclosed area is *not* reliable; decompose such regions into convex
    pieces (e.g. unit cells) and sum the per-piece areas instead.
    """
    subj = np.asarray(subject, dtype=np.float64)
    if subj.ndim != 2 or subj.shape[1] != 2 or len(subj) < 4:
        raise ValueError("subject must be a closed polygon loop")
    if not np.array_equal(subj[0], subj[-1]):
        raise ValueError("subject loop must be closed (first == last)")
    cl = np.asarray(clip, dtype=np.float64)
    if len(cl) >= 2 and np.array_equal(cl[0], cl[-1]):
        cl = cl[:-1]
    if len(cl) < 3:
        raise ValueError("clip polygon needs at least 3 vertices")

    out = subj[:-1]
    for a, b in zip(cl, np.roll(cl, -1, axis=0)):
        if len(out) == 0:
            break
        edge = b - a
        # Inside test for a CCW clip polygon: left of (or on) each edge.
        cur = out
        nxt = np.roll(cur, -1, axis=0)
        side_cur = edge[0] * (cur[:, 1] - a[1]) - edge[1] * (cur[:, 0] - a[0])
        side_nxt = edge[0] * (nxt[:, 1] - a[1]) - edge[1] * (nxt[:, 0] - a[0])
        in_cur = side_cur >= 0
        in_nxt = side_nxt >= 0
        pieces = []
        denom = side_cur - side_nxt
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(denom != 0, side_cur / denom, 0.0)
        crossing = cur + t[:, None] * (nxt - cur)
        for i in range(len(cur)):
            if in_cur[i]:
                pieces.append(cur[i])
                if not in_nxt[i]:
                    pieces.append(crossing[i])
            elif in_nxt[i]:
                pieces.append(crossing[i])
        out = np.asarray(pieces, dtype=np.float64).reshape(-1, 2)
    return out


def convex_clip_area(subject, clip) -> float:
    """Area of the intersection of a simple polygon with a convex polygon.

    Arguments and accuracy caveats as in :func:`clip_polygon_convex`.
    """
    out = clip_polygon_convex(subject, clip)
    if len(out) < 3:
        return 0.0
    nxt = np.roll(out, -1, axis=0)
    twice_area = (out[:, 0] * nxt[:, 1] - out[:, 1] * nxt[:, 0]).sum()
    return float(abs(twice_area) / 2.0)
