"""Open dual-bond clusters and the exterior dual circuit around a site.

The *exterior circuit* around a query site is the open dual circuit that is
maximal with respect to the region it encloses (circuit plus interior); it is
the boundary of the percolation droplet containing the site.

Extraction works on the primal picture.  Let O be the set of primal sites
joined to the box boundary by open primal bonds (every boundary site is
trivially in O).  An open dual circuit around the site exists if and only if
the site is not in O, and then the enclosed region H is the 8-connected
component of the site inside the complement of O:

* every open dual circuit around the site encloses only non-O sites, and the
  interior of a closed non-crossing walk is 8-connected, so every such
  circuit's interior is contained in H;
* conversely all bonds between H and O are closed (their duals open), H has
  no holes, and tracing the boundary of H yields a single closed
  non-crossing walk of open dual bonds enclosing exactly H.

Hence the traced boundary is the unique maximal circuit.  Diagonal contacts
inside H produce *pinch* vertices which the walk visits twice without
crossing; the turn rule below (right, then straight, then left, with the
droplet kept on the left) resolves them so that the walk stays single and
encloses the whole component.

Vertices are reported as integer dual bases ``(a, b)`` (the plane point
``(a + 1/2, b + 1/2)``); see :mod:`droplet_lab.lattice` for conventions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import euclidean_diameter
from .lattice import BondConfig, expanded_dual_grid, expanded_primal_grid

#: 4-adjacency structuring element for doubled-grid labeling.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_BOX8 = np.ones((3, 3), dtype=bool)

# Directions on the dual-vertex walk: East, North, West, South (CCW order).
_DIR_VEC = ((1, 0), (0, 1), (-1, 0), (0, -1))
# Base offset of the cell ahead-left / ahead-right of a vertex, per direction.
_AHEAD_LEFT = ((1, 1), (0, 1), (0, 0), (1, 0))
_AHEAD_RIGHT = ((1, 0), (1, 1), (0, 1), (0, 0))

#: Refusal threshold for the exhaustive circuit enumeration.
ENUMERATION_SITE_CAP = 49


@dataclass(frozen=True)
class DualCircuit:
    """An ordered closed non-self-crossing dual path.

    Attributes:
        vertices: Integer array of shape ``(n + 1, 2)`` of dual bases; the
            walk is closed (``vertices[0] == vertices[-1]``).  Vertices may
            repeat (the walk can touch itself) but never cross.
        orientation: Always ``"ccw"`` (positive orientation).
    """

    vertices: np.ndarray
    orientation: str = field(default="ccw")

    @property
    def n_steps(self) -> int:
        """Number of dual bonds traversed."""
        return len(self.vertices) - 1

    def bonds(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        """The traversed dual bonds in canonical endpoint order."""
        out = []
        verts = self.vertices
        for k in range(len(verts) - 1):
            a = (int(verts[k, 0]), int(verts[k, 1]))
            b = (int(verts[k + 1, 0]), int(verts[k + 1, 1]))
            out.append((a, b) if a <= b else (b, a))
        return out


@dataclass(frozen=True)
class DropletRecord:
    """An extracted droplet: its boundary circuit plus summary geometry.

    Attributes:
        circuit: The exterior dual circuit.
        interior_area: Enclosed area in lattice-cell units (equals the
            number of enclosed primal sites).
        diameter: Euclidean diameter of the circuit.
        l_eff: ``sqrt(interior_area)`` — the droplet's linear scale.
        boundary_contaminated: True when the circuit comes within two dual
            rows/columns of the box boundary (possibly truncated by the
            finite box; excluded from scaling statistics by default).
    """

    circuit: DualCircuit
    interior_area: float
    diameter: float
    l_eff: float
    boundary_contaminated: bool


@dataclass(frozen=True)
class DualClusterLabeling:
    """Cluster labels of dual sites incident to at least one open dual bond.

    Attributes:
        label_grid: Integer array over the dual-site grid ``(2L+2, 2L+2)``
            (index ``[a + L + 1, b + L + 1]``); dense cluster ids starting
            at 0, or -1 for sites with no incident open dual bond.
        cluster_sizes: ``cluster_sizes[i]`` is the site count of cluster i.
    """

    label_grid: np.ndarray
    cluster_sizes: np.ndarray

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_sizes)

    def label_of(self, base: tuple[int, int]) -> int:
        """Cluster id of a dual site given by its base, or -1."""
        lbox = (self.label_grid.shape[0] - 2) // 2
        return int(self.label_grid[base[0] + lbox + 1, base[1] + lbox + 1])


def label_dual_clusters(config: BondConfig) -> DualClusterLabeling:
    """Label the connected components of the open dual subgraph.

    Returns:
        A :class:`DualClusterLabeling`; the number of labels equals the
        number of connected components with at least one bond.
    """
    from .lattice import dual_open_planes

    dual_h, dual_v = dual_open_planes(config)
    expanded = expanded_dual_grid(config)
    labels, _ = ndimage.label(expanded, structure=_CROSS)
    site_labels = labels[::2, ::2]

    incident = np.zeros(site_labels.shape, dtype=bool)
    incident[:-1, :] |= dual_h
    incident[1:, :] |= dual_h
    incident[:, :-1] |= dual_v
    incident[:, 1:] |= dual_v

    raw = np.where(incident, site_labels, 0)
    ids = np.unique(raw)
    ids = ids[ids > 0]
    dense = np.full(site_labels.shape, -1, dtype=np.int64)
    if len(ids):
        flat = np.searchsorted(ids, raw.ravel())
        hit = incident.ravel()
        dense_flat = dense.ravel()
        dense_flat[hit] = flat[hit]
        dense = dense_flat.reshape(site_labels.shape)
        sizes = np.bincount(dense[dense >= 0], minlength=len(ids))
    else:
        sizes = np.zeros(0, dtype=np.int64)
    return DualClusterLabeling(dense, sizes)


# ---------------------------------------------------------------------------
# Exterior circuit extraction


def _boundary_reachable(config: BondConfig) -> np.ndarray:
    """Boolean site grid: True where the site's open cluster touches the box boundary."""
    expanded = expanded_primal_grid(config)
    labels, _ = ndimage.label(expanded, structure=_CROSS)
    site_labels = labels[::2, ::2]
    border = np.concatenate(
        (
            site_labels[0, :],
            site_labels[-1, :],
            site_labels[:, 0],
            site_labels[:, -1],
        )
    )
    return np.isin(site_labels, np.unique(border))


def _trace_boundary(h_mask: np.ndarray, lbox: int) -> np.ndarray:
    """Trace the boundary walk of the droplet cell set, CCW, droplet on the left.

    Args:
        h_mask: Boolean site grid of the droplet's enclosed sites.
        lbox: Box half-width (grid index offset).

    Returns:
        Closed vertex walk as an ``(n + 1, 2)`` int64 array of dual bases.
    """
    xs, ys = np.nonzero(h_mask)
    order = np.lexsort((xs, ys))  # min y first, then min x
    sx = int(xs[order[0]]) - lbox
    sy = int(ys[order[0]]) - lbox

    size = h_mask.shape[0]

    def in_h(cx: int, cy: int) -> bool:
        ix, iy = cx + lbox, cy + lbox
        if 0 <= ix < size and 0 <= iy < size:
            return bool(h_mask[ix, iy])
        return False

    start = (sx - 1, sy - 1)  # bottom-left corner of the lowest-leftmost site
    start_dir = 0  # East
    verts = [start]
    v = start
    d = start_dir
    max_steps = 4 * int(h_mask.sum()) * 4 + 8
    for _ in range(max_steps):
        dx, dy = _DIR_VEC[d]
        v = (v[0] + dx, v[1] + dy)
        verts.append(v)
        flx, fly = _AHEAD_LEFT[d]
        frx, fry = _AHEAD_RIGHT[d]
        if in_h(v[0] + frx, v[1] + fry):
            nd = (d + 3) % 4  # turn right
        elif in_h(v[0] + flx, v[1] + fly):
            nd = d  # straight
        else:
            nd = (d + 1) % 4  # turn left
        if v == start and nd == start_dir:
            return np.array(verts, dtype=np.int64)
        d = nd
    raise RuntimeError("boundary trace failed to close (corrupt droplet mask)")


def exterior_circuit(
    config: BondConfig, around: tuple[int, int] = (0, 0)
) -> DropletRecord | None:
    """Extract the exterior open dual circuit around a primal site.

    Args:
        config: The bond configuration.
        around: Primal site strictly inside the box.

    Returns:
        The droplet record, or None when no open dual circuit surrounds the
        site (a legitimate outcome, not an error).

    Raises:
        ValueError: If ``around`` is not in the box interior.
    """
    lbox = config.box_half_width
    ax, ay = around
    if not (-lbox < ax < lbox and -lbox < ay < lbox):
        raise ValueError(f"query site {around} not in the interior of the box")

    reachable = _boundary_reachable(config)
    if reachable[ax + lbox, ay + lbox]:
        return None

    components, _ = ndimage.label(~reachable, structure=_BOX8)
    h_mask = components == components[ax + lbox, ay + lbox]

    verts = _trace_boundary(h_mask, lbox)
    area = int(h_mask.sum())

    x = verts[:, 0]
    y = verts[:, 1]
    shoelace2 = int(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1]))
    if shoelace2 != 2 * area:
        raise RuntimeError(
            f"trace area {shoelace2 / 2} disagrees with enclosed cell count {area}"
        )

    diam = euclidean_diameter(verts[:-1])
    vmin = int(verts.min())
    vmax = int(verts.max())
    contaminated = vmin <= -lbox or vmax >= lbox - 1
    return DropletRecord(
        circuit=DualCircuit(vertices=verts),
        interior_area=float(area),
        diameter=float(diam),
        l_eff=float(np.sqrt(area)),
        boundary_contaminated=bool(contaminated),
    )


def interior_area(circuit: DualCircuit) -> float:
    """Enclosed area of a circuit by the shoelace formula on its vertex walk.

    Touch points are handled by traversal multiplicity: the result is the
    winding-weighted area, which for a non-crossing circuit equals the
    measure of the enclosed region.

    Raises:
        ValueError: If the walk has fewer than four bonds or is not closed.
    """
    verts = np.asarray(circuit.vertices, dtype=np.int64)
    if len(verts) < 5:
        raise ValueError("degenerate circuit: fewer than four bonds")
    if verts[0, 0] != verts[-1, 0] or verts[0, 1] != verts[-1, 1]:
        raise ValueError("circuit walk is not closed")
    x = verts[:, 0]
    y = verts[:, 1]
    shoelace2 = int(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1]))
    return abs(shoelace2) / 2.0


def interior_cells(vertices: np.ndarray) -> set[tuple[int, int]]:
    """Primal sites enclosed by a closed dual-base vertex walk.

    A site ``(x, y)`` is enclosed when the walk's winding number around the
    cell center is nonzero.  Computed by exact integer ray crossings.
    """
    verts = np.asarray(vertices, dtype=np.int64)
    if len(verts) < 2:
        return set()
    a0 = verts[:-1, 0]
    b0 = verts[:-1, 1]
    a1 = verts[1:, 0]
    b1 = verts[1:, 1]
    vertical = a0 == a1
    cells: set[tuple[int, int]] = set()
    if not vertical.any():
        return cells
    va = a0[vertical]
    vb_lo = np.minimum(b0[vertical], b1[vertical])
    sign = np.where(b1[vertical] > b0[vertical], 1, -1)
    xs = np.arange(verts[:, 0].min(), verts[:, 0].max() + 1)
    ys = np.arange(verts[:, 1].min() + 1, verts[:, 1].max() + 1)
    for ycell in ys:
        hit = vb_lo == ycell - 1  # edge spans the ray height
        if not hit.any():
            continue
        edge_a = va[hit]
        edge_sign = sign[hit]
        for xcell in xs:
            w = int(edge_sign[edge_a >= xcell].sum())
            if w != 0:
                cells.add((int(xcell), int(ycell)))
    return cells


# ---------------------------------------------------------------------------
# Exhaustive enumeration oracle (exponential; small boxes only)


def _winding_around(verts: list[tuple[int, int]], cell: tuple[int, int]) -> int:
    """Winding number of a closed base-coordinate walk around a cell center."""
    cx, cy = cell
    w = 0
    for k in range(len(verts) - 1):
        a0, b0 = verts[k]
        a1, b1 = verts[k + 1]
        if a0 != a1:
            continue
        if min(b0, b1) == cy - 1 and a0 >= cx:
            w += 1 if b1 > b0 else -1
    return w


def _chords_interleave(c1: tuple[int, int], c2: tuple[int, int]) -> bool:
    """Whether two direction-chords at a vertex cross (directions 0..3 on a circle)."""
    a1, a2 = c1
    b1, b2 = c2
    def between(lo: int, hi: int, x: int) -> bool:
        return (x - lo) % 4 < (hi - lo) % 4 and x != lo
    inside = between(a1, a2, b1) != between(a1, a2, b2)
    return inside


def enumerate_all_circuits(
    config: BondConfig, around: tuple[int, int] = (0, 0)
) -> list[DualCircuit]:
    """All open dual circuits surrounding a site, by exhaustive search.

    Enumerates every closed non-crossing walk of distinct open dual bonds
    with winding number +1 around the site's cell, deduplicated by traversed
    bond set (the directed bond set determines the enclosed region).
    Exponential time; refuses boxes above :data:`ENUMERATION_SITE_CAP` dual
    sites.  Intended as a brute-force oracle for small instances.

    Raises:
        ValueError: If the dual-site grid exceeds the cap or the query site
            is not interior.
    """
    lbox = config.box_half_width
    n_sites = (2 * lbox + 2) ** 2
    if n_sites > ENUMERATION_SITE_CAP:
        raise ValueError(
            f"box with {n_sites} dual sites exceeds enumeration cap "
            f"{ENUMERATION_SITE_CAP}"
        )
    ax, ay = around
    if not (-lbox < ax < lbox and -lbox < ay < lbox):
        raise ValueError(f"query site {around} not in the interior of the box")

    from .lattice import dual_open_planes

    dual_h, dual_v = dual_open_planes(config)
    edges: list[tuple[tuple[int, int], tuple[int, int]]] = []
    for i in range(dual_h.shape[0]):
        for j in range(dual_h.shape[1]):
            if dual_h[i, j]:
                a, b = i - lbox - 1, j - lbox - 1
                edges.append(((a, b), (a + 1, b)))
    for i in range(dual_v.shape[0]):
        for j in range(dual_v.shape[1]):
            if dual_v[i, j]:
                a, b = i - lbox - 1, j - lbox - 1
                edges.append(((a, b), (a, b + 1)))
    edges.sort()
    edge_index = {e: k for k, e in enumerate(edges)}

    adj: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    for (u, v) in edges:
        k = edge_index[(u, v)]
        du = (v[0] - u[0], v[1] - u[1])
        dir_uv = _DIR_VEC.index(du)
        dir_vu = (dir_uv + 2) % 4
        adj.setdefault(u, []).append((k, dir_uv, 0))
        adj.setdefault(v, []).append((k, dir_vu, 1))

    found: dict[frozenset, list[tuple[int, int]]] = {}

    def dfs(
        start: tuple[int, int],
        min_edge: int,
        vertex: tuple[int, int],
        arrival_dir: int,
        used: int,
        chords: dict[tuple[int, int], list[tuple[int, int]]],
        walk: list[tuple[int, int]],
        directed: list[tuple[int, int, int]],
    ) -> None:
        in_dir = (arrival_dir + 2) % 4  # direction pointing back along arrival
        for (k, out_dir, rev) in adj.get(vertex, ()):
            if used >> k & 1:
                continue
            if k < min_edge:
                continue
            new_chord = (in_dir, out_dir)
            prior = chords.get(vertex, [])
            if any(_chords_interleave(c, new_chord) for c in prior):
                continue
            u, v = edges[k]
            nxt = u if rev else v
            if nxt == start:
                closing_in = (out_dir + 2) % 4
                first_out = directed[0][1] if directed else None
                start_chords = chords.get(start, [])
                close_chord = (closing_in, first_out)
                if any(_chords_interleave(c, close_chord) for c in start_chords):
                    continue
                full_walk = walk + [nxt]
                if _winding_around(full_walk, (ax, ay)) == 1:
                    key = frozenset(
                        (ek, edges[ek][0] if rv else edges[ek][1])
                        for ek, _, rv in directed + [(k, out_dir, rev)]
                    )
                    if key not in found:
                        found[key] = full_walk
                continue
            chords.setdefault(vertex, []).append(new_chord)
            dfs(
                start,
                min_edge,
                nxt,
                out_dir,
                used | (1 << k),
                chords,
                walk + [nxt],
                directed + [(k, out_dir, rev)],
            )
            chords[vertex].pop()
            if not chords[vertex]:
                del chords[vertex]

    for k0, (u, v) in enumerate(edges):
        for rev in (0, 1):
            start, nxt = (u, v) if rev == 0 else (v, u)
            du = (nxt[0] - start[0], nxt[1] - start[1])
            out_dir = _DIR_VEC.index(du)
            dfs(
                start,
                k0,
                nxt,
                out_dir,
                1 << k0,
                {},
                [start, nxt],
                [(k0, out_dir, rev)],
            )

    circuits = []
    for walk in found.values():
        circuits.append(DualCircuit(vertices=np.array(walk, dtype=np.int64)))
    return circuits
