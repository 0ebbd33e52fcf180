"""Renewal structure of open dual connections across diagonal slabs.

A slab is the set of dual sites between two parallel lines orthogonal to
a direction of exactly rational slope.  Along a slab-internal connection
the cluster repeatedly pinches down to single sites; these pinch sites
(regeneration points) decompose the connection into independent pieces
whose transverse increments behave like a random walk.  This module
provides:

* :class:`SlabSpec` and the connectivity predicates
  (:func:`slab_connected`, :func:`end_pinched_connected`,
  :func:`irreducibly_connected`);
* :func:`regeneration_points` and transverse :func:`increments` against a
  reference line;
* :func:`spaced_regeneration_subset`, the greedy rule selecting
  well-separated regeneration points;
* :func:`exchange_adjacent`, an exact involution of the configuration
  that swaps two adjacent increments while preserving the open-bond
  count (the measure-preserving step behind increment exchangeability);
* :func:`choose_slab_direction`, mapping a segment direction to a nearby
  rational-slope direction on the unit-area equilibrium shape boundary;
* :func:`tube_confinement_stats`, the partial-sum / tube-escape
  statistics used by the roughness harness.

Conventions:
    * Dual sites are named by their integer bases ``(a, b)``, standing
      for the plane point ``(a + 1/2, b + 1/2)``.
    * Progress along the slab direction ``t`` (parallel to ``(q, r)``)
      is compared through the exact integer value ``q(2a+1) + r(2b+1)``
      (twice the scalar product with ``(q, r)``), so every slab,
      regeneration, and selection comparison is integer-exact.
    * Slopes are restricted to the closed first-octant wedge
      ``0 <= r <= q`` with ``gcd(r, q) = 1``; the axis vector maximizing
      the scalar product with ``t`` is then always ``e = (1, 0)``, with
      ties at slope one resolved to ``(1, 0)`` as well.
    * A dual bond belongs to a slab iff **both** endpoints do.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .geometry import hull_area
from .lattice import BondConfig, dual_open_planes
from .tau import WulffShape, polar_point

Base = tuple[int, int]

# Default statistics thresholds; all configurable per call site.
DEFAULT_EPSILON = 0.25
DEFAULT_LAMBDA = 0.2
DEFAULT_DELTA = 0.05
DEFAULT_GAMMA = 0.02

_E1: Base = (1, 0)


def base_center(z: Sequence[int]) -> tuple[float, float]:
    """Plane coordinates of a dual site given by its base."""
    return (z[0] + 0.5, z[1] + 0.5)


def _centers(bases: Iterable[Sequence[int]]) -> np.ndarray:
    arr = np.asarray(list(bases), dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, 2)
    return arr + 0.5


@dataclass(frozen=True)
class ReferenceLine:
    """An oriented line; transverse positions are signed distances to it.

    Attributes:
        point: Any point on the line.
        normal: Unit normal; the signed distance is positive on this
            side ("above" the line) and non-positive on the line itself
            or the opposite side.
    """

    point: tuple[float, float]
    normal: tuple[float, float]

    def __post_init__(self) -> None:
        n = math.hypot(*self.normal)
        if not math.isclose(n, 1.0, rel_tol=1e-9):
            raise ValueError(f"normal must be a unit vector (|n| = {n:.6g})")

    def signed_distance(self, points) -> np.ndarray | float:
        """Signed distance of point(s) to the line (positive above)."""
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        d = (pts - np.asarray(self.point)) @ np.asarray(self.normal)
        return float(d[0]) if single else d


@dataclass(frozen=True)
class SlabSpec:
    """A diagonal slab between two dual sites, with exact rational slope.

    The slab consists of all dual sites whose progress along the
    direction ``t`` (parallel to ``(q, r)``) lies weakly between the
    progress of ``x`` and of ``y``.

    Attributes:
        q: Slope denominator (``t`` is parallel to ``(q, r)``).
        r: Slope numerator, ``0 <= r <= q``, coprime with ``q``.
        x: Base of the lower endpoint (strictly smaller progress).
        y: Base of the upper endpoint.
    """

    q: int
    r: int
    x: Base
    y: Base

    def __post_init__(self) -> None:
        if not (isinstance(self.q, int) and isinstance(self.r, int)):
            raise ValueError("slope numerator and denominator must be ints")
        if self.q < 1 or not 0 <= self.r <= self.q:
            raise ValueError(
                f"slope {self.r}/{self.q} outside the wedge 0 <= r <= q, q >= 1"
            )
        if math.gcd(self.r, self.q) != 1:
            raise ValueError(f"slope {self.r}/{self.q} is not in lowest terms")
        for z in (self.x, self.y):
            if len(z) != 2 or not all(isinstance(c, int) for c in z):
                raise ValueError(f"endpoint {z!r} is not an integer base pair")
        if self.progress(self.x) >= self.progress(self.y):
            raise ValueError(
                "endpoint progress must be strictly increasing from x to y"
            )

    # -- direction helpers -------------------------------------------------
    @property
    def t(self) -> np.ndarray:
        """Unit slab direction."""
        v = np.array([self.q, self.r], dtype=np.float64)
        return v / np.linalg.norm(v)

    @property
    def e(self) -> Base:
        """Axis step maximizing progress: always ``(1, 0)`` in the wedge."""
        return _E1

    def progress(self, z: Sequence[int]) -> int:
        """Exact progress ``q(2a+1) + r(2b+1)`` of a dual base."""
        return self.q * (2 * z[0] + 1) + self.r * (2 * z[1] + 1)

    def progress_span(self) -> int:
        return self.progress(self.y) - self.progress(self.x)

    def euclidean_span(self) -> float:
        """Euclidean distance between the endpoint site centers."""
        return math.hypot(self.y[0] - self.x[0], self.y[1] - self.x[1])

    def contains(self, z: Sequence[int]) -> bool:
        """Slab membership of a dual base (progress weakly between ends)."""
        p = self.progress(z)
        return self.progress(self.x) <= p <= self.progress(self.y)

    def default_line(self) -> ReferenceLine:
        """The line through the endpoint centers, positive side to the right.

        "Right" is relative to walking from ``x`` to ``y``; when the
        slab spans a side of a counterclockwise skeleton polygon, the
        right side is the outward side, so positive transverse positions
        mean outward excursions.
        """
        cx = base_center(self.x)
        cy = base_center(self.y)
        dx, dy = cy[0] - cx[0], cy[1] - cx[1]
        n = math.hypot(dx, dy)
        return ReferenceLine(point=cx, normal=(dy / n, -dx / n))

    def subslab(self, x: Base, y: Base) -> "SlabSpec":
        """The slab of the same direction between two other sites."""
        return SlabSpec(q=self.q, r=self.r, x=x, y=y)


# ---------------------------------------------------------------------------
# Dual-plane access
#
# dual_open_planes(config) returns (dual_h, dual_v) with entry [i, j]
# holding the state of the dual bond with base (a, b) = (i-L-1, j-L-1):
# dual_h for (a,b)-(a+1,b), dual_v for (a,b)-(a,b+1).  Entries on the
# array frame are absent bonds (their primal partner leaves the box) and
# always read False.


def _base_in_box(z: Sequence[int], box_half_width: int) -> bool:
    lo, hi = -box_half_width - 1, box_half_width
    return lo <= z[0] <= hi and lo <= z[1] <= hi


def _validate_slab_in_box(slab: SlabSpec, config: BondConfig) -> None:
    for z in (slab.x, slab.y):
        if not _base_in_box(z, config.box_half_width):
            raise ValueError(
                f"slab endpoint {z} outside the dual-site range of the "
                f"box (half-width {config.box_half_width})"
            )


class _SlabEngine:
    """Shared BFS engine over one configuration's dual planes."""

    def __init__(self, config: BondConfig):
        self.lbox = config.box_half_width
        self.dual_h, self.dual_v = dual_open_planes(config)

    def _h_open(self, a: int, b: int) -> bool:
        i, j = a + self.lbox + 1, b + self.lbox + 1
        dh = self.dual_h
        if 0 <= i < dh.shape[0] and 0 <= j < dh.shape[1]:
            return bool(dh[i, j])
        return False

    def _v_open(self, a: int, b: int) -> bool:
        i, j = a + self.lbox + 1, b + self.lbox + 1
        dv = self.dual_v
        if 0 <= i < dv.shape[0] and 0 <= j < dv.shape[1]:
            return bool(dv[i, j])
        return False

    def cluster(self, slab: SlabSpec, tube=None) -> set[Base] | None:
        """Sites reachable from ``x`` inside the slab; None unless ``y`` is.

        Only dual bonds with both endpoints inside the slab (and inside
        ``tube`` when given, a predicate on bases) are used.
        """
        p_lo = slab.progress(slab.x)
        p_hi = slab.progress(slab.y)

        def member(z: Base) -> bool:
            return p_lo <= slab.progress(z) <= p_hi and (
                tube is None or tube(z)
            )

        if not member(slab.x):
            return None
        seen: set[Base] = {slab.x}
        queue: deque[Base] = deque([slab.x])
        while queue:
            a, b = queue.popleft()
            steps = (
                ((a + 1, b), self._h_open(a, b)),
                ((a - 1, b), self._h_open(a - 1, b)),
                ((a, b + 1), self._v_open(a, b)),
                ((a, b - 1), self._v_open(a, b - 1)),
            )
            for nxt, is_open in steps:
                if is_open and nxt not in seen and member(nxt):
                    seen.add(nxt)
                    queue.append(nxt)
        return seen if slab.y in seen else None

    def end_pinched(self, slab: SlabSpec, cluster: set[Base]) -> bool:
        """Whether the cluster meets both end mini-slabs in only the
        required straight pairs ``{x, x+e}`` and ``{y-e, y}``."""
        step = 2 * slab.q  # progress of one e-step
        x, y = slab.x, slab.y
        x_e = (x[0] + 1, x[1])
        y_e = (y[0] - 1, y[1])
        if x_e not in cluster or y_e not in cluster:
            return False
        p_lo = slab.progress(x)
        p_hi = slab.progress(y)
        for z in cluster:
            p = slab.progress(z)
            if p_lo <= p <= p_lo + step and z not in (x, x_e):
                return False
            if p_hi - step <= p <= p_hi and z not in (y_e, y):
                return False
        return True

    def regeneration(self, slab: SlabSpec, cluster: set[Base]) -> list[Base]:
        """All single-site pinch points of the cluster, ordered by progress."""
        step = 2 * slab.q
        p_lo = slab.progress(slab.x)
        p_hi = slab.progress(slab.y)
        progs = np.array(sorted(slab.progress(z) for z in cluster))
        out: list[tuple[int, Base]] = []
        for z in cluster:
            p = slab.progress(z)
            if not p_lo < p < p_hi:
                continue
            if (z[0] - 1, z[1]) not in cluster or (z[0] + 1, z[1]) not in cluster:
                continue
            lo = int(np.searchsorted(progs, p - step, side="left"))
            hi = int(np.searchsorted(progs, p + step, side="right"))
            if hi - lo == 3:
                out.append((p, z))
        out.sort()
        return [z for _, z in out]


def slab_cluster(config: BondConfig, slab: SlabSpec) -> set[Base] | None:
    """The within-slab cluster joining the slab endpoints, if any.

    A dual bond is usable iff it is open and both endpoints lie in the
    slab; the transverse extent is truncated by the box.  Returns the set
    of dual bases connected to ``x`` when ``y`` is among them, else None.

    Raises:
        ValueError: If an endpoint lies outside the box dual range.
    """
    _validate_slab_in_box(slab, config)
    return _SlabEngine(config).cluster(slab)


def slab_connected(config: BondConfig, slab: SlabSpec) -> bool:
    """Whether the slab endpoints are joined by an open within-slab path."""
    return slab_cluster(config, slab) is not None


def end_pinched_connected(config: BondConfig, slab: SlabSpec) -> bool:
    """Slab-connected with both ends pinched to straight axis steps.

    Beyond :func:`slab_connected`, the cluster must meet the two
    single-step end slabs (between ``x`` and ``x+e``, and between
    ``y-e`` and ``y``) in exactly the pairs ``{x, x+e}`` and
    ``{y-e, y}`` — the connection enters and leaves through clean
    single-bond necks.
    """
    _validate_slab_in_box(slab, config)
    engine = _SlabEngine(config)
    cluster = engine.cluster(slab)
    return cluster is not None and engine.end_pinched(slab, cluster)


def irreducibly_connected(config: BondConfig, slab: SlabSpec) -> bool:
    """End-pinched with no interior site splitting it into two such pieces.

    True when the endpoints are end-pinched-connected and no strictly
    interior site ``z`` of the slab is simultaneously an end-pinched
    connection target from ``x`` and source to ``y`` (within the two
    sub-slabs).  Such connections are the atoms of the renewal
    decomposition.
    """
    _validate_slab_in_box(slab, config)
    engine = _SlabEngine(config)
    cluster = engine.cluster(slab)
    if cluster is None or not engine.end_pinched(slab, cluster):
        return False
    p_lo = slab.progress(slab.x)
    p_hi = slab.progress(slab.y)
    for z in cluster:
        if not p_lo < slab.progress(z) < p_hi:
            continue
        lower = engine.cluster(slab.subslab(slab.x, z))
        if lower is None or not engine.end_pinched(slab.subslab(slab.x, z), lower):
            continue
        upper = engine.cluster(slab.subslab(z, slab.y))
        if upper is not None and engine.end_pinched(slab.subslab(z, slab.y), upper):
            return False
    return True


def regeneration_points(config: BondConfig, slab: SlabSpec) -> list[Base]:
    """Interior pinch points of the slab connection, ordered by progress.

    A site ``z`` strictly between the slab ends qualifies when the
    cluster meets the single-step slab around it (from ``z-e`` to
    ``z+e``) in exactly the three collinear sites ``{z-e, z, z+e}``.

    Raises:
        ValueError: If the endpoints are not slab-connected (so "no
            connection" is distinguishable from "no pinch points").
    """
    _validate_slab_in_box(slab, config)
    engine = _SlabEngine(config)
    cluster = engine.cluster(slab)
    if cluster is None:
        raise ValueError("slab endpoints are not connected within the slab")
    return engine.regeneration(slab, cluster)


def increments(regen_points: Sequence[Base], line: ReferenceLine) -> np.ndarray:
    """Transverse increments of the pinch-point sequence against a line.

    The first entry is the signed distance of the first point to the
    line; each later entry is the difference of successive signed
    distances, so the running sum telescopes to the signed distance of
    the last point (up to roundoff).

    Raises:
        ValueError: On an empty point sequence.
    """
    if len(regen_points) == 0:
        raise ValueError("at least one regeneration point is required")
    f = np.asarray(line.signed_distance(_centers(regen_points)))
    return np.diff(f, prepend=0.0)


@dataclass(frozen=True)
class RenewalRecord:
    """One slab connection with its renewal decomposition.

    Attributes:
        slab: The slab specification.
        connected: Whether the endpoints are slab-connected.
        cluster: The within-slab cluster (None when not connected).
        regen_points: Pinch points ordered by progress (empty when not
            connected).
        increments: Transverse increments against ``reference_line``
            (empty when not connected or no pinch points).
        reference_line: The line transverse positions are measured from.
    """

    slab: SlabSpec
    connected: bool
    cluster: frozenset[Base] | None
    regen_points: tuple[Base, ...]
    increments: tuple[float, ...]
    reference_line: ReferenceLine


def renewal_record(
    config: BondConfig,
    slab: SlabSpec,
    line: ReferenceLine | None = None,
) -> RenewalRecord:
    """Assemble the full renewal decomposition of one slab connection."""
    _validate_slab_in_box(slab, config)
    if line is None:
        line = slab.default_line()
    engine = _SlabEngine(config)
    cluster = engine.cluster(slab)
    if cluster is None:
        return RenewalRecord(
            slab=slab,
            connected=False,
            cluster=None,
            regen_points=(),
            increments=(),
            reference_line=line,
        )
    regen = engine.regeneration(slab, cluster)
    incs = increments(regen, line) if regen else np.zeros(0)
    return RenewalRecord(
        slab=slab,
        connected=True,
        cluster=frozenset(cluster),
        regen_points=tuple(regen),
        increments=tuple(float(v) for v in incs),
        reference_line=line,
    )


def spaced_regeneration_subset(
    regen_points: Sequence[Base],
    slab: SlabSpec,
    delta: float = DEFAULT_DELTA,
) -> list[Base] | None:
    """Greedy subset of pinch points with progress spacing >= 8 axis steps.

    With ``N = floor(delta * |y - x|)`` (Euclidean endpoint distance) and
    ``R = floor(N / 8)``: returns None when fewer than ``N`` points are
    available (the selection is undefined); otherwise picks the first
    point at progress at least that of ``x + 4e``, then repeatedly the
    first point at progress at least that of the previous pick plus
    ``8e``.  When defined, the result has exactly ``R`` points and skips
    at most 7 points between consecutive picks.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive (got {delta})")
    n_required = math.floor(delta * slab.euclidean_span())
    if len(regen_points) < n_required:
        return None
    n_picks = n_required // 8
    if n_picks == 0:
        return []
    progs = [slab.progress(z) for z in regen_points]
    if any(b <= a for a, b in zip(progs, progs[1:])):
        raise ValueError("regeneration points must be sorted by progress")
    selected: list[Base] = []
    threshold = slab.progress(slab.x) + 8 * slab.q  # progress of x + 4e
    idx = 0
    for _ in range(n_picks):
        while idx < len(progs) and progs[idx] < threshold:
            idx += 1
        if idx == len(progs):  # unreachable when the spacing guarantee holds
            raise ValueError(
                "ran out of regeneration points during spaced selection"
            )
        selected.append(tuple(regen_points[idx]))
        threshold = progs[idx] + 16 * slab.q  # previous pick + 8e
        idx += 1
    return selected


# ---------------------------------------------------------------------------
# Adjacent-increment exchange
#
# The transform swaps the contents of the two slab pieces between three
# consecutive regeneration points r_prev, r_mid, r_next, realized as a
# rigid translation of three disjoint bond classes inside the band
# between r_prev and r_next:
#
#   * bonds strictly crossing the middle hyperplane (progress of the two
#     endpoints straddles that of r_mid), or lying entirely on it, move
#     by r_prev + r_next - 2 r_mid;
#   * other bonds entirely on the low-progress side move by
#     r_next - r_mid;
#   * other bonds entirely on the high-progress side move by
#     r_prev - r_mid;
#   * bonds lying entirely on an outer hyperplane (both endpoints at the
#     progress of r_prev or of r_next), partially outside the band, or
#     fully outside, stay put.
#
# This partition is the unique bijective completion of "swap the pieces
# and carry the crossing bonds": the position map is one-to-one on the
# in-band bond set and equals its own inverse at the post-exchange
# geometry, so applying the transform twice restores the configuration
# bit for bit.  The middle pinch point moves to r_prev + (r_next - r_mid)
# and the two adjacent increments swap; open-bond count is preserved.
# Absent (box-frame) dual positions read as closed: a closed state
# sliding onto the frame is dropped harmlessly, while an open bond
# leaving the real bond support raises (the caller must pad the box).


def _plane_progress(shape: tuple[int, int], lbox: int, q: int, r: int):
    a = np.arange(shape[0], dtype=np.int64) - (lbox + 1)
    b = np.arange(shape[1], dtype=np.int64) - (lbox + 1)
    return q * (2 * a[:, None] + 1) + r * (2 * b[None, :] + 1)


def _scatter_class(
    src: np.ndarray, dst: np.ndarray, mask: np.ndarray, shift: Base
) -> None:
    """Move the states under ``mask`` by ``shift`` (in base coordinates).

    Raises when an open state would leave the array or land on an absent
    frame position of ``dst`` (detected by the caller pre-marking).
    """
    ii, jj = np.nonzero(mask)
    vals = src[ii, jj]
    ti = ii + shift[0]
    tj = jj + shift[1]
    inside = (
        (ti >= 0) & (ti < dst.shape[0]) & (tj >= 0) & (tj < dst.shape[1])
    )
    if bool((vals & ~inside).any()):
        raise ValueError(
            "an open bond leaves the box under the exchange translation; "
            "use a larger box around the slab"
        )
    dst[ti[inside], tj[inside]] = vals[inside]


def exchange_adjacent(
    config: BondConfig, record: RenewalRecord, k: int
) -> BondConfig:
    """Swap the two slab pieces around the ``k``-th pinch point (1-based).

    Requires pinch points ``k-1``, ``k``, ``k+1`` to exist, i.e.
    ``2 <= k <= len(record.regen_points) - 1``.  Returns a new
    configuration identical outside the band between points ``k-1`` and
    ``k+1``; inside, the two pieces swap positions (see the partition
    notes above), moving the ``k``-th pinch point and exchanging the
    ``k``-th and ``(k+1)``-th increments.  Applying the transform twice
    (with the re-derived record) restores the input exactly.

    Raises:
        ValueError: If ``k`` is out of range, the record is not
            connected, or an open bond would leave the box.
    """
    if not record.connected:
        raise ValueError("cannot exchange increments of a disconnected record")
    n_regen = len(record.regen_points)
    if not 2 <= k <= n_regen - 1:
        raise ValueError(
            f"k = {k} out of range (need 2 <= k <= {n_regen - 1} "
            f"for {n_regen} regeneration points)"
        )
    slab = record.slab
    r_prev = record.regen_points[k - 2]
    r_mid = record.regen_points[k - 1]
    r_next = record.regen_points[k]
    c0 = slab.progress(r_prev)
    c = slab.progress(r_mid)
    c1 = slab.progress(r_next)
    c_new = c0 + c1 - c
    shift_low = (r_next[0] - r_mid[0], r_next[1] - r_mid[1])
    shift_high = (r_prev[0] - r_mid[0], r_prev[1] - r_mid[1])
    shift_cross = (shift_low[0] + shift_high[0], shift_low[1] + shift_high[1])

    lbox = config.box_half_width
    n = 2 * lbox
    dual_h, dual_v = dual_open_planes(config)
    new_h = dual_h.copy()
    new_v = dual_v.copy()

    for plane, new_plane, step, absent in (
        (dual_h, new_h, 2 * slab.q, "cols"),
        (dual_v, new_v, 2 * slab.r, "rows"),
    ):
        p_lo = _plane_progress(plane.shape, lbox, slab.q, slab.r)
        p_hi = p_lo + step  # second endpoint is one step up in progress
        inband = (p_lo >= c0) & (p_hi <= c1)
        on_outer = inband & (
            ((p_lo == c0) & (p_hi == c0)) | ((p_lo == c1) & (p_hi == c1))
        )
        crossing = inband & ~on_outer & (
            ((p_lo < c) & (p_hi > c)) | ((p_lo == c) & (p_hi == c))
        )
        low_side = inband & ~on_outer & ~crossing & (p_hi <= c)
        high_side = inband & ~on_outer & ~crossing & (p_lo >= c)
        # Clear every moved target position (the moved classes at the new
        # geometry occupy the same in-band, off-outer region), then drop
        # each source class onto its translated position.
        new_plane[inband & ~on_outer] = False
        _scatter_class(plane, new_plane, low_side, shift_low)
        _scatter_class(plane, new_plane, high_side, shift_high)
        _scatter_class(plane, new_plane, crossing, shift_cross)
        # Open states may not land on absent frame positions.
        if absent == "cols":
            frame = new_plane[:, [0, n + 1]]
        else:
            frame = new_plane[[0, n + 1], :]
        if bool(frame.any()):
            raise ValueError(
                "an open bond leaves the box under the exchange translation; "
                "use a larger box around the slab"
            )

    # A sanity anchor for the construction (cheap, exact): the middle
    # pinch point must land at r_prev + (r_next - r_mid).
    assert slab.progress(
        (r_prev[0] + shift_low[0], r_prev[1] + shift_low[1])
    ) == c_new

    return replace(
        config,
        h_open=~new_v[1 : n + 1, :],
        v_open=~new_h[:, 1 : n + 1],
    )


# ---------------------------------------------------------------------------
# Slab direction selection


_DIHEDRAL = (
    ((1, 0), (0, 1)),
    ((0, 1), (-1, 0)),
    ((-1, 0), (0, -1)),
    ((0, -1), (1, 0)),
    ((1, 0), (0, -1)),
    ((0, 1), (1, 0)),
    ((-1, 0), (0, 1)),
    ((0, -1), (-1, 0)),
)


def map_into_wedge(v) -> tuple[tuple[tuple[int, int], tuple[int, int]], np.ndarray]:
    """Lattice symmetry taking a nonzero vector into the closed wedge.

    Returns the first dihedral matrix (in a fixed enumeration) whose
    image of ``v`` has angle in ``[0, pi/4]`` from the positive x-axis,
    together with the image.
    """
    vec = np.asarray(v, dtype=np.float64)
    if vec.shape != (2,) or not np.linalg.norm(vec) > 0:
        raise ValueError("direction must be a nonzero 2-vector")
    for mat in _DIHEDRAL:
        m = np.asarray(mat, dtype=np.float64)
        w = m @ vec
        if w[0] > 0 and 0 <= w[1] <= w[0]:
            return mat, w
    raise AssertionError("dihedral images cover all octants")  # pragma: no cover


def _closed_loop(vertices: np.ndarray) -> np.ndarray:
    if np.array_equal(vertices[0], vertices[-1]):
        return vertices
    return np.vstack([vertices, vertices[:1]])


def _boundary_point_along(vertices: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Intersection of the ray from the origin with a convex CCW boundary."""
    closed = _closed_loop(np.asarray(vertices, dtype=np.float64))
    edges = np.diff(closed, axis=0)
    normals = np.column_stack([edges[:, 1], -edges[:, 0]])
    offsets = np.einsum("ij,ij->i", normals, closed[:-1])
    dots = normals @ np.asarray(direction, dtype=np.float64)
    pos = dots > 1e-12
    if not pos.any():
        raise ValueError("direction escapes the shape (not a bounded body?)")
    scale = float(np.min(offsets[pos] / dots[pos]))
    return scale * np.asarray(direction, dtype=np.float64)


@dataclass(frozen=True)
class SlabDirection:
    """A rational-slope slab direction near the equilibrium-polar anchor.

    Attributes:
        w_pair: The segment endpoints the direction was derived for.
        symmetry: Dihedral matrix mapping the segment vector into the
            closed wedge (angle in ``[0, pi/4]``).
        side_in_wedge: The mapped segment vector.
        anchor: Boundary point of the unit-area equilibrium shape polar
            to the mapped segment vector (clamped to the wedge).
        t_point: The chosen boundary point with slope exactly
            ``slope_numerator / slope_denominator``.
        slope_numerator: Chosen numerator (may share a factor with the
            denominator; see :meth:`reduced_slope`).
        slope_denominator: Structural denominator ``floor(1/lam) + 1``.
        lam: The proximity budget the choice had to respect.
    """

    w_pair: tuple[tuple[float, float], tuple[float, float]]
    symmetry: tuple[tuple[int, int], tuple[int, int]]
    side_in_wedge: tuple[float, float]
    anchor: tuple[float, float]
    t_point: tuple[float, float]
    slope_numerator: int
    slope_denominator: int
    lam: float

    @property
    def slope(self) -> float:
        return self.slope_numerator / self.slope_denominator

    def reduced_slope(self) -> tuple[int, int]:
        """The slope fraction in lowest terms (numerator, denominator)."""
        g = math.gcd(self.slope_numerator, self.slope_denominator)
        return self.slope_numerator // g, self.slope_denominator // g

    def slab_between(self, x: Base, y: Base) -> SlabSpec:
        """A slab of this direction between two dual bases."""
        r, q = self.reduced_slope()
        return SlabSpec(q=q, r=r, x=x, y=y)


def choose_slab_direction(
    w_start,
    w_end,
    wulff: WulffShape,
    lam: float = DEFAULT_LAMBDA,
) -> SlabDirection:
    """Select a rational-slope direction near the polar of a segment.

    The segment vector ``w_end - w_start`` is mapped into the closed
    wedge by a lattice symmetry; the anchor is the boundary point of the
    unit-area equilibrium shape supporting that direction (clamped to
    the wedge).  Among the boundary points with slope ``r/q``,
    ``q = floor(1/lam) + 1``, ``0 <= r <= q``, the one closest to the
    anchor is chosen; its distance must be at most ``lam``.

    Raises:
        ValueError: On a zero segment, non-positive ``lam``, or when no
            rational-slope boundary point lies within ``lam`` of the
            anchor (the message reports the nearest achievable
            distance).
    """
    if lam <= 0:
        raise ValueError(f"lam must be positive (got {lam})")
    w_start = np.asarray(w_start, dtype=np.float64)
    w_end = np.asarray(w_end, dtype=np.float64)
    side = w_end - w_start
    if not np.linalg.norm(side) > 0:
        raise ValueError("segment endpoints must differ")
    symmetry, side_wedge = map_into_wedge(side)

    unit = np.asarray(wulff.unit_vertices, dtype=np.float64)
    kappa = 1.0 / math.sqrt(hull_area(wulff.vertices))
    anchor = polar_point(wulff, tuple(side_wedge)) * kappa
    ang = math.atan2(anchor[1], anchor[0])
    clamped = min(max(ang, 0.0), math.pi / 4)
    if clamped != ang:
        anchor = _boundary_point_along(unit, np.array([math.cos(clamped), math.sin(clamped)]))

    q = math.floor(1.0 / lam) + 1
    best_r = None
    best_point = None
    best_dist = math.inf
    for r in range(q + 1):
        point = _boundary_point_along(unit, np.array([q, r], dtype=np.float64))
        dist = float(np.linalg.norm(point - anchor))
        if dist < best_dist:
            best_r, best_point, best_dist = r, point, dist
    if best_dist > lam:
        raise ValueError(
            f"no slope-r/{q} boundary point within {lam:.6g} of the polar "
            f"anchor; nearest achievable distance is {best_dist:.6g}"
        )
    return SlabDirection(
        w_pair=(tuple(map(float, w_start)), tuple(map(float, w_end))),
        symmetry=symmetry,
        side_in_wedge=tuple(map(float, side_wedge)),
        anchor=tuple(map(float, anchor)),
        t_point=tuple(map(float, best_point)),
        slope_numerator=int(best_r),
        slope_denominator=q,
        lam=lam,
    )


# ---------------------------------------------------------------------------
# Tube confinement


def tube_confinement_stats(
    config: BondConfig,
    slab: SlabSpec,
    d: float,
    line: ReferenceLine | None = None,
) -> dict:
    """Confinement statistics of a slab connection in a width-``2d`` tube.

    Returns a dict with exactly:

    * ``connected_in_tube``: whether the endpoints are joined by an open
      within-slab path whose sites all lie within transverse distance
      ``d`` of the reference line (default: the line through the
      endpoint centers);
    * ``max_abs_partial_sum``: the largest absolute sum of transverse
      increments between any two pinch points — equal to the spread
      (max minus min) of their signed distances, computed in one pass;
    * ``regen_outside_tube``: how many pinch points lie beyond distance
      ``d`` of the line.

    When ``max_abs_partial_sum`` exceeds ``2d``, at least one pinch
    point must lie outside the tube (the criterion driving the
    roughness lower bound).

    Raises:
        ValueError: On non-positive ``d`` or when the endpoints are not
            slab-connected.
    """
    if d <= 0:
        raise ValueError(f"d must be positive (got {d})")
    _validate_slab_in_box(slab, config)
    if line is None:
        line = slab.default_line()
    engine = _SlabEngine(config)
    cluster = engine.cluster(slab)
    if cluster is None:
        raise ValueError("slab endpoints are not connected within the slab")

    def in_tube(z: Base) -> bool:
        return abs(line.signed_distance(base_center(z))) <= d

    tube_cluster = engine.cluster(slab, tube=in_tube)
    regen = engine.regeneration(slab, cluster)
    if regen:
        f = np.asarray(line.signed_distance(_centers(regen)))
        spread = float(f.max() - f.min())
        outside = int((np.abs(f) > d).sum())
    else:
        spread = 0.0
        outside = 0
    return {
        "connected_in_tube": tube_cluster is not None,
        "max_abs_partial_sum": spread,
        "regen_outside_tube": outside,
    }
