"""Connectivity-decay norm estimation and the equilibrium (Wulff) shape.

In the dual model (bond density ``q = 1 - p < 1/2``) the two-point
connection probability decays exponentially with an angle-dependent rate:
``P(0 <-> x)`` behaves like ``exp(-tau(x))`` for a norm ``tau`` on the
plane, with the standard lattice-symmetry bounds

    tau(axis) / sqrt(2)  <=  tau(x) / |x|  <=  sqrt(2) * tau(axis).

The norm is estimated on a grid of 96 lattice directions (13 primitive
vectors per octant extended by the dihedral symmetries).  For each
direction the two-point probability is measured at several integer
multiples of the primitive vector and ``tau`` is read off as the slope of
``-log P`` against distance; the intercept absorbs any slowly varying
prefactor, which would bias a single-point estimate.

From sampled values the norm is extended to all of the plane through its
equilibrium shape: the convex region

    W = { t : <t, u> <= tau(u) for every sampled unit direction u },

whose support function reproduces ``tau`` exactly at consistent sample
directions and interpolates convexly in between.  ``K`` denotes ``W``
rescaled to unit area; the boundary energy of a polygon is the line
integral of ``tau`` of the outward normal along its boundary.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.spatial import HalfspaceIntersection

from .geometry import hull_area, support_function

CALIBRATION_KIND = "decay-norm-calibration"
CALIBRATION_VERSION = 1

#: First-octant primitive direction vectors, ordered by angle.
PRIMITIVE_DIRECTIONS: tuple[tuple[int, int], ...] = (
    (1, 0),
    (6, 1),
    (5, 1),
    (4, 1),
    (3, 1),
    (5, 2),
    (2, 1),
    (5, 3),
    (3, 2),
    (4, 3),
    (5, 4),
    (6, 5),
    (1, 1),
)

#: 4-adjacency within each slice of a stacked batch; no cross-slice links.
_BATCH_STRUCTURE = np.zeros((3, 3, 3), dtype=bool)
_BATCH_STRUCTURE[1] = [[0, 1, 0], [1, 1, 1], [0, 1, 0]]

_SYMMETRIES = (
    (1, 1, False),
    (-1, 1, False),
    (1, -1, False),
    (-1, -1, False),
    (1, 1, True),
    (-1, 1, True),
    (1, -1, True),
    (-1, -1, True),
)


def symmetry_orbit(vec: tuple[int, int]) -> list[tuple[int, int]]:
    """Distinct images of a lattice vector under the 8 dihedral symmetries."""
    x, y = vec
    out = []
    for sx, sy, swap in _SYMMETRIES:
        img = (sy * y, sx * x) if swap else (sx * x, sy * y)
        if img not in out:
            out.append(img)
    return out


def full_direction_grid() -> tuple[list[tuple[int, int]], np.ndarray]:
    """The complete 96-direction grid.

    Returns:
        ``(primitives, units)``: integer primitive vectors (orbit images of
        the first-octant list) sorted by angle, and the matching array of
        unit vectors.
    """
    prims: list[tuple[int, int]] = []
    for base in PRIMITIVE_DIRECTIONS:
        for img in symmetry_orbit(base):
            if img not in prims:
                prims.append(img)
    prims.sort(key=lambda v: math.atan2(v[1], v[0]) % (2 * math.pi))
    units = np.array(
        [[x / math.hypot(x, y), y / math.hypot(x, y)] for x, y in prims]
    )
    return prims, units


# ---------------------------------------------------------------------------
# Monte Carlo connection counting


def _connection_counts(
    p: float,
    displacements: list[tuple[int, int]],
    box_half_width: int,
    n_samples: int,
    seed: int,
    n_batches: int = 16,
    chunk: int = 512,
) -> np.ndarray:
    """Count connections 0 <-> x in the dual bond model, batched.

    Samples ``n_samples`` independent Bernoulli(1 - p) bond configurations
    on the site box ``[-M, M]^2`` and counts, for every displacement, the
    samples in which the origin and the displaced site share an open
    cluster.

    Returns:
        Integer array of shape ``(len(displacements), n_batches)``; batch
        sums partition the samples evenly (up to remainder in the last).
    """
    q = 1.0 - p
    m = box_half_width
    size = 2 * m + 1
    grid_size = 2 * size - 1
    for dx, dy in displacements:
        if abs(dx) > m or abs(dy) > m:
            raise ValueError(f"displacement {(dx, dy)} outside box of half-width {m}")
    rng = np.random.Generator(np.random.Philox(seed))
    counts = np.zeros((len(displacements), n_batches), dtype=np.int64)
    origin = (2 * m, 2 * m)
    targets = [(2 * (dx + m), 2 * (dy + m)) for dx, dy in displacements]
    edges = np.linspace(0, n_samples, n_batches + 1).astype(int)
    for b in range(n_batches):
        remaining = edges[b + 1] - edges[b]
        while remaining > 0:
            n = min(chunk, remaining)
            grid = np.zeros((n, grid_size, grid_size), dtype=bool)
            grid[:, ::2, ::2] = True
            grid[:, 1::2, ::2] = rng.random((n, size - 1, size)) < q
            grid[:, ::2, 1::2] = rng.random((n, size, size - 1)) < q
            labels, _ = ndimage.label(grid, structure=_BATCH_STRUCTURE)
            lab_origin = labels[:, origin[0], origin[1]]
            for i, (tx, ty) in enumerate(targets):
                counts[i, b] += int(np.count_nonzero(labels[:, tx, ty] == lab_origin))
            remaining -= n
    return counts


@dataclass(frozen=True)
class ConnectivityEstimate:
    """Monte Carlo estimate of a dual two-point connection probability."""

    p: float
    displacement: tuple[int, int]
    probability: float
    stderr: float
    n_samples: int
    n_connected: int
    box_half_width: int
    seed: int


def estimate_connectivity(
    p: float,
    displacement: tuple[int, int],
    box_half_width: int,
    n_samples: int,
    seed: int,
) -> ConnectivityEstimate:
    """Estimate ``P(0 <-> x)`` in the dual model by direct sampling.

    Args:
        p: Primal bond density in ``(1/2, 1)``; the dual density is 1 - p.
        displacement: Integer target ``x`` (dual lattice displacement).
        box_half_width: Truncation box half-width; must be at least twice
            the Euclidean length of ``x``.
        n_samples: At least 100 independent configurations.
        seed: RNG seed.

    Returns:
        The estimate with a binomial standard error.
    """
    if not 0.5 < p < 1.0:
        raise ValueError(f"p={p!r} outside (1/2, 1)")
    if n_samples < 100:
        raise ValueError(f"n_samples={n_samples} too small (need >= 100)")
    norm = math.hypot(*displacement)
    if norm == 0:
        raise ValueError("displacement must be nonzero")
    if box_half_width < 2 * norm:
        raise ValueError(
            f"box_half_width {box_half_width} below twice |x| = {2 * norm:.2f}"
        )
    counts = _connection_counts(
        p, [tuple(displacement)], box_half_width, n_samples, seed
    )
    n_connected = int(counts.sum())
    phat = n_connected / n_samples
    stderr = math.sqrt(max(phat * (1 - phat), 1e-300) / n_samples)
    return ConnectivityEstimate(
        p=p,
        displacement=tuple(displacement),
        probability=phat,
        stderr=stderr,
        n_samples=n_samples,
        n_connected=n_connected,
        box_half_width=box_half_width,
        seed=seed,
    )


@dataclass(frozen=True)
class TauEstimate:
    """Decay-rate estimate along one lattice direction."""

    p: float
    primitive: tuple[int, int]
    direction: tuple[float, float]
    value: float
    stderr: float
    step_counts: tuple[int, ...]
    step_probabilities: tuple[float, ...]
    n_samples: int
    box_half_width: int
    seed: int


def _slope_of_decay(lengths: np.ndarray, probs: np.ndarray) -> float:
    """Least-squares slope of -log P against distance (intercept free)."""
    return float(np.polyfit(lengths, -np.log(probs), 1)[0])


def _tau_from_counts(
    counts: np.ndarray,
    lengths: np.ndarray,
    n_samples: int,
    n_batches: int,
) -> tuple[float, float, np.ndarray]:
    """Point estimate, delete-one-batch jackknife stderr, and probabilities.

    Raises:
        ValueError: If any step has zero observed connections.
    """
    totals = counts.sum(axis=1)
    if (totals == 0).any():
        bad = int(np.argmax(totals == 0))
        raise ValueError(
            f"zero observed connectivity at distance {lengths[bad]:.3f}; "
            "reduce the step range or increase n_samples"
        )
    probs = totals / n_samples
    value = _slope_of_decay(lengths, probs)
    edges = np.linspace(0, n_samples, n_batches + 1).astype(int)
    batch_sizes = np.diff(edges)
    replicates = []
    for b in range(n_batches):
        loo = totals - counts[:, b]
        loo_n = n_samples - batch_sizes[b]
        if (loo == 0).any():
            raise ValueError(
                "zero connectivity in a jackknife replicate; increase n_samples"
            )
        replicates.append(_slope_of_decay(lengths, loo / loo_n))
    reps = np.array(replicates)
    stderr = math.sqrt((n_batches - 1) / n_batches * ((reps - reps.mean()) ** 2).sum())
    return value, stderr, probs


def estimate_tau(
    p: float,
    direction: tuple[int, int],
    n_samples: int,
    seed: int,
    step_counts: tuple[int, ...] | None = None,
    box_half_width: int | None = None,
    n_batches: int = 16,
) -> TauEstimate:
    """Estimate the decay norm at a primitive lattice direction.

    Connection probabilities are measured at ``k * direction`` for each
    step count ``k`` and the norm value (per unit Euclidean length) is the
    slope of ``-log P`` against distance.  The standard error comes from a
    delete-one jackknife over ``n_batches`` sample batches.

    Args:
        p: Primal bond density.
        direction: Nonzero primitive integer vector (coprime components).
        n_samples: Configurations shared by all step counts (>= 100).
        seed: RNG seed.
        step_counts: Increasing positive multiples of the direction to
            measure; default ``1..max(2, floor(10 / |direction|))``.
        box_half_width: Truncation box; default twice the largest
            displacement length, rounded up.
        n_batches: Jackknife batch count.

    Raises:
        ValueError: On invalid parameters or zero observed connectivity.
    """
    if not 0.5 < p < 1.0:
        raise ValueError(f"p={p!r} outside (1/2, 1)")
    if n_samples < 100:
        raise ValueError(f"n_samples={n_samples} too small (need >= 100)")
    dx, dy = direction
    if (dx, dy) == (0, 0) or math.gcd(abs(dx), abs(dy)) != 1:
        raise ValueError(f"direction {direction} is not a primitive vector")
    norm = math.hypot(dx, dy)
    if step_counts is None:
        step_counts = tuple(range(1, max(2, int(10 / norm)) + 1))
    step_counts = tuple(int(k) for k in step_counts)
    if len(step_counts) < 2 or any(k <= 0 for k in step_counts) or sorted(
        set(step_counts)
    ) != list(step_counts):
        raise ValueError(f"step_counts {step_counts} must be increasing positives")
    displacements = [(k * dx, k * dy) for k in step_counts]
    max_len = step_counts[-1] * norm
    if box_half_width is None:
        box_half_width = int(math.ceil(2 * max_len))
    if box_half_width < 2 * max_len:
        raise ValueError(
            f"box_half_width {box_half_width} below twice the largest "
            f"displacement length {max_len:.2f}"
        )
    counts = _connection_counts(
        p, displacements, box_half_width, n_samples, seed, n_batches=n_batches
    )
    lengths = np.array(step_counts, dtype=float) * norm
    value, stderr, probs = _tau_from_counts(counts, lengths, n_samples, n_batches)
    return TauEstimate(
        p=p,
        primitive=(dx, dy),
        direction=(dx / norm, dy / norm),
        value=value,
        stderr=stderr,
        step_counts=step_counts,
        step_probabilities=tuple(float(v) for v in probs),
        n_samples=n_samples,
        box_half_width=box_half_width,
        seed=seed,
    )


def calibrate_grid(
    p: float,
    n_samples: int,
    seed: int,
    out_path=None,
    step_cap: int | None = None,
    n_batches: int = 16,
) -> dict:
    """Estimate the decay norm on the full 96-direction grid.

    All (direction, step) cells share one stream of sampled configurations
    on a common box, so a single labeling pass per chunk serves every
    measurement.  First-octant estimates are extended to the remaining
    octants by lattice symmetry.

    Args:
        p: Primal bond density.
        n_samples: Configurations (each cell sees all of them).
        seed: RNG seed.
        out_path: Optional JSON destination for the calibration artifact.
        step_cap: Maximum total displacement length; default from a small
            pilot run so the farthest cell keeps a measurable probability.
        n_batches: Jackknife batch count.

    Returns:
        The calibration artifact dictionary.
    """
    if not 0.5 < p < 1.0:
        raise ValueError(f"p={p!r} outside (1/2, 1)")
    if step_cap is None:
        pilot = _connection_counts(
            p, [(1, 0), (2, 0), (3, 0), (4, 0)], 8, 4000, seed + 1
        )
        totals = pilot.sum(axis=1)
        if (totals == 0).any():
            step_cap = 4
        else:
            lengths = np.array([1.0, 2.0, 3.0, 4.0])
            rough = _slope_of_decay(lengths, totals / 4000)
            step_cap = int(np.clip(math.floor(7.5 / max(rough, 1e-6)), 4, 20))

    step_lists = []
    for qx, qy in PRIMITIVE_DIRECTIONS:
        norm = math.hypot(qx, qy)
        kmax = max(2, int(step_cap / norm))
        step_lists.append(tuple(range(1, kmax + 1)))
    max_len = max(
        steps[-1] * math.hypot(*vec)
        for vec, steps in zip(PRIMITIVE_DIRECTIONS, step_lists)
    )
    box_half_width = int(math.ceil(2 * max_len))

    displacements = []
    owners = []
    for d, ((qx, qy), steps) in enumerate(zip(PRIMITIVE_DIRECTIONS, step_lists)):
        for k in steps:
            displacements.append((k * qx, k * qy))
            owners.append(d)
    counts = _connection_counts(
        p, displacements, box_half_width, n_samples, seed, n_batches=n_batches
    )

    octant_values = []
    octant_stderr = []
    owners_arr = np.array(owners)
    for d, ((qx, qy), steps) in enumerate(zip(PRIMITIVE_DIRECTIONS, step_lists)):
        rows = counts[owners_arr == d]
        lengths = np.array(steps, dtype=float) * math.hypot(qx, qy)
        value, stderr, _ = _tau_from_counts(rows, lengths, n_samples, n_batches)
        octant_values.append(value)
        octant_stderr.append(stderr)

    prims, units = full_direction_grid()
    rep_of: dict[tuple[int, int], int] = {}
    for d, base in enumerate(PRIMITIVE_DIRECTIONS):
        for img in symmetry_orbit(base):
            rep_of[img] = d
    tau_values = [octant_values[rep_of[v]] for v in prims]
    stderrs = [octant_stderr[rep_of[v]] for v in prims]

    artifact = {
        "kind": CALIBRATION_KIND,
        "version": CALIBRATION_VERSION,
        "p": p,
        "seed": seed,
        "samples": n_samples,
        "n_batches": n_batches,
        "step_cap": step_cap,
        "box_half_width": box_half_width,
        "primitives": [list(v) for v in prims],
        "directions": [[float(u[0]), float(u[1])] for u in units],
        "tau": [float(v) for v in tau_values],
        "stderr": [float(s) for s in stderrs],
    }
    if out_path is not None:
        save_calibration(artifact, out_path)
    return artifact


def save_calibration(artifact: dict, path) -> None:
    """Write a calibration artifact as deterministic pretty JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(artifact, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_calibration(path) -> dict:
    """Read and validate a calibration artifact.

    Raises:
        ValueError: If the file is not a calibration artifact or has an
            unsupported version.
    """
    with open(path, "r", encoding="utf-8") as fh:
        artifact = json.load(fh)
    if artifact.get("kind") != CALIBRATION_KIND:
        raise ValueError(f"{path} is not a decay-norm calibration artifact")
    if artifact.get("version") != CALIBRATION_VERSION:
        raise ValueError(
            f"{path} has unsupported calibration version {artifact.get('version')}"
        )
    n = len(artifact["directions"])
    if not (len(artifact["tau"]) == len(artifact["stderr"]) == n):
        raise ValueError(f"{path} has inconsistent array lengths")
    return artifact


def packaged_calibration(p: float) -> dict:
    """Load the calibration artifact shipped with the package for density ``p``.

    Artifacts are committed for ``p`` in {0.55, 0.65}; regenerate them with
    ``scripts/calibrate_decay_norms.py``.

    Raises:
        ValueError: If no artifact is shipped for ``p``.
    """
    name = f"tau_p{round(p * 100):03d}.json"
    resource = importlib.resources.files("droplet_lab.data").joinpath(name)
    if not resource.is_file():
        raise ValueError(
            f"no packaged decay-norm calibration for p={p}; "
            "run scripts/calibrate_decay_norms.py or pass an artifact path"
        )
    with importlib.resources.as_file(resource) as path:
        return load_calibration(path)


# ---------------------------------------------------------------------------
# Equilibrium shape


@dataclass(frozen=True)
class WulffShape:
    """The equilibrium shape of a decay norm and derived quantities.

    Attributes:
        vertices: CCW vertex loop of ``W`` (halfplane intersection of the
            sampled norm values).
        unit_vertices: ``W`` rescaled to unit area (``K``).
        unit_boundary_energy: Boundary energy of ``K`` under the norm.
    """

    vertices: np.ndarray
    unit_vertices: np.ndarray
    unit_boundary_energy: float


def _octant_counts(units: np.ndarray) -> np.ndarray:
    ang = np.mod(np.arctan2(units[:, 1], units[:, 0]), 2 * np.pi)
    octant = np.floor(ang / (np.pi / 4)).astype(int) % 8
    return np.bincount(octant, minlength=8)


def build_wulff(directions, tau_values: np.ndarray | None = None) -> WulffShape:
    """Construct the equilibrium shape from sampled norm values.

    Args:
        directions: ``(n, 2)`` array of nonzero direction vectors
            (normalized internally), or a :class:`DecayNorm`, in which
            case its samples are used and ``tau_values`` must be omitted.
        tau_values: Norm values at the corresponding unit directions; all
            strictly positive.

    Returns:
        The shape with its unit-area rescaling and boundary energy.

    Raises:
        ValueError: On non-positive values or fewer than 8 directions in
            some octant.
    """
    if tau_values is None:
        if not hasattr(directions, "values"):
            raise ValueError("tau_values required unless a DecayNorm is given")
        tau_values = directions.values
        directions = directions.directions
    dirs = np.asarray(directions, dtype=np.float64)
    vals = np.asarray(tau_values, dtype=np.float64)
    if dirs.ndim != 2 or dirs.shape[1] != 2 or len(dirs) != len(vals):
        raise ValueError("directions must be (n, 2) with matching tau values")
    norms = np.linalg.norm(dirs, axis=1)
    if (norms == 0).any():
        raise ValueError("zero direction vector")
    units = dirs / norms[:, None]
    if (vals <= 0).any():
        raise ValueError("decay-norm values must be strictly positive")
    counts = _octant_counts(units)
    if counts.min() < 8:
        raise ValueError(
            f"need at least 8 directions per octant, got counts {counts.tolist()}"
        )
    halfspaces = np.column_stack((units, -vals))
    hs = HalfspaceIntersection(halfspaces, np.zeros(2))
    verts = hs.intersections
    verts = np.unique(np.round(verts, 10), axis=0)
    ang = np.arctan2(verts[:, 1], verts[:, 0])
    order = np.argsort(ang)
    verts = verts[order]
    area = hull_area(verts)
    unit_verts = verts / math.sqrt(area)
    energy = _boundary_energy_of(verts, unit_verts)
    return WulffShape(
        vertices=verts,
        unit_vertices=unit_verts,
        unit_boundary_energy=energy,
    )


def _boundary_energy_of(shape_verts: np.ndarray, polygon: np.ndarray) -> float:
    """Boundary energy of an open polygon loop under the support norm."""
    edges = np.roll(polygon, -1, axis=0) - polygon
    return float(support_function(shape_verts, edges).sum())


def wulff_functional(norm, polygon_vertices: np.ndarray) -> float:
    """Boundary energy of a closed polygon under a norm.

    The energy is the sum over edges of the norm of the edge vector
    (using homogeneity).  For a norm symmetric under quarter turns this
    equals the line integral of the norm of the outward unit normal.

    Args:
        norm: Callable mapping ``(..., 2)`` arrays to lengths.
        polygon_vertices: Closed vertex loop (first point repeated last).

    Raises:
        ValueError: If the polygon is not closed or has too few vertices.
    """
    poly = np.asarray(polygon_vertices, dtype=np.float64)
    if len(poly) < 4 or not np.array_equal(poly[0], poly[-1]):
        raise ValueError(
            "expected a closed polygon (first vertex repeated at the end)"
        )
    edges = np.diff(poly, axis=0)
    return float(np.asarray(norm(edges)).sum())


def polar_point(shape: WulffShape, direction: tuple[float, float]) -> np.ndarray:
    """The point of the shape boundary supporting a given direction.

    Returns the vertex ``t`` of ``W`` maximizing ``<t, direction>``, so
    that the maximum equals the norm of ``direction`` (up to polygonal
    tolerance).  Ties (a boundary edge orthogonal to ``direction``)
    resolve to the first vertex in the CCW order; the result depends only
    on the ray of ``direction``.
    """
    u = np.asarray(direction, dtype=np.float64)
    if np.linalg.norm(u) == 0:
        raise ValueError("direction must be nonzero")
    scores = shape.vertices @ u
    return shape.vertices[int(np.argmax(scores))].copy()


class DecayNorm:
    """A norm on the plane interpolated from sampled direction values.

    Evaluation is the support function of the equilibrium shape built from
    the samples, which is exactly homogeneous, convex, and symmetric under
    whatever symmetry the sample grid has.

    Attributes:
        directions: The sampled unit directions, ``(n, 2)``.
        values: The sampled norm values.
        shape: The associated :class:`WulffShape`.
    """

    def __init__(self, directions: np.ndarray, values: np.ndarray):
        self.directions = np.asarray(directions, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64)
        self.shape = build_wulff(self.directions, self.values)

    @classmethod
    def from_calibration(cls, source) -> "DecayNorm":
        """Build from an artifact dictionary or a JSON path."""
        if isinstance(source, (str, Path)):
            source = load_calibration(source)
        return cls(np.asarray(source["directions"]), np.asarray(source["tau"]))

    def __call__(self, x) -> np.ndarray | float:
        arr = np.asarray(x, dtype=np.float64)
        out = support_function(self.shape.vertices, arr)
        if arr.ndim == 1:
            return float(out)
        return out

    def polar_point(self, direction: tuple[float, float]) -> np.ndarray:
        return polar_point(self.shape, direction)

    @property
    def unit_boundary_energy(self) -> float:
        return self.shape.unit_boundary_energy
