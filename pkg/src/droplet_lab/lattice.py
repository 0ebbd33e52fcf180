"""Finite-box bond lattice: Bernoulli sampling and primal/dual bond mapping.

Configurations live on the square box ``[-L, L]^2`` of the integer lattice,
centered at the origin (the box is chosen so that circuits *around the
origin* are the natural query).  Bonds joining a site inside the box to one
outside are treated as absent.

Coordinate conventions used throughout the package
--------------------------------------------------

* Primal site ``(x, y)`` with ``-L <= x, y <= L`` is stored at array index
  ``[x + L, y + L]``.
* Horizontal bond ``(x, y)-(x+1, y)`` lives in the plane ``h_open`` of shape
  ``(2L, 2L+1)`` at index ``[x + L, y + L]``.
* Vertical bond ``(x, y)-(x, y+1)`` lives in the plane ``v_open`` of shape
  ``(2L+1, 2L)`` at index ``[x + L, y + L]``.
* A dual site is written by its integer *base* ``(a, b)`` and represents the
  plane point ``(a + 1/2, b + 1/2)``.  Dual bases range over
  ``-L-1 <= a, b <= L`` and are stored at index ``[a + L + 1, b + L + 1]``
  on a ``(2L+2) x (2L+2)`` grid.
* Each in-box primal bond crosses exactly one dual bond (its perpendicular
  bisector) and vice versa:

  - horizontal ``(x, y)-(x+1, y)``  <->  dual vertical ``(x, y-1)-(x, y)``;
  - vertical  ``(x, y)-(x, y+1)``  <->  dual horizontal ``(x-1, y)-(x, y)``.

  A dual bond is *open* precisely when its primal partner is closed, so the
  dual configuration is Bernoulli bond percolation at density ``1 - p``.

Sampling is deterministic given ``(L, p, seed)``: a counter-based Philox
generator keyed by the seed draws one uniform array for the horizontal plane
(C order over ``(x_index, y_index)``) followed by one for the vertical
plane.  Identical inputs therefore give bit-identical configurations on any
platform.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

Site = tuple[int, int]
BondT = tuple[Site, Site]

SNAPSHOT_MAGIC = b"DLAB"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class BondConfig:
    """A sampled percolation state on the box ``[-L, L]^2``.

    Attributes:
        box_half_width: The half-width ``L`` of the box.
        p: Open-bond density in the supercritical range ``(1/2, 1)``.
        seed: The sampling seed (``0 <= seed < 2**64``).
        h_open: Boolean plane of horizontal bonds, shape ``(2L, 2L+1)``.
        v_open: Boolean plane of vertical bonds, shape ``(2L+1, 2L)``.
    """

    box_half_width: int
    p: float
    seed: int
    h_open: np.ndarray
    v_open: np.ndarray

    def n_bonds(self) -> int:
        """Number of bonds fully inside the box."""
        return self.h_open.size + self.v_open.size

    def n_open(self) -> int:
        """Number of open bonds."""
        return int(self.h_open.sum()) + int(self.v_open.sum())


def _validate_density(p: float) -> None:
    if not 0.5 < p < 1.0:
        raise ValueError(
            f"bond density p={p!r} outside the supercritical range (1/2, 1)"
        )


def _validate_seed(seed: int) -> None:
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed {seed!r} outside [0, 2**64)")


def sample_config(box_half_width: int, p: float, seed: int) -> BondConfig:
    """Sample an i.i.d. Bernoulli(p) bond configuration.

    Args:
        box_half_width: Half-width ``L >= 1`` of the box ``[-L, L]^2``.
        p: Open probability, strictly inside ``(1/2, 1)``.
        seed: Nonnegative 64-bit seed; fixes the configuration exactly.

    Returns:
        The sampled :class:`BondConfig`.

    Raises:
        ValueError: If ``p`` is outside ``(1/2, 1)``, ``box_half_width < 1``,
            or the seed is out of range.
    """
    if box_half_width < 1:
        raise ValueError(f"box_half_width must be >= 1, got {box_half_width}")
    _validate_density(p)
    _validate_seed(seed)
    n = 2 * box_half_width
    rng = np.random.Generator(np.random.Philox(seed))
    h_open = rng.random((n, n + 1)) < p
    v_open = rng.random((n + 1, n)) < p
    return BondConfig(box_half_width, float(p), int(seed), h_open, v_open)


# ---------------------------------------------------------------------------
# Bond bookkeeping


def canonical_bond(a: Site, b: Site) -> BondT:
    """Return the bond ``{a, b}`` with its endpoints in lexicographic order.

    Raises:
        ValueError: If the endpoints are not nearest neighbors.
    """
    if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
        raise ValueError(f"{a}-{b} is not a nearest-neighbor bond")
    return (a, b) if a <= b else (b, a)


def bond_in_box(bond: BondT, box_half_width: int) -> bool:
    """True iff both endpoints lie in ``[-L, L]^2``."""
    lo, hi = -box_half_width, box_half_width
    (x1, y1), (x2, y2) = bond
    return lo <= x1 <= hi and lo <= y1 <= hi and lo <= x2 <= hi and lo <= y2 <= hi


def iter_bonds(box_half_width: int):
    """Yield every in-box bond in the documented sampling order.

    Horizontal bonds first, C order over ``(x_index, y_index)``, then
    vertical bonds in the same order.  Each bond is yielded in canonical
    (lexicographic) endpoint order.
    """
    lo, hi = -box_half_width, box_half_width
    for x in range(lo, hi):
        for y in range(lo, hi + 1):
            yield ((x, y), (x + 1, y))
    for x in range(lo, hi + 1):
        for y in range(lo, hi):
            yield ((x, y), (x, y + 1))


def is_open(config: BondConfig, bond: BondT) -> bool:
    """State of an in-box primal bond.

    Raises:
        ValueError: If the bond is not fully inside the box.
    """
    bond = canonical_bond(*bond)
    if not bond_in_box(bond, config.box_half_width):
        raise ValueError(f"bond {bond} not inside the box")
    (x1, y1), (x2, y2) = bond
    lxy = config.box_half_width
    if y1 == y2:  # horizontal
        return bool(config.h_open[x1 + lxy, y1 + lxy])
    return bool(config.v_open[x1 + lxy, y1 + lxy])


def dual_bond(bond: BondT) -> BondT:
    """Dual bond (by dual-site bases) crossing the given primal bond.

    The dual bond is the perpendicular bisector of the primal bond:
    horizontal ``(x,y)-(x+1,y)`` maps to the dual vertical bond with bases
    ``(x, y-1)-(x, y)``; vertical ``(x,y)-(x,y+1)`` maps to the dual
    horizontal bond with bases ``(x-1, y)-(x, y)``.

    Returns:
        The dual bond as a canonical pair of dual-site bases.
    """
    (x1, y1), (x2, y2) = canonical_bond(*bond)
    if y1 == y2:  # horizontal primal -> vertical dual
        return ((x1, y1 - 1), (x1, y1))
    return ((x1 - 1, y1), (x1, y1))


def primal_partner(dual: BondT) -> BondT:
    """Primal bond crossed by a dual bond given by its bases.

    Inverse of :func:`dual_bond` (the reverse ``(1/2, 1/2)`` offset): dual
    vertical ``(a, b)-(a, b+1)`` comes from primal horizontal
    ``(a, b+1)-(a+1, b+1)``; dual horizontal ``(a, b)-(a+1, b)`` comes from
    primal vertical ``(a+1, b)-(a+1, b+1)``.
    """
    (a1, b1), (a2, b2) = canonical_bond(*dual)
    if a1 == a2:  # vertical dual -> horizontal primal
        return ((a1, b1 + 1), (a1 + 1, b1 + 1))
    return ((a1 + 1, b1), (a1 + 1, b1 + 1))


def is_dual_open(config: BondConfig, dual: BondT) -> bool:
    """State of a dual bond: open iff its primal partner is closed.

    Raises:
        ValueError: If the primal partner is not fully inside the box.
    """
    return not is_open(config, primal_partner(dual))


def dual_open_planes(config: BondConfig) -> tuple[np.ndarray, np.ndarray]:
    """Dual bond-state planes aligned with the dual-site grid.

    Returns:
        ``(dual_h_open, dual_v_open)`` where entry ``[i, j]`` refers to the
        dual bond with base ``(a, b) = (i - L - 1, j - L - 1)``:

        * ``dual_h_open`` has shape ``(2L+1, 2L+2)`` and holds the state of
          ``(a, b)-(a+1, b)``;
        * ``dual_v_open`` has shape ``(2L+2, 2L+1)`` and holds the state of
          ``(a, b)-(a, b+1)``.

        Entries whose primal partner would leave the box are ``False``
        (absent dual bonds).
    """
    n = 2 * config.box_half_width
    dual_h = np.zeros((n + 1, n + 2), dtype=bool)
    dual_h[:, 1 : n + 1] = ~config.v_open
    dual_v = np.zeros((n + 2, n + 1), dtype=bool)
    dual_v[1 : n + 1, :] = ~config.h_open
    return dual_h, dual_v


# ---------------------------------------------------------------------------
# Expanded grids (shared connectivity engine input)
#
# Bond-lattice connectivity reduces to 4-adjacency site connectivity on a
# doubled grid: cells at even-even positions are lattice sites (always
# occupied), odd-position cells between them are occupied iff the bond is
# open.  Components of the expanded grid restricted to even-even cells are
# exactly the open-bond clusters.


def expanded_primal_grid(config: BondConfig) -> np.ndarray:
    """Doubled occupancy grid of the primal lattice, shape ``(4L+1, 4L+1)``.

    Site ``(x, y)`` occupies cell ``[2(x+L), 2(y+L)]``.
    """
    n = 2 * config.box_half_width
    grid = np.zeros((2 * n + 1, 2 * n + 1), dtype=bool)
    grid[::2, ::2] = True
    grid[1::2, ::2] = config.h_open
    grid[::2, 1::2] = config.v_open
    return grid


def expanded_dual_grid(config: BondConfig) -> np.ndarray:
    """Doubled occupancy grid of the dual lattice, shape ``(4L+3, 4L+3)``.

    Dual base ``(a, b)`` occupies cell ``[2(a+L+1), 2(b+L+1)]``.
    """
    dual_h, dual_v = dual_open_planes(config)
    m = dual_v.shape[0]  # 2L+2 dual sites per axis
    grid = np.zeros((2 * m - 1, 2 * m - 1), dtype=bool)
    grid[::2, ::2] = True
    grid[1::2, ::2] = dual_h
    grid[::2, 1::2] = dual_v
    return grid


# ---------------------------------------------------------------------------
# Binary snapshots
#
# Header: magic "DLAB", version u16, L u32, p f64, seed u64 (little-endian),
# then the two bit planes (horizontal, vertical) packed little-endian.

_HEADER = struct.Struct("<4sHIdQ")


def write_snapshot(config: BondConfig, path) -> None:
    """Write a configuration to the binary snapshot format."""
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                SNAPSHOT_MAGIC,
                SNAPSHOT_VERSION,
                config.box_half_width,
                config.p,
                config.seed,
            )
        )
        fh.write(np.packbits(config.h_open, bitorder="little").tobytes())
        fh.write(np.packbits(config.v_open, bitorder="little").tobytes())


def read_snapshot(path) -> BondConfig:
    """Read a configuration written by :func:`write_snapshot`.

    Raises:
        ValueError: On a bad magic number, version, or truncated payload.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"snapshot {path} truncated")
    magic, version, lbox, p, seed = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"snapshot {path} has bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"snapshot {path} has unsupported version {version}")
    n = 2 * lbox
    h_bits = n * (n + 1)
    v_bits = (n + 1) * n
    body = raw[_HEADER.size :]
    h_bytes = (h_bits + 7) // 8
    v_bytes = (v_bits + 7) // 8
    if len(body) != h_bytes + v_bytes:
        raise ValueError(f"snapshot {path} payload size mismatch")
    h_open = (
        np.unpackbits(
            np.frombuffer(body[:h_bytes], dtype=np.uint8),
            count=h_bits,
            bitorder="little",
        )
        .astype(bool)
        .reshape(n, n + 1)
    )
    v_open = (
        np.unpackbits(
            np.frombuffer(body[h_bytes:], dtype=np.uint8),
            count=v_bits,
            bitorder="little",
        )
        .astype(bool)
        .reshape(n + 1, n)
    )
    return BondConfig(lbox, p, seed, h_open, v_open)
