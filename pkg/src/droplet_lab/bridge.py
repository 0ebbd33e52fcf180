"""Wrapped Brownian-bridge comparator for droplet boundary roughness.

A discrete Brownian bridge is rescaled and wrapped around a circle of
radius ``l``: point ``k`` of the contour sits at angle ``2*pi*k/n`` and
radius ``l + sqrt(l) * B(k/n)``.  The maximal local roughness (MLR) of
the resulting closed contour grows like ``l**(1/3) * log(l)**(2/3)``,
the benchmark rate that lattice droplet boundaries are compared
against.  The contour is measured with the same geometry kernel as the
lattice droplets, so the two pipelines share one MLR implementation.

Scan results are deterministic: replica seeds are derived from the base
seed and the (scale, replica) indices, so a fixed seed reproduces the
table bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _stats

from .geometry import mlr

__all__ = [
    "BridgePath",
    "BridgeScanResult",
    "BridgeScanRow",
    "WrappedContour",
    "bridge_mlr_scan",
    "roughness_scale",
    "sample_bridge",
    "wrap",
]

#: Contour points per unit of wrapping radius: ``wrap`` requires
#: ``n >= RESOLUTION_FACTOR * ceil(l)`` so that polygonal sag, bounded by
#: ``(pi*l/n)**2 / (2*l)``, stays far below the ``l**(1/3)`` roughness
#: signal.
RESOLUTION_FACTOR = 64


@dataclass(frozen=True)
class BridgePath:
    """A discrete Brownian bridge on [0, 1], pinned to zero at both ends.

    Attributes:
        n_steps: Number of Gaussian increments ``n``.
        values: Bridge heights at times ``k/n`` for ``k = 0..n``; the
            first and last entries are exactly zero.
        seed: Seed the path was drawn from.
    """

    n_steps: int
    values: np.ndarray
    seed: int


@dataclass(frozen=True)
class WrappedContour:
    """A closed planar contour obtained by wrapping a bridge on a circle.

    Attributes:
        points: Array of shape ``(n + 1, 2)``; the last row repeats the
            first, closing the contour.
        l: Radius of the carrier circle.
    """

    points: np.ndarray
    l: float


def sample_bridge(n: int, seed: int) -> BridgePath:
    """Draw a discrete Brownian bridge with ``n`` steps of variance ``1/n``.

    A Gaussian random walk ``W`` with independent ``N(0, 1/n)`` steps is
    pinned at both ends by the bridge transform ``B_t = W_t - t * W_1``,
    evaluated at the grid times ``t = k/n``.  The endpoints come out
    exactly zero and ``Var(B_t) = t * (1 - t)`` up to discretization.

    Args:
        n: Number of steps; at least 2.
        seed: Seed for the Gaussian draws; the result is a deterministic
            function of ``(n, seed)``.

    Returns:
        The sampled ``BridgePath``.

    Raises:
        ValueError: If ``n < 2``.
    """
    if n < 2:
        raise ValueError(f"bridge needs at least 2 steps, got n={n}")
    rng = np.random.default_rng(seed)
    steps = rng.normal(0.0, 1.0 / math.sqrt(n), size=n)
    walk = np.concatenate(([0.0], np.cumsum(steps)))
    times = np.arange(n + 1, dtype=np.float64) / n
    values = walk - times * walk[-1]
    return BridgePath(n_steps=n, values=values, seed=int(seed))


def wrap(bridge: BridgePath, l: float) -> WrappedContour:
    """Wrap a rescaled bridge around a circle of radius ``l``.

    Contour point ``k`` (for ``k = 0..n-1``) sits at angle ``2*pi*k/n``
    and radius ``l + sqrt(l) * values[k]``; the first point is repeated
    at the end so the polyline is closed exactly.

    Args:
        bridge: The bridge to wrap.
        l: Radius of the carrier circle; at least 2.

    Returns:
        The closed ``WrappedContour``.

    Raises:
        ValueError: If ``l < 2``, if the bridge resolution is below
            ``RESOLUTION_FACTOR * ceil(l)`` points, or if the rescaled
            bridge dips so far that some radius would be nonpositive.
    """
    if l < 2:
        raise ValueError(f"wrapping radius must be at least 2, got l={l}")
    n = bridge.n_steps
    required = RESOLUTION_FACTOR * math.ceil(l)
    if n < required:
        raise ValueError(
            f"resolution too low: n={n} < {RESOLUTION_FACTOR}*ceil(l)={required}"
        )
    radii = l + math.sqrt(l) * bridge.values[:-1]
    if np.any(radii <= 0.0):
        raise ValueError(
            "bridge dips to a nonpositive radius; increase l or resample"
        )
    angles = (2.0 * np.pi / n) * np.arange(n, dtype=np.float64)
    points = np.stack((radii * np.cos(angles), radii * np.sin(angles)), axis=1)
    points = np.vstack((points, points[:1]))
    return WrappedContour(points=points, l=float(l))


def roughness_scale(l) -> np.ndarray | float:
    """The benchmark growth rate ``l**(1/3) * log(l)**(2/3)``.

    Accepts a scalar or array with all entries greater than 1.
    """
    arr = np.asarray(l, dtype=np.float64)
    out = np.cbrt(arr) * np.log(arr) ** (2.0 / 3.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BridgeScanRow:
    """Mean wrapped-bridge MLR at one scale.

    Attributes:
        l: Wrapping radius.
        n_steps: Bridge resolution used (``RESOLUTION_FACTOR * ceil(l)``).
        replicas: Number of independent bridges averaged.
        mean_mlr: Sample mean of the contour MLR.
        stderr: Standard error of that mean.
    """

    l: float
    n_steps: int
    replicas: int
    mean_mlr: float
    stderr: float


@dataclass(frozen=True)
class BridgeScanResult:
    """Scan table plus the fitted scaling exponent.

    ``slope`` is the least-squares slope of ``log(mean_mlr)`` against
    ``log(roughness_scale(l))``; a slope of 1 means the means grow
    exactly at the benchmark rate over the scanned window.

    Attributes:
        rows: One ``BridgeScanRow`` per scale, in increasing order.
        slope: Fitted log-log slope against the benchmark rate.
        slope_stderr: Standard error of the slope.
        slope_ci: 95% confidence interval for the slope (t-based;
            ``(nan, nan)`` when only two scales leave no residual
            degrees of freedom).
        intercept: Fitted log-log intercept (log of the prefactor).
    """

    rows: tuple[BridgeScanRow, ...]
    slope: float
    slope_stderr: float
    slope_ci: tuple[float, float]
    intercept: float


def _replica_seed(seed: int, scale_index: int, replica: int) -> int:
    """Deterministic per-replica seed derived from the base seed."""
    ss = np.random.SeedSequence([seed, scale_index, replica])
    return int(ss.generate_state(1)[0])


def bridge_mlr_scan(l_list, replicas: int, seed: int) -> BridgeScanResult:
    """Measure mean wrapped-bridge MLR across scales and fit the growth.

    For each scale ``l`` the bridge resolution is
    ``RESOLUTION_FACTOR * ceil(l)``; ``replicas`` independent bridges are
    wrapped and their contour MLRs averaged.  The fitted slope compares
    the growth of the means with the benchmark rate
    ``l**(1/3) * log(l)**(2/3)`` on log-log axes.

    Args:
        l_list: Strictly increasing scales, each at least 2; at least
            two scales are needed for the fit.
        replicas: Independent bridges per scale; at least 30.
        seed: Base seed; the full result is a deterministic function of
            the arguments.

    Returns:
        A ``BridgeScanResult`` with one row per scale and the fit.

    Raises:
        ValueError: If the scales are not strictly increasing, any scale
            is below 2, fewer than two scales are given, ``replicas`` is
            below 30, or ``seed`` is negative.
    """
    scales = [float(v) for v in l_list]
    if len(scales) < 2:
        raise ValueError("need at least two scales to fit a slope")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly increasing")
    if scales[0] < 2:
        raise ValueError(f"scales must be at least 2, got {scales[0]}")
    if replicas < 30:
        raise ValueError(f"need at least 30 replicas, got {replicas}")
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")

    rows = []
    for scale_index, l in enumerate(scales):
        n = RESOLUTION_FACTOR * math.ceil(l)
        values = np.empty(replicas, dtype=np.float64)
        for replica in range(replicas):
            path = sample_bridge(n, _replica_seed(seed, scale_index, replica))
            values[replica] = mlr(wrap(path, l).points)
        rows.append(
            BridgeScanRow(
                l=l,
                n_steps=n,
                replicas=replicas,
                mean_mlr=float(values.mean()),
                stderr=float(values.std(ddof=1) / math.sqrt(replicas)),
            )
        )

    x = np.log(roughness_scale(np.array(scales)))
    y = np.log(np.array([row.mean_mlr for row in rows]))
    if len(scales) == 2:
        slope = float((y[1] - y[0]) / (x[1] - x[0]))
        intercept = float(y[0] - slope * x[0])
        slope_stderr = float("nan")
        ci = (float("nan"), float("nan"))
    else:
        fit = _stats.linregress(x, y)
        slope = float(fit.slope)
        intercept = float(fit.intercept)
        slope_stderr = float(fit.stderr)
        df = len(scales) - 2
        half = float(_stats.t.ppf(0.975, df) * fit.stderr)
        ci = (slope - half, slope + half)
    return BridgeScanResult(
        rows=tuple(rows),
        slope=slope,
        slope_stderr=slope_stderr,
        slope_ci=ci,
        intercept=intercept,
    )
