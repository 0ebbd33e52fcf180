"""Shared fixtures and configuration builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from droplet_lab.lattice import BondConfig, primal_partner, sample_config
from droplet_lab import exterior_circuit


def config_all_primal_open(box_half_width: int, p: float = 0.55) -> BondConfig:
    """A configuration with every primal bond open (every dual bond closed)."""
    n = 2 * box_half_width
    return BondConfig(
        box_half_width=box_half_width,
        p=p,
        seed=0,
        h_open=np.ones((n, n + 1), dtype=bool),
        v_open=np.ones((n + 1, n), dtype=bool),
    )


def config_all_primal_closed(box_half_width: int, p: float = 0.55) -> BondConfig:
    """A configuration with every primal bond closed (every dual bond open)."""
    n = 2 * box_half_width
    return BondConfig(
        box_half_width=box_half_width,
        p=p,
        seed=0,
        h_open=np.zeros((n, n + 1), dtype=bool),
        v_open=np.zeros((n + 1, n), dtype=bool),
    )


def config_with_dual_open(
    box_half_width: int,
    dual_bonds,
    p: float = 0.55,
) -> BondConfig:
    """All primal bonds open except the partners of the requested dual bonds.

    Args:
        box_half_width: Box parameter L.
        dual_bonds: Iterable of dual bonds, each a pair of adjacent dual
            bases ``((a, b), (a2, b2))``.

    Returns:
        A configuration whose open dual bonds are exactly ``dual_bonds``.
    """
    cfg = config_all_primal_open(box_half_width, p)
    h_open = cfg.h_open.copy()
    v_open = cfg.v_open.copy()
    lbox = box_half_width
    for dual in dual_bonds:
        (x1, y1), (x2, y2) = primal_partner(dual)
        if y1 == y2:  # horizontal primal bond
            h_open[x1 + lbox, y1 + lbox] = False
        else:
            v_open[x1 + lbox, y1 + lbox] = False
    return BondConfig(
        box_half_width=box_half_width,
        p=cfg.p,
        seed=cfg.seed,
        h_open=h_open,
        v_open=v_open,
    )


def rectangle_dual_bonds(x0: int, y0: int, x1: int, y1: int):
    """Dual bonds of the axis rectangle with corner bases (x0,y0)..(x1,y1).

    The rectangle encloses primal sites x0 < x <= x1, y0 < y <= y1.
    Bonds are returned as canonical dual-base pairs.
    """
    bonds = []
    for a in range(x0, x1):
        bonds.append(((a, y0), (a + 1, y0)))
        bonds.append(((a, y1), (a + 1, y1)))
    for b in range(y0, y1):
        bonds.append(((x0, b), (x0, b + 1)))
        bonds.append(((x1, b), (x1, b + 1)))
    return bonds


@pytest.fixture(scope="session")
def sampled_droplets():
    """~60 genuine droplets sampled at p = 0.55 in a box of half-width 24."""
    out = []
    seed = 0
    while len(out) < 60 and seed < 4000:
        cfg = sample_config(24, 0.55, seed=seed)
        rec = exterior_circuit(cfg)
        if rec is not None:
            out.append(rec)
        seed += 1
    assert len(out) >= 60, "droplet yield unexpectedly low"
    return out
