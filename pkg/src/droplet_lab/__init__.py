"""Monte Carlo laboratory for supercritical planar percolation droplets.

The package samples bond configurations on a finite box, extracts the
exterior open dual circuit around a site (the droplet boundary), and
measures how rough that boundary is relative to its convex hull.  On top
of the raw extraction it provides:

* point-to-point connectivity decay estimation and the associated
  equilibrium (Wulff) shape construction;
* coarse-graining of the hull into a skeleton at a chosen scale, with the
  surrounding annulus and per-side tubes used for confinement audits;
* renewal structure of open paths crossing diagonal strips, including the
  increment-exchange transform used to compare increment statistics;
* a wrapped Brownian bridge comparator for roughness scaling;
* an experiment harness and command-line interface (``droplet-lab``).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .lattice import (
    BondConfig,
    dual_bond,
    is_dual_open,
    is_open,
    primal_partner,
    read_snapshot,
    sample_config,
    write_snapshot,
)
from .circuits import (
    DropletRecord,
    DualCircuit,
    enumerate_all_circuits,
    exterior_circuit,
    interior_area,
    label_dual_clusters,
)
from .geometry import alr, convex_hull, diameters, euclidean_diameter, mlr
from .tau import (
    DecayNorm,
    WulffShape,
    build_wulff,
    calibrate_grid,
    estimate_connectivity,
    estimate_tau,
    load_calibration,
    packaged_calibration,
    polar_point,
    wulff_functional,
)
from .skeleton import (
    AnnulusTube,
    HullSkeleton,
    annulus_and_tubes,
    audit_properties,
    circuit_confined,
    hull_skeleton,
    load_skeleton_constants,
    load_skeleton_corpus,
    scale_params,
    tau_diameter,
)
from .renewal import (
    DEFAULT_DELTA,
    DEFAULT_EPSILON,
    DEFAULT_GAMMA,
    DEFAULT_LAMBDA,
    ReferenceLine,
    RenewalRecord,
    SlabDirection,
    SlabSpec,
    base_center,
    choose_slab_direction,
    end_pinched_connected,
    exchange_adjacent,
    increments,
    irreducibly_connected,
    map_into_wedge,
    regeneration_points,
    renewal_record,
    slab_cluster,
    slab_connected,
    spaced_regeneration_subset,
    tube_confinement_stats,
)

__all__ = [
    "AnnulusTube",
    "BondConfig",
    "DEFAULT_DELTA",
    "DEFAULT_EPSILON",
    "DEFAULT_GAMMA",
    "DEFAULT_LAMBDA",
    "DecayNorm",
    "DropletRecord",
    "DualCircuit",
    "HullSkeleton",
    "ReferenceLine",
    "RenewalRecord",
    "SlabDirection",
    "SlabSpec",
    "WulffShape",
    "__version__",
    "alr",
    "annulus_and_tubes",
    "audit_properties",
    "base_center",
    "build_wulff",
    "calibrate_grid",
    "choose_slab_direction",
    "circuit_confined",
    "convex_hull",
    "diameters",
    "dual_bond",
    "end_pinched_connected",
    "enumerate_all_circuits",
    "estimate_connectivity",
    "estimate_tau",
    "euclidean_diameter",
    "exchange_adjacent",
    "exterior_circuit",
    "hull_skeleton",
    "increments",
    "interior_area",
    "irreducibly_connected",
    "is_dual_open",
    "is_open",
    "label_dual_clusters",
    "load_calibration",
    "load_skeleton_constants",
    "load_skeleton_corpus",
    "map_into_wedge",
    "mlr",
    "packaged_calibration",
    "polar_point",
    "primal_partner",
    "read_snapshot",
    "regeneration_points",
    "renewal_record",
    "sample_config",
    "scale_params",
    "slab_cluster",
    "slab_connected",
    "spaced_regeneration_subset",
    "tube_confinement_stats",
    "write_snapshot",
]
