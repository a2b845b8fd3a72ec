"""Darcy-flow finite volumes with Monte Carlo and clustered stochastic finite volume UQ."""

__version__ = "0.1.0"

from .grid import (
    Grid2D,
    PermField,
    assemble_face_transmissibilities,
    build_grid,
    face_transmissibility,
    half_transmissibility,
)
from .partition import (
    ClusterStats,
    Partition,
    cluster_radius,
    cluster_stats,
    cluster_weights,
    indicator_sigma,
    kmeans_partition,
    tensor_partition,
)
from .random_fields import (
    FieldLayout,
    SampleSet,
    TruncatedNormal,
    Uniform,
    UniformMixture,
    draw_sample_set,
    realize_permeability,
    sample_component,
)
from .solvers import (
    BoundarySpec,
    FluidRockProps,
    SimState,
    WellSpec,
    impes_step,
    linear_solve,
    relperm,
    solve_elliptic,
    step_parabolic,
    well_rate,
)
from .uq import (
    UqEstimate,
    cluster_mean_coefficients,
    convergence_study,
    estimate_mc,
    estimate_sfv,
    extract_qoi,
    run_forward,
    run_study,
)
