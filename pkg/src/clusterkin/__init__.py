"""Cluster growth in dilute kinetic gases: closed forms, simulators and experiments."""

__version__ = "0.1.0"

from .analytics import (  # noqa: E402
    SeriesError,
    SeriesPolicy,
    analytic_distribution,
    backward_cluster_law,
    f_mass,
    fit_power_law,
    fit_power_law_counts,
    g_fraction,
    g_unnormalized,
    gamma_damping,
    giant_mass,
    partition_Z,
    solve_conjugate,
    stirling_f,
    total_mass_F,
)
from .clusters import (  # noqa: E402
    ClusterPartition,
    ClusterSizeDistribution,
    backward_cluster,
    backward_sizes,
    build_partition,
    snapshots,
)
from .collision import CollisionLog, resolve_collision  # noqa: E402
from .dsmc import DsmcConfig, run_dsmc  # noqa: E402
from .md import MdConfig, run  # noqa: E402
from .trees import (  # noqa: E402
    LabelledTree,
    cayley_count,
    enumerate_gamma,
    enumerate_trees,
    prufer_decode,
    prufer_encode,
    quadrature_oracle_f,
)

__all__ = [
    "__version__",
    "SeriesError",
    "SeriesPolicy",
    "analytic_distribution",
    "backward_cluster_law",
    "f_mass",
    "fit_power_law",
    "fit_power_law_counts",
    "g_fraction",
    "g_unnormalized",
    "gamma_damping",
    "giant_mass",
    "partition_Z",
    "solve_conjugate",
    "stirling_f",
    "total_mass_F",
    "ClusterPartition",
    "ClusterSizeDistribution",
    "backward_cluster",
    "backward_sizes",
    "build_partition",
    "snapshots",
    "CollisionLog",
    "resolve_collision",
    "DsmcConfig",
    "run_dsmc",
    "MdConfig",
    "run",
    "LabelledTree",
    "cayley_count",
    "enumerate_gamma",
    "enumerate_trees",
    "prufer_decode",
    "prufer_encode",
    "quadrature_oracle_f",
]
