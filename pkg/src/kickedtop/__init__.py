"""Dissipative quantum kicked top toolkit.

Mean-field chaos diagnostics in the thermodynamic limit and
quantum-jump trajectory dynamics at finite size, with nonstabilizerness
(stabilizer 2-Renyi entropy), entanglement entropy and magnetization
statistics evaluated along the trajectories.
"""

__version__ = "0.1.0"

from .core import (
    BlochVector,
    CollectiveOps,
    DickeState,
    ModelParams,
    PhasePoint,
    bloch_from_phase,
    bloch_from_state,
    build_collective_ops,
    phase_from_bloch,
    spin_coherent_state,
)
from .meanfield import (
    LyapunovResult,
    OrbitSeries,
    bifurcation_scan,
    box_counting_dimension,
    hausdorff_dimension,
    lyapunov_largest,
    lyapunov_map,
    mf_kick,
    mf_rhs,
    mf_step_period,
    mf_stroboscopic_orbit,
)
from .observables import (
    PauliClass,
    dicke_to_full,
    entanglement_entropy,
    mz_expect,
    pauli_class_expectation,
    schmidt_matrix,
    sre_m2,
)
from .qtraj import (
    EnsembleSeries,
    FloquetPropagators,
    TrajectoryRecord,
    build_propagators,
    lindblad_dense_oracle,
    qj_step,
    run_ensemble,
    run_trajectory,
)
from .analysis import (
    Histogram,
    ScalingFit,
    delta_magic,
    find_peaks,
    fit_log_linear,
    fit_power_law,
    histogram_mz,
    steady_average,
    variance_mz,
)
