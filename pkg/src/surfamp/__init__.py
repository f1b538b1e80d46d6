"""Weakly nonlinear surface waves: kernels, coefficients, and spectral evolution."""

from surfamp.kernels import (
    BoundCertificate,
    ExcludedSetError,
    Kernel,
    PairKernel,
    ZeroSumTriple,
    austria_hunter_kernel,
    hiz_kernel,
    kernel_from_spec,
    kernel_spec,
    phase_boundary_pair_kernel,
    reduce_to_q,
    rescale_to_p,
)
from surfamp.phase_boundary import (
    PhaseBoundaryData,
    PressureLaw,
    cubic_pressure_law,
    dispersion_root,
    phase_boundary_pipeline,
    report_dict,
    solve_states,
    table_pressure_law,
    vdw_pressure_law,
)
from surfamp.spectral import (
    EvolutionForm,
    SpectralState,
    functional_M,
    functional_T,
    integrate,
    state_cosine,
    state_from_modes,
    state_gaussian_spectrum,
    u_form,
    v_form,
    w_form,
)
from surfamp.variational import (
    SurfaceWaveProfile,
    VariationalData,
    WaveGeometry,
    build_profile,
    isotropic_elasticity_data,
    oseen_frank_data,
    scan_and_refine_root,
    synthesize_components,
    synthesize_kernel,
    tensors_from_energy,
)

__all__ = [
    "BoundCertificate",
    "EvolutionForm",
    "ExcludedSetError",
    "Kernel",
    "PairKernel",
    "PhaseBoundaryData",
    "PressureLaw",
    "SpectralState",
    "SurfaceWaveProfile",
    "VariationalData",
    "WaveGeometry",
    "ZeroSumTriple",
    "austria_hunter_kernel",
    "build_profile",
    "cubic_pressure_law",
    "dispersion_root",
    "functional_M",
    "functional_T",
    "hiz_kernel",
    "integrate",
    "isotropic_elasticity_data",
    "kernel_from_spec",
    "kernel_spec",
    "oseen_frank_data",
    "phase_boundary_pair_kernel",
    "phase_boundary_pipeline",
    "reduce_to_q",
    "report_dict",
    "rescale_to_p",
    "scan_and_refine_root",
    "solve_states",
    "state_cosine",
    "state_from_modes",
    "state_gaussian_spectrum",
    "synthesize_components",
    "synthesize_kernel",
    "table_pressure_law",
    "tensors_from_energy",
    "u_form",
    "v_form",
    "vdw_pressure_law",
    "w_form",
]

__version__ = "0.1.0"
