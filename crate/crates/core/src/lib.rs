//! Spectral simulation and boundary control of wave equations with memory.
//!
//! The state is expanded on the Dirichlet eigenfunctions of a domain
//! ([`basis`]); each mode then obeys a scalar integro-differential equation
//! ([`modal`]) whose memory kernel is handled through its resolvent
//! ([`kernel`]). The elastic system is available in closed form through the
//! cosine and sine operator families ([`cosine`]). On top of this sit the
//! control-to-terminal-state maps and minimum-norm steering ([`control`]) and
//! the inequality estimators ([`verification`]).

pub mod basis;
pub mod control;
pub mod cosine;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod modal;
pub mod verification;

pub use basis::{check_weyl_asymptotics, Dimension, Edge, EigenBasis, Endpoint, Mode};
pub use control::{
    build_elastic_moment_matrix, build_undamped_moment_matrix, build_viscoelastic_moment_matrix,
    fit_power_law, min_norm_control,
    reachability_gap, row_difference_norms, steer_and_verify, ControlSignal, GapSpectrum,
    MinNormSolution, MomentKind, MomentMatrix, SimulationForm, SteeringReport,
};
pub use cosine::{
    apply_cal_a_power, apply_cosine, apply_sine, check_product_identity, elastic_solution,
    CoeffState, SampledForcing, Scale,
};
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use kernel::{
    maccamy_constants, resolvent_kernel, resolvent_on_grid, verify_resolvent_identity,
    KernelForm, MacCamyData, MemoryKernel, PronyTerm, ResolventData,
};
pub use modal::{
    boundary_response_kernel, maccamy_equivalence_residual, picard_series, solve_modal_damped,
    solve_modal_maccamy, solve_modal_memory, solve_modal_volterra, ModalTrajectory,
    PicardExpansion,
};
pub use verification::{
    direct_inequality_ratio, inverse_inequality_constant, orthogonality_test, trace_energy_ratio,
    InequalityReport, TraceMapSpectrum,
};
