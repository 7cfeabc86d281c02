//! Regularizations `V_δ` of a kernel family: mollification, core cut-off and
//! approximation from below, with their certificates and self-energies.

mod certify;
mod kernel;
mod mollifier;
mod schedule;

pub use certify::{annulus_deviation, dominator_certify, DominatorReport, SamplePoint};
pub use kernel::{
    cutoff_kernel, frombelow_riesz, mollified_self_energy, mollify_kernel, FromBelowVariant,
    RegDescriptor, RegFamily, RegularizedKernel, RegularizerSpec, CUTOFF_EPSILON,
};
pub use mollifier::Mollifier;
pub use schedule::{
    gamma_from_counts, gamma_n, mollified_gamma, regime_diagnostic, DeltaSchedule, RegimeRow,
    REGIME_THRESHOLD,
};
