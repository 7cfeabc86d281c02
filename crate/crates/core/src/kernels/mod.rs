//! Interaction potentials, elasticity fields and their convolution-square
//! decompositions.

pub mod elastic;
mod family;
pub mod lens;
pub mod potentials;
pub mod riesz;

pub use elastic::{
    displacement_field, displacement_jump, displacement_unwrapped, elasticity_sqrt_apply,
    strain_kernel, strain_kernel_polar, stress_kernel, stress_kernel_polar, BurgersAngle,
    LameParameters,
};
pub use family::{
    FamilyParameters, FamilyTag, KernelFamily, KernelSpec, Normalization, TableSpec,
    KERNELSPEC_VERSION,
};
pub use lens::{
    edge_v_reg, edge_v_reg_at_origin, lens_integral, lens_integral_estimate, LensQuadrature,
};
pub use potentials::{edge_potential, edge_potential_polar, log_potential, riesz_potential};
