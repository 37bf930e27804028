//! Moduli of continuity, Dini-type admissibility integrals, and sampled
//! verification of the structural bounds on the vector field.

mod modulus;
mod structure;

pub use modulus::{dini_integral, inverse_modulus, DiniResult, Modulus, ModulusInverse};
pub use structure::{check_structure, SamplingPlan, StructureReport};
