//! Discrete sub-mean-value tests, mollification, sup-convolution and moduli of continuity.

pub mod defect;
pub mod modulus;
pub mod mollify;
pub mod stencil;
pub mod supconv;

pub use defect::{cone_shift_check, stencil_defect, stencil_defect_with, submean_defect, DefectReport};
pub use modulus::ModulusOfContinuity;
pub use mollify::mollify_interior;
pub use stencil::{Mode, RingStencil};
pub use supconv::sup_convolution;
