//! Workbench for a cannulated flexible bone screw: parametric solid
//! generation for additive manufacturing, a reduced-order nonlinear
//! bending solver for tip force-displacement prediction, and metrics
//! for comparing predictions against bench measurements.
//!
//! The crate is organized around four modules:
//!
//! * [`geometry`] builds the screw cross-section profile and a
//!   watertight surface mesh, and exports binary STL.
//! * [`material`] holds the orthotropic elastic constants and the
//!   shear-modulus relation for printed stainless steel.
//! * [`solver`] predicts tip reaction forces under prescribed tip
//!   displacement with corotational beam elements, and calibrates the
//!   flexure stiffness knock-down factor.
//! * [`validation`] ingests experimental force-displacement runs and
//!   computes error metrics against simulated curves.

pub mod geometry;
pub mod material;
pub mod solver;
pub mod validation;

pub use geometry::{ScrewSpec, SectionProfile, TriangleMesh};
pub use material::MaterialModel;
pub use solver::{BeamModel, SolveTrace};
pub use validation::{FDCurve, MetricsReport};

// The guide chapters double as doc-tests so their snippets cannot
// drift out of sync with the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/materials.md")]
    mod materials {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
}
