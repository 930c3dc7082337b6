//! Exact arithmetic for coderivations of Z2-graded symmetric coalgebras.
//!
//! The crate computes Richardson-Nijenhuis brackets of sparse cochains over
//! exact rational (optionally parametric) coefficients, verifies codifferential
//! and extension conditions, applies equivalences, and classifies extensions
//! and infinitesimal deformations through staged cohomology.

pub mod cochain;
pub mod cohomology;
pub mod deformation;
pub mod extension;
pub mod gspace;
pub mod scalar;

pub use cochain::{Cochain, CochainError, LinearMap};
pub use cohomology::{
    CohomologyError, CohomologySpace, ImageMode, SliceBasis, SliceSpec, TripleCohomology,
    TripleDifferential,
};
pub use deformation::{
    check_infinitesimal_deformation, classify_deformations, classify_extension_moduli,
    classify_infinitesimal_extensions, classify_rep_deformations_scenario1,
    classify_rep_deformations_scenario2, construct_zeta, deformation_equivalence,
    module_action_space, ClassSpace, ClassificationReport, DeformationCheck, DeformationError,
    DeformationProblem, Variation, ZetaOutcome, ZetaStage,
};
pub use extension::{ExtensionData, ExtensionError};
pub use gspace::{GradedSpace, Monomial, Parity, SpaceError};
pub use scalar::{ParamSet, Rational, Scalar, ScalarError};
