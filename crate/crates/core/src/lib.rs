//! Gaussian optical field states described by Wigner-function parameters and
//! covariance matrices in several bases, with the purity law that belongs to
//! each basis, a homodyne-measurement simulator, and a brute-force
//! `∫W²` purity oracle.
//!
//! Covariance matrices throughout store *doubled* second moments `2⟨δu δv⟩`,
//! so the vacuum CM is the identity.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod document;
pub mod error;
pub mod gaussian;
pub mod homodyne;
pub mod multimode;
pub mod oracle;

pub use document::{
    convert, load_cm, purity_by_kind, reconstruct, save_cm, CmDocument, CmKind, CmPayload,
    Provenance, PurityLaw, PurityResult, ReconstructedState, Reconstruction,
};
pub use error::{Error, Result};
pub use gaussian::{
    amplitude_cm_from_params, moments_from_params, params_from_amplitude_cm,
    params_from_quadrature_cm, purity_single, validate_physicality, wigner_eval,
    wigner_eval_amplitude, AmplitudeCM, Basis, GaussianParams, PhasePoint, PhysicalityReport,
    QuadratureCM, SingleModePurity,
};
pub use multimode::{
    assemble_two_mode_cm, expand_xy_to_full_pq_cm, purity_two_mode_pq, purity_xy, pq_from_xy,
    two_mode_params_from_xy_cm, two_mode_wigner_eval, xy_cm_from_two_mode_params, xy_from_pq,
    ModeIndex, SpectralQuadratures, TwoModeCM, TwoModeGaussianParams, XYPairCM, XYPairQuadratures,
};
