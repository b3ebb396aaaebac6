//! # gibbsgap
//!
//! Worst-case data-generating measures on finite alphabets and the exact
//! decompositions they induce.
//!
//! Given a loss `ℓ(θ, z)`, a reference measure `P_S` and a relative-entropy
//! budget `γ`, the measure maximizing the expected loss within `KL(· ‖ P_S) ≤ γ`
//! is a Gibbs tilt of `P_S` at some inverse temperature `β`
//! ([`worst_case`]). Its relative entropies to other measures give closed
//! forms for differences of expected losses, differences of empirical risks
//! and generalization gaps ([`sensitivity`], [`gen_gap`]). For the Gibbs
//! learning algorithm the doubly-expected gap equals `λ·(I + L)`, mutual plus
//! lautum information, which [`gen_gap::gibbs_audit`] checks by exact
//! enumeration.
//!
//! ```
//! use gibbsgap::{fixtures, solve_beta, tilt};
//!
//! let w2 = fixtures::w2();
//! let w = tilt(&w2.model, 0, &w2.reference, 1.0).unwrap();
//! let back = solve_beta(&w2.model, 0, &w2.reference, w.gamma()).unwrap();
//! assert!((back.beta().value() - 1.0).abs() < 1e-6);
//! ```

pub mod empirical;
pub mod enumerate;
pub mod error;
pub mod fixtures;
pub mod gen_gap;
pub mod loss;
pub mod measure;
pub mod sensitivity;
pub mod verify;
pub mod worst_case;

pub use empirical::{aggregate, empirical_risk, risk_via_type, type_of, Dataset, TypeMeasure};
pub use enumerate::DEFAULT_ENUMERATION_CAP;
pub use error::{Error, Result};
pub use gen_gap::{
    doubly_expected_gap, expected_gap, gap_decomposition_general, gap_decomposition_pz, gen_gap, gibbs_audit,
    gibbs_posterior, lautum_info, model_marginal, mutual_info, GapAudit, GibbsAlgorithm, LearningAlgorithm,
};
pub use loss::{erm_minimizer, expected_loss, max_loss_on_support, LossModel};
pub use measure::{is_abs_continuous, jeffreys_divergence, kl_divergence, mix, Alphabet, DiscreteMeasure};
pub use sensitivity::{
    empirical_sensitivity, g_functional, jeffreys_gap, mixed_reference, reference_specialization,
    sensitivity_closed_form, sensitivity_from_worst, DistanceGrouping, KlTerm, ReferenceChoice, SensitivityReport,
};
pub use verify::{exhaustive_type_sweep, run_suite, InstanceSpec, VerificationSummary};
pub use worst_case::{dual_identities, gamma_sup, log_partition, solve_beta, tilt, Beta, WorstCaseTilt};
