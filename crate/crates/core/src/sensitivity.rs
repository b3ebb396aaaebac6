//! Closed-form decompositions of the sensitivity functional
//! `G(θ, P1, P2) = E_{P1}[ℓ(θ, ·)] − E_{P2}[ℓ(θ, ·)]` in terms of relative
//! entropies to a worst-case measure and its reference.
//!
//! Every operation returns a [`SensitivityReport`] carrying the direct value,
//! the closed form, their residual and the signed KL terms. Thresholds are
//! left to callers.

use crate::empirical::{type_of, Dataset};
use crate::error::{Error, Result};
use crate::loss::LossModel;
use crate::measure::{kl_unchecked, mix, require_abs_continuous, DiscreteMeasure};
use crate::worst_case::{tilt, WorstCaseTilt};

/// One signed relative-entropy term of a closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct KlTerm {
    /// Human-readable name such as `KL(P2||P*)`.
    pub label: String,
    /// `+1` or `−1`.
    pub coefficient: f64,
    pub value: f64,
}

/// Split of a four-term closed form into the difference of distances to the
/// worst-case measure and the difference of distances to the reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceGrouping {
    /// `KL(P2 ‖ P*) − KL(P1 ‖ P*)`.
    pub worst_case: f64,
    /// `KL(P1 ‖ P_S) − KL(P2 ‖ P_S)`.
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport {
    pub g_direct: f64,
    pub g_closed_form: f64,
    /// `g_direct − g_closed_form`.
    pub residual: f64,
    pub terms: Vec<KlTerm>,
    pub beta: f64,
    pub reference: DiscreteMeasure,
    pub grouping: Option<DistanceGrouping>,
}

impl SensitivityReport {
    fn assemble(g_direct: f64, beta: f64, reference: DiscreteMeasure, terms: Vec<KlTerm>) -> Self {
        let g_closed_form = beta * recombine(&terms);
        Self {
            g_direct,
            g_closed_form,
            residual: g_direct - g_closed_form,
            terms,
            beta,
            reference,
            grouping: None,
        }
    }

    /// `Σ coefficient · value` in term order; multiplied by `beta` this is
    /// exactly `g_closed_form`.
    pub fn recombined(&self) -> f64 {
        recombine(&self.terms)
    }

    pub fn term(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.label == label).map(|t| t.value)
    }
}

fn recombine(terms: &[KlTerm]) -> f64 {
    terms.iter().fold(0.0, |acc, t| acc + t.coefficient * t.value)
}

fn term(label: &str, coefficient: f64, value: f64) -> KlTerm {
    KlTerm {
        label: label.to_owned(),
        coefficient,
        value,
    }
}

fn kl(p: &DiscreteMeasure, q: &DiscreteMeasure) -> f64 {
    kl_unchecked(p.weights(), q.weights())
}

fn finite_expectation(lm: &LossModel, model: usize, p: &DiscreteMeasure) -> Result<f64> {
    let row = lm.checked_row(model, p)?;
    let mut acc = 0.0;
    for i in p.support() {
        if row[i].is_infinite() {
            return Err(Error::InfiniteLoss { model, point: i });
        }
        acc += p.weight(i) * row[i];
    }
    Ok(acc)
}

/// `G(θ, P1, P2) = E_{P1}[ℓ] − E_{P2}[ℓ]`.
pub fn g_functional(lm: &LossModel, model: usize, p1: &DiscreteMeasure, p2: &DiscreteMeasure) -> Result<f64> {
    p1.check_same_alphabet(p2)?;
    Ok(finite_expectation(lm, model, p1)? - finite_expectation(lm, model, p2)?)
}

fn check_tilt(lm: &LossModel, w: &WorstCaseTilt) -> Result<f64> {
    lm.checked_row(w.model(), w.base())?;
    w.finite_beta()
}

/// `G(θ, P, P*) = β·(KL(P ‖ P_S) − KL(P ‖ P*) − KL(P* ‖ P_S))`.
pub fn sensitivity_from_worst(lm: &LossModel, w: &WorstCaseTilt, p: &DiscreteMeasure) -> Result<SensitivityReport> {
    let beta = check_tilt(lm, w)?;
    require_abs_continuous(p, w.base())?;
    let (base, star) = (w.base(), w.measure());
    let g_direct = g_functional(lm, w.model(), p, star)?;
    let terms = vec![
        term("KL(P||P_S)", 1.0, kl(p, base)),
        term("KL(P||P*)", -1.0, kl(p, star)),
        term("KL(P*||P_S)", -1.0, kl(star, base)),
    ];
    Ok(SensitivityReport::assemble(g_direct, beta, base.clone(), terms))
}

/// `G(θ, P_S, P*) = −β·(KL(P_S ‖ P*) + KL(P* ‖ P_S))`, the negated Jeffreys divergence.
pub fn jeffreys_gap(lm: &LossModel, w: &WorstCaseTilt) -> Result<SensitivityReport> {
    let beta = check_tilt(lm, w)?;
    let (base, star) = (w.base(), w.measure());
    let g_direct = g_functional(lm, w.model(), base, star)?;
    let terms = vec![
        term("KL(P_S||P*)", -1.0, kl(base, star)),
        term("KL(P*||P_S)", -1.0, kl(star, base)),
    ];
    Ok(SensitivityReport::assemble(g_direct, beta, base.clone(), terms))
}

/// `G(θ, P1, P2) = β·(KL(P2 ‖ P*) − KL(P1 ‖ P*) − KL(P2 ‖ P_S) + KL(P1 ‖ P_S))`.
///
/// Each term involves only one of `P1`, `P2`.
pub fn sensitivity_closed_form(
    lm: &LossModel,
    w: &WorstCaseTilt,
    p1: &DiscreteMeasure,
    p2: &DiscreteMeasure,
) -> Result<SensitivityReport> {
    let beta = check_tilt(lm, w)?;
    require_abs_continuous(p1, w.base())?;
    require_abs_continuous(p2, w.base())?;
    let g_direct = g_functional(lm, w.model(), p1, p2)?;
    Ok(four_term_report(g_direct, beta, w, p1, p2))
}

fn four_term_report(
    g_direct: f64,
    beta: f64,
    w: &WorstCaseTilt,
    p1: &DiscreteMeasure,
    p2: &DiscreteMeasure,
) -> SensitivityReport {
    let (base, star) = (w.base(), w.measure());
    let kl_p2_star = kl(p2, star);
    let kl_p1_star = kl(p1, star);
    let kl_p2_base = kl(p2, base);
    let kl_p1_base = kl(p1, base);
    let terms = vec![
        term("KL(P2||P*)", 1.0, kl_p2_star),
        term("KL(P1||P*)", -1.0, kl_p1_star),
        term("KL(P2||P_S)", -1.0, kl_p2_base),
        term("KL(P1||P_S)", 1.0, kl_p1_base),
    ];
    let mut report = SensitivityReport::assemble(g_direct, beta, base.clone(), terms);
    report.grouping = Some(DistanceGrouping {
        worst_case: kl_p2_star - kl_p1_star,
        reference: kl_p1_base - kl_p2_base,
    });
    report
}

/// Which of the two measures serves as the reference of the tilt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceChoice {
    /// Reference `P1`; requires `P2 ≪ P1`.
    UseP1,
    /// Reference `P2`; requires `P1 ≪ P2`.
    UseP2,
}

/// Three-term forms obtained by taking one of the two measures as reference:
///
/// ```text
/// P_S = P2:  G = β·(KL(P2 ‖ P*) − KL(P1 ‖ P*) + KL(P1 ‖ P2))
/// P_S = P1:  G = β·(KL(P2 ‖ P*) − KL(P1 ‖ P*) − KL(P2 ‖ P1))
/// ```
pub fn reference_specialization(
    lm: &LossModel,
    model: usize,
    p1: &DiscreteMeasure,
    p2: &DiscreteMeasure,
    beta: f64,
    direction: ReferenceChoice,
) -> Result<SensitivityReport> {
    p1.check_same_alphabet(p2)?;
    let (reference, other) = match direction {
        ReferenceChoice::UseP1 => (p1, p2),
        ReferenceChoice::UseP2 => (p2, p1),
    };
    require_abs_continuous(other, reference)?;
    let w = tilt(lm, model, reference, beta)?;
    let star = w.measure();
    let g_direct = g_functional(lm, model, p1, p2)?;
    let terms = match direction {
        ReferenceChoice::UseP2 => vec![
            term("KL(P2||P*)", 1.0, kl(p2, star)),
            term("KL(P1||P*)", -1.0, kl(p1, star)),
            term("KL(P1||P2)", 1.0, kl(p1, p2)),
        ],
        ReferenceChoice::UseP1 => vec![
            term("KL(P2||P*)", 1.0, kl(p2, star)),
            term("KL(P1||P*)", -1.0, kl(p1, star)),
            term("KL(P2||P1)", -1.0, kl(p2, p1)),
        ],
    };
    Ok(SensitivityReport::assemble(g_direct, beta, reference.clone(), terms))
}

/// Even mixture of two measures; both are absolutely continuous with respect
/// to it, so it is a valid reference for [`sensitivity_closed_form`] even when
/// `p1` and `p2` are mutually singular.
pub fn mixed_reference(p1: &DiscreteMeasure, p2: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    mix(p1, p2, 0.5)
}

/// `L(z1, θ) − L(z2, θ)` decomposed through the types of the two datasets.
///
/// This is [`sensitivity_closed_form`] applied to `(P_{z1}, P_{z2})`, so the
/// two paths agree bit-for-bit; the direct side is evaluated through the
/// types, which equals the difference of empirical risks up to rounding.
pub fn empirical_sensitivity(
    lm: &LossModel,
    w: &WorstCaseTilt,
    z1: &Dataset,
    z2: &Dataset,
) -> Result<SensitivityReport> {
    let t1 = type_of(z1);
    let t2 = type_of(z2);
    sensitivity_closed_form(lm, w, t1.as_measure(), t2.as_measure())
}
