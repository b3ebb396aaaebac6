//! The worst-case data-generating measure.
//!
//! For a model `θ`, a reference measure `P_S` and a relative-entropy budget
//! `γ`, the measure maximizing `E_P[ℓ(θ, ·)]` subject to `KL(P ‖ P_S) ≤ γ` is
//! the exponential tilt
//!
//! ```text
//! dP*/dP_S (z) = exp(ℓ(θ, z)/β − J(1/β)),   J(t) = log E_{P_S}[exp(t·ℓ(θ, ·))]
//! ```
//!
//! with `β > 0` chosen so that `KL(P* ‖ P_S) = γ`. [`tilt`] evaluates the
//! measure at a given `β`; [`solve_beta`] inverts the budget.

use std::fmt;

use crate::error::{Error, Result};
use crate::loss::{expectation, LossModel};
use crate::measure::{kl_unchecked, DiscreteMeasure};

/// Losses within this distance of the maximum belong to the argmax set.
pub const ARGMAX_TIE_TOLERANCE: f64 = 1e-12;
/// Acceptance threshold `|KL(P* ‖ P_S) − γ|` for [`solve_beta`].
pub const SOLVER_TOLERANCE: f64 = 1e-10;
/// Maximum number of ×2 / ×½ steps while bracketing `β`.
pub const MAX_BRACKET_STEPS: usize = 200;
/// Maximum number of bisection steps on `log β`.
pub const MAX_BISECTION_STEPS: usize = 200;

/// Inverse temperature of a tilt. `Infinite` marks the zero-budget case,
/// where the tilt is the reference itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn finite(self) -> Option<f64> {
        match self {
            Beta::Finite(b) => Some(b),
            Beta::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Beta::Infinite)
    }

    /// `f64` view with `+∞` for the infinite marker.
    pub fn value(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => f.write_str("inf"),
        }
    }
}

/// A solved worst-case measure together with the parameters that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct WorstCaseTilt {
    base: DiscreteMeasure,
    model: usize,
    beta: Beta,
    gamma: f64,
    measure: DiscreteMeasure,
    log_partition: f64,
}

impl WorstCaseTilt {
    /// The reference measure `P_S`.
    pub fn base(&self) -> &DiscreteMeasure {
        &self.base
    }

    pub fn model(&self) -> usize {
        self.model
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    /// Achieved `KL(P* ‖ P_S)`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The tilted measure `P*`.
    pub fn measure(&self) -> &DiscreteMeasure {
        &self.measure
    }

    /// `J(1/β)`; zero for the infinite-β marker.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub(crate) fn finite_beta(&self) -> Result<f64> {
        self.beta.finite().ok_or(Error::DegenerateBeta)
    }
}

/// `J(t) = log Σ_i base_i · exp(t · ℓ(θ, i))`, stabilized by shifting with the
/// largest exponent over the support.
pub fn log_partition(lm: &LossModel, model: usize, base: &DiscreteMeasure, t: f64) -> Result<f64> {
    let row = lm.checked_row(model, base)?;
    Ok(log_partition_row(row, base.weights(), t))
}

fn scaled(t: f64, loss: f64) -> f64 {
    // 0·∞ is taken as 0: at t = 0 every point contributes its base mass.
    if t == 0.0 {
        0.0
    } else {
        t * loss
    }
}

pub(crate) fn log_partition_row(row: &[f64], weights: &[f64], t: f64) -> f64 {
    let (shift, log_sum) = shifted_log_sum(row, weights, t);
    shift + log_sum
}

/// `(m, s)` with `J(t) = m + s`, `m` the largest exponent over the support.
fn shifted_log_sum(row: &[f64], weights: &[f64], t: f64) -> (f64, f64) {
    let mut shift = f64::NEG_INFINITY;
    for (&w, &l) in weights.iter().zip(row) {
        if w > 0.0 {
            shift = shift.max(scaled(t, l));
        }
    }
    if shift.is_infinite() {
        return (shift, 0.0);
    }
    let mut acc = 0.0;
    for (&w, &l) in weights.iter().zip(row) {
        if w > 0.0 {
            acc += w * (scaled(t, l) - shift).exp();
        }
    }
    (shift, acc.ln())
}

/// The worst-case measure at inverse temperature `beta`.
pub fn tilt(lm: &LossModel, model: usize, base: &DiscreteMeasure, beta: f64) -> Result<WorstCaseTilt> {
    let row = lm.checked_row(model, base)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::NonPositiveBeta(beta));
    }
    let t = 1.0 / beta;
    let (shift, log_sum) = shifted_log_sum(row, base.weights(), t);
    let j = shift + log_sum;
    if !j.is_finite() {
        return Err(Error::InfeasibleTemperature { beta });
    }
    let weights: Vec<f64> = base
        .weights()
        .iter()
        .zip(row)
        .map(|(&w, &l)| {
            if w > 0.0 {
                (w.ln() + (t * l - shift) - log_sum).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
    let gamma = kl_unchecked(&weights, base.weights());
    let measure = DiscreteMeasure::from_normalized(base.alphabet().clone(), weights);
    Ok(WorstCaseTilt {
        base: base.clone(),
        model,
        beta: Beta::Finite(beta),
        gamma,
        measure,
        log_partition: j,
    })
}

fn identity_tilt(base: &DiscreteMeasure, model: usize) -> WorstCaseTilt {
    WorstCaseTilt {
        base: base.clone(),
        model,
        beta: Beta::Infinite,
        gamma: 0.0,
        measure: base.clone(),
        log_partition: 0.0,
    }
}

fn require_finite_on_support(row: &[f64], base: &DiscreteMeasure, model: usize) -> Result<()> {
    match base.support().find(|&i| row[i].is_infinite()) {
        Some(point) => Err(Error::InfiniteLoss { model, point }),
        None => Ok(()),
    }
}

/// Supremum of `KL(P*_β ‖ P_S)` over `β > 0`, attained in the limit `β → 0`
/// where the tilt concentrates on the argmax set `A` of the loss: `−log P_S(A)`.
pub fn gamma_sup(lm: &LossModel, model: usize, base: &DiscreteMeasure) -> Result<f64> {
    let row = lm.checked_row(model, base)?;
    require_finite_on_support(row, base, model)?;
    let max = base.support().map(|i| row[i]).fold(f64::NEG_INFINITY, f64::max);
    let mut argmax_mass = 0.0;
    let mut whole_support = true;
    for i in base.support() {
        if row[i] >= max - ARGMAX_TIE_TOLERANCE {
            argmax_mass += base.weight(i);
        } else {
            whole_support = false;
        }
    }
    if whole_support {
        Ok(0.0)
    } else {
        Ok(-argmax_mass.ln())
    }
}

/// Finds `β` with `KL(P*_β ‖ P_S) = γ`.
///
/// `β ↦ KL(P*_β ‖ P_S)` is continuous and strictly decreasing for a loss that
/// is not constant on the support, so the root is bracketed by geometric
/// steps from `β = 1` and then bisected on `log β` down to floating-point
/// resolution.
pub fn solve_beta(lm: &LossModel, model: usize, base: &DiscreteMeasure, gamma: f64) -> Result<WorstCaseTilt> {
    let row = lm.checked_row(model, base)?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::NegativeGamma(gamma));
    }
    if gamma == 0.0 {
        return Ok(identity_tilt(base, model));
    }
    require_finite_on_support(row, base, model)?;
    let sup = gamma_sup(lm, model, base)?;
    if sup == 0.0 {
        return Err(Error::ConstantLossNonzeroGamma { gamma });
    }
    if gamma >= sup {
        return Err(Error::GammaInfeasible { gamma, sup });
    }

    let excess = |log_beta: f64| -> Result<(f64, WorstCaseTilt)> {
        let w = tilt(lm, model, base, log_beta.exp())?;
        Ok((w.gamma - gamma, w))
    };

    // excess is decreasing in log β: positive means β is too small.
    let (mut lo, mut hi);
    let (f0, w0) = excess(0.0)?;
    if f0 == 0.0 {
        return Ok(w0);
    }
    if f0 > 0.0 {
        lo = 0.0;
        hi = std::f64::consts::LN_2;
        let mut steps = 0;
        while excess(hi)?.0 > 0.0 {
            lo = hi;
            hi += std::f64::consts::LN_2;
            steps += 1;
            if steps >= MAX_BRACKET_STEPS {
                return Err(Error::NonConvergence(format!(
                    "no upper bracket for beta after {MAX_BRACKET_STEPS} doublings (gamma = {gamma})"
                )));
            }
        }
    } else {
        hi = 0.0;
        lo = -std::f64::consts::LN_2;
        let mut steps = 0;
        while excess(lo)?.0 < 0.0 {
            hi = lo;
            lo -= std::f64::consts::LN_2;
            steps += 1;
            if steps >= MAX_BRACKET_STEPS {
                return Err(Error::NonConvergence(format!(
                    "no lower bracket for beta after {MAX_BRACKET_STEPS} halvings (gamma = {gamma})"
                )));
            }
        }
    }

    let mut best: Option<(f64, WorstCaseTilt)> = None;
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let (f, w) = excess(mid)?;
        if best.as_ref().is_none_or(|(bf, _)| f.abs() < bf.abs()) {
            best = Some((f, w));
        }
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
    }
    match best {
        Some((f, w)) if f.abs() <= SOLVER_TOLERANCE => Ok(w),
        Some((f, _)) => Err(Error::NonConvergence(format!(
            "bisection stalled with |KL - gamma| = {:e}",
            f.abs()
        ))),
        None => Err(Error::NonConvergence("empty bisection".into())),
    }
}

/// Residuals of the two dual equalities
///
/// ```text
/// β·J(1/β) = E_{P*}[ℓ] − β·KL(P* ‖ P_S)
///          = E_{P_S}[ℓ] + β·KL(P_S ‖ P*)
/// ```
pub fn dual_identities(w: &WorstCaseTilt, lm: &LossModel) -> Result<(f64, f64)> {
    let beta = w.finite_beta()?;
    let row = lm.checked_row(w.model, &w.base)?;
    let beta_j = beta * w.log_partition;
    let e_star = expectation(row, w.measure.weights());
    let e_base = expectation(row, w.base.weights());
    let kl_star_base = kl_unchecked(w.measure.weights(), w.base.weights());
    let kl_base_star = kl_unchecked(w.base.weights(), w.measure.weights());
    let r1 = beta_j - (e_star - beta * kl_star_base);
    let r2 = beta_j - (e_base + beta * kl_base_star);
    Ok((r1, r2))
}
