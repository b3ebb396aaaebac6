//! Generalization gaps of single models and of learning algorithms.
//!
//! A learning algorithm on a finite model set is stored as a dense kernel:
//! one conditional measure over models for every dataset of length `n`,
//! indexed by lexicographic rank (see [`crate::enumerate`]). All averages over
//! datasets are exact enumerations under the product measure `P_Z^{⊗n}`;
//! per-dataset contributions are computed in parallel and reduced in rank
//! order, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::empirical::{empirical_risk, type_of, Dataset};
use crate::enumerate::{dataset_count, dataset_of_rank, entries_of_rank, pairwise_sum, product_weight, rank_of};
use crate::error::{Error, Result};
use crate::loss::{expectation, LossModel};
use crate::measure::{kl_unchecked, require_abs_continuous, DiscreteMeasure};
use crate::sensitivity::{KlTerm, SensitivityReport};
use crate::worst_case::{tilt, WorstCaseTilt};

/// A conditional measure over models for every dataset of length `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct LearningAlgorithm {
    lm: LossModel,
    n: usize,
    kernel: Vec<DiscreteMeasure>,
}

impl LearningAlgorithm {
    /// Materializes `kernel(z)` for every dataset of length `n`.
    pub fn from_fn<F>(lm: LossModel, n: usize, cap: u64, kernel: F) -> Result<Self>
    where
        F: Fn(&Dataset) -> Result<DiscreteMeasure> + Sync,
    {
        let count = dataset_count(lm.alphabet().size(), n, cap)?;
        let kernel = (0..count)
            .into_par_iter()
            .map(|rank| kernel(&dataset_of_rank(lm.alphabet(), rank, n)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_table(lm, n, kernel)
    }

    /// Kernel given as a table indexed by dataset rank.
    pub fn from_table(lm: LossModel, n: usize, kernel: Vec<DiscreteMeasure>) -> Result<Self> {
        let count = dataset_count(lm.alphabet().size(), n, u64::MAX)?;
        if kernel.len() != count {
            return Err(Error::LengthMismatch {
                expected: count,
                found: kernel.len(),
            });
        }
        if kernel.iter().any(|c| !c.alphabet().same_as(lm.models())) {
            return Err(Error::AlphabetMismatch);
        }
        Ok(Self { lm, n, kernel })
    }

    /// The same conditional for every dataset.
    pub fn data_independent(lm: LossModel, n: usize, cap: u64, conditional: DiscreteMeasure) -> Result<Self> {
        Self::from_fn(lm, n, cap, |_| Ok(conditional.clone()))
    }

    pub fn loss_model(&self) -> &LossModel {
        &self.lm
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dataset_count(&self) -> usize {
        self.kernel.len()
    }

    pub fn kernel(&self) -> &[DiscreteMeasure] {
        &self.kernel
    }

    pub fn conditional(&self, z: &Dataset) -> Result<&DiscreteMeasure> {
        self.check_dataset(z)?;
        Ok(&self.kernel[rank_of(z.entries(), self.lm.alphabet().size())])
    }

    fn check_dataset(&self, z: &Dataset) -> Result<()> {
        if !z.alphabet().same_as(self.lm.alphabet()) {
            return Err(Error::AlphabetMismatch);
        }
        if z.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: z.len(),
            });
        }
        Ok(())
    }

    fn check_data_measure(&self, pz: &DiscreteMeasure) -> Result<()> {
        self.lm.check_measure(pz)
    }

    /// `(rank, P_Z^{⊗n}(z))` for every dataset of positive probability.
    fn weighted_ranks(&self, pz: &DiscreteMeasure) -> Vec<(usize, f64)> {
        let k = self.lm.alphabet().size();
        (0..self.kernel.len())
            .map(|rank| (rank, product_weight(pz, &entries_of_rank(rank, k, self.n))))
            .filter(|&(_, w)| w > 0.0)
            .collect()
    }

    /// Exact `Σ_z P_Z^{⊗n}(z) · f(rank, z)` reduced in rank order.
    fn average<F>(&self, pz: &DiscreteMeasure, f: F) -> Result<f64>
    where
        F: Fn(usize, &[usize]) -> Result<f64> + Sync,
    {
        let k = self.lm.alphabet().size();
        let terms = self
            .weighted_ranks(pz)
            .into_par_iter()
            .map(|(rank, w)| Ok(w * f(rank, &entries_of_rank(rank, k, self.n))?))
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&terms))
    }

    fn population_risks(&self, pz: &DiscreteMeasure) -> Result<Vec<f64>> {
        (0..self.lm.model_count())
            .map(|m| Ok(expectation(self.lm.row(m)?, pz.weights())))
            .collect()
    }
}

/// Gibbs posterior `dP_{Θ|Z=z}/dQ (θ) = exp(−K_{Q,z}(−1/λ) − L(z, θ)/λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsAlgorithm {
    algorithm: LearningAlgorithm,
    prior: DiscreteMeasure,
    lambda: f64,
    log_partitions: Vec<f64>,
}

impl GibbsAlgorithm {
    pub fn algorithm(&self) -> &LearningAlgorithm {
        &self.algorithm
    }

    pub fn prior(&self) -> &DiscreteMeasure {
        &self.prior
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `K_{Q,z}(−1/λ)` indexed by dataset rank.
    pub fn log_partitions(&self) -> &[f64] {
        &self.log_partitions
    }
}

impl AsRef<LearningAlgorithm> for GibbsAlgorithm {
    fn as_ref(&self) -> &LearningAlgorithm {
        &self.algorithm
    }
}

/// Mutual information, lautum information and the doubly-expected gap of a
/// Gibbs algorithm, evaluated independently.
#[derive(Clone, Debug, PartialEq)]
pub struct GapAudit {
    pub lambda: f64,
    pub doubly_expected_direct: f64,
    pub mutual_info: f64,
    pub lautum_info: f64,
    /// `λ·(I + L)`.
    pub information_form: f64,
    /// `doubly_expected_direct − information_form`.
    pub identity_residual: f64,
    pub datasets: usize,
}

fn require_finite_losses(lm: &LossModel, model: usize, points: impl Iterator<Item = usize>) -> Result<()> {
    let row = lm.row(model)?;
    for point in points {
        if row[point].is_infinite() {
            return Err(Error::InfiniteLoss { model, point });
        }
    }
    Ok(())
}

/// `E_{P_Z}[ℓ(θ, ·)] − L(z, θ)`.
pub fn gen_gap(lm: &LossModel, model: usize, pz: &DiscreteMeasure, z: &Dataset) -> Result<f64> {
    let row = lm.checked_row(model, pz)?;
    if !z.alphabet().same_as(lm.alphabet()) {
        return Err(Error::AlphabetMismatch);
    }
    require_finite_losses(lm, model, pz.support().chain(z.entries().iter().copied()))?;
    Ok(expectation(row, pz.weights()) - empirical_risk(lm, z, model)?)
}

fn kl(p: &DiscreteMeasure, q: &DiscreteMeasure) -> f64 {
    kl_unchecked(p.weights(), q.weights())
}

fn term(label: &str, coefficient: f64, value: f64) -> KlTerm {
    KlTerm {
        label: label.to_owned(),
        coefficient,
        value,
    }
}

fn gap_report(g_direct: f64, beta: f64, reference: DiscreteMeasure, terms: Vec<KlTerm>) -> SensitivityReport {
    let recombined = terms.iter().fold(0.0, |acc, t| acc + t.coefficient * t.value);
    let g_closed_form = beta * recombined;
    SensitivityReport {
        g_direct,
        g_closed_form,
        residual: g_direct - g_closed_form,
        terms,
        beta,
        reference,
        grouping: None,
    }
}

/// Gap decomposition with the data measure itself as reference:
///
/// ```text
/// G(θ, P_Z, P_z) = β·(KL(P_z ‖ P*) − KL(P_Z ‖ P*) − KL(P_z ‖ P_Z))
/// ```
///
/// Terms are listed in the order of [`gap_decomposition_general`] so that the
/// two agree bit-for-bit when the general form is given `P_S = P_Z`.
pub fn gap_decomposition_pz(
    lm: &LossModel,
    model: usize,
    pz: &DiscreteMeasure,
    z: &Dataset,
    beta: f64,
) -> Result<SensitivityReport> {
    let g_direct = gen_gap(lm, model, pz, z)?;
    let t = type_of(z).into_measure();
    require_abs_continuous(&t, pz)?;
    let w = tilt(lm, model, pz, beta)?;
    let star = w.measure();
    let terms = vec![
        term("KL(P_z||P*)", 1.0, kl(&t, star)),
        term("KL(P_Z||P*)", -1.0, kl(pz, star)),
        term("KL(P_z||P_Z)", -1.0, kl(&t, pz)),
    ];
    Ok(gap_report(g_direct, beta, pz.clone(), terms))
}

/// Gap decomposition for an arbitrary reference `P_S` and its tilt:
///
/// ```text
/// G(θ, P_Z, P_z) = β·(KL(P_z ‖ P*) − KL(P_Z ‖ P*) − KL(P_z ‖ P_S) + KL(P_Z ‖ P_S))
/// ```
pub fn gap_decomposition_general(
    lm: &LossModel,
    model: usize,
    pz: &DiscreteMeasure,
    z: &Dataset,
    w: &WorstCaseTilt,
) -> Result<SensitivityReport> {
    if w.model() != model {
        return Err(Error::ModelMismatch {
            expected: model,
            found: w.model(),
        });
    }
    let beta = w.finite_beta()?;
    let g_direct = gen_gap(lm, model, pz, z)?;
    lm.check_measure(w.base())?;
    let t = type_of(z).into_measure();
    require_abs_continuous(pz, w.base())?;
    require_abs_continuous(&t, w.base())?;
    let (base, star) = (w.base(), w.measure());
    let kl_t_star = kl(&t, star);
    let kl_pz_star = kl(pz, star);
    let kl_t_base = kl(&t, base);
    let kl_pz_base = kl(pz, base);
    let terms = vec![
        term("KL(P_z||P*)", 1.0, kl_t_star),
        term("KL(P_Z||P*)", -1.0, kl_pz_star),
        term("KL(P_z||P_S)", -1.0, kl_t_base),
        term("KL(P_Z||P_S)", 1.0, kl_pz_base),
    ];
    let mut report = gap_report(g_direct, beta, base.clone(), terms);
    report.grouping = Some(crate::sensitivity::DistanceGrouping {
        worst_case: kl_t_star - kl_pz_star,
        reference: kl_pz_base - kl_t_base,
    });
    Ok(report)
}

fn expected_gap_with(
    lm: &LossModel,
    conditional: &DiscreteMeasure,
    population: &[f64],
    entries: &[usize],
) -> Result<f64> {
    let n = entries.len() as f64;
    let mut acc = 0.0;
    for model in conditional.support() {
        let row = lm.row(model)?;
        let empirical: f64 = entries.iter().map(|&i| row[i]).sum::<f64>() / n;
        let gap = population[model] - empirical;
        if !gap.is_finite() {
            let point = entries
                .iter()
                .copied()
                .find(|&i| row[i].is_infinite())
                .or_else(|| row.iter().position(|l| l.is_infinite()))
                .unwrap_or(0);
            return Err(Error::InfiniteLoss { model, point });
        }
        acc += conditional.weight(model) * gap;
    }
    Ok(acc)
}

/// `Σ_θ P_{Θ|Z=z}(θ) · G(θ, P_Z, P_z)`.
pub fn expected_gap(alg: &LearningAlgorithm, pz: &DiscreteMeasure, z: &Dataset) -> Result<f64> {
    alg.check_data_measure(pz)?;
    let conditional = alg.conditional(z)?;
    let population = alg.population_risks(pz)?;
    expected_gap_with(&alg.lm, conditional, &population, z.entries())
}

/// Expected gap averaged over `z ~ P_Z^{⊗n}`, by exact enumeration.
pub fn doubly_expected_gap(alg: &LearningAlgorithm, pz: &DiscreteMeasure) -> Result<f64> {
    alg.check_data_measure(pz)?;
    let population = alg.population_risks(pz)?;
    alg.average(pz, |rank, entries| {
        expected_gap_with(&alg.lm, &alg.kernel[rank], &population, entries)
    })
}

/// Builds the Gibbs algorithm with prior `q` and temperature `lambda` for
/// datasets of length `n`.
pub fn gibbs_posterior(lm: &LossModel, q: &DiscreteMeasure, lambda: f64, n: usize, cap: u64) -> Result<GibbsAlgorithm> {
    if !q.alphabet().same_as(lm.models()) {
        return Err(Error::AlphabetMismatch);
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::NonPositiveLambda(lambda));
    }
    for model in q.support() {
        require_finite_losses(lm, model, 0..lm.alphabet().size())?;
    }
    let count = dataset_count(lm.alphabet().size(), n, cap)?;
    let k = lm.alphabet().size();
    let columns: Vec<(DiscreteMeasure, f64)> = (0..count)
        .into_par_iter()
        .map(|rank| gibbs_column(lm, q, lambda, &entries_of_rank(rank, k, n)))
        .collect();
    let (kernel, log_partitions): (Vec<_>, Vec<_>) = columns.into_iter().unzip();
    Ok(GibbsAlgorithm {
        algorithm: LearningAlgorithm::from_table(lm.clone(), n, kernel)?,
        prior: q.clone(),
        lambda,
        log_partitions,
    })
}

fn gibbs_column(lm: &LossModel, q: &DiscreteMeasure, lambda: f64, entries: &[usize]) -> (DiscreteMeasure, f64) {
    let n = entries.len() as f64;
    let exponents: Vec<f64> = (0..lm.model_count())
        .map(|m| {
            if q.in_support(m) {
                let risk: f64 = entries.iter().map(|&i| lm.loss(m, i)).sum::<f64>() / n;
                -risk / lambda
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = q
        .weights()
        .iter()
        .zip(&exponents)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &e)| w * (e - shift).exp())
        .sum();
    let log_sum = sum.ln();
    let weights: Vec<f64> = q
        .weights()
        .iter()
        .zip(&exponents)
        .map(|(&w, &e)| {
            if w > 0.0 {
                (w.ln() + (e - shift) - log_sum).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let weights = weights.into_iter().map(|w| w / total).collect();
    (
        DiscreteMeasure::from_normalized(q.alphabet().clone(), weights),
        shift + log_sum,
    )
}

/// `P_Θ = Σ_z P_Z^{⊗n}(z) · P_{Θ|Z=z}`.
pub fn model_marginal(alg: &LearningAlgorithm, pz: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    alg.check_data_measure(pz)?;
    let models = alg.lm.models();
    let weighted = alg.weighted_ranks(pz);
    let weights = (0..models.size())
        .map(|m| {
            let terms: Vec<f64> = weighted
                .iter()
                .map(|&(rank, w)| w * alg.kernel[rank].weight(m))
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    DiscreteMeasure::new(models.clone(), weights)
}

/// `I = Σ_z P_Z^{⊗n}(z) · KL(P_{Θ|Z=z} ‖ P_Θ)`.
pub fn mutual_info(alg: &LearningAlgorithm, pz: &DiscreteMeasure) -> Result<f64> {
    let marginal = model_marginal(alg, pz)?;
    mutual_info_with(alg, pz, &marginal)
}

fn mutual_info_with(alg: &LearningAlgorithm, pz: &DiscreteMeasure, marginal: &DiscreteMeasure) -> Result<f64> {
    alg.average(pz, |rank, _| {
        let conditional = &alg.kernel[rank];
        require_abs_continuous(conditional, marginal)?;
        Ok(kl(conditional, marginal))
    })
}

/// `L = Σ_z P_Z^{⊗n}(z) · KL(P_Θ ‖ P_{Θ|Z=z})`.
pub fn lautum_info(alg: &LearningAlgorithm, pz: &DiscreteMeasure) -> Result<f64> {
    let marginal = model_marginal(alg, pz)?;
    lautum_info_with(alg, pz, &marginal)
}

fn lautum_info_with(alg: &LearningAlgorithm, pz: &DiscreteMeasure, marginal: &DiscreteMeasure) -> Result<f64> {
    alg.average(pz, |rank, _| {
        let conditional = &alg.kernel[rank];
        if let Some(model) = marginal.support().find(|&m| !conditional.in_support(m)) {
            return Err(Error::InfiniteLautum { model });
        }
        Ok(kl(marginal, conditional))
    })
}

/// Evaluates the doubly-expected gap directly and as `λ·(I + L)`.
pub fn gibbs_audit(g: &GibbsAlgorithm, pz: &DiscreteMeasure) -> Result<GapAudit> {
    let alg = &g.algorithm;
    let doubly_expected_direct = doubly_expected_gap(alg, pz)?;
    let marginal = model_marginal(alg, pz)?;
    let mutual = mutual_info_with(alg, pz, &marginal)?;
    let lautum = lautum_info_with(alg, pz, &marginal)?;
    let information_form = g.lambda * (mutual + lautum);
    Ok(GapAudit {
        lambda: g.lambda,
        doubly_expected_direct,
        mutual_info: mutual,
        lautum_info: lautum,
        information_form,
        identity_residual: doubly_expected_direct - information_form,
        datasets: alg.dataset_count(),
    })
}
