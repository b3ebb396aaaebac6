//! Finite model sets with nonnegative loss tables.

use std::sync::Arc;

use crate::empirical::{empirical_risk, Dataset};
use crate::error::{Error, Result};
use crate::measure::{Alphabet, DiscreteMeasure};

/// A loss table `loss[θ][z] = ℓ(θ, z)` over a finite model set and data alphabet.
///
/// Entries may be `+∞`; feasibility of a tilt is checked per reference measure.
#[derive(Clone, Debug, PartialEq)]
pub struct LossModel {
    alphabet: Arc<Alphabet>,
    models: Arc<Alphabet>,
    loss: Vec<Vec<f64>>,
}

impl LossModel {
    pub fn new(alphabet: Arc<Alphabet>, models: Arc<Alphabet>, loss: Vec<Vec<f64>>) -> Result<Self> {
        if loss.len() != models.size() {
            return Err(Error::LengthMismatch {
                expected: models.size(),
                found: loss.len(),
            });
        }
        for (model, row) in loss.iter().enumerate() {
            if row.len() != alphabet.size() {
                return Err(Error::LengthMismatch {
                    expected: alphabet.size(),
                    found: row.len(),
                });
            }
            for (point, &value) in row.iter().enumerate() {
                if value.is_nan() || value < 0.0 {
                    return Err(Error::InvalidLoss { model, point, value });
                }
            }
        }
        Ok(Self { alphabet, models, loss })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn models(&self) -> &Arc<Alphabet> {
        &self.models
    }

    pub fn model_count(&self) -> usize {
        self.models.size()
    }

    pub fn row(&self, model: usize) -> Result<&[f64]> {
        self.loss
            .get(model)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownModel(model))
    }

    pub fn loss(&self, model: usize, point: usize) -> f64 {
        self.loss[model][point]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.loss
    }

    /// Same table with `shift` added to every entry of `model`'s row.
    pub fn shifted(&self, model: usize, shift: f64) -> Result<Self> {
        self.row(model)?;
        let mut loss = self.loss.clone();
        loss[model].iter_mut().for_each(|l| *l += shift);
        Self::new(self.alphabet.clone(), self.models.clone(), loss)
    }

    pub(crate) fn check_measure(&self, p: &DiscreteMeasure) -> Result<()> {
        if self.alphabet.same_as(p.alphabet()) {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch)
        }
    }

    pub(crate) fn checked_row(&self, model: usize, p: &DiscreteMeasure) -> Result<&[f64]> {
        self.check_measure(p)?;
        self.row(model)
    }
}

/// `Σ_i p_i · ℓ(θ, i)`; points outside the support contribute nothing even
/// when their loss is infinite.
pub fn expected_loss(lm: &LossModel, model: usize, p: &DiscreteMeasure) -> Result<f64> {
    let row = lm.checked_row(model, p)?;
    Ok(expectation(row, p.weights()))
}

pub(crate) fn expectation(row: &[f64], weights: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&w, &l) in weights.iter().zip(row) {
        if w > 0.0 {
            acc += w * l;
        }
    }
    acc
}

/// Largest loss over the support of `p`.
pub fn max_loss_on_support(lm: &LossModel, model: usize, p: &DiscreteMeasure) -> Result<f64> {
    let row = lm.checked_row(model, p)?;
    Ok(p.support().map(|i| row[i]).fold(f64::NEG_INFINITY, f64::max))
}

/// Exhaustive minimizer of `L(z, θ) + λ·r[θ]`; ties go to the lowest index.
pub fn erm_minimizer(lm: &LossModel, z: &Dataset, lambda: f64, regularizer: &[f64]) -> Result<usize> {
    if !lm.alphabet.same_as(z.alphabet()) {
        return Err(Error::AlphabetMismatch);
    }
    if regularizer.len() != lm.model_count() {
        return Err(Error::LengthMismatch {
            expected: lm.model_count(),
            found: regularizer.len(),
        });
    }
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for (model, &r) in regularizer.iter().enumerate() {
        let penalty = if lambda == 0.0 { 0.0 } else { lambda * r };
        let value = empirical_risk(lm, z, model)? + penalty;
        if value < best_value {
            best = model;
            best_value = value;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::measure::mix;

    #[test]
    fn expected_loss_examples() {
        let w2 = fixtures::w2();
        let half = w2.reference.clone();
        assert_eq!(expected_loss(&w2.model, 0, &half).unwrap(), 0.5);
        let p = DiscreteMeasure::new(w2.model.alphabet().clone(), vec![0.26894, 0.73106]).unwrap();
        assert!((expected_loss(&w2.model, 0, &p).unwrap() - 0.73106).abs() < 1e-15);

        let zero = LossModel::new(
            w2.model.alphabet().clone(),
            Alphabet::numbered("t", 1).unwrap(),
            vec![vec![0.0, 0.0]],
        )
        .unwrap();
        assert_eq!(expected_loss(&zero, 0, &p).unwrap(), 0.0);
        assert_eq!(expected_loss(&zero, 1, &p), Err(Error::UnknownModel(1)));
    }

    #[test]
    fn infinite_loss_off_support_is_ignored() {
        let a = Alphabet::numbered("z", 2).unwrap();
        let lm = LossModel::new(
            a.clone(),
            Alphabet::numbered("t", 1).unwrap(),
            vec![vec![1.0, f64::INFINITY]],
        )
        .unwrap();
        let p = DiscreteMeasure::point_mass(a.clone(), 0).unwrap();
        assert_eq!(expected_loss(&lm, 0, &p).unwrap(), 1.0);
        let q = DiscreteMeasure::uniform(a);
        assert_eq!(expected_loss(&lm, 0, &q).unwrap(), f64::INFINITY);
        assert_eq!(max_loss_on_support(&lm, 0, &q).unwrap(), f64::INFINITY);
    }

    #[test]
    fn max_loss_examples() {
        let w2 = fixtures::w2();
        let a = w2.model.alphabet().clone();
        let p = DiscreteMeasure::point_mass(a, 0).unwrap();
        assert_eq!(max_loss_on_support(&w2.model, 0, &p).unwrap(), 0.0);
        assert_eq!(max_loss_on_support(&w2.model, 0, &w2.reference).unwrap(), 1.0);
    }

    #[test]
    fn rejects_negative_loss_and_bad_shapes() {
        let a = Alphabet::numbered("z", 2).unwrap();
        let t = Alphabet::numbered("t", 1).unwrap();
        assert!(matches!(
            LossModel::new(a.clone(), t.clone(), vec![vec![-1.0, 0.0]]),
            Err(Error::InvalidLoss { .. })
        ));
        assert!(matches!(
            LossModel::new(a, t, vec![vec![0.0]]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn erm_examples() {
        let w3 = fixtures::w3();
        let a = w3.model.alphabet().clone();
        let z = Dataset::new(a.clone(), vec![0, 0]).unwrap();
        // θ1 has loss 0 at z1, θ2 has loss 2.
        assert_eq!(erm_minimizer(&w3.model, &z, 0.0, &[0.0, 0.0]).unwrap(), 0);
        let z = Dataset::new(a.clone(), vec![2, 2]).unwrap();
        assert_eq!(erm_minimizer(&w3.model, &z, 0.0, &[0.0, 0.0]).unwrap(), 1);
        // Regularization flips the choice.
        assert_eq!(erm_minimizer(&w3.model, &z, 1.0, &[0.0, 3.0]).unwrap(), 0);
        // Tie: (z2) has loss 1 under both models.
        let z = Dataset::new(a, vec![1]).unwrap();
        assert_eq!(erm_minimizer(&w3.model, &z, 0.0, &[0.0, 0.0]).unwrap(), 0);
        assert!(matches!(
            erm_minimizer(&w3.model, &z, 0.0, &[0.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn expected_loss_is_linear() {
        let w3 = fixtures::w3();
        let p = w3.data.clone();
        let q = DiscreteMeasure::new(w3.model.alphabet().clone(), vec![0.1, 0.1, 0.8]).unwrap();
        let w = 0.3;
        let lhs = expected_loss(&w3.model, 0, &mix(&p, &q, w).unwrap()).unwrap();
        let rhs = w * expected_loss(&w3.model, 0, &p).unwrap() + (1.0 - w) * expected_loss(&w3.model, 0, &q).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
