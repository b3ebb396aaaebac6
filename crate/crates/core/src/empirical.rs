//! Datasets, their types (empirical measures) and empirical risks.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::loss::{expected_loss, LossModel};
use crate::measure::{Alphabet, DiscreteMeasure};

/// A tuple `(z_1, ..., z_n)` of alphabet indices, `n ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    alphabet: Arc<Alphabet>,
    entries: Vec<usize>,
}

impl Dataset {
    pub fn new(alphabet: Arc<Alphabet>, entries: Vec<usize>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let size = alphabet.size();
        if let Some(&index) = entries.iter().find(|&&i| i >= size) {
            return Err(Error::IndexOutOfRange { index, size });
        }
        Ok(Self { alphabet, entries })
    }

    pub fn from_labels<S: AsRef<str>>(alphabet: Arc<Alphabet>, labels: &[S]) -> Result<Self> {
        let entries = labels
            .iter()
            .map(|l| {
                alphabet
                    .index_of(l.as_ref())
                    .ok_or_else(|| Error::UnknownLabel(l.as_ref().to_owned()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, entries)
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The type `P_z` of a dataset: exact counts plus the induced measure `counts / n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeMeasure {
    counts: Vec<u64>,
    n: u64,
    measure: DiscreteMeasure,
}

impl TypeMeasure {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn as_measure(&self) -> &DiscreteMeasure {
        &self.measure
    }

    pub fn into_measure(self) -> DiscreteMeasure {
        self.measure
    }
}

pub fn type_of(z: &Dataset) -> TypeMeasure {
    let mut counts = vec![0u64; z.alphabet.size()];
    for &i in &z.entries {
        counts[i] += 1;
    }
    let n = z.entries.len() as u64;
    let weights = counts.iter().map(|&c| c as f64 / n as f64).collect();
    TypeMeasure {
        counts,
        n,
        measure: DiscreteMeasure::from_normalized(z.alphabet.clone(), weights),
    }
}

/// `L(z, θ) = (1/n) Σ_t ℓ(θ, z_t)`.
pub fn empirical_risk(lm: &LossModel, z: &Dataset, model: usize) -> Result<f64> {
    if !lm.alphabet().same_as(&z.alphabet) {
        return Err(Error::AlphabetMismatch);
    }
    let row = lm.row(model)?;
    let total: f64 = z.entries.iter().map(|&i| row[i]).sum();
    Ok(total / z.entries.len() as f64)
}

/// Empirical risk evaluated as the expected loss under the dataset's type.
pub fn risk_via_type(lm: &LossModel, z: &Dataset, model: usize) -> Result<f64> {
    if !lm.alphabet().same_as(&z.alphabet) {
        return Err(Error::AlphabetMismatch);
    }
    expected_loss(lm, model, type_of(z).as_measure())
}

/// Concatenation `(z1, z2)`.
pub fn aggregate(z1: &Dataset, z2: &Dataset) -> Result<Dataset> {
    if !z1.alphabet.same_as(&z2.alphabet) {
        return Err(Error::AlphabetMismatch);
    }
    let mut entries = Vec::with_capacity(z1.len() + z2.len());
    entries.extend_from_slice(&z1.entries);
    entries.extend_from_slice(&z2.entries);
    Ok(Dataset {
        alphabet: z1.alphabet.clone(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::measure::{is_abs_continuous, mix};

    fn ab() -> Arc<Alphabet> {
        Alphabet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn type_examples() {
        let a = ab();
        let t = type_of(&Dataset::from_labels(a.clone(), &["a", "a", "a"]).unwrap());
        assert_eq!(t.counts(), &[3, 0]);
        assert_eq!(t.as_measure().weights(), &[1.0, 0.0]);
        let t = type_of(&Dataset::from_labels(a.clone(), &["a", "a", "b"]).unwrap());
        assert_eq!(t.as_measure().weights(), &[2.0 / 3.0, 1.0 / 3.0]);
        let permuted = type_of(&Dataset::from_labels(a, &["b", "a", "a"]).unwrap());
        assert_eq!(t, permuted);
    }

    #[test]
    fn dataset_validation() {
        let a = ab();
        assert_eq!(Dataset::new(a.clone(), vec![]), Err(Error::EmptyDataset));
        assert_eq!(
            Dataset::new(a.clone(), vec![0, 2]),
            Err(Error::IndexOutOfRange { index: 2, size: 2 })
        );
        assert_eq!(Dataset::from_labels(a, &["c"]), Err(Error::UnknownLabel("c".into())));
    }

    #[test]
    fn empirical_risk_examples() {
        let w2 = fixtures::w2();
        let a = w2.model.alphabet().clone();
        let z = Dataset::new(a.clone(), vec![0, 0, 1]).unwrap();
        let direct = (0.0 + 0.0 + 1.0) / 3.0;
        assert_eq!(empirical_risk(&w2.model, &z, 0).unwrap(), direct);
        assert!((risk_via_type(&w2.model, &z, 0).unwrap() - direct).abs() < 1e-15);
        let single = Dataset::new(a, vec![1]).unwrap();
        assert_eq!(empirical_risk(&w2.model, &single, 0).unwrap(), 1.0);
    }

    #[test]
    fn constant_loss_risk() {
        let a = Alphabet::numbered("z", 3).unwrap();
        let lm = LossModel::new(a.clone(), Alphabet::numbered("t", 1).unwrap(), vec![vec![1.5; 3]]).unwrap();
        let z = Dataset::new(a, vec![0, 2, 2, 1]).unwrap();
        assert_eq!(empirical_risk(&lm, &z, 0).unwrap(), 1.5);
        assert!((risk_via_type(&lm, &z, 0).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn aggregate_examples() {
        let a = ab();
        let z1 = Dataset::from_labels(a.clone(), &["a"]).unwrap();
        let z2 = Dataset::from_labels(a.clone(), &["b", "b"]).unwrap();
        let z0 = aggregate(&z1, &z2).unwrap();
        assert_eq!(z0.entries(), &[0, 1, 1]);
        let t0 = type_of(&z0);
        assert_eq!(t0.as_measure().weights(), &[1.0 / 3.0, 2.0 / 3.0]);

        let mixed = mix(type_of(&z1).as_measure(), type_of(&z2).as_measure(), 1.0 / 3.0).unwrap();
        for (x, y) in mixed.weights().iter().zip(t0.as_measure().weights()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(is_abs_continuous(type_of(&z1).as_measure(), t0.as_measure()).unwrap());

        let doubled = aggregate(&z0, &z0).unwrap();
        assert_eq!(type_of(&doubled).as_measure(), t0.as_measure());
    }

    #[test]
    fn aggregate_rejects_foreign_alphabet() {
        let z1 = Dataset::new(ab(), vec![0]).unwrap();
        let z2 = Dataset::new(Alphabet::new(["x", "y"]).unwrap(), vec![0]).unwrap();
        assert_eq!(aggregate(&z1, &z2), Err(Error::AlphabetMismatch));
    }
}
