//! Probability measures on finite alphabets and the divergence calculus on them.
//!
//! Measures are dense weight vectors indexed by alphabet position. Every
//! accumulation runs in ascending index order so results are reproducible
//! bit-for-bit. Extended reals are plain `f64` with `f64::INFINITY` as the
//! distinguished infinity.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Maximum drift of the total mass tolerated after construction.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// An ordered set of distinct labels.
///
/// Used both for data points (each label stands for a pair `(x, y)`) and for
/// model sets.
#[derive(Clone)]
pub struct Alphabet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<I, S>(labels: I) -> Result<Arc<Self>>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Arc::new(Self { labels, index }))
    }

    /// Alphabet with labels `prefix0, prefix1, ...`.
    pub fn numbered(prefix: &str, size: usize) -> Result<Arc<Self>> {
        Self::new((0..size).map(|i| format!("{prefix}{i}")))
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Same labels in the same order.
    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || self.labels == other.labels
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.labels).finish()
    }
}

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

/// A probability measure on a finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    alphabet: Arc<Alphabet>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Validates and renormalizes `weights` by their computed sum.
    pub fn new(alphabet: Arc<Alphabet>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != alphabet.size() {
            return Err(Error::LengthMismatch {
                expected: alphabet.size(),
                found: weights.len(),
            });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteWeight { index });
            }
            if value < 0.0 {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroTotalMass);
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { alphabet, weights })
    }

    /// Builds a measure from weights already known to be normalized, e.g.
    /// integer ratios `k / n`. No renormalization is applied.
    pub(crate) fn from_normalized(alphabet: Arc<Alphabet>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(weights.len(), alphabet.size());
        debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        Self { alphabet, weights }
    }

    pub fn uniform(alphabet: Arc<Alphabet>) -> Self {
        let n = alphabet.size();
        Self::from_normalized(alphabet, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(alphabet: Arc<Alphabet>, index: usize) -> Result<Self> {
        let size = alphabet.size();
        if index >= size {
            return Err(Error::IndexOutOfRange { index, size });
        }
        let mut weights = vec![0.0; size];
        weights[index] = 1.0;
        Ok(Self::from_normalized(alphabet, weights))
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Indices with strictly positive weight, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
    }

    pub fn in_support(&self, index: usize) -> bool {
        self.weights[index] > 0.0
    }

    pub(crate) fn check_same_alphabet(&self, other: &Self) -> Result<()> {
        if self.alphabet.same_as(&other.alphabet) {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch)
        }
    }
}

/// `KL(p ‖ q)` in nats; `+∞` when `p` is not absolutely continuous with respect to `q`.
pub fn kl_divergence(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<f64> {
    p.check_same_alphabet(q)?;
    Ok(kl_unchecked(&p.weights, &q.weights))
}

pub(crate) fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            acc += pi * (pi / qi).ln();
        }
    }
    // Rounding can leave a tiny negative value when p and q nearly coincide.
    acc.max(0.0)
}

/// Symmetrized relative entropy `KL(p ‖ q) + KL(q ‖ p)`.
pub fn jeffreys_divergence(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<f64> {
    Ok(kl_divergence(p, q)? + kl_divergence(q, p)?)
}

/// Convex combination `w·p + (1 − w)·q`.
pub fn mix(p: &DiscreteMeasure, q: &DiscreteMeasure, w: f64) -> Result<DiscreteMeasure> {
    p.check_same_alphabet(q)?;
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::WeightOutOfRange(w));
    }
    if w == 1.0 {
        return Ok(p.clone());
    }
    if w == 0.0 {
        return Ok(q.clone());
    }
    let weights = p
        .weights
        .iter()
        .zip(&q.weights)
        .map(|(&a, &b)| w * a + (1.0 - w) * b)
        .collect();
    Ok(DiscreteMeasure::from_normalized(p.alphabet.clone(), weights))
}

/// `support(p) ⊆ support(q)`.
pub fn is_abs_continuous(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<bool> {
    Ok(first_violation(p, q)?.is_none())
}

/// First point (ascending) carrying `p`-mass but no `q`-mass.
pub fn first_violation(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<Option<usize>> {
    p.check_same_alphabet(q)?;
    Ok(p.support().find(|&i| q.weights[i] <= 0.0))
}

pub(crate) fn require_abs_continuous(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<()> {
    match first_violation(p, q)? {
        Some(point) => Err(Error::NotAbsContinuous { point }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab(n: usize) -> Arc<Alphabet> {
        Alphabet::numbered("z", n).unwrap()
    }

    fn m(w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(ab(w.len()), w.to_vec()).unwrap()
    }

    #[test]
    fn construction_normalizes() {
        assert_eq!(m(&[1.0, 1.0]).weights(), &[0.5, 0.5]);
        let w = m(&[2.0, 3.0, 5.0]);
        for (a, b) in w.weights().iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn construction_errors() {
        let a = ab(2);
        assert_eq!(
            DiscreteMeasure::new(a.clone(), vec![1.0, -0.1]),
            Err(Error::NegativeWeight { index: 1, value: -0.1 })
        );
        assert_eq!(
            DiscreteMeasure::new(a.clone(), vec![0.0, 0.0]),
            Err(Error::ZeroTotalMass)
        );
        assert_eq!(
            DiscreteMeasure::new(a.clone(), vec![1.0]),
            Err(Error::LengthMismatch { expected: 2, found: 1 })
        );
        assert_eq!(
            DiscreteMeasure::new(a, vec![f64::NAN, 1.0]),
            Err(Error::NonFiniteWeight { index: 0 })
        );
    }

    #[test]
    fn alphabet_rejects_duplicates_and_empty() {
        assert_eq!(
            Alphabet::new(["a", "a"]).unwrap_err(),
            Error::DuplicateLabel("a".into())
        );
        assert_eq!(Alphabet::new(Vec::<String>::new()).unwrap_err(), Error::EmptyAlphabet);
        let a = Alphabet::new(["x", "y"]).unwrap();
        assert_eq!(a.index_of("y"), Some(1));
        assert_eq!(a.label(0), Some("x"));
    }

    #[test]
    fn kl_examples() {
        let p = m(&[0.3, 0.7]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let v = kl_divergence(&m(&[1.0, 0.0]), &m(&[0.5, 0.5])).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(kl_divergence(&m(&[0.5, 0.5]), &m(&[1.0, 0.0])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn kl_rejects_foreign_alphabet() {
        let p = m(&[0.5, 0.5]);
        let q = DiscreteMeasure::new(Alphabet::new(["a", "b"]).unwrap(), vec![1.0, 1.0]).unwrap();
        assert_eq!(kl_divergence(&p, &q), Err(Error::AlphabetMismatch));
    }

    #[test]
    fn jeffreys_example() {
        let p = m(&[0.26894, 0.73106]);
        let q = m(&[0.5, 0.5]);
        // Direct summation of both KL directions in high precision.
        let expected = 0.231_061_670_408_780_66;
        let j = jeffreys_divergence(&p, &q).unwrap();
        assert!((j - expected).abs() < 1e-12, "{j}");
        assert_eq!(j, jeffreys_divergence(&q, &p).unwrap());
        assert_eq!(jeffreys_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn mix_examples() {
        let p = m(&[1.0, 0.0]);
        let q = m(&[0.0, 1.0]);
        assert_eq!(mix(&p, &q, 1.0).unwrap(), p);
        assert_eq!(mix(&p, &q, 0.25).unwrap().weights(), &[0.25, 0.75]);
        assert_eq!(mix(&p, &q, 1.5), Err(Error::WeightOutOfRange(1.5)));
    }

    #[test]
    fn abs_continuity_examples() {
        let p = m(&[0.5, 0.5]);
        let q = m(&[1.0, 0.0]);
        assert!(is_abs_continuous(&p, &p).unwrap());
        assert!(!is_abs_continuous(&p, &q).unwrap());
        assert!(is_abs_continuous(&q, &p).unwrap());
        assert_eq!(first_violation(&p, &q).unwrap(), Some(1));
    }
}
