use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// A vector of non-negative integer exponents.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex(SmallVec<[u32; 4]>);

impl MultiIndex {
    pub fn new(entries: impl Into<Vec<u32>>) -> Self {
        MultiIndex(SmallVec::from_vec(entries.into()))
    }

    pub fn zeros(len: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, len))
    }

    pub fn unit(len: usize, j: usize) -> Self {
        let mut m = Self::zeros(len);
        m.0[j] = 1;
        m
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0[j]
    }

    /// Total order |m|.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Componentwise `self ≤ other`. Lengths must agree.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.len(), other.len(), "multi-index length mismatch");
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other`, or `None` if some entry would go negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.len() != other.len() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<SmallVec<_>>>()
            .map(MultiIndex)
    }

    pub fn with(&self, j: usize, value: u32) -> MultiIndex {
        let mut m = self.clone();
        m.0[j] = value;
        m
    }

    /// m! = Π m_j!
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| factorial(e)).product()
    }

    /// All multi-indices `m` with `m ≤ self`, in lexicographic order.
    pub fn below(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zeros(self.len())];
        for (j, &bound) in self.0.iter().enumerate() {
            out = out
                .into_iter()
                .flat_map(|m| (0..=bound).map(move |e| m.with(j, e)))
                .collect();
        }
        out
    }

    /// All multi-indices of length `len` with total order at most `max_order`.
    pub fn up_to_order(len: usize, max_order: u32) -> Vec<MultiIndex> {
        MultiIndex::new(vec![max_order; len])
            .below()
            .into_iter()
            .filter(|m| m.order() <= max_order)
            .collect()
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex::new(v)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(m: MultiIndex) -> Self {
        m.0.into_vec()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Generalized binomial coefficient `β choose k` for real `β`.
pub fn binomial(beta: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (beta - f64::from(i)) / f64::from(i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_enumerates_box() {
        let m = MultiIndex::new(vec![1, 2]);
        let all = m.below();
        assert_eq!(all.len(), 6);
        assert!(all.iter().all(|a| a.le(&m)));
    }

    #[test]
    fn partial_order_and_sub() {
        let a = MultiIndex::new(vec![1, 0]);
        let b = MultiIndex::new(vec![1, 1]);
        assert!(a.le(&b));
        assert!(!b.le(&a));
        assert_eq!(b.checked_sub(&a), Some(MultiIndex::new(vec![0, 1])));
        assert_eq!(a.checked_sub(&b), None);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5.0, 2), 10.0);
        assert_eq!(binomial(-2.0, 1), -2.0);
        assert_eq!(binomial(-2.0, 2), 3.0);
        assert_eq!(binomial(0.5, 0), 1.0);
    }

    #[test]
    fn up_to_order_counts() {
        assert_eq!(MultiIndex::up_to_order(2, 1).len(), 3);
        assert_eq!(MultiIndex::up_to_order(2, 2).len(), 6);
        assert_eq!(MultiIndex::up_to_order(0, 3).len(), 1);
    }
}
