//! Coefficient vectors: supports, sparsity, cones and block selection.
//!
//! Indices are 0-based throughout the crate and in all serialized output.

use nalgebra::DVector;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// A candidate coefficient vector in R^M.
///
/// Serializes as a bare JSON array of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    beta: DVector<f64>,
}

impl Serialize for CoefficientVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.beta.iter())
    }
}

impl<'de> Deserialize<'de> for CoefficientVector {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        Ok(CoefficientVector::from_vec(values))
    }
}

impl CoefficientVector {
    pub fn from_vec(values: Vec<f64>) -> Self {
        CoefficientVector {
            beta: DVector::from_vec(values),
        }
    }

    pub fn zeros(m: usize) -> Self {
        CoefficientVector {
            beta: DVector::zeros(m),
        }
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.len() == 0
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn as_slice(&self) -> &[f64] {
        self.beta.as_slice()
    }

    /// Support of the vector: indices with `|beta_j| > zero_tol`.
    pub fn support(&self, zero_tol: f64) -> Vec<usize> {
        self.beta
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > zero_tol)
            .map(|(j, _)| j)
            .collect()
    }

    /// Number of coordinates counted as nonzero at the given tolerance.
    pub fn sparsity(&self, zero_tol: f64) -> usize {
        self.support(zero_tol).len()
    }

    pub fn l1_norm(&self) -> f64 {
        self.beta.iter().map(|v| v.abs()).sum()
    }

    pub fn lp_norm_p(&self, p: f64) -> f64 {
        self.beta.iter().map(|v| v.abs().powf(p)).sum()
    }
}

impl From<DVector<f64>> for CoefficientVector {
    fn from(beta: DVector<f64>) -> Self {
        CoefficientVector { beta }
    }
}

/// Sparsity count and sorted support of `beta`, treating entries with
/// `|beta_j| <= zero_tol` as zero.
pub fn sparsity_and_support(beta: &CoefficientVector, zero_tol: f64) -> (usize, Vec<usize>) {
    let support = beta.support(zero_tol);
    (support.len(), support)
}

fn l1_split(delta: &[f64], j0: &[usize]) -> (f64, f64) {
    let mut on = 0.0;
    let mut off_total = 0.0;
    let mut mask = vec![false; delta.len()];
    for &j in j0 {
        mask[j] = true;
    }
    for (j, v) in delta.iter().enumerate() {
        if mask[j] {
            on += v.abs();
        } else {
            off_total += v.abs();
        }
    }
    (on, off_total)
}

/// True when the l1 mass of `delta` outside `j0` is at most `c0` times the
/// l1 mass on `j0`.
pub fn cone_membership(delta: &CoefficientVector, j0: &[usize], c0: f64) -> bool {
    let (on, off) = l1_split(delta.as_slice(), j0);
    off <= c0 * on
}

/// Indices of the `m` largest-magnitude coordinates of `delta` outside `j0`
/// (ties broken towards the smaller index), together with their union with
/// `j0`. Both returned sets are sorted.
pub fn select_j01(
    delta: &CoefficientVector,
    j0: &[usize],
    m: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let total = delta.len();
    if m + j0.len() > total {
        return Err(Error::invalid(format!(
            "select_j01: m + |J0| = {} exceeds dimension {}",
            m + j0.len(),
            total
        )));
    }
    let mut in_j0 = vec![false; total];
    for &j in j0 {
        in_j0[j] = true;
    }
    let mut outside: Vec<usize> = (0..total).filter(|&j| !in_j0[j]).collect();
    // Descending magnitude, index ascending on ties; sort is stable so the
    // index order of equal keys is preserved.
    outside.sort_by(|&a, &b| {
        delta.as_slice()[b]
            .abs()
            .partial_cmp(&delta.as_slice()[a].abs())
            .unwrap()
    });
    let mut j1: Vec<usize> = outside.into_iter().take(m).collect();
    j1.sort_unstable();
    let mut j01 = j0.to_vec();
    j01.extend_from_slice(&j1);
    j01.sort_unstable();
    Ok((j1, j01))
}
