use std::collections::BTreeMap;

use super::state::StateVector;
use super::table::ImbalanceTable;
use crate::error::{Error, Result};

/// `Σ_{x ∈ solutions} |c_x|²` on the (possibly decayed) amplitudes.
pub fn success_probability(state: &StateVector, solutions: &[usize]) -> f64 {
    solutions.iter().fold(0.0, |acc, &x| acc + state.probability(x))
}

/// Probability mass per integer imbalance.
#[derive(Debug, Clone, PartialEq)]
pub struct SzHistogram {
    pub scale: u32,
    pub bins: BTreeMap<i64, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedHistogram {
    pub bins: BTreeMap<i64, f64>,
    /// False when `P(D = 0) = 0` and the bins are left unnormalized.
    pub normalized: bool,
}

impl SzHistogram {
    pub fn total(&self) -> f64 {
        self.bins.values().sum()
    }

    /// `P(D) / P(D = 0)`.
    pub fn normalized(&self) -> NormalizedHistogram {
        match self.bins.get(&0) {
            Some(&p0) if p0 > 0.0 => NormalizedHistogram {
                bins: self.bins.iter().map(|(&d, &p)| (d, p / p0)).collect(),
                normalized: true,
            },
            _ => NormalizedHistogram { bins: self.bins.clone(), normalized: false },
        }
    }

    /// `⟨S_z²⟩` under the histogram, with `S_z = D / 2^(scale+1)`.
    pub fn second_moment(&self) -> f64 {
        let unit = (self.scale as f64 + 1.0).exp2();
        self.bins.iter().map(|(&d, &p)| p * (d as f64 / unit).powi(2)).sum()
    }

    pub fn merge(&mut self, other: &SzHistogram) {
        for (&d, &p) in &other.bins {
            *self.bins.entry(d).or_insert(0.0) += p;
        }
    }
}

pub fn sz_histogram(state: &StateVector, table: &ImbalanceTable) -> Result<SzHistogram> {
    if state.n() != table.n() {
        return Err(Error::SizeMismatch { state: state.n(), table: table.n() });
    }
    let mut bins = BTreeMap::new();
    for (a, &d) in state.amplitudes().iter().zip(table.values()) {
        *bins.entry(d).or_insert(0.0) += a.norm_sqr();
    }
    Ok(SzHistogram { scale: table.scale(), bins })
}
