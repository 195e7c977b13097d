use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{self, ProblemInstance, RealInstance, DEFAULT_ENUMERATION_CAP};

/// Which couplings an imbalance table is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// The full integer weights.
    Full,
    /// Layer `index` of a recursive run with `bits` bits per layer: each weight
    /// is reduced modulo `2^(index·bits)`.
    Layer { index: u32, bits: u32 },
}

/// Exact imbalance `D(x)` of every basis state.
///
/// `scale` fixes the physical normalization: `S_z(x) = D(x) / 2^(scale+1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImbalanceTable {
    n: usize,
    values: Vec<i64>,
    scale: u32,
    coupling: Coupling,
}

impl ImbalanceTable {
    /// Builds `D(x) = Σ a_i s_i` by doubling: setting bit `i` subtracts `2 a_i`.
    pub fn from_weights(weights: &[u64], scale: u32, coupling: Coupling) -> Result<Self> {
        let n = weights.len();
        if n == 0 || n > DEFAULT_ENUMERATION_CAP {
            return Err(Error::Capability { n, cap: DEFAULT_ENUMERATION_CAP });
        }
        let mut values = Vec::with_capacity(1 << n);
        values.push(weights.iter().sum::<u64>() as i64);
        for &a in weights {
            let shift = 2 * a as i64;
            let len = values.len();
            for j in 0..len {
                let v = values[j] - shift;
                values.push(v);
            }
        }
        Ok(ImbalanceTable { n, values, scale, coupling })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    /// `S_z(x) = D(x) / 2^(scale+1)`.
    pub fn sz(&self, x: usize) -> f64 {
        self.values[x] as f64 / (self.scale as f64 + 1.0).exp2()
    }

    /// Same imbalances, different physical normalization.
    pub fn rescaled(mut self, scale: u32) -> Self {
        self.scale = scale;
        self
    }

    /// Indices with `D(x) = target`.
    pub fn matching(&self, target: i64) -> Vec<usize> {
        (0..self.values.len()).filter(|&x| self.values[x] == target).collect()
    }
}

pub fn build_imbalance_table(instance: &ProblemInstance, coupling: Coupling) -> Result<ImbalanceTable> {
    match coupling {
        Coupling::Full => ImbalanceTable::from_weights(&instance.weights, instance.k, coupling),
        Coupling::Layer { index, bits } => {
            let width = index * bits;
            if index == 0 || bits == 0 || width > instances::MAX_BIT_DEPTH + bits {
                return Err(Error::Parameter(format!("layer {index} with {bits} bits per layer is out of range")));
            }
            let modulus = 1u64 << width;
            let reduced: Vec<u64> = instance.weights.iter().map(|&a| a % modulus).collect();
            ImbalanceTable::from_weights(&reduced, width, coupling)
        }
    }
}

/// All weights equal to one at scale 0; with target `n` it marks only `|0…0⟩`.
pub fn all_ones_table(n: usize) -> Result<ImbalanceTable> {
    ImbalanceTable::from_weights(&vec![1; n], 0, Coupling::Full)
}

/// Real-valued imbalances `D(x) = Σ w_i s_i`, so that `S_z = D/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImbalanceTable {
    n: usize,
    values: Vec<f64>,
}

impl RealImbalanceTable {
    pub fn new(instance: &RealInstance) -> Result<Self> {
        if instance.n == 0 || instance.n > DEFAULT_ENUMERATION_CAP {
            return Err(Error::Capability { n: instance.n, cap: DEFAULT_ENUMERATION_CAP });
        }
        Ok(RealImbalanceTable { n: instance.n, values: instances::real_imbalances(&instance.weights) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
