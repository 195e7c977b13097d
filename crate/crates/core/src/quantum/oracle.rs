//! Diagonal phase oracles.
//!
//! The generalized oracle multiplies the amplitude of `|x⟩` by
//!
//! ```text
//! χ(μ, r) = −(1 + iμ − r) / (1 − iμ + r),    μ = 2 S_z / γ
//! ```
//!
//! which for `r = 0` is `exp(i(2 arctan μ + π))`: a phase step of width `γ`
//! that is exactly `−1` at `S_z = 0` and tends to `+1` far from it. A decay
//! `r > 0` makes `|χ| < 1`; the lost norm is never restored.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use super::table::{ImbalanceTable, RealImbalanceTable};
use crate::error::{Error, Result};

/// `χ(μ, r)`.
pub fn phase_factor(mu: f64, r: f64) -> Complex64 {
    if !mu.is_finite() || mu.abs() > 1e150 {
        return Complex64::new(1.0, 0.0);
    }
    let den = mu * mu + (1.0 + r) * (1.0 + r);
    Complex64::new((mu * mu + r * r - 1.0) / den, -2.0 * mu / den)
}

/// `Mod(a, d, b)`: the representative of `a` modulo `d` in `[b, b + d)`.
pub fn offset_mod(a: i64, divisor: u64, offset: i64) -> i64 {
    debug_assert!(divisor.is_power_of_two());
    let d = divisor as i64;
    (a - offset).rem_euclid(d) + offset
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    /// Step width `γ`, in units of the table scale.
    pub gamma: f64,
    /// Target imbalance `D*`.
    #[serde(default)]
    pub target: i64,
    /// Decay per query `r = Γ_a / (γ J_max)`.
    #[serde(default)]
    pub r: f64,
    /// Optional modulus (in units of `D`) for the comb-driven modular oracle.
    #[serde(default)]
    pub modulus: Option<u64>,
    /// Apply the echo partner `χ*` instead of `χ`.
    #[serde(default)]
    pub conjugate: bool,
}

impl OracleSpec {
    pub fn new(gamma: f64) -> Self {
        OracleSpec { gamma, target: 0, r: 0.0, modulus: None, conjugate: false }
    }

    pub fn with_decay(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn with_target(mut self, target: i64) -> Self {
        self.target = target;
        self
    }

    pub fn with_modulus(mut self, modulus: u64) -> Self {
        self.modulus = Some(modulus);
        self
    }

    pub fn conjugated(mut self) -> Self {
        self.conjugate = !self.conjugate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Parameter(format!("step width must be positive and finite, got {}", self.gamma)));
        }
        if !(self.r >= 0.0) || !self.r.is_finite() {
            return Err(Error::Parameter(format!("decay must be non-negative and finite, got {}", self.r)));
        }
        if let Some(m) = self.modulus {
            if m < 2 || !m.is_power_of_two() {
                return Err(Error::Parameter(format!("modulus must be a power of two >= 2, got {m}")));
            }
        }
        Ok(())
    }

    /// Normalized detuning `μ` of a state with imbalance `d` in a table of
    /// the given scale.
    pub fn mu(&self, d: i64, scale: u32) -> f64 {
        let mut offset = d - self.target;
        if let Some(m) = self.modulus {
            offset = offset_mod(offset, m, -((m / 2) as i64));
        }
        offset as f64 / ((scale as f64).exp2() * self.gamma)
    }

    pub fn factor(&self, d: i64, scale: u32) -> Complex64 {
        let chi = phase_factor(self.mu(d, scale), self.r);
        if self.conjugate {
            chi.conj()
        } else {
            chi
        }
    }
}

/// A precomputed diagonal: one complex factor per basis state.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOracle {
    n: usize,
    phases: Vec<Complex64>,
}

impl PhaseOracle {
    pub fn from_phases(n: usize, phases: Vec<Complex64>) -> Result<Self> {
        if phases.len() != 1usize << n {
            return Err(Error::SizeMismatch { state: n, table: phases.len().trailing_zeros() as usize });
        }
        Ok(PhaseOracle { n, phases })
    }

    /// Generalized oracle. `χ` is evaluated once per distinct imbalance.
    /// The `conjugate` flag of `spec` is baked into the phases.
    pub fn generalized(table: &ImbalanceTable, spec: &OracleSpec) -> Result<Self> {
        spec.validate()?;
        let mut cache: HashMap<i64, Complex64> = HashMap::new();
        let phases = table
            .values()
            .iter()
            .map(|&d| *cache.entry(d).or_insert_with(|| spec.factor(d, table.scale())))
            .collect();
        Ok(PhaseOracle { n: table.n(), phases })
    }

    /// `−1` exactly on states with `D = target`, `+1` elsewhere.
    pub fn ideal(table: &ImbalanceTable, target: i64) -> Self {
        let phases = table
            .values()
            .iter()
            .map(|&d| Complex64::new(if d == target { -1.0 } else { 1.0 }, 0.0))
            .collect();
        PhaseOracle { n: table.n(), phases }
    }

    /// Ideal oracle marking an explicit set of basis states.
    pub fn marked(n: usize, marked: &[usize]) -> Result<Self> {
        let mut phases = vec![Complex64::new(1.0, 0.0); 1 << n];
        for &x in marked {
            *phases
                .get_mut(x)
                .ok_or_else(|| Error::Parameter(format!("marked state {x} outside a {n}-qubit register")))? =
                Complex64::new(-1.0, 0.0);
        }
        Ok(PhaseOracle { n, phases })
    }

    /// Generalized oracle on real weights: `μ = 2 S_z / γ = D / γ`.
    pub fn real(table: &RealImbalanceTable, gamma: f64, r: f64) -> Result<Self> {
        OracleSpec::new(gamma).with_decay(r).validate()?;
        let phases = table.values().iter().map(|&d| phase_factor(d / gamma, r)).collect();
        Ok(PhaseOracle { n: table.n(), phases })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    /// Average phasor `χ̄ = Σ_x χ(x) / N`.
    pub fn mean_phasor(&self) -> Complex64 {
        self.phases.iter().sum::<Complex64>() / self.phases.len() as f64
    }

    /// Multiplies every amplitude by its factor, or by the conjugate factor.
    pub fn apply(&self, state: &mut StateVector, conjugate: bool) -> Result<()> {
        if state.n() != self.n {
            return Err(Error::SizeMismatch { state: state.n(), table: self.n });
        }
        let amps = state.amplitudes_mut();
        if conjugate {
            amps.iter_mut().zip(&self.phases).for_each(|(a, p)| *a *= p.conj());
        } else {
            amps.iter_mut().zip(&self.phases).for_each(|(a, p)| *a *= p);
        }
        Ok(())
    }
}

/// One application of the generalized (optionally modular, decaying or
/// conjugated) oracle.
pub fn apply_oracle(state: &mut StateVector, table: &ImbalanceTable, spec: &OracleSpec) -> Result<()> {
    if state.n() != table.n() {
        return Err(Error::SizeMismatch { state: state.n(), table: table.n() });
    }
    PhaseOracle::generalized(table, spec)?.apply(state, false)
}

/// The textbook oracle: a `π` phase on every state with `D = target`.
pub fn apply_ideal_oracle(state: &mut StateVector, table: &ImbalanceTable, target: i64) -> Result<()> {
    if state.n() != table.n() {
        return Err(Error::SizeMismatch { state: state.n(), table: table.n() });
    }
    for (a, &d) in state.amplitudes_mut().iter_mut().zip(table.values()) {
        if d == target {
            *a = -*a;
        }
    }
    Ok(())
}
