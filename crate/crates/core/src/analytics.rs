//! Closed-form models used to cross-check simulations.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// RMS of weights drawn uniformly from `(0, 1]`.
pub const UNIFORM_W_RMS: f64 = 0.577_350_269_189_625_8;
pub const DEFAULT_C: f64 = 1.0 / 3.0;
pub const DEFAULT_D: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsParams {
    pub n: usize,
    pub k: u32,
    pub gamma: f64,
    pub w_rms: f64,
    /// Decay per query.
    pub r: Option<f64>,
    /// Interaction-to-decay ratio `J_max/Γ_a`.
    pub rho: Option<f64>,
    /// Cooperativity.
    pub eta: Option<f64>,
    pub c: f64,
    pub d: f64,
}

impl AnalyticsParams {
    pub fn new(n: usize, k: u32, gamma: f64) -> Self {
        AnalyticsParams { n, k, gamma, w_rms: UNIFORM_W_RMS, r: None, rho: None, eta: None, c: DEFAULT_C, d: DEFAULT_D }
    }

    /// `σ = w_rms √n / γ`.
    pub fn sigma(&self) -> f64 {
        self.w_rms * (self.n as f64).sqrt() / self.gamma
    }

    pub fn k_eff(&self) -> f64 {
        -self.gamma.log2()
    }

    /// The decay implied by whichever of `r`, `ρ`, `η` are set; they must agree.
    pub fn resolved_r(&self) -> Result<f64> {
        if !(self.gamma > 0.0) || !(self.sigma() > 0.0) {
            return Err(Error::Parameter(format!("step width must be positive, got {}", self.gamma)));
        }
        let mut sources: Vec<(&str, f64)> = Vec::new();
        if let Some(r) = self.r {
            sources.push(("r", r));
        }
        if let Some(rho) = self.rho {
            sources.push(("rho", decay_from_rho(rho, self.gamma)));
        }
        if let Some(eta) = self.eta {
            sources.push(("eta", cooperativity_to_decay(self.sigma(), eta)));
        }
        let Some(&(first, r0)) = sources.first() else { return Ok(0.0) };
        for &(name, r) in &sources[1..] {
            if (r - r0).abs() > 1e-9 * r0.abs().max(r.abs()).max(1e-300) {
                return Err(Error::Parameter(format!("{first} gives r = {r0} but {name} gives r = {r}")));
            }
        }
        if !(r0 >= 0.0) || !r0.is_finite() {
            return Err(Error::Parameter(format!("decay must be non-negative and finite, got {r0}")));
        }
        Ok(r0)
    }
}

/// Trials `M = ln ε / ln(1 − P)` to reach error `ε`; `∞` for `P ≤ 0` and 1
/// for `P ≥ 1`.
pub fn trials_needed(p: f64, eps: f64) -> f64 {
    if p <= 0.0 {
        f64::INFINITY
    } else if p >= 1.0 {
        1.0
    } else {
        eps.ln() / (-p).ln_1p()
    }
}

/// `k_c = n − ½ log₂(nπ/6)`.
pub fn critical_bit_depth(n: usize) -> f64 {
    let n = n as f64;
    n - 0.5 * (n * PI / 6.0).log2()
}

/// `γ_c = 2^(−min(k_c, k))`.
pub fn critical_step_width(n: usize, k: u32) -> f64 {
    (-critical_bit_depth(n).min(k as f64)).exp2()
}

/// `⟨N_A⟩ ≈ √(6/(πn)) 2^(n−k)`.
pub fn expected_solutions(n: usize, k: u32) -> f64 {
    (6.0 / (PI * n as f64)).sqrt() * (n as f64 - k as f64).exp2()
}

/// Scaled complementary error function `e^{x²} erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 4.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    // erfc(x) e^{x²} √π = 1/(x + (1/2)/(x + (2/2)/(x + (3/2)/(x + …))))
    let mut tail = x;
    for j in (1..=100).rev() {
        tail = x + (j as f64 / 2.0) / tail;
    }
    1.0 / (tail * PI.sqrt())
}

/// Ensemble-averaged mean phasor for Gaussian detunings of width `σ`:
/// `1 − √(2π) erfcx((1+r)/(√2σ)) / σ`.
pub fn chibar(sigma: f64, r: f64) -> f64 {
    1.0 - (2.0 * PI).sqrt() * erfcx((1.0 + r) / (std::f64::consts::SQRT_2 * sigma)) / sigma
}

/// Lorentzian single-cycle gain `G(μ)` for a real mean phasor.
pub fn gain_curve(mu: f64, chibar: f64, r: f64) -> f64 {
    let a = 1.0 + r;
    4.0 * chibar * (chibar - 1.0) + ((1.0 - r) / a).powi(2) + 8.0 * chibar * a / (a * a + mu * mu)
}

/// Single-cycle gain of a state with phase factor `chi` under mean phasor
/// `chibar`, from `c ↦ 2c̄ − c` applied after the oracle.
pub fn exact_gain(chi: Complex64, chibar: Complex64) -> f64 {
    (2.0 * chibar - chi).norm_sqr()
}

/// Lower bound on the ensemble-averaged solution gain.
pub fn g0_bound(sigma: f64, r: f64) -> f64 {
    let x = chibar(sigma, r);
    ((1.0 - r) / (1.0 + r)).powi(2) + (8.0 / (1.0 + r) - 4.0) * x + 4.0 * x * x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoptModel {
    pub q_opt: f64,
    pub gamma_opt: f64,
    pub t_opt_star: f64,
    /// Range of `ρ` over which the scaling is expected to hold.
    pub rho_window: (f64, f64),
}

pub fn qopt_model(rho: f64, n: usize, c: f64, d: f64) -> QoptModel {
    let s = PI * n as f64 / 6.0;
    let gamma_opt = (PI * d / (4.0 * c * rho)).powf(2.0 / 3.0) * s.powf(1.0 / 6.0);
    QoptModel {
        q_opt: (4.0 / PI).powf(4.0 / 3.0) * s.powf(1.0 / 6.0) * (-c).exp() * (c * rho / d).cbrt(),
        gamma_opt,
        t_opt_star: PI / (4.0 * gamma_opt.sqrt()) * s.powf(0.25),
        rho_window: (100.0, (n as f64 * 1.5).exp2() / (n as f64).sqrt()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBaselines {
    pub memoryless_expected: f64,
    pub linear_expected: f64,
}

pub fn classical_baselines(dim: u64, num_solutions: u64) -> Result<ClassicalBaselines> {
    if num_solutions == 0 || num_solutions > dim {
        return Err(Error::Parameter(format!("need 0 < N_A <= N, got N_A = {num_solutions}, N = {dim}")));
    }
    Ok(ClassicalBaselines {
        memoryless_expected: dim as f64 / num_solutions as f64,
        linear_expected: (dim as f64 + 1.0) / (num_solutions as f64 + 1.0),
    })
}

/// Memoryless trials needed to succeed with probability `p`.
pub fn memoryless_quantile(p: f64, dim: u64, num_solutions: u64) -> f64 {
    trials_needed(num_solutions as f64 / dim as f64, 1.0 - p)
}

/// Smallest number of distinct guesses that succeeds with probability at
/// least `p`.
pub fn linear_quantile(p: f64, dim: u64, num_solutions: u64) -> u64 {
    let mut fail = 1.0;
    for m in 0..dim {
        if 1.0 - fail >= p {
            return m;
        }
        fail *= (dim - num_solutions).saturating_sub(m) as f64 / (dim - m) as f64;
    }
    dim
}

/// `r = 4σ²/η`.
pub fn cooperativity_to_decay(sigma: f64, eta: f64) -> f64 {
    4.0 * sigma * sigma / eta
}

/// `r = 1/(ργ)`; zero for infinite `ρ`.
pub fn decay_from_rho(rho: f64, gamma: f64) -> f64 {
    1.0 / (rho * gamma)
}
