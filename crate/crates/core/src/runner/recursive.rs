//! Layered (recursive) search at fixed oracle resolution.
//!
//! Layer `ℓ` amplifies configurations whose imbalance vanishes modulo
//! `2^(ℓm+1)` using couplings reduced modulo `2^(ℓm)`; the last layer uses
//! the plain oracle. The inversion `V_ℓ` of layer `ℓ > 1` is
//! `G_{<ℓ} V G_{<ℓ}†`, executed by replaying every lower layer.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::standard::RunTrace;
use crate::error::{Error, Result};
use crate::instances::ProblemInstance;
use crate::quantum::{
    build_imbalance_table, init_uniform, offset_mod, success_probability, Coupling, Diffusion, DiffusionKind,
    DiffusionSpec, OracleSpec, PhaseOracle, StateVector,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursiveConfig {
    /// Bits per layer.
    pub m: u32,
    pub gamma: f64,
    /// Amplification cycles per layer.
    pub schedule: Vec<usize>,
    pub epsilon: f64,
    /// Decay per oracle query.
    pub r: f64,
    pub echo: bool,
    pub diffusion: DiffusionSpec,
    pub target: i64,
}

impl RecursiveConfig {
    /// Defaults: `γ = 2^(−m−1)`, ideal `R`, echo on, no decay.
    pub fn new(m: u32, schedule: Vec<usize>) -> Self {
        RecursiveConfig {
            m,
            gamma: (-(m as f64) - 1.0).exp2(),
            schedule,
            epsilon: 0.01,
            r: 0.0,
            echo: true,
            diffusion: DiffusionSpec::ideal(),
            target: 0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_decay(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn validate(&self, k: u32) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Parameter("bits per layer must be at least 1".into()));
        }
        let layers = layer_count(k, self.m);
        if self.schedule.len() != layers {
            return Err(Error::Parameter(format!(
                "schedule has {} layers but k = {k}, m = {} needs {layers}",
                self.schedule.len(),
                self.m
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Parameter(format!("target error must lie in (0, 1), got {}", self.epsilon)));
        }
        OracleSpec::new(self.gamma).with_decay(self.r).validate()?;
        self.diffusion.validate()
    }
}

/// `⌈k/m⌉`; weights are padded with zero high bits up to a multiple of `m`.
pub fn layer_count(k: u32, m: u32) -> usize {
    k.div_ceil(m) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerLedger {
    pub l: usize,
    #[serde(rename = "T_l")]
    pub t_l: usize,
    /// Cost of one cycle of this layer.
    pub tau_l: u64,
    /// Queries spent in this layer's own cycles, nested replays included.
    pub queries: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub layers: Vec<LayerLedger>,
    pub total: u64,
    /// `Σ 1/γ` over queries, in units of `1/J_max`.
    pub physical_time: f64,
    /// Queries charged per application of the inner controlled phase.
    pub r_charge: u64,
}

impl QueryLedger {
    /// Ledger of `t` cycles of the standard algorithm.
    pub fn standard(t: usize, gamma: f64, diffusion: &DiffusionSpec) -> Self {
        let r_charge = r_charge(diffusion);
        let queries = t as u64 * (1 + r_charge);
        let mut physical_time = t as f64 / gamma;
        if r_charge > 0 {
            physical_time += t as f64 / diffusion.gamma_d;
        }
        QueryLedger {
            layers: vec![LayerLedger { l: 1, t_l: t, tau_l: 1 + r_charge, queries }],
            total: queries,
            physical_time,
            r_charge,
        }
    }
}

fn r_charge(diffusion: &DiffusionSpec) -> u64 {
    match diffusion.kind {
        DiffusionKind::Ideal => 0,
        DiffusionKind::Generalized => 1,
    }
}

/// Per-layer cycle costs `τ_1 = 1`, `τ_ℓ = τ_{ℓ−1}(1 + 2T_{ℓ−1})` and the
/// total `Σ T_ℓ τ_ℓ`, for real-valued schedules.
pub fn recurrence(schedule: &[f64]) -> (Vec<f64>, f64) {
    let mut taus = Vec::with_capacity(schedule.len());
    let mut tau = 1.0;
    for i in 0..schedule.len() {
        if i > 0 {
            tau *= 1.0 + 2.0 * schedule[i - 1];
        }
        taus.push(tau);
    }
    let total = schedule.iter().zip(&taus).map(|(t, tau)| t * tau).sum();
    (taus, total)
}

/// Integer form of [`recurrence`].
pub fn recurrence_exact(schedule: &[usize]) -> (Vec<u64>, u64) {
    let mut taus = Vec::with_capacity(schedule.len());
    let mut tau = 1u64;
    for i in 0..schedule.len() {
        if i > 0 {
            tau *= 1 + 2 * schedule[i - 1] as u64;
        }
        taus.push(tau);
    }
    let total = schedule.iter().zip(&taus).map(|(&t, tau)| t as u64 * tau).sum();
    (taus, total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    /// Geometric series with `T_ℓ = (π/4)2^(m/2)` in every layer.
    pub exact: f64,
    /// `2^(k(1/2 + c/m) − 1)` with `c = log₂(π/2)`.
    pub asymptotic: f64,
}

pub fn closed_form_queries(k: u32, m: u32) -> Result<ClosedForm> {
    if m == 0 || !k.is_multiple_of(m) {
        return Err(Error::Parameter(format!("m = {m} must divide k = {k}")));
    }
    let t = PI / 4.0 * (m as f64 / 2.0).exp2();
    let a = 2.0 * t;
    let layers = (k / m) as i32;
    let c = (PI / 2.0).log2();
    Ok(ClosedForm {
        exact: t * ((1.0 + a).powi(layers) - 1.0) / a,
        asymptotic: (k as f64 * (0.5 + c / m as f64) - 1.0).exp2(),
    })
}

/// Nearest even integer, at least 2.
pub fn round_even(x: f64) -> usize {
    ((x / 2.0).round() as usize * 2).max(2)
}

/// `(π/4)2^(m/2)` cycles per layer, `√n` times more in the last one.
pub fn default_schedule(m: u32, k: u32, n: usize) -> Vec<usize> {
    let layers = layer_count(k, m);
    let t = PI / 4.0 * (m as f64 / 2.0).exp2();
    (0..layers)
        .map(|l| if l + 1 == layers { round_even(t * (n as f64).sqrt()) } else { round_even(t) })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursiveRun {
    /// Per layer: probability of that layer's candidate set (true solutions in
    /// the last layer) and norm, at layer start and after every cycle.
    pub layers: Vec<RunTrace>,
    pub ledger: QueryLedger,
}

impl RecursiveRun {
    pub fn final_probability(&self) -> f64 {
        *self.layers.last().and_then(|l| l.probs.last()).expect("at least one layer")
    }
}

/// The compiled operators of one recursive run.
pub struct RecursiveProgram {
    oracles: Vec<PhaseOracle>,
    /// Candidate sets per layer.
    candidates: Vec<Vec<usize>>,
    diffusion: Diffusion,
    schedule: Vec<usize>,
    echo: bool,
    gamma: f64,
    gamma_d: f64,
    seed: u64,
}

struct Counter {
    oracle_calls: u64,
    r_calls: u64,
}

impl RecursiveProgram {
    pub fn new(instance: &ProblemInstance, config: &RecursiveConfig) -> Result<Self> {
        config.validate(instance.k)?;
        let layers = config.schedule.len();
        let padded = layers as u32 * config.m;
        let full = build_imbalance_table(instance, Coupling::Full)?;
        let total = instance.total() as i64;
        let mut oracles = Vec::with_capacity(layers);
        let mut candidates = Vec::with_capacity(layers);
        for l in 1..=layers {
            if l == layers {
                let table = full.clone().rescaled(padded);
                let spec = OracleSpec::new(config.gamma).with_decay(config.r).with_target(config.target);
                oracles.push(PhaseOracle::generalized(&table, &spec)?);
                candidates.push(full.matching(config.target));
            } else {
                let width = l as u32 * config.m;
                let modulus = 1u64 << (width + 1);
                let table = build_imbalance_table(instance, Coupling::Layer { index: l as u32, bits: config.m })?;
                // Reduced weights shift every imbalance by `A − A'` modulo the
                // comb period; move the target with them.
                let reduced_total: i64 = table.values()[0];
                let target = config.target - (total - reduced_total);
                let spec =
                    OracleSpec::new(config.gamma).with_decay(config.r).with_target(target).with_modulus(modulus);
                oracles.push(PhaseOracle::generalized(&table, &spec)?);
                candidates.push(
                    (0..full.values().len())
                        .filter(|&x| offset_mod(full.values()[x] - config.target, modulus, 0) == 0)
                        .collect(),
                );
            }
        }
        Ok(RecursiveProgram {
            oracles,
            candidates,
            diffusion: Diffusion::new(instance.weights.len(), config.diffusion)?,
            schedule: config.schedule.clone(),
            echo: config.echo,
            gamma: config.gamma,
            gamma_d: config.diffusion.gamma_d,
            seed: instance.seed.unwrap_or(0),
        })
    }

    pub fn oracle(&self, layer: usize) -> &PhaseOracle {
        &self.oracles[layer - 1]
    }

    pub fn candidates(&self, layer: usize) -> &[usize] {
        &self.candidates[layer - 1]
    }

    pub fn run(&self) -> Result<RecursiveRun> {
        let mut state = init_uniform(self.diffusion_n())?;
        let mut counter = Counter { oracle_calls: 0, r_calls: 0 };
        let mut traces = Vec::with_capacity(self.schedule.len());
        let mut ledger_layers = Vec::with_capacity(self.schedule.len());
        let (taus, _) = recurrence_exact(&self.schedule);
        let charge = self.diffusion.queries();
        for l in 1..=self.schedule.len() {
            let before = counter.oracle_calls + charge * counter.r_calls;
            let solutions = &self.candidates[l - 1];
            let mut probs = vec![success_probability(&state, solutions)];
            let mut norms = vec![state.norm_sqr()];
            for j in 0..self.schedule[l - 1] {
                self.cycle(&mut state, l, j, false, &mut counter)?;
                probs.push(success_probability(&state, solutions));
                norms.push(state.norm_sqr());
            }
            traces.push(RunTrace {
                instance_id: self.seed,
                probs,
                norms,
                num_solutions: solutions.len(),
                dim: state.dim(),
            });
            ledger_layers.push(LayerLedger {
                l,
                t_l: self.schedule[l - 1],
                tau_l: taus[l - 1] * (1 + charge),
                queries: counter.oracle_calls + charge * counter.r_calls - before,
            });
        }
        let mut physical_time = counter.oracle_calls as f64 / self.gamma;
        if charge > 0 {
            physical_time += counter.r_calls as f64 / self.gamma_d;
        }
        Ok(RecursiveRun {
            layers: traces,
            ledger: QueryLedger {
                layers: ledger_layers,
                total: counter.oracle_calls + charge * counter.r_calls,
                physical_time,
                r_charge: charge,
            },
        })
    }

    fn diffusion_n(&self) -> usize {
        self.oracles[0].n()
    }

    /// Cycle `j` (0-based) of layer `l`: `V_l U_l`, with the oracle
    /// conjugated on odd `j` under echo. The adjoint is `U_l† V_l†`.
    fn cycle(&self, state: &mut StateVector, l: usize, j: usize, adjoint: bool, c: &mut Counter) -> Result<()> {
        let conjugate = self.echo && j % 2 == 1;
        let oracle = &self.oracles[l - 1];
        if adjoint {
            self.inversion(state, l, true, c)?;
            oracle.apply(state, !conjugate)?;
        } else {
            oracle.apply(state, conjugate)?;
            self.inversion(state, l, false, c)?;
        }
        c.oracle_calls += 1;
        Ok(())
    }

    /// `G_l` (or `G_l†`): all cycles of layer `l`.
    fn layer(&self, state: &mut StateVector, l: usize, adjoint: bool, c: &mut Counter) -> Result<()> {
        let t = self.schedule[l - 1];
        if adjoint {
            for j in (0..t).rev() {
                self.cycle(state, l, j, true, c)?;
            }
        } else {
            for j in 0..t {
                self.cycle(state, l, j, false, c)?;
            }
        }
        Ok(())
    }

    /// `V_l = G_{l−1}⋯G_1 · V · G_1†⋯G_{l−1}†`; its adjoint swaps `V` for `V†`.
    fn inversion(&self, state: &mut StateVector, l: usize, adjoint: bool, c: &mut Counter) -> Result<()> {
        for lower in (1..l).rev() {
            self.layer(state, lower, true, c)?;
        }
        self.diffusion.apply(state, adjoint)?;
        c.r_calls += 1;
        for lower in 1..l {
            self.layer(state, lower, false, c)?;
        }
        Ok(())
    }
}

pub fn run_recursive(instance: &ProblemInstance, config: &RecursiveConfig) -> Result<RecursiveRun> {
    RecursiveProgram::new(instance, config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_instance;
    use crate::runner::standard::{run_standard, RunConfig};

    #[test]
    fn schedules() {
        assert_eq!(round_even(PI), 4);
        assert_eq!(round_even(0.3), 2);
        assert_eq!(default_schedule(4, 12, 12)[..2], [4, 4]);
        assert_eq!(default_schedule(4, 12, 12).len(), 3);
        assert_eq!(default_schedule(12, 12, 12).len(), 1);
        assert_eq!(default_schedule(5, 12, 12).len(), 3);
    }

    #[test]
    fn recurrence_small_case() {
        let (taus, total) = recurrence_exact(&[2, 3, 2]);
        assert_eq!(taus, vec![1, 5, 35]);
        assert_eq!(total, 2 + 15 + 70);
    }

    #[test]
    fn closed_form_single_layer_and_constant() {
        let cf = closed_form_queries(6, 6).unwrap();
        assert!((cf.exact - PI / 4.0 * 8.0).abs() < 1e-12);
        assert!(closed_form_queries(7, 3).is_err());
        assert!(((PI / 2.0).log2() - 0.6515).abs() < 5e-5);
    }

    #[test]
    fn base_case_equals_standard_run() {
        let inst = gen_instance(8, 8, 21).unwrap();
        let cfg = RecursiveConfig::new(8, vec![9]).with_gamma(0.02).with_decay(0.01);
        let rec = run_recursive(&inst, &cfg).unwrap();
        let std = run_standard(&inst, &RunConfig::new(0.02, 9).with_decay(0.01)).unwrap();
        for (a, b) in rec.layers[0].probs.iter().zip(&std.probs) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(rec.ledger.total, 9);
        assert!((rec.ledger.physical_time - 9.0 / 0.02).abs() < 1e-9);
    }

    #[test]
    fn ledger_follows_recurrence() {
        let inst = gen_instance(6, 6, 4).unwrap();
        let run = run_recursive(&inst, &RecursiveConfig::new(2, vec![2, 3, 1])).unwrap();
        let (taus, total) = recurrence_exact(&[2, 3, 1]);
        assert_eq!(run.ledger.total, total);
        for (layer, tau) in run.ledger.layers.iter().zip(&taus) {
            assert_eq!(layer.tau_l, *tau);
            assert_eq!(layer.queries, layer.t_l as u64 * tau);
        }
    }

    #[test]
    fn generalized_r_doubles_cost() {
        let inst = gen_instance(6, 6, 4).unwrap();
        let mut cfg = RecursiveConfig::new(3, vec![2, 2]);
        cfg.diffusion = DiffusionSpec::generalized(0.5, 0.0);
        let run = run_recursive(&inst, &cfg).unwrap();
        assert_eq!(run.ledger.total, 2 * recurrence_exact(&[2, 2]).1);
    }

    #[test]
    fn layer_oracle_marks_true_solutions() {
        // Odd sum of high parts: the target shift matters.
        let inst = ProblemInstance::new(6, vec![17, 9, 3, 5]).unwrap();
        let prog = RecursiveProgram::new(&inst, &RecursiveConfig::new(3, vec![2, 2]).with_gamma(1e-6)).unwrap();
        let full = build_imbalance_table(&inst, Coupling::Full).unwrap();
        for (x, chi) in prog.oracle(1).phases().iter().enumerate() {
            let d = full.values()[x];
            let on_comb = d.rem_euclid(16) == 0;
            assert_eq!(chi.re < -0.9, on_comb, "state {x} with D = {d}");
        }
    }

    #[test]
    fn wrong_schedule_length_is_rejected() {
        let inst = gen_instance(6, 6, 4).unwrap();
        assert!(run_recursive(&inst, &RecursiveConfig::new(2, vec![2, 2])).is_err());
    }
}
