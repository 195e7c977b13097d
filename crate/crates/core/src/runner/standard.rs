use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{ProblemInstance, RealInstance};
use crate::quantum::{
    build_imbalance_table, init_uniform, success_probability, Coupling, Diffusion, DiffusionSpec, OracleSpec,
    PhaseOracle, RealImbalanceTable, StateVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Finite-width phase step (with optional decay).
    Generalized,
    /// Exact `π` phase on solutions; `gamma` and `r` are ignored.
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub gamma: f64,
    /// Decay per query.
    pub r: f64,
    pub t_max: usize,
    /// Alternate the oracle with its conjugate.
    pub echo: bool,
    pub diffusion: DiffusionSpec,
    pub epsilon: f64,
    /// Target imbalance `D*`.
    pub target: i64,
    pub oracle: OracleMode,
}

impl RunConfig {
    pub fn new(gamma: f64, t_max: usize) -> Self {
        RunConfig {
            gamma,
            r: 0.0,
            t_max,
            echo: true,
            diffusion: DiffusionSpec::ideal(),
            epsilon: 0.01,
            target: 0,
            oracle: OracleMode::Generalized,
        }
    }

    pub fn ideal(t_max: usize) -> Self {
        RunConfig { oracle: OracleMode::Ideal, ..Self::new(1.0, t_max) }
    }

    pub fn with_decay(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn with_echo(mut self, echo: bool) -> Self {
        self.echo = echo;
        self
    }

    pub fn with_diffusion(mut self, diffusion: DiffusionSpec) -> Self {
        self.diffusion = diffusion;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0 {
            return Err(Error::Parameter("t_max must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Parameter(format!("target error must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.oracle == OracleMode::Generalized {
            OracleSpec::new(self.gamma).with_decay(self.r).validate()?;
        }
        self.diffusion.validate()
    }

    fn oracle_spec(&self) -> OracleSpec {
        OracleSpec::new(self.gamma).with_decay(self.r).with_target(self.target)
    }
}

/// Success probability and surviving norm `Σ|c|²` after every iteration;
/// index 0 is the uniform initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub instance_id: u64,
    pub probs: Vec<f64>,
    pub norms: Vec<f64>,
    /// Size of the success set.
    pub num_solutions: usize,
    /// Register dimension `N = 2^n`.
    pub dim: usize,
}

impl RunTrace {
    pub fn t_max(&self) -> usize {
        self.probs.len() - 1
    }
}

/// Iterates `U, V` (odd steps) and `U†, V` (even steps, when echo is on),
/// recording after every single iteration.
pub fn run_with_oracle(
    oracle: &PhaseOracle,
    solutions: &[usize],
    config: &RunConfig,
    instance_id: u64,
) -> Result<RunTrace> {
    config.validate()?;
    let mut state = init_uniform(oracle.n())?;
    let diffusion = Diffusion::new(oracle.n(), config.diffusion)?;
    let mut probs = Vec::with_capacity(config.t_max + 1);
    let mut norms = Vec::with_capacity(config.t_max + 1);
    record(&state, solutions, &mut probs, &mut norms);
    for t in 1..=config.t_max {
        let conjugate = config.echo && t % 2 == 0;
        oracle.apply(&mut state, conjugate)?;
        diffusion.apply(&mut state, false)?;
        record(&state, solutions, &mut probs, &mut norms);
    }
    Ok(RunTrace { instance_id, probs, norms, num_solutions: solutions.len(), dim: state.dim() })
}

fn record(state: &StateVector, solutions: &[usize], probs: &mut Vec<f64>, norms: &mut Vec<f64>) {
    probs.push(success_probability(state, solutions));
    norms.push(state.norm_sqr());
}

/// Standard algorithm on a partition (or subset-sum) instance.
pub fn run_standard(instance: &ProblemInstance, config: &RunConfig) -> Result<RunTrace> {
    config.validate()?;
    let table = build_imbalance_table(instance, Coupling::Full)?;
    let solutions = table.matching(config.target);
    let oracle = match config.oracle {
        OracleMode::Generalized => PhaseOracle::generalized(&table, &config.oracle_spec())?,
        OracleMode::Ideal => PhaseOracle::ideal(&table, config.target),
    };
    run_with_oracle(&oracle, &solutions, config, instance.seed.unwrap_or(0))
}

/// State after `config.t_max` iterations of the standard algorithm.
pub fn final_state(instance: &ProblemInstance, config: &RunConfig) -> Result<StateVector> {
    config.validate()?;
    let table = build_imbalance_table(instance, Coupling::Full)?;
    let oracle = match config.oracle {
        OracleMode::Generalized => PhaseOracle::generalized(&table, &config.oracle_spec())?,
        OracleMode::Ideal => PhaseOracle::ideal(&table, config.target),
    };
    let mut state = init_uniform(oracle.n())?;
    let diffusion = Diffusion::new(oracle.n(), config.diffusion)?;
    for t in 1..=config.t_max {
        oracle.apply(&mut state, config.echo && t % 2 == 0)?;
        diffusion.apply(&mut state, false)?;
    }
    Ok(state)
}

/// Abstract mode: `N = 2^n` states with an explicit marked set and the
/// ideal oracle.
pub fn run_marked(n: usize, marked: &[usize], config: &RunConfig) -> Result<RunTrace> {
    let oracle = PhaseOracle::marked(n, marked)?;
    run_with_oracle(&oracle, marked, config, 0)
}

/// Optimization variant on real weights: success means landing in the set of
/// configurations with minimal `|S_z|`.
pub fn run_real(instance: &RealInstance, argmin_set: &[usize], config: &RunConfig) -> Result<RunTrace> {
    config.validate()?;
    let table = RealImbalanceTable::new(instance)?;
    let oracle = PhaseOracle::real(&table, config.gamma, config.r)?;
    run_with_oracle(&oracle, argmin_set, config, instance.seed.unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_instance;

    fn closed_form(n_states: f64, t: usize) -> f64 {
        let theta = (1.0 / n_states.sqrt()).asin();
        ((2 * t + 1) as f64 * theta).sin().powi(2)
    }

    #[test]
    fn abstract_mode_follows_grover_rotation() {
        let trace = run_marked(10, &[700], &RunConfig::ideal(30)).unwrap();
        for (t, &p) in trace.probs.iter().enumerate() {
            assert!((p - closed_form(1024.0, t)).abs() < 1e-12);
        }
        assert!((trace.probs[25] - 0.999461).abs() < 1e-6);
        assert!((trace.probs[0] - 1.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn two_pairs_match_closed_form() {
        let trace = run_marked(10, &[3], &RunConfig::ideal(4)).unwrap();
        let expected = (9.0 * (1.0f64 / 32.0).asin()).sin().powi(2);
        assert!((trace.probs[4] - expected).abs() < 1e-13);
    }

    #[test]
    fn unitary_runs_keep_unit_norm() {
        let inst = gen_instance(8, 8, 5).unwrap();
        let trace = run_standard(&inst, &RunConfig::new(0.01, 40)).unwrap();
        assert!(trace.norms.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn decay_strictly_reduces_norm() {
        let inst = gen_instance(6, 6, 2).unwrap();
        let trace = run_standard(&inst, &RunConfig::new(0.05, 20).with_decay(0.02)).unwrap();
        assert!(trace.norms.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn first_entry_is_the_uniform_baseline() {
        let inst = gen_instance(8, 5, 17).unwrap();
        let trace = run_standard(&inst, &RunConfig::new(0.1, 3)).unwrap();
        assert_eq!(trace.probs.len(), 4);
        assert!((trace.probs[0] - trace.num_solutions as f64 / 256.0).abs() < 1e-12);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let inst = gen_instance(4, 4, 0).unwrap();
        assert!(run_standard(&inst, &RunConfig::new(0.1, 0)).is_err());
        assert!(run_standard(&inst, &RunConfig::new(-0.1, 3)).is_err());
        let mut c = RunConfig::new(0.1, 3);
        c.epsilon = 1.0;
        assert!(run_standard(&inst, &c).is_err());
    }
}
