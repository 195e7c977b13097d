use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{decay_from_rho, trials_needed};
use crate::error::{Error, Result};
use crate::instances::ProblemInstance;
use crate::quantum::DiffusionSpec;
use crate::runner::{
    optimal_iterations_with, recurrence_exact, run_standard, speedup, GroverOutcome, RecursiveConfig,
    RecursiveProgram, RunConfig, RunTrace, TOptRule,
};
use crate::stats;

/// Everything about a standard run except the step width and decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub epsilon: f64,
    pub echo: bool,
    pub diffusion: DiffusionSpec,
    pub rule: TOptRule,
    /// Iteration cap; chosen from the solution counts when absent.
    pub t_max: Option<usize>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { epsilon: 0.01, echo: true, diffusion: DiffusionSpec::ideal(), rule: TOptRule::default(), t_max: None }
    }
}

/// Twice the ideal optimum `(π/4)√(N/N_A)` for the sparsest instance, plus 2.
pub fn auto_t_max(n: usize, min_solutions: usize) -> usize {
    let ratio = (n as f64).exp2() / min_solutions.max(1) as f64;
    (PI / 2.0 * ratio.sqrt()).ceil() as usize + 2
}

/// Decay per query for interaction-to-decay ratio `rho` (`None` = no decay).
pub fn decay_for(rho: Option<f64>, gamma: f64) -> f64 {
    match rho {
        Some(rho) if rho.is_finite() => decay_from_rho(rho, gamma),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub gamma: f64,
    pub r: f64,
    pub t_max: usize,
    pub traces: Vec<RunTrace>,
    /// Aggregated over instances with at least one solution.
    pub outcome: GroverOutcome,
    /// Instances left out of the aggregate for lack of solutions.
    pub excluded: usize,
}

pub fn run_config(gamma: f64, r: f64, t_max: usize, settings: &RunSettings) -> RunConfig {
    let mut config = RunConfig::new(gamma, t_max).with_decay(r).with_echo(settings.echo).with_diffusion(settings.diffusion);
    config.epsilon = settings.epsilon;
    config
}

/// Simulates every instance (in parallel, results in input order) and
/// aggregates.
pub fn evaluate_standard(
    instances: &[ProblemInstance],
    gamma: f64,
    rho: Option<f64>,
    settings: &RunSettings,
) -> Result<Evaluation> {
    let first = instances.first().ok_or_else(|| Error::Parameter("empty ensemble".into()))?;
    let r = decay_for(rho, gamma);
    let traces: Vec<RunTrace> = match settings.t_max {
        Some(t_max) => simulate(instances, &run_config(gamma, r, t_max, settings))?,
        None => {
            // Count solutions with a one-step run, then size the cap.
            let probe = simulate(instances, &run_config(gamma, r, 1, settings))?;
            let min = probe.iter().map(|t| t.num_solutions).filter(|&c| c > 0).min().unwrap_or(1);
            simulate(instances, &run_config(gamma, r, auto_t_max(first.weights.len(), min), settings))?
        }
    };
    aggregate(traces, gamma, r, settings)
}

fn simulate(instances: &[ProblemInstance], config: &RunConfig) -> Result<Vec<RunTrace>> {
    instances.par_iter().map(|inst| run_standard(inst, config)).collect()
}

pub fn aggregate(traces: Vec<RunTrace>, gamma: f64, r: f64, settings: &RunSettings) -> Result<Evaluation> {
    let with: Vec<RunTrace> = traces.iter().filter(|t| t.num_solutions > 0).cloned().collect();
    if with.is_empty() {
        return Err(Error::NoSolution);
    }
    let outcome = optimal_iterations_with(&with, settings.epsilon, settings.rule)?;
    Ok(Evaluation {
        gamma,
        r,
        t_max: traces[0].t_max(),
        excluded: traces.len() - with.len(),
        traces,
        outcome,
    })
}

/// Ensemble statistics of a recursive run at a fixed schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursiveEvaluation {
    pub schedule: Vec<usize>,
    /// Queries per run from the ledger.
    pub queries: u64,
    /// Physical time per run.
    pub physical_time: f64,
    pub p_final: Vec<f64>,
    /// `queries · M(P_final, ε)` per instance.
    pub t_total: Vec<f64>,
    pub t_total_median: f64,
    /// Physical time including repetitions, per instance.
    pub time_total: Vec<f64>,
    pub time_total_median: f64,
    pub q: Vec<f64>,
    pub q_median: f64,
}

fn recursive_programs(
    instances: &[ProblemInstance],
    config: &RecursiveConfig,
) -> Result<Vec<RecursiveProgram>> {
    instances.par_iter().map(|inst| RecursiveProgram::new(inst, config)).collect()
}

pub fn evaluate_recursive(instances: &[ProblemInstance], config: &RecursiveConfig) -> Result<RecursiveEvaluation> {
    let runs = recursive_programs(instances, config)?
        .par_iter()
        .map(|p| p.run())
        .collect::<Result<Vec<_>>>()?;
    let ledger = &runs[0].ledger;
    let p_final: Vec<f64> = runs.iter().map(|r| r.final_probability()).collect();
    let t_total: Vec<f64> = p_final.iter().map(|&p| ledger.total as f64 * trials_needed(p, config.epsilon)).collect();
    let time_total: Vec<f64> =
        p_final.iter().map(|&p| ledger.physical_time * trials_needed(p, config.epsilon)).collect();
    let q = runs
        .iter()
        .zip(&p_final)
        .map(|(run, &p)| {
            let last = run.layers.last().expect("at least one layer");
            speedup(p, ledger.total.max(1) as usize, last.num_solutions, last.dim)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RecursiveEvaluation {
        schedule: config.schedule.clone(),
        queries: ledger.total,
        physical_time: ledger.physical_time,
        t_total_median: stats::median(&t_total),
        time_total_median: stats::median(&time_total),
        q_median: stats::median(&q),
        p_final,
        t_total,
        time_total,
        q,
    })
}

/// Median `T_total` for every final-layer length `1..=t_last_max`, from a
/// single run per instance (earlier layers do not depend on it).
pub fn scan_final_layer(
    instances: &[ProblemInstance],
    config: &RecursiveConfig,
    t_last_max: usize,
) -> Result<Vec<f64>> {
    let mut cfg = config.clone();
    *cfg.schedule.last_mut().expect("nonempty schedule") = t_last_max;
    let runs = recursive_programs(instances, &cfg)?
        .par_iter()
        .map(|p| p.run())
        .collect::<Result<Vec<_>>>()?;
    let (taus, _) = recurrence_exact(&cfg.schedule);
    let charge = 1 + runs[0].ledger.r_charge;
    let layers = cfg.schedule.len();
    let base: u64 = cfg.schedule[..layers - 1].iter().zip(&taus).map(|(&t, tau)| t as u64 * tau).sum::<u64>() * charge;
    let tau_last = taus[layers - 1] * charge;
    Ok((1..=t_last_max)
        .map(|j| {
            let queries = (base + j as u64 * tau_last) as f64;
            let totals: Vec<f64> = runs
                .iter()
                .map(|r| queries * trials_needed(r.layers[layers - 1].probs[j], config.epsilon))
                .collect();
            stats::median(&totals)
        })
        .collect())
}
