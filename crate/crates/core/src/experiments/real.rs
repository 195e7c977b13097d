use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::{auto_t_max, run_config, RunSettings};
use crate::error::{Error, Result};
use crate::instances::{generate_real_ensemble, real_min_imbalance, RealInstance, DEFAULT_ENUMERATION_CAP};
use crate::runner::{optimal_iterations_with, run_real, RunTrace};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSweepRecord {
    pub n: usize,
    pub k_eff: f64,
    pub gamma: f64,
    pub t_opt: usize,
    pub p_opt_median: f64,
    pub q_median: f64,
    /// Instances whose minimum `|S_z|` is attained by more than one
    /// complementary pair.
    pub ties: usize,
}

/// Minimization of `|S_z|` over real weights: success means landing in the
/// argmin set. One ensemble per `n`, reused for every `k_eff = −log₂γ`.
pub fn real_weight_sweep(
    ns: &[usize],
    k_effs: &[f64],
    count: usize,
    seed: u64,
    settings: &RunSettings,
) -> Result<Vec<RealSweepRecord>> {
    if ns.is_empty() || k_effs.is_empty() || count == 0 {
        return Err(Error::Parameter("real-weight sweep needs n values, k_eff values and instances".into()));
    }
    let mut out = Vec::new();
    for &n in ns {
        let ensemble: Vec<RealInstance> = generate_real_ensemble(n, count, crate::rng::mix(seed, n as u64))?;
        let reports = ensemble
            .par_iter()
            .map(|inst| real_min_imbalance(inst, DEFAULT_ENUMERATION_CAP))
            .collect::<Result<Vec<_>>>()?;
        let ties = reports.iter().filter(|r| r.ties).count();
        let min_count = reports.iter().map(|r| r.argmin_set.len()).min().unwrap_or(1);
        for &k_eff in k_effs {
            let gamma = (-k_eff).exp2();
            let t_max = settings.t_max.unwrap_or_else(|| auto_t_max(n, min_count));
            let config = run_config(gamma, 0.0, t_max, settings);
            let traces = ensemble
                .par_iter()
                .zip(&reports)
                .map(|(inst, rep)| run_real(inst, &rep.argmin_set, &config))
                .collect::<Result<Vec<RunTrace>>>()?;
            let outcome = optimal_iterations_with(&traces, settings.epsilon, settings.rule)?;
            out.push(RealSweepRecord {
                n,
                k_eff,
                gamma,
                t_opt: outcome.t_opt,
                p_opt_median: stats::median(&outcome.p_opt),
                q_median: outcome.q_median,
                ties,
            });
        }
    }
    Ok(out)
}
