use serde::{Deserialize, Serialize};

use super::standard::RunTrace;
use crate::analytics::trials_needed;
use crate::error::{Error, Result};
use crate::stats;

/// How the optimal iteration count is chosen across an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TOptRule {
    /// Minimize the median of `T · M(P_T, ε)`.
    #[default]
    MinMedianTotal,
    /// Maximize the median of `P_T`.
    MaxMedianProbability,
}

impl std::fmt::Display for TOptRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TOptRule::MinMedianTotal => "min_median_total",
            TOptRule::MaxMedianProbability => "max_median_probability",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroverOutcome {
    pub rule: TOptRule,
    pub t_opt: usize,
    /// `P_{T_opt}` per instance, in trace order.
    pub p_opt: Vec<f64>,
    pub p_opt_median: f64,
    pub t_total_median: f64,
    /// Per-instance speedup; `+∞` when an instance succeeds with certainty.
    pub q: Vec<f64>,
    pub q_median: f64,
}

/// Total queries `T · M(P_T, ε)` to reach error `ε`.
pub fn total_queries(t: usize, p: f64, epsilon: f64) -> f64 {
    t as f64 * trials_needed(p, epsilon)
}

fn check_traces(traces: &[RunTrace]) -> Result<usize> {
    let t_max = traces.first().ok_or_else(|| Error::Parameter("no traces to aggregate".into()))?.t_max();
    if t_max == 0 || traces.iter().any(|t| t.t_max() != t_max) {
        return Err(Error::Parameter("traces must share a positive iteration cap".into()));
    }
    Ok(t_max)
}

/// Median of `T · M(P_T, ε)` over the ensemble for `T = 1..=T_max`.
pub fn median_total_curve(traces: &[RunTrace], epsilon: f64) -> Result<Vec<f64>> {
    let t_max = check_traces(traces)?;
    Ok((1..=t_max)
        .map(|t| {
            let totals: Vec<f64> = traces.iter().map(|tr| total_queries(t, tr.probs[t], epsilon)).collect();
            stats::median(&totals)
        })
        .collect())
}

pub fn optimal_iterations(traces: &[RunTrace], epsilon: f64) -> Result<GroverOutcome> {
    optimal_iterations_with(traces, epsilon, TOptRule::MinMedianTotal)
}

pub fn optimal_iterations_with(traces: &[RunTrace], epsilon: f64, rule: TOptRule) -> Result<GroverOutcome> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!("target error must lie in (0, 1), got {epsilon}")));
    }
    let t_max = check_traces(traces)?;
    if traces.iter().all(|tr| tr.probs[1..].iter().all(|&p| p <= 0.0)) {
        return Err(Error::NoSolution);
    }
    let totals = median_total_curve(traces, epsilon)?;
    let t_opt = match rule {
        TOptRule::MinMedianTotal => {
            if totals.iter().all(|v| v.is_infinite()) {
                return Err(Error::NoSolution);
            }
            1 + argmin(&totals)
        }
        TOptRule::MaxMedianProbability => {
            let medians: Vec<f64> = (1..=t_max)
                .map(|t| -stats::median(&traces.iter().map(|tr| tr.probs[t]).collect::<Vec<_>>()))
                .collect();
            1 + argmin(&medians)
        }
    };
    let p_opt: Vec<f64> = traces.iter().map(|tr| tr.probs[t_opt].clamp(0.0, 1.0)).collect();
    let q = traces
        .iter()
        .zip(&p_opt)
        .map(|(tr, &p)| speedup(p, t_opt, tr.num_solutions, tr.dim))
        .collect::<Result<Vec<f64>>>()?;
    Ok(GroverOutcome {
        rule,
        t_opt,
        p_opt_median: stats::median(&p_opt),
        t_total_median: totals[t_opt - 1],
        q_median: stats::median(&q),
        p_opt,
        q,
    })
}

/// First index of the minimum.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Memoryless classical trials divided by Grover queries at matched success
/// probability.
pub fn speedup(p_opt: f64, t_opt: usize, num_solutions: usize, dim: usize) -> Result<f64> {
    if num_solutions == 0 {
        return Err(Error::Undefined("speedup is undefined without solutions".into()));
    }
    if t_opt == 0 || num_solutions > dim {
        return Err(Error::Parameter(format!("bad speedup inputs T={t_opt}, N_A={num_solutions}, N={dim}")));
    }
    if p_opt >= 1.0 {
        return Ok(f64::INFINITY);
    }
    if p_opt <= 0.0 {
        return Ok(0.0);
    }
    if num_solutions == dim {
        return Ok(0.0);
    }
    let classical = (-(num_solutions as f64) / dim as f64).ln_1p();
    Ok((-p_opt).ln_1p() / (t_opt as f64 * classical))
}
