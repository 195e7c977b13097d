use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::{evaluate_standard, run_config, RunSettings};
use crate::error::{Error, Result};
use crate::instances::ProblemInstance;
use crate::quantum::{build_imbalance_table, sz_histogram, Coupling, SzHistogram};
use crate::runner::final_state;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureRow {
    pub gamma: f64,
    pub t_opt: usize,
    /// `(S_z, P̃(S_z))` with `P̃ = P(S_z)/P(S_z = 0)`, ensemble-summed.
    pub bins: Vec<(f64, f64)>,
    /// Smallest `S_z > 0` where `P̃` falls to 0.5, linearly interpolated.
    pub half_width: f64,
}

/// Ensemble-summed `S_z` distribution after `T_opt(γ)` iterations, for each
/// `γ`. `T_opt` is taken from the instances that have solutions; no
/// postselection is applied to the histogram itself.
pub fn capture_histogram(
    instances: &[ProblemInstance],
    gammas: &[f64],
    settings: &RunSettings,
) -> Result<Vec<CaptureRow>> {
    let k = instances.first().ok_or_else(|| Error::Parameter("empty ensemble".into()))?.k;
    let tables = instances
        .par_iter()
        .map(|inst| build_imbalance_table(inst, Coupling::Full))
        .collect::<Result<Vec<_>>>()?;
    gammas
        .iter()
        .map(|&gamma| {
            let t_opt = evaluate_standard(instances, gamma, None, settings)?.outcome.t_opt;
            let config = run_config(gamma, 0.0, t_opt, settings);
            let parts = instances
                .par_iter()
                .zip(&tables)
                .map(|(inst, table)| sz_histogram(&final_state(inst, &config)?, table))
                .collect::<Result<Vec<_>>>()?;
            let mut total = SzHistogram { scale: k, bins: Default::default() };
            for h in &parts {
                total.merge(h);
            }
            let norm = total.normalized();
            if !norm.normalized {
                return Err(Error::NoSolution);
            }
            let unit = (k as f64 + 1.0).exp2();
            let bins: Vec<(f64, f64)> = norm.bins.iter().map(|(&d, &p)| (d as f64 / unit, p)).collect();
            Ok(CaptureRow { gamma, t_opt, half_width: half_width(&bins), bins })
        })
        .collect()
}

fn half_width(bins: &[(f64, f64)]) -> f64 {
    let mut prev = (0.0, 1.0);
    for &(s, p) in bins.iter().filter(|(s, _)| *s > 0.0) {
        if p < 0.5 {
            return prev.0 + (prev.1 - 0.5) / (prev.1 - p) * (s - prev.0);
        }
        prev = (s, p);
    }
    prev.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_width_interpolates() {
        let bins = [(-0.5, 0.1), (0.0, 1.0), (0.25, 0.8), (0.5, 0.2)];
        assert!((half_width(&bins) - (0.25 + 0.5 * 0.25)).abs() < 1e-12);
    }
}
