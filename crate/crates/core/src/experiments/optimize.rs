//! Deterministic scalar optimizers over ensemble simulations.

use serde::{Deserialize, Serialize};

use super::eval::{evaluate_standard, scan_final_layer, Evaluation, RunSettings};
use crate::error::{Error, Result};
use crate::instances::ProblemInstance;
use crate::runner::{default_schedule, RecursiveConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaObjective {
    #[default]
    MinMedianTotal,
    MaxQ,
}

impl std::str::FromStr for GammaObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min_median_t_total" | "min_median_total" => Ok(GammaObjective::MinMedianTotal),
            "max_q" => Ok(GammaObjective::MaxQ),
            _ => Err(Error::Parameter(format!("unknown objective {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSearch {
    pub gamma: f64,
    pub log2_gamma: f64,
    /// Objective at the optimum (lower is better).
    pub value: f64,
    /// The coarse probe was not unimodal; the result is its best point.
    pub flagged: bool,
    /// Every `(log₂γ, objective)` evaluated, in order.
    pub evaluations: Vec<(f64, f64)>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

struct Objective<'a> {
    instances: &'a [ProblemInstance],
    rho: Option<f64>,
    settings: &'a RunSettings,
    kind: GammaObjective,
    evaluations: Vec<(f64, f64)>,
}

impl Objective<'_> {
    fn eval(&mut self, log2_gamma: f64) -> Result<f64> {
        if let Some(&(_, v)) = self.evaluations.iter().find(|(x, _)| *x == log2_gamma) {
            return Ok(v);
        }
        let v = match evaluate_standard(self.instances, log2_gamma.exp2(), self.rho, self.settings) {
            Ok(e) => score(&e, self.kind),
            Err(Error::NoSolution) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        self.evaluations.push((log2_gamma, v));
        Ok(v)
    }
}

fn score(e: &Evaluation, kind: GammaObjective) -> f64 {
    match kind {
        GammaObjective::MinMedianTotal => e.outcome.t_total_median,
        GammaObjective::MaxQ => -e.outcome.q_median,
    }
}

/// Coarse probe at integer `log₂γ ∈ [−(k+2), 0]`, then golden-section search
/// inside the bracket around the best probe point.
pub fn optimize_gamma(
    instances: &[ProblemInstance],
    k: u32,
    rho: Option<f64>,
    kind: GammaObjective,
    settings: &RunSettings,
) -> Result<GammaSearch> {
    let mut f = Objective { instances, rho, settings, kind, evaluations: Vec::new() };
    let grid: Vec<f64> = (0..=k + 2).map(|i| -((k + 2 - i) as f64)).collect();
    let values = grid.iter().map(|&x| f.eval(x)).collect::<Result<Vec<f64>>>()?;
    let best = argmin(&values);
    let flagged = !unimodal(&values, best);
    if !flagged {
        let lo = grid[best.saturating_sub(1)];
        let hi = grid[(best + 1).min(grid.len() - 1)];
        golden_section(&mut f, lo, hi, 14)?;
    }
    let (x, v) = f
        .evaluations
        .iter()
        .copied()
        .fold((grid[best], values[best]), |acc, (x, v)| if v < acc.1 || (v == acc.1 && x < acc.0) { (x, v) } else { acc });
    let (x, v) = if flagged { (grid[best], values[best]) } else { (x, v) };
    Ok(GammaSearch { gamma: x.exp2(), log2_gamma: x, value: v, flagged, evaluations: f.evaluations })
}

fn golden_section(f: &mut Objective, mut a: f64, mut b: f64, iterations: usize) -> Result<()> {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f.eval(c)?, f.eval(d)?);
    for _ in 0..iterations {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f.eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f.eval(d)?;
        }
    }
    Ok(())
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Non-increasing up to `best` and non-decreasing after it, with 5% slack for
/// ensemble noise. Infinite stretches on either side are allowed.
fn unimodal(values: &[f64], best: usize) -> bool {
    let ok = |a: f64, b: f64| b <= a * 1.05 || a.is_infinite();
    values[..=best].windows(2).all(|w| ok(w[0], w[1])) && values[best..].windows(2).all(|w| ok(w[1], w[0]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaTarget {
    pub gamma: f64,
    pub p_opt: f64,
    /// Target not reachable for any `γ ≥ 2^(−(k+4))`.
    pub flagged: bool,
    pub evaluations: Vec<(f64, f64)>,
}

/// Bisection on `log₂γ` until the median `P_opt` is within 0.01 of `target`.
pub fn gamma_for_target_popt(
    instances: &[ProblemInstance],
    k: u32,
    target: f64,
    settings: &RunSettings,
) -> Result<GammaTarget> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Parameter(format!("target probability must lie in (0, 1), got {target}")));
    }
    let mut evaluations = Vec::new();
    let mut p_at = |x: f64| -> Result<f64> {
        let p = match evaluate_standard(instances, x.exp2(), None, settings) {
            Ok(e) => e.outcome.p_opt_median,
            Err(Error::NoSolution) => 0.0,
            Err(e) => return Err(e),
        };
        evaluations.push((x, p));
        Ok(p)
    };
    let (mut lo, mut hi) = (-((k + 4) as f64), 0.0);
    let p_lo = p_at(lo)?;
    if p_lo < target - 0.01 {
        return Ok(GammaTarget { gamma: lo.exp2(), p_opt: p_lo, flagged: true, evaluations });
    }
    let p_hi = p_at(hi)?;
    if p_hi >= target - 0.01 {
        return Ok(GammaTarget { gamma: 1.0, p_opt: p_hi, flagged: false, evaluations });
    }
    let mut best = (lo, p_lo);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let p = p_at(mid)?;
        if (p - target).abs() < (best.1 - target).abs() {
            best = (mid, p);
        }
        if (p - target).abs() < 0.01 {
            break;
        }
        if p > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GammaTarget { gamma: best.0.exp2(), p_opt: best.1, flagged: false, evaluations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSearch {
    pub schedule: Vec<usize>,
    pub t_total_median: f64,
    pub default_schedule: Vec<usize>,
    pub default_t_total_median: f64,
    pub evaluations: usize,
}

/// Coordinate descent over the cycles of every layer but the last, each
/// explored `±2`; for each candidate the last layer's length is minimized
/// exactly over `1..=2·default+4`. Ties go to the smaller count.
pub fn optimize_schedule(
    instances: &[ProblemInstance],
    m: u32,
    base: &RecursiveConfig,
) -> Result<ScheduleSearch> {
    let first = instances.first().ok_or_else(|| Error::Parameter("empty ensemble".into()))?;
    let default = default_schedule(m, first.k, first.weights.len());
    let t_last_max = 2 * default.last().copied().unwrap_or(2) + 4;
    let layers = default.len();
    let default_value = {
        let mut cfg = base.clone();
        cfg.m = m;
        cfg.schedule = default.clone();
        let curve = scan_final_layer(instances, &cfg, *default.last().expect("one layer"))?;
        *curve.last().expect("nonempty")
    };
    let mut evaluations = 1;
    let mut best_last = |prefix: &[usize]| -> Result<(usize, f64)> {
        let mut cfg = base.clone();
        cfg.m = m;
        cfg.schedule = prefix.iter().copied().chain([t_last_max]).collect();
        evaluations += 1;
        let curve = scan_final_layer(instances, &cfg, t_last_max)?;
        let j = argmin(&curve);
        Ok((j + 1, curve[j]))
    };

    let mut prefix: Vec<usize> = default[..layers - 1].to_vec();
    let (mut last, mut value) = best_last(&prefix)?;
    for _ in 0..20 {
        let mut moved = false;
        for l in 0..prefix.len() {
            let current = prefix[l];
            let mut choice = (current, last, value);
            for t in current.saturating_sub(2).max(1)..=current + 2 {
                if t == current {
                    continue;
                }
                let mut trial = prefix.clone();
                trial[l] = t;
                let (tl, v) = best_last(&trial)?;
                if v < choice.2 || (v == choice.2 && t < choice.0) {
                    choice = (t, tl, v);
                }
            }
            if choice.0 != current {
                prefix[l] = choice.0;
                last = choice.1;
                value = choice.2;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    prefix.push(last);
    Ok(ScheduleSearch {
        schedule: prefix,
        t_total_median: value,
        default_schedule: default,
        default_t_total_median: default_value,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unimodality_check() {
        assert!(unimodal(&[5.0, 3.0, 2.0, 4.0], 2));
        assert!(unimodal(&[f64::INFINITY, f64::INFINITY, 2.0, 4.0], 2));
        assert!(!unimodal(&[5.0, 3.0, 9.0, 2.0, 4.0], 3));
        assert!(unimodal(&[5.0, 3.0, 3.1, 2.0, 4.0], 3));
    }
}
