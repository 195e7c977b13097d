use serde::{Deserialize, Serialize};

use super::eval::{decay_for, evaluate_recursive, evaluate_standard, RunSettings};
use super::optimize::{optimize_gamma, optimize_schedule, GammaObjective, GammaSearch, ScheduleSearch};
use crate::analytics::critical_step_width;
use crate::error::{Error, Result};
use crate::instances::{generate_ensemble, EnsembleSpec, Postselect, ProblemInstance, DEFAULT_ENUMERATION_CAP};
use crate::rng;
use crate::runner::{default_schedule, QueryLedger, RecursiveConfig};
use crate::stats;

pub const DEFAULT_QUANTILES: [f64; 5] = [0.01, 0.25, 0.5, 0.75, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub k: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum GammaRule {
    Fixed { gamma: f64 },
    /// `2^(−k)`.
    PowerK,
    /// `γ_c = 2^(−min(k_c, k))`.
    Critical,
    Optimize { objective: GammaObjective },
}

impl GammaRule {
    /// Step width for a grid point; `None` when it must be optimized.
    pub fn resolve(&self, point: GridPoint) -> Option<f64> {
        match *self {
            GammaRule::Fixed { gamma } => Some(gamma),
            GammaRule::PowerK => Some((-(point.k as f64)).exp2()),
            GammaRule::Critical => Some(critical_step_width(point.n, point.k)),
            GammaRule::Optimize { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Algorithm {
    Standard,
    Recursive {
        m: u32,
        /// Fixed schedule; the default schedule is optimized when absent.
        #[serde(default)]
        schedule: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub points: Vec<GridPoint>,
    pub gamma_rule: GammaRule,
    /// Interaction-to-decay ratio; absent means no decay.
    #[serde(default)]
    pub rho: Option<f64>,
    pub algorithm: Algorithm,
    pub count: usize,
    pub seed: u64,
    pub postselect: Postselect,
    #[serde(default)]
    pub settings: RunSettings,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    #[serde(default = "default_attempt_factor")]
    pub attempt_factor: usize,
}

fn default_quantiles() -> Vec<f64> {
    DEFAULT_QUANTILES.to_vec()
}

fn default_attempt_factor() -> usize {
    100
}

impl SweepSpec {
    pub fn new(points: Vec<GridPoint>, gamma_rule: GammaRule, count: usize, seed: u64) -> Self {
        SweepSpec {
            points,
            gamma_rule,
            rho: None,
            algorithm: Algorithm::Standard,
            count,
            seed,
            postselect: Postselect::HasSolution,
            settings: RunSettings::default(),
            quantiles: default_quantiles(),
            attempt_factor: default_attempt_factor(),
        }
    }

    /// Ensemble seed of a grid point, independent of its position in the grid.
    pub fn point_seed(&self, point: GridPoint) -> u64 {
        rng::mix(rng::mix(self.seed, point.n as u64), point.k as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    pub k: u32,
    pub gamma: f64,
    pub r: f64,
    pub rho: Option<f64>,
    pub algorithm: String,
    pub ensemble_size: usize,
    pub attempts: u64,
    pub mean_num_solutions: f64,
    pub t_opt: Option<usize>,
    pub schedule: Option<Vec<usize>>,
    pub p_opt_median: f64,
    pub t_total_median: f64,
    /// Median over instances of the repetition-weighted physical time.
    pub physical_time_median: f64,
    /// Oracle queries per run.
    pub queries_per_run: Option<u64>,
    pub q_median: f64,
    /// `(q, Q̃_q)` pairs.
    pub q_quantiles: Vec<(f64, f64)>,
    pub flags: Vec<String>,
    /// Step-width optimizer trace, when the rule optimizes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_search: Option<GammaSearch>,
    /// Schedule optimizer trace, when no schedule was given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_search: Option<ScheduleSearch>,
}

impl SweepRecord {
    pub fn flagged(&self) -> bool {
        !self.flags.is_empty()
    }

    fn empty(point: GridPoint, spec: &SweepSpec) -> Self {
        SweepRecord {
            n: point.n,
            k: point.k,
            gamma: f64::NAN,
            r: f64::NAN,
            rho: spec.rho,
            algorithm: algorithm_label(&spec.algorithm),
            ensemble_size: 0,
            attempts: 0,
            mean_num_solutions: f64::NAN,
            t_opt: None,
            schedule: None,
            p_opt_median: f64::NAN,
            t_total_median: f64::NAN,
            physical_time_median: f64::NAN,
            queries_per_run: None,
            q_median: f64::NAN,
            q_quantiles: Vec::new(),
            flags: Vec::new(),
            gamma_search: None,
            schedule_search: None,
        }
    }
}

fn algorithm_label(a: &Algorithm) -> String {
    match a {
        Algorithm::Standard => "standard".into(),
        Algorithm::Recursive { m, .. } => format!("recursive(m={m})"),
    }
}

pub const RECORD_HEADER: [&str; 16] = [
    "n",
    "k",
    "gamma",
    "r",
    "rho",
    "algorithm",
    "ensemble_size",
    "attempts",
    "mean_num_solutions",
    "T_opt",
    "P_opt",
    "T_total_median",
    "physical_time_median",
    "Q_median",
    "Q_quantiles",
    "flags",
];

impl SweepRecord {
    pub fn csv_row(&self) -> Vec<String> {
        use crate::io::fmt_f64;
        vec![
            self.n.to_string(),
            self.k.to_string(),
            fmt_f64(self.gamma),
            fmt_f64(self.r),
            self.rho.map_or("inf".into(), fmt_f64),
            self.algorithm.clone(),
            self.ensemble_size.to_string(),
            self.attempts.to_string(),
            fmt_f64(self.mean_num_solutions),
            match (&self.schedule, self.t_opt) {
                (Some(s), _) => s.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" "),
                (None, Some(t)) => t.to_string(),
                (None, None) => String::new(),
            },
            fmt_f64(self.p_opt_median),
            fmt_f64(self.t_total_median),
            fmt_f64(self.physical_time_median),
            fmt_f64(self.q_median),
            self.q_quantiles.iter().map(|(q, v)| format!("{q}:{}", fmt_f64(*v))).collect::<Vec<_>>().join(" "),
            self.flags.join(";"),
        ]
    }
}

/// Every grid point: generate, postselect, simulate, aggregate. Points that
/// cannot be completed produce flagged records instead of errors.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    if spec.points.is_empty() {
        return Err(Error::Parameter("sweep grid is empty".into()));
    }
    if spec.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::Parameter("quantiles must lie in [0, 1]".into()));
    }
    spec.points.iter().map(|&p| run_point(spec, p)).collect()
}

pub fn run_point(spec: &SweepSpec, point: GridPoint) -> Result<SweepRecord> {
    let mut record = SweepRecord::empty(point, spec);
    if point.n > DEFAULT_ENUMERATION_CAP {
        record.flags.push(format!("n exceeds the enumeration cap of {DEFAULT_ENUMERATION_CAP}"));
        return Ok(record);
    }
    let mut ens_spec = EnsembleSpec::new(point.n, point.k, spec.count, spec.point_seed(point), spec.postselect);
    ens_spec.attempt_factor = spec.attempt_factor;
    let ensemble = generate_ensemble(&ens_spec, DEFAULT_ENUMERATION_CAP)?;
    record.attempts = ensemble.attempts;
    record.ensemble_size = ensemble.members.len();
    if !ensemble.complete {
        record.flags.push(format!(
            "postselection yielded {} of {} instances in {} attempts",
            ensemble.members.len(),
            spec.count,
            ensemble.attempts
        ));
        return Ok(record);
    }
    let instances: Vec<ProblemInstance> = ensemble.members.iter().map(|m| m.instance.clone()).collect();
    record.mean_num_solutions =
        stats::mean(&ensemble.members.iter().map(|m| m.report.num_solutions as f64).collect::<Vec<_>>());

    match &spec.algorithm {
        Algorithm::Standard => standard_point(spec, point, &instances, &mut record)?,
        Algorithm::Recursive { m, schedule } => recursive_point(spec, point, *m, schedule, &instances, &mut record)?,
    }
    Ok(record)
}

fn standard_point(
    spec: &SweepSpec,
    point: GridPoint,
    instances: &[ProblemInstance],
    record: &mut SweepRecord,
) -> Result<()> {
    let gamma = match (spec.gamma_rule.resolve(point), spec.gamma_rule) {
        (Some(g), _) => g,
        (None, GammaRule::Optimize { objective }) => {
            let search = optimize_gamma(instances, point.k, spec.rho, objective, &spec.settings)?;
            if search.flagged {
                record.flags.push("step-width objective not unimodal; coarse scan used".into());
            }
            let gamma = search.gamma;
            record.gamma_search = Some(search);
            gamma
        }
        (None, _) => unreachable!("only the optimize rule is unresolved"),
    };
    record.gamma = gamma;
    record.r = decay_for(spec.rho, gamma);
    let eval = match evaluate_standard(instances, gamma, spec.rho, &spec.settings) {
        Ok(e) => e,
        Err(Error::NoSolution) => {
            record.flags.push("success probability zero at every iteration".into());
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    if eval.excluded > 0 {
        record.flags.push(format!("{} instances without solutions left out of the aggregate", eval.excluded));
    }
    let out = &eval.outcome;
    record.t_opt = Some(out.t_opt);
    record.p_opt_median = out.p_opt_median;
    record.t_total_median = out.t_total_median;
    let ledger = QueryLedger::standard(out.t_opt, gamma, &spec.settings.diffusion);
    record.physical_time_median = ledger.physical_time * out.t_total_median / out.t_opt as f64;
    record.queries_per_run = Some(ledger.total);
    record.q_median = out.q_median;
    record.q_quantiles = spec.quantiles.iter().copied().zip(stats::quantiles(&out.q, &spec.quantiles)).collect();
    Ok(())
}

fn recursive_point(
    spec: &SweepSpec,
    point: GridPoint,
    m: u32,
    schedule: &Option<Vec<usize>>,
    instances: &[ProblemInstance],
    record: &mut SweepRecord,
) -> Result<()> {
    let gamma = spec.gamma_rule.resolve(point).unwrap_or((-(m as f64) - 1.0).exp2());
    let mut config = RecursiveConfig::new(m, default_schedule(m, point.k, point.n)).with_gamma(gamma);
    config.r = decay_for(spec.rho, gamma);
    config.epsilon = spec.settings.epsilon;
    config.echo = spec.settings.echo;
    config.diffusion = spec.settings.diffusion;
    config.schedule = match schedule {
        Some(s) => s.clone(),
        None => {
            let search = optimize_schedule(instances, m, &config)?;
            let schedule = search.schedule.clone();
            record.schedule_search = Some(search);
            schedule
        }
    };
    let eval = evaluate_recursive(instances, &config)?;
    record.gamma = gamma;
    record.r = config.r;
    record.schedule = Some(eval.schedule.clone());
    record.p_opt_median = stats::median(&eval.p_final);
    record.t_total_median = eval.t_total_median;
    record.physical_time_median = eval.time_total_median;
    record.queries_per_run = Some(eval.queries);
    record.q_median = eval.q_median;
    record.q_quantiles = spec.quantiles.iter().copied().zip(stats::quantiles(&eval.q, &spec.quantiles)).collect();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_rules() {
        let p = GridPoint { n: 8, k: 12 };
        assert_eq!(GammaRule::PowerK.resolve(p), Some(1.0 / 4096.0));
        assert!((GammaRule::Critical.resolve(p).unwrap().log2() + 6.966733).abs() < 1e-6);
        assert_eq!(GammaRule::Optimize { objective: GammaObjective::MaxQ }.resolve(p), None);
    }

    #[test]
    fn degenerate_point_is_flagged() {
        let spec = SweepSpec::new(vec![GridPoint { n: 1, k: 4 }], GammaRule::PowerK, 5, 1);
        let rec = run_sweep(&spec).unwrap();
        assert!(rec[0].flagged());
        assert_eq!(rec[0].attempts, 500);
    }

    #[test]
    fn oversized_point_is_flagged() {
        let spec = SweepSpec::new(vec![GridPoint { n: 24, k: 3 }], GammaRule::PowerK, 5, 1);
        assert!(run_sweep(&spec).unwrap()[0].flagged());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let mut spec = SweepSpec::new(vec![GridPoint { n: 6, k: 6 }], GammaRule::Critical, 10, 3);
        spec.algorithm = Algorithm::Recursive { m: 3, schedule: Some(vec![2, 4]) };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<SweepSpec>(&text).unwrap(), spec);
    }
}
