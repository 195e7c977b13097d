use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use npgrover_core::analytics::{classical_baselines, decay_from_rho, linear_quantile, memoryless_quantile};
use npgrover_core::experiments::{
    aggregate, auto_t_max, capture_histogram, evaluate_recursive, gamma_for_target_popt, optimize_schedule,
    real_weight_sweep, run_point, GridPoint, RunSettings, SweepSpec, RECORD_HEADER,
};
use npgrover_core::instances::{
    ckk_exists, count_solutions, generate_ensemble, EnsembleSpec, Postselect, ProblemInstance, DEFAULT_ENUMERATION_CAP,
    MAX_BIT_DEPTH,
};
use npgrover_core::io::{fmt_f64, read_jsonl, write_csv, write_jsonl, write_traces};
use npgrover_core::quantum::DiffusionSpec;
use npgrover_core::rng;
use npgrover_core::runner::{default_schedule, run_standard, OracleMode, RecursiveConfig, RecursiveProgram, TOptRule};
use npgrover_core::stats;

use crate::config::{validate_config, FlagError, OracleConfig};
use crate::output::{emit, summarize, write_atomic, Manifest};
use crate::{
    ClassicalArgs, DiffusionArg, Format, GenArgs, OracleKindArg, RecursiveArgs, RuleArg, RunArgs, SimArgs, SweepArgs,
};

fn flag(msg: impl Into<String>) -> anyhow::Error {
    FlagError(msg.into()).into()
}

fn target(path: Option<&Path>) -> String {
    path.map(|p| p.display().to_string()).unwrap_or_else(|| "stdout".into())
}

pub fn gen(a: GenArgs) -> Result<()> {
    if a.n == 0 || a.n > DEFAULT_ENUMERATION_CAP {
        return Err(flag(format!("--n must lie in 1..={DEFAULT_ENUMERATION_CAP}, got {}", a.n)));
    }
    if a.k == 0 || a.k > MAX_BIT_DEPTH {
        return Err(flag(format!("--k must lie in 1..={MAX_BIT_DEPTH}, got {}", a.k)));
    }
    if a.count == 0 {
        return Err(flag("--count must be at least 1"));
    }
    let mut spec = EnsembleSpec::new(a.n, a.k, a.count, a.seed, a.postselect);
    spec.attempt_factor = a.attempt_factor;
    let ensemble = generate_ensemble(&spec, DEFAULT_ENUMERATION_CAP)?;
    if !ensemble.complete {
        anyhow::bail!(
            "only {} of {} instances passed postselection {} in {} draws",
            ensemble.members.len(),
            a.count,
            a.postselect,
            ensemble.attempts
        );
    }
    let instances: Vec<&ProblemInstance> = ensemble.members.iter().map(|m| &m.instance).collect();
    let out = a.out.as_deref();
    emit(out, |w| Ok(write_jsonl(w, &instances)?))?;
    let solutions: Vec<usize> = ensemble.members.iter().map(|m| m.report.num_solutions).collect();
    let mut manifest = Manifest::new("gen", &spec)?.with_results(json!({
        "attempts": ensemble.attempts,
        "num_solutions": solutions,
    }))?;
    if let Some(p) = out {
        manifest.output(p, "jsonl", instances.len());
        manifest.write(out)?;
    }
    summarize(
        out,
        format!(
            "gen: wrote {} instances (n = {}, k = {}, postselect {}, {} draws) to {}",
            instances.len(),
            a.n,
            a.k,
            a.postselect,
            ensemble.attempts,
            target(out)
        ),
    );
    Ok(())
}

fn read_instances(path: &Path) -> Result<Vec<ProblemInstance>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let instances: Vec<ProblemInstance> =
        read_jsonl(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    let first = instances.first().with_context(|| format!("{} holds no instances", path.display()))?;
    for (i, inst) in instances.iter().enumerate() {
        inst.validate().with_context(|| format!("instance {i} of {}", path.display()))?;
        if inst.n != first.n || inst.k != first.k {
            anyhow::bail!(
                "instance {i} of {} has (n, k) = ({}, {}) but instance 0 has ({}, {})",
                path.display(),
                inst.n,
                inst.k,
                first.n,
                first.k
            );
        }
    }
    Ok(instances)
}

fn diffusion(sim: &SimArgs, rho: Option<f64>) -> Result<DiffusionSpec> {
    Ok(match sim.diffusion {
        DiffusionArg::Ideal => {
            if sim.r_d.is_some() {
                return Err(flag("--r-d needs --diffusion generalized"));
            }
            DiffusionSpec::ideal()
        }
        DiffusionArg::Generalized => {
            let r_d = match (sim.r_d, rho) {
                (Some(r), _) => r,
                (None, Some(rho)) if rho.is_finite() => decay_from_rho(rho, sim.gamma_d),
                _ => 0.0,
            };
            let spec = DiffusionSpec::generalized(sim.gamma_d, r_d);
            spec.validate().map_err(|e| flag(format!("--gamma-d/--r-d: {e}")))?;
            spec
        }
    })
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(flag(format!("--epsilon must lie in (0, 1), got {eps}")))
    }
}

#[derive(Serialize)]
struct RunManifestConfig<'a> {
    instances: String,
    count: usize,
    oracle: &'a OracleConfig,
    oracle_kind: OracleKindArg,
    settings: &'a RunSettings,
    instance_id: &'static str,
}

pub fn run(a: RunArgs) -> Result<()> {
    let instances = read_instances(&a.instances)?;
    let first = &instances[0];
    let oracle = validate_config(&OracleConfig {
        n: first.n,
        k: first.k,
        gamma_rule: a.oracle.gamma_rule,
        gamma: a.oracle.gamma,
        rho: a.oracle.rho,
        r: a.oracle.r,
    })?;
    check_epsilon(a.sim.epsilon)?;
    let (gamma, r) = (oracle.gamma.expect("resolved"), oracle.r.expect("resolved"));
    let t_max = match a.tmax {
        Some(0) => return Err(flag("--tmax must be at least 1")),
        Some(t) => t,
        None => {
            let counts = instances
                .par_iter()
                .map(|inst| count_solutions(inst, DEFAULT_ENUMERATION_CAP).map(|r| r.num_solutions))
                .collect::<npgrover_core::Result<Vec<usize>>>()?;
            auto_t_max(first.n, counts.into_iter().filter(|&c| c > 0).min().unwrap_or(1))
        }
    };
    let settings = RunSettings {
        epsilon: a.sim.epsilon,
        echo: !a.sim.no_echo,
        diffusion: diffusion(&a.sim, oracle.rho)?,
        rule: match a.rule {
            RuleArg::MinTotal => TOptRule::MinMedianTotal,
            RuleArg::MaxProbability => TOptRule::MaxMedianProbability,
        },
        t_max: Some(t_max),
    };
    let mut config = npgrover_core::experiments::run_config(gamma, r, t_max, &settings);
    if a.oracle_kind == OracleKindArg::Ideal {
        config.oracle = OracleMode::Ideal;
    }
    let traces = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let mut trace = run_standard(inst, &config)?;
            trace.instance_id = i as u64;
            Ok(trace)
        })
        .collect::<npgrover_core::Result<Vec<_>>>()?;

    let evaluation = aggregate(traces.clone(), gamma, r, &settings);
    let outcome = match &evaluation {
        Ok(e) => Some(&e.outcome),
        Err(npgrover_core::Error::NoSolution) => None,
        Err(e) => anyhow::bail!("aggregating traces: {e}"),
    };
    if a.outcome.is_some() && outcome.is_none() {
        anyhow::bail!("no instance has a solution, so --outcome is undefined");
    }
    let out = a.out.out.as_deref();
    emit(out, |w| match a.out.format {
        Format::Csv => Ok(write_traces(w, &traces)?),
        Format::Json => Ok(write_jsonl(w, &traces)?),
    })?;

    if let (Some(path), Some(o)) = (&a.outcome, outcome) {
        let q = stats::quantiles(&o.q, &[0.25, 0.75]);
        let row = vec![
            first.n.to_string(),
            first.k.to_string(),
            fmt_f64(gamma),
            fmt_f64(r),
            o.t_opt.to_string(),
            fmt_f64(o.p_opt_median),
            fmt_f64(o.q_median),
            fmt_f64(q[0]),
            fmt_f64(q[1]),
        ];
        write_atomic(path, |w| {
            Ok(write_csv(w, &["n", "k", "gamma", "r", "T_opt", "P_opt", "Q_median", "Q_q25", "Q_q75"], &[row])?)
        })?;
    }

    let format = match a.out.format {
        Format::Csv => "csv",
        Format::Json => "jsonl",
    };
    let mut manifest = Manifest::new(
        "run",
        RunManifestConfig {
            instances: a.instances.display().to_string(),
            count: instances.len(),
            oracle: &oracle,
            oracle_kind: a.oracle_kind,
            settings: &settings,
            instance_id: "line index in the instance file",
        },
    )?
    .with_results(json!({ "outcome": outcome, "excluded": evaluation.as_ref().map(|e| e.excluded).ok() }))?;
    if let Some(p) = out {
        manifest.output(p, format, traces.len() * (t_max + 1));
        if let Some(o) = &a.outcome {
            manifest.output(o, "csv", 1);
        }
        manifest.write(out)?;
    }
    let summary = match outcome {
        Some(o) => format!("T_opt = {}, median P_opt = {:.6}, median Q = {:.6}", o.t_opt, o.p_opt_median, o.q_median),
        None => "no instance has a solution".into(),
    };
    summarize(
        out,
        format!(
            "run: {} instances, gamma = {gamma:e}, r = {r:e}, T = 0..={t_max}; {summary}; wrote {}",
            instances.len(),
            target(out)
        ),
    );
    Ok(())
}

fn parse_schedule(s: &str) -> Result<Option<Vec<usize>>> {
    if s == "default" {
        return Ok(None);
    }
    let schedule = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| flag(format!("--schedule {s:?}: {e}")))?;
    Ok(Some(schedule))
}

#[derive(Serialize)]
struct RecursiveManifestConfig<'a> {
    instances: String,
    count: usize,
    oracle: &'a OracleConfig,
    recursive: &'a RecursiveConfig,
    schedule_source: &'static str,
}

pub fn recursive(a: RecursiveArgs) -> Result<()> {
    let instances = read_instances(&a.instances)?;
    let first = &instances[0];
    if a.m == 0 || a.m > first.k {
        return Err(flag(format!("--m must lie in 1..={}, got {}", first.k, a.m)));
    }
    let oracle = validate_config(&OracleConfig {
        n: first.n,
        k: first.k,
        gamma_rule: None,
        gamma: Some(a.gamma.unwrap_or_else(|| (-(a.m as f64) - 1.0).exp2())),
        rho: a.rho,
        r: a.r,
    })?;
    check_epsilon(a.sim.epsilon)?;
    let fixed = parse_schedule(&a.schedule)?;
    let default = default_schedule(a.m, first.k, first.n);
    let mut cfg = RecursiveConfig::new(a.m, fixed.clone().unwrap_or_else(|| default.clone()))
        .with_gamma(oracle.gamma.expect("resolved"))
        .with_decay(oracle.r.expect("resolved"));
    cfg.epsilon = a.sim.epsilon;
    cfg.echo = !a.sim.no_echo;
    cfg.diffusion = diffusion(&a.sim, oracle.rho)?;
    cfg.validate(first.k).map_err(|e| flag(e.to_string()))?;
    let (search, source) = if a.optimize_schedule {
        let search = optimize_schedule(&instances, a.m, &cfg)?;
        cfg.schedule = search.schedule.clone();
        (Some(search), "optimized")
    } else if fixed.is_some() {
        (None, "given")
    } else {
        (None, "default")
    };

    let eval = evaluate_recursive(&instances, &cfg)?;
    let ledger = RecursiveProgram::new(first, &cfg)?.run()?.ledger;
    let rows: Vec<Vec<String>> = (0..instances.len())
        .map(|i| {
            vec![
                i.to_string(),
                fmt_f64(eval.p_final[i]),
                eval.queries.to_string(),
                fmt_f64(eval.physical_time),
                fmt_f64(eval.t_total[i]),
                fmt_f64(eval.time_total[i]),
                fmt_f64(eval.q[i]),
            ]
        })
        .collect();
    let out = a.out.out.as_deref();
    emit(out, |w| match a.out.format {
        Format::Csv => Ok(write_csv(
            w,
            &["instance_id", "P_final", "queries", "physical_time", "T_total", "time_total", "Q"],
            &rows,
        )?),
        Format::Json => {
            let records: Vec<_> = (0..instances.len())
                .map(|i| {
                    json!({
                        "instance_id": i,
                        "p_final": eval.p_final[i],
                        "queries": eval.queries,
                        "physical_time": eval.physical_time,
                        "t_total": eval.t_total[i],
                        "time_total": eval.time_total[i],
                        "q": eval.q[i],
                    })
                })
                .collect();
            Ok(write_jsonl(w, &records)?)
        }
    })?;
    if let Some(path) = &a.ledger {
        write_atomic(path, |w| {
            serde_json::to_writer_pretty(&mut *w, &ledger)?;
            writeln!(w)?;
            Ok(())
        })?;
    }
    let mut manifest = Manifest::new(
        "recursive",
        RecursiveManifestConfig {
            instances: a.instances.display().to_string(),
            count: instances.len(),
            oracle: &oracle,
            recursive: &cfg,
            schedule_source: source,
        },
    )?
    .with_results(json!({
        "ledger": ledger,
        "default_schedule": default,
        "schedule_search": search,
        "p_final_median": stats::median(&eval.p_final),
        "t_total_median": eval.t_total_median,
        "time_total_median": eval.time_total_median,
        "q_median": eval.q_median,
    }))?;
    if let Some(p) = out {
        manifest.output(p, if a.out.format == Format::Csv { "csv" } else { "jsonl" }, rows.len());
        if let Some(l) = &a.ledger {
            manifest.output(l, "json", 1);
        }
        manifest.write(out)?;
    }
    summarize(out, format!(
            "recursive: schedule {:?} ({source}), {} queries per run, median P_final = {:.6}, median T_total = {:.1}; wrote {}",
            cfg.schedule,
            eval.queries,
            stats::median(&eval.p_final),
            eval.t_total_median,
            target(out)
    ));
    Ok(())
}

fn default_has_solution() -> Postselect {
    Postselect::HasSolution
}

fn default_none() -> Postselect {
    Postselect::None
}

/// `S_z` distributions after `T_opt(γ)` for one ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaptureSpec {
    pub n: usize,
    pub k: u32,
    pub count: usize,
    pub seed: u64,
    pub gammas: Vec<f64>,
    #[serde(default = "default_none")]
    pub postselect: Postselect,
    #[serde(default)]
    pub settings: RunSettings,
}

/// Real-weight minimization over `n` and `k_eff = −log₂γ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealSpec {
    pub ns: Vec<usize>,
    pub k_effs: Vec<f64>,
    pub count: usize,
    pub seed: u64,
    #[serde(default)]
    pub settings: RunSettings,
}

/// Step width giving a target median `P_opt` at each grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaTargetSpec {
    pub points: Vec<GridPoint>,
    pub targets: Vec<f64>,
    pub count: usize,
    pub seed: u64,
    #[serde(default = "default_has_solution")]
    pub postselect: Postselect,
    #[serde(default)]
    pub settings: RunSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SweepFile {
    Grid(SweepSpec),
    Capture(CaptureSpec),
    Real(RealSpec),
    GammaTarget(GammaTargetSpec),
}

impl SweepFile {
    fn apply_overrides(&mut self, seed: Option<u64>, count: Option<usize>) {
        let (s, c) = match self {
            SweepFile::Grid(x) => (&mut x.seed, &mut x.count),
            SweepFile::Capture(x) => (&mut x.seed, &mut x.count),
            SweepFile::Real(x) => (&mut x.seed, &mut x.count),
            SweepFile::GammaTarget(x) => (&mut x.seed, &mut x.count),
        };
        if let Some(seed) = seed {
            *s = seed;
        }
        if let Some(count) = count {
            *c = count;
        }
    }

    fn validate(&self) -> Result<()> {
        let check_n = |n: usize| {
            if n == 0 || n > DEFAULT_ENUMERATION_CAP {
                Err(flag(format!("n = {n} in the sweep file lies outside 1..={DEFAULT_ENUMERATION_CAP}")))
            } else {
                Ok(())
            }
        };
        let count = match self {
            SweepFile::Grid(x) => {
                x.points.iter().try_for_each(|p| check_n(p.n))?;
                x.count
            }
            SweepFile::Capture(x) => {
                check_n(x.n)?;
                x.count
            }
            SweepFile::Real(x) => {
                x.ns.iter().try_for_each(|&n| check_n(n))?;
                x.count
            }
            SweepFile::GammaTarget(x) => {
                x.points.iter().try_for_each(|p| check_n(p.n))?;
                x.count
            }
        };
        if count == 0 {
            return Err(flag("the sweep needs at least one instance per point"));
        }
        Ok(())
    }
}

fn point_ensemble(n: usize, k: u32, count: usize, seed: u64, postselect: Postselect) -> Result<Vec<ProblemInstance>> {
    let ensemble = generate_ensemble(&EnsembleSpec::new(n, k, count, seed, postselect), DEFAULT_ENUMERATION_CAP)?;
    if !ensemble.complete {
        anyhow::bail!("(n, k) = ({n}, {k}): only {} of {count} instances passed postselection", ensemble.members.len());
    }
    Ok(ensemble.members.into_iter().map(|m| m.instance).collect())
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
    let mut file: SweepFile = serde_json::from_str(&text).map_err(|e| flag(format!("{}: {e}", a.spec.display())))?;
    file.apply_overrides(a.seed, a.count);
    file.validate()?;
    let out = a.out.out.as_deref();
    let json = a.out.format == Format::Json;

    let (rows, header, records, results): (Vec<Vec<String>>, Vec<&str>, Vec<serde_json::Value>, serde_json::Value) =
        match &file {
            SweepFile::Grid(spec) => {
                let recs =
                    spec.points.iter().map(|&p| run_point(spec, p)).collect::<npgrover_core::Result<Vec<_>>>()?;
                let rows = recs.iter().map(|r| r.csv_row()).collect();
                let values = recs.iter().map(serde_json::to_value).collect::<Result<Vec<_>, _>>()?;
                (rows, RECORD_HEADER.to_vec(), values.clone(), json!({ "records": values }))
            }
            SweepFile::Capture(spec) => {
                let instances = point_ensemble(spec.n, spec.k, spec.count, spec.seed, spec.postselect)?;
                let capture = capture_histogram(&instances, &spec.gammas, &spec.settings)?;
                let mut rows = Vec::new();
                for c in &capture {
                    for &(sz, p) in &c.bins {
                        rows.push(vec![
                            fmt_f64(c.gamma),
                            c.t_opt.to_string(),
                            fmt_f64(sz),
                            fmt_f64(p),
                            fmt_f64(c.half_width),
                        ]);
                    }
                }
                let values = capture.iter().map(serde_json::to_value).collect::<Result<Vec<_>, _>>()?;
                let summary: Vec<_> = capture
                    .iter()
                    .map(|c| json!({"gamma": c.gamma, "t_opt": c.t_opt, "half_width": c.half_width}))
                    .collect();
                (rows, vec!["gamma", "T_opt", "S_z", "P_rel", "half_width"], values, json!({ "rows": summary }))
            }
            SweepFile::Real(spec) => {
                let recs = real_weight_sweep(&spec.ns, &spec.k_effs, spec.count, spec.seed, &spec.settings)?;
                let rows = recs
                    .iter()
                    .map(|r| {
                        vec![
                            r.n.to_string(),
                            fmt_f64(r.k_eff),
                            fmt_f64(r.gamma),
                            r.t_opt.to_string(),
                            fmt_f64(r.p_opt_median),
                            fmt_f64(r.q_median),
                            r.ties.to_string(),
                        ]
                    })
                    .collect();
                let values = recs.iter().map(serde_json::to_value).collect::<Result<Vec<_>, _>>()?;
                (
                    rows,
                    vec!["n", "k_eff", "gamma", "T_opt", "P_opt_median", "Q_median", "ties"],
                    values.clone(),
                    json!({ "records": values }),
                )
            }
            SweepFile::GammaTarget(spec) => {
                let mut rows = Vec::new();
                let mut values = Vec::new();
                for &p in &spec.points {
                    let seed = rng::mix(rng::mix(spec.seed, p.n as u64), p.k as u64);
                    let instances = point_ensemble(p.n, p.k, spec.count, seed, spec.postselect)?;
                    for &t in &spec.targets {
                        let found = gamma_for_target_popt(&instances, p.k, t, &spec.settings)?;
                        rows.push(vec![
                            p.n.to_string(),
                            p.k.to_string(),
                            fmt_f64(t),
                            fmt_f64(found.gamma),
                            fmt_f64(found.gamma.log2()),
                            fmt_f64(found.p_opt),
                            found.flagged.to_string(),
                        ]);
                        values.push(json!({ "n": p.n, "k": p.k, "target": t, "search": found }));
                    }
                }
                (
                    rows,
                    vec!["n", "k", "target", "gamma", "log2_gamma", "P_opt_median", "flagged"],
                    values.clone(),
                    json!({ "records": values }),
                )
            }
        };

    emit(out, |w| if json { Ok(write_jsonl(w, &records)?) } else { Ok(write_csv(w, &header, &rows)?) })?;
    let family = match &file {
        SweepFile::Grid(_) => "grid",
        SweepFile::Capture(_) => "capture",
        SweepFile::Real(_) => "real",
        SweepFile::GammaTarget(_) => "gamma_target",
    };
    let mut manifest = Manifest::new("sweep", &file)?.with_results(results)?;
    let n = if json { records.len() } else { rows.len() };
    if let Some(p) = out {
        manifest.output(p, if json { "jsonl" } else { "csv" }, n);
        manifest.write(out)?;
    }
    summarize(out, format!("sweep: {family} family, {n} records written to {}", target(out)));
    Ok(())
}

pub fn classical(a: ClassicalArgs) -> Result<()> {
    for &p in &a.quantile {
        if !(p > 0.0 && p < 1.0) {
            return Err(flag(format!("--quantile values must lie in (0, 1), got {p}")));
        }
    }
    let mut header: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let quantile_cols = |header: &mut Vec<String>| {
        for p in &a.quantile {
            header.push(format!("memoryless_q{p}"));
            header.push(format!("linear_q{p}"));
        }
    };
    let baseline_cells = |dim: u64, na: u64| -> Result<Vec<String>> {
        let b = classical_baselines(dim, na)?;
        let mut cells = vec![fmt_f64(b.memoryless_expected), fmt_f64(b.linear_expected)];
        for &p in &a.quantile {
            cells.push(fmt_f64(memoryless_quantile(p, dim, na)));
            cells.push(linear_quantile(p, dim, na).to_string());
        }
        Ok(cells)
    };
    let summary;
    if let Some(path) = &a.instances {
        if !a.solutions.is_empty() {
            return Err(flag("--solutions cannot be combined with --instances"));
        }
        let instances = read_instances(path)?;
        header.extend(
            ["instance_id", "n", "k", "N_A", "ckk_perfect", "memoryless_expected", "linear_expected"].map(String::from),
        );
        quantile_cols(&mut header);
        let reports = instances
            .par_iter()
            .map(|inst| count_solutions(inst, DEFAULT_ENUMERATION_CAP))
            .collect::<npgrover_core::Result<Vec<_>>>()?;
        let width = header.len();
        for (i, (inst, report)) in instances.iter().zip(&reports).enumerate() {
            let na = report.num_solutions as u64;
            let mut row = vec![
                i.to_string(),
                inst.n.to_string(),
                inst.k.to_string(),
                na.to_string(),
                ckk_exists(inst).0.to_string(),
            ];
            if na > 0 {
                row.extend(baseline_cells(1u64 << inst.n, na)?);
            }
            row.resize(width, String::new());
            rows.push(row);
        }
        let solvable = reports.iter().filter(|r| r.num_solutions > 0).count();
        summary = format!("{} instances, {solvable} with a perfect partition", instances.len());
    } else {
        let dims: Vec<u64> = if !a.dim.is_empty() {
            a.dim.clone()
        } else if !a.n.is_empty() {
            if let Some(&n) = a.n.iter().find(|&&n| n >= 64) {
                return Err(flag(format!("--n {n} overflows a 64-bit search space")));
            }
            a.n.iter().map(|&n| 1u64 << n).collect()
        } else {
            return Err(flag("one of --dim, --n or --instances is required"));
        };
        if a.solutions.is_empty() {
            return Err(flag("--solutions is required with --dim or --n"));
        }
        header.extend(["N", "N_A", "memoryless_expected", "linear_expected"].map(String::from));
        quantile_cols(&mut header);
        for &dim in &dims {
            for &na in &a.solutions {
                if na == 0 || na > dim {
                    return Err(flag(format!("--solutions {na} must lie in 1..={dim}")));
                }
                let mut row = vec![dim.to_string(), na.to_string()];
                row.extend(baseline_cells(dim, na)?);
                rows.push(row);
            }
        }
        summary = match rows.as_slice() {
            [row] => format!("N = {}, N_A = {}: memoryless {}, linear {}", row[0], row[1], row[2], row[3]),
            _ => format!("{} rows", rows.len()),
        };
    }
    let out = a.out.out.as_deref();
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    emit(out, |w| match a.out.format {
        Format::Csv => Ok(write_csv(w, &hdr, &rows)?),
        Format::Json => {
            let objs: Vec<serde_json::Map<String, serde_json::Value>> =
                rows.iter().map(|r| header.iter().cloned().zip(r.iter().map(|c| json!(c))).collect()).collect();
            Ok(write_jsonl(w, &objs)?)
        }
    })?;
    let mut manifest = Manifest::new(
        "classical",
        json!({
            "dim": a.dim,
            "n": a.n,
            "solutions": a.solutions,
            "instances": a.instances.as_ref().map(|p| p.display().to_string()),
            "quantile": a.quantile,
        }),
    )?;
    if let Some(p) = out {
        manifest.output(p, if a.out.format == Format::Csv { "csv" } else { "jsonl" }, rows.len());
        manifest.write(out)?;
    }
    summarize(out, format!("classical: {summary}; wrote {}", target(out)));
    Ok(())
}
