//! Closed forms evaluated on cartesian parameter grids.

use anyhow::Result;
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use npgrover_core::analytics::{
    chibar, classical_baselines, cooperativity_to_decay, critical_bit_depth, critical_step_width, decay_from_rho,
    expected_solutions, g0_bound, gain_curve, qopt_model, trials_needed, DEFAULT_C, DEFAULT_D, UNIFORM_W_RMS,
};
use npgrover_core::io::{fmt_f64, write_csv, write_jsonl};
use npgrover_core::runner::closed_form_queries;

use crate::config::{parse_rho, FlagError};
use crate::output::{emit, Manifest};
use crate::{Format, OutArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaName {
    /// Critical bit depth k_c(n).
    Kc,
    /// Critical step width γ_c(n, k).
    GammaC,
    /// Expected number of perfect partitions.
    ExpectedSolutions,
    /// Repetitions M(P, ε).
    Trials,
    /// Gaussian-averaged oracle phase χ̄(σ, r).
    Chibar,
    /// Gain bound G_0(σ, r).
    G0,
    /// Gain curve G(μ) at χ̄(σ, r).
    Gain,
    /// Decay-limited optimal speedup and step width.
    Qopt,
    /// Decay per query r = 1/(ργ).
    Decay,
    /// Decay from cooperativity, r = 4σ²/η.
    Cooperativity,
    /// σ = w_rms √n / γ.
    Sigma,
    /// Closed-form query count of the layered algorithm.
    Queries,
    /// Expected classical guesses.
    Classical,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long, value_enum)]
    pub formula: FormulaName,
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sigma: Vec<f64>,
    #[arg(long = "r", value_delimiter = ',')]
    pub r: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub mu: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_rho)]
    pub rho: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub c: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub d: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub w_rms: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub dim: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    pub solutions: Vec<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

type Eval = fn(&[f64]) -> Result<Vec<f64>>;

struct Formula {
    params: &'static [&'static str],
    outputs: &'static [&'static str],
    eval: Eval,
}

fn formula(name: FormulaName) -> Formula {
    use FormulaName::*;
    let (params, outputs, eval): (&[&str], &[&str], Eval) = match name {
        Kc => (&["n"], &["k_c"], |v| Ok(vec![critical_bit_depth(v[0] as usize)])),
        GammaC => (&["n", "k"], &["gamma_c", "log2_gamma_c"], |v| {
            let g = critical_step_width(v[0] as usize, v[1] as u32);
            Ok(vec![g, g.log2()])
        }),
        ExpectedSolutions => {
            (&["n", "k"], &["expected_solutions"], |v| Ok(vec![expected_solutions(v[0] as usize, v[1] as u32)]))
        }
        Trials => (&["p", "epsilon"], &["M"], |v| Ok(vec![trials_needed(v[0], v[1])])),
        Chibar => (&["sigma", "r"], &["chibar"], |v| Ok(vec![chibar(v[0], v[1])])),
        G0 => (&["sigma", "r"], &["G0"], |v| Ok(vec![g0_bound(v[0], v[1])])),
        Gain => (&["mu", "sigma", "r"], &["chibar", "G"], |v| {
            let cb = chibar(v[1], v[2]);
            Ok(vec![cb, gain_curve(v[0], cb, v[2])])
        }),
        Qopt => (&["rho", "n", "c", "d"], &["Q_opt", "gamma_opt", "T_opt_star", "rho_min", "rho_max"], |v| {
            let q = qopt_model(v[0], v[1] as usize, v[2], v[3]);
            Ok(vec![q.q_opt, q.gamma_opt, q.t_opt_star, q.rho_window.0, q.rho_window.1])
        }),
        Decay => {
            (&["rho", "gamma"], &["r"], |v| Ok(vec![if v[0].is_infinite() { 0.0 } else { decay_from_rho(v[0], v[1]) }]))
        }
        Cooperativity => (&["sigma", "eta"], &["r"], |v| Ok(vec![cooperativity_to_decay(v[0], v[1])])),
        Sigma => (&["n", "gamma", "w_rms"], &["sigma"], |v| Ok(vec![v[2] * v[0].sqrt() / v[1]])),
        Queries => (&["k", "m"], &["exact", "asymptotic"], |v| {
            let c = closed_form_queries(v[0] as u32, v[1] as u32)?;
            Ok(vec![c.exact, c.asymptotic])
        }),
        Classical => (&["dim", "solutions"], &["memoryless_expected", "linear_expected"], |v| {
            let b = classical_baselines(v[0] as u64, v[1] as u64)?;
            Ok(vec![b.memoryless_expected, b.linear_expected])
        }),
    };
    Formula { params, outputs, eval }
}

impl AnalyzeArgs {
    /// Values for a parameter; the documented defaults apply when absent.
    fn values(&self, param: &str) -> Vec<f64> {
        let given: Vec<f64> = match param {
            "n" => self.n.iter().map(|&x| x as f64).collect(),
            "k" => self.k.iter().map(|&x| x as f64).collect(),
            "m" => self.m.iter().map(|&x| x as f64).collect(),
            "dim" => self.dim.iter().map(|&x| x as f64).collect(),
            "solutions" => self.solutions.iter().map(|&x| x as f64).collect(),
            "gamma" => self.gamma.clone(),
            "sigma" => self.sigma.clone(),
            "r" => self.r.clone(),
            "mu" => self.mu.clone(),
            "rho" => self.rho.clone(),
            "eta" => self.eta.clone(),
            "p" => self.p.clone(),
            "epsilon" => self.epsilon.clone(),
            "c" => self.c.clone(),
            "d" => self.d.clone(),
            "w_rms" => self.w_rms.clone(),
            _ => unreachable!("unknown parameter {param}"),
        };
        if !given.is_empty() {
            return given;
        }
        match param {
            "r" => vec![0.0],
            "epsilon" => vec![0.01],
            "c" => vec![DEFAULT_C],
            "d" => vec![DEFAULT_D],
            "w_rms" => vec![UNIFORM_W_RMS],
            _ => Vec::new(),
        }
    }

    fn flags_given(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let pairs: [(&'static str, bool); 16] = [
            ("n", !self.n.is_empty()),
            ("k", !self.k.is_empty()),
            ("m", !self.m.is_empty()),
            ("gamma", !self.gamma.is_empty()),
            ("sigma", !self.sigma.is_empty()),
            ("r", !self.r.is_empty()),
            ("mu", !self.mu.is_empty()),
            ("rho", !self.rho.is_empty()),
            ("eta", !self.eta.is_empty()),
            ("p", !self.p.is_empty()),
            ("epsilon", !self.epsilon.is_empty()),
            ("c", !self.c.is_empty()),
            ("d", !self.d.is_empty()),
            ("w_rms", !self.w_rms.is_empty()),
            ("dim", !self.dim.is_empty()),
            ("solutions", !self.solutions.is_empty()),
        ];
        for (name, given) in pairs {
            if given {
                v.push(name);
            }
        }
        v
    }
}

fn flag_name(param: &str) -> String {
    format!("--{}", param.replace('_', "-"))
}

fn fmt_param(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        v.to_string()
    }
}

/// Cartesian product, last parameter varying fastest.
fn grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect()
    })
}

pub fn analyze(a: AnalyzeArgs) -> Result<()> {
    let f = formula(a.formula);
    let name = a.formula.to_possible_value().expect("named").get_name().to_string();
    let unused: Vec<String> = a.flags_given().into_iter().filter(|p| !f.params.contains(p)).map(flag_name).collect();
    if !unused.is_empty() {
        return Err(FlagError(format!(
            "--formula {name} takes {}; got {}",
            f.params.iter().map(|p| flag_name(p)).collect::<Vec<_>>().join(", "),
            unused.join(", ")
        ))
        .into());
    }
    let axes: Vec<Vec<f64>> = f.params.iter().map(|p| a.values(p)).collect();
    if let Some(i) = axes.iter().position(Vec::is_empty) {
        return Err(FlagError(format!("--formula {name} needs {}", flag_name(f.params[i]))).into());
    }
    let points = grid(&axes);
    let results = points.iter().map(|p| (f.eval)(p)).collect::<Result<Vec<_>>>()?;

    let header: Vec<&str> = f.params.iter().chain(f.outputs).copied().collect();
    let rows: Vec<Vec<String>> = points
        .iter()
        .zip(&results)
        .map(|(p, r)| p.iter().map(|&v| fmt_param(v)).chain(r.iter().map(|&v| fmt_f64(v))).collect())
        .collect();

    let out = a.out.out.as_deref();
    let assignments = |p: &[f64]| {
        f.params.iter().zip(p).map(|(k, v)| format!("{k} = {}", fmt_param(*v))).collect::<Vec<_>>().join(", ")
    };
    if out.is_none() && points.len() == 1 {
        // A single point prints as one line.
        let values = f.outputs.iter().zip(&results[0]).map(|(k, v)| format!("{k} = {v}")).collect::<Vec<_>>();
        println!("{name}({}): {}", assignments(&points[0]), values.join(", "));
        return Ok(());
    }
    emit(out, |w| match a.out.format {
        Format::Csv => Ok(write_csv(w, &header, &rows)?),
        Format::Json => {
            let objs: Vec<serde_json::Value> = points
                .iter()
                .zip(&results)
                .map(|(p, r)| {
                    let mut m = serde_json::Map::new();
                    for (k, v) in f.params.iter().zip(p) {
                        m.insert(k.to_string(), if v.is_infinite() { json!("inf") } else { json!(v) });
                    }
                    for (k, v) in f.outputs.iter().zip(r) {
                        m.insert(k.to_string(), json!(v));
                    }
                    serde_json::Value::Object(m)
                })
                .collect();
            Ok(write_jsonl(w, &objs)?)
        }
    })?;
    if let Some(p) = out {
        let params: serde_json::Map<String, serde_json::Value> = f
            .params
            .iter()
            .zip(&axes)
            .map(|(k, v)| (k.to_string(), json!(v.iter().map(|&x| fmt_param(x)).collect::<Vec<_>>())))
            .collect();
        let mut manifest = Manifest::new("analyze", json!({ "formula": name, "params": params }))?;
        manifest.output(p, if a.out.format == Format::Csv { "csv" } else { "jsonl" }, rows.len());
        manifest.write(out)?;
        println!("analyze: {name} on {} points written to {}", rows.len(), p.display());
    }
    Ok(())
}
