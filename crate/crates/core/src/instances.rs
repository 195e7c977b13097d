//! Number-partitioning and subset-sum instances: generation, exact counting
//! and the complete Karmarkar–Karp existence test.
//!
//! Weights are stored as integers `a_i ∈ {1, …, 2^k}`; the normalized weight
//! is `w_i = a_i / 2^k`. A basis state `x` assigns spin `s_i = +1` when bit
//! `i` of `x` is clear and `s_i = -1` when it is set, and its imbalance is the
//! exact integer `D(x) = Σ a_i s_i`. The collective spin is `S_z = D / 2^(k+1)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Default cap on qubit count for anything that enumerates `2^n` states.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Largest supported bit depth; keeps every imbalance well inside `i64`.
pub const MAX_BIT_DEPTH: u32 = 40;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub n: usize,
    pub k: u32,
    pub weights: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ProblemInstance {
    pub fn new(k: u32, weights: Vec<u64>) -> Result<Self> {
        let inst = ProblemInstance { n: weights.len(), k, weights, seed: None };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n != self.weights.len() {
            return Err(Error::Parameter(format!(
                "n = {} does not match {} weights",
                self.n,
                self.weights.len()
            )));
        }
        if self.k == 0 || self.k > MAX_BIT_DEPTH {
            return Err(Error::Parameter(format!("bit depth k = {} outside 1..={MAX_BIT_DEPTH}", self.k)));
        }
        let top = 1u64 << self.k;
        if let Some(bad) = self.weights.iter().find(|&&a| a == 0 || a > top) {
            return Err(Error::Parameter(format!("weight {bad} outside 1..=2^{}", self.k)));
        }
        Ok(())
    }

    /// `A = Σ a_i`.
    pub fn total(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// Weights `w_i = a_i / 2^k` in `(0, 1]`.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let scale = (1u64 << self.k) as f64;
        self.weights.iter().map(|&a| a as f64 / scale).collect()
    }

    /// Root-mean-square of the normalized weights.
    pub fn rms_weight(&self) -> f64 {
        let w = self.normalized_weights();
        (w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64).sqrt()
    }

    /// Integer target imbalance `D*` encoding the subset-sum question
    /// "is there a subset with `Σ a_j = target_sum`?".
    ///
    /// Spins set to 1 form the subset, so `D = A − 2·W₁` and the target is
    /// `A − 2·target_sum`.
    pub fn subset_sum_target(&self, target_sum: u64) -> i64 {
        self.total() as i64 - 2 * target_sum as i64
    }
}

/// Draws `n` weights uniformly from `{1, …, 2^k}`.
pub fn gen_instance(n: usize, k: u32, seed: u64) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if k == 0 || k > MAX_BIT_DEPTH {
        return Err(Error::Parameter(format!("bit depth k = {k} outside 1..={MAX_BIT_DEPTH}")));
    }
    let mut rng = rng::stream(seed);
    let top = 1u64 << k;
    let weights = (0..n).map(|_| rng.gen_range(1..=top)).collect();
    Ok(ProblemInstance { n, k, weights, seed: Some(seed) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealInstance {
    pub n: usize,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Draws `n` reals uniformly from `(0, 1]`.
pub fn gen_real_instance(n: usize, seed: u64) -> Result<RealInstance> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    let mut rng = rng::stream(seed);
    let weights = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
    Ok(RealInstance { n, weights, seed: Some(seed) })
}

impl RealInstance {
    pub fn rms_weight(&self) -> f64 {
        (self.weights.iter().map(|x| x * x).sum::<f64>() / self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub num_solutions: usize,
    pub solutions: Vec<usize>,
    pub min_abs_imbalance: u64,
    pub argmin_set: Vec<usize>,
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::Capability { n, cap })
    } else {
        Ok(())
    }
}

/// Exhaustive count of perfect partitions.
///
/// Walks the half of configuration space with the top spin up in Gray-code
/// order and mirrors every hit onto its complement.
pub fn count_solutions(instance: &ProblemInstance, cap: usize) -> Result<SolutionReport> {
    check_cap(instance.n, cap)?;
    let n = instance.n;
    let a = &instance.weights;
    let top = 1usize << (n - 1);
    let mask = (1usize << n) - 1;

    let mut d = instance.total() as i64;
    let mut state = 0usize;
    let mut min_abs = u64::MAX;
    let mut argmin = Vec::new();

    for step in 0..top {
        if step > 0 {
            let bit = step.trailing_zeros() as usize;
            state ^= 1 << bit;
            if state & (1 << bit) != 0 {
                d -= 2 * a[bit] as i64;
            } else {
                d += 2 * a[bit] as i64;
            }
        }
        let abs = d.unsigned_abs();
        if abs < min_abs {
            min_abs = abs;
            argmin.clear();
        }
        if abs == min_abs {
            argmin.push(state);
            argmin.push(!state & mask);
        }
    }
    argmin.sort_unstable();
    let solutions = if min_abs == 0 { argmin.clone() } else { Vec::new() };
    Ok(SolutionReport {
        num_solutions: solutions.len(),
        solutions,
        min_abs_imbalance: min_abs,
        argmin_set: argmin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSolutionReport {
    pub min_abs_imbalance: f64,
    pub argmin_set: Vec<usize>,
    /// More than one complementary pair attains the minimum.
    pub ties: bool,
}

/// Minimal `|Σ w_i s_i|` over all configurations of a real-weight instance.
///
/// Each imbalance is summed in index order so that complementary states get
/// bit-exact opposite values.
pub fn real_min_imbalance(instance: &RealInstance, cap: usize) -> Result<RealSolutionReport> {
    check_cap(instance.n, cap)?;
    let values = real_imbalances(&instance.weights);
    let min = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let argmin_set: Vec<usize> = (0..values.len()).filter(|&x| values[x].abs() == min).collect();
    Ok(RealSolutionReport { min_abs_imbalance: min, ties: argmin_set.len() > 2, argmin_set })
}

pub(crate) fn real_imbalances(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    (0..1usize << n)
        .into_par_iter()
        .map(|x| {
            let mut d = 0.0;
            for (i, &w) in weights.iter().enumerate() {
                if x >> i & 1 == 0 {
                    d += w;
                } else {
                    d -= w;
                }
            }
            d
        })
        .collect()
}

/// Complete Karmarkar–Karp differencing.
///
/// Returns whether a perfect partition exists together with the smallest
/// residue found. The search stops as soon as residue 0 is reached.
pub fn ckk_exists(instance: &ProblemInstance) -> (bool, u64) {
    let mut values = instance.weights.clone();
    values.sort_unstable_by(|a, b| b.cmp(a));
    let total: u64 = values.iter().sum();
    // A residue always has the parity of the total.
    let floor = total & 1;
    let mut best = u64::MAX;
    ckk_search(&mut values, total, floor, &mut best);
    (best == 0, best)
}

/// `values` is sorted descending and sums to `total`. Returns true once the
/// parity floor has been reached.
fn ckk_search(values: &mut Vec<u64>, total: u64, floor: u64, best: &mut u64) -> bool {
    let largest = values[0];
    let rest = total - largest;
    if largest >= rest {
        let residue = largest - rest;
        if residue < *best {
            *best = residue;
        }
        return *best <= floor;
    }
    if values.len() == 2 {
        // Unreachable: two values always satisfy largest >= rest.
        return false;
    }

    let a = values.remove(0);
    let b = values.remove(0);

    // Difference branch: a and b end up on opposite sides.
    let diff = a - b;
    let pos = insert_desc(values, diff);
    if ckk_search(values, total - 2 * b, floor, best) {
        return true;
    }
    values.remove(pos);

    // Sum branch: a and b on the same side.
    let sum = a + b;
    let pos = insert_desc(values, sum);
    if ckk_search(values, total, floor, best) {
        return true;
    }
    values.remove(pos);

    values.insert(0, b);
    values.insert(0, a);
    false
}

fn insert_desc(values: &mut Vec<u64>, v: u64) -> usize {
    let pos = values.partition_point(|&x| x > v);
    values.insert(pos, v);
    pos
}

/// Ensemble postselection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Postselect {
    None,
    HasSolution,
    SolutionCount(usize),
}

impl Postselect {
    pub fn accepts(&self, num_solutions: usize) -> bool {
        match *self {
            Postselect::None => true,
            Postselect::HasSolution => num_solutions > 0,
            Postselect::SolutionCount(c) => num_solutions == c,
        }
    }
}

impl FromStr for Postselect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Postselect::None),
            "any" | "has_solution" => Ok(Postselect::HasSolution),
            _ => s
                .strip_prefix("count=")
                .and_then(|c| c.parse().ok())
                .map(Postselect::SolutionCount)
                .ok_or_else(|| Error::Parameter(format!("unknown postselect rule {s:?}"))),
        }
    }
}

impl fmt::Display for Postselect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Postselect::None => write!(f, "none"),
            Postselect::HasSolution => write!(f, "any"),
            Postselect::SolutionCount(c) => write!(f, "count={c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub k: u32,
    pub count: usize,
    pub seed: u64,
    pub postselect: Postselect,
    /// Candidate draws allowed per requested instance.
    #[serde(default = "default_attempt_factor")]
    pub attempt_factor: usize,
}

fn default_attempt_factor() -> usize {
    100
}

impl EnsembleSpec {
    pub fn new(n: usize, k: u32, count: usize, seed: u64, postselect: Postselect) -> Self {
        EnsembleSpec { n, k, count, seed, postselect, attempt_factor: default_attempt_factor() }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleMember {
    /// Candidate index the instance was drawn at; its seed is `mix(master, index)`.
    pub index: u64,
    pub instance: ProblemInstance,
    pub report: SolutionReport,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub members: Vec<EnsembleMember>,
    pub attempts: u64,
    /// False when the attempt budget ran out before `count` instances passed.
    pub complete: bool,
}

/// Generates an ensemble, postselecting with CKK first and the exact count
/// second. Candidate `i` always uses seed `mix(master, i)`, so the accepted
/// set does not depend on thread count.
pub fn generate_ensemble(spec: &EnsembleSpec, cap: usize) -> Result<Ensemble> {
    if spec.count == 0 {
        return Err(Error::Parameter("ensemble count must be at least 1".into()));
    }
    check_cap(spec.n, cap)?;
    gen_instance(spec.n, spec.k, 0)?;

    let budget = (spec.count as u64).saturating_mul(spec.attempt_factor.max(1) as u64);
    let batch = (spec.count as u64).max(64);
    let mut members = Vec::with_capacity(spec.count);
    let mut next = 0u64;

    while members.len() < spec.count && next < budget {
        let end = (next + batch).min(budget);
        let candidates: Vec<Option<EnsembleMember>> = (next..end)
            .into_par_iter()
            .map(|index| {
                let instance = gen_instance(spec.n, spec.k, rng::mix(spec.seed, index))
                    .expect("parameters validated above");
                if spec.postselect != Postselect::None && !ckk_exists(&instance).0 {
                    return None;
                }
                let report = count_solutions(&instance, cap).expect("cap checked above");
                spec.postselect
                    .accepts(report.num_solutions)
                    .then_some(EnsembleMember { index, instance, report })
            })
            .collect();
        for m in candidates.into_iter().flatten() {
            if members.len() == spec.count {
                break;
            }
            members.push(m);
        }
        next = end;
    }
    let attempts = match members.last() {
        Some(m) if members.len() == spec.count => m.index + 1,
        _ => next,
    };
    Ok(Ensemble { complete: members.len() == spec.count, members, attempts })
}

/// Real-weight ensemble; no postselection is needed for the optimization
/// variant.
pub fn generate_real_ensemble(n: usize, count: usize, seed: u64) -> Result<Vec<RealInstance>> {
    (0..count as u64).map(|i| gen_real_instance(n, rng::mix(seed, i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(k: u32, w: &[u64]) -> ProblemInstance {
        ProblemInstance::new(k, w.to_vec()).unwrap()
    }

    #[test]
    fn single_weight_never_balances() {
        for seed in 0..20 {
            let i = gen_instance(1, 4, seed).unwrap();
            assert_eq!(count_solutions(&i, 20).unwrap().num_solutions, 0);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(gen_instance(3, 8, 42).unwrap(), gen_instance(3, 8, 42).unwrap());
        assert_ne!(gen_instance(3, 8, 42).unwrap().weights, gen_instance(3, 8, 43).unwrap().weights);
        let r = gen_real_instance(2, 5).unwrap();
        assert_eq!(r, gen_real_instance(2, 5).unwrap());
        assert!(r.weights.iter().all(|&w| w > 0.0 && w <= 1.0));
    }

    #[test]
    fn weights_stay_in_range() {
        for seed in 0..50 {
            let i = gen_instance(16, 2, seed).unwrap();
            assert!(i.weights.iter().all(|&a| (1..=4).contains(&a)));
        }
        // Both ends of the range show up for k = 1.
        let all: Vec<u64> = (0..20).flat_map(|s| gen_instance(8, 1, s).unwrap().weights).collect();
        assert!(all.contains(&1) && all.contains(&2));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(gen_instance(0, 4, 1), Err(Error::Parameter(_))));
        assert!(matches!(gen_instance(4, 0, 1), Err(Error::Parameter(_))));
        assert!(ProblemInstance::new(3, vec![0, 1]).is_err());
        assert!(ProblemInstance::new(3, vec![9]).is_err());
        assert!(ProblemInstance::new(3, vec![8]).is_ok());
    }

    #[test]
    fn small_counts() {
        let r = count_solutions(&inst(4, &[5, 5]), 20).unwrap();
        assert_eq!(r.num_solutions, 2);
        assert_eq!(r.solutions, vec![0b01, 0b10]);
        let r = count_solutions(&inst(4, &[3, 3, 3, 3]), 20).unwrap();
        assert_eq!(r.num_solutions, 6);
        let r = count_solutions(&inst(4, &[8, 1, 1]), 20).unwrap();
        assert_eq!(r.num_solutions, 0);
        assert_eq!(r.min_abs_imbalance, 6);
        assert_eq!(r.argmin_set, vec![0b001, 0b110]);
    }

    #[test]
    fn over_cap_is_a_capability_error() {
        let i = gen_instance(21, 8, 0).unwrap();
        assert!(matches!(count_solutions(&i, 20), Err(Error::Capability { n: 21, cap: 20 })));
    }

    #[test]
    fn ckk_small_cases() {
        assert_eq!(ckk_exists(&inst(4, &[5, 5])), (true, 0));
        assert_eq!(ckk_exists(&inst(4, &[8, 1, 1])), (false, 6));
        assert_eq!(ckk_exists(&inst(4, &[7])), (false, 7));
        assert_eq!(ckk_exists(&inst(4, &[4, 5, 6, 7, 8])), (true, 0));
        assert_eq!(ckk_exists(&inst(4, &[3, 3, 3])), (false, 3));
    }

    #[test]
    fn postselect_parsing() {
        assert_eq!("none".parse::<Postselect>().unwrap(), Postselect::None);
        assert_eq!("any".parse::<Postselect>().unwrap(), Postselect::HasSolution);
        assert_eq!("count=4".parse::<Postselect>().unwrap(), Postselect::SolutionCount(4));
        assert!("count=x".parse::<Postselect>().is_err());
        for p in [Postselect::None, Postselect::HasSolution, Postselect::SolutionCount(2)] {
            assert_eq!(p.to_string().parse::<Postselect>().unwrap(), p);
        }
    }

    #[test]
    fn ensemble_postselection_and_budget() {
        let spec = EnsembleSpec::new(8, 8, 30, 11, Postselect::HasSolution);
        let e = generate_ensemble(&spec, 20).unwrap();
        assert!(e.complete);
        assert_eq!(e.members.len(), 30);
        assert!(e.members.iter().all(|m| m.report.num_solutions > 0));
        assert!(e.members.windows(2).all(|w| w[0].index < w[1].index));
        for m in &e.members {
            assert_eq!(m.instance, gen_instance(8, 8, rng::mix(11, m.index)).unwrap());
        }

        let spec = EnsembleSpec::new(1, 4, 5, 3, Postselect::HasSolution);
        let e = generate_ensemble(&spec, 20).unwrap();
        assert!(!e.complete);
        assert!(e.members.is_empty());
        assert_eq!(e.attempts, 500);
    }

    #[test]
    fn subset_sum_target_encoding() {
        let i = inst(4, &[3, 5, 7]);
        // Subset {3, 7} sums to 10: spins 0 and 2 set, D = -3 + 5 - 7 = -5.
        assert_eq!(i.subset_sum_target(10), -5);
    }
}
