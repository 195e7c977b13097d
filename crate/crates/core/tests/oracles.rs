//! Library results against independent reimplementations.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use npgrover_core::analytics::{chibar, trials_needed};
use npgrover_core::experiments::{evaluate_standard, RunSettings};
use npgrover_core::instances::{
    count_solutions, gen_instance, generate_ensemble, EnsembleSpec, Postselect, ProblemInstance,
};
use npgrover_core::quantum::{build_imbalance_table, Coupling, OracleSpec, PhaseOracle};
use npgrover_core::runner::{optimal_iterations, run_standard, run_with_oracle, RecursiveConfig, RecursiveProgram, RunConfig};

fn imbalances(inst: &ProblemInstance) -> Vec<i64> {
    (0..1usize << inst.n)
        .map(|x| {
            (0..inst.n).map(|i| if x >> i & 1 == 0 { inst.weights[i] as i64 } else { -(inst.weights[i] as i64) }).sum()
        })
        .collect()
}

fn chi(mu: f64, r: f64) -> Complex64 {
    -Complex64::new(1.0 - r, mu) / Complex64::new(1.0 + r, -mu)
}

#[test]
fn chibar_matches_quadrature() {
    for sigma in [0.5f64, 2.0, 10.0] {
        for r in [0.0f64, 0.1] {
            // Composite Simpson over ±12σ of the Gaussian-weighted Re χ.
            let h = sigma.min(1.0) / 400.0;
            let steps = (24.0 * sigma / h).ceil() as usize & !1;
            let f = |mu: f64| {
                (-mu * mu / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
                    * chi(mu, r).re
            };
            let a = -12.0 * sigma;
            let h = 24.0 * sigma / steps as f64;
            let mut sum = f(a) + f(-a);
            for i in 1..steps {
                sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let quad = sum * h / 3.0;
            assert!((chibar(sigma, r) - quad).abs() < 1e-8, "sigma {sigma}, r {r}: {} vs {quad}", chibar(sigma, r));
        }
    }
}

#[test]
fn solution_counts_match_naive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let n = rng.gen_range(2..=12);
        let k = rng.gen_range(1..=2 * n as u32);
        let inst = gen_instance(n, k, rng.gen()).unwrap();
        let d = imbalances(&inst);
        let min = d.iter().map(|v| v.unsigned_abs()).min().unwrap();
        let argmin: Vec<usize> = (0..d.len()).filter(|&x| d[x].unsigned_abs() == min).collect();
        let zeros: Vec<usize> = (0..d.len()).filter(|&x| d[x] == 0).collect();
        let report = count_solutions(&inst, 20).unwrap();
        assert_eq!(report.min_abs_imbalance, min);
        assert_eq!(report.argmin_set, argmin);
        assert_eq!(report.solutions, zeros);
        assert_eq!(report.num_solutions, zeros.len());
    }
}

/// Layered search written with explicit reflections `2|φ⟩⟨φ| − 1` about the
/// state reached at the end of the previous layer. Returns, per layer, the
/// probability of that layer's candidate set after every cycle.
fn reflect_recursion(inst: &ProblemInstance, m: u32, gamma: f64, schedule: &[usize], echo: bool) -> Vec<Vec<f64>> {
    let d = imbalances(inst);
    let dim = d.len();
    let layers = schedule.len() as u32;
    let mut state = vec![Complex64::new((dim as f64).sqrt().recip(), 0.0); dim];
    let mut out = Vec::new();
    for l in 1..=layers {
        let (phases, marked): (Vec<Complex64>, Vec<bool>) = d
            .iter()
            .map(|&d| {
                if l == layers {
                    (chi(d as f64 / ((layers * m) as f64).exp2() / gamma, 0.0), d == 0)
                } else {
                    let modulus = 1i64 << (l * m + 1);
                    let off = (d + modulus / 2).rem_euclid(modulus) - modulus / 2;
                    (chi(off as f64 / ((l * m) as f64).exp2() / gamma, 0.0), off == 0)
                }
            })
            .unzip();
        let prob = |s: &[Complex64]| s.iter().zip(&marked).filter(|(_, &m)| m).map(|(c, _)| c.norm_sqr()).sum::<f64>();
        let phi = state.clone();
        let mut probs = vec![prob(&state)];
        for j in 0..schedule[l as usize - 1] {
            for (c, p) in state.iter_mut().zip(&phases) {
                *c *= if echo && j % 2 == 1 { p.conj() } else { *p };
            }
            let overlap: Complex64 = phi.iter().zip(&state).map(|(a, b)| a.conj() * b).sum();
            for (c, p) in state.iter_mut().zip(&phi) {
                *c = 2.0 * overlap * p - *c;
            }
            probs.push(prob(&state));
        }
        out.push(probs);
    }
    out
}

#[test]
fn recursion_matches_reflection_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let cases: [(usize, u32, u32); 4] = [(6, 6, 3), (8, 8, 4), (7, 8, 3), (8, 12, 4)];
    for (n, k, m) in cases {
        for echo in [true, false] {
            let inst = gen_instance(n, k, rng.gen()).unwrap();
            let layers = k.div_ceil(m) as usize;
            let schedule: Vec<usize> = (0..layers).map(|_| rng.gen_range(1..=5)).collect();
            let gamma = (-(rng.gen_range(1.0..(m as f64 + 2.0)))).exp2();
            let mut cfg = RecursiveConfig::new(m, schedule.clone()).with_gamma(gamma);
            cfg.echo = echo;
            let run = RecursiveProgram::new(&inst, &cfg).unwrap().run().unwrap();
            let expected = reflect_recursion(&inst, m, gamma, &schedule, echo);
            for (layer, want) in run.layers.iter().zip(&expected) {
                assert_eq!(layer.probs.len(), want.len());
                for (a, b) in layer.probs.iter().zip(want) {
                    assert!((a - b).abs() < 1e-10, "n {n} k {k} m {m} {schedule:?}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn speedups_and_quantiles_recompute_from_traces() {
    let spec = EnsembleSpec::new(8, 8, 60, 23, Postselect::HasSolution);
    let instances: Vec<ProblemInstance> =
        generate_ensemble(&spec, 20).unwrap().members.into_iter().map(|m| m.instance).collect();
    let eval = evaluate_standard(&instances, (-8f64).exp2(), None, &RunSettings::default()).unwrap();
    let eps = 0.01;

    // T_opt: brute-force argmin of the median of T·M.
    let t_max = eval.traces[0].probs.len() - 1;
    let mut best = (0, f64::INFINITY);
    for t in 1..=t_max {
        let mut totals: Vec<f64> = eval.traces.iter().map(|tr| t as f64 * trials_needed(tr.probs[t], eps)).collect();
        totals.sort_by(f64::total_cmp);
        let mid = totals.len() / 2;
        let median = if totals.len() % 2 == 1 { totals[mid] } else { 0.5 * (totals[mid - 1] + totals[mid]) };
        if median < best.1 {
            best = (t, median);
        }
    }
    assert_eq!(eval.outcome.t_opt, best.0);

    let mut q: Vec<f64> = eval
        .traces
        .iter()
        .map(|tr| {
            let p = tr.probs[best.0];
            let classical = 1.0 / -(1.0 - tr.num_solutions as f64 / tr.dim as f64).ln();
            classical * -(1.0 - p).ln() / best.0 as f64
        })
        .collect();
    for (a, b) in q.iter().zip(&eval.outcome.q) {
        assert!((a - b).abs() <= 1e-9 * b.abs(), "{a} vs {b}");
    }
    q.sort_by(f64::total_cmp);
    let median = 0.5 * (q[29] + q[30]);
    assert!((median - eval.outcome.q_median).abs() <= 1e-9 * median);

    // ε does not move T_opt.
    for e in [1e-6, 0.2, 0.9] {
        assert_eq!(optimal_iterations(&eval.traces, e).unwrap().t_opt, eval.outcome.t_opt);
    }
}

/// Decay contracts every amplitude, so the surviving norm falls with `r` at
/// every `T`. It also shifts the phases, so near the nodes of the oscillation
/// `P_T` can rise slightly; up to the first peak and at the peak it cannot.
#[test]
fn decay_never_raises_norm_or_peak_probability() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..30 {
        let n = rng.gen_range(4..=9);
        let inst = gen_instance(n, n as u32, rng.gen()).unwrap();
        if count_solutions(&inst, 20).unwrap().num_solutions == 0 {
            continue;
        }
        let gamma = (-(rng.gen_range(1.0..n as f64 + 1.0))).exp2();
        let runs: Vec<_> = [0.0, 0.01, 0.1]
            .iter()
            .map(|&r| run_standard(&inst, &RunConfig::new(gamma, 40).with_decay(r)).unwrap())
            .collect();
        let peak = |p: &[f64]| p.iter().copied().fold(0.0, f64::max);
        let first_peak = (1..=40).find(|&t| t == 40 || runs[0].probs[t + 1] < runs[0].probs[t]).unwrap();
        for pair in runs.windows(2) {
            for t in 0..=40 {
                assert!(pair[1].norms[t] <= pair[0].norms[t] + 1e-12);
            }
            for t in 0..=first_peak {
                assert!(pair[1].probs[t] <= pair[0].probs[t] + 1e-12, "n {n} T = {t}");
            }
            assert!(peak(&pair[1].probs) <= peak(&pair[0].probs) + 1e-12);
        }
        assert!(runs[0].norms.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(runs[2].norms.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn echo_compensates_a_constant_phase_error() {
    // One marked state at phase π, every other state at ε instead of 0.
    let n = 10;
    for eps in [0.05, 0.1, 0.25] {
        let mut phases = vec![Complex64::from_polar(1.0, eps); 1 << n];
        phases[123] = Complex64::new(-1.0, 0.0);
        let oracle = PhaseOracle::from_phases(n, phases).unwrap();
        let best = |echo: bool| {
            let config = RunConfig::new(1.0, 60).with_echo(echo);
            run_with_oracle(&oracle, &[123], &config, 0).unwrap().probs.into_iter().fold(0.0, f64::max)
        };
        let (with, without) = (best(true), best(false));
        assert!(with >= without, "eps {eps}: echo {with} vs naive {without}");
        if eps == 0.25 {
            assert!(with > 0.9 && without < 0.5, "eps 0.25: echo {with}, naive {without}");
        }
    }
}

#[test]
fn modular_oracle_agrees_with_plain_oracle_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..20 {
        let n = rng.gen_range(3..=10);
        let k = rng.gen_range(2..=10u32);
        let inst = gen_instance(n, k, rng.gen()).unwrap();
        let table = build_imbalance_table(&inst, Coupling::Full).unwrap();
        let spec = OracleSpec::new(0.01).with_decay(0.02);
        let plain = PhaseOracle::generalized(&table, &spec).unwrap();
        let modular = PhaseOracle::generalized(&table, &spec.with_modulus(1 << (k + 1))).unwrap();
        for (x, &d) in table.values().iter().enumerate() {
            if d.unsigned_abs() < 1 << k {
                assert!((plain.phases()[x] - modular.phases()[x]).norm() < 1e-15);
            }
        }
    }
}
