use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::oracle::{phase_factor, PhaseOracle};
use super::state::StateVector;
use crate::error::{Error, Result};

/// In-place fast Walsh–Hadamard transform `H^{⊗n}`, normalized so that it is
/// its own inverse.
pub fn walsh_hadamard(state: &mut StateVector) {
    let n = state.n();
    let amps = state.amplitudes_mut();
    let mut half = 1;
    while half < amps.len() {
        for block in amps.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half <<= 1;
    }
    let scale = (-(n as f64) / 2.0).exp2();
    amps.iter_mut().for_each(|a| *a *= scale);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionKind {
    Ideal,
    Generalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    pub kind: DiffusionKind,
    /// Step width of the controlled phase inside a generalized diffusion.
    pub gamma_d: f64,
    /// Decay per application of the generalized controlled phase.
    pub r_d: f64,
}

impl Default for DiffusionSpec {
    fn default() -> Self {
        DiffusionSpec { kind: DiffusionKind::Ideal, gamma_d: 0.5, r_d: 0.0 }
    }
}

impl DiffusionSpec {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn generalized(gamma_d: f64, r_d: f64) -> Self {
        DiffusionSpec { kind: DiffusionKind::Generalized, gamma_d, r_d }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == DiffusionKind::Generalized {
            if !(self.gamma_d > 0.0 && self.gamma_d < 1.0) {
                return Err(Error::Parameter(format!("diffusion step width must lie in (0, 1), got {}", self.gamma_d)));
            }
            if !(self.r_d >= 0.0) || !self.r_d.is_finite() {
                return Err(Error::Parameter(format!("diffusion decay must be non-negative, got {}", self.r_d)));
            }
        }
        Ok(())
    }
}

/// A diffusion operator ready to be applied to `n`-qubit registers.
///
/// The generalized kind is `H R_γ H`, where `R_γ` is the generalized oracle
/// for unit weights and target weight zero: a state with `p` spins set sees
/// `μ = −2p/γ_d`. It approaches `−V` as `γ_d → 0`.
#[derive(Debug, Clone)]
pub struct Diffusion {
    n: usize,
    spec: DiffusionSpec,
    /// `χ` indexed by popcount (generalized kind only).
    by_weight: Vec<Complex64>,
}

impl Diffusion {
    pub fn new(n: usize, spec: DiffusionSpec) -> Result<Self> {
        spec.validate()?;
        let by_weight = match spec.kind {
            DiffusionKind::Ideal => Vec::new(),
            DiffusionKind::Generalized => {
                (0..=n).map(|p| phase_factor(-2.0 * p as f64 / spec.gamma_d, spec.r_d)).collect()
            }
        };
        Ok(Diffusion { n, spec, by_weight })
    }

    pub fn spec(&self) -> &DiffusionSpec {
        &self.spec
    }

    /// Oracle queries charged per application.
    pub fn queries(&self) -> u64 {
        match self.spec.kind {
            DiffusionKind::Ideal => 0,
            DiffusionKind::Generalized => 1,
        }
    }

    /// The controlled phase `R_γ` as an explicit diagonal.
    pub fn controlled_phase(&self) -> Option<PhaseOracle> {
        if self.spec.kind == DiffusionKind::Ideal {
            return None;
        }
        let phases = (0..1usize << self.n).map(|x| self.by_weight[x.count_ones() as usize]).collect();
        PhaseOracle::from_phases(self.n, phases).ok()
    }

    /// Applies the operator, or its adjoint.
    pub fn apply(&self, state: &mut StateVector, adjoint: bool) -> Result<()> {
        if state.n() != self.n {
            return Err(Error::SizeMismatch { state: state.n(), table: self.n });
        }
        match self.spec.kind {
            DiffusionKind::Ideal => invert_about_mean(state),
            DiffusionKind::Generalized => {
                walsh_hadamard(state);
                for (x, a) in state.amplitudes_mut().iter_mut().enumerate() {
                    let chi = self.by_weight[x.count_ones() as usize];
                    *a *= if adjoint { chi.conj() } else { chi };
                }
                walsh_hadamard(state);
            }
        }
        Ok(())
    }
}

/// `c ↦ 2c̄ − c`, i.e. `2|ψ₀⟩⟨ψ₀| − 1`.
pub fn invert_about_mean(state: &mut StateVector) {
    let amps = state.amplitudes_mut();
    let twice_mean = amps.iter().sum::<Complex64>() * (2.0 / amps.len() as f64);
    amps.iter_mut().for_each(|a| *a = twice_mean - *a);
}

pub fn apply_diffusion(state: &mut StateVector, spec: &DiffusionSpec) -> Result<()> {
    Diffusion::new(state.n(), *spec)?.apply(state, false)
}

/// Echoed Grover pair `V U† V U`.
pub fn grover_pair(state: &mut StateVector, oracle: &PhaseOracle, diffusion: &Diffusion) -> Result<()> {
    oracle.apply(state, false)?;
    diffusion.apply(state, false)?;
    oracle.apply(state, true)?;
    diffusion.apply(state, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::state::init_uniform;
    use rand::Rng;

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = crate::rng::stream(seed);
        let amps: Vec<Complex64> =
            (0..1 << n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        StateVector::from_amplitudes(n, amps.into_iter().map(|a| a / norm).collect()).unwrap()
    }

    fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
        a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn hadamard_of_zero_is_uniform() {
        let mut s = StateVector::basis(6, 0).unwrap();
        walsh_hadamard(&mut s);
        assert!(max_diff(&s, &init_uniform(6).unwrap()) < 1e-15);
    }

    #[test]
    fn hadamard_is_self_inverse() {
        let s0 = random_state(9, 4);
        let mut s = s0.clone();
        walsh_hadamard(&mut s);
        walsh_hadamard(&mut s);
        assert!(max_diff(&s, &s0) < 1e-12);
    }

    #[test]
    fn hadamard_matches_matrix_product_on_two_qubits() {
        // H⊗H with entries (−1)^{popcount(x & y)} / 2, applied to |01⟩ (index 1).
        let mut s = StateVector::basis(2, 1).unwrap();
        walsh_hadamard(&mut s);
        let expected: Vec<f64> =
            (0..4usize).map(|x| if (x & 1).count_ones() % 2 == 0 { 0.5 } else { -0.5 }).collect();
        assert_eq!(expected, vec![0.5, -0.5, 0.5, -0.5]);
        for (a, e) in s.amplitudes().iter().zip(&expected) {
            assert!((a.re - e).abs() < 1e-15 && a.im.abs() < 1e-15);
        }
    }

    #[test]
    fn ideal_diffusion_properties() {
        let u = init_uniform(7).unwrap();
        let mut s = u.clone();
        apply_diffusion(&mut s, &DiffusionSpec::ideal()).unwrap();
        assert!(max_diff(&s, &u) < 1e-15);

        let s0 = random_state(7, 12);
        let mut s = s0.clone();
        apply_diffusion(&mut s, &DiffusionSpec::ideal()).unwrap();
        apply_diffusion(&mut s, &DiffusionSpec::ideal()).unwrap();
        assert!(max_diff(&s, &s0) < 1e-12);
    }

    #[test]
    fn ideal_diffusion_equals_hadamard_sandwich() {
        let s0 = random_state(6, 3);
        let mut direct = s0.clone();
        invert_about_mean(&mut direct);
        let mut sandwich = s0.clone();
        walsh_hadamard(&mut sandwich);
        for (x, a) in sandwich.amplitudes_mut().iter_mut().enumerate() {
            if x != 0 {
                *a = -*a;
            }
        }
        walsh_hadamard(&mut sandwich);
        assert!(max_diff(&direct, &sandwich) < 1e-13);
    }

    #[test]
    fn narrow_generalized_diffusion_matches_ideal_up_to_global_phase() {
        let s0 = random_state(8, 8);
        let mut ideal = s0.clone();
        apply_diffusion(&mut ideal, &DiffusionSpec::ideal()).unwrap();
        let mut general = s0.clone();
        apply_diffusion(&mut general, &DiffusionSpec::generalized(1e-5, 0.0)).unwrap();
        // |⟨ideal|general⟩| = 1 up to the step error.
        let overlap = ideal.inner(&general).norm();
        assert!((overlap - 1.0).abs() < 1e-3, "overlap {overlap}");
        assert!((general.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generalized_diffusion_adjoint_inverts_it() {
        let d = Diffusion::new(6, DiffusionSpec::generalized(0.5, 0.0)).unwrap();
        let s0 = random_state(6, 1);
        let mut s = s0.clone();
        d.apply(&mut s, false).unwrap();
        d.apply(&mut s, true).unwrap();
        assert!(max_diff(&s, &s0) < 1e-12);
        assert!(Diffusion::new(6, DiffusionSpec::generalized(1.0, 0.0)).is_err());
    }

    #[test]
    fn grover_pair_preserves_norm() {
        let oracle = PhaseOracle::from_phases(
            5,
            (0..32).map(|x| phase_factor((x as f64 - 15.5) / 3.0, 0.0)).collect(),
        )
        .unwrap();
        let d = Diffusion::new(5, DiffusionSpec::ideal()).unwrap();
        let mut s = init_uniform(5).unwrap();
        for _ in 0..100 {
            grover_pair(&mut s, &oracle, &d).unwrap();
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
