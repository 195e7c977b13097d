use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::instances::DEFAULT_ENUMERATION_CAP;

/// Amplitudes of an `n`-qubit register. Bit `i` of an index is the state of
/// spin `i` (clear ⇒ `σᶻ = +1`).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(Error::Parameter(format!("{} amplitudes do not form a {n}-qubit register", amps.len())));
        }
        Ok(StateVector { n, amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        *amps.get_mut(index).ok_or_else(|| Error::Parameter(format!("basis index {index} out of range")))? =
            Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Debug dump: little-endian `u32` qubit count followed by interleaved
    /// `f64` real/imaginary pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n as u32).to_le_bytes())?;
        for c in &self.amps {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let n = u32::from_le_bytes(word) as usize;
        check_qubits(n)?;
        let mut buf = [0u8; 8];
        let mut amps = Vec::with_capacity(1 << n);
        for _ in 0..1usize << n {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf);
            r.read_exact(&mut buf)?;
            amps.push(Complex64::new(re, f64::from_le_bytes(buf)));
        }
        Ok(StateVector { n, amps })
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Parameter("a register needs at least one qubit".into()));
    }
    if n > DEFAULT_ENUMERATION_CAP + 6 {
        return Err(Error::Capability { n, cap: DEFAULT_ENUMERATION_CAP + 6 });
    }
    Ok(())
}

/// Equal superposition `2^(-n/2) Σ|x⟩`.
pub fn init_uniform(n: usize) -> Result<StateVector> {
    init_uniform_capped(n, DEFAULT_ENUMERATION_CAP)
}

pub fn init_uniform_capped(n: usize, cap: usize) -> Result<StateVector> {
    check_qubits(n)?;
    if n > cap {
        return Err(Error::Capability { n, cap });
    }
    let a = (-(n as f64) / 2.0).exp2();
    Ok(StateVector { n, amps: vec![Complex64::new(a, 0.0); 1 << n] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_single_qubit() {
        let s = init_uniform(1).unwrap();
        for c in s.amplitudes() {
            assert_eq!(c.re, std::f64::consts::FRAC_1_SQRT_2);
            assert_eq!(c.im, 0.0);
        }
    }

    #[test]
    fn uniform_is_normalized() {
        let s = init_uniform(10).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
        assert!((s.probability(417) - 1.0 / 1024.0).abs() < 1e-16);
    }

    #[test]
    fn uniform_rejects_bad_sizes() {
        assert!(init_uniform(0).is_err());
        assert!(matches!(init_uniform(21), Err(Error::Capability { .. })));
        assert!(init_uniform_capped(21, 22).is_ok());
    }

    #[test]
    fn binary_dump_round_trip() {
        let mut s = init_uniform(3).unwrap();
        s.amplitudes_mut()[5] = Complex64::new(-0.25, 0.125);
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 8 * 16);
        assert_eq!(&buf[..4], &[3, 0, 0, 0]);
        assert_eq!(StateVector::read_binary(&buf[..]).unwrap(), s);
    }
}
