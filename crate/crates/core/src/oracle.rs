//! Dense state-vector simulation of QAOA circuits.
//!
//! Qubit `v` is bit `v` of the amplitude index. The cost layer is applied as
//! the diagonal phase `exp(-i gamma C(s) / 2)` per basis state and the mixer as
//! `exp(-i beta X / 2)` on every qubit.

use crate::error::{invalid, Error, Result};
use crate::graph::{BitString, Graph};
use crate::qaoa::QaoaAngles;
use crate::C64;

/// Default qubit cap of the dense simulator.
pub const DEFAULT_SV_CAP: usize = 22;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(invalid(format!("length {} is not a power of two", amps.len())));
        }
        let n = amps.len().trailing_zeros() as usize;
        Ok(StateVector { n, amps })
    }

    /// `|+>^N`.
    pub fn plus(n: usize) -> Result<Self> {
        check_cap(n, DEFAULT_SV_CAP)?;
        let a = C64::new((0.5f64).powf(n as f64 / 2.0), 0.0);
        Ok(StateVector { n, amps: vec![a; 1 << n] })
    }

    pub fn basis(s: &BitString) -> Result<Self> {
        check_cap(s.len(), DEFAULT_SV_CAP)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << s.len()];
        amps[s.to_index()] = C64::new(1.0, 0.0);
        Ok(StateVector { n: s.len(), amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, s: &BitString) -> C64 {
        self.amps[s.to_index()]
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Multiplies every amplitude by `exp(-i gamma cost(s) / 2)`.
    pub fn apply_cost_phases(&mut self, costs: &[f64], gamma: f64) {
        for (a, &c) in self.amps.iter_mut().zip(costs) {
            *a *= C64::from_polar(1.0, -0.5 * gamma * c);
        }
    }

    /// Applies a 2x2 matrix (row-major) to qubit `q`.
    pub fn apply_single(&mut self, q: usize, m: &[C64; 4]) {
        let bit = 1usize << q;
        for k in 0..self.amps.len() {
            if k & bit == 0 {
                let (a0, a1) = (self.amps[k], self.amps[k | bit]);
                self.amps[k] = m[0] * a0 + m[1] * a1;
                self.amps[k | bit] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    /// Applies a 4x4 matrix (row-major, index `2*bit_a + bit_b`) to qubits `a`, `b`.
    pub fn apply_two(&mut self, a: usize, b: usize, m: &[C64]) {
        assert_eq!(m.len(), 16);
        let (ba, bb) = (1usize << a, 1usize << b);
        for k in 0..self.amps.len() {
            if k & ba == 0 && k & bb == 0 {
                let idx = [k, k | bb, k | ba, k | ba | bb];
                let v = idx.map(|i| self.amps[i]);
                for (r, &i) in idx.iter().enumerate() {
                    self.amps[i] = (0..4).map(|c| m[r * 4 + c] * v[c]).sum();
                }
            }
        }
    }

    pub fn apply_mixer(&mut self, beta: f64) {
        let m = rx_matrix(beta);
        for q in 0..self.n {
            self.apply_single(q, &m);
        }
    }

    /// `<psi| Z_i Z_j |psi>` on the raw (possibly unnormalized) vector.
    pub fn expectation_zz(&self, i: usize, j: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let sign = if ((k >> i) ^ (k >> j)) & 1 == 0 { 1.0 } else { -1.0 };
                sign * a.norm_sqr()
            })
            .sum()
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::ResourceLimit(format!(
            "dense simulation of {n} qubits exceeds the cap of {cap}"
        )));
    }
    Ok(())
}

/// `exp(-i beta X / 2)`.
pub fn rx_matrix(beta: f64) -> [C64; 4] {
    let (s, c) = (0.5 * beta).sin_cos();
    let d = C64::new(c, 0.0);
    let o = C64::new(0.0, -s);
    [d, o, o, d]
}

pub fn sv_run_qaoa(g: &Graph, angles: &QaoaAngles) -> Result<StateVector> {
    sv_run_qaoa_capped(g, angles, DEFAULT_SV_CAP)
}

pub fn sv_run_qaoa_capped(g: &Graph, angles: &QaoaAngles, cap: usize) -> Result<StateVector> {
    check_cap(g.n_vertices(), cap)?;
    let costs = g.cost_table();
    let mut sv = StateVector::plus(g.n_vertices())?;
    for (&gamma, &beta) in angles.gammas().iter().zip(angles.betas()) {
        sv.apply_cost_phases(&costs, gamma);
        sv.apply_mixer(beta);
    }
    Ok(sv)
}

pub fn sv_cost_expectation(sv: &StateVector, g: &Graph) -> Result<f64> {
    if sv.n_qubits() != g.n_vertices() {
        return Err(invalid(format!(
            "state has {} qubits, graph has {} vertices",
            sv.n_qubits(),
            g.n_vertices()
        )));
    }
    Ok(sv
        .amps
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm_sqr() * g.cost_of_index(k))
        .sum())
}

pub fn sv_pmin(sv: &StateVector, minimizers: &[BitString]) -> Result<f64> {
    let norm = sv.norm_squared();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState(format!("state is not normalized (norm^2 = {norm})")));
    }
    let mut total = 0.0;
    for s in minimizers {
        if s.len() != sv.n_qubits() {
            return Err(invalid("minimizer length does not match the state"));
        }
        total += sv.amplitude(s).norm_sqr();
    }
    Ok(total.clamp(0.0, 1.0))
}
