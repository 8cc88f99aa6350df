use crate::error::{invalid, Result};
use crate::C64;

/// Dense one- or two-qubit gate, row-major.
///
/// Two-qubit gates act on the ordered pair `(first, second)` and use the
/// basis index `2 * bit_first + bit_second`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    dim: usize,
    entries: Vec<C64>,
    unitary: bool,
}

const UNITARY_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl GateMatrix {
    /// Checks the shape and records whether the matrix is unitary.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(invalid(format!("gate dimension must be 2 or 4, got {dim}")));
        }
        if entries.len() != dim * dim {
            return Err(invalid(format!("a {dim}x{dim} gate needs {} entries", dim * dim)));
        }
        if entries.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(invalid("gate entries must be finite"));
        }
        let unitary = is_unitary(dim, &entries);
        Ok(GateMatrix { dim, entries, unitary })
    }

    fn known(dim: usize, entries: Vec<C64>) -> Self {
        GateMatrix { dim, entries, unitary: true }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn identity(dim: usize) -> Self {
        let mut e = vec![c(0.0, 0.0); dim * dim];
        for k in 0..dim {
            e[k * dim + k] = c(1.0, 0.0);
        }
        Self::known(dim, e)
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::known(2, vec![c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
    }

    pub fn pauli_x() -> Self {
        Self::known(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn pauli_y() -> Self {
        Self::known(2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn pauli_z() -> Self {
        Self::known(2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    /// `exp(-i theta X / 2)`.
    pub fn rx(theta: f64) -> Self {
        Self::known(2, crate::oracle::rx_matrix(theta).to_vec())
    }

    /// `exp(-i theta Y / 2)`.
    pub fn ry(theta: f64) -> Self {
        let (s, co) = (0.5 * theta).sin_cos();
        Self::known(2, vec![c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
    }

    /// `exp(-i theta Z / 2)`.
    pub fn rz(theta: f64) -> Self {
        Self::known(
            2,
            vec![C64::from_polar(1.0, -0.5 * theta), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, 0.5 * theta)],
        )
    }

    /// `exp(-i theta Z Z / 2)`.
    pub fn zz_phase(theta: f64) -> Self {
        let m = C64::from_polar(1.0, -0.5 * theta);
        let p = C64::from_polar(1.0, 0.5 * theta);
        let mut e = vec![c(0.0, 0.0); 16];
        e[0] = m;
        e[5] = p;
        e[10] = p;
        e[15] = m;
        Self::known(4, e)
    }

    pub fn cnot() -> Self {
        let mut e = vec![c(0.0, 0.0); 16];
        e[0] = c(1.0, 0.0);
        e[5] = c(1.0, 0.0);
        e[11] = c(1.0, 0.0);
        e[14] = c(1.0, 0.0);
        Self::known(4, e)
    }

    pub fn cz() -> Self {
        let mut e = Self::identity(4).entries;
        e[15] = c(-1.0, 0.0);
        Self::known(4, e)
    }

    pub fn swap() -> Self {
        let mut e = vec![c(0.0, 0.0); 16];
        e[0] = c(1.0, 0.0);
        e[6] = c(1.0, 0.0);
        e[9] = c(1.0, 0.0);
        e[15] = c(1.0, 0.0);
        Self::known(4, e)
    }

    /// Same operator with the roles of the two qubits exchanged.
    pub fn reversed(&self) -> Self {
        assert_eq!(self.dim, 4);
        let flip = |k: usize| ((k & 1) << 1) | (k >> 1);
        let mut e = vec![c(0.0, 0.0); 16];
        for r in 0..4 {
            for col in 0..4 {
                e[flip(r) * 4 + flip(col)] = self.entries[r * 4 + col];
            }
        }
        GateMatrix { dim: 4, entries: e, unitary: self.unitary }
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &GateMatrix) -> Result<Self> {
        if self.dim != other.dim {
            return Err(invalid("cannot compose gates of different dimension"));
        }
        let d = self.dim;
        let mut e = vec![c(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                e[i * d + j] = (0..d).map(|k| self.entries[i * d + k] * other.entries[k * d + j]).sum();
            }
        }
        GateMatrix::new(d, e)
    }

    /// Kronecker product `self (x) other` of two single-qubit gates.
    pub fn kron(&self, other: &GateMatrix) -> Result<Self> {
        if self.dim != 2 || other.dim != 2 {
            return Err(invalid("kron expects two single-qubit gates"));
        }
        let mut e = vec![c(0.0, 0.0); 16];
        for (a, b) in (0..2).flat_map(|a| (0..2).map(move |b| (a, b))) {
            for (x, y) in (0..2).flat_map(|x| (0..2).map(move |y| (x, y))) {
                e[(2 * a + x) * 4 + (2 * b + y)] = self.entries[a * 2 + b] * other.entries[x * 2 + y];
            }
        }
        GateMatrix::new(4, e)
    }
}

fn is_unitary(dim: usize, e: &[C64]) -> bool {
    for i in 0..dim {
        for j in 0..dim {
            let dot: C64 = (0..dim).map(|k| e[k * dim + i].conj() * e[k * dim + j]).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            if (dot - C64::new(want, 0.0)).norm() > UNITARY_TOL {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_are_unitary() {
        for g in [
            GateMatrix::hadamard(),
            GateMatrix::rx(0.3),
            GateMatrix::ry(1.1),
            GateMatrix::rz(-2.0),
            GateMatrix::zz_phase(0.8),
            GateMatrix::cnot(),
            GateMatrix::cz(),
            GateMatrix::swap(),
        ] {
            assert!(is_unitary(g.dim(), g.entries()));
        }
        let proj = GateMatrix::new(2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(!proj.is_unitary());
        assert!(GateMatrix::new(3, vec![c(1.0, 0.0); 9]).is_err());
    }

    #[test]
    fn reversal_and_kron() {
        assert_eq!(GateMatrix::swap().reversed(), GateMatrix::swap());
        let xi = GateMatrix::pauli_x().kron(&GateMatrix::identity(2)).unwrap();
        let ix = GateMatrix::identity(2).kron(&GateMatrix::pauli_x()).unwrap();
        assert_eq!(xi.reversed().entries(), ix.entries());
        let hh = GateMatrix::hadamard().compose(&GateMatrix::hadamard()).unwrap();
        assert!(hh.entries().iter().zip(GateMatrix::identity(2).entries()).all(|(a, b)| (a - b).norm() < 1e-15));
    }
}
