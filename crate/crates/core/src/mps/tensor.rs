use crate::C64;

/// Rank-3 tensor `A[l, s, r]` with physical dimension 2.
///
/// Entries are stored at `(l * 2 + s) * right + r`, so the same buffer is the
/// row-major `(2 left) x right` "left matrix" and the `left x (2 right)`
/// "right matrix".
#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    pub(crate) left: usize,
    pub(crate) right: usize,
    pub(crate) data: Vec<C64>,
}

impl SiteTensor {
    pub fn new(left: usize, right: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), left * 2 * right, "tensor buffer has the wrong length");
        SiteTensor { left, right, data }
    }

    pub fn zeros(left: usize, right: usize) -> Self {
        SiteTensor { left, right, data: vec![C64::new(0.0, 0.0); left * 2 * right] }
    }

    /// Bond-dimension-1 tensor holding a single-qubit state.
    pub fn product(a0: C64, a1: C64) -> Self {
        SiteTensor { left: 1, right: 1, data: vec![a0, a1] }
    }

    pub fn left_dim(&self) -> usize {
        self.left
    }

    pub fn right_dim(&self) -> usize {
        self.right
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn idx(&self, l: usize, s: usize, r: usize) -> usize {
        (l * 2 + s) * self.right + r
    }

    #[inline]
    pub fn get(&self, l: usize, s: usize, r: usize) -> C64 {
        self.data[self.idx(l, s, r)]
    }

    /// Contiguous `right`-length row `A[l, s, :]`.
    #[inline]
    pub fn row(&self, l: usize, s: usize) -> &[C64] {
        let start = (l * 2 + s) * self.right;
        &self.data[start..start + self.right]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn scale(&mut self, f: C64) {
        for x in &mut self.data {
            *x *= f;
        }
    }

    /// Applies a 2x2 matrix (row-major) to the physical index.
    pub fn apply_physical(&mut self, m: &[C64]) {
        let r = self.right;
        for l in 0..self.left {
            let base = l * 2 * r;
            for k in 0..r {
                let a0 = self.data[base + k];
                let a1 = self.data[base + r + k];
                self.data[base + k] = m[0] * a0 + m[1] * a1;
                self.data[base + r + k] = m[2] * a0 + m[3] * a1;
            }
        }
    }
}
