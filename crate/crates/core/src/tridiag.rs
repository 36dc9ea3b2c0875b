//! Sturm-sequence bisection for symmetric tridiagonal matrices.

/// Symmetric tridiagonal matrix stored as its diagonal and the squares of
/// its off-diagonal (the Sturm recurrence only needs `e_i^2`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off_sq: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: &[f64]) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal must have n - 1 entries");
        Self {
            diag,
            off_sq: off.iter().map(|e| e * e).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `lambda` (negative LDLᵀ pivots).
    pub fn count_below(&self, lambda: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diag.iter().enumerate() {
            q = if i == 0 {
                d - lambda
            } else {
                let prev = if q == 0.0 {
                    f64::EPSILON * self.off_sq[i - 1].sqrt().max(1.0)
                } else {
                    q
                };
                d - lambda - self.off_sq[i - 1] / prev
            };
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off_sq[i - 1].sqrt() } else { 0.0 };
            let right = if i + 1 < n { self.off_sq[i].sqrt() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// The `index`-th smallest eigenvalue (0-based) by bisection on the
    /// Sturm count, to relative width `rel_tol`.
    pub fn eigenvalue(&self, index: usize, rel_tol: f64) -> f64 {
        assert!(index < self.len(), "eigenvalue index out of range");
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        lo -= pad;
        hi += pad;
        loop {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) || mid <= lo || mid >= hi {
                return mid;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
}
