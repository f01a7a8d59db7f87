//! Symmetric tridiagonal eigenpairs by Sturm bisection and inverse
//! iteration, and pivoted tridiagonal LU for real or complex shifts.

use nalgebra::ComplexField;

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        SymTridiag { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.abs().max(hi.abs())
    }

    /// Number of eigenvalues strictly below x.
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.len();
        if n == 0 {
            return 0;
        }
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + x.abs());
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..n {
            if i > 0 {
                let b = self.off[i - 1];
                q = self.diag[i] - x - b * b / q;
            }
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The k-th smallest eigenvalue (0-based), bracketed in [lo, hi].
    fn kth_eigenvalue(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        let scale = self.norm_bound().max(1e-300);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 4.0 * f64::EPSILON * scale || mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// All eigenvalues in [a, b), ascending.
    pub fn eigenvalues_in(&self, a: f64, b: f64) -> Vec<f64> {
        if b <= a {
            return Vec::new();
        }
        let (glo, ghi) = self.bounds();
        let na = self.count_below(a);
        let nb = self.count_below(b);
        let lo = a.max(glo - 1.0);
        let hi = b.min(ghi + 1.0);
        (na..nb).map(|k| self.kth_eigenvalue(k, lo, hi)).collect()
    }

    /// Eigenvalue closest to x.
    pub fn nearest_eigenvalue(&self, x: f64) -> f64 {
        let n = self.len();
        let (glo, ghi) = self.bounds();
        let (lo, hi) = (glo.min(x) - 1.0, ghi.max(x) + 1.0);
        let k = self.count_below(x);
        let below = (k > 0).then(|| self.kth_eigenvalue(k - 1, lo, hi));
        let above = (k < n).then(|| self.kth_eigenvalue(k, lo, hi));
        match (below, above) {
            (Some(a), Some(b)) => {
                if x - a <= b - x {
                    a
                } else {
                    b
                }
            }
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => f64::NAN,
        }
    }

    pub fn max_eigenvalue(&self) -> f64 {
        let (lo, hi) = self.bounds();
        let n = self.len();
        self.kth_eigenvalue(n - 1, lo - 1e-9 * (1.0 + lo.abs()), hi + 1e-9 * (1.0 + hi.abs()))
    }

    pub fn all_eigenvalues(&self) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        let pad = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        self.eigenvalues_in(lo - pad, hi + pad)
    }

    /// Normalized eigenvectors for the given (accurate) eigenvalues by inverse
    /// iteration, reorthogonalized within clusters.
    pub fn eigenvectors(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let n = self.len();
        let scale = self.norm_bound().max(1e-300);
        let cluster = 1e-3 * scale;
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
        for (idx, &lam) in values.iter().enumerate() {
            let shift = lam + 4.0 * f64::EPSILON * scale * (1.0 + idx as f64 % 3.0);
            let dl = self.off.clone();
            let du = self.off.clone();
            let d: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
            let lu = TridiagLu::factor(dl, d, du);
            let mut v: Vec<f64> = (0..n)
                .map(|j| {
                    let t = (j as f64 + 1.0) * (0.618_033_988_749_894_9 + idx as f64 * 0.137);
                    0.5 + (t.fract() - 0.5)
                })
                .collect();
            for _ in 0..4 {
                lu.solve_in_place(&mut v);
                for (j, prev) in out.iter().enumerate() {
                    if (values[j] - lam).abs() < cluster {
                        let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                        for (vi, pi) in v.iter_mut().zip(prev) {
                            *vi -= dot * pi;
                        }
                    }
                }
                let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nrm == 0.0 || !nrm.is_finite() {
                    break;
                }
                v.iter_mut().for_each(|x| *x /= nrm);
            }
            out.push(v);
        }
        out
    }
}

/// LU factorization with partial pivoting of a general tridiagonal matrix
/// (sub-diagonal `dl`, diagonal `d`, super-diagonal `du`).
#[derive(Debug, Clone)]
pub struct TridiagLu<T: ComplexField<RealField = f64> + Copy> {
    dl: Vec<T>,
    d: Vec<T>,
    du: Vec<T>,
    du2: Vec<T>,
    piv: Vec<bool>,
}

impl<T: ComplexField<RealField = f64> + Copy> TridiagLu<T> {
    pub fn factor(mut dl: Vec<T>, mut d: Vec<T>, mut du: Vec<T>) -> Self {
        let n = d.len();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut piv = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].modulus() >= dl[i].modulus() {
                if d[i].modulus() != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                piv[i] = true;
            }
        }
        let tiny = T::from_real(f64::MIN_POSITIVE.sqrt());
        for v in d.iter_mut() {
            if v.modulus() == 0.0 {
                *v = tiny;
            }
        }
        TridiagLu { dl, d, du, du2, piv }
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if !self.piv[i] {
                let t = self.dl[i] * b[i];
                b[i + 1] -= t;
            } else {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            }
        }
        if n == 0 {
            return;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}
