//! Fourier multipliers on periodic grids.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::C64;

/// Angular frequencies ξ_j of an n-point periodic grid of spacing h, in FFT order.
pub fn frequencies(n: usize, h: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / (n as f64 * h);
    (0..n)
        .map(|j| {
            let jj = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            base * jj
        })
        .collect()
}

/// Operator ψ(P) on a periodic grid, P = −i d/dx.
#[derive(Clone)]
pub struct FourierMultiplier {
    symbol: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FourierMultiplier {
    pub fn new(n: usize, h: f64, symbol: impl Fn(f64) -> f64) -> Self {
        let mut planner = FftPlanner::new();
        let xi = frequencies(n, h);
        let mut sym: Vec<f64> = xi.iter().map(|&x| symbol(x)).collect();
        if n % 2 == 0 {
            // Nyquist mode: average of ±π/h keeps real data real.
            let x = xi[n / 2].abs();
            sym[n / 2] = 0.5 * (symbol(x) + symbol(-x));
        }
        FourierMultiplier {
            symbol: sym,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.symbol.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbol.is_empty()
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn apply_complex(&self, v: &[C64]) -> Vec<C64> {
        let n = self.len();
        let mut buf = v.to_vec();
        self.fwd.process(&mut buf);
        let scale = 1.0 / n as f64;
        for (b, s) in buf.iter_mut().zip(&self.symbol) {
            *b *= s * scale;
        }
        self.inv.process(&mut buf);
        buf
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let c: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.apply_complex(&c).into_iter().map(|z| z.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_derivative_of_plane_wave() {
        let n = 128;
        let l = 10.0;
        let h = 2.0 * l / n as f64;
        let k = 2.0 * std::f64::consts::PI * 3.0 / (2.0 * l);
        let v: Vec<f64> = (0..n).map(|j| (k * (-l + j as f64 * h)).cos()).collect();
        let m = FourierMultiplier::new(n, h, |x| x * x);
        let out = m.apply(&v);
        for (a, b) in out.iter().zip(&v) {
            assert!((a - k * k * b).abs() < 1e-10);
        }
    }

    #[test]
    fn frequencies_layout() {
        let f = frequencies(8, 1.0);
        let b = 2.0 * std::f64::consts::PI / 8.0;
        assert_eq!(f[1], b);
        assert_eq!(f[7], -b);
        assert_eq!(f[4], 4.0 * b);
    }
}
