//! Lanczos estimate of the largest eigenvalue of a Hermitian operator given
//! only its action. No basis is stored, so memory stays O(n).

use super::tridiag::SymTridiag;
use super::C64;

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Deterministic start vector without parity symmetry.
pub fn start_vector(n: usize) -> Vec<C64> {
    (0..n)
        .map(|j| {
            let t = ((j as f64 + 1.0) * 0.754_877_666_246_692_8).fract();
            C64::new(1.0 + t, 0.5 - t)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOutcome {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of the Hermitian operator `op` on C^n.
pub fn largest_eigenvalue<F>(op: F, n: usize, rel_tol: f64, max_iter: usize) -> LanczosOutcome
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let mut q = start_vector(n);
    let nq = norm(&q);
    q.iter_mut().for_each(|x| *x /= nq);
    let mut q_prev = vec![C64::new(0.0, 0.0); n];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut beta_prev = 0.0;
    let mut last = f64::NEG_INFINITY;
    let mut stable = 0;
    for it in 0..max_iter.min(n.max(1)) {
        let mut w = op(&q);
        let alpha = dot(&q, &w).re;
        for ((wi, qi), pi) in w.iter_mut().zip(&q).zip(&q_prev) {
            *wi -= *qi * alpha + *pi * beta_prev;
        }
        // one step of local reorthogonalization
        let c = dot(&q, &w);
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi -= *qi * c;
        }
        alphas.push(alpha + c.re);
        let beta = norm(&w);
        let t = SymTridiag::new(alphas.clone(), betas.clone());
        let theta = t.max_eigenvalue();
        if (theta - last).abs() <= rel_tol * theta.abs().max(1e-300) {
            stable += 1;
        } else {
            stable = 0;
        }
        last = theta;
        if stable >= 3 || beta <= 1e-14 * theta.abs().max(1e-300) {
            return LanczosOutcome {
                value: theta,
                iterations: it + 1,
                converged: true,
            };
        }
        betas.push(beta);
        q_prev = std::mem::replace(&mut q, w.into_iter().map(|x| x / beta).collect());
        beta_prev = beta;
    }
    LanczosOutcome {
        value: last,
        iterations: max_iter,
        converged: false,
    }
}
