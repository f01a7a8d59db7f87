//! Pointwise evaluators for the potential families and scalar weights.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::quad;

/// Japanese bracket (1 + t²)^{1/2}.
pub fn bracket(t: f64) -> f64 {
    t.hypot(1.0)
}

/// Quintic smoothstep 10t³ − 15t⁴ + 6t⁵, clamped to [0, 1].
pub fn smoothstep5(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// Derivative of [`smoothstep5`].
pub fn smoothstep5_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec {
            inner_radius: 1.0,
            outer_radius: 2.0,
        }
    }
}

impl CutoffSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.inner_radius > 0.0, "cutoff.inner_radius", "inner_radius > 0", self.inner_radius)?;
        ensure(
            self.outer_radius > self.inner_radius,
            "cutoff.outer_radius",
            "outer_radius > inner_radius",
            self.outer_radius,
        )
    }
}

/// κ(r): 1 below the inner radius, 0 beyond the outer radius.
pub fn eval_cutoff(spec: &CutoffSpec, r: f64) -> f64 {
    let t = (r - spec.inner_radius) / (spec.outer_radius - spec.inner_radius);
    1.0 - smoothstep5(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatingSpec {
    pub w: f64,
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub cutoff: CutoffSpec,
}

impl OscillatingSpec {
    pub fn new(w: f64, k: f64, alpha: f64, beta: f64) -> Self {
        OscillatingSpec {
            w,
            k,
            alpha,
            beta,
            cutoff: CutoffSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.w != 0.0 && self.w.is_finite(), "w", "w != 0", self.w)?;
        ensure(self.k != 0.0 && self.k.is_finite(), "k", "k != 0", self.k)?;
        ensure(self.alpha > 0.0, "alpha", "alpha > 0", self.alpha)?;
        ensure(self.beta > 0.0, "beta", "beta > 0", self.beta)?;
        self.cutoff.validate()
    }

    /// W_{αβ} as a function of the radius |x|.
    pub fn eval_radial(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.cutoff.inner_radius {
            return 0.0;
        }
        let damp = 1.0 - eval_cutoff(&self.cutoff, r);
        self.w * damp * r.powf(-self.beta) * (self.k * r.powf(self.alpha)).sin()
    }

    /// ∫ W_{αβ} over the radial interval [r0, r1], 0 ≤ r0 ≤ r1.
    pub fn radial_integral(&self, r0: f64, r1: f64) -> f64 {
        let inner = self.cutoff.inner_radius;
        let outer = self.cutoff.outer_radius;
        if r1 <= inner {
            return 0.0;
        }
        let r0 = r0.max(inner);
        let tol = 1e-12 * self.w.abs() * (r1 - r0).max(1e-300);
        let f = |r: f64| self.eval_radial(r);
        let mut total = 0.0;
        let mut a = r0;
        if a < outer {
            let b = r1.min(outer);
            total += crate::quad::integrate(f, a, b, tol);
            a = b;
        }
        if a >= r1 {
            return total;
        }
        let phase_rate = |r: f64| self.k.abs() * self.alpha * r.powf(self.alpha - 1.0);
        if phase_rate(a).min(phase_rate(r1)) * (r1 - a) < 20.0 {
            return total + crate::quad::integrate(f, a, r1, tol);
        }
        // two integrations by parts against the phase k r^α
        let c = self.w / (self.k * self.alpha);
        let e = 1.0 - self.alpha - self.beta;
        let boundary = |r: f64| {
            let phi = self.k * r.powf(self.alpha);
            let u = c * r.powf(e);
            let du = c * e * r.powf(e - 1.0);
            -u * phi.cos() + du / (self.k * self.alpha * r.powf(self.alpha - 1.0)) * phi.sin()
        };
        total + boundary(r1) - boundary(a)
    }

    /// Mean of W_{αβ} over the cell [x − h/2, x + h/2] of the line.
    pub fn cell_average(&self, x: f64, h: f64) -> f64 {
        let (a, b) = (x - 0.5 * h, x + 0.5 * h);
        let integral = if a >= 0.0 {
            self.radial_integral(a, b)
        } else if b <= 0.0 {
            self.radial_integral(-b, -a)
        } else {
            self.radial_integral(0.0, -a) + self.radial_integral(0.0, b)
        };
        integral / h
    }
}

/// W_{αβ}(x) for a point x of any dimension.
pub fn eval_oscillating(spec: &OscillatingSpec, x: &[f64]) -> f64 {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    spec.eval_radial(r)
}

/// (h, h', h'') for h = (1 + g²)^{-1}, g(x) = 2x − sin 2x.
fn wvn_h(x: f64) -> (f64, f64, f64) {
    let s2 = (2.0 * x).sin();
    let c2 = (2.0 * x).cos();
    let g = 2.0 * x - s2;
    let g1 = 2.0 - 2.0 * c2;
    let g2 = 4.0 * s2;
    let h = 1.0 / (1.0 + g * g);
    let h1 = -2.0 * g * g1 * h * h;
    let h2 = -2.0 * (g1 * g1 + g * g2) * h * h + 8.0 * g * g * g1 * g1 * h * h * h;
    (h, h1, h2)
}

/// The Wigner-von Neumann potential with embedded eigenvalue 1.
pub fn eval_wvn_potential(x: f64) -> f64 {
    let g = 2.0 * x - (2.0 * x).sin();
    let q = 1.0 + g * g;
    let s = x.sin();
    let s4 = s * s * s * s;
    -16.0 * g * (2.0 * x).sin() / q - 32.0 * (1.0 - 3.0 * g * g) * s4 / (q * q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WvnState {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
}

/// f(x) = sin(x)/(1 + g²) with closed-form first and second derivatives.
pub fn eval_wvn_bound_state(x: f64) -> WvnState {
    let (h, h1, h2) = wvn_h(x);
    let (s, c) = x.sin_cos();
    WvnState {
        f: s * h,
        df: c * h + s * h1,
        d2f: -s * h + 2.0 * c * h1 + s * h2,
    }
}

/// sinc and its first two derivatives, stable near 0.
fn sinc_derivs(r: f64) -> (f64, f64, f64) {
    if r.abs() < 0.5 {
        let r2 = r * r;
        let mut term = 1.0;
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        // term = (-1)^k r^{2k} / (2k+1)!
        for k in 0..14 {
            let kf = k as f64;
            s0 += term;
            if k >= 1 {
                s1 += 2.0 * kf * term / r;
                s2 += 2.0 * kf * (2.0 * kf - 1.0) * term / r2;
            }
            term *= -r2 / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
        }
        if r == 0.0 {
            return (1.0, 0.0, -1.0 / 3.0);
        }
        (s0, s1, s2)
    } else {
        let (s, c) = r.sin_cos();
        let s0 = s / r;
        let s1 = (r * c - s) / (r * r);
        let s2 = -s / r - 2.0 * c / (r * r) + 2.0 * s / (r * r * r);
        (s0, s1, s2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wvn3d {
    /// W(r) = V(r).
    pub potential: f64,
    /// Radial profile u(r) = sin(r)/(r(1 + g(r)²)).
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
}

/// Radial data of the three-dimensional Wigner-von Neumann example. r = 0
/// returns the limit values.
pub fn eval_wvn_3d(r: f64) -> Wvn3d {
    let (h, h1, h2) = wvn_h(r);
    let (s0, s1, s2) = sinc_derivs(r);
    Wvn3d {
        potential: eval_wvn_potential(r),
        u: s0 * h,
        du: s1 * h + s0 * h1,
        d2u: s2 * h + 2.0 * s1 * h1 + s0 * h2,
    }
}

/// Uniformly sampled real function, linearly interpolated, zero outside the
/// sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn from_fn(f: impl Fn(f64) -> f64, start: f64, end: f64, step: f64) -> Self {
        let n = ((end - start) / step).round() as usize + 1;
        let values = (0..n).map(|i| f(start + i as f64 * step)).collect();
        SampledFunction { start, step, values }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        ensure(self.step > 0.0, name, "step > 0", self.step)?;
        ensure(!self.values.is_empty(), name, "nonempty samples", 0)?;
        ensure(
            self.values.iter().all(|v| v.is_finite()),
            name,
            "finite samples",
            "non-finite value",
        )
    }

    pub fn end(&self) -> f64 {
        self.start + (self.values.len().saturating_sub(1)) as f64 * self.step
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.start) / self.step;
        let n = self.values.len();
        if !(t >= 0.0) || t > (n - 1) as f64 {
            return 0.0;
        }
        let i = (t.floor() as usize).min(n.saturating_sub(2));
        if n == 1 {
            return self.values[0];
        }
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimonSeriesSpec {
    pub kappas: Vec<f64>,
    pub radii: Vec<f64>,
    pub phases: Vec<f64>,
    /// Core W, supported in [0, 1].
    pub core: SampledFunction,
    pub truncation_count: usize,
}

impl SimonSeriesSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.truncation_count;
        ensure(n >= 1, "truncation_count", "truncation_count >= 1", n)?;
        for (name, len) in [
            ("kappas", self.kappas.len()),
            ("radii", self.radii.len()),
            ("phases", self.phases.len()),
        ] {
            ensure(len >= n, name, "length >= truncation_count", len)?;
        }
        ensure(
            self.kappas.iter().all(|&k| k > 0.0),
            "kappas",
            "kappas positive",
            format!("{:?}", self.kappas),
        )?;
        for i in 0..self.kappas.len() {
            for j in 0..i {
                ensure(
                    self.kappas[i] != self.kappas[j],
                    "kappas",
                    "kappas pairwise distinct",
                    self.kappas[i],
                )?;
            }
        }
        ensure(
            self.radii.first().is_some_and(|&r| r > 0.0)
                && self.radii.windows(2).all(|w| w[1] > w[0]),
            "radii",
            "radii positive and strictly increasing",
            format!("{:?}", self.radii),
        )?;
        self.core.validate("core")?;
        ensure(
            self.core.start >= 0.0 && self.core.end() <= 1.0,
            "core",
            "core supported in [0,1]",
            format!("[{}, {}]", self.core.start, self.core.end()),
        )
    }

    /// Four-term configuration used by demos and acceptance checks.
    pub fn demo() -> Self {
        SimonSeriesSpec {
            kappas: vec![1.0, 1.5, 2.0, 2.5],
            radii: vec![2.0, 8.0, 32.0, 128.0],
            phases: vec![0.0, 0.7, 1.9, 0.3],
            core: SampledFunction::from_fn(|x| 0.5 * (std::f64::consts::PI * x).sin(), 0.0, 1.0, 0.01),
            truncation_count: 4,
        }
    }
}

pub fn eval_simon_series(spec: &SimonSeriesSpec, x: f64) -> f64 {
    let mut v = spec.core.eval(x);
    for n in 0..spec.truncation_count {
        if x > spec.radii[n] {
            let kn = spec.kappas[n];
            v += 4.0 * kn * (2.0 * kn * x + spec.phases[n]).sin() / x;
        }
    }
    v
}

/// Monotone piecewise-linear envelope g, constant beyond its last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x <= x1 {
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        k[k.len() - 1].1
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.knots.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1)
    }

    pub fn demo_envelope() -> Self {
        PiecewiseLinear {
            knots: vec![
                (0.0, 1.0),
                (1.0, 1.5),
                (2.0, 6.5),
                (8.0, 12.0),
                (32.0, 19.5),
                (128.0, 30.0),
                (1.0e4, 40.0),
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub points: usize,
    pub envelope_monotone: bool,
    /// max over the grid of |V(x)|(1+|x|)/g(|x|); the bound holds iff ≤ 1.
    pub max_ratio: f64,
    pub worst_x: f64,
    pub holds: bool,
}

/// Checks |V(x)| ≤ g(|x|)(1+|x|)^{-1} on `points` uniform samples of [0, x_max].
pub fn simon_envelope_check(
    spec: &SimonSeriesSpec,
    envelope: &PiecewiseLinear,
    x_max: f64,
    points: usize,
) -> EnvelopeReport {
    let mut max_ratio = 0.0f64;
    let mut worst_x = 0.0;
    for i in 0..points {
        let x = x_max * i as f64 / (points - 1).max(1) as f64;
        let ratio = eval_simon_series(spec, x).abs() * (1.0 + x) / envelope.eval(x);
        if ratio > max_ratio {
            max_ratio = ratio;
            worst_x = x;
        }
    }
    let envelope_monotone = envelope.is_nondecreasing();
    EnvelopeReport {
        points,
        envelope_monotone,
        max_ratio,
        worst_x,
        holds: envelope_monotone && max_ratio <= 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Oscillating(OscillatingSpec),
    WignerVonNeumann1d,
    WignerVonNeumann3dRadial,
    SimonSeries(SimonSeriesSpec),
    /// Samples of a short-range V_sr, |V| ≲ ⟨x⟩^{-1-rho}; evaluated at |x|.
    ShortRangeSample { samples: SampledFunction, rho: f64 },
    /// Samples of a long-range V_lr; evaluated at |x|.
    LongRangeSample {
        samples: SampledFunction,
        rho: f64,
        rho_prime: f64,
    },
    Sum { terms: Vec<PotentialSpec> },
    /// Arbitrary samples evaluated at the signed coordinate.
    Custom { samples: SampledFunction },
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec::Custom {
            samples: SampledFunction {
                start: 0.0,
                step: 1.0,
                values: vec![0.0],
            },
        }
    }

    /// V_sr(r) = amplitude·exp(−r²) sampled on [0, 12].
    pub fn gaussian_short_range(amplitude: f64) -> Self {
        PotentialSpec::ShortRangeSample {
            samples: SampledFunction::from_fn(|r| amplitude * (-r * r).exp(), 0.0, 12.0, 1e-3),
            rho: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Oscillating(s) => s.validate(),
            PotentialSpec::WignerVonNeumann1d | PotentialSpec::WignerVonNeumann3dRadial => Ok(()),
            PotentialSpec::SimonSeries(s) => s.validate(),
            PotentialSpec::ShortRangeSample { samples, rho } => {
                ensure(*rho > 0.0, "rho_sr", "rho_sr > 0", rho)?;
                samples.validate("samples")
            }
            PotentialSpec::LongRangeSample {
                samples,
                rho,
                rho_prime,
            } => {
                ensure(*rho > 0.0, "rho_lr", "rho_lr > 0", rho)?;
                ensure(*rho_prime > 0.0, "rho_prime_lr", "rho_prime_lr > 0", rho_prime)?;
                samples.validate("samples")
            }
            PotentialSpec::Sum { terms } => {
                ensure(!terms.is_empty(), "terms", "Sum is nonempty", 0)?;
                terms.iter().try_for_each(|t| t.validate())
            }
            PotentialSpec::Custom { samples } => samples.validate("samples"),
        }
    }

    /// Value at the 1D coordinate x (radial families use |x|).
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PotentialSpec::Oscillating(s) => s.eval_radial(x.abs()),
            PotentialSpec::WignerVonNeumann1d => eval_wvn_potential(x),
            PotentialSpec::WignerVonNeumann3dRadial => eval_wvn_potential(x.abs()),
            PotentialSpec::SimonSeries(s) => eval_simon_series(s, x),
            PotentialSpec::ShortRangeSample { samples, .. }
            | PotentialSpec::LongRangeSample { samples, .. } => samples.eval(x.abs()),
            PotentialSpec::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
            PotentialSpec::Custom { samples } => samples.eval(x),
        }
    }

    pub fn sample(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Cell means over [x − h/2, x + h/2] for the oscillating families, point
    /// values otherwise.
    pub fn cell_average(&self, x: f64, h: f64) -> f64 {
        match self {
            PotentialSpec::Oscillating(s) => s.cell_average(x, h),
            PotentialSpec::Sum { terms } => terms.iter().map(|t| t.cell_average(x, h)).sum(),
            _ => self.eval(x),
        }
    }

    pub fn sample_cell_averages(&self, xs: &[f64], h: f64) -> Vec<f64> {
        xs.iter().map(|&x| self.cell_average(x, h)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFunctionSpec {
    GDelta { delta: f64 },
    Psi { s: f64, r: f64, c: f64 },
    BracketPower { s: f64 },
}

impl WeightFunctionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightFunctionSpec::GDelta { delta } => {
                ensure((0.0..1.0).contains(&delta), "delta", "0 <= delta < 1", delta)
            }
            WeightFunctionSpec::Psi { s, r, c } => {
                ensure(s > 0.5, "s", "s > 1/2", s)?;
                ensure(r >= 1.0, "R", "R >= 1", r)?;
                ensure(c > 0.0, "c", "c > 0", c)
            }
            WeightFunctionSpec::BracketPower { .. } => Ok(()),
        }
    }
}

/// g_δ(x) = (2 − ⟨x⟩^{-δ})⟨x⟩^{-1}.
pub fn g_delta(delta: f64, x: f64) -> f64 {
    let b = bracket(x);
    (2.0 - b.powf(-delta)) / b
}

const PSI_SPLIT: f64 = 4.0;

/// ∫_T^∞ ⟨τ⟩^{-2s} dτ for T ≥ 2 by the binomial expansion in τ^{-2}.
fn bracket_tail(s: f64, t: f64) -> f64 {
    let mut coeff = 1.0;
    let mut total = 0.0;
    for j in 0..60 {
        let jf = j as f64;
        let term = coeff * t.powf(1.0 - 2.0 * s - 2.0 * jf) / (2.0 * s + 2.0 * jf - 1.0);
        total += term;
        if term.abs() < 1e-18 * total.abs() {
            break;
        }
        coeff *= -(s + jf) / (jf + 1.0);
    }
    total
}

/// ∫_0^u ⟨τ⟩^{-2s} dτ for u ≥ 0 (s > 1/2 when u is large).
fn bracket_integral_from_zero(s: f64, u: f64) -> f64 {
    let f = |t: f64| (1.0 + t * t).powf(-s);
    if u <= PSI_SPLIT {
        quad::integrate(f, 0.0, u, 1e-13)
    } else {
        quad::integrate(f, 0.0, PSI_SPLIT, 1e-13) + bracket_tail(s, PSI_SPLIT) - bracket_tail(s, u)
    }
}

/// F(t) = ∫_{−∞}^t ⟨τ⟩^{-2s} dτ, s > 1/2.
pub fn bracket_cumulative(s: f64, t: f64) -> f64 {
    let half = bracket_integral_from_zero(s, PSI_SPLIT) + bracket_tail(s, PSI_SPLIT);
    if t >= 0.0 {
        half + bracket_integral_from_zero(s, t)
    } else {
        half - bracket_integral_from_zero(s, -t)
    }
}

/// ∫_a^b ⟨τ⟩^{-2s} dτ computed directly (accurate for close a, b).
pub fn bracket_segment(s: f64, a: f64, b: f64) -> f64 {
    if (b - a).abs() <= 8.0 {
        quad::integrate(|t: f64| (1.0 + t * t).powf(-s), a, b, 1e-15 * (b - a).abs().max(1e-300))
    } else {
        bracket_cumulative(s, b) - bracket_cumulative(s, a)
    }
}

pub fn eval_weight(spec: &WeightFunctionSpec, t: f64) -> f64 {
    match *spec {
        WeightFunctionSpec::GDelta { delta } => g_delta(delta, t),
        WeightFunctionSpec::Psi { s, r, c } => c * r * bracket_cumulative(s, t),
        WeightFunctionSpec::BracketPower { s } => bracket(t).powf(-s),
    }
}
