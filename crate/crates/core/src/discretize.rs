//! Finite Hermitian realizations of the operators on 1D and radial grids,
//! with exact functional calculus by eigendecomposition.

use std::io::{Read, Write};

use nalgebra::{DMatrix, Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::grid::{Grid1D, GridKind};
use crate::linalg::dense::{hermitian_defect, hermitian_eigen};
use crate::linalg::fourier::FourierMultiplier;
use crate::linalg::tridiag::SymTridiag;
use crate::linalg::C64;
use crate::potentials::{bracket, g_delta, smoothstep5, PotentialSpec};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Hamiltonian,
    Free,
    ConjugateA,
    ConjugateBr,
    Weight,
    Window,
    Dirac,
}

impl OperatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            OperatorKind::Hamiltonian => "hamiltonian",
            OperatorKind::Free => "free",
            OperatorKind::ConjugateA => "conjugate_A",
            OperatorKind::ConjugateBr => "conjugate_BR",
            OperatorKind::Weight => "weight",
            OperatorKind::Window => "window",
            OperatorKind::Dirac => "dirac",
        }
    }
}

/// Hermitian tridiagonal matrix, plus the couplings of the two end points to
/// the exterior neighbours the box truncation removed (zero where the
/// boundary is physical).
#[derive(Debug, Clone, PartialEq)]
pub struct HermTridiag {
    pub diag: Vec<f64>,
    pub upper: Vec<C64>,
    pub edge_lo: C64,
    pub edge_hi: C64,
}

impl HermTridiag {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.upper.iter().all(|z| z.im == 0.0)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.len();
        let mut y: Vec<C64> = self.diag.iter().zip(v).map(|(d, x)| x * d).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += self.upper[i] * v[i + 1];
            y[i + 1] += self.upper[i].conj() * v[i];
        }
        y
    }

    /// Unitarily equivalent real form: T = D S D^*, D = diag(phases).
    pub fn real_form(&self) -> (SymTridiag, Vec<C64>) {
        let n = self.len();
        let mut phases = vec![C64::new(1.0, 0.0); n];
        let mut off = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n.saturating_sub(1) {
            let u = self.upper[i];
            let a = u.norm();
            off.push(a);
            phases[i + 1] = if a > 0.0 { phases[i] * u.conj() / a } else { phases[i] };
        }
        (SymTridiag::new(self.diag.clone(), off), phases)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.len();
        let mut m = DMatrix::from_element(n, n, ZERO);
        for i in 0..n {
            m[(i, i)] = C64::new(self.diag[i], 0.0);
            if i + 1 < n {
                m[(i, i + 1)] = self.upper[i];
                m[(i + 1, i)] = self.upper[i].conj();
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Diagonal(Vec<f64>),
    Tridiagonal(HermTridiag),
    Dense(DMatrix<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub storage: Storage,
    pub grid: Grid1D,
    pub kind: OperatorKind,
    pub label: String,
    /// 1 for scalar operators, 2 for Dirac systems.
    pub components: usize,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        match &self.storage {
            Storage::Diagonal(d) => d.len(),
            Storage::Tridiagonal(t) => t.len(),
            Storage::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.storage {
            Storage::Diagonal(d) => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d.len(), d.iter().map(|&x| C64::new(x, 0.0))))
            }
            Storage::Tridiagonal(t) => t.to_dense(),
            Storage::Dense(m) => m.clone(),
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        match &self.storage {
            Storage::Diagonal(d) => d.iter().zip(v).map(|(a, x)| x * a).collect(),
            Storage::Tridiagonal(t) => t.apply(v),
            Storage::Dense(m) => {
                let x = nalgebra::DVector::from_column_slice(v);
                (m * x).iter().copied().collect()
            }
        }
    }

    pub fn as_tridiag(&self) -> Option<&HermTridiag> {
        match &self.storage {
            Storage::Tridiagonal(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_real(&self) -> bool {
        match &self.storage {
            Storage::Diagonal(_) => true,
            Storage::Tridiagonal(t) => t.is_real(),
            Storage::Dense(m) => m.iter().all(|z| z.im == 0.0),
        }
    }

    /// Relative Frobenius deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => hermitian_defect(m),
            _ => 0.0,
        }
    }

    /// Spectral norm (exact for diagonal/dense, Gershgorin-tight bound otherwise).
    pub fn norm(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(d) => d.iter().fold(0.0, |a, x| a.max(x.abs())),
            Storage::Tridiagonal(t) => {
                let (s, _) = t.real_form();
                let all = s.all_eigenvalues();
                all.first().map_or(0.0, |a| a.abs()).max(all.last().map_or(0.0, |b| b.abs()))
            }
            Storage::Dense(m) => crate::linalg::dense::spectral_norm(m),
        }
    }

    /// Copy with `values` added to the diagonal.
    pub fn add_diagonal(&self, values: &[f64]) -> OperatorMatrix {
        let mut out = self.clone();
        match &mut out.storage {
            Storage::Diagonal(d) => d.iter_mut().zip(values).for_each(|(a, b)| *a += b),
            Storage::Tridiagonal(t) => t.diag.iter_mut().zip(values).for_each(|(a, b)| *a += b),
            Storage::Dense(m) => {
                for (i, b) in values.iter().enumerate() {
                    m[(i, i)] += C64::new(*b, 0.0);
                }
            }
        }
        out
    }
}

fn dirichlet_edges(grid: &Grid1D, coupling: f64) -> (C64, C64) {
    match grid.kind {
        GridKind::Line => (C64::new(coupling, 0.0), C64::new(coupling, 0.0)),
        GridKind::Halfline => (ZERO, C64::new(coupling, 0.0)),
        GridKind::Periodic => (ZERO, ZERO),
    }
}

/// H₀ = −d²/dx²: central differences (Dirichlet) or the exact multiplier ξ² (periodic).
pub fn build_h0(grid: &Grid1D) -> OperatorMatrix {
    let n = grid.n;
    let h = grid.spacing();
    let storage = match grid.kind {
        GridKind::Periodic => {
            let mult = FourierMultiplier::new(n, h, |x| x * x);
            Storage::Dense(multiplier_matrix(&mult))
        }
        _ => {
            let c = 1.0 / (h * h);
            let (edge_lo, edge_hi) = dirichlet_edges(grid, -c);
            Storage::Tridiagonal(HermTridiag {
                diag: vec![2.0 * c; n],
                upper: vec![C64::new(-c, 0.0); n - 1],
                edge_lo,
                edge_hi,
            })
        }
    };
    OperatorMatrix {
        storage,
        grid: *grid,
        kind: OperatorKind::Free,
        label: "H0".into(),
        components: 1,
    }
}

/// Dense matrix of a Fourier multiplier, symmetrized against rounding.
pub fn multiplier_matrix(mult: &FourierMultiplier) -> DMatrix<C64> {
    let n = mult.len();
    let mut m = DMatrix::from_element(n, n, ZERO);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = mult.apply(&e);
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = C64::new(v, 0.0);
        }
        e[j] = 0.0;
    }
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// h_α = −∂_r² + α r^{-2} on a half-line grid.
pub fn build_radial_channel(grid: &Grid1D, alpha_channel: f64) -> Result<OperatorMatrix> {
    ensure(grid.kind == GridKind::Halfline, "grid", "halfline grid", format!("{:?}", grid.kind))?;
    let extra: Vec<f64> = grid.points().iter().map(|r| alpha_channel / (r * r)).collect();
    let mut op = build_h0(grid).add_diagonal(&extra);
    op.kind = OperatorKind::Hamiltonian;
    op.label = format!("h_alpha(alpha={alpha_channel})");
    Ok(op)
}

/// H₀ (+ channel term) + V(Q).
pub fn build_schrodinger(grid: &Grid1D, v: &PotentialSpec, channel: Option<f64>) -> Result<OperatorMatrix> {
    v.validate()?;
    let samples = v.sample(&grid.points());
    ensure(
        samples.iter().all(|x| x.is_finite()),
        "V",
        "V finite at every grid point",
        "non-finite sample",
    )?;
    build_schrodinger_samples(grid, &samples, channel)
}

/// As [`build_schrodinger`], with V replaced by its cell means (oscillating
/// terms faster than the grid then average out instead of aliasing).
pub fn build_schrodinger_averaged(grid: &Grid1D, v: &PotentialSpec, channel: Option<f64>) -> Result<OperatorMatrix> {
    v.validate()?;
    let samples = v.sample_cell_averages(&grid.points(), grid.spacing());
    ensure(
        samples.iter().all(|x| x.is_finite()),
        "V",
        "V finite at every grid point",
        "non-finite sample",
    )?;
    build_schrodinger_samples(grid, &samples, channel)
}

pub fn build_schrodinger_samples(grid: &Grid1D, v: &[f64], channel: Option<f64>) -> Result<OperatorMatrix> {
    ensure(v.len() == grid.n, "V", "one sample per grid point", v.len())?;
    let base = match channel {
        Some(a) => build_radial_channel(grid, a)?,
        None => build_h0(grid),
    };
    let mut op = base.add_diagonal(v);
    op.kind = OperatorKind::Hamiltonian;
    op.label = "H".into();
    Ok(op)
}

/// σ₂⊗P + mσ₃ + V on a (2n)-dimensional space ordered (f1 block, f2 block),
/// P = −i·(central difference).
pub fn build_dirac_1d(grid: &Grid1D, m: f64, v: Option<&[Matrix2<C64>]>) -> Result<OperatorMatrix> {
    let n = grid.n;
    let h = grid.spacing();
    if let Some(v) = v {
        ensure(v.len() == n, "V", "one 2x2 block per grid point", v.len())?;
        for b in v {
            ensure(
                (b - b.adjoint()).norm() <= 1e-12 * (1.0 + b.norm()),
                "V",
                "Hermitian 2x2 blocks",
                format!("{b:?}"),
            )?;
        }
    }
    let mut mat = DMatrix::from_element(2 * n, 2 * n, ZERO);
    let d = 1.0 / (2.0 * h);
    let mut couple = |i: usize, j: usize, val: f64| {
        // D_{ij} = val; block (0,1) = −D, block (1,0) = D.
        mat[(i, n + j)] += C64::new(-val, 0.0);
        mat[(n + i, j)] += C64::new(val, 0.0);
    };
    for i in 0..n.saturating_sub(1) {
        couple(i, i + 1, d);
        couple(i + 1, i, -d);
    }
    if grid.kind == GridKind::Periodic {
        couple(n - 1, 0, d);
        couple(0, n - 1, -d);
    }
    for i in 0..n {
        mat[(i, i)] += C64::new(m, 0.0);
        mat[(n + i, n + i)] += C64::new(-m, 0.0);
        if let Some(v) = v {
            let b = v[i];
            mat[(i, i)] += b[(0, 0)];
            mat[(i, n + i)] += b[(0, 1)];
            mat[(n + i, i)] += b[(1, 0)];
            mat[(n + i, n + i)] += b[(1, 1)];
        }
    }
    Ok(OperatorMatrix {
        storage: Storage::Dense(mat),
        grid: *grid,
        kind: OperatorKind::Dirac,
        label: format!("dirac(m={m})"),
        components: 2,
    })
}

/// Radial Dirac channel σ₂P_r + (m+φ_sc)σ₃ + (κ/r+φ_am)σ₁ + φ_el on a half-line grid.
pub fn build_dirac_channel(
    grid: &Grid1D,
    m: f64,
    kappa: f64,
    phi_sc: &[f64],
    phi_am: &[f64],
    phi_el: &[f64],
) -> Result<OperatorMatrix> {
    ensure(grid.kind == GridKind::Halfline, "grid", "halfline grid", format!("{:?}", grid.kind))?;
    let blocks: Vec<Matrix2<C64>> = grid
        .points()
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let off = kappa / r + phi_am[j];
            Matrix2::new(
                C64::new(phi_sc[j] + phi_el[j], 0.0),
                C64::new(off, 0.0),
                C64::new(off, 0.0),
                C64::new(-phi_sc[j] + phi_el[j], 0.0),
            )
        })
        .collect();
    build_dirac_1d(grid, m, Some(&blocks))
}

/// A = (1/2)(P·Q + Q·P) with P = −iD: tridiagonal, purely imaginary off-diagonal.
pub fn build_conjugate_a(grid: &Grid1D) -> Result<OperatorMatrix> {
    ensure(grid.kind != GridKind::Periodic, "grid", "non-periodic grid", "periodic")?;
    let x = |j: isize| grid.coord(j);
    let a = x_weighted_generator(grid, x, 0.25);
    Ok(OperatorMatrix {
        storage: Storage::Tridiagonal(a),
        grid: *grid,
        kind: OperatorKind::ConjugateA,
        label: "A".into(),
        components: 1,
    })
}

/// Tridiagonal −i·K with K_{j,j+1} = scale·(a_j + a_{j+1})/h (antisymmetric
/// central-difference symmetrization of a(x)·d/dx).
fn x_weighted_generator(grid: &Grid1D, a: impl Fn(isize) -> f64, scale: f64) -> HermTridiag {
    let n = grid.n as isize;
    let h = grid.spacing();
    let k = |j: isize| scale * (a(j) + a(j + 1)) / h;
    let upper = (0..n - 1).map(|j| C64::new(0.0, -k(j))).collect();
    // exterior couplings: A_{0,−1} = −i K_{0,−1} = i K_{−1,0}; A_{n−1,n} = −i K_{n−1,n}
    let edge_lo = match grid.kind {
        GridKind::Line => C64::new(0.0, k(-1)),
        _ => ZERO,
    };
    let edge_hi = match grid.kind {
        GridKind::Line | GridKind::Halfline => C64::new(0.0, -k(n - 1)),
        GridKind::Periodic => ZERO,
    };
    HermTridiag {
        diag: vec![0.0; n as usize],
        upper,
        edge_lo,
        edge_hi,
    }
}

/// χ with χ = 0 on [0, 1] and χ = 1 on [2, ∞).
pub fn chi_shoulder(t: f64) -> f64 {
    smoothstep5(t - 1.0)
}

/// B_R = χ_R² g_δ Q·P + P·Q g_δ χ_R²; δ = 0 uses g₀ = ⟨x⟩^{-1}.
pub fn build_b_r(grid: &Grid1D, r: f64, delta: f64) -> Result<OperatorMatrix> {
    ensure(grid.kind != GridKind::Periodic, "grid", "non-periodic grid", "periodic")?;
    ensure(r >= 1.0, "R", "R >= 1", r)?;
    ensure(r < grid.half_length, "R", "R < L", r)?;
    ensure((0.0..1.0).contains(&delta), "delta", "0 <= delta < 1", delta)?;
    let weight = |j: isize| {
        let x = grid.coord(j);
        let chi = chi_shoulder(x.abs() / r);
        let g = if delta == 0.0 { 1.0 / bracket(x) } else { g_delta(delta, x) };
        chi * chi * g * x
    };
    let b = x_weighted_generator(grid, weight, 0.5);
    Ok(OperatorMatrix {
        storage: Storage::Tridiagonal(b),
        grid: *grid,
        kind: OperatorKind::ConjugateBr,
        label: format!("B_R(R={r},delta={delta})"),
        components: 1,
    })
}

/// ⟨x⟩^{-s} on the grid, or ⟨T⟩^{-s} for a supplied Hermitian T.
pub fn build_weight(grid: &Grid1D, s: f64, operator_basis: Option<&OperatorMatrix>) -> Result<OperatorMatrix> {
    ensure(s >= 0.0, "s", "s >= 0", s)?;
    let storage = match operator_basis {
        None => Storage::Diagonal(grid.points().iter().map(|&x| bracket(x).powf(-s)).collect()),
        Some(t) => {
            ensure(t.hermitian_defect() <= 1e-12, "T", "Hermitian basis operator", t.hermitian_defect())?;
            Storage::Dense(function_of(t, |v| bracket(v).powf(-s)))
        }
    };
    Ok(OperatorMatrix {
        storage,
        grid: *grid,
        kind: OperatorKind::Weight,
        label: format!("weight(s={s})"),
        components: operator_basis.map_or(1, |t| t.components),
    })
}

/// f(T) by full eigendecomposition.
pub fn function_of(t: &OperatorMatrix, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(&t.to_dense());
    let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, c)] * f(vals[c]));
    scaled * vecs.adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    SharpProjector,
    SmoothBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub lo: f64,
    pub hi: f64,
    /// Shoulder width of the smooth bump; default 0.1·|J|.
    #[serde(default)]
    pub margin: Option<f64>,
    pub kind: WindowKind,
}

fn exp_step(u: f64) -> f64 {
    let rho = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = rho(u);
        a / (a + rho(1.0 - u))
    }
}

impl WindowSpec {
    pub fn sharp(lo: f64, hi: f64) -> Self {
        WindowSpec { lo, hi, margin: None, kind: WindowKind::SharpProjector }
    }

    pub fn smooth(lo: f64, hi: f64, margin: f64) -> Self {
        WindowSpec { lo, hi, margin: Some(margin), kind: WindowKind::SmoothBump }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.lo < self.hi, "window", "a < b", format!("[{}, {}]", self.lo, self.hi))?;
        ensure(self.margin_value() > 0.0, "margin", "margin > 0", self.margin_value())
    }

    pub fn margin_value(&self) -> f64 {
        self.margin.unwrap_or(0.1 * (self.hi - self.lo))
    }

    /// Closed support of θ.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            WindowKind::SharpProjector => (self.lo, self.hi),
            WindowKind::SmoothBump => (self.lo - self.margin_value(), self.hi + self.margin_value()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            WindowKind::SharpProjector => {
                if (self.lo..=self.hi).contains(&t) {
                    1.0
                } else {
                    0.0
                }
            }
            WindowKind::SmoothBump => {
                let m = self.margin_value();
                if t < self.lo {
                    exp_step((t - (self.lo - m)) / m)
                } else if t > self.hi {
                    exp_step(((self.hi + m) - t) / m)
                } else {
                    1.0
                }
            }
        }
    }
}

/// Eigenpairs of T with eigenvalue in [lo, hi], ascending; vectors as columns.
pub fn eigenpairs_in(t: &OperatorMatrix, lo: f64, hi: f64) -> (Vec<f64>, DMatrix<C64>) {
    let n = t.dim();
    match &t.storage {
        Storage::Diagonal(d) => {
            let mut idx: Vec<usize> = (0..n).filter(|&i| d[i] >= lo && d[i] <= hi).collect();
            idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
            let vecs = DMatrix::from_fn(n, idx.len(), |r, c| if r == idx[c] { C64::new(1.0, 0.0) } else { ZERO });
            (idx.iter().map(|&i| d[i]).collect(), vecs)
        }
        Storage::Tridiagonal(tri) => {
            let (s, phases) = tri.real_form();
            let hi_open = hi + 4.0 * f64::EPSILON * (1.0 + hi.abs());
            let vals = s.eigenvalues_in(lo, hi_open);
            let vecs = s.eigenvectors(&vals);
            let m = DMatrix::from_fn(n, vals.len(), |r, c| phases[r] * vecs[c][r]);
            (vals, m)
        }
        Storage::Dense(mat) => {
            let (vals, vecs) = hermitian_eigen(mat);
            let idx: Vec<usize> = (0..n).filter(|&i| vals[i] >= lo && vals[i] <= hi).collect();
            let m = DMatrix::from_fn(n, idx.len(), |r, c| vecs[(r, idx[c])]);
            (idx.iter().map(|&i| vals[i]).collect(), m)
        }
    }
}

/// θ(T) (smooth bump) or E_J(T) (sharp) as a dense matrix.
pub fn apply_window(t: &OperatorMatrix, w: &WindowSpec) -> Result<OperatorMatrix> {
    w.validate()?;
    ensure(t.hermitian_defect() <= 1e-12, "T", "Hermitian input", t.hermitian_defect())?;
    let (lo, hi) = w.support();
    let (vals, vecs) = eigenpairs_in(t, lo, hi);
    let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, c)] * w.eval(vals[c]));
    let dense = scaled * vecs.adjoint();
    Ok(OperatorMatrix {
        storage: Storage::Dense(dense),
        grid: t.grid,
        kind: OperatorKind::Window,
        label: format!("theta[{},{}]({})", w.lo, w.hi, t.label),
        components: t.components,
    })
}

/// Couplings of the corner terms the bulk commutator adds to the box one.
fn corner_terms(h: &HermTridiag, a: &HermTridiag) -> (f64, f64) {
    let c = |he: C64, ae: C64| -2.0 * (he * ae.conj()).im;
    (c(h.edge_lo, a.edge_lo), c(h.edge_hi, a.edge_hi))
}

/// [H, iA]v evaluated as on the untruncated lattice: the box commutator plus
/// the terms through the exterior neighbours of both end points.
pub fn bulk_commutator_apply(h: &OperatorMatrix, a: &OperatorMatrix, v: &[C64]) -> Vec<C64> {
    let hav = h.apply(&a.apply(v));
    let ahv = a.apply(&h.apply(v));
    let i = C64::new(0.0, 1.0);
    let mut out: Vec<C64> = hav.iter().zip(&ahv).map(|(x, y)| i * (x - y)).collect();
    if let (Some(ht), Some(at)) = (h.as_tridiag(), a.as_tridiag()) {
        let (c0, c1) = corner_terms(ht, at);
        let n = out.len();
        out[0] += v[0] * c0;
        out[n - 1] += v[n - 1] * c1;
    }
    out
}

/// Dense form of [`bulk_commutator_apply`].
pub fn bulk_commutator_dense(h: &OperatorMatrix, a: &OperatorMatrix) -> DMatrix<C64> {
    let hd = h.to_dense();
    let ad = a.to_dense();
    let i = C64::new(0.0, 1.0);
    let mut c = (&hd * &ad - &ad * &hd) * i;
    if let (Some(ht), Some(at)) = (h.as_tridiag(), a.as_tridiag()) {
        let (c0, c1) = corner_terms(ht, at);
        let n = c.nrows();
        c[(0, 0)] += c0;
        c[(n - 1, n - 1)] += c1;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiracSymbols {
    pub m: f64,
    /// τ, a smooth bump whose support lies in (m, ∞) or its mirror (−∞, −m).
    pub tau: WindowSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiracSymbolValues {
    pub mu: f64,
    pub f: [f64; 3],
    pub pi_plus: Matrix4<C64>,
    pub pi_minus: Matrix4<C64>,
}

/// Dirac matrices (α₁, α₂, α₃, β) in the standard representation.
pub fn dirac_matrices() -> ([Matrix4<C64>; 3], Matrix4<C64>) {
    let o = ZERO;
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let sigma = [
        [[o, one], [one, o]],
        [[o, -i], [i, o]],
        [[one, o], [o, -one]],
    ];
    let alpha = sigma.map(|s| {
        let mut m = Matrix4::from_element(o);
        for r in 0..2 {
            for c in 0..2 {
                m[(r, c + 2)] = s[r][c];
                m[(r + 2, c)] = s[r][c];
            }
        }
        m
    });
    let beta = Matrix4::from_diagonal(&nalgebra::Vector4::new(one, one, -one, -one));
    (alpha, beta)
}

impl DiracSymbols {
    pub fn new(m: f64, k: f64, tau_lo: f64, tau_hi: f64, margin: f64) -> Result<Self> {
        let s = DiracSymbols { m, tau: WindowSpec::smooth(tau_lo, tau_hi, margin) };
        s.validate(k)?;
        Ok(s)
    }

    pub fn validate(&self, k: f64) -> Result<()> {
        ensure(self.m > 0.0, "m", "m > 0", self.m)?;
        self.tau.validate()?;
        let (a, b) = self.tau.support();
        let top = (self.m * self.m + k * k / 4.0).sqrt();
        let inside = (a > self.m && b < top) || (b < -self.m && a > -top);
        ensure(inside, "tau", "supp tau inside (m, sqrt(m^2+k^2/4)) or its mirror", format!("[{a}, {b}]"))
    }

    fn tau_at(&self, mu: f64) -> f64 {
        if self.tau.lo > 0.0 {
            self.tau.eval(mu)
        } else {
            self.tau.eval(-mu)
        }
    }
}

pub fn eval_dirac_symbols(sym: &DiracSymbols, xi: [f64; 3]) -> Result<DiracSymbolValues> {
    let m = sym.m;
    let xi2: f64 = xi.iter().map(|v| v * v).sum();
    let mu = (xi2 + m * m).sqrt();
    let tau = sym.tau_at(mu);
    let f = if tau == 0.0 {
        [0.0; 3]
    } else {
        ensure(xi2 > 0.0, "xi", "xi != 0 where tau(mu) != 0", 0.0)?;
        xi.map(|x| mu * mu / xi2 * tau * x)
    };
    let (alpha, beta) = dirac_matrices();
    let mut d = beta * C64::new(m, 0.0);
    for j in 0..3 {
        d += alpha[j] * C64::new(xi[j], 0.0);
    }
    let id = Matrix4::<C64>::identity();
    let half = C64::new(0.5, 0.0);
    let dm = d / C64::new(mu, 0.0);
    Ok(DiracSymbolValues {
        mu,
        f,
        pi_plus: (id + dm) * half,
        pi_minus: (id - dm) * half,
    })
}

/// χ of the regularized channel symbol: 1 on [0, 1], 0 on [2, ∞).
pub fn chi_regularizer(t: f64) -> f64 {
    1.0 - smoothstep5(t - 1.0)
}

/// p_{α;κ}(r; τ) = τ² + α r^{-2} χ(κ^{-1} α r^{-2}).
pub fn build_regularized_channel_symbol(alpha_channel: f64, kappa_reg: f64, r: f64, tau: f64) -> Result<f64> {
    ensure(r > 0.0, "r", "r > 0", r)?;
    ensure(kappa_reg >= 1.0, "kappa_reg", "kappa_reg >= 1", kappa_reg)?;
    let q = alpha_channel / (r * r);
    Ok(tau * tau + q * chi_regularizer(q / kappa_reg))
}

const MAGIC: &[u8; 4] = b"OSCM";

/// Binary export: "OSCM", u32 version, u64 rows, u64 cols, u32 label length,
/// label bytes (kind label), then row-major (re, im) f64 pairs, all little-endian.
pub fn write_binary<W: Write>(op: &OperatorMatrix, mut out: W) -> Result<()> {
    let m = op.to_dense();
    let label = op.kind.label().as_bytes();
    out.write_all(MAGIC)?;
    out.write_all(&1u32.to_le_bytes())?;
    out.write_all(&(m.nrows() as u64).to_le_bytes())?;
    out.write_all(&(m.ncols() as u64).to_le_bytes())?;
    out.write_all(&(label.len() as u32).to_le_bytes())?;
    out.write_all(label)?;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.write_all(&m[(r, c)].re.to_le_bytes())?;
            out.write_all(&m[(r, c)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut inp: R) -> Result<(String, DMatrix<C64>)> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    inp.read_exact(&mut b4)?;
    if &b4 != MAGIC {
        return Err(Error::Unsupported("not an OSCM matrix file".into()));
    }
    inp.read_exact(&mut b4)?;
    inp.read_exact(&mut b8)?;
    let rows = u64::from_le_bytes(b8) as usize;
    inp.read_exact(&mut b8)?;
    let cols = u64::from_le_bytes(b8) as usize;
    inp.read_exact(&mut b4)?;
    let mut label = vec![0u8; u32::from_le_bytes(b4) as usize];
    inp.read_exact(&mut label)?;
    let mut m = DMatrix::from_element(rows, cols, ZERO);
    for r in 0..rows {
        for c in 0..cols {
            inp.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            inp.read_exact(&mut b8)?;
            m[(r, c)] = C64::new(re, f64::from_le_bytes(b8));
        }
    }
    Ok((String::from_utf8_lossy(&label).into_owned(), m))
}

/// MatrixMarket coordinate text (complex general, nonzeros only).
pub fn write_matrix_market<W: Write>(op: &OperatorMatrix, mut out: W) -> Result<()> {
    let m = op.to_dense();
    let nnz = m.iter().filter(|z| z.norm() != 0.0).count();
    writeln!(out, "%%MatrixMarket matrix coordinate complex general")?;
    writeln!(out, "% kind: {}", op.kind.label())?;
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), nnz)?;
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let z = m[(r, c)];
            if z.norm() != 0.0 {
                writeln!(out, "{} {} {:e} {:e}", r + 1, c + 1, z.re, z.im)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fourier::frequencies;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn eigs(op: &OperatorMatrix) -> Vec<f64> {
        hermitian_eigen(&op.to_dense()).0
    }

    #[test]
    fn h0_nonnegative_and_box_value() {
        let g = Grid1D::line(100.0, 4001).unwrap();
        let h0 = build_h0(&g);
        let (s, _) = h0.as_tridiag().unwrap().real_form();
        assert!(s.all_eigenvalues()[0] >= -1e-12);
        let g = Grid1D::halfline(PI, 999).unwrap();
        let (s, _) = build_h0(&g).as_tridiag().unwrap().real_form();
        assert!((s.eigenvalues_in(0.0, 2.0)[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn h0_periodic_fourier_values() {
        let g = Grid1D::periodic(5.0, 32).unwrap();
        let ev = eigs(&build_h0(&g));
        let mut expect: Vec<f64> = frequencies(32, g.spacing()).iter().map(|x| x * x).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b), "{a} vs {b}");
        }
        for j in 0..16 {
            let v = (2.0 * PI * j as f64 / 10.0).powi(2);
            assert!(ev.iter().any(|e| (e - v).abs() < 1e-9 * (1.0 + v)));
        }
    }

    #[test]
    fn h0_second_order_convergence() {
        let mut errs = Vec::new();
        for n in [49usize, 99, 199] {
            let g = Grid1D::halfline(PI, n).unwrap();
            let (s, _) = build_h0(&g).as_tridiag().unwrap().real_form();
            errs.push((s.eigenvalues_in(0.0, 2.0)[0] - 1.0).abs());
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.8);
        }
    }

    #[test]
    fn radial_channel_examples() {
        let g = Grid1D::halfline(10.0, 99).unwrap();
        assert_eq!(build_radial_channel(&g, 0.0).unwrap().storage, build_h0(&g).storage);
        let ch = build_radial_channel(&g, 2.0).unwrap();
        let t = ch.as_tridiag().unwrap();
        let h0 = build_h0(&g);
        let j = 9; // r = 1
        assert!((g.coord(j) - 1.0).abs() < 1e-12);
        assert!((t.diag[j as usize] - h0.as_tridiag().unwrap().diag[j as usize] - 2.0).abs() < 1e-12);
        let (s, _) = t.real_form();
        let (s0, _) = h0.as_tridiag().unwrap().real_form();
        assert!(s.all_eigenvalues()[0] >= s0.all_eigenvalues()[0]);
        assert!(build_radial_channel(&Grid1D::line(1.0, 20).unwrap(), 1.0).is_err());
    }

    #[test]
    fn schrodinger_shift_and_zero() {
        let g = Grid1D::line(5.0, 49).unwrap();
        let zero = build_schrodinger(&g, &PotentialSpec::zero(), None).unwrap();
        assert_eq!(zero.storage, build_h0(&g).storage);
        let h = build_schrodinger(&g, &PotentialSpec::WignerVonNeumann1d, None).unwrap();
        let shifted = h.add_diagonal(&vec![0.37; g.n]);
        for (a, b) in eigs(&h).iter().zip(eigs(&shifted)) {
            assert!((a + 0.37 - b).abs() < 1e-10);
        }
    }

    #[test]
    fn dirac_free_periodic_dispersion() {
        let g = Grid1D::periodic(4.0, 32).unwrap();
        let d = build_dirac_1d(&g, 1.0, None).unwrap();
        assert!(d.hermitian_defect() < 1e-14);
        let ev = eigs(&d);
        let h = g.spacing();
        let mut expect: Vec<f64> = frequencies(32, h)
            .iter()
            .flat_map(|xi| {
                let s = (xi * h).sin() / h;
                let e = (s * s + 1.0).sqrt();
                [e, -e]
            })
            .collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(ev.iter().all(|e| e.abs() >= 1.0 - 1e-12));
    }

    #[test]
    fn conjugate_a_structure() {
        let g = Grid1D::line(3.0, 59).unwrap();
        let a = build_conjugate_a(&g).unwrap();
        let d = a.to_dense();
        assert!(hermitian_defect(&d) < 1e-15);
        let tr: C64 = (0..g.n).map(|i| d[(i, i)]).sum();
        assert!(tr.norm() < 1e-14);
        let even: Vec<C64> = g.points().iter().map(|x| c((-x * x).exp())).collect();
        let out = a.apply(&even);
        for j in 0..g.n {
            assert!((out[j] - out[g.n - 1 - j]).norm() < 1e-12);
        }
        assert!(build_conjugate_a(&Grid1D::periodic(3.0, 60).unwrap()).is_err());
    }

    fn packet(g: &Grid1D, k0: f64, width: f64) -> Vec<C64> {
        g.points()
            .iter()
            .map(|&x| C64::from_polar((-(x / width).powi(2)).exp(), k0 * x))
            .collect()
    }

    fn form(v: &[C64], w: &[C64]) -> f64 {
        v.iter().zip(w).map(|(a, b)| (a.conj() * b).re).sum()
    }

    #[test]
    fn dilation_commutator_on_packets() {
        let g = Grid1D::with_step(GridKind::Line, 40.0, 0.01).unwrap();
        let h0 = build_h0(&g);
        let a = build_conjugate_a(&g).unwrap();
        for k0 in [0.7, 1.0, 1.3] {
            let f = packet(&g, k0, 6.0);
            let cf = bulk_commutator_apply(&h0, &a, &f);
            let hf = h0.apply(&f);
            let ratio = form(&f, &cf) / (2.0 * form(&f, &hf));
            assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
        }
    }

    #[test]
    fn windowed_commutator_law() {
        let g = Grid1D::with_step(GridKind::Line, 8.0, 0.01).unwrap();
        let h0 = build_h0(&g);
        let a = build_conjugate_a(&g).unwrap();
        let w = WindowSpec::smooth(0.4, 1.2, 0.08);
        let (lo, hi) = w.support();
        let (vals, vecs) = eigenpairs_in(&h0, lo, hi);
        let m = vecs.ncols();
        let mut num = DMatrix::from_element(m, m, ZERO);
        let mut den = DMatrix::from_element(m, m, ZERO);
        for j in 0..m {
            let col: Vec<C64> = vecs.column(j).iter().copied().collect();
            let cv = bulk_commutator_apply(&h0, &a, &col);
            let hv = h0.apply(&col);
            for i in 0..m {
                let vi = vecs.column(i);
                let tij = w.eval(vals[i]) * w.eval(vals[j]);
                let cij: C64 = vi.iter().zip(&cv).map(|(x, y)| x.conj() * y).sum();
                let hij: C64 = vi.iter().zip(&hv).map(|(x, y)| x.conj() * y).sum();
                num[(i, j)] = (cij - hij * 2.0) * tij;
                den[(i, j)] = hij * 2.0 * tij;
            }
        }
        let ratio = crate::linalg::dense::spectral_norm(&num) / crate::linalg::dense::spectral_norm(&den);
        assert!(ratio <= 0.05, "ratio {ratio}");
    }

    #[test]
    fn b_r_examples() {
        let g = Grid1D::line(50.0, 999).unwrap();
        let b = build_b_r(&g, 10.0, 0.2).unwrap();
        let d = b.to_dense();
        let h = g.spacing();
        for (j, x) in g.points().iter().enumerate() {
            if x.abs() < 10.0 - h {
                assert!(d.column(j).iter().all(|z| z.norm() == 0.0));
            }
        }
        let b0 = build_b_r(&g, 10.0, 0.0).unwrap();
        let t = b0.as_tridiag().unwrap();
        let j = g.n - 2;
        let x = |i: usize| g.coord(i as isize);
        let expect = 0.5 * (x(j) / bracket(x(j)) + x(j + 1) / bracket(x(j + 1))) / h;
        assert!((t.upper[j].im + expect).abs() < 1e-12);
        let mut norms = Vec::new();
        for l in [100.0, 200.0, 400.0] {
            let g = Grid1D::with_step(GridKind::Line, l, 0.5).unwrap();
            norms.push(build_b_r(&g, 10.0, 0.2).unwrap().norm());
        }
        assert!(norms.iter().all(|v| v.is_finite()));
        assert!(norms[2] <= 4.0 * norms[0] * 1.01);
        assert!(build_b_r(&g, 60.0, 0.2).is_err());
    }

    #[test]
    fn weight_examples() {
        let g = Grid1D::line(4.0, 31).unwrap();
        let w0 = build_weight(&g, 0.0, None).unwrap();
        assert!(matches!(&w0.storage, Storage::Diagonal(d) if d.iter().all(|&v| v == 1.0)));
        let g = Grid1D::line(4.0, 32).unwrap();
        let w = build_weight(&g, 0.8, None).unwrap();
        if let Storage::Diagonal(d) = &w.storage {
            for (x, v) in g.points().iter().zip(d) {
                assert!((v - bracket(*x).powf(-0.8)).abs() < 1e-15);
            }
        }
        let a = build_conjugate_a(&Grid1D::line(4.0, 40).unwrap()).unwrap();
        let wa = build_weight(&a.grid, 1.0, Some(&a)).unwrap().to_dense();
        assert!(crate::linalg::dense::spectral_norm(&wa) <= 1.0 + 1e-12);
        let ad = a.to_dense();
        assert!((&wa * &ad - &ad * &wa).norm() < 1e-10);
    }

    #[test]
    fn window_examples() {
        let g = Grid1D::line(3.0, 40).unwrap();
        let h = build_schrodinger(&g, &PotentialSpec::WignerVonNeumann1d, None).unwrap();
        let all = apply_window(&h, &WindowSpec::sharp(-1e6, 1e6)).unwrap().to_dense();
        assert!((all - DMatrix::<C64>::identity(g.n, g.n)).norm() < 1e-10);
        let p = apply_window(&h, &WindowSpec::sharp(5.0, 50.0)).unwrap().to_dense();
        assert!((&p * &p - &p).norm() < 1e-12);
        let z = apply_window(&h, &WindowSpec::smooth(-1e4, -1e3, 1.0)).unwrap().to_dense();
        assert!(z.norm() < 1e-12);
    }

    #[test]
    fn window_functional_calculus() {
        let g = Grid1D::line(3.0, 40).unwrap();
        let h = build_schrodinger(&g, &PotentialSpec::WignerVonNeumann1d, None).unwrap();
        let w = WindowSpec::smooth(10.0, 60.0, 5.0);
        let th = apply_window(&h, &w).unwrap().to_dense();
        let hd = h.to_dense();
        let id = DMatrix::<C64>::identity(g.n, g.n);
        let p = &hd * &hd * c(0.01) - &hd * c(0.3) + id * c(2.0);
        let lhs = &th * &p;
        let rhs = function_of(&h, |x| w.eval(x) * (0.01 * x * x - 0.3 * x + 2.0));
        assert!((lhs - rhs).norm() < 1e-10 * p.norm());
        let ev = hermitian_eigen(&th).0;
        assert!(ev[0] >= -1e-12 && *ev.last().unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn dirac_symbol_examples() {
        let sym = DiracSymbols::new(1.0, 2.0, 1.1, 1.3, 0.05).unwrap();
        let v = eval_dirac_symbols(&sym, [0.0; 3]).unwrap();
        let (_, beta) = dirac_matrices();
        let id = Matrix4::<C64>::identity();
        assert_eq!(v.mu, 1.0);
        assert!((v.pi_plus - (id + beta) * c(0.5)).norm() < 1e-15);
        assert!((v.pi_minus - (id - beta) * c(0.5)).norm() < 1e-15);
        assert!(DiracSymbols::new(1.0, 2.0, 1.1, 1.6, 0.05).is_err());
    }

    #[test]
    fn dirac_symbol_ode_zero_guard() {
        let mut sym = DiracSymbols::new(1.0, 2.0, 1.1, 1.3, 0.05).unwrap();
        sym.tau = WindowSpec::smooth(0.9, 1.3, 0.05);
        assert!(eval_dirac_symbols(&sym, [0.0; 3]).is_err());
    }

    #[test]
    fn regularized_symbol_examples() {
        let p = build_regularized_channel_symbol(2.0, 4.0, 10.0, 0.5).unwrap();
        assert_eq!(p, 0.25 + 0.02);
        let p = build_regularized_channel_symbol(2.0, 4.0, 1e-3, 0.5).unwrap();
        assert_eq!(p, 0.25);
        let cmax = (0..=20000).map(|i| i as f64 * 1e-4 * 3.0).map(|t| t * chi_regularizer(t)).fold(0.0, f64::max);
        for i in 1..400 {
            let r = i as f64 * 0.05;
            for &(a, k) in &[(0.5, 1.0), (2.0, 3.0), (7.5, 10.0)] {
                let v = build_regularized_channel_symbol(a, k, r, 0.3).unwrap();
                assert!(v <= 0.09 + cmax * k + 1e-12);
            }
        }
    }

    #[test]
    fn matrix_io_roundtrip() {
        let g = Grid1D::line(2.0, 17).unwrap();
        let a = build_conjugate_a(&g).unwrap();
        let mut buf = Vec::new();
        write_binary(&a, &mut buf).unwrap();
        let (label, m) = read_binary(&buf[..]).unwrap();
        assert_eq!(label, "conjugate_A");
        assert_eq!(m, a.to_dense());
        let mut text = Vec::new();
        write_matrix_market(&a, &mut text).unwrap();
        let s = String::from_utf8(text).unwrap();
        assert!(s.starts_with("%%MatrixMarket"));
        assert_eq!(s.lines().count(), 3 + 2 * (g.n - 1));
    }

    proptest! {
        #[test]
        fn dirac_projectors(x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
            let sym = DiracSymbols::new(1.0, 2.0, 1.1, 1.3, 0.05).unwrap();
            let v = eval_dirac_symbols(&sym, [x, y, z]).unwrap();
            let id = Matrix4::<C64>::identity();
            prop_assert!((v.pi_plus + v.pi_minus - id).norm() < 1e-12);
            prop_assert!((v.pi_plus * v.pi_minus).norm() < 1e-12);
            prop_assert!((v.pi_plus * v.pi_plus - v.pi_plus).norm() < 1e-12);
            let (alpha, beta) = dirac_matrices();
            let d = alpha[0] * c(x) + alpha[1] * c(y) + alpha[2] * c(z) + beta;
            prop_assert!((v.pi_plus * d - v.pi_plus * c(v.mu)).norm() < 1e-10);
            let ev = hermitian_eigen(&DMatrix::from_iterator(4, 4, d.iter().copied())).0;
            prop_assert!((ev[0] + v.mu).abs() < 1e-10 && (ev[1] + v.mu).abs() < 1e-10);
            prop_assert!((ev[2] - v.mu).abs() < 1e-10 && (ev[3] - v.mu).abs() < 1e-10);
            prop_assert!(v.mu >= 1.0);
        }

        #[test]
        fn builders_are_hermitian(l in 2.0f64..20.0, n in 16usize..60, s in 0.0f64..2.0) {
            let g = Grid1D::line(l, n).unwrap();
            for op in [
                build_h0(&g),
                build_conjugate_a(&g).unwrap(),
                build_weight(&g, s, None).unwrap(),
                build_schrodinger(&g, &PotentialSpec::WignerVonNeumann1d, None).unwrap(),
            ] {
                prop_assert!(hermitian_defect(&op.to_dense()) <= 1e-12);
            }
        }
    }
}
