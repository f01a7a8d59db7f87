//! Eigenanalysis on finite boxes: embedded-eigenvalue detection with box
//! doubling, virial classification, and tail-norm diagnostics for windowed
//! oscillating multipliers.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{
    build_conjugate_a, build_h0, build_radial_channel, bulk_commutator_apply, eigenpairs_in, OperatorMatrix, WindowSpec,
};
use crate::error::{ensure, Error, Result};
use crate::grid::{Grid1D, GridKind};
use crate::linalg::dense::hermitian_eigen;
use crate::linalg::fourier::FourierMultiplier;
use crate::linalg::lanczos::largest_eigenvalue;
use crate::linalg::C64;
use crate::potentials::{bracket, eval_cutoff, CutoffSpec};

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
    pub residual_norms: Vec<f64>,
}

fn residuals(t: &OperatorMatrix, vals: &[f64], vecs: &DMatrix<C64>) -> Vec<f64> {
    (0..vals.len())
        .map(|c| {
            let v: Vec<C64> = vecs.column(c).iter().copied().collect();
            let tv = t.apply(&v);
            tv.iter().zip(&v).map(|(a, b)| (a - b * vals[c]).norm_sqr()).sum::<f64>().sqrt()
        })
        .collect()
}

/// Full spectrum with orthonormal eigenvectors.
pub fn eig(t: &OperatorMatrix) -> Result<EigenResult> {
    let defect = t.hermitian_defect();
    if defect > 1e-12 {
        return Err(Error::NotHermitian(defect));
    }
    let (vals, vecs) = match t.as_tridiag() {
        Some(_) => eigenpairs_in(t, f64::NEG_INFINITY, f64::INFINITY),
        None => hermitian_eigen(&t.to_dense()),
    };
    let residual_norms = residuals(t, &vals, &vecs);
    Ok(EigenResult { eigenvalues: vals, eigenvectors: vecs, residual_norms })
}

/// Eigenpairs with eigenvalue in [lo, hi].
pub fn eig_in(t: &OperatorMatrix, lo: f64, hi: f64) -> Result<EigenResult> {
    let defect = t.hermitian_defect();
    if defect > 1e-12 {
        return Err(Error::NotHermitian(defect));
    }
    let (vals, vecs) = eigenpairs_in(t, lo, hi);
    let residual_norms = residuals(t, &vals, &vecs);
    Ok(EigenResult { eigenvalues: vals, eigenvectors: vecs, residual_norms })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Genuine,
    BoxArtifact,
    Unresolved,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddedCandidate {
    pub energy: f64,
    /// Fraction of the L² mass in the inner half-box.
    pub localization: f64,
    /// Distance to the nearest matching eigenvalue in the next smaller box.
    pub box_drift: f64,
    /// |⟨f, [H, iA] f⟩| / (2|E|‖f‖²).
    pub virial_ratio: f64,
    pub box_length: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedSearch {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    #[serde(default = "default_localization")]
    pub localization_threshold: f64,
    #[serde(default = "default_drift")]
    pub drift_tol: f64,
}

fn default_localization() -> f64 {
    0.99
}

fn default_drift() -> f64 {
    5e-3
}

impl EmbeddedSearch {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        EmbeddedSearch { lo, hi, step, localization_threshold: 0.99, drift_tol: 5e-3 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.lo >= 0.0, "window", "window inside [0, inf)", self.lo)?;
        ensure(self.hi > self.lo, "window", "lo < hi", self.hi)?;
        ensure(self.step > 0.0, "step", "step > 0", self.step)?;
        ensure(self.drift_tol > 0.0, "drift_tol", "drift_tol > 0", self.drift_tol)?;
        ensure(
            self.localization_threshold > 0.0 && self.localization_threshold <= 1.0,
            "localization_threshold",
            "0 < threshold <= 1",
            self.localization_threshold,
        )
    }
}

struct BoxSpectrum {
    length: f64,
    energies: Vec<f64>,
    localization: Vec<f64>,
    virial: Vec<f64>,
}

/// Fraction of ‖v‖² on points with |x| ≤ L/2.
pub fn localization(grid: &Grid1D, v: &[C64]) -> f64 {
    let xs = grid.points();
    let half = 0.5 * grid.half_length;
    let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let inner: f64 = xs.iter().zip(v).filter(|(x, _)| x.abs() <= half).map(|(_, z)| z.norm_sqr()).sum();
    inner / total
}

/// |⟨f, [H, iA] f⟩| with the lattice commutator continued past the box ends.
pub fn virial_check(h: &OperatorMatrix, a: &OperatorMatrix, f: &[C64], _eigval: f64) -> f64 {
    let cf = bulk_commutator_apply(h, a, f);
    f.iter().zip(&cf).map(|(x, y)| x.conj() * y).sum::<C64>().re.abs()
}

fn box_spectrum<F>(build: &F, length: f64, search: &EmbeddedSearch) -> Result<BoxSpectrum>
where
    F: Fn(&Grid1D) -> Result<OperatorMatrix> + Sync,
{
    let grid = Grid1D::with_step(GridKind::Line, length, search.step)?;
    let h = build(&grid)?;
    let a = build_conjugate_a(&grid)?;
    let pad = 10.0 * search.drift_tol;
    let (vals, vecs) = eigenpairs_in(&h, search.lo - pad, search.hi + pad);
    let mut localization_v = Vec::with_capacity(vals.len());
    let mut virial = Vec::with_capacity(vals.len());
    for (c, &e) in vals.iter().enumerate() {
        let f: Vec<C64> = vecs.column(c).iter().copied().collect();
        localization_v.push(localization(&grid, &f));
        let norm2: f64 = f.iter().map(|z| z.norm_sqr()).sum();
        virial.push(virial_check(&h, &a, &f, e) / (2.0 * e.abs().max(1e-12) * norm2));
    }
    Ok(BoxSpectrum { length, energies: vals, localization: localization_v, virial })
}

/// Eigenvalues in the window on the largest box, classified by localization
/// and drift against the next smaller box.
pub fn find_embedded<F>(build: F, search: &EmbeddedSearch, box_list: &[f64]) -> Result<Vec<EmbeddedCandidate>>
where
    F: Fn(&Grid1D) -> Result<OperatorMatrix> + Sync,
{
    search.validate()?;
    ensure(box_list.len() >= 2, "box_list", "at least 2 box sizes", box_list.len())?;
    let mut lengths = box_list.to_vec();
    lengths.sort_by(f64::total_cmp);
    let spectra: Vec<BoxSpectrum> =
        lengths.par_iter().map(|&l| box_spectrum(&build, l, search)).collect::<Result<Vec<_>>>()?;
    let big = &spectra[spectra.len() - 1];
    let small = &spectra[spectra.len() - 2];
    let thr = search.localization_threshold;
    let mut out = Vec::new();
    for i in 0..big.energies.len() {
        let e = big.energies[i];
        if e < search.lo || e > search.hi {
            continue;
        }
        let loc = big.localization[i];
        let nearest = |filter_localized: bool| {
            small
                .energies
                .iter()
                .zip(&small.localization)
                .filter(|(_, l)| !filter_localized || **l >= thr)
                .map(|(s, _)| (s - e).abs())
                .fold(f64::INFINITY, f64::min)
        };
        let mut drift = nearest(true);
        if !drift.is_finite() {
            drift = nearest(false);
        }
        if !drift.is_finite() {
            drift = search.hi - search.lo;
        }
        let verdict = if loc < thr {
            Verdict::BoxArtifact
        } else if drift <= search.drift_tol {
            Verdict::Genuine
        } else {
            Verdict::Unresolved
        };
        out.push(EmbeddedCandidate {
            energy: e,
            localization: loc,
            box_drift: drift,
            virial_ratio: big.virial[i],
            box_length: big.length,
            verdict,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailVerdict {
    DecaysToZero,
    Plateaus,
    Grows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailDecayReport {
    pub radii: Vec<f64>,
    pub tail_norms: Vec<f64>,
    pub plateau_estimate: f64,
    pub verdict: TailVerdict,
    /// Norm of the whole operator.
    pub full_norm: f64,
}

impl TailDecayReport {
    pub fn from_norms(radii: Vec<f64>, tail_norms: Vec<f64>, full_norm: f64) -> Self {
        let first = tail_norms[0];
        let last = tail_norms[tail_norms.len() - 1];
        let verdict = if last <= 0.1 * first {
            TailVerdict::DecaysToZero
        } else if last > 1.5 * first {
            TailVerdict::Grows
        } else {
            TailVerdict::Plateaus
        };
        let mut tail: Vec<f64> = tail_norms.iter().rev().take(3).copied().collect();
        tail.sort_by(f64::total_cmp);
        let plateau_estimate = tail[tail.len() / 2];
        TailDecayReport { radii, tail_norms, plateau_estimate, verdict, full_norm }
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    ensure(!radii.is_empty(), "radii", "non-empty", 0)?;
    ensure(radii.windows(2).all(|w| w[1] > w[0]), "radii", "strictly increasing", format!("{radii:?}"))?;
    ensure(radii[0] >= 0.0, "radii", "radii >= 0", radii[0])
}

/// ‖χ T χ‖ for a matrix-free T, χ the indicator of `mask`.
pub fn masked_norm<F, G>(apply: F, apply_adjoint: G, mask: &[bool]) -> f64
where
    F: Fn(&[C64]) -> Vec<C64>,
    G: Fn(&[C64]) -> Vec<C64>,
{
    let n = mask.len();
    if !mask.iter().any(|m| *m) {
        return 0.0;
    }
    let cut = |v: &mut Vec<C64>| {
        for (x, m) in v.iter_mut().zip(mask) {
            if !m {
                *x = C64::new(0.0, 0.0);
            }
        }
    };
    let op = |v: &[C64]| {
        let mut w = v.to_vec();
        cut(&mut w);
        let mut tw = apply(&w);
        cut(&mut tw);
        let mut out = apply_adjoint(&tw);
        cut(&mut out);
        out
    };
    largest_eigenvalue(op, n, 1e-10, 400).value.max(0.0).sqrt()
}

/// ‖χ_{|x|≥R} T χ_{|x|≥R}‖ for each R.
pub fn tail_decay(t: &OperatorMatrix, radii: &[f64]) -> Result<TailDecayReport> {
    check_radii(radii)?;
    let d = t.to_dense();
    let da = d.adjoint();
    let xs = t.grid.points();
    let apply = |m: &DMatrix<C64>, v: &[C64]| -> Vec<C64> { (m * nalgebra::DVector::from_column_slice(v)).iter().copied().collect() };
    let norms: Vec<f64> = radii
        .par_iter()
        .map(|&r| {
            let mask: Vec<bool> = (0..t.dim()).map(|i| xs[i % xs.len()].abs() >= r).collect();
            masked_norm(|v| apply(&d, v), |v| apply(&da, v), &mask)
        })
        .collect();
    let full = crate::linalg::dense::spectral_norm(&d);
    Ok(TailDecayReport::from_norms(radii.to_vec(), norms, full))
}

/// Corner norms of θ(T) diag(mult) θ(T) using only the eigenpairs in supp θ.
/// `coords` are the distances used for the corner masks.
pub fn windowed_multiplier_tails(
    t: &OperatorMatrix,
    theta: &WindowSpec,
    mult: &[f64],
    coords: &[f64],
    radii: &[f64],
) -> Result<(Vec<f64>, f64)> {
    theta.validate()?;
    check_radii(radii)?;
    let (lo, hi) = theta.support();
    let (vals, vecs) = eigenpairs_in(t, lo, hi);
    let k = vals.len();
    if k == 0 {
        return Ok((vec![0.0; radii.len()], 0.0));
    }
    let th: Vec<f64> = vals.iter().map(|&e| theta.eval(e)).collect();
    let sv = DMatrix::from_fn(vecs.nrows(), k, |r, c| vecs[(r, c)] * mult[r]);
    let mut g = vecs.adjoint() * sv;
    for a in 0..k {
        for b in 0..k {
            g[(a, b)] *= th[a] * th[b];
        }
    }
    let full = abs_spectral_radius(&g);
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let rows: Vec<usize> = (0..coords.len()).filter(|&i| coords[i] >= r).collect();
        if rows.is_empty() {
            out.push(0.0);
            continue;
        }
        let y = DMatrix::from_fn(rows.len(), k, |i, c| vecs[(rows[i], c)]);
        let gram = y.adjoint() * &y;
        let (ev, eu) = hermitian_eigen(&gram);
        let sq = DMatrix::from_fn(k, k, |a, b| {
            (0..k).map(|j| eu[(a, j)] * ev[j].max(0.0).sqrt() * eu[(b, j)].conj()).sum::<C64>()
        });
        out.push(abs_spectral_radius(&(&sq * &g * &sq)));
    }
    Ok((out, full))
}

fn abs_spectral_radius(m: &DMatrix<C64>) -> f64 {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let (v, _) = hermitian_eigen(&herm);
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Channel coefficients ℓ − 1 + d/2 for ℓ ∈ {0, 1, 2, 4, 8, …} up to `alpha_max`.
pub fn channel_alphas(dim: usize, alpha_max: f64) -> Vec<f64> {
    let base = dim as f64 / 2.0 - 1.0;
    let mut out = vec![base];
    let mut l = 1u64;
    while (l as f64 + base) <= alpha_max {
        out.push(l as f64 + base);
        l *= 2;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceProbe {
    pub k: f64,
    /// Box length of each radial channel (or half-length of the line box).
    pub length: f64,
    pub step: f64,
    /// 1 for the line, ≥ 2 for radial channels.
    pub dim: usize,
}

impl InterferenceProbe {
    pub fn validate(&self) -> Result<()> {
        ensure(self.k > 0.0, "k", "k > 0", self.k)?;
        ensure(self.length > 0.0, "length", "length > 0", self.length)?;
        ensure(self.step > 0.0 && self.step < self.length, "step", "0 < step < length", self.step)?;
        ensure(self.dim >= 1, "dim", "dim >= 1", self.dim)
    }

    fn check_radii(&self, radii: &[f64]) -> Result<()> {
        check_radii(radii)?;
        let r = radii[radii.len() - 1];
        ensure(r < TAPER_START * self.length, "radii", "radii below the wall taper (0.7 length)", r)
    }
}

/// C∞ switch-off on [0.7 L, 0.95 L]; an abrupt end of sin(k r) at the
/// Dirichlet wall acts as a non-decaying source in every corner.
pub fn wall_taper(r: f64, length: f64) -> f64 {
    WindowSpec::smooth(-1.0, TAPER_START * length, 0.25 * length).eval(r)
}

const TAPER_START: f64 = 0.7;

/// Tail norms of θ(H₀) sin(k|Q|) θ(H₀); in dimension d ≥ 2 the maximum over
/// radial channels. `amplitude` scales the multiplier.
pub fn interference_tails(
    probe: &InterferenceProbe,
    theta: &WindowSpec,
    radii: &[f64],
    amplitude: f64,
) -> Result<TailDecayReport> {
    probe.validate()?;
    probe.check_radii(radii)?;
    if probe.dim == 1 {
        let grid = Grid1D::with_step(GridKind::Line, probe.length, probe.step)?;
        let xs = grid.points();
        let mult: Vec<f64> = xs.iter().map(|x| amplitude * wall_taper(x.abs(), probe.length) * (probe.k * x.abs()).sin()).collect();
        let coords: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
        let (norms, full) = windowed_multiplier_tails(&build_h0(&grid), theta, &mult, &coords, radii)?;
        return Ok(TailDecayReport::from_norms(radii.to_vec(), norms, full));
    }
    let grid = Grid1D::with_step(GridKind::Halfline, probe.length, probe.step)?;
    let rs = grid.points();
    let mult: Vec<f64> = rs.iter().map(|&r| amplitude * wall_taper(r, probe.length) * (probe.k * r).sin()).collect();
    let (_, hi) = theta.support();
    let alphas = channel_alphas(probe.dim, hi * probe.length * probe.length);
    let per: Vec<(Vec<f64>, f64)> = alphas
        .par_iter()
        .map(|&a| {
            let op = build_radial_channel(&grid, a)?;
            windowed_multiplier_tails(&op, theta, &mult, &rs, radii)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut norms = vec![0.0f64; radii.len()];
    let mut full = 0.0f64;
    for (n, f) in &per {
        for (a, b) in norms.iter_mut().zip(n) {
            *a = a.max(*b);
        }
        full = full.max(*f);
    }
    Ok(TailDecayReport::from_norms(radii.to_vec(), norms, full))
}

/// max θ(|ξ|²)θ(|ξ−η|²) over ξ ∈ ℝ^d and |η| = k.
pub fn interference_symbol_check(theta: &WindowSpec, k: f64, dim: usize) -> Result<f64> {
    theta.validate()?;
    ensure(k >= 0.0, "k", "k >= 0", k)?;
    ensure(dim >= 1, "dim", "dim >= 1", dim)?;
    let (_, hi) = theta.support();
    let rmax = hi.max(0.0).sqrt();
    let m = 4000;
    if dim == 1 {
        let mut best = 0.0f64;
        for i in 0..=2 * m {
            let xi = -rmax + rmax * i as f64 / m as f64;
            let a = theta.eval(xi * xi);
            if a == 0.0 {
                continue;
            }
            best = best.max(a * theta.eval((xi - k).powi(2))).max(a * theta.eval((xi + k).powi(2)));
        }
        return Ok(best);
    }
    // |ξ| = a, |ξ − η| = b is realizable iff |a − b| ≤ k ≤ a + b
    let tab: Vec<(f64, f64)> = (0..=m)
        .map(|i| {
            let a = rmax * i as f64 / m as f64;
            (a, theta.eval(a * a))
        })
        .filter(|(_, t)| *t > 0.0)
        .collect();
    let mut best = 0.0f64;
    for &(a, ta) in &tab {
        for &(b, tb) in &tab {
            if (a - b).abs() <= k && k <= a + b {
                best = best.max(ta * tb);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmallPlusDecayReport {
    pub report: TailDecayReport,
    pub plateau_estimate: f64,
    /// Plateau for θ shrunk to the central `narrow_fraction` of its window, when requested.
    pub narrow_plateau: Option<f64>,
}

/// Tail plateau of θ(H₀) sin(k|Q|) θ(H₀) as the level ‖C_ε‖ left after the
/// ⟨Q⟩^{-1}-weighted parts vanish; optionally repeated with a narrower window.
pub fn small_plus_decay_probe(
    probe: &InterferenceProbe,
    theta: &WindowSpec,
    radii: &[f64],
    narrow_fraction: Option<f64>,
) -> Result<SmallPlusDecayReport> {
    let report = interference_tails(probe, theta, radii, 1.0)?;
    let narrow_plateau = match narrow_fraction {
        Some(f) => {
            ensure(f > 0.0 && f < 1.0, "narrow_fraction", "0 < fraction < 1", f)?;
            let mid = 0.5 * (theta.lo + theta.hi);
            let half = 0.5 * f * (theta.hi - theta.lo);
            let mut narrow = *theta;
            narrow.lo = mid - half;
            narrow.hi = mid + half;
            narrow.margin = Some(f * theta.margin_value());
            Some(interference_tails(probe, &narrow, radii, 1.0)?.plateau_estimate)
        }
        None => None,
    };
    Ok(SmallPlusDecayReport { plateau_estimate: report.plateau_estimate, report, narrow_plateau })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactnessProbe {
    pub p: f64,
    pub alpha: f64,
    pub k: f64,
    pub l1: f64,
    pub l2: f64,
}

impl CompactnessProbe {
    pub fn validate(&self) -> Result<()> {
        ensure(self.p >= 0.0, "p", "p >= 0", self.p)?;
        ensure(self.alpha >= 1.0, "alpha", "alpha >= 1", self.alpha)?;
        ensure(self.l1 >= 0.0 && self.l2 >= 0.0, "smoothing_orders", "l1, l2 >= 0", format!("({}, {})", self.l1, self.l2))
    }
}

const SEAM_WIDTH: f64 = 2.0;

/// Tail norms of ⟨P⟩^{-ℓ₁}⟨Q⟩^p(1−κ(|Q|)) sin(k|Q|^α)⟨P⟩^{-ℓ₂} on a periodic grid.
/// The multiplier is smoothly switched off on L−3 ≤ |x| ≤ L−1 so the mirror
/// kink at the periodic seam does not feed low frequencies into the tail.
pub fn oscillation_compactness_probe(grid: &Grid1D, probe: &CompactnessProbe, radii: &[f64]) -> Result<TailDecayReport> {
    probe.validate()?;
    check_radii(radii)?;
    ensure(grid.kind == GridKind::Periodic, "grid", "periodic grid", format!("{:?}", grid.kind))?;
    let xs = grid.points();
    ensure(grid.half_length > 4.0, "grid", "half-length > 4", grid.half_length)?;
    let cutoff = CutoffSpec::default();
    let seam = CutoffSpec { inner_radius: grid.half_length - SEAM_WIDTH - 1.0, outer_radius: grid.half_length - 1.0 };
    let mult: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let r = x.abs();
            bracket(x).powf(probe.p)
                * (1.0 - eval_cutoff(&cutoff, r))
                * eval_cutoff(&seam, r)
                * (probe.k * r.powf(probe.alpha)).sin()
        })
        .collect();
    let s1 = FourierMultiplier::new(grid.n, grid.spacing(), |xi| (1.0 + xi * xi).powf(-probe.l1 / 2.0));
    let s2 = FourierMultiplier::new(grid.n, grid.spacing(), |xi| (1.0 + xi * xi).powf(-probe.l2 / 2.0));
    let mul = |v: &[C64]| -> Vec<C64> { v.iter().zip(&mult).map(|(a, b)| a * b).collect() };
    let apply = |v: &[C64]| s1.apply_complex(&mul(&s2.apply_complex(v)));
    let apply_adj = |v: &[C64]| s2.apply_complex(&mul(&s1.apply_complex(v)));
    let norms: Vec<f64> = radii
        .par_iter()
        .map(|&r| {
            let mask: Vec<bool> = xs.iter().map(|x| x.abs() >= r).collect();
            masked_norm(apply, apply_adj, &mask)
        })
        .collect();
    let full = masked_norm(apply, apply_adj, &vec![true; grid.n]);
    Ok(TailDecayReport::from_norms(radii.to_vec(), norms, full))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub window_lo: f64,
    pub window_hi: f64,
    pub k: f64,
    pub verdict: TailVerdict,
    pub plateau: f64,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W, header: bool) -> Result<()> {
    if header {
        writeln!(out, "window_lo,window_hi,k,verdict,plateau")?;
    }
    for r in rows {
        let v = match r.verdict {
            TailVerdict::DecaysToZero => "decays_to_zero",
            TailVerdict::Plateaus => "plateaus",
            TailVerdict::Grows => "grows",
        };
        writeln!(out, "{},{},{},{},{}", r.window_lo, r.window_hi, r.k, v, r.plateau)?;
    }
    Ok(())
}
