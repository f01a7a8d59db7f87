//! Limiting-absorption diagnostics: weighted resolvent scans with a
//! divergence-exponent fit, commutator positivity on spectral windows, the
//! B_R lower bound away from the origin, and the (α, β) sweep of oscillating
//! potentials.

use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{
    build_b_r, build_conjugate_a, build_schrodinger_averaged, build_weight, bulk_commutator_apply,
    bulk_commutator_dense, chi_shoulder, eigenpairs_in, OperatorMatrix, Storage,
};
use crate::error::{ensure, Error, Result};
use crate::grid::{Grid1D, GridKind};
use crate::linalg::dense::{hermitian_eigen, spectral_norm};
use crate::linalg::lanczos::largest_eigenvalue;
use crate::linalg::tridiag::{SymTridiag, TridiagLu};
use crate::linalg::C64;
use crate::potentials::{bracket, bracket_segment, OscillatingSpec, PotentialSpec, WeightFunctionSpec};
use crate::spectral::{find_embedded, EmbeddedSearch, Verdict};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const DENSE_LIMIT: usize = 600;

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn col(m: &DMatrix<C64>, c: usize) -> Vec<C64> {
    m.column(c).iter().copied().collect()
}

/// Precomputed data for repeated ‖W(H−z)^{-1}W‖ evaluations on one operator.
enum ResolventEngine {
    /// W = I on a tridiagonal H: 1/dist(z, spec H) by bisection.
    Normal { t: SymTridiag },
    /// Tridiagonal H, diagonal W: two banded solves per K*K product.
    Banded { diag: Vec<f64>, upper: Vec<C64>, weight: Vec<f64> },
    /// Eigendecomposition of H; W dense.
    Spectral { vals: Vec<f64>, vecs: DMatrix<C64>, weight: DMatrix<C64> },
}

impl ResolventEngine {
    fn new(h: &OperatorMatrix, w: &OperatorMatrix) -> Result<Self> {
        let n = h.dim();
        ensure(w.dim() == n, "W", "dim W = dim H", w.dim())?;
        let defect = h.hermitian_defect();
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        if let Storage::Diagonal(d) = &w.storage {
            ensure(d.iter().all(|&x| x >= 0.0), "W", "W nonnegative", "negative entry")?;
        } else if w.hermitian_defect() > 1e-10 {
            return Err(Error::NotHermitian(w.hermitian_defect()));
        }
        if let (Some(t), Storage::Diagonal(d)) = (h.as_tridiag(), &w.storage) {
            if d.iter().all(|&x| x == 1.0) {
                return Ok(ResolventEngine::Normal { t: t.real_form().0 });
            }
        }
        if let (Some(t), Storage::Diagonal(d), true) = (h.as_tridiag(), &w.storage, n > DENSE_LIMIT) {
            return Ok(ResolventEngine::Banded { diag: t.diag.clone(), upper: t.upper.clone(), weight: d.clone() });
        }
        let (vals, vecs) = hermitian_eigen(&h.to_dense());
        Ok(ResolventEngine::Spectral { vals, vecs, weight: w.to_dense() })
    }

    fn dim(&self) -> usize {
        match self {
            ResolventEngine::Normal { t } => t.len(),
            ResolventEngine::Banded { diag, .. } => diag.len(),
            ResolventEngine::Spectral { vals, .. } => vals.len(),
        }
    }

    fn norm(&self, z: C64) -> Result<f64> {
        ensure(z.im != 0.0, "z", "Im z != 0", z)?;
        let n = self.dim();
        match self {
            ResolventEngine::Normal { t } => {
                let e = t.nearest_eigenvalue(z.re);
                Ok(1.0 / (C64::new(e, 0.0) - z).norm())
            }
            ResolventEngine::Banded { diag, upper, weight } => {
                let factor = |z: C64| {
                    let dl: Vec<C64> = upper.iter().map(|u| u.conj()).collect();
                    let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0) - z).collect();
                    TridiagLu::factor(dl, d, upper.clone())
                };
                let lu = factor(z);
                let lu_adj = factor(z.conj());
                let op = |v: &[C64]| {
                    let mut y: Vec<C64> = v.iter().zip(weight).map(|(x, w)| x * w).collect();
                    lu.solve_in_place(&mut y);
                    y.iter_mut().zip(weight).for_each(|(x, w)| *x *= w * w);
                    lu_adj.solve_in_place(&mut y);
                    y.iter_mut().zip(weight).for_each(|(x, w)| *x *= w);
                    y
                };
                let out = largest_eigenvalue(op, n, 1e-11, 800);
                Ok(out.value.max(0.0).sqrt())
            }
            ResolventEngine::Spectral { vals, vecs, weight } => {
                let wu = weight * vecs;
                if n <= DENSE_LIMIT {
                    let scaled = DMatrix::from_fn(n, n, |r, c| wu[(r, c)] / (C64::new(vals[c], 0.0) - z));
                    let k = scaled * wu.adjoint();
                    return Ok(spectral_norm(&k));
                }
                let uw = wu.adjoint();
                let op = |v: &[C64]| {
                    let x = nalgebra::DVector::from_column_slice(v);
                    let a = &uw * x;
                    let a = nalgebra::DVector::from_fn(n, |i, _| a[i] / (C64::new(vals[i], 0.0) - z));
                    let kv = &wu * a;
                    let b = &uw * kv;
                    let b = nalgebra::DVector::from_fn(n, |i, _| b[i] / (C64::new(vals[i], 0.0) - z.conj()));
                    (&wu * b).iter().copied().collect::<Vec<_>>()
                };
                Ok(largest_eigenvalue(op, n, 1e-11, 800).value.max(0.0).sqrt())
            }
        }
    }
}

/// ‖W(H−z)^{-1}W‖ for Hermitian H and positive W.
pub fn weighted_resolvent_norm(h: &OperatorMatrix, w: &OperatorMatrix, z: C64) -> Result<f64> {
    ensure(z.im != 0.0, "z", "Im z != 0", z)?;
    ResolventEngine::new(h, w)?.norm(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// ⟨Q⟩^{-s}.
    Position,
    /// ⟨A⟩^{-s}; dense, so only for small boxes.
    ConjugateA,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapScanSpec {
    pub lo: f64,
    pub hi: f64,
    /// Weight exponent; 0 gives the unweighted control.
    pub s: f64,
    pub weight_kind: WeightKind,
    pub re_points: usize,
    pub im_ladder: Vec<f64>,
    pub box_list: Vec<f64>,
    pub step: f64,
}

impl LapScanSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.lo < self.hi, "interval", "a < b", format!("[{}, {}]", self.lo, self.hi))?;
        ensure(self.s >= 0.0, "s", "s >= 0", self.s)?;
        ensure(self.re_points >= 3, "re_points", "re_points >= 3", self.re_points)?;
        ensure(!self.im_ladder.is_empty(), "im_ladder", "nonempty im_ladder", 0)?;
        ensure(
            self.im_ladder.iter().all(|&x| x > 0.0 && x.is_finite()),
            "im_ladder",
            "im_ladder positive",
            format!("{:?}", self.im_ladder),
        )?;
        ensure(
            self.im_ladder.windows(2).all(|p| p[1] < p[0]),
            "im_ladder",
            "im_ladder strictly decreasing",
            format!("{:?}", self.im_ladder),
        )?;
        ensure(self.box_list.len() >= 2, "box_list", "at least 2 box sizes", self.box_list.len())?;
        ensure(self.box_list.iter().all(|&l| l > 0.0), "box_list", "box sizes > 0", format!("{:?}", self.box_list))?;
        ensure(self.step > 0.0, "step", "step > 0", self.step)
    }

    pub fn re_values(&self) -> Vec<f64> {
        let m = self.re_points;
        (0..m).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (m - 1) as f64).collect()
    }

    /// Decreasing geometric ladder from `top` to `bottom` with `count` rungs.
    pub fn geometric_ladder(top: f64, bottom: f64, count: usize) -> Vec<f64> {
        let q = (bottom / top).powf(1.0 / (count.max(2) - 1) as f64);
        (0..count).map(|i| top * q.powi(i as i32)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LapVerdict {
    LapHolds,
    LapFails,
    Inconclusive,
}

impl LapVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            LapVerdict::LapHolds => "lap_holds",
            LapVerdict::LapFails => "lap_fails",
            LapVerdict::Inconclusive => "inconclusive",
        }
    }

    fn from_fit(p: f64, stability: f64) -> Self {
        if p >= P_FAILS {
            LapVerdict::LapFails
        } else if p <= P_HOLDS && stability <= STABILITY_TOL {
            LapVerdict::LapHolds
        } else {
            LapVerdict::Inconclusive
        }
    }
}

pub const P_HOLDS: f64 = 0.15;
pub const P_FAILS: f64 = 0.85;
pub const STABILITY_TOL: f64 = 0.2;
/// Rungs at the bottom of the admissible ladder entering the exponent fit.
pub const FIT_RUNGS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LapPoint {
    pub re: f64,
    pub im: f64,
    pub box_length: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxScan {
    pub box_length: f64,
    pub eigenvalues_in_interval: usize,
    pub level_spacing: f64,
    pub im_floor: f64,
    pub sup_norm: f64,
    /// Fitted exponent per Re z.
    pub p_per_re: Vec<f64>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapScanResult {
    pub points: Vec<LapPoint>,
    pub boxes: Vec<BoxScan>,
    /// Largest box.
    pub sup_norm: f64,
    pub p: f64,
    pub box_stability: f64,
    pub verdict: LapVerdict,
    /// Verdict of each box with the shared stability figure, ascending box size.
    pub box_verdicts: Vec<LapVerdict>,
    pub im_floor: f64,
    pub level_spacing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapSummary {
    pub sup_norm: f64,
    pub p: f64,
    pub box_stability: f64,
    pub verdict: LapVerdict,
    pub im_floor: f64,
    pub level_spacing: f64,
}

impl LapScanResult {
    pub fn summary(&self) -> LapSummary {
        LapSummary {
            sup_norm: self.sup_norm,
            p: self.p,
            box_stability: self.box_stability,
            verdict: self.verdict,
            im_floor: self.im_floor,
            level_spacing: self.level_spacing,
        }
    }
}

/// Least-squares slope of log(norm) against −log(Im z).
fn exponent_fit(ims: &[f64], norms: &[f64]) -> f64 {
    let xs: Vec<f64> = ims.iter().map(|t| -t.ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn count_in(h: &OperatorMatrix, lo: f64, hi: f64) -> usize {
    match h.as_tridiag() {
        Some(t) => {
            let (s, _) = t.real_form();
            s.count_below(hi) - s.count_below(lo)
        }
        None => eigenpairs_in(h, lo, hi).0.len(),
    }
}

struct PreparedBox {
    length: f64,
    engine: ResolventEngine,
    count: usize,
    spacing: f64,
    floor: f64,
}

fn prepare_box<F>(factory: &F, spec: &LapScanSpec, length: f64) -> Result<PreparedBox>
where
    F: Fn(&Grid1D) -> Result<OperatorMatrix> + Sync,
{
    let grid = Grid1D::with_step(GridKind::Line, length, spec.step)?;
    let h = factory(&grid)?;
    let w = match spec.weight_kind {
        WeightKind::Position => build_weight(&grid, spec.s, None)?,
        WeightKind::ConjugateA => {
            ensure(grid.n <= 4000, "box_list", "n <= 4000 for conjugate_A weights", grid.n)?;
            build_weight(&grid, spec.s, Some(&build_conjugate_a(&grid)?))?
        }
    };
    let count = count_in(&h, spec.lo, spec.hi);
    let spacing = (spec.hi - spec.lo) / count.max(1) as f64;
    Ok(PreparedBox { length, engine: ResolventEngine::new(&h, &w)?, count, spacing, floor: 10.0 * spacing })
}

/// Weighted resolvent norms over the (Re z, Im z) grid for every box, with
/// Im z restricted to the rungs at or above ten mean level spacings.
pub fn lap_scan<F>(factory: F, spec: &LapScanSpec) -> Result<LapScanResult>
where
    F: Fn(&Grid1D) -> Result<OperatorMatrix> + Sync,
{
    spec.validate()?;
    let mut lengths = spec.box_list.clone();
    lengths.sort_by(f64::total_cmp);
    let boxes: Vec<PreparedBox> =
        lengths.par_iter().map(|&l| prepare_box(&factory, spec, l)).collect::<Result<Vec<_>>>()?;
    let res = spec.re_values();
    let mut tasks = Vec::new();
    for (b, pb) in boxes.iter().enumerate() {
        let admissible: Vec<f64> = spec.im_ladder.iter().copied().filter(|&t| t >= pb.floor).collect();
        ensure(
            admissible.len() >= 2,
            "im_ladder",
            "at least 2 rungs above 10x the level spacing",
            format!("floor {:.3e} on box {}", pb.floor, pb.length),
        )?;
        for &re in &res {
            for &im in &admissible {
                tasks.push((b, re, im));
            }
        }
    }
    let norms: Vec<f64> = tasks
        .par_iter()
        .map(|&(b, re, im)| boxes[b].engine.norm(C64::new(re, im)))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<LapPoint> = tasks
        .iter()
        .zip(&norms)
        .map(|(&(b, re, im), &norm)| LapPoint { re, im, box_length: boxes[b].length, norm })
        .collect();

    let mut scans = Vec::new();
    for pb in &boxes {
        let mine: Vec<&LapPoint> = points.iter().filter(|p| p.box_length == pb.length).collect();
        let sup = mine.iter().map(|p| p.norm).fold(0.0, f64::max);
        let p_per_re: Vec<f64> = res
            .iter()
            .map(|&re| {
                let col: Vec<&&LapPoint> = mine.iter().filter(|p| p.re == re).collect();
                let tail = &col[col.len().saturating_sub(FIT_RUNGS)..];
                let ims: Vec<f64> = tail.iter().map(|p| p.im).collect();
                let ns: Vec<f64> = tail.iter().map(|p| p.norm).collect();
                exponent_fit(&ims, &ns)
            })
            .collect();
        let p = p_per_re.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        scans.push(BoxScan {
            box_length: pb.length,
            eigenvalues_in_interval: pb.count,
            level_spacing: pb.spacing,
            im_floor: pb.floor,
            sup_norm: sup,
            p_per_re,
            p,
        });
    }
    let big = &boxes[boxes.len() - 1];
    let small = &boxes[boxes.len() - 2];
    let shared_floor = big.floor.max(small.floor);
    let shared_sup = |len: f64| {
        points
            .iter()
            .filter(|p| p.box_length == len && p.im >= shared_floor)
            .map(|p| p.norm)
            .fold(0.0, f64::max)
    };
    let sup_big = shared_sup(big.length);
    let sup_small = shared_sup(small.length);
    let box_stability = (sup_big - sup_small).abs() / sup_big;
    let last = &scans[scans.len() - 1];
    let box_verdicts = scans.iter().map(|s| LapVerdict::from_fit(s.p, box_stability)).collect();
    Ok(LapScanResult {
        sup_norm: last.sup_norm,
        p: last.p,
        box_stability,
        verdict: LapVerdict::from_fit(last.p, box_stability),
        box_verdicts,
        im_floor: last.im_floor,
        level_spacing: last.level_spacing,
        boxes: scans,
        points,
    })
}

/// [`lap_scan`] for H₀ + V with V discretized by cell means.
pub fn lap_scan_potential(v: &PotentialSpec, spec: &LapScanSpec) -> Result<LapScanResult> {
    v.validate()?;
    lap_scan(|g| build_schrodinger_averaged(g, v, None), spec)
}

pub fn write_lap_csv<W: Write>(result: &LapScanResult, mut out: W) -> Result<()> {
    writeln!(out, "re_z,im_z,box_L,norm")?;
    for p in &result.points {
        writeln!(out, "{},{},{},{}", p.re, p.im, p.box_length, p.norm)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MourreMode {
    Plain,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MourreKind {
    Plain,
    Strict,
    Weighted,
    AtInfinity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MourreCheckResult {
    pub window: (f64, f64),
    pub window_dim: usize,
    pub commutator_form_min_eig: f64,
    pub commutator_form_max_eig: f64,
    /// +∞ when the window holds no spectrum (or everything was deflated).
    pub best_c: f64,
    pub remainder_rank: usize,
    pub kind: MourreKind,
}

impl MourreCheckResult {
    fn from_form(form: &DMatrix<C64>, window: (f64, f64), deflate: usize, kind: MourreKind) -> Self {
        let dim = form.nrows();
        if dim == 0 {
            return MourreCheckResult {
                window,
                window_dim: 0,
                commutator_form_min_eig: f64::INFINITY,
                commutator_form_max_eig: f64::NEG_INFINITY,
                best_c: f64::INFINITY,
                remainder_rank: 0,
                kind,
            };
        }
        let (mu, _) = hermitian_eigen(form);
        let rank = deflate.min(dim);
        MourreCheckResult {
            window,
            window_dim: dim,
            commutator_form_min_eig: mu[0],
            commutator_form_max_eig: mu[dim - 1],
            best_c: if rank == dim { f64::INFINITY } else { mu[rank] },
            remainder_rank: rank,
            kind,
        }
    }

    /// Best constant relative to the weighted check's tolerance.
    pub fn weighted_holds(&self) -> bool {
        self.best_c >= -WEIGHTED_TOL
    }
}

pub const WEIGHTED_TOL: f64 = 1e-6;

fn hermitize(m: DMatrix<C64>) -> DMatrix<C64> {
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// E_J(H)[H, iA]E_J(H) on the range of E_J; strict mode reports its smallest
/// eigenvalue, plain mode the one after discarding `rank_budget` lowest.
pub fn mourre_check(
    h: &OperatorMatrix,
    a: &OperatorMatrix,
    lo: f64,
    hi: f64,
    mode: MourreMode,
    rank_budget: usize,
) -> Result<MourreCheckResult> {
    ensure(lo < hi, "window", "a < b", format!("[{lo}, {hi}]"))?;
    ensure(a.dim() == h.dim(), "A", "dim A = dim H", a.dim())?;
    let (_, v) = eigenpairs_in(h, lo, hi);
    let k = v.ncols();
    let cv: Vec<Vec<C64>> = (0..k).map(|c| bulk_commutator_apply(h, a, &col(&v, c))).collect();
    let form = DMatrix::from_fn(k, k, |r, c| dot(&col(&v, r), &cv[c]));
    let (deflate, kind) = match mode {
        MourreMode::Strict => (0, MourreKind::Strict),
        MourreMode::Plain => (rank_budget, MourreKind::Plain),
    };
    Ok(MourreCheckResult::from_form(&hermitize(form), (lo, hi), deflate, kind))
}

const GL5_X: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const GL5_W: [f64; 5] = [0.236_926_885_056_189_1, 0.478_628_670_499_366_5, 0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1];

/// (φ(a) − φ(b))/(a − b) for φ = ψ with parameters (s, R, c); φ' on the diagonal.
pub fn psi_divided_difference(s: f64, r: f64, c: f64, a: f64, b: f64) -> f64 {
    let (ta, tb) = (a / r, b / r);
    let dt = tb - ta;
    let f = |t: f64| (1.0 + t * t).powf(-s);
    if dt == 0.0 {
        return c * f(ta);
    }
    let mean = if dt.abs() < 0.05 {
        let mid = 0.5 * (ta + tb);
        0.5 * GL5_X.iter().zip(&GL5_W).map(|(x, w)| w * f(mid + 0.5 * dt * x)).sum::<f64>()
    } else {
        bracket_segment(s, ta, tb) / dt
    };
    c * mean
}

/// E_J(H)([H, iφ(S)] − weight(S))E_J(H) on the window range. φ enters through
/// its divided differences `dd(a, b)` on the spectrum of S (the commutator is
/// the Hadamard product of U*[H, iS]U with that Loewner matrix); `weight`
/// is subtracted on the spectrum of S.
pub fn weighted_mourre_form<D, G>(
    h: &OperatorMatrix,
    s_op: &OperatorMatrix,
    lo: f64,
    hi: f64,
    dd: D,
    weight: G,
) -> Result<MourreCheckResult>
where
    D: Fn(f64, f64) -> f64 + Sync,
    G: Fn(f64) -> f64,
{
    ensure(lo < hi, "window", "a < b", format!("[{lo}, {hi}]"))?;
    ensure(s_op.dim() == h.dim(), "S", "dim S = dim H", s_op.dim())?;
    let defect = s_op.hermitian_defect();
    if defect > 1e-12 {
        return Err(Error::NotHermitian(defect));
    }
    let (_, v) = eigenpairs_in(h, lo, hi);
    if v.ncols() == 0 {
        return Ok(MourreCheckResult::from_form(&DMatrix::zeros(0, 0), (lo, hi), 0, MourreKind::Weighted));
    }
    let (sv, u) = hermitian_eigen(&s_op.to_dense());
    let n = sv.len();
    let c = bulk_commutator_dense(h, s_op);
    let ct = u.adjoint() * c * &u;
    let loewner: Vec<f64> = (0..n * n).into_par_iter().map(|i| dd(sv[i % n], sv[i / n])).collect();
    let mut m = DMatrix::from_fn(n, n, |r, cc| ct[(r, cc)] * loewner[r + cc * n]);
    for i in 0..n {
        m[(i, i)] -= C64::new(weight(sv[i]), 0.0);
    }
    let phi = u.adjoint() * v;
    let form = phi.adjoint() * m * phi;
    Ok(MourreCheckResult::from_form(&hermitize(form), (lo, hi), 0, MourreKind::Weighted))
}

/// Weighted estimate with φ = ψ and ⟨S⟩^{-2s} subtracted.
pub fn weighted_mourre_check(
    h: &OperatorMatrix,
    s_op: &OperatorMatrix,
    phi: &WeightFunctionSpec,
    lo: f64,
    hi: f64,
    s: f64,
) -> Result<MourreCheckResult> {
    phi.validate()?;
    let (ps, r, c) = match *phi {
        WeightFunctionSpec::Psi { s, r, c } => (s, r, c),
        _ => return Err(Error::invalid("phi", "phi = psi(s, R, c)", format!("{phi:?}"))),
    };
    ensure(s > 0.0, "s", "s > 0", s)?;
    weighted_mourre_form(
        h,
        s_op,
        lo,
        hi,
        |a, b| psi_divided_difference(ps, r, c, a, b),
        |t| bracket(t).powf(-2.0 * s),
    )
}

/// c with c·c′ = 2, c′ = 2·inf J.
pub fn psi_constant(lo: f64) -> f64 {
    1.0 / lo
}

/// LHS ⟨f, [H, iB_R] f⟩ and ‖χ_R(Q)⟨Q⟩^{-s} f‖ for one state.
pub fn at_infinity_terms(h: &OperatorMatrix, b: &OperatorMatrix, grid: &Grid1D, r: f64, s: f64, f: &[C64]) -> (f64, f64) {
    let cf = bulk_commutator_apply(h, b, f);
    let lhs = dot(f, &cf).re;
    let rhs: f64 = grid
        .points()
        .iter()
        .zip(f)
        .map(|(&x, z)| (chi_shoulder(x.abs() / r) * bracket(x).powf(-s)).powi(2) * z.norm_sqr())
        .sum();
    (lhs, rhs.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtInfinityRow {
    pub r: f64,
    /// min over trials of LHS / X².
    pub c1: f64,
    pub median_ratio: f64,
    /// max over trials of (c_ref X² − LHS)₊ / X, c_ref = half the smallest
    /// median ratio over all radii.
    pub error_scale: f64,
    pub min_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtInfinityReport {
    pub window: (f64, f64),
    pub delta: f64,
    pub s: f64,
    pub gamma: f64,
    pub trials: usize,
    pub rows: Vec<AtInfinityRow>,
    pub c1: f64,
    pub holds: bool,
    pub error_decays: bool,
}

pub const DEFAULT_TRIALS: usize = 64;

/// Lower bound for [H, iB_R] tested on random states E_J(H)g with Gaussian
/// coefficients in the window eigenbasis.
#[allow(clippy::too_many_arguments)]
pub fn mourre_at_infinity_check(
    h: &OperatorMatrix,
    grid: &Grid1D,
    radii: &[f64],
    delta: f64,
    s: f64,
    gamma: f64,
    lo: f64,
    hi: f64,
    trials: usize,
    seed: u64,
) -> Result<AtInfinityReport> {
    ensure(gamma > 0.5, "gamma", "gamma = beta - delta > 1/2", gamma)?;
    ensure(trials >= 1, "trials", "trials >= 1", trials)?;
    ensure(!radii.is_empty(), "R", "at least one R", 0)?;
    ensure(lo < hi, "window", "a < b", format!("[{lo}, {hi}]"))?;
    let (_, v) = eigenpairs_in(h, lo, hi);
    let k = v.ncols();
    ensure(k > 0, "window", "window holds spectrum", format!("[{lo}, {hi}]"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<Vec<C64>> = (0..trials)
        .map(|_| {
            let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut f = vec![ZERO; grid.n];
            for (c, gc) in g.iter().enumerate() {
                for (i, fi) in f.iter_mut().enumerate() {
                    *fi += v[(i, c)] * *gc;
                }
            }
            let nrm = dot(&f, &f).re.sqrt();
            f.into_iter().map(|z| z / nrm).collect()
        })
        .collect();
    let mut per_radius = Vec::new();
    for &r in radii {
        let b = build_b_r(grid, r, delta)?;
        let terms: Vec<(f64, f64)> = states.par_iter().map(|f| at_infinity_terms(h, &b, grid, r, s, f)).collect();
        per_radius.push(terms);
    }
    let medians: Vec<f64> = per_radius
        .iter()
        .map(|terms| {
            let mut ratios: Vec<f64> = terms.iter().map(|(l, x)| l / (x * x)).collect();
            ratios.sort_by(f64::total_cmp);
            ratios[ratios.len() / 2]
        })
        .collect();
    let c_ref = 0.5 * medians.iter().copied().fold(f64::INFINITY, f64::min);
    let rows: Vec<AtInfinityRow> = radii
        .iter()
        .zip(&per_radius)
        .zip(&medians)
        .map(|((&r, terms), &median)| AtInfinityRow {
            r,
            c1: terms.iter().map(|(l, x)| l / (x * x)).fold(f64::INFINITY, f64::min),
            median_ratio: median,
            error_scale: terms.iter().map(|(l, x)| (c_ref * x * x - l).max(0.0) / x).fold(0.0, f64::max),
            min_x: terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min),
        })
        .collect();
    let c1 = rows.iter().map(|r| r.c1).fold(f64::INFINITY, f64::min);
    let error_decays = rows.windows(2).all(|w| w[1].error_scale <= w[0].error_scale + 1e-12);
    Ok(AtInfinityReport {
        window: (lo, hi),
        delta,
        s,
        gamma,
        trials,
        rows,
        c1,
        holds: c1 > 0.0,
        error_decays,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// LAP with ⟨A⟩ weights by a Mourre estimate with A, at all positive energies.
    Blue,
    /// LAP with ⟨Q⟩ weights below k²/4.
    Green,
    /// Not covered.
    Uncovered,
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::Blue => "blue",
            Region::Green => "green",
            Region::Uncovered => "red",
        }
    }

    pub fn covered(&self) -> bool {
        !matches!(self, Region::Uncovered)
    }
}

/// Region of the (α, β) plane: green is the closed triangle with corners
/// (1, 1/2), (1, 1), (3/2, 1/2); blue lies above β = α for α < 1 and above
/// α + β = 2 for α ≥ 1, plus β > 1.
pub fn coverage_region(alpha: f64, beta: f64) -> Region {
    const EPS: f64 = 1e-12;
    if alpha <= 0.0 || beta <= 0.0 {
        return Region::Uncovered;
    }
    if alpha >= 1.0 - EPS && beta >= 0.5 - EPS && alpha + beta <= 2.0 + EPS {
        return Region::Green;
    }
    let blue = if alpha < 1.0 { beta > alpha } else { alpha + beta > 2.0 };
    if blue || beta > 1.0 {
        Region::Blue
    } else {
        Region::Uncovered
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellVerdict {
    LapHolds,
    LapFails,
    Inconclusive,
    /// A genuine eigenvalue sits in the window; the scan is not run.
    PointSpectrum,
    Skipped,
}

impl CellVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            CellVerdict::LapHolds => "lap_holds",
            CellVerdict::LapFails => "lap_fails",
            CellVerdict::Inconclusive => "inconclusive",
            CellVerdict::PointSpectrum => "point_spectrum",
            CellVerdict::Skipped => "skipped",
        }
    }
}

impl From<LapVerdict> for CellVerdict {
    fn from(v: LapVerdict) -> Self {
        match v {
            LapVerdict::LapHolds => CellVerdict::LapHolds,
            LapVerdict::LapFails => CellVerdict::LapFails,
            LapVerdict::Inconclusive => CellVerdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweepSpec {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub k: f64,
    pub w: f64,
    pub below: (f64, f64),
    pub above: (f64, f64),
    /// Amplitude of a Gaussian short-range term added to every cell; 0 for none.
    #[serde(default)]
    pub short_range_amplitude: f64,
    pub s: f64,
    pub re_points: usize,
    pub im_ladder: Vec<f64>,
    pub box_list: Vec<f64>,
    pub step: f64,
    /// Boxes and spacing of the eigenvalue screen (smaller than the scan boxes).
    pub screen_box_list: Vec<f64>,
    pub screen_step: f64,
    /// Cells beyond this count are reported as skipped.
    pub max_cells: usize,
}

impl PhaseSweepSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(!self.alphas.is_empty() && !self.betas.is_empty(), "alphas", "nonempty alpha and beta lists", 0)?;
        let threshold = self.k * self.k / 4.0;
        ensure(
            self.below.0 > 0.0 && self.below.0 < self.below.1 && self.below.1 < threshold,
            "below",
            "below window inside (0, k^2/4)",
            format!("{:?}", self.below),
        )?;
        ensure(
            self.above.0 > threshold && self.above.0 < self.above.1,
            "above",
            "above window inside (k^2/4, inf)",
            format!("{:?}", self.above),
        )?;
        for &a in &self.alphas {
            for &b in &self.betas {
                OscillatingSpec::new(self.w, self.k, a, b).validate()?;
            }
        }
        self.window_spec(self.below).validate()
    }

    fn window_spec(&self, (lo, hi): (f64, f64)) -> LapScanSpec {
        LapScanSpec {
            lo,
            hi,
            s: self.s,
            weight_kind: WeightKind::Position,
            re_points: self.re_points,
            im_ladder: self.im_ladder.clone(),
            box_list: self.box_list.clone(),
            step: self.step,
        }
    }

    pub fn potential(&self, alpha: f64, beta: f64) -> PotentialSpec {
        let osc = PotentialSpec::Oscillating(OscillatingSpec::new(self.w, self.k, alpha, beta));
        if self.short_range_amplitude == 0.0 {
            osc
        } else {
            PotentialSpec::Sum { terms: vec![osc, PotentialSpec::gaussian_short_range(self.short_range_amplitude)] }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOutcome {
    pub verdict: CellVerdict,
    pub summary: Option<LapSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagramCell {
    pub alpha: f64,
    pub beta: f64,
    pub region: Region,
    pub genuine_eigenvalues: Vec<f64>,
    pub below: WindowOutcome,
    pub above: WindowOutcome,
}

fn run_window(v: &PotentialSpec, spec: &LapScanSpec, eigen: &[f64]) -> Result<WindowOutcome> {
    if eigen.iter().any(|&e| e >= spec.lo && e <= spec.hi) {
        return Ok(WindowOutcome { verdict: CellVerdict::PointSpectrum, summary: None });
    }
    let r = lap_scan_potential(v, spec)?;
    Ok(WindowOutcome { verdict: r.verdict.into(), summary: Some(r.summary()) })
}

/// Eigenvalue screen then LAP scans below and above k²/4 for every (α, β).
pub fn phase_sweep(spec: &PhaseSweepSpec) -> Result<Vec<PhaseDiagramCell>> {
    spec.validate()?;
    let mut cells = Vec::new();
    for &beta in &spec.betas {
        for &alpha in &spec.alphas {
            let region = coverage_region(alpha, beta);
            if cells.len() >= spec.max_cells {
                let skipped = WindowOutcome { verdict: CellVerdict::Skipped, summary: None };
                cells.push(PhaseDiagramCell {
                    alpha,
                    beta,
                    region,
                    genuine_eigenvalues: Vec::new(),
                    below: skipped.clone(),
                    above: skipped,
                });
                continue;
            }
            let v = spec.potential(alpha, beta);
            let search = EmbeddedSearch::new(spec.below.0, spec.above.1, spec.screen_step);
            let found = find_embedded(|g| build_schrodinger_averaged(g, &v, None), &search, &spec.screen_box_list)?;
            let eigen: Vec<f64> = found.iter().filter(|c| c.verdict == Verdict::Genuine).map(|c| c.energy).collect();
            let below = run_window(&v, &spec.window_spec(spec.below), &eigen)?;
            let above = run_window(&v, &spec.window_spec(spec.above), &eigen)?;
            cells.push(PhaseDiagramCell { alpha, beta, region, genuine_eigenvalues: eigen, below, above });
        }
    }
    Ok(cells)
}

pub fn write_phase_csv<W: Write>(cells: &[PhaseDiagramCell], mut out: W) -> Result<()> {
    writeln!(out, "alpha,beta,window,verdict")?;
    for c in cells {
        writeln!(out, "{},{},below,{}", c.alpha, c.beta, c.below.verdict.label())?;
        writeln!(out, "{},{},above,{}", c.alpha, c.beta, c.above.verdict.label())?;
    }
    Ok(())
}

fn verdict_color(v: CellVerdict) -> &'static str {
    match v {
        CellVerdict::LapHolds => "#2e7d32",
        CellVerdict::LapFails => "#c62828",
        CellVerdict::Inconclusive => "#f9a825",
        CellVerdict::PointSpectrum => "#6a1b9a",
        CellVerdict::Skipped => "#9e9e9e",
    }
}

/// Self-contained SVG: the region boundaries in the (α, β) plane with one
/// marker per cell, filled by the below-threshold verdict and outlined by
/// the above-threshold one.
pub fn render_phase_svg(cells: &[PhaseDiagramCell]) -> String {
    let (w, h) = (560.0, 400.0);
    let (x0, y0, sx, sy) = (50.0, 350.0, 150.0, 150.0);
    let px = |a: f64| x0 + sx * a;
    let py = |b: f64| y0 - sy * b;
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let line = |s: &mut String, a0: f64, b0: f64, a1: f64, b1: f64, color: &str| {
        s.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            px(a0),
            py(b0),
            px(a1),
            py(b1)
        ));
    };
    line(&mut s, 0.0, 0.0, 3.3, 0.0, "black");
    line(&mut s, 0.0, 0.0, 0.0, 2.2, "black");
    line(&mut s, 0.0, 0.0, 1.0, 1.0, "red");
    line(&mut s, 1.0, 0.5, 1.5, 0.5, "red");
    line(&mut s, 1.5, 0.5, 2.0, 0.0, "red");
    line(&mut s, 1.0, 0.5, 1.0, 1.0, "green");
    line(&mut s, 1.0, 1.0, 1.5, 0.5, "blue");
    for (a, lbl) in [(1.0, "1"), (2.0, "2"), (3.0, "3")] {
        s.push_str(&format!("<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{lbl}</text>\n", px(a) - 3.0, py(0.0) + 16.0));
    }
    for (b, lbl) in [(0.5, "1/2"), (1.0, "1"), (2.0, "2")] {
        s.push_str(&format!("<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{lbl}</text>\n", px(0.0) - 30.0, py(b) + 4.0));
    }
    s.push_str(&format!("<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\">alpha</text>\n", px(3.3) - 20.0, py(0.0) + 32.0));
    s.push_str(&format!("<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\">beta</text>\n", px(0.0) + 6.0, py(2.2) + 4.0));
    for c in cells {
        s.push_str(&format!(
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"7\" fill=\"{}\" stroke=\"{}\" stroke-width=\"3\"><title>alpha={} beta={} region={} below={} above={}</title></circle>\n",
            px(c.alpha),
            py(c.beta),
            verdict_color(c.below.verdict),
            verdict_color(c.above.verdict),
            c.alpha,
            c.beta,
            c.region.label(),
            c.below.verdict.label(),
            c.above.verdict.label()
        ));
    }
    s.push_str("</svg>\n");
    s
}
