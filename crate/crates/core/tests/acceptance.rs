//! Acceptance suite. Every test prints one `C<n> PASS|FAIL` line with the
//! measured quantities and its wall time. Run with
//! `cargo test -p oscilab-core --test acceptance -- --nocapture --test-threads 1`.
//!
//! Criteria listed in `KNOWN_FAILURES` print FAIL and then assert the
//! recorded failure mode instead of passing silently.

use std::time::Instant;

use oscilab::construct::*;
use oscilab::discretize::*;
use oscilab::grid::*;
use oscilab::lap::*;
use oscilab::potentials::*;
use oscilab::spectral::*;
use oscilab::Error;

const KNOWN_FAILURES: &[u32] = &[5, 12];

fn report(id: u32, pass: bool, detail: &str, start: Instant, budget_s: f64) {
    let secs = start.elapsed().as_secs_f64();
    let within = secs <= budget_s;
    let status = if pass && within { "PASS" } else { "FAIL" };
    println!("C{id} {status} {detail} time={secs:.2}s budget={budget_s}s");
    if KNOWN_FAILURES.contains(&id) {
        assert!(!pass, "C{id} is listed as a known failure but passed; update the list");
    } else {
        assert!(pass, "C{id} failed: {detail}");
    }
}

fn osc(w: f64, k: f64, alpha: f64, beta: f64) -> PotentialSpec {
    PotentialSpec::Oscillating(OscillatingSpec::new(w, k, alpha, beta))
}

fn with_short_range(v: PotentialSpec) -> PotentialSpec {
    PotentialSpec::Sum { terms: vec![v, PotentialSpec::gaussian_short_range(1.0)] }
}

#[test]
fn c01_wvn_identity() {
    let t = Instant::now();
    let res = verify_wvn_1d(50.0, 1e-3).unwrap();
    report(1, res < 1e-9, &format!("residual={res:.3e} tol=1e-9"), t, 1.0);
}

#[test]
fn c02_wvn_embedded_eigenvalue() {
    let t = Instant::now();
    let v = PotentialSpec::WignerVonNeumann1d;
    let search = EmbeddedSearch::new(0.9, 1.1, 0.05);
    let found = find_embedded(|g| build_schrodinger(g, &v, None), &search, &[200.0, 400.0]).unwrap();
    let genuine: Vec<&EmbeddedCandidate> = found.iter().filter(|c| c.verdict == Verdict::Genuine).collect();
    let pass = genuine.len() == 1
        && (genuine[0].energy - 1.0).abs() <= 1e-2
        && genuine[0].localization >= 0.99
        && genuine[0].box_drift <= 5e-3;
    let detail = match genuine.first() {
        Some(c) => format!(
            "genuine={} E={:.6} loc={:.5} drift={:.2e}",
            genuine.len(),
            c.energy,
            c.localization,
            c.box_drift
        ),
        None => "genuine=0".to_string(),
    };
    report(2, pass, &detail, t, 120.0);
}

#[test]
fn c03_wvn_3d_radial() {
    let t = Instant::now();
    let res = verify_wvn_3d(50.0, 1e-3).unwrap();
    report(3, res < 1e-9, &format!("residual={res:.3e} tol=1e-9"), t, 1.0);
}

#[test]
fn c04_dirac_construction() {
    let t = Instant::now();
    let g = dirac_grid(200.0, 1e-2).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda in [1.5, -1.5] {
        let c = dirac_solve_potential(&DiracChannelSpec::new(1.0, lambda, 1, 1.0), &g).unwrap();
        let res = dirac_residual(&c);
        let lim = dirac_check_limits(&c);
        let finite = lim.phi_sc_at_zero.is_finite() && lim.phi_am_at_zero.is_finite();
        let sc_far = max_abs_between(&c.r, &c.phi_sc, 100.0, 200.0);
        let sc_mid = max_abs_between(&c.r, &c.phi_sc, 50.0, 100.0);
        let am_far = max_abs_between(&c.r, &c.phi_am, 100.0, 200.0);
        let am_mid = max_abs_between(&c.r, &c.phi_am, 50.0, 100.0);
        pass &= res < 1e-8 && finite && sc_far < sc_mid && am_far < am_mid;
        parts.push(format!(
            "lambda={lambda}: residual={res:.2e} phi_sc(0)={:.4} phi_am(0)={:.4} sc {sc_far:.2e}<{sc_mid:.2e} am {am_far:.2e}<{am_mid:.2e}",
            lim.phi_sc_at_zero, lim.phi_am_at_zero
        ));
    }
    report(4, pass, &parts.join("; "), t, 30.0);
}

#[test]
fn c05_kg_construction() {
    let t = Instant::now();
    let lambda = kg_lambda(1.0);
    let lambda_ok = (lambda - (2f64.sqrt() - 1.0)).abs() <= 1e-12;
    let grid = Grid1D::periodic(200.0, 6400).unwrap();
    match kg_construct(1.0, &grid) {
        Ok(c) => {
            let pass = lambda_ok && c.residual_max < 1e-6 && c.decay_constant.is_finite();
            report(
                5,
                pass,
                &format!(
                    "lambda={lambda:.15} residual={:.2e} decay_constant={:.3}",
                    c.residual_max, c.decay_constant
                ),
                t,
                60.0,
            );
        }
        Err(e) => {
            let singular = matches!(e, Error::Singular(_));
            report(5, false, &format!("lambda={lambda:.15} lambda_ok={lambda_ok} construction: {e}"), t, 60.0);
            assert!(singular && lambda_ok, "unexpected failure mode: {e}");
        }
    }
}

#[test]
fn c06_interference_threshold() {
    let t = Instant::now();
    let probe = InterferenceProbe { k: 2.0, length: 400.0, step: 0.1, dim: 3 };
    let radii = [10.0, 20.0, 40.0, 80.0, 160.0];
    let below = WindowSpec::smooth(0.3, 0.8, 0.05);
    let above = WindowSpec::smooth(1.2, 1.7, 0.05);
    let rb = interference_tails(&probe, &below, &radii, 1.0).unwrap();
    let ra = interference_tails(&probe, &above, &radii, 1.0).unwrap();
    let sb = interference_symbol_check(&below, 2.0, 3).unwrap();
    let sa = interference_symbol_check(&above, 2.0, 3).unwrap();
    let first = rb.tail_norms[0];
    let last = rb.tail_norms[rb.tail_norms.len() - 1];
    let pass = rb.verdict == TailVerdict::DecaysToZero
        && last <= 0.1 * first
        && ra.verdict == TailVerdict::Plateaus
        && ra.plateau_estimate > 0.05 * ra.full_norm
        && sb == 0.0
        && sa > 0.0;
    report(
        6,
        pass,
        &format!(
            "below {:?} last/first={:.3} symbol={sb}; above {:?} plateau/norm={:.3} symbol={sa:.3}",
            rb.verdict,
            last / first,
            ra.verdict,
            ra.plateau_estimate / ra.full_norm
        ),
        t,
        120.0,
    );
}

#[test]
fn c07_compactness_probe() {
    let t = Instant::now();
    let grid = Grid1D::periodic(40.0, 8192).unwrap();
    let radii = [2.0, 4.0, 8.0, 16.0, 32.0];
    let fast = CompactnessProbe { p: 1.0, alpha: 2.0, k: 1.0, l1: 2.0, l2: 2.0 };
    let flat = CompactnessProbe { alpha: 1.0, ..fast };
    let rf = oscillation_compactness_probe(&grid, &fast, &radii).unwrap();
    let rl = oscillation_compactness_probe(&grid, &flat, &radii).unwrap();
    let pass = rf.verdict == TailVerdict::DecaysToZero && rl.verdict == TailVerdict::Plateaus;
    report(
        7,
        pass,
        &format!(
            "alpha=2 {:?} tails={:.2e}..{:.2e}; alpha=1 {:?} plateau={:.3e}",
            rf.verdict,
            rf.tail_norms[0],
            rf.tail_norms[radii.len() - 1],
            rl.verdict,
            rl.plateau_estimate
        ),
        t,
        120.0,
    );
}

#[test]
fn c08_no_positive_eigenvalues() {
    let t = Instant::now();
    let v = with_short_range(osc(3.0, 2.0, 2.0, 1.0));
    let search = EmbeddedSearch::new(0.2, 2.0, 0.05);
    let found = find_embedded(|g| build_schrodinger_averaged(g, &v, None), &search, &[200.0, 400.0]).unwrap();
    let genuine = found.iter().filter(|c| c.verdict == Verdict::Genuine).count();
    let max_loc = found.iter().map(|c| c.localization).fold(0.0, f64::max);
    report(
        8,
        genuine == 0,
        &format!("candidates={} genuine={genuine} max_localization={max_loc:.3}", found.len()),
        t,
        120.0,
    );
}

#[test]
fn c09_mourre_law() {
    let t = Instant::now();
    let g = Grid1D::with_step(GridKind::Line, 200.0, 0.01).unwrap();
    let h0 = build_h0(&g);
    let a = build_conjugate_a(&g).unwrap();
    let es = [0.5, 1.0, 1.5];
    let cs: Vec<f64> = es
        .iter()
        .map(|&e| mourre_check(&h0, &a, e - 0.1, e + 0.1, MourreMode::Strict, 0).unwrap().best_c)
        .collect();
    let mean_e = es.iter().sum::<f64>() / 3.0;
    let mean_c = cs.iter().sum::<f64>() / 3.0;
    let num: f64 = es.iter().zip(&cs).map(|(e, c)| (e - mean_e) * (c - mean_c)).sum();
    let den: f64 = es.iter().map(|e| (e - mean_e).powi(2)).sum();
    let slope = num / den;
    report(9, (slope - 2.0).abs() <= 0.2, &format!("best_c={cs:.4?} slope={slope:.4}"), t, 60.0);
}

#[test]
fn c10_weighted_mourre() {
    let t = Instant::now();
    let g = Grid1D::with_step(GridKind::Line, 30.0, 0.1).unwrap();
    let h0 = build_h0(&g);
    let a = build_conjugate_a(&g).unwrap();
    let (lo, hi, s) = (0.5, 1.0, 0.51);
    let c = psi_constant(lo);
    let mut mins = Vec::new();
    for r in [1.0, 4.0, 16.0, 64.0] {
        let res = weighted_mourre_check(&h0, &a, &WeightFunctionSpec::Psi { s, r, c }, lo, hi, s).unwrap();
        mins.push(res.best_c);
    }
    let monotone = mins.windows(2).all(|w| w[1] >= w[0]);
    let pass = monotone && mins[3] >= -1e-6;
    report(10, pass, &format!("R=[1,4,16,64] min_eig={mins:.4?}"), t, 120.0);
}

#[test]
fn c11_lap_controls() {
    let t = Instant::now();
    let mut spec = LapScanSpec {
        lo: 0.5,
        hi: 1.5,
        s: 0.51,
        weight_kind: WeightKind::Position,
        re_points: 5,
        im_ladder: LapScanSpec::geometric_ladder(0.1, 1e-4, 20),
        box_list: vec![3e4, 6e4],
        step: 0.25,
    };
    let weighted = lap_scan_potential(&PotentialSpec::zero(), &spec).unwrap();
    spec.s = 0.0;
    let bare = lap_scan_potential(&PotentialSpec::zero(), &spec).unwrap();
    let box_stable = weighted.box_verdicts.windows(2).all(|w| w[0] == w[1]);
    let pass = weighted.verdict == LapVerdict::LapHolds
        && weighted.p <= P_HOLDS
        && box_stable
        && bare.verdict == LapVerdict::LapFails
        && (bare.p - 1.0).abs() <= 0.05;
    report(
        11,
        pass,
        &format!(
            "s=0.51 p={:.3} boxes={:?} {}; s=0 p={:.3} {}; im_floor={:.2e}",
            weighted.p,
            weighted.box_verdicts.iter().map(|v| v.label()).collect::<Vec<_>>(),
            weighted.verdict.label(),
            bare.p,
            bare.verdict.label(),
            weighted.im_floor
        ),
        t,
        120.0,
    );
}

fn c12_windows(v: &PotentialSpec, base: &LapScanSpec) -> (bool, Vec<String>) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (lo, hi) in [(0.3, 0.8), (1.2, 2.0)] {
        let spec = LapScanSpec { lo, hi, ..base.clone() };
        let r = lap_scan_potential(v, &spec).unwrap();
        let stable = r.box_verdicts.windows(2).all(|w| w[0] == w[1]);
        ok &= r.verdict == LapVerdict::LapHolds && stable;
        parts.push(format!(
            "[{lo},{hi}] p={:.3} boxes={:?} im_floor={:.2e} {}",
            r.p,
            r.box_verdicts.iter().map(|v| v.label()).collect::<Vec<_>>(),
            r.im_floor,
            r.verdict.label()
        ));
    }
    (ok, parts)
}

#[test]
fn c12_lap_w11() {
    let t = Instant::now();
    let v = with_short_range(osc(3.0, 2.0, 1.0, 1.0));
    let stated = LapScanSpec {
        lo: 0.0,
        hi: 1.0,
        s: 1.0,
        weight_kind: WeightKind::Position,
        re_points: 5,
        im_ladder: LapScanSpec::geometric_ladder(1.0, 1e-3, 13),
        box_list: vec![200.0, 400.0],
        step: 0.05,
    };
    let (pass, parts) = c12_windows(&v, &stated);
    let large = LapScanSpec {
        s: 0.75,
        re_points: 3,
        im_ladder: LapScanSpec::geometric_ladder(0.1, 1e-4, 16),
        box_list: vec![1e4, 2e4],
        step: 0.25,
        ..stated.clone()
    };
    let (large_pass, large_parts) = c12_windows(&v, &large);
    println!("C12 supplementary L=[1e4,2e4] s=0.75 holds={large_pass}: {}", large_parts.join("; "));
    report(12, pass, &format!("L=[200,400] s=1: {}", parts.join("; ")), t, 300.0);
    assert!(large_pass, "large-box supplementary scan no longer holds");
}

fn c13_spec() -> PhaseSweepSpec {
    PhaseSweepSpec {
        alphas: vec![1.0, 1.5, 2.0],
        betas: vec![0.6, 0.75, 1.0],
        k: 2.0,
        w: 3.0,
        below: (0.3, 0.8),
        above: (1.2, 2.0),
        short_range_amplitude: 1.0,
        s: 0.75,
        re_points: 3,
        im_ladder: LapScanSpec::geometric_ladder(0.1, 1e-4, 16),
        box_list: vec![1e4, 2e4],
        step: 0.25,
        screen_box_list: vec![100.0, 200.0],
        screen_step: 0.05,
        max_cells: 9,
    }
}

#[test]
fn c13_phase_diagram() {
    let t = Instant::now();
    let spec = c13_spec();
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let cells = phase_sweep(&spec).unwrap();
        let csv = dir.path().join(format!("phase_{tag}.csv"));
        let svg = dir.path().join(format!("phase_{tag}.svg"));
        write_phase_csv(&cells, std::fs::File::create(&csv).unwrap()).unwrap();
        std::fs::write(&svg, render_phase_svg(&cells)).unwrap();
        (cells, std::fs::read(&csv).unwrap(), std::fs::read(&svg).unwrap())
    };
    let (cells, csv1, svg1) = run("a");
    let (_, csv2, svg2) = run("b");
    let required = [(1.0, 1.0), (2.0, 0.75), (1.5, 0.6)];
    let covers = required.iter().all(|&(a, b)| cells.iter().any(|c| c.alpha == a && c.beta == b));
    let mut ok = covers && csv1 == csv2 && svg1 == svg2 && !csv1.is_empty() && svg1.starts_with(b"<svg");
    let mut parts = Vec::new();
    for c in &cells {
        if c.region.covered() {
            ok &= c.below.verdict == CellVerdict::LapHolds;
        }
        parts.push(format!(
            "({},{}) {} below={} above={}",
            c.alpha,
            c.beta,
            c.region.label(),
            c.below.verdict.label(),
            c.above.verdict.label()
        ));
    }
    report(
        13,
        ok,
        &format!("deterministic={} cells: {}", csv1 == csv2 && svg1 == svg2, parts.join("; ")),
        t,
        1200.0,
    );
}

#[test]
fn c14_simon_bound() {
    let t = Instant::now();
    let rep = simon_envelope_check(&SimonSeriesSpec::demo(), &PiecewiseLinear::demo_envelope(), 1000.0, 10_000);
    report(
        14,
        rep.holds,
        &format!("points={} monotone={} max_ratio={:.4} at x={:.2}", rep.points, rep.envelope_monotone, rep.max_ratio, rep.worst_x),
        t,
        1.0,
    );
}
