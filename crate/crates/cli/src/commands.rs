//! Command parameter records and dispatch.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use oscilab::construct::*;
use oscilab::discretize::*;
use oscilab::grid::{Grid1D, GridKind};
use oscilab::lap::*;
use oscilab::potentials::{PotentialSpec, WeightFunctionSpec};
use oscilab::spectral::*;

use crate::error::CliError;
use crate::output::{Artifacts, LapDisclosure};

pub const COMMANDS: [(&str, &str); 8] = [
    ("verify-wvn", "Wigner-von Neumann identity -f''+Vf=f, line and 3D radial"),
    ("construct-dirac", "radial Dirac partial wave with an embedded eigenvalue, |lambda|>m"),
    ("construct-kg", "relativistic Schrodinger (sqrt(P^2+m^2)-m) embedded eigenvalue"),
    ("find-embedded", "eigenvalues of -d^2/dx^2+V in [a,b] sorted into genuine and box artifacts"),
    ("lap-scan", "weighted resolvent <Q>^-s (H-z)^-1 <Q>^-s as Im z -> 0"),
    ("mourre-check", "commutator E_J[H,iA]E_J: plain, strict, weighted psi(A), at infinity"),
    ("compactness-probe", "tails of <P>^-l1 <Q>^p sin(k|Q|^alpha) <P>^-l2"),
    ("phase-diagram", "(alpha,beta) sweep of W = w sin(k|x|^alpha)/|x|^beta below/above k^2/4"),
];

/// Fixed-width command table.
pub fn list_table() -> String {
    let mut out = format!("{:<18} {}\n", "command", "anchor");
    for (name, anchor) in COMMANDS {
        out.push_str(&format!("{name:<18} {anchor}\n"));
    }
    out
}

fn parse<T: DeserializeOwned>(command: &str, params: &Value) -> Result<T, CliError> {
    serde_json::from_value(params.clone())
        .map_err(|e| CliError::validation("params", &format!("params match the {command} schema"), e.to_string()))
}

fn check(cond: bool, name: &str, invariant: &str, value: impl ToString) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::validation(name, invariant, value))
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyWvnParams {
    #[serde(default = "one")]
    dim: usize,
    #[serde(default = "fifty")]
    x_max: f64,
    #[serde(default = "milli")]
    step: f64,
}

fn one() -> usize {
    1
}
fn fifty() -> f64 {
    50.0
}
fn milli() -> f64 {
    1e-3
}
fn stride_default() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiracParams {
    spec: DiracChannelSpec,
    r_max: f64,
    step: f64,
    #[serde(default = "stride_default")]
    stride: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KgParams {
    m: f64,
    half_length: f64,
    points: usize,
    #[serde(default = "stride_default")]
    stride: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FindEmbeddedParams {
    potential: PotentialSpec,
    search: EmbeddedSearch,
    box_list: Vec<f64>,
    /// Cell-averaged potential samples.
    #[serde(default)]
    averaged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LapParams {
    potential: PotentialSpec,
    scan: LapScanSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MourreModeParam {
    Plain,
    Strict,
    Weighted,
    AtInfinity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MourreParams {
    #[serde(default = "zero_potential")]
    potential: PotentialSpec,
    half_length: f64,
    step: f64,
    lo: f64,
    hi: f64,
    mode: MourreModeParam,
    #[serde(default)]
    rank_budget: usize,
    /// Weighted mode: ψ(A) weight and the exponent s of ⟨A⟩^{-2s}.
    #[serde(default)]
    weight: Option<WeightFunctionSpec>,
    #[serde(default)]
    s: Option<f64>,
    /// At-infinity mode.
    #[serde(default)]
    radii: Vec<f64>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default = "default_trials")]
    trials: usize,
}

fn zero_potential() -> PotentialSpec {
    PotentialSpec::zero()
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompactnessParams {
    half_length: f64,
    points: usize,
    probe: CompactnessProbe,
    radii: Vec<f64>,
}

/// Parses and validates `params`, runs the command, and returns the outputs.
pub fn execute(command: &str, params: &Value, seed: u64) -> Result<Artifacts, CliError> {
    match command {
        "verify-wvn" => verify_wvn(parse(command, params)?),
        "construct-dirac" => construct_dirac(parse(command, params)?),
        "construct-kg" => construct_kg(parse(command, params)?),
        "find-embedded" => find_embedded_cmd(parse(command, params)?),
        "lap-scan" => lap_scan_cmd(parse(command, params)?),
        "mourre-check" => mourre_cmd(parse(command, params)?, seed),
        "compactness-probe" => compactness_cmd(parse(command, params)?),
        "phase-diagram" => phase_cmd(parse(command, params)?),
        other => Err(CliError::validation("command", "command recognized (see `oscilab list`)", other)),
    }
}

fn verify_wvn(p: VerifyWvnParams) -> Result<Artifacts, CliError> {
    check(p.dim == 1 || p.dim == 3, "dim", "dim in {1, 3}", p.dim)?;
    check(p.x_max > 0.0, "x_max", "x_max > 0", p.x_max)?;
    check(p.step > 0.0 && p.step < p.x_max, "step", "0 < step < x_max", p.step)?;
    let residual = if p.dim == 1 { verify_wvn_1d(p.x_max, p.step)? } else { verify_wvn_3d(p.x_max, p.step)? };
    let mut a = Artifacts::default();
    a.add(
        "residual.json",
        json_bytes(&json!({"dim": p.dim, "x_max": p.x_max, "step": p.step, "energy": 1.0, "residual": residual}))?,
    );
    Ok(a)
}

fn construct_dirac(p: DiracParams) -> Result<Artifacts, CliError> {
    p.spec.validate()?;
    check(p.stride >= 1, "stride", "stride >= 1", p.stride)?;
    let grid = dirac_grid(p.r_max, p.step)?;
    let c = dirac_solve_potential(&p.spec, &grid)?;
    let limits = dirac_check_limits(&c);
    let mut csv = Vec::new();
    write_dirac_csv(&c, &mut csv, p.stride)?;
    let mut a = Artifacts::default();
    a.add("dirac.csv", csv);
    a.add(
        "dirac.json",
        json_bytes(&json!({"spec": p.spec, "residual": dirac_residual(&c), "limits": limits}))?,
    );
    Ok(a)
}

fn construct_kg(p: KgParams) -> Result<Artifacts, CliError> {
    check(p.stride >= 1, "stride", "stride >= 1", p.stride)?;
    let grid = Grid1D::periodic(p.half_length, p.points)?;
    let c = kg_construct(p.m, &grid)?;
    let mut csv = Vec::new();
    write_kg_csv(&c, &mut csv, p.stride)?;
    let mut a = Artifacts::default();
    a.add("kg.csv", csv);
    a.add(
        "kg.json",
        json_bytes(&json!({
            "m": c.m,
            "lambda": c.lambda,
            "residual_max": c.residual_max,
            "decay_constant": c.decay_constant,
            "zero_points": c.zero_points,
            "algebraic_deviation": c.algebraic_deviation,
        }))?,
    );
    Ok(a)
}

fn find_embedded_cmd(p: FindEmbeddedParams) -> Result<Artifacts, CliError> {
    p.potential.validate()?;
    p.search.validate()?;
    let found = if p.averaged {
        find_embedded(|g| build_schrodinger_averaged(g, &p.potential, None), &p.search, &p.box_list)?
    } else {
        find_embedded(|g| build_schrodinger(g, &p.potential, None), &p.search, &p.box_list)?
    };
    let genuine = found.iter().filter(|c| c.verdict == Verdict::Genuine).count();
    let mut a = Artifacts::default();
    a.add("embedded.json", json_bytes(&json!({"genuine": genuine, "candidates": found}))?);
    Ok(a)
}

fn lap_scan_cmd(p: LapParams) -> Result<Artifacts, CliError> {
    p.potential.validate()?;
    p.scan.validate()?;
    let r = lap_scan_potential(&p.potential, &p.scan)?;
    let mut a = Artifacts::default();
    let mut csv = Vec::new();
    write_lap_csv(&r, &mut csv)?;
    a.add("lap.csv", csv);
    a.add("lap_summary.json", json_bytes(&r.summary())?);
    a.disclose(LapDisclosure { label: "scan".into(), window: (p.scan.lo, p.scan.hi), im_floor: r.im_floor, level_spacing: r.level_spacing });
    Ok(a)
}

fn mourre_cmd(p: MourreParams, seed: u64) -> Result<Artifacts, CliError> {
    p.potential.validate()?;
    check(p.lo < p.hi, "window", "a < b", format!("[{}, {}]", p.lo, p.hi))?;
    let grid = Grid1D::with_step(GridKind::Line, p.half_length, p.step)?;
    let h = build_schrodinger_averaged(&grid, &p.potential, None)?;
    let report = match p.mode {
        MourreModeParam::Plain | MourreModeParam::Strict => {
            let a = build_conjugate_a(&grid)?;
            let mode = if p.mode == MourreModeParam::Plain { MourreMode::Plain } else { MourreMode::Strict };
            serde_json::to_value(mourre_check(&h, &a, p.lo, p.hi, mode, p.rank_budget)?)?
        }
        MourreModeParam::Weighted => {
            let weight = p.weight.ok_or_else(|| CliError::validation("weight", "weighted mode needs weight = psi", "missing"))?;
            let s = p.s.ok_or_else(|| CliError::validation("s", "weighted mode needs s > 0", "missing"))?;
            weight.validate()?;
            let a = build_conjugate_a(&grid)?;
            let r = weighted_mourre_check(&h, &a, &weight, p.lo, p.hi, s)?;
            let mut v = serde_json::to_value(&r)?;
            v["holds"] = json!(r.weighted_holds());
            v
        }
        MourreModeParam::AtInfinity => {
            let s = p.s.ok_or_else(|| CliError::validation("s", "at_infinity mode needs s > 1/2", "missing"))?;
            let delta = p.delta.ok_or_else(|| CliError::validation("delta", "at_infinity mode needs delta >= 0", "missing"))?;
            let gamma = p.gamma.ok_or_else(|| CliError::validation("gamma", "gamma = beta - delta > 1/2", "missing"))?;
            check(s > 0.5, "s", "s > 1/2", s)?;
            check(delta >= 0.0, "delta", "delta >= 0", delta)?;
            serde_json::to_value(mourre_at_infinity_check(&h, &grid, &p.radii, delta, s, gamma, p.lo, p.hi, p.trials, seed)?)?
        }
    };
    let mut a = Artifacts::default();
    a.add("mourre.json", json_bytes(&report)?);
    Ok(a)
}

fn compactness_cmd(p: CompactnessParams) -> Result<Artifacts, CliError> {
    p.probe.validate()?;
    let grid = Grid1D::periodic(p.half_length, p.points)?;
    let r = oscillation_compactness_probe(&grid, &p.probe, &p.radii)?;
    let mut a = Artifacts::default();
    a.add("compactness.json", json_bytes(&r)?);
    Ok(a)
}

fn phase_cmd(p: PhaseSweepSpec) -> Result<Artifacts, CliError> {
    p.validate()?;
    let cells = phase_sweep(&p)?;
    let mut a = Artifacts::default();
    let mut csv = Vec::new();
    write_phase_csv(&cells, &mut csv)?;
    a.add("phase.csv", csv);
    a.add("phase.svg", render_phase_svg(&cells).into_bytes());
    a.add("phase.json", json_bytes(&cells)?);
    for c in &cells {
        for (tag, window, out) in [("below", p.below, &c.below), ("above", p.above, &c.above)] {
            if let Some(s) = &out.summary {
                a.disclose(LapDisclosure {
                    label: format!("alpha={} beta={} {tag}", c.alpha, c.beta),
                    window,
                    im_floor: s.im_floor,
                    level_spacing: s.level_spacing,
                });
            }
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_lists_every_command_once() {
        let t = list_table();
        assert_eq!(t.lines().count(), 9);
        for (name, anchor) in COMMANDS {
            assert_eq!(t.matches(&format!("{name} ")).count(), 1);
            assert!(!anchor.is_empty());
        }
        assert_eq!(t, list_table());
    }

    #[test]
    fn unknown_command_is_validation() {
        let e = execute("fly", &json!({}), 0).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn schema_mismatch_is_validation() {
        let e = execute("verify-wvn", &json!({"dim": 1, "bogus": 2}), 0).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = execute("verify-wvn", &json!({"dim": 2}), 0).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
