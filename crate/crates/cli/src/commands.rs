//! Subcommand arguments and implementations.

use std::path::PathBuf;

use clap::{ArgGroup, Args};
use mixphase::extraction::{
    blind_estimate_detailed, mixed_from_extrema, pure_from_extrema, PhaseEstimate, Status,
};
use mixphase::polarimeter::{
    analyzer_sweep, find_extrema, pipeline_operator, simulate_analyzer_counts, simulate_counts,
    sweep_eta, SweepConfig, ANALYZER_STEPS, DEFAULT_REFINE_TOL, DEFAULT_SAMPLES,
};
use mixphase::spinops::{params_from_su2, su2_from_params, SU2Matrix, SU2Params};
use mixphase::theory::{
    cos2_mixed_phase, geodesic_unitary, geometric_phase, mixed_phase_visibility,
    pure_phase_visibility, solid_angle,
};
use mixphase::vec3::Vec3;
use serde::Serialize;

use crate::error::CliError;
use crate::io;
use crate::report::{Discrepancy, Measured, RunInputs, RunReport, TheoryBlock};

/// The SU(2) angles and beam polarization shared by several subcommands.
#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    /// ξ, in [0, π/2].
    #[arg(long, allow_negative_numbers = true)]
    pub xi: f64,
    /// δ; wrapped into (−π, π].
    #[arg(long, allow_negative_numbers = true)]
    pub delta: f64,
    /// ζ; wrapped into (−π, π].
    #[arg(long, allow_negative_numbers = true)]
    pub zeta: f64,
    /// Degree of polarization in [0, 1].
    #[arg(long, allow_negative_numbers = true)]
    pub r: f64,
    /// Read the angles in degrees instead of radians.
    #[arg(long)]
    pub degrees: bool,
}

impl StateArgs {
    pub fn params(&self) -> Result<SU2Params, CliError> {
        let conv = |a: f64| if self.degrees { a.to_radians() } else { a };
        SU2Params::wrapped(conv(self.xi), conv(self.delta), conv(self.zeta)).map_err(CliError::from)
    }

    pub fn polarization(&self) -> Result<f64, CliError> {
        check_r(self.r)
    }
}

fn check_r(r: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(CliError::Usage(format!("--r {r} must lie in [0, 1]")))
    }
}

fn sweep_config(samples: usize) -> Result<SweepConfig, CliError> {
    SweepConfig::new(samples, DEFAULT_REFINE_TOL).map_err(CliError::from)
}

fn check_shots(shots: Option<u64>) -> Result<(), CliError> {
    match shots {
        Some(0) => Err(CliError::Usage("--shots must be at least 1".into())),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// η grid size over [0, 2π).
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Simulate binomial detector counts with this many particles per setting.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV for the η sweep.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the analyzer-rotation trace here.
    #[arg(long)]
    pub analyzer_out: Option<PathBuf>,
    #[arg(long, default_value_t = ANALYZER_STEPS)]
    pub analyzer_samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub rows: usize,
    pub i_min: f64,
    pub i_max: f64,
    pub out: PathBuf,
    pub analyzer_out: Option<PathBuf>,
}

/// The fixed total evolution seen by the analyzer: the chain at η = 0.
pub fn analyzer_unitary(p: SU2Params) -> SU2Matrix {
    pipeline_operator(p, 0.0)
}

pub fn simulate(args: &SimulateArgs) -> Result<SimulateSummary, CliError> {
    let p = args.state.params()?;
    let r = args.state.polarization()?;
    let cfg = sweep_config(args.samples)?;
    check_shots(args.shots)?;

    let trace = sweep_eta(r, p, &cfg)?;
    let counts = args
        .shots
        .map(|shots| simulate_counts(r, p, &cfg, shots, args.seed))
        .transpose()?;
    io::write_atomic(&args.out, &io::trace_csv(&trace, counts.as_ref())?)?;

    if let Some(path) = &args.analyzer_out {
        let u = analyzer_unitary(p);
        let (angles, analyzer) = analyzer_sweep(r, &u, args.analyzer_samples, DEFAULT_REFINE_TOL)?;
        let counts = args
            .shots
            .map(|shots| simulate_analyzer_counts(r, &u, args.analyzer_samples, shots, args.seed))
            .transpose()?;
        io::write_atomic(path, &io::analyzer_csv(&angles, &analyzer.points, counts.as_ref())?)?;
    }

    let measured = match &counts {
        Some(c) => c.to_intensity_trace()?,
        None => trace,
    };
    let (i_min, i_max) = measured
        .intensities()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(SimulateSummary {
        rows: measured.points.len(),
        i_min,
        i_max,
        out: args.out.clone(),
        analyzer_out: args.analyzer_out.clone(),
    })
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("polarization").required(true).args(["r", "analyzer_trace", "pure"])))]
pub struct ExtractArgs {
    /// η-sweep CSV produced by `simulate` (or measured data in that layout).
    #[arg(long)]
    pub trace: PathBuf,
    /// Known degree of polarization.
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    /// Analyzer-rotation CSV; r is then inferred (blind protocol).
    #[arg(long)]
    pub analyzer_trace: Option<PathBuf>,
    /// Treat the beam as fully polarized.
    #[arg(long)]
    pub pure: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractMode {
    Pure,
    KnownR,
    Blind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractReport {
    pub mode: ExtractMode,
    pub i_min_rho: f64,
    pub i_max_rho: f64,
    pub i_min_t: Option<f64>,
    pub i_max_t: Option<f64>,
    pub r: f64,
    pub cos2_phi: Option<f64>,
    pub visibility: Option<f64>,
    pub status: Status,
    /// Some Δ quantity was within rounding of zero and was clamped.
    pub clamped: bool,
}

pub fn extract(args: &ExtractArgs) -> Result<ExtractReport, CliError> {
    let measured = io::read_trace(&args.trace)?.measured()?;
    let ex = find_extrema(&measured, None)?;

    if let Some(path) = &args.analyzer_trace {
        let analyzer = io::read_trace(path)?.measured()?;
        let ax = find_extrema(&analyzer, None)?;
        let (est, d) = blind_estimate_detailed(ex.i_min, ex.i_max, ax.i_min, ax.i_max)?;
        return Ok(report(ExtractMode::Blind, ex.i_min, ex.i_max, Some((ax.i_min, ax.i_max)), d.d_tilde, est, d.clamped));
    }
    if let Some(r) = args.r {
        let r = check_r(r)?;
        let est = mixed_from_extrema(ex.i_min, ex.i_max, r)?;
        return Ok(report(ExtractMode::KnownR, ex.i_min, ex.i_max, None, r, est, false));
    }
    let est = pure_from_extrema(ex.i_min, ex.i_max)?;
    Ok(report(ExtractMode::Pure, ex.i_min, ex.i_max, None, 1.0, est, false))
}

fn report(
    mode: ExtractMode,
    i_min_rho: f64,
    i_max_rho: f64,
    analyzer: Option<(f64, f64)>,
    r: f64,
    est: PhaseEstimate,
    clamped: bool,
) -> ExtractReport {
    ExtractReport {
        mode,
        i_min_rho,
        i_max_rho,
        i_min_t: analyzer.map(|a| a.0),
        i_max_t: analyzer.map(|a| a.1),
        r,
        cos2_phi: est.cos2_phi,
        visibility: est.visibility,
        status: est.status,
        clamped,
    }
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("evolution").required(true).args(["xi", "path"])))]
pub struct TheoryArgs {
    #[arg(long, allow_negative_numbers = true, requires_all = ["delta", "zeta"])]
    pub xi: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "xi")]
    pub delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "xi")]
    pub zeta: Option<f64>,
    /// Geodesic path file: {"vertices": [[x, y, z], ...]} starting at +z.
    #[arg(long)]
    pub path: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: f64,
    #[arg(long)]
    pub degrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathTheory {
    pub vertices: Vec<Vec3>,
    pub closed: bool,
    /// Signed solid angle Ω including the closing arc.
    pub omega: f64,
    /// −Ω/2.
    pub geometric_phase: f64,
    /// cos²(Ω/2), the pure-state prediction.
    pub cos2_phi_geometric: f64,
    /// 1/(1 + r² tan²(Ω/2)).
    pub cos2_mixed_geometric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub r: f64,
    pub params: SU2Params,
    #[serde(flatten)]
    pub theory: TheoryBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathTheory>,
}

pub fn theory_block(r: f64, u: &SU2Matrix) -> Result<TheoryBlock, CliError> {
    let pure = pure_phase_visibility(u);
    let mixed = mixed_phase_visibility(r, u)?;
    Ok(TheoryBlock {
        phi: pure.defined.then_some(pure.phi),
        nu: pure.nu,
        mixed_phi: mixed.defined.then_some(mixed.phi),
        visibility: mixed.visibility,
        cos2_phi: mixed.cos2_phi(),
    })
}

pub fn theory(args: &TheoryArgs) -> Result<TheoryReport, CliError> {
    let r = check_r(args.r)?;
    let (u, path) = match &args.path {
        Some(file) => {
            let path = io::read_path(file)?;
            let omega = solid_angle(&path)?.omega;
            let phase = geometric_phase(omega);
            let summary = PathTheory {
                vertices: path.vertices().to_vec(),
                closed: path.closed(),
                omega,
                geometric_phase: phase,
                cos2_phi_geometric: phase.cos().powi(2),
                cos2_mixed_geometric: cos2_mixed_phase(r, phase),
            };
            (geodesic_unitary(&path), Some(summary))
        }
        None => {
            let conv = |a: f64| if args.degrees { a.to_radians() } else { a };
            let (xi, delta, zeta) = (
                args.xi.unwrap_or_default(),
                args.delta.unwrap_or_default(),
                args.zeta.unwrap_or_default(),
            );
            let p = SU2Params::wrapped(conv(xi), conv(delta), conv(zeta))?;
            (su2_from_params(p), None)
        }
    };
    Ok(TheoryReport {
        r,
        params: params_from_su2(&u)?,
        theory: theory_block(r, &u)?,
        path,
    })
}

#[derive(Debug, Clone, Args)]
pub struct FullrunArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = ANALYZER_STEPS)]
    pub analyzer_samples: usize,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest acceptable |theory − measured| before exiting with code 4.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_timestamp: bool,
}

/// Both sweeps, blind extraction, and comparison with theory.
pub fn fullrun(args: &FullrunArgs) -> Result<RunReport, CliError> {
    let p = args.state.params()?;
    let r = args.state.polarization()?;
    let cfg = sweep_config(args.samples)?;
    check_shots(args.shots)?;
    if !(args.tol >= 0.0) {
        return Err(CliError::Usage(format!("--tol {} must be non-negative", args.tol)));
    }

    let theory = theory_block(r, &su2_from_params(p))?;
    let u_total = analyzer_unitary(p);

    let (ex, (i_min_t, i_max_t)) = match args.shots {
        None => {
            let ex = find_extrema(&sweep_eta(r, p, &cfg)?, None)?;
            let (_, analyzer) = analyzer_sweep(r, &u_total, args.analyzer_samples, DEFAULT_REFINE_TOL)?;
            (ex, (analyzer.i_min, analyzer.i_max))
        }
        Some(shots) => {
            let counts = simulate_counts(r, p, &cfg, shots, args.seed)?;
            let ex = find_extrema(&counts.to_intensity_trace()?, None)?;
            let acounts = simulate_analyzer_counts(r, &u_total, args.analyzer_samples, shots, args.seed)?;
            let ax = find_extrema(&acounts.to_intensity_trace()?, None)?;
            (ex, (ax.i_min, ax.i_max))
        }
    };
    let (est, d) = blind_estimate_detailed(ex.i_min, ex.i_max, i_min_t, i_max_t)?;

    let measured = Measured {
        i_min_rho: ex.i_min,
        i_max_rho: ex.i_max,
        i_min_t,
        i_max_t,
        r_hat: d.d_tilde,
        cos2_phi: est.cos2_phi,
        visibility: est.visibility,
        status: est.status,
        clamped: d.clamped,
    };
    let discrepancy = Discrepancy::between(r, &theory, &measured);
    let inputs = RunInputs {
        r,
        xi: p.xi,
        delta: p.delta,
        zeta: p.zeta,
        samples: args.samples,
        analyzer_samples: args.analyzer_samples,
        shots: args.shots,
        seed: args.seed,
        tol: args.tol,
    };
    Ok(RunReport::new(inputs, theory, measured, discrepancy, !args.no_timestamp))
}
