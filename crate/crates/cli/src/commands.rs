//! One function per CLI verb. Each returns the files to write.

use memwave::control::MinNormSolution;
use memwave::modal::simulate_memory;
use memwave::verification::GridParams;
use memwave::{
    build_elastic_moment_matrix, build_viscoelastic_moment_matrix, direct_inequality_ratio,
    inverse_inequality_constant, maccamy_constants, min_norm_control, orthogonality_test,
    resolvent_on_grid, steer_and_verify, verify_resolvent_identity, CoeffState, EigenBasis,
    InequalityReport, MemoryKernel, MomentMatrix, Scale, TimeGrid, TraceMapSpectrum,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{dense, RunConfig, SweepParameter};
use crate::error::CliError;
use crate::output::Outputs;

#[derive(Debug, Serialize)]
struct GridInfo {
    horizon: f64,
    step: f64,
    steps: usize,
}

impl From<&TimeGrid> for GridInfo {
    fn from(g: &TimeGrid) -> Self {
        Self {
            horizon: g.horizon(),
            step: g.step(),
            steps: g.steps(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Report<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    grid: GridInfo,
    result: T,
}

fn report<T: Serialize>(
    out: &mut Outputs,
    command: &str,
    cfg: &RunConfig,
    grid: &TimeGrid,
    result: T,
) -> Result<(), CliError> {
    out.json(
        &format!("{command}.json"),
        &Report {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            grid: grid.into(),
            result,
        },
    )
}

/// One unit profile per boundary node.
fn node_profiles(basis: &EigenBasis) -> Vec<Vec<f64>> {
    let q = basis.node_count();
    (0..q)
        .map(|i| (0..q).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn moment_matrix(
    basis: &EigenBasis,
    kernel: &MemoryKernel,
    t: f64,
    grid: &TimeGrid,
    profiles: &[Vec<f64>],
) -> memwave::Result<MomentMatrix> {
    if kernel.is_zero() {
        build_elastic_moment_matrix(basis, t, grid, profiles)
    } else {
        build_viscoelastic_moment_matrix(basis, kernel, t, grid, profiles)
    }
}

#[derive(Debug, Serialize)]
struct ResolventResult {
    kernel_descriptor: String,
    a: f64,
    b: f64,
    identity_residual: f64,
    tolerance: f64,
}

pub fn resolvent(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let kernel = cfg.build_kernel()?;
    let grid = cfg.grid(cfg.time.t)?;
    let r = resolvent_on_grid(&kernel, &grid)?;
    let data = maccamy_constants(&r)?;
    let residual = verify_resolvent_identity(&kernel, &r)?;
    let rows: Vec<Vec<f64>> = grid
        .nodes()
        .zip(r.values())
        .zip(&data.k)
        .map(|((t, rv), k)| vec![t, *rv, *k])
        .collect();
    let mut out = Outputs::default();
    out.csv("resolvent.csv", &["t".into(), "R".into(), "K".into()], &rows)?;
    report(
        &mut out,
        "resolvent",
        cfg,
        &grid,
        ResolventResult {
            kernel_descriptor: kernel.descriptor(),
            a: data.a,
            b: data.b,
            identity_residual: residual,
            tolerance: r.tolerance(),
        },
    )?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct SimulateResult {
    kernel_descriptor: String,
    #[serde(rename = "N")]
    n: usize,
    terminal_z: Vec<f64>,
    terminal_zp: Vec<f64>,
    initial_energy: f64,
    terminal_energy: f64,
}

pub fn simulate(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let basis = cfg.build_basis()?;
    let kernel = cfg.build_kernel()?;
    let grid = cfg.grid(cfg.time.t)?;
    let n = basis.len();
    let sim = cfg.simulate.clone().unwrap_or_default();
    let w0 = dense(&sim.w0, n, "simulate.w0")?;
    let w1 = dense(&sim.w1, n, "simulate.w1")?;
    let traj = simulate_memory(&basis, &kernel, &w0, &w1, None, &grid)?;

    let mut header = vec!["t".to_string()];
    for m in 1..=n {
        header.push(format!("z_{m}"));
        header.push(format!("zp_{m}"));
    }
    let rows: Vec<Vec<f64>> = grid
        .nodes()
        .enumerate()
        .map(|(j, t)| {
            let mut r = vec![t];
            for tr in &traj.modes {
                r.push(tr.z()[j]);
                r.push(tr.zp()[j]);
            }
            r
        })
        .collect();
    let energy = |z: &[f64], zp: &[f64]| -> f64 {
        (0..n)
            .map(|m| (basis.lambda(m) * z[m]).powi(2) + zp[m].powi(2))
            .sum()
    };
    let (tz, tzp): (Vec<f64>, Vec<f64>) = traj.modes.iter().map(|m| m.terminal()).unzip();
    let mut out = Outputs::default();
    out.csv("trajectory.csv", &header, &rows)?;
    let result = SimulateResult {
        kernel_descriptor: kernel.descriptor(),
        n,
        initial_energy: energy(&w0, &w1),
        terminal_energy: energy(&tz, &tzp),
        terminal_z: tz,
        terminal_zp: tzp,
    };
    report(&mut out, "simulate", cfg, &grid, result)?;
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct ControlResult {
    pub terminal_error: f64,
    pub control_norm: f64,
    pub gramian_sigma_min: f64,
    pub gramian_sigma_max: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub kernel_descriptor: String,
    pub moment_residual: f64,
    pub rank: usize,
}

pub fn control(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let ctl = cfg
        .control
        .clone()
        .ok_or_else(|| CliError::Config("the control command needs a [control] block".into()))?;
    let basis = cfg.build_basis()?;
    let kernel = cfg.build_kernel()?;
    let t = cfg.control_horizon();
    let grid = cfg.grid(t)?;
    let n = basis.len();
    let profiles = ctl.profiles.clone().unwrap_or_else(|| node_profiles(&basis));
    let xi = CoeffState::from_real(&dense(&ctl.xi, n, "control.xi")?, Scale::L2);
    let eta = CoeffState::from_real(&dense(&ctl.eta, n, "control.eta")?, Scale::HM1);

    let mm = moment_matrix(&basis, &kernel, t, &grid, &profiles)?;
    let MinNormSolution {
        control, residual, rank, ..
    } = min_norm_control(&xi, &eta, &mm, ctl.reg)?;
    let check = steer_and_verify(&control, &kernel, &basis, &xi, &eta, t, ctl.form)?;
    let sigma = mm.singular_values();

    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=profiles.len()).map(|p| format!("amp_{p}")))
        .collect();
    let rows: Vec<Vec<f64>> = grid
        .nodes()
        .enumerate()
        .map(|(j, tj)| {
            std::iter::once(tj)
                .chain(control.amplitudes()[j].iter().copied())
                .collect()
        })
        .collect();
    let mut out = Outputs::default();
    out.csv("control.csv", &header, &rows)?;
    let result = ControlResult {
        terminal_error: check.terminal_error_hm1_l2,
        control_norm: check.control_norm,
        gramian_sigma_min: inverse_inequality_constant(&mm).max(0.0),
        gramian_sigma_max: sigma.first().map_or(0.0, |s| s * s),
        t,
        n,
        kernel_descriptor: mm.kernel_descriptor().to_string(),
        moment_residual: residual,
        rank,
    };
    report(&mut out, "control", cfg, &grid, result)?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct VerifyResult {
    kernel_descriptor: String,
    seed: u64,
    direct_constant: f64,
    sharp_direct_constant: f64,
    worst_case_input: String,
    sample_count: usize,
    grid_params: GridParams,
    inverse_constant: f64,
    trace_map: TraceMapSpectrum,
}

pub fn verify(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let basis = cfg.build_basis()?;
    let kernel = cfg.build_kernel()?;
    let t = cfg.time.t;
    let grid = cfg.grid(t)?;
    let samples = cfg.verify.clone().unwrap_or_default().samples;
    let seed = cfg.seed.unwrap_or(0);
    let InequalityReport {
        constant_estimate,
        sample_count,
        worst_case_input,
        grid_params,
        running_sup,
        sharp_constant,
    } = direct_inequality_ratio(&basis, &kernel, t, &grid, samples, seed)?;
    let mm = moment_matrix(&basis, &kernel, t, &grid, &node_profiles(&basis))?;
    let trace_map = orthogonality_test(&basis, &kernel, t, &grid, basis.len())?;

    let rows: Vec<Vec<f64>> = running_sup
        .iter()
        .enumerate()
        .map(|(k, s)| vec![(k + 1) as f64, *s])
        .collect();
    let mut out = Outputs::default();
    out.csv("direct_ratio.csv", &["sample".into(), "running_sup".into()], &rows)?;
    let result = VerifyResult {
        kernel_descriptor: kernel.descriptor(),
        seed,
        direct_constant: constant_estimate,
        sharp_direct_constant: sharp_constant,
        worst_case_input,
        sample_count,
        grid_params,
        inverse_constant: inverse_inequality_constant(&mm),
        trace_map,
    };
    report(&mut out, "verify", cfg, &grid, result)?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct SweepResult {
    parameter: SweepParameter,
    values: Vec<f64>,
    constants: Vec<f64>,
}

pub fn sweep(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let sw = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("the sweep command needs a [sweep] block".into()))?;
    let basis = cfg.build_basis()?;
    let kernel = cfg.build_kernel()?;
    let base_grid = cfg.grid(cfg.time.t)?;
    let profiles = node_profiles(&basis);
    // ordered collection keeps the output independent of the thread count
    let constants = sw
        .values
        .par_iter()
        .map(|&v| -> Result<f64, CliError> {
            let mm = match sw.parameter {
                SweepParameter::Horizon => {
                    let grid = cfg.grid(v)?;
                    moment_matrix(&basis, &kernel, v, &grid, &profiles)?
                }
                SweepParameter::Modes => {
                    let b = basis.truncated(v as usize)?;
                    moment_matrix(&b, &kernel, cfg.time.t, &base_grid, &profiles)?
                }
                SweepParameter::KernelScale => {
                    let k = kernel.scaled(v);
                    moment_matrix(&basis, &k, cfg.time.t, &base_grid, &profiles)?
                }
            };
            Ok(inverse_inequality_constant(&mm))
        })
        .collect::<Result<Vec<f64>, CliError>>()?;

    let rows: Vec<Vec<f64>> = sw
        .values
        .iter()
        .zip(&constants)
        .map(|(v, c)| vec![*v, *c])
        .collect();
    let mut out = Outputs::default();
    out.csv("sweep.csv", &["parameter".into(), "constant".into()], &rows)?;
    report(
        &mut out,
        "sweep",
        cfg,
        &base_grid,
        SweepResult {
            parameter: sw.parameter,
            values: sw.values.clone(),
            constants,
        },
    )?;
    Ok(out)
}
