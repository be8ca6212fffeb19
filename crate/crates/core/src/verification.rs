//! Numerical estimates of the direct (admissibility) and inverse
//! (observability) inequalities, and of the annihilator test.
//!
//! Traces of modal states are measured through the boundary Gram matrix
//! `T_nm = <trace_n, trace_m>_Gamma`, so `|trace w(t)|^2 = w(t)^T T w(t)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::EigenBasis;
use crate::control::{check_horizon, MomentMatrix};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernel::{maccamy_constants, resolvent_on_grid, MemoryKernel};
use crate::modal::{unit_data_responses_maccamy, unit_data_responses_memory, ModalTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridParams {
    pub step: f64,
    pub steps: usize,
    pub horizon: f64,
    pub modes: usize,
}

impl GridParams {
    fn new(grid: &TimeGrid, modes: usize) -> Self {
        Self {
            step: grid.step(),
            steps: grid.steps(),
            horizon: grid.horizon(),
            modes,
        }
    }
}

/// Sampled estimate of the direct-inequality constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    /// Supremum of the sampled ratios.
    pub constant_estimate: f64,
    pub sample_count: usize,
    /// Description of the sample attaining the supremum.
    pub worst_case_input: String,
    pub grid_params: GridParams,
    /// Running supremum after each sample.
    pub running_sup: Vec<f64>,
    /// Largest squared singular value of the discrete trace map on the unit
    /// energy sphere (the sharp discrete constant).
    pub sharp_constant: f64,
}

/// Boundary Gram matrix of the traces.
fn trace_gram(basis: &EigenBasis) -> DMatrix<f64> {
    let n = basis.len();
    DMatrix::from_fn(n, n, |i, j| basis.pairing(basis.trace(i), basis.trace(j)))
}

/// Symmetric square root factor `S` with `S^T S = T` (negative rounding
/// eigenvalues are clipped).
fn gram_half(t: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(t.clone());
    let mut half = eig.eigenvectors.transpose();
    for (i, mut row) in half.row_iter_mut().enumerate() {
        row *= eig.eigenvalues[i].max(0.0).sqrt();
    }
    half
}

/// `int_0^T |trace w(t)|^2 dt` for `w_n(t) = w0_n psi0_n(t) + w1_n psi1_n(t)`.
fn trace_integral(
    responses: &[(ModalTrajectory, ModalTrajectory)],
    gram: &DMatrix<f64>,
    w0: &[f64],
    w1: &[f64],
    grid: &TimeGrid,
) -> f64 {
    let n = responses.len();
    let weights = grid.weights();
    let mut total = 0.0;
    let mut state = vec![0.0; n];
    for (j, wj) in weights.iter().enumerate() {
        for (m, (a, b)) in responses.iter().enumerate() {
            state[m] = w0[m] * a.z()[j] + w1[m] * b.z()[j];
        }
        let mut q = 0.0;
        for a in 0..n {
            if state[a] == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for b in 0..n {
                row += gram[(a, b)] * state[b];
            }
            q += state[a] * row;
        }
        total += wj * q;
    }
    total
}

fn energy(basis: &EigenBasis, w0: &[f64], w1: &[f64]) -> f64 {
    (0..basis.len())
        .map(|n| {
            let l = basis.lambda(n);
            l * l * w0[n] * w0[n] + w1[n] * w1[n]
        })
        .sum()
}

fn check_data(basis: &EigenBasis, w0: &[f64], w1: &[f64]) -> Result<()> {
    for (len, context) in [(w0.len(), "initial displacement"), (w1.len(), "initial velocity")] {
        if len != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: len,
                context,
            });
        }
    }
    Ok(())
}

/// `|trace w|^2_{L^2(0,T;L^2(Gamma))} / (|w0|^2_{H^1_0} + |w1|^2_{L^2})` for the
/// homogeneous memory-form solution; `None` for zero data.
pub fn trace_energy_ratio(
    basis: &EigenBasis,
    kernel: &MemoryKernel,
    grid: &TimeGrid,
    w0: &[f64],
    w1: &[f64],
) -> Result<Option<f64>> {
    check_data(basis, w0, w1)?;
    let e = energy(basis, w0, w1);
    if e == 0.0 {
        return Ok(None);
    }
    let responses = unit_data_responses_memory(basis, kernel, grid)?;
    Ok(Some(trace_integral(&responses, &trace_gram(basis), w0, w1, grid) / e))
}

/// Supremum over `n_samples` pseudo-random unit-energy initial data of the
/// trace-to-energy ratio of the homogeneous memory-form system on `[0, t]`.
///
/// Sample `k` draws standard normal `x, y` from a ChaCha8 stream seeded with
/// `seed` and uses `w0_n = x_n / lambda_n`, `w1_n = y_n`, rescaled to unit
/// energy.
pub fn direct_inequality_ratio(
    basis: &EigenBasis,
    kernel: &MemoryKernel,
    t: f64,
    grid: &TimeGrid,
    n_samples: usize,
    seed: u64,
) -> Result<InequalityReport> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    check_horizon(t, grid)?;
    let n = basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..n_samples)
        .map(|_| {
            let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let w0: Vec<f64> = x.iter().enumerate().map(|(m, v)| v / basis.lambda(m)).collect();
            (w0, y)
        })
        .collect();

    let responses = unit_data_responses_memory(basis, kernel, grid)?;
    let gram = trace_gram(basis);
    let ratios: Vec<Option<f64>> = samples
        .par_iter()
        .map(|(w0, w1)| {
            let e = energy(basis, w0, w1);
            if e == 0.0 {
                return None;
            }
            let s = e.sqrt().recip();
            let a: Vec<f64> = w0.iter().map(|v| v * s).collect();
            let b: Vec<f64> = w1.iter().map(|v| v * s).collect();
            Some(trace_integral(&responses, &gram, &a, &b, grid))
        })
        .collect();

    let mut best = 0.0;
    let mut worst = String::from("none");
    let mut running_sup = Vec::with_capacity(n_samples);
    for (k, r) in ratios.iter().enumerate() {
        if let Some(r) = r {
            if *r > best || worst == "none" {
                best = *r;
                worst = format!("sample {k} of seed {seed}");
            }
        }
        running_sup.push(best);
    }

    let spectrum = trace_map_singular_values(basis, &responses, grid, false);
    let sharp = spectrum.first().map(|s| s * s).unwrap_or(0.0);
    Ok(InequalityReport {
        constant_estimate: best,
        sample_count: n_samples,
        worst_case_input: worst,
        grid_params: GridParams::new(grid, n),
        running_sup,
        sharp_constant: sharp,
    })
}

/// Singular values (descending) of the discrete map from initial data on
/// the unit sphere to boundary traces in `L^2(0,T;L^2(Gamma))`.
///
/// With `split` false the sphere is the energy sphere
/// `|w0|^2_{H^1_0} + |w1|^2 = 1`; with `split` true it is the sphere of
/// `l^2` over both frequency signs, which carries half the energy.
fn trace_map_singular_values(
    basis: &EigenBasis,
    responses: &[(ModalTrajectory, ModalTrajectory)],
    grid: &TimeGrid,
    split: bool,
) -> Vec<f64> {
    let n = basis.len();
    let half = gram_half(&trace_gram(basis));
    let weights = grid.weights();
    let factor = if split { std::f64::consts::SQRT_2 } else { 1.0 };
    let mut map = DMatrix::zeros(grid.len() * n, 2 * n);
    let mut col = DMatrix::zeros(n, 2 * n);
    for (j, wj) in weights.iter().enumerate() {
        for (m, (a, b)) in responses.iter().enumerate() {
            col[(m, m)] = factor * a.z()[j] / basis.lambda(m);
            col[(m, n + m)] = factor * b.z()[j];
        }
        let block = &half * &col * wj.sqrt();
        map.view_mut((j * n, 0), (n, 2 * n)).copy_from(&block);
    }
    let mut s: Vec<f64> = map.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest eigenvalue of the Gramian of a terminal map: the discrete
/// observability constant at the map's truncation level.
pub fn inverse_inequality_constant(mm: &MomentMatrix) -> f64 {
    let eig = SymmetricEigen::new(mm.gramian());
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Extreme singular values of the trace map of the annihilator equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceMapSpectrum {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub modes: usize,
    pub horizon: f64,
}

/// Smallest singular value of `(xi, eta) -> trace psi` on `Gamma x (0, T)`,
/// where `psi` solves the undamped transformed equation
/// `psi'' = -lambda^2 psi + b psi + K * psi` from `(xi, eta)`, over the first
/// `n` modes. Data are normalized on the sphere of `l^2` over both
/// frequency signs, so for the elastic interval at the critical time the
/// result matches the square root of the Gramian constant.
pub fn orthogonality_test(
    basis: &EigenBasis,
    kernel: &MemoryKernel,
    t: f64,
    grid: &TimeGrid,
    n: usize,
) -> Result<TraceMapSpectrum> {
    if n == 0 {
        return Err(Error::InvalidParameter("mode count must be at least 1".into()));
    }
    check_horizon(t, grid)?;
    let basis = basis.truncated(n)?;
    let data = maccamy_constants(&resolvent_on_grid(kernel, grid)?)?.without_damping();
    let responses = unit_data_responses_maccamy(&basis, &data, grid)?;
    let s = trace_map_singular_values(&basis, &responses, grid, true);
    Ok(TraceMapSpectrum {
        sigma_min: s.last().copied().unwrap_or(0.0),
        sigma_max: s.first().copied().unwrap_or(0.0),
        modes: n,
        horizon: grid.horizon(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Endpoint;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_ratio_closed_form() {
        let basis = EigenBasis::interval(1, PI, Endpoint::Left).unwrap();
        let t = 3.0;
        let grid = TimeGrid::from_horizon(t, 3000).unwrap();
        let r = trace_energy_ratio(&basis, &MemoryKernel::zero(), &grid, &[1.0], &[0.0])
            .unwrap()
            .unwrap();
        let exact = 2.0 / PI * (t / 2.0 + (2.0 * t).sin() / 4.0);
        let h = grid.step();
        assert!((r - exact).abs() < h * h, "{r} vs {exact}");
    }

    #[test]
    fn zero_data_is_skipped() {
        let basis = EigenBasis::interval(2, PI, Endpoint::Left).unwrap();
        let grid = TimeGrid::from_horizon(1.0, 100).unwrap();
        let r = trace_energy_ratio(&basis, &MemoryKernel::zero(), &grid, &[0.0; 2], &[0.0; 2]).unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn running_sup_is_monotone() {
        let basis = EigenBasis::interval(4, PI, Endpoint::Left).unwrap();
        let grid = TimeGrid::from_horizon(2.0, 200).unwrap();
        let rep = direct_inequality_ratio(&basis, &MemoryKernel::zero(), 2.0, &grid, 20, 7).unwrap();
        assert!(rep.running_sup.windows(2).all(|w| w[0] <= w[1]));
        assert!(rep.constant_estimate <= rep.sharp_constant * (1.0 + 1e-12));
        assert_eq!(rep.sample_count, 20);
    }

    #[test]
    fn zeroed_trace_gives_zero_sigma() {
        let basis = EigenBasis::interval(3, PI, Endpoint::Left).unwrap().with_zero_trace(1);
        let t = 2.0 * PI;
        let grid = TimeGrid::from_horizon(t, 400).unwrap();
        let s = orthogonality_test(&basis, &MemoryKernel::zero(), t, &grid, 3).unwrap();
        assert!(s.sigma_min < 1e-12);
        assert!(s.sigma_max > 1.0);
    }
}
