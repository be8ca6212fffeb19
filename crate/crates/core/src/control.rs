//! Boundary controls, the control-to-terminal-state map and minimum-norm
//! steering.
//!
//! Controls are piecewise linear in time (hat functions on the grid nodes)
//! times a fixed set of spatial profiles on the boundary. The terminal map
//! sends the nodal amplitudes to the pair `(w'(T), w(T))`, stored as `2N` real
//! rows: velocity rows `sqrt(2) w'_n(T) / lambda_n` first, then displacement
//! rows `sqrt(2) w_n(T)`. For the elastic system these are the real and
//! imaginary parts of the complex moments
//! `int_0^T int_Gamma (trace_n / lambda_n) e^{i lambda_n s} f(T - s)`, scaled so
//! that the real Gramian has the spectrum of the complex moment operator over
//! both signs of the frequency. The Euclidean norm of a row residual divided
//! by `sqrt(2)` is therefore the `H^{-1} x L^2` distance of terminal states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::EigenBasis;
use crate::cosine::{CoeffState, Scale};
use crate::error::{Error, Result};
use crate::grid::{convolve, TimeGrid};
use crate::kernel::{maccamy_constants, resolvent_on_grid, MemoryKernel};
use crate::modal::{simulate_memory, simulate_transformed, unit_sample_responses};

/// Default relative SVD truncation level.
pub const DEFAULT_TRUNCATION: f64 = 1e-10;

/// Boundary control `f(t_j) = sum_p amplitudes[j][p] profiles[p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    grid: TimeGrid,
    profiles: Vec<Vec<f64>>,
    amplitudes: Vec<Vec<f64>>,
}

impl ControlSignal {
    pub fn new(grid: TimeGrid, profiles: Vec<Vec<f64>>, amplitudes: Vec<Vec<f64>>) -> Result<Self> {
        check_profiles(&profiles)?;
        grid.ensure_samples(amplitudes.len(), "control amplitude rows")?;
        for row in &amplitudes {
            if row.len() != profiles.len() {
                return Err(Error::DimensionMismatch {
                    expected: profiles.len(),
                    found: row.len(),
                    context: "control amplitudes per node",
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("control amplitudes must be finite".into()));
            }
        }
        Ok(Self {
            grid,
            profiles,
            amplitudes,
        })
    }

    pub fn zero(grid: TimeGrid, profiles: Vec<Vec<f64>>) -> Result<Self> {
        let p = profiles.len();
        Self::new(grid, profiles, vec![vec![0.0; p]; grid.len()])
    }

    /// Amplitudes sampled from `f(t, profile_index)`.
    pub fn from_fn(
        grid: TimeGrid,
        profiles: Vec<Vec<f64>>,
        f: impl Fn(f64, usize) -> f64,
    ) -> Result<Self> {
        let p = profiles.len();
        let amplitudes = grid.nodes().map(|t| (0..p).map(|k| f(t, k)).collect()).collect();
        Self::new(grid, profiles, amplitudes)
    }

    /// Amplitudes from a flat vector ordered node-major (`j * P + p`).
    pub fn from_vector(grid: TimeGrid, profiles: Vec<Vec<f64>>, x: &[f64]) -> Result<Self> {
        let p = profiles.len();
        if x.len() != grid.len() * p {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * p,
                found: x.len(),
                context: "flat control vector",
            });
        }
        Self::new(grid, profiles, x.chunks(p).map(<[f64]>::to_vec).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn profiles(&self) -> &[Vec<f64>] {
        &self.profiles
    }

    pub fn amplitudes(&self) -> &[Vec<f64>] {
        &self.amplitudes
    }

    pub fn to_vector(&self) -> Vec<f64> {
        self.amplitudes.iter().flatten().copied().collect()
    }

    /// Per-mode boundary input `g_n(t_j) = <trace_n, f(t_j)>_Gamma`.
    pub fn modal_inputs(&self, basis: &EigenBasis) -> Result<Vec<Vec<f64>>> {
        let proj = profile_projections(basis, &self.profiles)?;
        Ok(proj
            .iter()
            .map(|pn| {
                self.amplitudes
                    .iter()
                    .map(|row| row.iter().zip(pn).map(|(a, c)| a * c).sum())
                    .collect()
            })
            .collect())
    }

    /// `L^2(0, T; L^2(Gamma))` norm (trapezoid in time, basis quadrature on
    /// the boundary).
    pub fn norm(&self, basis: &EigenBasis) -> Result<f64> {
        let gram = profile_gram(basis, &self.profiles)?;
        let w = self.grid.weights();
        let mut acc = 0.0;
        for (row, wj) in self.amplitudes.iter().zip(&w) {
            let a = DVector::from_column_slice(row);
            acc += wj * (a.transpose() * &gram * &a)[(0, 0)];
        }
        Ok(acc.max(0.0).sqrt())
    }

    pub fn sum(&self, other: &ControlSignal) -> Result<ControlSignal> {
        self.grid.ensure_matches(&other.grid, "control grids")?;
        if self.profiles != other.profiles {
            return Err(Error::InvalidParameter("controls use different profiles".into()));
        }
        let amplitudes = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(Self {
            grid: self.grid,
            profiles: self.profiles.clone(),
            amplitudes,
        })
    }
}

fn check_profiles(profiles: &[Vec<f64>]) -> Result<()> {
    if profiles.is_empty() {
        return Err(Error::InvalidParameter("at least one control profile is required".into()));
    }
    let len = profiles[0].len();
    if let Some(bad) = profiles.iter().find(|p| p.len() != len) {
        return Err(Error::DimensionMismatch {
            expected: len,
            found: bad.len(),
            context: "control profile lengths",
        });
    }
    Ok(())
}

/// `proj[n][p] = <trace_n, profile_p>_Gamma`.
fn profile_projections(basis: &EigenBasis, profiles: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    check_profiles(profiles)?;
    if profiles[0].len() != basis.node_count() {
        return Err(Error::DimensionMismatch {
            expected: basis.node_count(),
            found: profiles[0].len(),
            context: "control profile vs boundary nodes",
        });
    }
    Ok((0..basis.len())
        .map(|n| profiles.iter().map(|p| basis.project(n, p)).collect())
        .collect())
}

fn profile_gram(basis: &EigenBasis, profiles: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    check_profiles(profiles)?;
    if profiles[0].len() != basis.node_count() {
        return Err(Error::DimensionMismatch {
            expected: basis.node_count(),
            found: profiles[0].len(),
            context: "control profile vs boundary nodes",
        });
    }
    let p = profiles.len();
    Ok(DMatrix::from_fn(p, p, |i, j| basis.pairing(&profiles[i], &profiles[j])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentKind {
    Elastic,
    Viscoelastic,
}

/// Linear map from nodal control amplitudes to terminal rows.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    rows: DMatrix<f64>,
    /// `rows * (sqrt(W) (x) L_G^T)^{-1}`: the map on an orthonormal
    /// coordinate system of the discrete control space.
    normalized: DMatrix<f64>,
    /// `L_G^{-T}` for the profile Gram matrix `G = L_G L_G^T`.
    lgt_inv: DMatrix<f64>,
    /// Trapezoid weights of the control grid.
    weights: Vec<f64>,
    grid: TimeGrid,
    profiles: Vec<Vec<f64>>,
    lambdas: Vec<f64>,
    kind: MomentKind,
    kernel: String,
}

impl MomentMatrix {
    fn assemble(
        rows: DMatrix<f64>,
        basis: &EigenBasis,
        grid: &TimeGrid,
        profiles: &[Vec<f64>],
        kind: MomentKind,
        kernel: String,
    ) -> Result<Self> {
        let gram = profile_gram(basis, profiles)?;
        let chol = gram.cholesky().ok_or_else(|| {
            Error::Singular("control profiles are linearly dependent on the boundary".into())
        })?;
        let lgt_inv = chol
            .l()
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::Singular("profile Gram factor".into()))?;
        let p = profiles.len();
        let w = grid.weights();
        let mut normalized = rows.clone();
        for (j, wj) in w.iter().enumerate() {
            let block = rows.columns(j * p, p) * &lgt_inv / wj.sqrt();
            normalized.columns_mut(j * p, p).copy_from(&block);
        }
        Ok(Self {
            rows,
            normalized,
            lgt_inv,
            weights: w,
            grid: *grid,
            profiles: profiles.to_vec(),
            lambdas: basis.lambdas(),
            kind,
            kernel,
        })
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// Map expressed on an orthonormal basis of the discrete control space.
    pub fn normalized(&self) -> &DMatrix<f64> {
        &self.normalized
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn profiles(&self) -> &[Vec<f64>] {
        &self.profiles
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn mode_count(&self) -> usize {
        self.lambdas.len()
    }

    pub fn kind(&self) -> MomentKind {
        self.kind
    }

    pub fn kernel_descriptor(&self) -> &str {
        &self.kernel
    }

    /// `B B^T` for the normalized map, symmetrized.
    pub fn gramian(&self) -> DMatrix<f64> {
        let g = &self.normalized * self.normalized.transpose();
        (&g + g.transpose()) * 0.5
    }

    /// Singular values of the normalized map, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .normalized
            .transpose()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Terminal rows produced by a control.
    pub fn apply_rows(&self, control: &ControlSignal) -> Result<DVector<f64>> {
        self.check_control(control)?;
        Ok(&self.rows * DVector::from_vec(control.to_vector()))
    }

    /// Predicted terminal states `(w(T)` in `L^2`, `w'(T)` in `H^{-1})`.
    pub fn apply(&self, control: &ControlSignal) -> Result<(CoeffState, CoeffState)> {
        let r = self.apply_rows(control)?;
        Ok(self.states_from_rows(&r))
    }

    /// Complex moments `sum_j w_j int_Gamma (trace_n / lambda_n) e^{i lambda_n (T - t_j)} f(t_j)`
    /// for complex amplitudes `samples[j][p]`. Elastic maps only.
    pub fn apply_complex(&self, samples: &[Vec<Complex64>]) -> Result<Vec<Complex64>> {
        if self.kind != MomentKind::Elastic {
            return Err(Error::InvalidParameter(
                "complex moments are defined for the elastic map only".into(),
            ));
        }
        self.grid.ensure_samples(samples.len(), "complex control samples")?;
        let p = self.profiles.len();
        let n = self.mode_count();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (j, row) in samples.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                    context: "complex control amplitudes per node",
                });
            }
            for (k, f) in row.iter().enumerate() {
                let col = j * p + k;
                for (m, o) in out.iter_mut().enumerate() {
                    let e = Complex64::new(self.rows[(m, col)], self.rows[(n + m, col)]);
                    *o += e * f / std::f64::consts::SQRT_2;
                }
            }
        }
        Ok(out)
    }

    /// Row vector representing terminal targets.
    pub fn target_rows(&self, xi: &CoeffState, eta: &CoeffState) -> Result<DVector<f64>> {
        let n = self.mode_count();
        for (s, scale, what) in [(xi, Scale::L2, "displacement target"), (eta, Scale::HM1, "velocity target")] {
            if s.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: s.len(),
                    context: "target coefficients",
                });
            }
            if s.scale() != scale {
                return Err(Error::InvalidParameter(format!(
                    "{what} must be given at scale {scale}, got {}",
                    s.scale()
                )));
            }
            if !s.is_real(0.0) {
                return Err(Error::InvalidParameter(format!("{what} must be real")));
            }
        }
        let r2 = std::f64::consts::SQRT_2;
        Ok(DVector::from_fn(2 * n, |i, _| {
            if i < n {
                r2 * eta.coeffs()[i].re / self.lambdas[i]
            } else {
                r2 * xi.coeffs()[i - n].re
            }
        }))
    }

    fn states_from_rows(&self, r: &DVector<f64>) -> (CoeffState, CoeffState) {
        let n = self.mode_count();
        let r2 = std::f64::consts::SQRT_2;
        let vel: Vec<f64> = (0..n).map(|i| r[i] * self.lambdas[i] / r2).collect();
        let disp: Vec<f64> = (0..n).map(|i| r[n + i] / r2).collect();
        (
            CoeffState::from_real(&disp, Scale::L2),
            CoeffState::from_real(&vel, Scale::HM1),
        )
    }

    fn check_control(&self, control: &ControlSignal) -> Result<()> {
        self.grid.ensure_matches(control.grid(), "control grid vs moment matrix")?;
        if control.profiles() != self.profiles.as_slice() {
            return Err(Error::InvalidParameter(
                "control profiles differ from those of the moment matrix".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_horizon(t: f64, grid: &TimeGrid) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {t}")));
    }
    let end = grid.horizon();
    if (end - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "time grid ends at {end}, horizon is {t}"
        )));
    }
    Ok(())
}

/// Trapezoid discretization of the elastic moment map.
pub fn build_elastic_moment_matrix(
    basis: &EigenBasis,
    t: f64,
    grid: &TimeGrid,
    profiles: &[Vec<f64>],
) -> Result<MomentMatrix> {
    check_horizon(t, grid)?;
    let proj = profile_projections(basis, profiles)?;
    let n = basis.len();
    let p = profiles.len();
    let w = grid.weights();
    let end = grid.horizon();
    let r2 = std::f64::consts::SQRT_2;
    let mut rows = DMatrix::zeros(2 * n, grid.len() * p);
    for m in 0..n {
        let lambda = basis.lambda(m);
        for (j, wj) in w.iter().enumerate() {
            let (s, c) = (lambda * (end - grid.node(j))).sin_cos();
            for k in 0..p {
                let psi = proj[m][k] / lambda;
                rows[(m, j * p + k)] = r2 * wj * c * psi;
                rows[(n + m, j * p + k)] = r2 * wj * s * psi;
            }
        }
    }
    MomentMatrix::assemble(rows, basis, grid, profiles, MomentKind::Elastic, "zero".into())
}

/// Terminal map of the viscoelastic system, column by column from the
/// response of the transformed equation to each control hat.
///
/// The responses to the hats at nodes `1..=J` are time shifts of a single
/// response, so each mode needs only two simulations.
pub fn build_viscoelastic_moment_matrix(
    basis: &EigenBasis,
    kernel: &MemoryKernel,
    t: f64,
    grid: &TimeGrid,
    profiles: &[Vec<f64>],
) -> Result<MomentMatrix> {
    viscoelastic_map(basis, kernel, t, grid, profiles, true)
}

/// Terminal map of the rescaled system `v = e^{-a t / 2} w` driven by the
/// rescaled control `e^{-a t / 2} f`, so that `v'' = -lambda^2 v + b' v + K' * v + g`
/// with no `a w'` term. Both rescalings are isomorphisms, so the reachable
/// set is that of [`build_viscoelastic_moment_matrix`] mapped by
/// `(w', w) -> e^{-a T / 2} (w' - a w / 2, w)`; the difference from the
/// elastic map isolates the memory terms `b'` and `K'`.
pub fn build_undamped_moment_matrix(
    basis: &EigenBasis,
    kernel: &MemoryKernel,
    t: f64,
    grid: &TimeGrid,
    profiles: &[Vec<f64>],
) -> Result<MomentMatrix> {
    viscoelastic_map(basis, kernel, t, grid, profiles, false)
}

fn viscoelastic_map(
    basis: &EigenBasis,
    kernel: &MemoryKernel,
    t: f64,
    grid: &TimeGrid,
    profiles: &[Vec<f64>],
    damped: bool,
) -> Result<MomentMatrix> {
    check_horizon(t, grid)?;
    let proj = profile_projections(basis, profiles)?;
    let resolvent = resolvent_on_grid(kernel, grid)?;
    let data = maccamy_constants(&resolvent)?;
    let half = 0.5 * data.a;
    let n = basis.len();
    let p = profiles.len();
    let jn = grid.steps();
    let end = grid.horizon();
    let r2 = std::f64::consts::SQRT_2;

    let columns: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|m| {
            let lambda = basis.lambda(m);
            let (r0, r1) =
                unit_sample_responses(lambda, Some(&data), grid).map_err(|e| e.at_mode(m + 1))?;
            let mut vel = vec![0.0; grid.len()];
            let mut disp = vec![0.0; grid.len()];
            for j in 0..grid.len() {
                let (src, at) = if j == 0 { (&r0, jn) } else { (&r1, jn - j + 1) };
                // a control sample f_j forces v with e^{-a t_j / 2} f_j, and
                // w(T) = e^{a T / 2} v(T)
                let v = src.z()[at];
                let vp = src.zp()[at];
                if damped {
                    let scale = (half * (end - grid.node(j))).exp();
                    disp[j] = scale * v;
                    vel[j] = scale * (vp + half * v);
                } else {
                    disp[j] = v;
                    vel[j] = vp;
                }
            }
            Ok((vel, disp))
        })
        .collect::<Result<_>>()?;

    let mut rows = DMatrix::zeros(2 * n, grid.len() * p);
    for (m, (vel, disp)) in columns.iter().enumerate() {
        let lambda = basis.lambda(m);
        for j in 0..grid.len() {
            for k in 0..p {
                rows[(m, j * p + k)] = r2 * vel[j] * proj[m][k] / lambda;
                rows[(n + m, j * p + k)] = r2 * disp[j] * proj[m][k];
            }
        }
    }
    MomentMatrix::assemble(
        rows,
        basis,
        grid,
        profiles,
        MomentKind::Viscoelastic,
        kernel.descriptor(),
    )
}

/// Output of [`min_norm_control`].
#[derive(Debug, Clone)]
pub struct MinNormSolution {
    pub control: ControlSignal,
    /// Predicted `H^{-1} x L^2` distance between the attained terminal state
    /// and the target.
    pub residual: f64,
    /// Number of singular values kept.
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

/// Least-norm control reaching the target rows, by truncated SVD of the
/// normalized map. `reg` is the relative truncation level; `0` keeps every
/// singular value above machine precision.
pub fn min_norm_control(
    target_xi: &CoeffState,
    target_eta: &CoeffState,
    mm: &MomentMatrix,
    reg: f64,
) -> Result<MinNormSolution> {
    if !(reg.is_finite() && reg >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "truncation level must be nonnegative, got {reg}"
        )));
    }
    let b = mm.target_rows(target_xi, target_eta)?;
    // the transposed (tall) matrix keeps the SVD in its thin form
    let svd = mm.normalized.transpose().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let sigma = &svd.singular_values;
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let cutoff = if reg > 0.0 {
        reg * smax
    } else {
        f64::EPSILON * smax * mm.normalized.ncols().max(mm.normalized.nrows()) as f64
    };
    // normalized^T = U S V^T, so normalized = V S U^T and its pseudo-inverse
    // is U S^+ V^T.
    let coeffs = vt * &b;
    let mut y = DVector::zeros(mm.normalized.ncols());
    let mut rank = 0;
    for (i, s) in sigma.iter().enumerate() {
        if *s > cutoff && *s > 0.0 {
            rank += 1;
            y += u.column(i) * (coeffs[i] / s);
        }
    }
    let attained = &mm.normalized * &y;
    let residual = (&b - attained).norm() / std::f64::consts::SQRT_2;
    let p = mm.profiles.len();
    let mut x = DVector::zeros(y.len());
    for (j, wj) in mm.weights.iter().enumerate() {
        let block = &mm.lgt_inv * y.rows(j * p, p) / wj.sqrt();
        x.rows_mut(j * p, p).copy_from(&block);
    }
    let control = ControlSignal::from_vector(mm.grid, mm.profiles.clone(), x.as_slice())?;
    let mut singular_values: Vec<f64> = sigma.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    Ok(MinNormSolution {
        control,
        residual,
        rank,
        singular_values,
    })
}

/// Which equation the closed-loop check integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulationForm {
    /// Original equation with memory acting on the elastic operator.
    #[default]
    Memory,
    /// Transformed equation with scalar memory terms.
    MacCamy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteeringReport {
    /// `H^{-1} x L^2` distance of `(w'(T), w(T))` from the target.
    pub terminal_error_hm1_l2: f64,
    pub control_norm: f64,
}

/// Forward-simulate the system from rest under `control` and measure the
/// terminal mismatch. Independent of any assembled moment matrix.
pub fn steer_and_verify(
    control: &ControlSignal,
    kernel: &MemoryKernel,
    basis: &EigenBasis,
    target_xi: &CoeffState,
    target_eta: &CoeffState,
    t: f64,
    form: SimulationForm,
) -> Result<SteeringReport> {
    let grid = *control.grid();
    check_horizon(t, &grid)?;
    let n = basis.len();
    if target_xi.len() != n || target_eta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: target_xi.len().min(target_eta.len()),
            context: "target coefficients",
        });
    }
    let g = control.modal_inputs(basis)?;
    let zeros = vec![0.0; n];
    let traj = match form {
        SimulationForm::Memory => {
            let forcing: Vec<Vec<f64>> = if kernel.is_zero() {
                g
            } else {
                let m = kernel.samples_on(&grid)?;
                g.into_iter()
                    .map(|gn| {
                        let mg = convolve(&m, &gn, grid.step());
                        gn.iter().zip(mg).map(|(a, b)| a + b).collect()
                    })
                    .collect()
            };
            simulate_memory(basis, kernel, &zeros, &zeros, Some(&forcing), &grid)?
        }
        SimulationForm::MacCamy => {
            let data = maccamy_constants(&resolvent_on_grid(kernel, &grid)?)?;
            simulate_transformed(basis, &data, &zeros, &zeros, Some(&g), &grid)?
        }
    };
    let mut err = 0.0;
    for (m, tr) in traj.modes.iter().enumerate() {
        let (w, wp) = tr.terminal();
        let lambda = basis.lambda(m);
        let dx = w - target_xi.coeffs()[m].re;
        let dv = (wp - target_eta.coeffs()[m].re) / lambda;
        err += dx * dx + dv * dv;
    }
    Ok(SteeringReport {
        terminal_error_hm1_l2: err.sqrt(),
        control_norm: control.norm(basis)?,
    })
}

/// Singular spectrum of a difference of terminal maps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSpectrum {
    /// Descending.
    pub singular_values: Vec<f64>,
    /// `sigma_k / sigma_1`.
    pub ratios: Vec<f64>,
}

impl GapSpectrum {
    /// Least-squares slope of `log sigma_k` against `log k` over the
    /// nonzero singular values.
    pub fn decay_exponent(&self) -> Option<f64> {
        fit_power_law(&self.singular_values)
    }
}

/// Least-squares exponent `p` in `values[k-1] ~ C k^p`, skipping
/// non-positive entries. `None` with fewer than two usable points.
pub fn fit_power_law(values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(k, v)| (((k + 1) as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Singular values of `mm_v - mm_e` on the normalized control space.
pub fn reachability_gap(mm_e: &MomentMatrix, mm_v: &MomentMatrix) -> Result<GapSpectrum> {
    let d = difference(mm_e, mm_v)?;
    let mut s: Vec<f64> = d.transpose().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let first = s.first().copied().unwrap_or(0.0);
    let ratios = s
        .iter()
        .map(|v| if first > 0.0 { v / first } else { 0.0 })
        .collect();
    Ok(GapSpectrum {
        singular_values: s,
        ratios,
    })
}

/// Per-mode norm of the row pair difference `mm_v - mm_e`.
pub fn row_difference_norms(mm_e: &MomentMatrix, mm_v: &MomentMatrix) -> Result<Vec<f64>> {
    let d = difference(mm_e, mm_v)?;
    let n = mm_e.mode_count();
    Ok((0..n)
        .map(|m| (d.row(m).norm_squared() + d.row(n + m).norm_squared()).sqrt())
        .collect())
}

fn difference(mm_e: &MomentMatrix, mm_v: &MomentMatrix) -> Result<DMatrix<f64>> {
    if mm_e.normalized.shape() != mm_v.normalized.shape() {
        return Err(Error::DimensionMismatch {
            expected: mm_e.normalized.ncols(),
            found: mm_v.normalized.ncols(),
            context: "moment matrix shapes",
        });
    }
    mm_e.grid.ensure_matches(&mm_v.grid, "moment matrix grids")?;
    Ok(&mm_v.normalized - &mm_e.normalized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Endpoint;
    use std::f64::consts::PI;

    fn left() -> Vec<Vec<f64>> {
        vec![vec![1.0]]
    }

    #[test]
    fn zero_signal_has_zero_norm() {
        let b = EigenBasis::interval(3, PI, Endpoint::Left).unwrap();
        let g = TimeGrid::from_horizon(1.0, 10).unwrap();
        let c = ControlSignal::zero(g, left()).unwrap();
        assert_eq!(c.norm(&b).unwrap(), 0.0);
        let one = ControlSignal::from_fn(g, left(), |_, _| 1.0).unwrap();
        assert!((one.norm(&b).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn amplitude_shape_checked() {
        let g = TimeGrid::from_horizon(1.0, 4).unwrap();
        assert!(ControlSignal::new(g, left(), vec![vec![0.0]; 4]).is_err());
        assert!(ControlSignal::new(g, left(), vec![vec![0.0, 1.0]; 5]).is_err());
    }

    #[test]
    fn zero_control_zero_moments() {
        let b = EigenBasis::interval(4, PI, Endpoint::Left).unwrap();
        let g = TimeGrid::from_horizon(2.0 * PI, 200).unwrap();
        let mm = build_elastic_moment_matrix(&b, 2.0 * PI, &g, &left()).unwrap();
        let c = ControlSignal::zero(g, left()).unwrap();
        assert_eq!(mm.apply_rows(&c).unwrap().norm(), 0.0);
        assert_eq!(mm.rows().nrows(), 8);
    }

    #[test]
    fn single_mode_exponential_moment() {
        let b = EigenBasis::interval(1, PI, Endpoint::Left).unwrap();
        let t = 3.0;
        let g = TimeGrid::from_horizon(t, 300).unwrap();
        let mm = build_elastic_moment_matrix(&b, t, &g, &left()).unwrap();
        let samples: Vec<Vec<Complex64>> = g
            .nodes()
            .map(|s| vec![Complex64::from_polar(1.0, -(t - s))])
            .collect();
        let m = mm.apply_complex(&samples).unwrap();
        let psi = (2.0 / PI).sqrt();
        assert!((m[0] - Complex64::new(psi * t, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn horizon_must_match_grid() {
        let b = EigenBasis::interval(2, PI, Endpoint::Left).unwrap();
        let g = TimeGrid::from_horizon(1.0, 10).unwrap();
        assert!(build_elastic_moment_matrix(&b, 2.0, &g, &left()).is_err());
    }

    #[test]
    fn zero_target_zero_control() {
        let b = EigenBasis::interval(5, PI, Endpoint::Left).unwrap();
        let t = 2.0 * PI + 0.3;
        let g = TimeGrid::from_horizon(t, 400).unwrap();
        let mm = build_elastic_moment_matrix(&b, t, &g, &left()).unwrap();
        let sol = min_norm_control(
            &CoeffState::zeros(5, Scale::L2),
            &CoeffState::zeros(5, Scale::HM1),
            &mm,
            DEFAULT_TRUNCATION,
        )
        .unwrap();
        assert!(sol.control.to_vector().iter().all(|v| *v == 0.0));
        assert_eq!(sol.residual, 0.0);
        assert_eq!(sol.rank, 10);
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let v: Vec<f64> = (1..=10).map(|k| 3.0 * (k as f64).powf(-1.5)).collect();
        assert!((fit_power_law(&v).unwrap() + 1.5).abs() < 1e-12);
        assert!(fit_power_law(&[1.0]).is_none());
    }

    #[test]
    fn identical_maps_have_zero_gap() {
        let b = EigenBasis::interval(3, PI, Endpoint::Left).unwrap();
        let g = TimeGrid::from_horizon(PI, 100).unwrap();
        let mm = build_elastic_moment_matrix(&b, PI, &g, &left()).unwrap();
        let gap = reachability_gap(&mm, &mm).unwrap();
        assert!(gap.singular_values.iter().all(|s| *s == 0.0));
    }
}
