//! Forward simulation of single modes of the viscoelastic system.
//!
//! Each mode obeys one of two equivalent scalar equations:
//!
//! * memory form: `z'' = -lambda^2 z - lambda^2 (M * z) + g`
//! * transformed form: `z'' = -lambda^2 z + b z + (K * z) + g`
//!
//! Both are integrated with a kick-rotate-kick step: the elastic part
//! `z'' = -lambda^2 z` is propagated exactly over each step and the remaining
//! right-hand side is applied as two half kicks (trapezoid rule). History
//! convolutions use the trapezoid rule over the full stored past; the
//! newest node enters the convolution only after the rotation has produced
//! it, so the scheme is explicit. With no memory the scheme reproduces the
//! Duhamel integral of the elastic solution exactly.
//!
//! A second, independent discretization marches the integral form
//! `Z = U + Q * Z` of the transformed equation directly.

use rayon::prelude::*;

use crate::basis::EigenBasis;
use crate::cosine::{CoeffState, Scale};
use crate::error::{Error, Result};
use crate::grid::{convolution_at, TimeGrid};
use crate::kernel::{maccamy_constants, resolvent_on_grid, MacCamyData, MemoryKernel};

/// Largest admissible `lambda * step`.
pub const RESOLUTION_LIMIT: f64 = 0.5;

/// Values `Z(t_j)` and `Z'(t_j)` of one mode on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalTrajectory {
    grid: TimeGrid,
    z: Vec<f64>,
    zp: Vec<f64>,
}

impl ModalTrajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn zp(&self) -> &[f64] {
        &self.zp
    }

    /// `(Z(T), Z'(T))`.
    pub fn terminal(&self) -> (f64, f64) {
        let j = self.grid.steps();
        (self.z[j], self.zp[j])
    }

    pub fn max_abs(&self) -> f64 {
        self.z.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Largest nodal distance in `Z`.
    pub fn max_difference(&self, other: &ModalTrajectory) -> f64 {
        self.z
            .iter()
            .zip(&other.z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest nodal distance in `Z'`.
    pub fn max_derivative_difference(&self, other: &ModalTrajectory) -> f64 {
        self.zp
            .iter()
            .zip(&other.zp)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn guard(lambda: f64, h: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    if lambda * h > RESOLUTION_LIMIT {
        return Err(Error::UnderResolvedMode {
            mode: None,
            lambda,
            step: h,
        });
    }
    Ok(())
}

fn check_forcing(forcing: Option<&[f64]>, grid: &TimeGrid) -> Result<()> {
    if let Some(g) = forcing {
        grid.ensure_samples(g.len(), "forcing samples")?;
    }
    Ok(())
}

/// Kick-rotate-kick integration of
/// `z'' = -lambda^2 z + instant z + (history * z) + forcing`.
fn kick_rotate_kick(
    lambda: f64,
    instant: f64,
    history: Option<&[f64]>,
    z0: f64,
    z1: f64,
    forcing: Option<&[f64]>,
    grid: &TimeGrid,
) -> ModalTrajectory {
    let h = grid.step();
    let n = grid.len();
    let (s, c) = (lambda * h).sin_cos();
    let mut z = vec![0.0; n];
    let mut zp = vec![0.0; n];
    z[0] = z0;
    zp[0] = z1;

    let rhs = |z: &[f64], j: usize| -> f64 {
        let mut v = instant * z[j];
        if let Some(k) = history {
            v += convolution_at(k, z, j, h);
        }
        if let Some(g) = forcing {
            v += g[j];
        }
        v
    };

    let mut kick = rhs(&z, 0);
    for j in 0..n - 1 {
        let p = zp[j] + 0.5 * h * kick;
        z[j + 1] = c * z[j] + s / lambda * p;
        let q = -lambda * s * z[j] + c * p;
        kick = rhs(&z, j + 1);
        zp[j + 1] = q + 0.5 * h * kick;
    }
    ModalTrajectory { grid: *grid, z, zp }
}

/// One mode of the memory form
/// `z'' = -lambda^2 z - lambda^2 int_0^t M(t - s) z(s) ds + g`.
pub fn solve_modal_memory(
    lambda: f64,
    kernel: &MemoryKernel,
    z0: f64,
    z1: f64,
    forcing: Option<&[f64]>,
    grid: &TimeGrid,
) -> Result<ModalTrajectory> {
    guard(lambda, grid.step())?;
    check_forcing(forcing, grid)?;
    let history = if kernel.is_zero() {
        None
    } else {
        let l2 = lambda * lambda;
        Some(kernel.samples_on(grid)?.into_iter().map(|m| -l2 * m).collect::<Vec<_>>())
    };
    Ok(kick_rotate_kick(lambda, 0.0, history.as_deref(), z0, z1, forcing, grid))
}

/// One mode of the transformed form without damping
/// `z'' = -lambda^2 z + b z + int_0^t K(t - s) z(s) ds + g`.
pub fn solve_modal_maccamy(
    lambda: f64,
    b: f64,
    k: &[f64],
    z0: f64,
    z1: f64,
    forcing: Option<&[f64]>,
    grid: &TimeGrid,
) -> Result<ModalTrajectory> {
    guard(lambda, grid.step())?;
    check_forcing(forcing, grid)?;
    grid.ensure_samples(k.len(), "kernel K samples")?;
    let history = if k.iter().all(|v| *v == 0.0) { None } else { Some(k) };
    Ok(kick_rotate_kick(lambda, b, history, z0, z1, forcing, grid))
}

/// One mode of the transformed form with damping
/// `w'' = -lambda^2 w + a w' + b w + (K * w) + g`, solved through
/// `v = e^{-a t / 2} w`.
pub fn solve_modal_damped(
    lambda: f64,
    data: &MacCamyData,
    z0: f64,
    z1: f64,
    forcing: Option<&[f64]>,
    grid: &TimeGrid,
) -> Result<ModalTrajectory> {
    grid.ensure_matches(&data.grid, "transformed-equation data")?;
    check_forcing(forcing, grid)?;
    let half = 0.5 * data.a;
    if half == 0.0 {
        return solve_modal_maccamy(lambda, data.b, &data.k, z0, z1, forcing, grid);
    }
    let shifted = data.without_damping();
    let damped: Option<Vec<f64>> = forcing.map(|g| {
        g.iter()
            .enumerate()
            .map(|(j, v)| (-half * grid.node(j)).exp() * v)
            .collect()
    });
    let v = solve_modal_maccamy(
        lambda,
        shifted.b,
        &shifted.k,
        z0,
        z1 - half * z0,
        damped.as_deref(),
        grid,
    )?;
    Ok(undamp(&v, half))
}

/// `w = e^{a t / 2} v`, `w' = e^{a t / 2} (v' + a v / 2)`.
fn undamp(v: &ModalTrajectory, half: f64) -> ModalTrajectory {
    let grid = v.grid;
    let mut z = Vec::with_capacity(grid.len());
    let mut zp = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let e = (half * grid.node(j)).exp();
        z.push(e * v.z[j]);
        zp.push(e * (v.zp[j] + half * v.z[j]));
    }
    ModalTrajectory { grid, z, zp }
}

/// Kernel `Q` of the integral form `Z = U + Q * Z` and its derivative:
/// `Q(t) = (b / lambda) sin(lambda t) + (1 / lambda) int_0^t sin(lambda (t - u)) K(u) du`.
fn integral_kernel(lambda: f64, b: f64, k: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = k.len();
    let mut q = vec![0.0; n];
    let mut dq = vec![0.0; n];
    // cumulative trapezoid sums of cos(lambda u) K(u) and sin(lambda u) K(u)
    let mut cum_c = 0.0;
    let mut cum_s = 0.0;
    let mut prev_c = k[0];
    let mut prev_s = 0.0;
    for j in 0..n {
        let t = h * j as f64;
        let (st, ct) = (lambda * t).sin_cos();
        if j > 0 {
            let fc = ct * k[j];
            let fs = st * k[j];
            cum_c += 0.5 * h * (prev_c + fc);
            cum_s += 0.5 * h * (prev_s + fs);
            prev_c = fc;
            prev_s = fs;
        }
        let sin_conv = st * cum_c - ct * cum_s;
        let cos_conv = ct * cum_c + st * cum_s;
        q[j] = (b * st + sin_conv) / lambda;
        dq[j] = b * ct + cos_conv;
    }
    (q, dq)
}

/// One mode of the transformed form by trapezoid marching of the
/// equivalent Volterra equation
/// `Z(t) = Z0 cos(lambda t) + Z1 sin(lambda t) / lambda + (b / lambda) int sin(lambda (t - s)) Z ds
///        + (1 / lambda) int sin(lambda (t - s)) int K(s - r) Z(r) dr ds + (forcing term)`.
pub fn solve_modal_volterra(
    lambda: f64,
    b: f64,
    k: &[f64],
    z0: f64,
    z1: f64,
    forcing: Option<&[f64]>,
    grid: &TimeGrid,
) -> Result<ModalTrajectory> {
    guard(lambda, grid.step())?;
    check_forcing(forcing, grid)?;
    grid.ensure_samples(k.len(), "kernel K samples")?;
    let h = grid.step();
    let n = grid.len();
    let (q, dq) = integral_kernel(lambda, b, k, h);

    let mut z = vec![0.0; n];
    let mut zp = vec![0.0; n];
    for j in 0..n {
        let t = grid.node(j);
        let (st, ct) = (lambda * t).sin_cos();
        let mut u = z0 * ct + z1 * st / lambda;
        let mut up = -lambda * z0 * st + z1 * ct;
        if let Some(g) = forcing {
            let (ds, dc) = crate::cosine::duhamel(lambda, g, h, j);
            u += ds;
            up += dc;
        }
        // Q(0) = 0, so the unknown z[j] does not enter its own equation.
        z[j] = u + convolution_at(&q, &z, j, h);
        zp[j] = up + convolution_at(&dq, &z, j, h);
    }
    Ok(ModalTrajectory { grid: *grid, z, zp })
}

/// Distance between the memory-form solution `w` and the transformed-form
/// solution `e^{a t / 2} v`, both started from `(z0, z1)` with no forcing.
///
/// The transformed equation carries the initial-data forcing
/// `F1(t) = -R(t) z1 - R'(t) z0` and starts from `v(0) = z0`,
/// `v'(0) = z1 - a z0 / 2`.
pub fn maccamy_equivalence_residual(
    lambda: f64,
    kernel: &MemoryKernel,
    z0: f64,
    z1: f64,
    grid: &TimeGrid,
) -> Result<f64> {
    let w = solve_modal_memory(lambda, kernel, z0, z1, None, grid)?;
    let resolvent = resolvent_on_grid(kernel, grid)?;
    let data = maccamy_constants(&resolvent)?;
    let f1: Vec<f64> = resolvent
        .values()
        .iter()
        .zip(resolvent.derivative())
        .map(|(r, dr)| -r * z1 - dr * z0)
        .collect();
    let v = solve_modal_damped(lambda, &data, z0, z1, Some(&f1), grid)?;
    Ok(w.max_difference(&v))
}

/// Responses of one mode to unit forcing samples at node 0 and at node 1.
///
/// With `data` present the responses are those of the damped transformed
/// equation written for `v = e^{-a t / 2} w` (the caller rescales); without
/// it they are elastic. Every other node's response is the node-1 response
/// shifted in time.
pub(crate) fn unit_sample_responses(
    lambda: f64,
    data: Option<&MacCamyData>,
    grid: &TimeGrid,
) -> Result<(ModalTrajectory, ModalTrajectory)> {
    let mut e0 = vec![0.0; grid.len()];
    e0[0] = 1.0;
    let mut e1 = vec![0.0; grid.len()];
    e1[1] = 1.0;
    match data {
        None => Ok((
            solve_modal_maccamy(lambda, 0.0, &vec![0.0; grid.len()], 0.0, 0.0, Some(&e0), grid)?,
            solve_modal_maccamy(lambda, 0.0, &vec![0.0; grid.len()], 0.0, 0.0, Some(&e1), grid)?,
        )),
        Some(d) => {
            let s = d.without_damping();
            Ok((
                solve_modal_maccamy(lambda, s.b, &s.k, 0.0, 0.0, Some(&e0), grid)?,
                solve_modal_maccamy(lambda, s.b, &s.k, 0.0, 0.0, Some(&e1), grid)?,
            ))
        }
    }
}

/// Response of every mode to a boundary impulse with spatial shape
/// `profile`: a hat of unit integral at `t = 0` (half-width `h`), zero
/// initial data. Elastic when `data` is `None`, viscoelastic (transformed
/// form, damping included) otherwise.
pub fn boundary_response_kernel(
    basis: &EigenBasis,
    data: Option<&MacCamyData>,
    profile: &[f64],
    grid: &TimeGrid,
) -> Result<Vec<ModalTrajectory>> {
    if profile.len() != basis.node_count() {
        return Err(Error::DimensionMismatch {
            expected: basis.node_count(),
            found: profile.len(),
            context: "control profile vs boundary nodes",
        });
    }
    if let Some(d) = data {
        grid.ensure_matches(&d.grid, "transformed-equation data")?;
    }
    let zero = MacCamyData::zero(*grid);
    let data = data.unwrap_or(&zero);
    let h = grid.step();
    (0..basis.len())
        .into_par_iter()
        .map(|n| {
            let mut g = vec![0.0; grid.len()];
            g[0] = 2.0 / h * basis.project(n, profile);
            solve_modal_damped(basis.lambda(n), data, 0.0, 0.0, Some(&g), grid)
                .map_err(|e| e.at_mode(n + 1))
        })
        .collect()
}

/// Terms and partial sum of the Picard expansion of the solution of
/// `psi'' = -lambda^2 psi + b psi + K * psi`, `psi(0) = xi`, `psi'(0) = eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardExpansion {
    /// Partial sum at the requested time.
    pub state: CoeffState,
    /// `sup_{s <= t}` of the state norm of each term, starting with the
    /// elastic term.
    pub term_norms: Vec<f64>,
    /// Bound on the norm of the omitted terms, valid on `[0, t]`.
    pub tail_bound: f64,
    /// Partial-sum trajectories per mode on `[0, t]`.
    pub trajectories: Vec<Vec<f64>>,
}

/// Partial sum of `w = u + sum_{n >= 1} calA^{-n} (L^{*n} * u)` with
/// `n_terms` terms in total (`n_terms = 1` is the elastic solution `u`).
///
/// Per mode `calA^{-1} L(t)` acts as the scalar kernel
/// `Q(t) = (b sin(lambda t) + int_0^t K(t - r) sin(lambda r) dr) / lambda`, so
/// term `n` is the `n`-fold trapezoid convolution `Q * ... * Q * u`. The data
/// must be in undamped form (`a = 0`).
pub fn picard_series(
    xi: &CoeffState,
    eta: &CoeffState,
    data: &MacCamyData,
    t: f64,
    basis: &EigenBasis,
    n_terms: usize,
) -> Result<PicardExpansion> {
    if n_terms == 0 {
        return Err(Error::InvalidParameter("Picard expansion needs at least one term".into()));
    }
    if data.a != 0.0 {
        return Err(Error::InvalidParameter(
            "Picard expansion expects undamped data (a = 0); use without_damping()".into(),
        ));
    }
    xi.check(basis)?;
    eta.check(basis)?;
    if eta.scale() != xi.scale().shifted(1) {
        return Err(Error::InvalidParameter(format!(
            "velocity scale {} must be one below displacement scale {}",
            eta.scale(),
            xi.scale()
        )));
    }
    let grid = data.grid;
    let jt = grid.index_of(t).ok_or_else(|| {
        Error::GridMismatch(format!("time {t} is not a node of the kernel grid"))
    })?;
    let h = grid.step();
    let span = grid.node(jt);
    let weight_power = 2 * xi.scale().0;

    struct ModeTerms {
        sums: [Vec<f64>; 2],
        norms: Vec<f64>,
        tail: f64,
    }

    let per_mode: Vec<ModeTerms> = (0..basis.len())
        .into_par_iter()
        .map(|n| {
            let lambda = basis.lambda(n);
            let (q, _) = integral_kernel(lambda, data.b, &data.k[..=jt], h);
            let q_sup = q.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let x = xi.coeffs()[n];
            let y = eta.coeffs()[n];
            let mut norms = vec![0.0; n_terms];
            let mut sums = [vec![0.0; jt + 1], vec![0.0; jt + 1]];
            let mut u_sup: f64 = 0.0;
            for (part, (x0, y0)) in [(x.re, y.re), (x.im, y.im)].into_iter().enumerate() {
                let mut term: Vec<f64> = (0..=jt)
                    .map(|j| {
                        let (st, ct) = (lambda * grid.node(j)).sin_cos();
                        x0 * ct + y0 * st / lambda
                    })
                    .collect();
                u_sup = u_sup.max(term.iter().map(|v| v.abs()).fold(0.0, f64::max));
                for (k, norm) in norms.iter_mut().enumerate() {
                    if k > 0 {
                        term = (0..=jt).map(|j| convolution_at(&q, &term, j, h)).collect();
                    }
                    let sup = term.iter().map(|v| v * v).fold(0.0, f64::max);
                    *norm += sup;
                    for (s, v) in sums[part].iter_mut().zip(&term) {
                        *s += v;
                    }
                }
            }
            ModeTerms {
                sums,
                norms,
                tail: factorial_tail(u_sup * std::f64::consts::SQRT_2, q_sup * span, n_terms),
            }
        })
        .collect();

    let weight = |n: usize| basis.lambda(n).powi(weight_power);
    let mut term_norms = vec![0.0; n_terms];
    let mut tail = 0.0;
    let mut coeffs = Vec::with_capacity(basis.len());
    let mut trajectories = Vec::with_capacity(basis.len());
    for (n, m) in per_mode.iter().enumerate() {
        for (acc, v) in term_norms.iter_mut().zip(&m.norms) {
            *acc += weight(n) * v;
        }
        tail += weight(n) * m.tail * m.tail;
        coeffs.push(num_complex::Complex64::new(m.sums[0][jt], m.sums[1][jt]));
        trajectories.push(m.sums[0].clone());
    }
    Ok(PicardExpansion {
        state: CoeffState::new(coeffs, xi.scale()),
        term_norms: term_norms.into_iter().map(f64::sqrt).collect(),
        tail_bound: tail.sqrt(),
        trajectories,
    })
}

/// `amp * sum_{k >= from} x^k / k!`.
fn factorial_tail(amp: f64, x: f64, from: usize) -> f64 {
    let mut term = amp;
    for k in 1..=from {
        term *= x / k as f64;
    }
    let mut total = 0.0;
    let mut k = from;
    while term > 1e-300 && (total == 0.0 || term > 1e-18 * total) {
        total += term;
        k += 1;
        term *= x / k as f64;
        if k > from + 10_000 {
            break;
        }
    }
    total
}

/// Homogeneous responses `(psi0_n, psi1_n)` of every mode to unit initial
/// data `(1, 0)` and `(0, 1)` in the memory form.
pub fn unit_data_responses_memory(
    basis: &EigenBasis,
    kernel: &MemoryKernel,
    grid: &TimeGrid,
) -> Result<Vec<(ModalTrajectory, ModalTrajectory)>> {
    (0..basis.len())
        .into_par_iter()
        .map(|n| {
            let l = basis.lambda(n);
            let a = solve_modal_memory(l, kernel, 1.0, 0.0, None, grid).map_err(|e| e.at_mode(n + 1))?;
            let b = solve_modal_memory(l, kernel, 0.0, 1.0, None, grid).map_err(|e| e.at_mode(n + 1))?;
            Ok((a, b))
        })
        .collect()
}

/// Homogeneous responses of every mode to unit initial data in the
/// undamped transformed form.
pub fn unit_data_responses_maccamy(
    basis: &EigenBasis,
    data: &MacCamyData,
    grid: &TimeGrid,
) -> Result<Vec<(ModalTrajectory, ModalTrajectory)>> {
    (0..basis.len())
        .into_par_iter()
        .map(|n| {
            let l = basis.lambda(n);
            let a = solve_modal_maccamy(l, data.b, &data.k, 1.0, 0.0, None, grid)
                .map_err(|e| e.at_mode(n + 1))?;
            let b = solve_modal_maccamy(l, data.b, &data.k, 0.0, 1.0, None, grid)
                .map_err(|e| e.at_mode(n + 1))?;
            Ok((a, b))
        })
        .collect()
}

/// Per-mode trajectories of a whole coefficient state.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTrajectory {
    pub modes: Vec<ModalTrajectory>,
}

impl BasisTrajectory {
    pub fn grid(&self) -> &TimeGrid {
        self.modes[0].grid()
    }

    /// `(w(T), w'(T))` as coefficient states at the given scales.
    pub fn terminal_states(&self, scale: Scale) -> (CoeffState, CoeffState) {
        let (z, zp): (Vec<f64>, Vec<f64>) = self.modes.iter().map(|m| m.terminal()).unzip();
        (
            CoeffState::from_real(&z, scale),
            CoeffState::from_real(&zp, scale.shifted(1)),
        )
    }
}

/// Simulate all modes of the memory form from real initial data with
/// per-mode forcing.
pub fn simulate_memory(
    basis: &EigenBasis,
    kernel: &MemoryKernel,
    w0: &[f64],
    w1: &[f64],
    forcing: Option<&[Vec<f64>]>,
    grid: &TimeGrid,
) -> Result<BasisTrajectory> {
    check_modes(basis, w0.len(), w1.len(), forcing.map(|f| f.len()))?;
    let modes = (0..basis.len())
        .into_par_iter()
        .map(|n| {
            solve_modal_memory(
                basis.lambda(n),
                kernel,
                w0[n],
                w1[n],
                forcing.map(|f| f[n].as_slice()),
                grid,
            )
            .map_err(|e| e.at_mode(n + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BasisTrajectory { modes })
}

/// Simulate all modes of the damped transformed form.
pub fn simulate_transformed(
    basis: &EigenBasis,
    data: &MacCamyData,
    w0: &[f64],
    w1: &[f64],
    forcing: Option<&[Vec<f64>]>,
    grid: &TimeGrid,
) -> Result<BasisTrajectory> {
    check_modes(basis, w0.len(), w1.len(), forcing.map(|f| f.len()))?;
    let modes = (0..basis.len())
        .into_par_iter()
        .map(|n| {
            solve_modal_damped(
                basis.lambda(n),
                data,
                w0[n],
                w1[n],
                forcing.map(|f| f[n].as_slice()),
                grid,
            )
            .map_err(|e| e.at_mode(n + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BasisTrajectory { modes })
}

fn check_modes(basis: &EigenBasis, a: usize, b: usize, f: Option<usize>) -> Result<()> {
    for (len, context) in [(a, "initial displacement"), (b, "initial velocity")]
        .into_iter()
        .chain(f.map(|l| (l, "forcing modes")))
    {
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
