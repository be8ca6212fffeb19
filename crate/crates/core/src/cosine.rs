//! Diagonal action of the cosine and sine operators and of powers of
//! `calA = i (-A)^{1/2}` on eigen-coefficient sequences.
//!
//! On the eigenbasis every operator is a multiplier:
//!
//! | operator   | multiplier on `alpha_n`   |
//! |------------|---------------------------|
//! | `R+(t)`    | `cos(lambda_n t)`         |
//! | `R-(t)`    | `i sin(lambda_n t)`       |
//! | `calA^k`   | `(i lambda_n)^k`          |
//!
//! Coefficients are complex so the factor `i` is carried literally; real
//! fields are the real parts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::EigenBasis;
use crate::control::ControlSignal;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Sobolev index of a coefficient sequence: the norm weight of `alpha_n` is
/// `lambda_n^s`. `H10 = 1`, `L2 = 0`, `HM1 = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scale(pub i32);

impl Scale {
    pub const H10: Scale = Scale(1);
    pub const L2: Scale = Scale(0);
    pub const HM1: Scale = Scale(-1);

    /// Scale after `k` applications of `calA`.
    pub fn shifted(self, k: i32) -> Scale {
        Scale(self.0 - k)
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            1 => write!(f, "H10"),
            0 => write!(f, "L2"),
            -1 => write!(f, "H-1"),
            s => write!(f, "H^{s}"),
        }
    }
}

/// Coefficients of a field in the eigenbasis, tagged with their scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffState {
    coeffs: Vec<Complex64>,
    scale: Scale,
}

impl CoeffState {
    pub fn new(coeffs: Vec<Complex64>, scale: Scale) -> Self {
        Self { coeffs, scale }
    }

    pub fn from_real(values: &[f64], scale: Scale) -> Self {
        Self::new(values.iter().map(|v| Complex64::new(*v, 0.0)).collect(), scale)
    }

    pub fn zeros(n: usize, scale: Scale) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); n], scale)
    }

    /// `e_index` (zero-based).
    pub fn unit(n: usize, index: usize, scale: Scale) -> Self {
        let mut s = Self::zeros(n, scale);
        s.coeffs[index] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re).collect()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.im.abs() <= tol)
    }

    /// `(sum lambda_n^{2s} |alpha_n|^2)^{1/2}`.
    pub fn norm(&self, basis: &EigenBasis) -> Result<f64> {
        self.check(basis)?;
        Ok(self
            .coeffs
            .iter()
            .zip(basis.modes())
            .map(|(c, m)| m.lambda.powi(2 * self.scale.0) * c.norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect(), self.scale)
    }

    /// Entrywise difference; scales must agree.
    pub fn difference(&self, other: &CoeffState) -> Result<CoeffState> {
        self.compatible(other)?;
        Ok(Self::new(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
            self.scale,
        ))
    }

    pub fn sum(&self, other: &CoeffState) -> Result<CoeffState> {
        self.compatible(other)?;
        Ok(Self::new(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            self.scale,
        ))
    }

    fn compatible(&self, other: &CoeffState) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
                context: "coefficient states",
            });
        }
        if self.scale != other.scale {
            return Err(Error::InvalidParameter(format!(
                "scale mismatch: {} vs {}",
                self.scale, other.scale
            )));
        }
        Ok(())
    }

    pub(crate) fn check(&self, basis: &EigenBasis) -> Result<()> {
        if self.len() == basis.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: self.len(),
                context: "state length vs basis modes",
            })
        }
    }

    fn map_modes(&self, basis: &EigenBasis, f: impl Fn(f64) -> Complex64) -> Result<CoeffState> {
        self.check(basis)?;
        Ok(Self::new(
            self.coeffs
                .iter()
                .zip(basis.modes())
                .map(|(c, m)| c * f(m.lambda))
                .collect(),
            self.scale,
        ))
    }
}

/// `R+(t)`: `alpha_n -> alpha_n cos(lambda_n t)`.
pub fn apply_cosine(state: &CoeffState, t: f64, basis: &EigenBasis) -> Result<CoeffState> {
    state.map_modes(basis, |l| Complex64::new((l * t).cos(), 0.0))
}

/// `R-(t)`: `alpha_n -> i alpha_n sin(lambda_n t)`.
pub fn apply_sine(state: &CoeffState, t: f64, basis: &EigenBasis) -> Result<CoeffState> {
    state.map_modes(basis, |l| Complex64::new(0.0, (l * t).sin()))
}

/// `calA^k`: `alpha_n -> (i lambda_n)^k alpha_n`; the scale drops by `k`.
pub fn apply_cal_a_power(state: &CoeffState, k: i32, basis: &EigenBasis) -> Result<CoeffState> {
    let mut out = state.map_modes(basis, |l| Complex64::new(0.0, l).powi(k))?;
    out.scale = state.scale.shifted(k);
    Ok(out)
}

/// Distributed forcing sampled on a time grid, one state per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledForcing {
    pub grid: TimeGrid,
    pub states: Vec<CoeffState>,
}

/// Per-mode Duhamel integrals `(1/lambda) int_0^t sin(lambda (t - s)) g(s) ds`
/// and `int_0^t cos(lambda (t - s)) g(s) ds` by the trapezoid rule on the
/// first `upto + 1` nodes.
pub(crate) fn duhamel(lambda: f64, g: &[f64], h: f64, upto: usize) -> (f64, f64) {
    if upto == 0 {
        return (0.0, 0.0);
    }
    let t = h * upto as f64;
    let mut sin_acc = 0.0;
    let mut cos_acc = 0.0;
    for (j, gj) in g.iter().enumerate().take(upto + 1) {
        let w = if j == 0 || j == upto { 0.5 * h } else { h };
        let phase = lambda * (t - h * j as f64);
        sin_acc += w * phase.sin() * gj;
        cos_acc += w * phase.cos() * gj;
    }
    (sin_acc / lambda, cos_acc)
}

/// Solution of the elastic system at time `t` from initial data, optional
/// distributed forcing and optional boundary control:
///
/// `u(t) = R+(t) u0 + calA^{-1} R-(t) u1 + calA^{-1} int R-(t - s) F ds + (boundary term)`
///
/// The boundary term is, per mode, the Duhamel integral of
/// `<trace_n, f(s)>_Gamma`. Time integrals use the trapezoid rule on the
/// forcing / control grid, which must end exactly at `t`.
pub fn elastic_solution(
    u0: &CoeffState,
    u1: &CoeffState,
    forcing: Option<&SampledForcing>,
    control: Option<&ControlSignal>,
    t: f64,
    basis: &EigenBasis,
) -> Result<(CoeffState, CoeffState)> {
    u0.check(basis)?;
    u1.check(basis)?;
    if u0.scale() != Scale::H10 && u0.scale() != Scale::L2 {
        return Err(Error::InvalidParameter(format!(
            "initial displacement must be in H10 or L2, got {}",
            u0.scale()
        )));
    }
    if u1.scale() != u0.scale().shifted(1) {
        return Err(Error::InvalidParameter(format!(
            "initial velocity scale {} must be one below displacement scale {}",
            u1.scale(),
            u0.scale()
        )));
    }

    // homogeneous part through the operator algebra
    let mut u = apply_cosine(u0, t, basis)?
        .sum(&apply_cal_a_power(&apply_sine(u1, t, basis)?, -1, basis)?)?;
    let mut up = apply_cal_a_power(&apply_sine(u0, t, basis)?, 1, basis)?
        .sum(&apply_cosine(u1, t, basis)?)?;

    // per-mode input g_n(t_j): forcing coefficients plus <trace_n, f(t_j)>
    let mut input: Option<(TimeGrid, Vec<Vec<Complex64>>)> = None;
    if let Some(f) = forcing {
        f.grid.ensure_samples(f.states.len(), "forcing samples")?;
        check_ends_at(&f.grid, t)?;
        let mut per_mode = vec![Vec::with_capacity(f.grid.len()); basis.len()];
        for s in &f.states {
            s.check(basis)?;
            for (n, c) in s.coeffs().iter().enumerate() {
                per_mode[n].push(*c);
            }
        }
        input = Some((f.grid, per_mode));
    }
    if let Some(c) = control {
        check_ends_at(c.grid(), t)?;
        let g = c.modal_inputs(basis)?;
        match &mut input {
            None => {
                let per_mode = g
                    .into_iter()
                    .map(|v| v.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
                    .collect();
                input = Some((*c.grid(), per_mode));
            }
            Some((grid, acc)) => {
                grid.ensure_matches(c.grid(), "forcing and control grids")?;
                for (a, v) in acc.iter_mut().zip(&g) {
                    for (x, y) in a.iter_mut().zip(v) {
                        *x += y;
                    }
                }
            }
        }
    }

    if let Some((grid, g)) = input {
        for (n, m) in basis.modes().iter().enumerate() {
            let re: Vec<f64> = g[n].iter().map(|c| c.re).collect();
            let im: Vec<f64> = g[n].iter().map(|c| c.im).collect();
            let (s_re, c_re) = duhamel(m.lambda, &re, grid.step(), grid.steps());
            let (s_im, c_im) = duhamel(m.lambda, &im, grid.step(), grid.steps());
            u.coeffs[n] += Complex64::new(s_re, s_im);
            up.coeffs[n] += Complex64::new(c_re, c_im);
        }
    }
    Ok((u, up))
}

fn check_ends_at(grid: &TimeGrid, t: f64) -> Result<()> {
    let end = grid.horizon();
    let tol = 1e-9 * end.max(1.0);
    if end > t + tol {
        return Err(Error::GridMismatch(format!(
            "input extends to {end}, beyond the evaluation time {t}"
        )));
    }
    if end < t - tol {
        return Err(Error::GridMismatch(format!(
            "input ends at {end}, before the evaluation time {t}"
        )));
    }
    Ok(())
}

/// Max-norm residual of `R-(s) R+(r) = (R-(s + r) + R-(s - r)) / 2` on `state`.
pub fn check_product_identity(s: f64, r: f64, state: &CoeffState, basis: &EigenBasis) -> Result<f64> {
    let lhs = apply_sine(&apply_cosine(state, r, basis)?, s, basis)?;
    let rhs = apply_sine(state, s + r, basis)?
        .sum(&apply_sine(state, s - r, basis)?)?
        .scaled(Complex64::new(0.5, 0.0));
    Ok(lhs.difference(&rhs)?.max_abs())
}
