//! Memory kernels, their resolvent kernels and the MacCamy constants.
//!
//! The resolvent `R` of a kernel `M` solves the second-kind Volterra
//! equation `R(t) + int_0^t M(t - s) R(s) ds = M(t)`. It is marched with the
//! trapezoid rule on a uniform grid. For a single exponential
//! `M(t) = c e^{-g t}` the resolvent is `R(t) = c e^{-(g + c) t}` and is
//! carried alongside the marched samples as an analytic form.
//!
//! From `R` we extract `a = R(0)`, `b = R'(0)` and `K = R''`, the data of the
//! transformed equation `w'' = Lw + a w' + b w + K * w + F1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{convolution_at, TimeGrid};

/// One term `weight * exp(-rate * t)` of a Prony series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PronyTerm {
    pub weight: f64,
    pub rate: f64,
}

impl PronyTerm {
    pub fn new(weight: f64, rate: f64) -> Self {
        Self { weight, rate }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelForm {
    /// `M = 0`.
    Zero,
    /// `M(t) = sum_i c_i exp(-g_i t)`.
    Prony(Vec<PronyTerm>),
    /// Values `M(j * step)`, `j = 0..values.len()`.
    Sampled { step: f64, values: Vec<f64> },
}

/// A relaxation kernel `M(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernel {
    form: KernelForm,
}

impl MemoryKernel {
    pub fn zero() -> Self {
        Self { form: KernelForm::Zero }
    }

    /// Prony series. Weights must be finite and rates finite and
    /// nonnegative; an empty list is the zero kernel.
    pub fn prony(terms: Vec<PronyTerm>) -> Result<Self> {
        for t in &terms {
            if !t.weight.is_finite() {
                return Err(Error::InvalidKernel(format!("non-finite Prony weight {}", t.weight)));
            }
            if !(t.rate.is_finite() && t.rate >= 0.0) {
                return Err(Error::InvalidKernel(format!(
                    "Prony rate must be finite and >= 0, got {}",
                    t.rate
                )));
            }
        }
        if terms.is_empty() {
            return Ok(Self::zero());
        }
        Ok(Self {
            form: KernelForm::Prony(terms),
        })
    }

    /// `M(t) = weight * exp(-rate * t)`.
    pub fn exponential(weight: f64, rate: f64) -> Result<Self> {
        Self::prony(vec![PronyTerm::new(weight, rate)])
    }

    /// Uniformly sampled kernel. Needs at least three finite samples so
    /// that second differences exist.
    pub fn sampled(step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidKernel(format!("sample step must be positive, got {step}")));
        }
        if values.len() < 3 {
            return Err(Error::InvalidKernel(format!(
                "sampled kernel needs at least 3 samples, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidKernel(format!("non-finite kernel sample {v}")));
        }
        Ok(Self {
            form: KernelForm::Sampled { step, values },
        })
    }

    /// Build a sampled kernel from `(t, M(t))` rows; the times must form a
    /// uniform grid starting at zero.
    pub fn from_rows(rows: &[(f64, f64)]) -> Result<Self> {
        if rows.len() < 3 {
            return Err(Error::InvalidKernel(format!(
                "sampled kernel needs at least 3 rows, got {}",
                rows.len()
            )));
        }
        let step = rows[1].0 - rows[0].0;
        if rows[0].0.abs() > 1e-12 * step.abs().max(1.0) {
            return Err(Error::InvalidKernel(format!(
                "sampled kernel must start at t = 0, got {}",
                rows[0].0
            )));
        }
        for (j, (t, _)) in rows.iter().enumerate() {
            let expected = step * j as f64;
            if (t - expected).abs() > 1e-9 * step.max(expected.abs()) {
                return Err(Error::InvalidKernel(format!(
                    "non-uniform kernel grid at row {j}: t = {t}, expected {expected}"
                )));
            }
        }
        Self::sampled(step, rows.iter().map(|r| r.1).collect())
    }

    pub fn form(&self) -> &KernelForm {
        &self.form
    }

    pub fn is_zero(&self) -> bool {
        match &self.form {
            KernelForm::Zero => true,
            KernelForm::Prony(terms) => terms.iter().all(|t| t.weight == 0.0),
            KernelForm::Sampled { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// Last time at which the kernel is known.
    pub fn horizon(&self) -> f64 {
        match &self.form {
            KernelForm::Zero | KernelForm::Prony(_) => f64::INFINITY,
            KernelForm::Sampled { step, values } => step * (values.len() - 1) as f64,
        }
    }

    /// Largest Prony decay rate (zero for other forms).
    pub fn max_rate(&self) -> f64 {
        match &self.form {
            KernelForm::Prony(terms) => terms.iter().map(|t| t.rate).fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    /// Kernel multiplied by a constant.
    pub fn scaled(&self, factor: f64) -> Self {
        let form = match &self.form {
            KernelForm::Zero => KernelForm::Zero,
            KernelForm::Prony(terms) => KernelForm::Prony(
                terms
                    .iter()
                    .map(|t| PronyTerm::new(t.weight * factor, t.rate))
                    .collect(),
            ),
            KernelForm::Sampled { step, values } => KernelForm::Sampled {
                step: *step,
                values: values.iter().map(|v| v * factor).collect(),
            },
        };
        Self { form }
    }

    /// Closed-form value for analytic kernels.
    pub fn eval(&self, t: f64) -> Option<f64> {
        match &self.form {
            KernelForm::Zero => Some(0.0),
            KernelForm::Prony(terms) => Some(prony_eval(terms, t, 0)),
            KernelForm::Sampled { .. } => None,
        }
    }

    /// Samples of `M` at the nodes of `grid`. A sampled kernel must cover
    /// the grid and its step must divide the grid step.
    pub fn samples_on(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        match &self.form {
            KernelForm::Zero => Ok(vec![0.0; grid.len()]),
            KernelForm::Prony(terms) => Ok(grid.nodes().map(|t| prony_eval(terms, t, 0)).collect()),
            KernelForm::Sampled { step, values } => {
                let ratio = grid.step() / step;
                let stride = ratio.round();
                if stride < 1.0 || (ratio - stride).abs() > 1e-9 * ratio {
                    return Err(Error::GridMismatch(format!(
                        "kernel sample step {step} does not divide grid step {}",
                        grid.step()
                    )));
                }
                let stride = stride as usize;
                let needed = grid.steps() * stride;
                if needed >= values.len() {
                    return Err(Error::GridMismatch(format!(
                        "sampled kernel covers [0, {}] but the grid reaches {}",
                        self.horizon(),
                        grid.horizon()
                    )));
                }
                Ok((0..grid.len()).map(|j| values[j * stride]).collect())
            }
        }
    }

    /// Short human-readable description used in reports.
    pub fn descriptor(&self) -> String {
        match &self.form {
            KernelForm::Zero => "zero".to_string(),
            KernelForm::Prony(terms) => {
                let parts: Vec<String> = terms
                    .iter()
                    .map(|t| format!("{}*exp(-{}t)", t.weight, t.rate))
                    .collect();
                format!("prony[{}]", parts.join(" + "))
            }
            KernelForm::Sampled { step, values } => {
                format!("sampled[{} samples, step {}]", values.len(), step)
            }
        }
    }
}

/// `order`-th derivative of a Prony series at `t`.
fn prony_eval(terms: &[PronyTerm], t: f64, order: i32) -> f64 {
    terms
        .iter()
        .map(|p| p.weight * (-p.rate).powi(order) * (-p.rate * t).exp())
        .sum()
}

/// Resolvent kernel of `M` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventData {
    grid: TimeGrid,
    values: Vec<f64>,
    derivative: Vec<f64>,
    marched: Vec<f64>,
    a: f64,
    b: f64,
    k: Vec<f64>,
    analytic: Option<Vec<PronyTerm>>,
    residual: f64,
    tolerance: f64,
}

impl ResolventData {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `R(t_j)`; analytic values when a closed form is known, marched otherwise.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `R'(t_j)`.
    pub fn derivative(&self) -> &[f64] {
        &self.derivative
    }

    /// Trapezoid-marched solution of the resolvent equation.
    pub fn marched(&self) -> &[f64] {
        &self.marched
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `K = R''` on the grid.
    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn analytic_form(&self) -> Option<&[PronyTerm]> {
        self.analytic.as_deref()
    }

    /// Grid residual of the resolvent identities at construction.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

/// Constants of the transformed (MacCamy) equation.
#[derive(Debug, Clone, PartialEq)]
pub struct MacCamyData {
    pub a: f64,
    pub b: f64,
    pub k: Vec<f64>,
    pub grid: TimeGrid,
}

impl MacCamyData {
    /// Data of the purely elastic equation.
    pub fn zero(grid: TimeGrid) -> Self {
        Self {
            a: 0.0,
            b: 0.0,
            k: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_resolvent(r: &ResolventData) -> Self {
        Self {
            a: r.a,
            b: r.b,
            k: r.k.clone(),
            grid: r.grid,
        }
    }

    /// Equivalent data after the substitution `v = e^{-a t / 2} w`, which
    /// removes the `a w'` term: `b -> b + a^2 / 4`, `K(t) -> e^{-a t / 2} K(t)`.
    pub fn without_damping(&self) -> Self {
        let half = 0.5 * self.a;
        Self {
            a: 0.0,
            b: self.b + half * half,
            k: self
                .k
                .iter()
                .enumerate()
                .map(|(j, k)| (-half * self.grid.node(j)).exp() * k)
                .collect(),
            grid: self.grid,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.b == 0.0 && self.k.iter().all(|k| *k == 0.0)
    }

    /// Trapezoid `L^1` norm of `K` over the grid.
    pub fn k_l1(&self) -> f64 {
        let abs: Vec<f64> = self.k.iter().map(|v| v.abs()).collect();
        crate::grid::trapezoid(&abs, self.grid.step())
    }
}

/// Solve `R + M * R = M` by trapezoid marching on a grid with step `h`.
pub fn march_resolvent(m: &[f64], h: f64) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let denom = 1.0 + 0.5 * h * m[0];
    if denom.abs() < 1e-12 {
        return Err(Error::Singular(format!(
            "trapezoid resolvent step is singular (1 + h M(0)/2 = {denom})"
        )));
    }
    let mut r = vec![0.0; m.len()];
    r[0] = m[0];
    for j in 1..m.len() {
        let mut hist = 0.5 * m[j] * r[0];
        for k in 1..j {
            hist += m[j - k] * r[k];
        }
        r[j] = (m[j] - h * hist) / denom;
    }
    Ok(r)
}

/// Analytic resolvent when one is available: zero for the zero kernel,
/// `c e^{-(g + c) t}` for a single exponential.
fn analytic_resolvent(kernel: &MemoryKernel) -> Option<Vec<PronyTerm>> {
    match kernel.form() {
        KernelForm::Zero => Some(Vec::new()),
        KernelForm::Prony(terms) if terms.len() == 1 => {
            let t = terms[0];
            Some(vec![PronyTerm::new(t.weight, t.rate + t.weight)])
        }
        _ => None,
    }
}

/// Resolvent kernel of `kernel` on `[0, horizon]` with step `step`.
///
/// The horizon is rounded up to a whole number of steps. Prony kernels with
/// `max rate * step > 1` are rejected as under-resolved.
pub fn resolvent_kernel(kernel: &MemoryKernel, step: f64, horizon: f64) -> Result<ResolventData> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    if !(horizon.is_finite() && horizon >= 2.0 * step) {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must cover at least two steps of {step}"
        )));
    }
    let steps = (horizon / step - 1e-9).ceil() as usize;
    resolvent_on_grid(kernel, &TimeGrid::new(step, steps)?)
}

/// Resolvent kernel of `kernel` on the nodes of `grid`.
pub fn resolvent_on_grid(kernel: &MemoryKernel, grid: &TimeGrid) -> Result<ResolventData> {
    if grid.steps() < 2 {
        return Err(Error::InvalidParameter("resolvent grid needs at least two steps".into()));
    }
    let rate = kernel.max_rate();
    if rate * grid.step() > 1.0 {
        return Err(Error::UnderResolvedKernel {
            rate,
            step: grid.step(),
        });
    }
    let h = grid.step();
    let m = kernel.samples_on(grid)?;
    let marched = march_resolvent(&m, h)?;
    let analytic = analytic_resolvent(kernel);

    let (values, derivative, k, a, b) = match &analytic {
        Some(terms) => {
            let values: Vec<f64> = grid.nodes().map(|t| prony_eval(terms, t, 0)).collect();
            let derivative: Vec<f64> = grid.nodes().map(|t| prony_eval(terms, t, 1)).collect();
            let k: Vec<f64> = grid.nodes().map(|t| prony_eval(terms, t, 2)).collect();
            let a = prony_eval(terms, 0.0, 0);
            let b = prony_eval(terms, 0.0, 1);
            (values, derivative, k, a, b)
        }
        None => {
            let (d1, d2) = finite_differences(&marched, h)?;
            let a = marched[0];
            let b = d1[0];
            (marched.clone(), d1, d2, a, b)
        }
    };

    let residual = identity_residual(&m, &values, h);
    let tolerance = match (&analytic, kernel.form()) {
        (Some(r_terms), KernelForm::Prony(m_terms)) => {
            trapezoid_bound(m_terms, r_terms, grid.horizon(), h) + 1e-12
        }
        _ => 1e-8,
    };
    if residual.is_nan() || residual > tolerance {
        return Err(Error::Singular(format!(
            "resolvent residual {residual:e} exceeds tolerance {tolerance:e}"
        )));
    }

    Ok(ResolventData {
        grid: *grid,
        values,
        derivative,
        marched,
        a,
        b,
        k,
        analytic,
        residual,
        tolerance,
    })
}

/// Bound on the trapezoid error of `int_0^t M(t - s) R(s) ds` for Prony
/// `M` and `R`: `t h^2 / 12 * sup |f''|`.
fn trapezoid_bound(m: &[PronyTerm], r: &[PronyTerm], horizon: f64, h: f64) -> f64 {
    // f(s) = e^{-g_p (t - s)} e^{-g_q s} has f'' = (g_p - g_q)^2 f, and |f| is
    // largest at an endpoint of [0, t].
    let mut sup = 0.0;
    for p in m {
        for q in r {
            let rate = p.rate - q.rate;
            let growth = (-p.rate * horizon).exp().max((-q.rate * horizon).exp()).max(1.0);
            sup += (p.weight * q.weight).abs() * rate * rate * growth;
        }
    }
    horizon * h * h / 12.0 * sup
}

/// First and second derivatives by second-order finite differences:
/// centered in the interior, one-sided at the ends.
fn finite_differences(r: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = r.len();
    if n < 5 {
        return Err(Error::InvalidParameter(format!(
            "second differences need at least 5 nodes, got {n}"
        )));
    }
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for j in 1..n - 1 {
        d1[j] = (r[j + 1] - r[j - 1]) / (2.0 * h);
        d2[j] = (r[j + 1] - 2.0 * r[j] + r[j - 1]) / (h * h);
    }
    d1[0] = (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * h);
    d1[n - 1] = (3.0 * r[n - 1] - 4.0 * r[n - 2] + r[n - 3]) / (2.0 * h);
    d2[0] = (2.0 * r[0] - 5.0 * r[1] + 4.0 * r[2] - r[3]) / (h * h);
    d2[n - 1] = (2.0 * r[n - 1] - 5.0 * r[n - 2] + 4.0 * r[n - 3] - r[n - 4]) / (h * h);
    Ok((d1, d2))
}

/// `(a, b, K)` from a resolvent: exact derivatives of the analytic form
/// when one is stored, finite differences of the samples otherwise.
pub fn maccamy_constants(r: &ResolventData) -> Result<MacCamyData> {
    if r.grid.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "resolvent grid needs at least 5 nodes, got {}",
            r.grid.len()
        )));
    }
    match &r.analytic {
        Some(terms) => Ok(MacCamyData {
            a: prony_eval(terms, 0.0, 0),
            b: prony_eval(terms, 0.0, 1),
            k: r.grid.nodes().map(|t| prony_eval(terms, t, 2)).collect(),
            grid: r.grid,
        }),
        None => {
            let (d1, d2) = finite_differences(&r.values, r.grid.step())?;
            Ok(MacCamyData {
                a: r.values[0],
                b: d1[0],
                k: d2,
                grid: r.grid,
            })
        }
    }
}

fn identity_residual(m: &[f64], r: &[f64], h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.len() {
        let mr = convolution_at(m, r, j, h);
        let rm = convolution_at(r, m, j, h);
        worst = worst
            .max((r[j] + mr - m[j]).abs())
            .max((m[j] - r[j] - rm).abs());
    }
    worst
}

/// Largest grid residual of `R + M * R = M` and of `M = R + R * M`.
pub fn verify_resolvent_identity(kernel: &MemoryKernel, r: &ResolventData) -> Result<f64> {
    let m = kernel.samples_on(&r.grid)?;
    Ok(identity_residual(&m, &r.values, r.grid.step()))
}

/// Residual check for arbitrary resolvent samples on `grid`.
pub fn resolvent_samples_residual(
    kernel: &MemoryKernel,
    r: &[f64],
    grid: &TimeGrid,
) -> Result<f64> {
    grid.ensure_samples(r.len(), "resolvent samples")?;
    let m = kernel.samples_on(grid)?;
    Ok(identity_residual(&m, r, grid.step()))
}
