//! Eigenvalue and boundary-trace data of the Dirichlet operator.
//!
//! Consumers never need eigenfunctions in the interior: everything the
//! control machinery uses is the sequence `lambda_n` (with `-lambda_n^2` the
//! eigenvalue) and the boundary trace of each eigenfunction sampled at the
//! quadrature nodes of the active boundary part. Traces are inward normal
//! derivatives, so a positive boundary value drives mode `n` with the sign
//! of its trace.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Interval,
    Rectangle,
    Abstract,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    /// `y = 0`
    Bottom,
    /// `y = Ly`
    Top,
    /// `x = 0`
    Left,
    /// `x = Lx`
    Right,
}

/// One eigenpair as seen from the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub lambda: f64,
    pub trace: Vec<f64>,
}

/// Ordered spectrum with boundary traces and boundary quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    dim: Dimension,
    modes: Vec<Mode>,
    weights: Vec<f64>,
}

impl EigenBasis {
    /// Validates ordering (`lambda_n <= lambda_{n+1}`), positivity, positive
    /// weights and trace lengths.
    pub fn new(dim: Dimension, modes: Vec<Mode>, weights: Vec<f64>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidBasis("basis has no modes".into()));
        }
        if weights.is_empty() {
            return Err(Error::InvalidBasis("active boundary has no quadrature nodes".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidBasis(format!("quadrature weight {w} is not positive")));
        }
        for (n, m) in modes.iter().enumerate() {
            if !(m.lambda.is_finite() && m.lambda > 0.0) {
                return Err(Error::InvalidBasis(format!(
                    "lambda_{} = {} is not positive",
                    n + 1,
                    m.lambda
                )));
            }
            if m.trace.len() != weights.len() {
                return Err(Error::InvalidBasis(format!(
                    "trace of mode {} has {} values, expected {}",
                    n + 1,
                    m.trace.len(),
                    weights.len()
                )));
            }
            if m.trace.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidBasis(format!("trace of mode {} is not finite", n + 1)));
            }
        }
        if let Some(n) = modes.windows(2).position(|w| w[0].lambda > w[1].lambda) {
            return Err(Error::InvalidBasis(format!(
                "eigenvalues out of order: lambda_{} = {} > lambda_{} = {}",
                n + 1,
                modes[n].lambda,
                n + 2,
                modes[n + 1].lambda
            )));
        }
        Ok(Self { dim, modes, weights })
    }

    /// Dirichlet sine basis of `(0, length)`: `lambda_n = n pi / length`,
    /// `phi_n = sqrt(2 / length) sin(n pi x / length)`. The active boundary is
    /// one or both endpoints, each a single node of unit weight.
    pub fn interval(modes: usize, length: f64, end: Endpoint) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidParameter("interval basis needs at least one mode".into()));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!("interval length must be positive, got {length}")));
        }
        let norm = (2.0 / length).sqrt();
        let modes = (1..=modes)
            .map(|n| {
                let lambda = n as f64 * PI / length;
                let left = lambda * norm;
                // inward derivative at x = length is -phi'(length)
                let right = if n % 2 == 0 { -left } else { left };
                let trace = match end {
                    Endpoint::Left => vec![left],
                    Endpoint::Right => vec![right],
                    Endpoint::Both => vec![left, right],
                };
                Mode { lambda, trace }
            })
            .collect();
        let nodes = if end == Endpoint::Both { 2 } else { 1 };
        Self::new(Dimension::Interval, modes, vec![1.0; nodes])
    }

    /// Product sine basis of the rectangle `(0, lx) x (0, ly)` with
    /// `nx * ny` modes sorted by `lambda`, ties broken by `(m, k)`. Each
    /// selected edge carries `n_quad` composite-trapezoid nodes.
    pub fn rectangle(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        edges: &[Edge],
        n_quad: usize,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter("rectangle basis needs nx, ny >= 1".into()));
        }
        if n_quad < 2 {
            return Err(Error::InvalidParameter(format!("edge quadrature needs >= 2 nodes, got {n_quad}")));
        }
        if !(lx.is_finite() && lx > 0.0 && ly.is_finite() && ly > 0.0) {
            return Err(Error::InvalidParameter(format!("side lengths must be positive, got {lx} x {ly}")));
        }
        if edges.is_empty() {
            return Err(Error::InvalidParameter("select at least one edge".into()));
        }

        let mut weights = Vec::with_capacity(edges.len() * n_quad);
        let mut points: Vec<(Edge, f64)> = Vec::with_capacity(weights.capacity());
        for &edge in edges {
            let len = match edge {
                Edge::Bottom | Edge::Top => lx,
                Edge::Left | Edge::Right => ly,
            };
            let ds = len / (n_quad - 1) as f64;
            for j in 0..n_quad {
                let w = if j == 0 || j == n_quad - 1 { 0.5 * ds } else { ds };
                weights.push(w);
                points.push((edge, ds * j as f64));
            }
        }

        let amp = 2.0 / (lx * ly).sqrt();
        let mut index: Vec<(usize, usize, f64)> = Vec::with_capacity(nx * ny);
        for m in 1..=nx {
            for k in 1..=ny {
                let px = m as f64 * PI / lx;
                let py = k as f64 * PI / ly;
                index.push((m, k, (px * px + py * py).sqrt()));
            }
        }
        index.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));

        let modes = index
            .into_iter()
            .map(|(m, k, lambda)| {
                let px = m as f64 * PI / lx;
                let py = k as f64 * PI / ly;
                let trace = points
                    .iter()
                    .map(|&(edge, s)| match edge {
                        Edge::Bottom => amp * py * (px * s).sin(),
                        Edge::Top => -amp * py * (py * ly).cos() * (px * s).sin(),
                        Edge::Left => amp * px * (py * s).sin(),
                        Edge::Right => -amp * px * (px * lx).cos() * (py * s).sin(),
                    })
                    .collect();
                Mode { lambda, trace }
            })
            .collect();
        Self::new(Dimension::Rectangle, modes, weights)
    }

    pub fn dimension(&self) -> Dimension {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.modes[n].lambda
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    pub fn trace(&self, n: usize) -> &[f64] {
        &self.modes[n].trace
    }

    /// `Psi_n = trace_n / lambda_n`.
    pub fn normalized_trace(&self, n: usize) -> Vec<f64> {
        let l = self.modes[n].lambda;
        self.modes[n].trace.iter().map(|v| v / l).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    /// Measure of the active boundary part.
    pub fn boundary_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Quadrature pairing `<u, v>_Gamma`.
    pub fn pairing(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
    }

    /// `<trace_n, profile>_Gamma`.
    pub fn project(&self, n: usize, profile: &[f64]) -> f64 {
        self.pairing(&self.modes[n].trace, profile)
    }

    /// First `n` modes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate a {}-mode basis to {n} modes",
                self.len()
            )));
        }
        Ok(Self {
            dim: self.dim,
            modes: self.modes[..n].to_vec(),
            weights: self.weights.clone(),
        })
    }

    /// Copy with the trace of mode `n` replaced by zeros.
    pub fn with_zero_trace(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.modes[n].trace.iter_mut().for_each(|v| *v = 0.0);
        out
    }
}

/// Bounds `(min, max)` of `lambda_n^2 / n^{2/d}` over the available modes.
pub fn check_weyl_asymptotics(basis: &EigenBasis, d: u32) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if basis.len() < 10 {
        return Err(Error::InvalidParameter(format!(
            "asymptotic check needs at least 10 modes, got {}",
            basis.len()
        )));
    }
    // Re-check ordering in case the basis was assembled by hand.
    if basis.modes.windows(2).any(|w| w[0].lambda > w[1].lambda) {
        return Err(Error::InvalidBasis("eigenvalues out of order".into()));
    }
    let exponent = 2.0 / d as f64;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (i, m) in basis.modes.iter().enumerate() {
        let ratio = m.lambda * m.lambda / ((i + 1) as f64).powf(exponent);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((lo, hi))
}
