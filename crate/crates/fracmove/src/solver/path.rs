use std::sync::Arc;

use crate::assembly::LiftedProblem;
use crate::basis::SpectralBasis;
use crate::error::{domain, Result};
use crate::field::Field;
use crate::fraccalc::weights::hat_moments;
use crate::fraccalc::TimeGrid;
use crate::quad::Singularity;

/// Galerkin coefficients in the `X(T)` representation: nodal values `c_j` and
/// regularized derivatives `w_j = t_j^{1-α} c'(t_j)`, node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPath {
    grid: Arc<TimeGrid>,
    alpha: f64,
    c0: Vec<f64>,
    c: Vec<f64>,
    w: Vec<f64>,
}

impl CoefficientPath {
    pub fn new(grid: Arc<TimeGrid>, alpha: f64, c0: Vec<f64>, c: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let k = c0.len();
        if k == 0 || c.len() != k * grid.len() || w.len() != k * grid.len() {
            return domain("coefficient path storage does not match grid and mode count");
        }
        Ok(CoefficientPath { grid, alpha, c0, c, w })
    }

    pub fn zeros(grid: Arc<TimeGrid>, alpha: f64, modes: usize) -> Self {
        let n = grid.len() * modes;
        CoefficientPath { grid, alpha, c0: vec![0.0; modes], c: vec![0.0; n], w: vec![0.0; n] }
    }

    /// Path with prescribed functions `c_k(t)` and `w_k(t)`.
    pub fn from_fn(grid: Arc<TimeGrid>, alpha: f64, modes: usize, c: impl Fn(usize, f64) -> f64, w: impl Fn(usize, f64) -> f64) -> Self {
        let nodes = grid.nodes();
        let cv: Vec<f64> = nodes.iter().flat_map(|&t| (0..modes).map(move |k| (k, t))).map(|(k, t)| c(k, t)).collect();
        let wv: Vec<f64> = nodes.iter().flat_map(|&t| (0..modes).map(move |k| (k, t))).map(|(k, t)| w(k, t)).collect();
        let c0 = cv[..modes].to_vec();
        CoefficientPath { grid, alpha, c0, c: cv, w: wv }
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn modes(&self) -> usize {
        self.c0.len()
    }

    pub fn c0(&self) -> &[f64] {
        &self.c0
    }

    /// `c(t_j)`.
    pub fn c(&self, j: usize) -> &[f64] {
        let k = self.modes();
        &self.c[j * k..(j + 1) * k]
    }

    /// `w(t_j)`.
    pub fn w(&self, j: usize) -> &[f64] {
        let k = self.modes();
        &self.w[j * k..(j + 1) * k]
    }

    pub fn values_flat(&self) -> &[f64] {
        &self.c
    }

    pub fn derivatives_flat(&self) -> &[f64] {
        &self.w
    }

    /// Time series of mode `k`.
    pub fn mode(&self, k: usize) -> Vec<f64> {
        self.c.iter().skip(k).step_by(self.modes()).copied().collect()
    }

    /// `max_j |c(t_j)|_∞ + max_j |w(t_j)|_∞`.
    pub fn xt_norm(&self) -> f64 {
        let m = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        m(&self.c) + m(&self.w)
    }

    /// `c0 + ∫_0^{t_j} p^{α-1} w_h(p) dp` with `w_h` piecewise linear.
    pub fn reconstruct_values(&self) -> Vec<f64> {
        let k = self.modes();
        let nodes = self.grid.nodes();
        let sing = [Singularity::new(0.0, self.alpha - 1.0)];
        let mut out = vec![0.0; self.c.len()];
        out[..k].copy_from_slice(&self.c0);
        for j in 1..nodes.len() {
            let [l, r] = hat_moments(nodes[j - 1], nodes[j], nodes[j - 1], nodes[j], &sing);
            for q in 0..k {
                out[j * k + q] = out[(j - 1) * k + q] + l * self.w[(j - 1) * k + q] + r * self.w[j * k + q];
            }
        }
        out
    }

    /// Linear interpolation of `c` in time.
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let i = self.grid.interval_of(t);
        let nodes = self.grid.nodes();
        let r = ((t - nodes[i]) / (nodes[i + 1] - nodes[i])).clamp(0.0, 1.0);
        let (a, b) = (self.c(i), self.c(i + 1));
        a.iter().zip(b).map(|(x, y)| x * (1.0 - r) + y * r).collect()
    }
}

/// `v_m(x,t) = Σ c_n(t) φ_n(x,t)` (plus `h(t) η(x)` when lifted); zero
/// outside `Q_{s,T}`.
#[derive(Clone)]
pub struct GalerkinField {
    path: Arc<CoefficientPath>,
    basis: SpectralBasis,
    lift: Option<LiftedProblem>,
}

pub fn reconstruct_field(path: Arc<CoefficientPath>, basis: SpectralBasis, lift: Option<LiftedProblem>) -> GalerkinField {
    GalerkinField { path, basis, lift }
}

impl GalerkinField {
    pub fn path(&self) -> &CoefficientPath {
        &self.path
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn inside(&self, x: f64, t: f64) -> bool {
        t >= 0.0 && t <= self.path.grid().horizon() && x >= 0.0 && x <= self.basis.boundary().s(t)
    }

    /// Field value, or `None` outside `Q_{s,T}`.
    pub fn sample(&self, x: f64, t: f64) -> Option<f64> {
        self.inside(x, t).then(|| self.value(x, t))
    }

    /// Values at node `j` without time interpolation.
    pub fn value_at_node(&self, x: f64, j: usize) -> f64 {
        let t = self.path.grid().nodes()[j];
        let mut v = self.basis.combine(self.path.c(j), x, t);
        if let Some(l) = &self.lift {
            v += l.h.values[j] * l.eta.value(x);
        }
        v
    }

    pub fn dx_at_node(&self, x: f64, j: usize) -> f64 {
        let t = self.path.grid().nodes()[j];
        let mut v = self.basis.combine_x(self.path.c(j), x, t);
        if let Some(l) = &self.lift {
            v += l.h.values[j] * l.eta.dx(x);
        }
        v
    }
}

impl Field for GalerkinField {
    fn value(&self, x: f64, t: f64) -> f64 {
        if !self.inside(x, t) {
            return 0.0;
        }
        let c = self.path.value_at(t);
        let mut v = self.basis.combine(&c, x, t);
        if let Some(l) = &self.lift {
            v += l.h_at(t) * l.eta.value(x);
        }
        v
    }

    fn dx(&self, x: f64, t: f64) -> f64 {
        if !self.inside(x, t) {
            return 0.0;
        }
        let c = self.path.value_at(t);
        let mut v = self.basis.combine_x(&c, x, t);
        if let Some(l) = &self.lift {
            v += l.h_at(t) * l.eta.dx(x);
        }
        v
    }
}
