use std::sync::Arc;

use crate::basis::{phi_at, phi_s_at, phi_x_at};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::fraccalc::weights::{hat_moments, HatTable};
use crate::fraccalc::{FractionalOrder, TimeGrid};
use crate::quad::{gauss_legendre, Singularity};
use crate::solver::GalerkinField;

use super::{Check, VerificationReport};

/// Temporal factor `ψ` of a test function `φ_k(x,t) ψ(t)`, with `ψ(T) = 0`.
#[derive(Clone)]
pub struct TestFunction {
    pub mode: usize,
    psi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    dpsi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    label: String,
}

impl TestFunction {
    pub fn new(
        mode: usize,
        label: impl Into<String>,
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dpsi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction { mode, psi: Arc::new(psi), dpsi: Arc::new(dpsi), label: label.into() }
    }

    /// `ψ(t) = T - t`.
    pub fn linear(mode: usize, horizon: f64) -> Self {
        Self::new(mode, "linear", move |t| horizon - t, |_| -1.0)
    }

    /// `ψ(t) = cos(πt/2T)`.
    pub fn cosine(mode: usize, horizon: f64) -> Self {
        let w = std::f64::consts::PI / (2.0 * horizon);
        Self::new(mode, "cosine", move |t| (w * t).cos(), move |t| -w * (w * t).sin())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn psi(&self, t: f64) -> f64 {
        (self.psi)(t)
    }

    pub fn dpsi(&self, t: f64) -> f64 {
        (self.dpsi)(t)
    }
}

/// Vertical lines `x = const` through `Q_{s,T}` with product-integration data
/// for `I^{1-α}` along each line, starting at `s⁻¹(x)`.
pub(crate) struct Lines {
    pub xs: Vec<f64>,
    pub wx: Vec<f64>,
    /// entry time `s⁻¹(x)`
    pub entry: Vec<f64>,
    /// first node strictly after the entry time
    pub first: Vec<usize>,
    /// hat weights of the partial interval `[entry, t_first]` for each node `j >= first`
    partial: Vec<Option<Vec<[f64; 2]>>>,
    table: HatTable,
    grid: Arc<TimeGrid>,
    g1: f64,
}

impl Lines {
    pub fn new(field: &GalerkinField, order: &FractionalOrder, points: usize) -> Result<Self> {
        let grid = field.path().grid().clone();
        let bnd = field.basis().boundary();
        let nodes = grid.nodes();
        let big_t = grid.horizon();
        let (b, top) = (bnd.b(), bnd.s(big_t));
        let rule = gauss_legendre(points);
        let mut xs = Vec::new();
        let mut wx = Vec::new();
        for (lo, hi) in [(0.0, b), (b, top)] {
            if hi > lo {
                for (x, w) in rule.mapped(lo, hi) {
                    xs.push(x);
                    wx.push(w);
                }
            }
        }
        let a = order.alpha();
        let mut entry = Vec::with_capacity(xs.len());
        let mut first = Vec::with_capacity(xs.len());
        let mut partial = Vec::with_capacity(xs.len());
        for &x in &xs {
            let t0 = bnd.inverse(x)?;
            let i0 = nodes.partition_point(|t| *t <= t0).max(1);
            let on_node = (t0 - nodes[i0 - 1]).abs() <= 1e-14 * big_t;
            let part = (!on_node).then(|| {
                (i0..nodes.len())
                    .map(|j| hat_moments(t0, nodes[i0], t0, nodes[i0], &[Singularity::new(nodes[j], -a)]))
                    .collect()
            });
            entry.push(t0);
            first.push(i0);
            partial.push(part);
        }
        Ok(Lines {
            xs,
            wx,
            entry,
            first,
            partial,
            table: HatTable::build(&grid, 1.0 - a, 1.0),
            grid,
            g1: order.gamma_one_minus_alpha(),
        })
    }

    /// `I^{1-α}` of the piecewise-linear signal with value `at_entry` at the
    /// entry time and `vals[i]` at nodes `i >= first`; zero at earlier nodes.
    pub fn memory(&self, line: usize, at_entry: f64, vals: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let i0 = self.first[line];
        let mut out = vec![0.0; n];
        for (j, o) in out.iter_mut().enumerate().skip(i0) {
            let row = self.table.row(j);
            let mut acc = match &self.partial[line] {
                Some(p) => p[j - i0][0] * at_entry + p[j - i0][1] * vals[i0],
                None => row[i0 - 1][0] * at_entry + row[i0 - 1][1] * vals[i0],
            };
            for i in i0..j {
                acc += row[i][0] * vals[i] + row[i][1] * vals[i + 1];
            }
            *o = acc / self.g1;
        }
        out
    }
}

fn trapezoid(ts: &[f64], fs: &[f64]) -> f64 {
    ts.windows(2).zip(fs.windows(2)).map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1])).sum()
}

/// `|-∬ I_s^{1-α}[v - ṽ(·,0)] ∂_t(φ_kψ) + ∬ v_x (φ_kψ)_x - ∬ g φ_kψ|` over
/// `Q_{s,T}`, for the Galerkin field `v` and its forcing `g`.
///
/// The memory term starts from `v(·,0)` (the projected datum) unless
/// `initial` supplies `v0`. Tensor quadrature: Gauss in `x`, product
/// integration along each line for `I^{1-α}`, trapezoid in `t`.
pub fn weak_residual(
    field: &GalerkinField,
    order: &FractionalOrder,
    forcing: &dyn Field,
    initial: Option<&dyn Fn(f64) -> f64>,
    test: &TestFunction,
) -> Result<f64> {
    let lines = Lines::new(field, order, field.basis().quad_order())?;
    weak_residual_on(&lines, field, forcing, initial, test)
}

pub(crate) fn weak_residual_on(
    lines: &Lines,
    field: &GalerkinField,
    forcing: &dyn Field,
    initial: Option<&dyn Fn(f64) -> f64>,
    test: &TestFunction,
) -> Result<f64> {
    let path = field.path();
    let basis = field.basis();
    let grid = path.grid();
    let nodes = grid.nodes();
    let big_t = grid.horizon();
    let k = test.mode;
    if test.psi(big_t).abs() > 1e-12 {
        return Err(Error::Precondition(format!("test function needs psi(T) = 0, got {}", test.psi(big_t))));
    }
    let bnd = basis.boundary();
    let b = bnd.b();
    let n = nodes.len();

    // memory term, line by line
    let mut memory_term = 0.0;
    let mut vals = vec![0.0; n];
    for (l, (&x, &wx)) in lines.xs.iter().zip(&lines.wx).enumerate() {
        let i0 = lines.first[l];
        let t0 = lines.entry[l];
        let base = if x <= b {
            match initial {
                Some(v0) => v0(x),
                None => basis.combine(path.c(0), x, 0.0),
            }
        } else {
            0.0
        };
        let at_entry = if x <= b { basis.combine(path.c(0), x, 0.0) - base } else { 0.0 };
        for i in i0..n {
            vals[i] = basis.combine(path.c(i), x, nodes[i]) - base;
        }
        let mem = lines.memory(l, at_entry, &vals);
        let mut ts = vec![t0];
        let mut fs = vec![0.0];
        for i in i0..n {
            let t = nodes[i];
            let m = mem[i];
            let dtest = if m == 0.0 {
                0.0
            } else {
                let s = bnd.s(t);
                phi_s_at(k, x, s) * bnd.sdot(t) * test.psi(t) + phi_at(k, x, s) * test.dpsi(t)
            };
            ts.push(t);
            fs.push(m * dtest);
        }
        memory_term -= wx * trapezoid(&ts, &fs);
    }

    // gradient and forcing terms, node by node
    let mut rows = vec![0.0; n];
    for (j, &t) in nodes.iter().enumerate() {
        let psi = test.psi(t);
        if psi == 0.0 {
            continue;
        }
        let s = bnd.s(t);
        let mut acc = 0.0;
        for (x, w) in basis.split_rule(t, &forcing.breakpoints(t)) {
            let x = x.min(s);
            let grad = field.dx_at_node(x, j) * phi_x_at(k, x, s);
            let rhs = forcing.value(x, t) * phi_at(k, x, s);
            acc += w * (grad - rhs);
        }
        rows[j] = acc * psi;
    }
    Ok((memory_term + trapezoid(nodes, &rows)).abs())
}

/// `‖I^{1-α} ṽ(·,t)‖_{L²(0,s(T))} <= I^{1-α}‖v(·,t)‖² + t^{1-α}/Γ(2-α)` at every
/// grid time; `ṽ` is the zero extension of `v`.
pub fn duality_bound_check(field: &GalerkinField, order: &FractionalOrder) -> Result<VerificationReport> {
    let lines = Lines::new(field, order, field.basis().quad_order())?;
    let path = field.path();
    let basis = field.basis();
    let nodes = path.grid().nodes();
    let n = nodes.len();
    let b = basis.boundary().b();
    let mut lhs2 = vec![0.0; n];
    let mut vals = vec![0.0; n];
    for (l, (&x, &wx)) in lines.xs.iter().zip(&lines.wx).enumerate() {
        let i0 = lines.first[l];
        let at_entry = if x <= b { basis.combine(path.c(0), x, 0.0) } else { 0.0 };
        for i in i0..n {
            vals[i] = basis.combine(path.c(i), x, nodes[i]);
        }
        for (j, m) in lines.memory(l, at_entry, &vals).into_iter().enumerate() {
            lhs2[j] += wx * m * m;
        }
    }
    // ‖v(·,t)‖² at nodes, as a degenerate line with entry 0
    let norms: Vec<f64> = (0..n).map(|j| path.c(j).iter().map(|c| c * c).sum()).collect();
    let g1 = order.gamma_one_minus_alpha();
    let g2 = order.gamma_two_minus_alpha();
    let a = order.alpha();
    let mut worst = 0.0f64;
    let mut last_lhs = 0.0;
    for j in 1..n {
        let row = lines.table.row(j);
        let mut acc = 0.0;
        for i in 0..j {
            acc += row[i][0] * norms[i] + row[i][1] * norms[i + 1];
        }
        let rhs = acc / g1 + nodes[j].powf(1.0 - a) / g2;
        let lhs = lhs2[j].sqrt();
        worst = worst.max(lhs / rhs);
        last_lhs = lhs;
    }
    let params = format!("N={};m={};alpha={a}", n - 1, basis.m());
    let mut r = VerificationReport::new();
    r.push(Check::below("duality_bound_ratio", worst, 1.0, params.clone()));
    r.push(Check::below("duality_lhs_at_T", last_lhs, f64::INFINITY, params).recorded());
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::SpectralBasis;
    use crate::boundary::MovingBoundary;
    use crate::field::zero_field;
    use crate::solver::{reconstruct_field, CoefficientPath};

    fn zero_field_of(moving: bool) -> (GalerkinField, FractionalOrder) {
        let o = FractionalOrder::new(0.5).unwrap();
        let bnd = Arc::new(if moving {
            MovingBoundary::affine(1.0, 1.0, 1.0).unwrap()
        } else {
            MovingBoundary::constant(1.0, 1.0).unwrap()
        });
        let grid = Arc::new(TimeGrid::uniform(1.0, 16).unwrap());
        let basis = SpectralBasis::new(2, bnd);
        let path = CoefficientPath::zeros(grid, 0.5, 3);
        (reconstruct_field(Arc::new(path), basis, None), o)
    }

    #[test]
    fn zero_solution_has_zero_residual() {
        for moving in [false, true] {
            let (f, o) = zero_field_of(moving);
            let t = TestFunction::linear(1, 1.0);
            assert_eq!(weak_residual(&f, &o, &*zero_field(), None, &t).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_test_not_vanishing_at_horizon() {
        let (f, o) = zero_field_of(false);
        let t = TestFunction::new(0, "one", |_| 1.0, |_| 0.0);
        assert!(matches!(weak_residual(&f, &o, &*zero_field(), None, &t), Err(Error::Precondition(_))));
    }

    #[test]
    fn memory_line_integrates_constants() {
        // I^{1-α}[1](t) = t^{1-α}/Γ(2-α), also from an off-node entry time
        let (f, o) = zero_field_of(true);
        let lines = Lines::new(&f, &o, 8).unwrap();
        let nodes = f.path().grid().nodes().to_vec();
        for l in [0, lines.xs.len() - 1] {
            let m = lines.memory(l, 1.0, &vec![1.0; nodes.len()]);
            let t0 = lines.entry[l];
            for (j, &t) in nodes.iter().enumerate().skip(lines.first[l]) {
                let exact = (t - t0).powf(0.5) / o.gamma_two_minus_alpha();
                assert!((m[j] - exact).abs() < 1e-12, "line {l} node {j}: {} vs {exact}", m[j]);
            }
        }
    }

    #[test]
    fn duality_holds_for_zero() {
        let (f, o) = zero_field_of(true);
        let r = duality_bound_check(&f, &o).unwrap();
        assert!(r.passed());
        assert_eq!(r.get("duality_bound_ratio").unwrap().measured, 0.0);
    }
}
