use std::sync::Arc;

use crate::boundary::MovingBoundary;
use crate::error::{domain, Error, Result};
use crate::field::{Field, Profile, SharedField};
use crate::fraccalc::{caputo_derivative, FractionalOrder, SampledPath};
use crate::quad::{gauss_legendre, Rule};

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// `g^ε(x,t) = ∫ ρ_ε(t-τ) g̃(x,τ) dτ`, `g̃` the zero extension of `g` outside
/// `Q_{s,T}`.
#[derive(Clone)]
pub struct Mollified {
    inner: SharedField,
    boundary: Arc<MovingBoundary>,
    eps: f64,
    rule: Arc<Rule>,
    /// discrete mass of the bump under `rule`, so constants are reproduced exactly
    mass: f64,
}

impl Mollified {
    pub fn new(inner: SharedField, boundary: Arc<MovingBoundary>, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return domain(format!("mollification width must be positive, got {eps}"));
        }
        let rule = Arc::new(gauss_legendre(48));
        let mass = rule.integrate(-1.0, 1.0, bump);
        Ok(Mollified { inner, boundary, eps, rule, mass })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl Field for Mollified {
    fn value(&self, x: f64, t: f64) -> f64 {
        if self.inner.is_zero() {
            return 0.0;
        }
        if x < 0.0 {
            return 0.0;
        }
        // integrate in u = (t-τ)/ε so widths far below the resolution of t stay exact
        let e = self.eps;
        let mut u_hi = (t / e).min(1.0);
        let u_lo = ((t - self.boundary.horizon()) / e).max(-1.0);
        if x > self.boundary.b() {
            match self.boundary.inverse(x) {
                Ok(entry) => u_hi = u_hi.min((t - entry) / e),
                Err(_) => return 0.0,
            }
        }
        if u_hi <= u_lo {
            return 0.0;
        }
        let acc: f64 = self
            .rule
            .mapped(u_lo, u_hi)
            .map(|(u, w)| w * bump(u) * self.inner.value(x, t - e * u))
            .sum();
        acc / self.mass
    }

    /// Besides the inner ones: `b`, where the entry cut starts, and
    /// `s(t-ε)`, where it reaches the edge of the bump.
    fn breakpoints(&self, t: f64) -> Vec<f64> {
        let mut out = self.inner.breakpoints(t);
        if !self.boundary.is_constant() {
            out.push(self.boundary.b());
            if t > self.eps {
                out.push(self.boundary.s(t - self.eps));
            }
        }
        out
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
}

/// Lifting profile `η(x) = x exp(1 - 1/(1-(x/b)²))` for `x < b`, 0 beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eta {
    b: f64,
}

impl Eta {
    pub fn new(b: f64) -> Self {
        Eta { b }
    }

    /// `(β, β', β'')` of `β(y) = exp(1 - 1/(1-y²))` in `y = x/b`.
    fn profile(&self, x: f64) -> Option<(f64, f64, f64)> {
        let y = x / self.b;
        if y.abs() >= 1.0 {
            return None;
        }
        let d = 1.0 - y * y;
        let beta = (1.0 - 1.0 / d).exp();
        let q1 = -2.0 * y / (d * d);
        let q2 = -2.0 / (d * d) - 8.0 * y * y / (d * d * d);
        Some((beta, beta * q1, beta * (q2 + q1 * q1)))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.profile(x).map_or(0.0, |(b, _, _)| x * b)
    }

    pub fn dx(&self, x: f64) -> f64 {
        let y = x / self.b;
        self.profile(x).map_or(0.0, |(b, b1, _)| b + y * b1)
    }

    pub fn dxx(&self, x: f64) -> f64 {
        let y = x / self.b;
        self.profile(x).map_or(0.0, |(_, b1, b2)| (2.0 * b1 + y * b2) / self.b)
    }
}

/// Data of the homogenised problem `v = u - h(t) η(x)`.
#[derive(Clone)]
pub struct LiftedProblem {
    pub eta: Eta,
    pub f: SharedField,
    pub h: SampledPath,
    pub caputo_h: SampledPath,
    pub u0: Profile,
}

impl LiftedProblem {
    pub fn h_at(&self, t: f64) -> f64 {
        self.h.interpolate(t)
    }

    /// `g = f + h η'' - η D^α h`.
    pub fn g(&self) -> SharedField {
        if self.h.values.iter().all(|v| *v == 0.0) {
            return self.f.clone();
        }
        Arc::new(LiftedForcing { lift: self.clone() })
    }

    /// `v0 = u0 - h(0) η`.
    pub fn v0(&self) -> Profile {
        let h0 = self.h.values[0];
        if h0 == 0.0 {
            return self.u0.clone();
        }
        let u0 = self.u0.clone();
        let eta = self.eta;
        Arc::new(move |x| u0(x) - h0 * eta.value(x))
    }
}

struct LiftedForcing {
    lift: LiftedProblem,
}

impl Field for LiftedForcing {
    fn value(&self, x: f64, t: f64) -> f64 {
        let l = &self.lift;
        l.f.value(x, t) + l.h.interpolate(t) * l.eta.dxx(x) - l.eta.value(x) * l.caputo_h.interpolate(t)
    }
}

/// Builds `η`, the lifted forcing and initial datum for flux data `h`
/// sampled on a grid.
pub fn lift_boundary(
    f: SharedField,
    h: &SampledPath,
    u0: Profile,
    order: &FractionalOrder,
    b: f64,
) -> Result<LiftedProblem> {
    if !(b > 0.0) {
        return domain(format!("lifting needs b > 0, got {b}"));
    }
    if h.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("flux samples h contain non-finite values".into()));
    }
    let nodes = h.grid.nodes();
    let slopes: Vec<f64> = (0..nodes.len() - 1)
        .map(|i| (h.values[i + 1] - h.values[i]) / (nodes[i + 1] - nodes[i]))
        .collect();
    if slopes.iter().any(|s| !s.is_finite()) {
        return Err(Error::Precondition("flux samples h have non-finite difference quotients".into()));
    }
    let scale = 1.0 + slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    for i in 1..slopes.len() {
        let span = nodes[i + 1] - nodes[i - 1];
        if span < 1e-2 * h.grid.horizon() && (slopes[i] - slopes[i - 1]).abs() > 0.5 * scale {
            return Err(Error::Precondition(format!(
                "flux samples h are not differentiable near t={}",
                nodes[i]
            )));
        }
    }
    let caputo_h = caputo_derivative(order, h)?;
    Ok(LiftedProblem { eta: Eta::new(b), f, h: h.clone(), caputo_h, u0 })
}

/// Values on a rectangular `(x, t)` grid, interpolated bilinearly and held
/// constant beyond the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    xs: Vec<f64>,
    ts: Vec<f64>,
    /// row-major in `t`: `values[it * xs.len() + ix]`
    values: Vec<f64>,
}

impl GridField {
    /// From scattered `(x, t, value)` rows that cover a full tensor grid.
    pub fn from_rows(rows: &[(f64, f64, f64)]) -> Result<Self> {
        let mut xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut ts: Vec<f64> = rows.iter().map(|r| r.1).collect();
        for v in [&mut xs, &mut ts] {
            v.sort_by(|a, b| a.total_cmp(b));
            v.dedup();
        }
        if xs.len() < 2 || ts.len() < 2 {
            return domain("gridded field needs at least two distinct x and t values");
        }
        if xs.len() * ts.len() != rows.len() {
            return domain(format!(
                "gridded field has {} rows but {} x-values and {} t-values",
                rows.len(),
                xs.len(),
                ts.len()
            ));
        }
        let mut values = vec![f64::NAN; rows.len()];
        for &(x, t, v) in rows {
            let ix = xs.binary_search_by(|a| a.total_cmp(&x)).unwrap();
            let it = ts.binary_search_by(|a| a.total_cmp(&t)).unwrap();
            values[it * xs.len() + ix] = v;
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("gridded field has duplicate or non-finite entries");
        }
        Ok(GridField { xs, ts, values })
    }

    fn locate(axis: &[f64], v: f64) -> (usize, f64) {
        let n = axis.len();
        if v <= axis[0] {
            return (0, 0.0);
        }
        if v >= axis[n - 1] {
            return (n - 2, 1.0);
        }
        let i = axis.partition_point(|a| *a <= v) - 1;
        (i, (v - axis[i]) / (axis[i + 1] - axis[i]))
    }
}

impl Field for GridField {
    fn value(&self, x: f64, t: f64) -> f64 {
        let (ix, rx) = Self::locate(&self.xs, x);
        let (it, rt) = Self::locate(&self.ts, t);
        let nx = self.xs.len();
        let v = |i: usize, j: usize| self.values[j * nx + i];
        (1.0 - rt) * ((1.0 - rx) * v(ix, it) + rx * v(ix + 1, it))
            + rt * ((1.0 - rx) * v(ix, it + 1) + rx * v(ix + 1, it + 1))
    }

    fn breakpoints(&self, _t: f64) -> Vec<f64> {
        self.xs.clone()
    }
}
