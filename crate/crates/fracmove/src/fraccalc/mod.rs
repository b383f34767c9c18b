//! Fractional-calculus primitives on graded time grids.

mod mittag_leffler;
pub(crate) mod weights;

use std::f64::consts::PI;
use std::sync::Arc;

use statrs::function::gamma::gamma;

use crate::boundary::MovingBoundary;
use crate::error::{domain, Error, Result};
use crate::field::Field;
use crate::quad::{singular_integral, singular_integral_vec, Singularity};

pub use mittag_leffler::mittag_leffler;
pub use weights::kernel_moment;

/// Order `α ∈ (0,1)` with cached Gamma values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrder {
    alpha: f64,
    gamma_alpha: f64,
    gamma_one_minus_alpha: f64,
    gamma_two_minus_alpha: f64,
}

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("fractional order must lie in (0,1), got {alpha}"));
        }
        Ok(FractionalOrder {
            alpha,
            gamma_alpha: gamma(alpha),
            gamma_one_minus_alpha: gamma(1.0 - alpha),
            gamma_two_minus_alpha: gamma(2.0 - alpha),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma_alpha(&self) -> f64 {
        self.gamma_alpha
    }

    pub fn gamma_one_minus_alpha(&self) -> f64 {
        self.gamma_one_minus_alpha
    }

    pub fn gamma_two_minus_alpha(&self) -> f64 {
        self.gamma_two_minus_alpha
    }

    /// `1 / (Γ(α) Γ(1-α))`.
    pub fn c_alpha(&self) -> f64 {
        1.0 / (self.gamma_alpha * self.gamma_one_minus_alpha)
    }

    /// `B(α, 1-α) = π / sin(πα)`.
    pub fn beta_constant(&self) -> f64 {
        PI / (PI * self.alpha).sin()
    }

    pub fn mittag_leffler(&self, z: f64) -> Result<f64> {
        mittag_leffler(self.alpha, z)
    }
}

/// Time nodes `0 = t_0 < … < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    grading: f64,
}

impl TimeGrid {
    /// `t_j = T (j/N)^r`.
    pub fn graded(horizon: f64, n: usize, grading: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return domain(format!("horizon must be positive, got {horizon}"));
        }
        if n < 1 {
            return domain("time grid needs at least one step");
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return domain(format!("grading exponent must be >= 1, got {grading}"));
        }
        let mut nodes: Vec<f64> = (0..=n)
            .map(|j| horizon * (j as f64 / n as f64).powf(grading))
            .collect();
        nodes[n] = horizon;
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return domain("grading underflows: nodes are not strictly increasing");
        }
        Ok(TimeGrid { nodes, grading })
    }

    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        Self::graded(horizon, n, 1.0)
    }

    /// Default grading `2 max(1, (2-α)/α)`.
    pub fn default_grading(order: &FractionalOrder) -> f64 {
        2.0 * f64::max(1.0, (2.0 - order.alpha) / order.alpha)
    }

    pub fn with_default_grading(horizon: f64, n: usize, order: &FractionalOrder) -> Result<Self> {
        Self::graded(horizon, n, Self::default_grading(order))
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return domain("grid must start at 0 and contain at least two nodes");
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("grid nodes must be strictly increasing");
        }
        Ok(TimeGrid { nodes, grading: 1.0 })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn step(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Index `i` with `t_i <= t < t_{i+1}` (last interval for `t = T`).
    pub fn interval_of(&self, t: f64) -> usize {
        let n = self.steps();
        match self.nodes.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }
}

/// Values of a scalar path at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub grid: Arc<TimeGrid>,
    pub values: Vec<f64>,
    /// Values are `t^{1-α} f(t)`; the represented function is `values(t) t^{α-1}`.
    pub singular_weight: bool,
}

impl SampledPath {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return domain(format!(
                "path has {} values for {} grid nodes",
                values.len(),
                grid.len()
            ));
        }
        Ok(SampledPath { grid, values, singular_weight: false })
    }

    pub fn from_fn(grid: Arc<TimeGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        SampledPath { grid, values, singular_weight: false }
    }

    pub fn weighted(mut self) -> Self {
        self.singular_weight = true;
        self
    }

    /// Piecewise-linear interpolation of the stored values.
    pub fn interpolate(&self, t: f64) -> f64 {
        let i = self.grid.interval_of(t);
        let nodes = self.grid.nodes();
        let h = nodes[i + 1] - nodes[i];
        let r = ((t - nodes[i]) / h).clamp(0.0, 1.0);
        self.values[i] * (1.0 - r) + self.values[i + 1] * r
    }
}

/// `∫_p^t (t-τ)^{α-1} (τ-p)^{-α} dτ`, equal to `π / sin(πα)`.
pub fn beta_kernel_integral(order: &FractionalOrder, p: f64, t: f64) -> Result<f64> {
    if !(p >= 0.0 && p < t) {
        return domain(format!("need 0 <= p < t, got p={p}, t={t}"));
    }
    let a = order.alpha;
    Ok(singular_integral(
        |_| 1.0,
        p,
        t,
        &[Singularity::new(p, -a), Singularity::new(t, a - 1.0)],
    ))
}

/// `I^μ_{t0} f` at every node, by product integration of the piecewise-linear
/// interpolant of `f` (of `values` when `f` is singular-weighted, with the
/// factor `τ^{α-1}` kept in the kernel). Nodes at or before `t0` get 0.
pub fn rl_integral(order: &FractionalOrder, f: &SampledPath, mu: f64, t0: f64) -> Result<SampledPath> {
    if !(mu > 0.0 && mu <= 1.0) {
        return domain(format!("integration order must lie in (0,1], got {mu}"));
    }
    let grid = &f.grid;
    let nodes = grid.nodes();
    if !(t0 >= 0.0 && t0 < grid.horizon()) {
        return domain(format!("lower limit {t0} leaves an empty grid segment"));
    }
    let weight = if f.singular_weight { order.alpha - 1.0 } else { 0.0 };
    let g = gamma(mu);
    let mut out = vec![0.0; nodes.len()];
    for (j, &t) in nodes.iter().enumerate() {
        if t <= t0 {
            continue;
        }
        let sings = [Singularity::new(t, mu - 1.0), Singularity::new(0.0, weight)];
        let mut acc = 0.0;
        for i in 0..j {
            if nodes[i + 1] <= t0 {
                continue;
            }
            let lo = nodes[i].max(t0);
            let [l, r] = weights::hat_moments(nodes[i], nodes[i + 1], lo, nodes[i + 1], &sings);
            acc += l * f.values[i] + r * f.values[i + 1];
        }
        out[j] = acc / g;
    }
    Ok(SampledPath { grid: grid.clone(), values: out, singular_weight: false })
}

/// L1 approximation of the Caputo derivative `D^α f` at every node.
pub fn caputo_derivative(order: &FractionalOrder, f: &SampledPath) -> Result<SampledPath> {
    let grid = &f.grid;
    if grid.len() < 2 {
        return domain("Caputo derivative needs at least two nodes");
    }
    if f.singular_weight {
        return Err(Error::Precondition("Caputo derivative expects plain values".into()));
    }
    let nodes = grid.nodes();
    let p = 1.0 - order.alpha;
    let mut out = vec![0.0; nodes.len()];
    for j in 1..nodes.len() {
        let t = nodes[j];
        let mut acc = 0.0;
        for i in 0..j {
            let h = nodes[i + 1] - nodes[i];
            let a = kernel_moment(t - nodes[i], h, p);
            acc += a * (f.values[i + 1] - f.values[i]) / h;
        }
        out[j] = acc / order.gamma_one_minus_alpha;
    }
    Ok(SampledPath { grid: grid.clone(), values: out, singular_weight: false })
}

fn check_inside(boundary: &MovingBoundary, x: f64, t: f64) -> Result<()> {
    let st = boundary.s(t);
    if !(x >= 0.0 && x < st) || !(t >= 0.0 && t <= boundary.horizon()) {
        return domain(format!("point (x={x}, t={t}) lies outside 0 <= x < s(t) = {st}"));
    }
    Ok(())
}

/// `I_s^μ w(x,t)`: memory starts at `s⁻¹(x)` (0 for `x <= b`).
pub fn moving_integral(
    _order: &FractionalOrder,
    boundary: &MovingBoundary,
    w: &dyn Field,
    x: f64,
    t: f64,
    mu: f64,
) -> Result<f64> {
    if !(mu > 0.0 && mu <= 1.0) {
        return domain(format!("integration order must lie in (0,1], got {mu}"));
    }
    check_inside(boundary, x, t)?;
    let lower = boundary.inverse(x)?;
    if t <= lower {
        return Ok(0.0);
    }
    let v = singular_integral_vec::<1>(
        |tau| [w.value(x, tau)],
        lower,
        t,
        &[Singularity::new(t, mu - 1.0)],
        16,
        2,
    )[0];
    Ok(v / gamma(mu))
}

/// `D_s^α u(x,t) = (1/Γ(1-α)) ∫_{s⁻¹(x)}^t (t-τ)^{-α} u_t(x,τ) dτ`.
pub fn moving_caputo(
    order: &FractionalOrder,
    boundary: &MovingBoundary,
    u: &dyn Field,
    x: f64,
    t: f64,
) -> Result<f64> {
    check_inside(boundary, x, t)?;
    let lower = boundary.inverse(x)?;
    if t <= lower {
        return Ok(0.0);
    }
    let v = singular_integral_vec::<1>(
        |tau| [u.dt(x, tau)],
        lower,
        t,
        &[Singularity::new(t, -order.alpha)],
        16,
        2,
    )[0];
    Ok(v / order.gamma_one_minus_alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> FractionalOrder {
        FractionalOrder::new(0.5).unwrap()
    }

    #[test]
    fn order_rejects_endpoints() {
        assert!(FractionalOrder::new(0.0).is_err());
        assert!(FractionalOrder::new(1.0).is_err());
        assert!(FractionalOrder::new(f64::NAN).is_err());
    }

    #[test]
    fn reflection_and_recurrence() {
        for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let o = FractionalOrder::new(a).unwrap();
            let refl = o.gamma_alpha() * o.gamma_one_minus_alpha();
            assert!((refl / o.beta_constant() - 1.0).abs() < 1e-12);
            let rec = (1.0 - a) * o.gamma_one_minus_alpha();
            assert!((o.gamma_two_minus_alpha() / rec - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_kernel_examples() {
        let o = half();
        assert!((beta_kernel_integral(&o, 0.0, 1.0).unwrap() - PI).abs() < 1e-12);
        assert!((beta_kernel_integral(&o, 0.3, 0.9).unwrap() - PI).abs() < 1e-12);
        let o3 = FractionalOrder::new(0.3).unwrap();
        let v = beta_kernel_integral(&o3, 0.0, 2.0).unwrap();
        assert!((v - 3.8832220).abs() < 1e-6);
        assert!(beta_kernel_integral(&o, 1.0, 1.0).is_err());
    }

    #[test]
    fn rl_integral_examples() {
        let o = half();
        let grid = Arc::new(TimeGrid::graded(1.0, 64, 2.0).unwrap());
        let one = SampledPath::from_fn(grid.clone(), |_| 1.0);
        let v = rl_integral(&o, &one, 0.5, 0.0).unwrap();
        assert!((v.values[64] - 2.0 / PI.sqrt()).abs() < 1e-13);
        let lin = SampledPath::from_fn(grid.clone(), |t| t);
        let v = rl_integral(&o, &lin, 0.5, 0.0).unwrap();
        assert!((v.values[64] - 1.0 / gamma(2.5)).abs() < 1e-13);
        let i1 = rl_integral(&o, &one, 0.5, 0.0).unwrap();
        let i2 = rl_integral(&o, &i1, 0.5, 0.0).unwrap();
        assert!((i2.values[64] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rl_integral_from_interior_point() {
        let o = half();
        let grid = Arc::new(TimeGrid::uniform(1.0, 10).unwrap());
        let one = SampledPath::from_fn(grid.clone(), |_| 1.0);
        let v = rl_integral(&o, &one, 0.5, 0.25).unwrap();
        let expect = 0.75f64.sqrt() / gamma(1.5);
        assert!((v.values[10] - expect).abs() < 1e-13);
        assert_eq!(v.values[2], 0.0);
    }

    #[test]
    fn caputo_examples() {
        let o = half();
        let grid = Arc::new(TimeGrid::uniform(1.0, 32).unwrap());
        let lin = SampledPath::from_fn(grid.clone(), |t| t);
        let d = caputo_derivative(&o, &lin).unwrap();
        assert!((d.values[32] - 1.0 / gamma(1.5)).abs() < 1e-13);
        let c = SampledPath::from_fn(grid, |_| 3.0);
        assert!(caputo_derivative(&o, &c).unwrap().values.iter().all(|v| *v == 0.0));
    }
}
