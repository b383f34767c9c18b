use std::sync::Arc;

use crate::boundary::MovingBoundary;
use crate::error::Result;
use crate::field::Field;
use crate::fraccalc::weights::{hat_moments, HatTable};
use crate::fraccalc::{moving_caputo, FractionalOrder};
use crate::quad::{gauss_legendre, singular_integral, Singularity};
use crate::solver::GalerkinField;

use super::{Check, VerificationReport};

/// Relative slack of the integrated energy inequality.
pub const ENERGY_SLACK: f64 = 5e-2;

fn cumulative_trapezoid(ts: &[f64], fs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; ts.len()];
    for i in 1..ts.len() {
        out[i] = out[i - 1] + 0.5 * (ts[i] - ts[i - 1]) * (fs[i] + fs[i - 1]);
    }
    out
}

/// Integrated energy estimate at every grid node `t_j`, `j >= 1`:
///
/// `I^{1-α}‖v(t)‖² + Γ(1-α)⁻¹∫_0^t τ^{-α}∫_0^b |v(x,τ)-v(x,0)|² + Γ(1-α)⁻¹∫_0^t∫_b^{s(τ)} (τ-s⁻¹(x))^{-α}|v|² + ∫_0^t‖v_x‖²`
/// `<= (s(T)²/2)‖g‖²_{L²(Q_{s,t})} + t^{1-α}‖v0‖²/Γ(2-α) + δ(ε)`,
///
/// with `δ(ε) = (s(T)²/2) sup_t ∫_t^{t+ε}∫|g|²`, checked with relative slack
/// [`ENERGY_SLACK`].
pub fn energy_inequality_check(
    field: &GalerkinField,
    order: &FractionalOrder,
    forcing: &dyn Field,
    initial: &dyn Fn(f64) -> f64,
    eps: f64,
) -> Result<VerificationReport> {
    let path = field.path();
    let basis = field.basis();
    let bnd = basis.boundary();
    let grid = path.grid();
    let nodes = grid.nodes();
    let n = nodes.len();
    let a = order.alpha();
    let (g1, g2) = (order.gamma_one_minus_alpha(), order.gamma_two_minus_alpha());
    let b = bnd.b();
    let big_t = grid.horizon();
    let s_big = bnd.s(big_t);
    let q = basis.quad_order();
    let rule = gauss_legendre(q);

    // nodal spatial integrals
    let mut norm2 = vec![0.0; n];
    let mut drift0 = vec![0.0; n];
    let mut grad2 = vec![0.0; n];
    let mut g2n = vec![0.0; n];
    let mut front = vec![0.0; n];
    for (j, &t) in nodes.iter().enumerate() {
        let s = bnd.s(t);
        for (x, w) in rule.mapped(0.0, s) {
            let v = field.value_at_node(x, j);
            let vx = field.dx_at_node(x, j);
            let g = forcing.value(x, t);
            norm2[j] += w * v * v;
            grad2[j] += w * vx * vx;
            g2n[j] += w * g * g;
        }
        for (x, w) in rule.mapped(0.0, b) {
            let d = field.value_at_node(x, j) - field.value_at_node(x, 0);
            drift0[j] += w * d * d;
        }
        if s > b {
            // |v|² vanishes quadratically at x = s(t); the kernel blows up there as (s-x)^{-α}
            front[j] = singular_integral(
                |x| {
                    let v = field.value_at_node(x, j);
                    let lag = (t - bnd.inverse(x).unwrap_or(t)).max(0.0);
                    let gap = s - x;
                    if gap <= 0.0 || lag <= 0.0 {
                        return 0.0;
                    }
                    v * v * (lag / gap).powf(-a)
                },
                b,
                s,
                &[Singularity::new(s, -a)],
            );
        }
    }

    let table = HatTable::build(grid, 1.0 - a, 1.0);
    let weight0 = [Singularity::new(0.0, -a)];
    let mut hist0 = vec![0.0; n];
    for i in 0..n - 1 {
        let [l, r] = hat_moments(nodes[i], nodes[i + 1], nodes[i], nodes[i + 1], &weight0);
        hist0[i + 1] = hist0[i] + l * drift0[i] + r * drift0[i + 1];
    }
    let front_int = cumulative_trapezoid(nodes, &front);
    let grad_int = cumulative_trapezoid(nodes, &grad2);
    let g_int = cumulative_trapezoid(nodes, &g2n);

    let v0_norm2 = rule.mapped(0.0, b).map(|(x, w)| w * initial(x).powi(2)).sum::<f64>();
    // sup over t of the ε-tail of ‖g‖², g extended by zero past T
    let tail = |t: f64| -> f64 {
        let hi = (t + eps).min(big_t);
        if hi <= t {
            return 0.0;
        }
        let at = |u: f64| {
            let i = grid.interval_of(u);
            let r = ((u - nodes[i]) / (nodes[i + 1] - nodes[i])).clamp(0.0, 1.0);
            g_int[i] + r * (g_int[i + 1] - g_int[i])
        };
        at(hi) - at(t)
    };
    let delta = 0.5 * s_big * s_big * nodes.iter().map(|&t| tail(t)).fold(0.0f64, f64::max);

    let mut worst = 0.0f64;
    let mut worst_margin = f64::INFINITY;
    let mut ok = true;
    for j in 1..n {
        let row = table.row(j);
        let mut mem = 0.0;
        for i in 0..j {
            mem += row[i][0] * norm2[i] + row[i][1] * norm2[i + 1];
        }
        let lhs = mem / g1 + hist0[j] / g1 + front_int[j] / g1 + grad_int[j];
        let rhs = 0.5 * s_big * s_big * g_int[j] + nodes[j].powf(1.0 - a) * v0_norm2 / g2 + delta;
        if lhs > rhs * (1.0 + ENERGY_SLACK) + 1e-14 {
            ok = false;
        }
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
        worst_margin = worst_margin.min(rhs - lhs);
    }
    let params = format!("N={};m={};alpha={a};eps={eps};slack={ENERGY_SLACK}", n - 1, basis.m());
    let mut r = VerificationReport::new();
    r.push(Check::below("energy_lhs_over_rhs", worst, 1.0 + ENERGY_SLACK, params.clone()).failing_if(!ok));
    r.push(Check::below("energy_min_margin", -worst_margin, 0.0, params.clone()).recorded());
    r.push(Check::below("energy_delta_eps", delta, f64::INFINITY, params).recorded());
    Ok(r)
}

/// `u(x,t) = (s(t) - x)(1 + t²)`: vanishes on the interface.
struct Probe {
    boundary: Arc<MovingBoundary>,
}

impl Field for Probe {
    fn value(&self, x: f64, t: f64) -> f64 {
        (self.boundary.s(t) - x) * (1.0 + t * t)
    }

    fn dt(&self, x: f64, t: f64) -> f64 {
        self.boundary.sdot(t) * (1.0 + t * t) + (self.boundary.s(t) - x) * 2.0 * t
    }

    fn dx(&self, _x: f64, t: f64) -> f64 {
        -(1.0 + t * t)
    }
}

/// Pointwise estimate at `t`:
/// `D^α‖u‖² + t^{-α}Γ(1-α)⁻¹∫_0^b |u(t)-u(0)|² + Γ(1-α)⁻¹∫_b^{s(t)} (t-s⁻¹(x))^{-α}|u(x,t)-u(x,s⁻¹(x))|²`
/// `<= 2∫_0^{s(t)} D_s^α u · u + Γ(1-α)⁻¹∫_0^t (t-τ)^{-α}|u(s(τ),τ)|² ṡ(τ)`,
/// for the probe `u = (s(t)-x)(1+t²)`; every term by its own quadrature.
pub fn pointwise_energy_probe(
    order: &FractionalOrder,
    boundary: Arc<MovingBoundary>,
    times: &[f64],
) -> Result<VerificationReport> {
    let a = order.alpha();
    let g1 = order.gamma_one_minus_alpha();
    let u = Probe { boundary: boundary.clone() };
    let bnd = &*boundary;
    let b = bnd.b();
    let rule = gauss_legendre(48);
    let xi = |t: f64| rule.mapped(0.0, bnd.s(t)).map(|(x, w)| w * u.value(x, t).powi(2)).sum::<f64>();
    let dxi = |t: f64| {
        let h = 1e-6 * (1.0 + t);
        (xi(t + h) - xi((t - h).max(0.0))) / (t + h - (t - h).max(0.0))
    };
    let mut r = VerificationReport::new();
    for &t in times {
        let s = bnd.s(t);
        let caputo_norm = singular_integral(dxi, 0.0, t, &[Singularity::new(t, -a)]) / g1;
        let fixed = t.powf(-a) / g1
            * rule.mapped(0.0, b).map(|(x, w)| w * (u.value(x, t) - u.value(x, 0.0)).powi(2)).sum::<f64>();
        let front = if s > b {
            singular_integral(
                |x| {
                    let entry = bnd.inverse(x).unwrap_or(t);
                    let (lag, gap) = (t - entry, s - x);
                    if lag <= 0.0 || gap <= 0.0 {
                        return 0.0;
                    }
                    (u.value(x, t) - u.value(x, entry)).powi(2) * (lag / gap).powf(-a)
                },
                b,
                s,
                &[Singularity::new(s, -a)],
            ) / g1
        } else {
            0.0
        };
        let mut cross = 0.0;
        for (lo, hi) in [(0.0, b.min(s)), (b, s)] {
            if hi > lo {
                for (x, w) in gauss_legendre(24).mapped(lo, hi) {
                    cross += w * moving_caputo(order, bnd, &u, x, t)? * u.value(x, t);
                }
            }
        }
        let trace = singular_integral(
            |tau| u.value(bnd.s(tau), tau).powi(2) * bnd.sdot(tau),
            0.0,
            t,
            &[Singularity::new(t, -a)],
        ) / g1;
        let lhs = caputo_norm + fixed + front;
        let rhs = 2.0 * cross + trace;
        r.push(Check::below(
            format!("pointwise_energy_t={t}"),
            lhs,
            rhs,
            format!("alpha={a};lhs={lhs};rhs={rhs};margin={}", rhs - lhs),
        ));
    }
    Ok(r)
}
