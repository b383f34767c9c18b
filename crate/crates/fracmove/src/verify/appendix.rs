use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

use crate::boundary::{BoundaryFamily, MovingBoundary};
use crate::error::Result;
use crate::fraccalc::{beta_kernel_integral, caputo_derivative, rl_integral, FractionalOrder, SampledPath, TimeGrid};
use crate::quad::{singular_integral, singular_integral_vec, Singularity};

use super::{decays, Check, VerificationReport};

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixOptions {
    /// Grid size for the `I^α D^α` identity.
    pub n: usize,
    /// Random pairs for the Hölder modulus.
    pub holder_pairs: usize,
    /// Random pairs for the `Q_{1,2}` bound.
    pub q_pairs: usize,
    pub seed: u64,
}

impl Default for AppendixOptions {
    fn default() -> Self {
        AppendixOptions { n: 512, holder_pairs: 1000, q_pairs: 100, seed: 7 }
    }
}

/// Beta-kernel, `I^α D^α`, differentiation, `G₁` and Hölder checks for one
/// order.
pub fn appendix_suite(order: &FractionalOrder, opts: &AppendixOptions) -> Result<VerificationReport> {
    let a = order.alpha();
    let exact = PI / (PI * a).sin();
    let tag = |extra: &str| format!("alpha={a};{extra}");
    let mut r = VerificationReport::new();

    // (i) ∫_p^t (t-τ)^{α-1}(τ-p)^{-α} dτ
    let mut err = 0.0f64;
    for (p, t) in [(0.0, 1.0), (0.3, 1.7), (2.0, 2.5), (0.0, 1e-3)] {
        err = err.max((beta_kernel_integral(order, p, t)? - exact).abs());
    }
    r.push(Check::below(format!("beta_kernel_a={a}"), err, 1e-8, tag("pairs=4")));

    // (ii) I^α D^α f = f - f(0)
    let grid = Arc::new(TimeGrid::uniform(1.0, opts.n)?);
    let probes: [(&str, fn(f64) -> f64); 3] = [("t", |t| t), ("t2", |t| t * t), ("sin", f64::sin)];
    for (name, f) in probes {
        let path = SampledPath::from_fn(grid.clone(), f);
        let back = rl_integral(order, &caputo_derivative(order, &path)?, a, 0.0)?;
        let f0 = f(0.0);
        let err = grid
            .nodes()
            .iter()
            .zip(&back.values)
            .map(|(&t, v)| (v - (f(t) - f0)).abs())
            .fold(0.0f64, f64::max);
        r.push(Check::below(format!("left_inverse_{name}_a={a}"), err, 1e-3, tag(&format!("N={}", opts.n))));
    }

    // (iii) (I^α f)' = I^α f' + t^{α-1} f(0)/Γ(α), f = 1 + cos t
    let ga = order.gamma_alpha();
    let ia = |g: &dyn Fn(f64) -> f64, t: f64| singular_integral(g, 0.0, t, &[Singularity::new(t, a - 1.0)]) / ga;
    let f = |t: f64| 1.0 + t.cos();
    let df = |t: f64| -t.sin();
    let mut err = 0.0f64;
    for t in [0.1, 0.5, 1.0] {
        let h = 1e-5;
        let lhs = (ia(&f, t + h) - ia(&f, t - h)) / (2.0 * h);
        let rhs = ia(&df, t) + t.powf(a - 1.0) * f(0.0) / ga;
        err = err.max((lhs - rhs).abs());
    }
    r.push(Check::below(format!("derivative_rule_a={a}"), err, 1e-3, tag("h=1e-5")));

    // (iv) ∫_0^∞ a^{α-1}/(1+a) da, split at 1 with a = 1/b on the tail
    let head = singular_integral(|x| 1.0 / (1.0 + x), 0.0, 1.0, &[Singularity::new(0.0, a - 1.0)]);
    let tail = singular_integral(|x| 1.0 / (1.0 + x), 0.0, 1.0, &[Singularity::new(0.0, -a)]);
    r.push(Check::below(format!("g1_identity_a={a}"), (head + tail - exact).abs(), 1e-8, tag("split=1")));
    // G₁(x) from its definition is independent of x
    let mut err = 0.0f64;
    for x in [0.05f64, 0.3, 0.7, 0.95] {
        let g1x = x.powf(a)
            * singular_integral(
                |_| 1.0,
                x,
                1.0,
                &[Singularity::new(1.0, a - 1.0), Singularity::new(x, -a), Singularity::new(0.0, -1.0)],
            );
        err = err.max((g1x - exact).abs());
    }
    r.push(Check::below(format!("g1_function_a={a}"), err, 1e-8, tag("x=0.05,0.3,0.7,0.95")));

    // (v) t ↦ t^{1-α} (I^α f')(t) for f = t^α is α-Hölder
    let reg = |t: f64| {
        t.powf(1.0 - a) * singular_integral(|_| a, 0.0, t, &[Singularity::new(0.0, a - 1.0), Singularity::new(t, a - 1.0)])
            / ga
    };
    let bound = gamma(a + 1.0) / gamma(2.0 * a);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sup = 0.0f64;
    for i in 0..opts.holder_pairs {
        // half the pairs crowd the origin
        let (mut t1, mut t2) = if i % 2 == 0 {
            (rng.random::<f64>(), rng.random::<f64>())
        } else {
            (10f64.powf(-8.0 * rng.random::<f64>()), 10f64.powf(-8.0 * rng.random::<f64>()))
        };
        if t1 > t2 {
            std::mem::swap(&mut t1, &mut t2);
        }
        if t2 - t1 < 1e-12 {
            continue;
        }
        sup = sup.max((reg(t2) - reg(t1)).abs() / (t2 - t1).powf(a));
    }
    r.push(Check::below(
        format!("holder_modulus_a={a}"),
        sup,
        bound * (1.0 + 1e-6),
        tag(&format!("pairs={};seed={}", opts.holder_pairs, opts.seed)),
    ));
    Ok(r)
}

/// Exponent `e` with `J(τ) ~ τ^e` near 0, from the boundary's behaviour there.
fn origin_exponent(bnd: &MovingBoundary) -> f64 {
    match bnd.family() {
        BoundaryFamily::Power { beta, .. } if *beta < 1.0 => beta - 1.0,
        _ => 0.0,
    }
}

struct QFunctions<'a> {
    bnd: &'a MovingBoundary,
    a: f64,
    e0: f64,
    /// interior points where `ṡ` is not smooth (table knots)
    kinks: Vec<f64>,
    /// `ṡ(q) ~ q^e` at 0
    sdot_exp: f64,
}

impl<'a> QFunctions<'a> {
    fn new(bnd: &'a MovingBoundary, a: f64) -> Self {
        let kinks = match bnd.family() {
            BoundaryFamily::Table(t) => t.knots().to_vec(),
            _ => Vec::new(),
        };
        let sdot_exp = match bnd.family() {
            BoundaryFamily::Power { beta, .. } if *beta < 1.0 => beta - 1.0,
            _ => 0.0,
        };
        QFunctions { bnd, a, e0: origin_exponent(bnd), kinks, sdot_exp }
    }

    /// `∫_lo^hi f Π|x - at|^e`, split at the kinks inside `(lo, hi)`.
    fn integrate(&self, f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, sings: &[Singularity]) -> f64 {
        let mut cuts = vec![lo];
        if lo == 0.0 && self.sdot_exp != 0.0 {
            // fractional powers of the boundary at the origin: geometric pieces
            cuts.extend((1..=30).rev().map(|k| hi * 0.5f64.powi(k)));
        }
        cuts.extend(self.kinks.iter().copied().filter(|&k| k > lo && k < hi));
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2)
            .map(|w| singular_integral_vec::<1>(|x| [f(x)], w[0], w[1], sings, 24, 2)[0])
            .sum()
    }

    /// `J(τ) = ∫_0^τ (τ-p)^{-α-1} [s(τ)-s(p)] p^{α-1} dp`
    fn j(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let (bnd, a) = (self.bnd, self.a);
        let st = bnd.s(tau);
        let sd = bnd.sdot(tau);
        self.integrate(
            &|p| {
                let d = tau - p;
                if d > 1e-12 * tau {
                    (st - bnd.s(p)) / d
                } else {
                    sd
                }
            },
            0.0,
            tau,
            &[Singularity::new(tau, -a), Singularity::new(0.0, a - 1.0)],
        )
    }

    /// `J(τ) = (ατ)⁻¹ ∫_0^τ ṡ(q) q^α (τ-q)^{-α} dq`, after exchanging the order.
    fn j_exchanged(&self, tau: f64) -> f64 {
        let (a, e) = (self.a, self.sdot_exp);
        let v = self.integrate(
            &|q| self.bnd.sdot(q) * q.powf(-e),
            0.0,
            tau,
            &[Singularity::new(0.0, a + e), Singularity::new(tau, -a)],
        );
        v / (a * tau)
    }

    /// `K(τ) = τ^{α-1} ∫_0^τ (τ-p)^{-α} p^{α-1} dp`
    fn k(&self, tau: f64) -> f64 {
        let a = self.a;
        tau.powf(a - 1.0) * singular_integral(|_| 1.0, 0.0, tau, &[Singularity::new(tau, -a), Singularity::new(0.0, a - 1.0)])
    }

    /// `∫_lo^hi (t-τ)^{α-1} F(τ) dτ` with `t >= hi`; `F` carries `τ^e` at 0.
    fn outer(&self, f: &dyn Fn(f64) -> f64, e: f64, lo: f64, hi: f64, t: f64) -> f64 {
        let a = self.a;
        let mut sings = vec![Singularity::new(t, a - 1.0)];
        if lo == 0.0 && e != 0.0 {
            sings.push(Singularity::new(0.0, e));
            return self.integrate(&|x| f(x) * x.powf(-e), lo, hi, &sings);
        }
        self.integrate(f, lo, hi, &sings)
    }

    fn q11(&self, t1: f64, t2: f64) -> f64 {
        t2.powf(1.0 - self.a) * self.outer(&|x| self.j(x), self.e0, t1, t2, t2)
    }

    fn q12(&self, t1: f64, t2: f64) -> f64 {
        t2.powf(1.0 - self.a) * self.outer(&|x| self.k(x), self.a - 1.0, t1, t2, t2)
    }

    fn q21(&self, t1: f64, t2: f64) -> f64 {
        let j = |x| self.j(x);
        t2.powf(1.0 - self.a) * (self.outer(&j, self.e0, 0.0, t1, t1) - self.outer(&j, self.e0, 0.0, t1, t2))
    }

    fn q22(&self, t1: f64, t2: f64) -> f64 {
        let k = |x| self.k(x);
        let e = self.a - 1.0;
        t2.powf(1.0 - self.a) * (self.outer(&k, e, 0.0, t1, t1) - self.outer(&k, e, 0.0, t1, t2))
    }
}

/// Limits and bounds of `Q_{1,1}, Q_{1,2}, Q_{2,1}, Q_{2,2}` by nested
/// singular quadrature.
pub fn q_function_suite(order: &FractionalOrder, boundary: &MovingBoundary, opts: &AppendixOptions) -> Result<VerificationReport> {
    let a = order.alpha();
    let big_t = boundary.horizon();
    let q = QFunctions::new(boundary, a);
    let exact = PI / (PI * a).sin();
    let t1 = (0.5 * big_t).min(big_t - 0.1).max(0.0);
    let steps = [1e-1, 1e-2, 1e-3];
    let params = format!("alpha={a};t1={t1};steps=1e-1,1e-2,1e-3");
    let mut r = VerificationReport::new();

    // exchanged-order oracle for the inner integral
    let mut err = 0.0f64;
    for tau in [0.1, 0.5, 1.0].map(|f| f * big_t) {
        let (x, y) = (q.j(tau), q.j_exchanged(tau));
        err = err.max((x - y).abs() / (1.0 + x.abs()));
    }
    r.push(Check::below("q_inner_exchange", err, 1e-6, format!("alpha={a}")));

    for (name, f) in [
        ("q11_decay", &(|h: f64| q.q11(t1, t1 + h)) as &dyn Fn(f64) -> f64),
        ("q21_decay", &|h: f64| q.q21(t1, t1 + h)),
        ("q22_decay", &|h: f64| q.q22(t1, t1 + h)),
    ] {
        let trend: Vec<f64> = steps.iter().map(|&h| f(h)).collect();
        let last = trend[trend.len() - 1].abs();
        r.push(Check::below(name, last, trend[0].abs(), params.clone()).failing_if(!decays(&trend)).with_trend(trend));
    }

    // Q_{1,1}(0,t) = (π/(α sin πα)) [s(t) - s(0)] after exchanging the order
    let mut ratio = 0.0f64;
    for t in [1e-3, 1e-2, 1e-1, 1.0].map(|f| f * big_t) {
        let ds = boundary.s(t) - boundary.b();
        if ds > 0.0 {
            ratio = ratio.max(q.q11(0.0, t).abs() / ds);
        }
    }
    r.push(Check::below("q11_origin_constant", ratio, exact / a * (1.0 + 1e-6), format!("alpha={a}")));

    // |Q_{1,2}(t1,t2)| <= C |t2-t1|^α
    let bound = exact * gamma(a).powi(2) / gamma(2.0 * a);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sup = 0.0f64;
    for _ in 0..opts.q_pairs {
        let (mut x, mut y) = (rng.random::<f64>() * big_t, rng.random::<f64>() * big_t);
        if x > y {
            std::mem::swap(&mut x, &mut y);
        }
        if y - x < 1e-9 * big_t {
            continue;
        }
        sup = sup.max(q.q12(x, y).abs() / (y - x).powf(a));
    }
    r.push(Check::below(
        "q12_holder_constant",
        sup,
        bound * (1.0 + 1e-6),
        format!("alpha={a};pairs={};seed={}", opts.q_pairs, opts.seed),
    ));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_boundary_gives_trivial_q() {
        let o = FractionalOrder::new(0.5).unwrap();
        let bnd = MovingBoundary::constant(1.0, 1.0).unwrap();
        let opts = AppendixOptions { q_pairs: 10, ..Default::default() };
        let r = q_function_suite(&o, &bnd, &opts).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.get("q11_decay").unwrap().measured, 0.0);
        assert_eq!(r.get("q21_decay").unwrap().measured, 0.0);
    }

    #[test]
    fn affine_inner_integral_is_constant() {
        // s = 1 + vt: J = v π / sin(πα)
        let bnd = MovingBoundary::affine(1.0, 0.7, 2.0).unwrap();
        let q = QFunctions::new(&bnd, 0.4);
        let exact = 0.7 * PI / (0.4 * PI).sin();
        for tau in [0.01, 0.5, 1.9] {
            assert!((q.j(tau) - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn nonsmooth_boundaries_pass() {
        let o = FractionalOrder::new(0.5).unwrap();
        let opts = AppendixOptions { q_pairs: 10, ..Default::default() };
        let table = MovingBoundary::table(vec![0.0, 0.3, 0.6, 1.0], vec![1.0, 1.2, 1.2, 1.5], 1.0).unwrap();
        let power = MovingBoundary::power(1.0, 0.5, 0.5, 1.0).unwrap();
        for bnd in [table, power] {
            let r = q_function_suite(&o, &bnd, &opts).unwrap();
            assert!(r.passed(), "{r}");
        }
    }
}
