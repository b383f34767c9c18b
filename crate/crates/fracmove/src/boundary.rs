//! The interface `x = s(t)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::fraccalc::FractionalOrder;

/// Monotone cubic (Fritsch–Carlson) interpolant through `(t_k, s_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneTable {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneTable {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return domain("boundary table needs at least two (t, s) rows");
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return domain("boundary table contains non-finite entries");
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return domain("boundary table times must be strictly increasing");
        }
        if let Some(k) = values.windows(2).position(|w| w[1] < w[0]) {
            return domain(format!(
                "boundary table values decrease between t={} and t={}",
                knots[k],
                knots[k + 1]
            ));
        }
        let secants: Vec<f64> = (0..n - 1)
            .map(|k| (values[k + 1] - values[k]) / (knots[k + 1] - knots[k]))
            .collect();
        let mut slopes = vec![0.0; n];
        for k in 1..n - 1 {
            let (d0, d1) = (secants[k - 1], secants[k]);
            if d0 > 0.0 && d1 > 0.0 {
                let h0 = knots[k] - knots[k - 1];
                let h1 = knots[k + 1] - knots[k];
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                slopes[k] = (w0 + w1) / (w0 / d0 + w1 / d1);
            }
        }
        slopes[0] = end_slope(knots[1] - knots[0], knots.get(2).map(|t| t - knots[1]), secants[0], secants.get(1).copied());
        slopes[n - 1] = end_slope(
            knots[n - 1] - knots[n - 2],
            (n > 2).then(|| knots[n - 2] - knots[n - 3]),
            secants[n - 2],
            (n > 2).then(|| secants[n - 3]),
        );
        Ok(MonotoneTable { knots, values, slopes })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.locate(t);
        let h = self.knots[k + 1] - self.knots[k];
        let u = (t - self.knots[k]) / h;
        let (h10, h01, h11) = (u * (1.0 - u) * (1.0 - u), u * u * (3.0 - 2.0 * u), u * u * (u - 1.0));
        // increment form keeps flat segments exactly flat
        self.values[k] + h01 * (self.values[k + 1] - self.values[k]) + h * (h10 * self.slopes[k] + h11 * self.slopes[k + 1])
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let k = self.locate(t);
        let h = self.knots[k + 1] - self.knots[k];
        let u = (t - self.knots[k]) / h;
        let d00 = 6.0 * u * (u - 1.0) / h;
        let d10 = (1.0 - u) * (1.0 - 3.0 * u);
        let d01 = -d00;
        let d11 = u * (3.0 * u - 2.0);
        d00 * self.values[k] + d10 * self.slopes[k] + d01 * self.values[k + 1] + d11 * self.slopes[k + 1]
    }
}

fn end_slope(h0: f64, h1: Option<f64>, d0: f64, d1: Option<f64>) -> f64 {
    let (Some(h1), Some(d1)) = (h1, d1) else {
        return d0;
    };
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryFamily {
    Constant { b: f64 },
    Affine { b: f64, v: f64 },
    /// `s(t) = b + c t^β`
    Power { b: f64, c: f64, beta: f64 },
    Table(MonotoneTable),
}

/// A prescribed non-decreasing interface on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingBoundary {
    family: BoundaryFamily,
    horizon: f64,
}

impl MovingBoundary {
    pub fn new(family: BoundaryFamily, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return domain(format!("horizon must be positive, got {horizon}"));
        }
        match &family {
            BoundaryFamily::Constant { b } | BoundaryFamily::Affine { b, .. } | BoundaryFamily::Power { b, .. }
                if !(*b > 0.0 && b.is_finite()) =>
            {
                return domain(format!("initial length b must be positive, got {b}"))
            }
            BoundaryFamily::Affine { v, .. } if !(*v >= 0.0 && v.is_finite()) => {
                return domain(format!("boundary speed must be >= 0, got {v}"))
            }
            BoundaryFamily::Power { c, beta, .. } if !(*c >= 0.0 && *beta > 0.0 && c.is_finite() && beta.is_finite()) => {
                return domain(format!("power boundary needs c >= 0 and beta > 0, got c={c}, beta={beta}"))
            }
            BoundaryFamily::Table(tab) => {
                if tab.knots[0] != 0.0 || *tab.knots.last().unwrap() < horizon {
                    return domain(format!("boundary table must cover [0, {horizon}]"));
                }
                if !(tab.values[0] > 0.0) {
                    return domain("boundary table must start at a positive length");
                }
            }
            _ => {}
        }
        Ok(MovingBoundary { family, horizon })
    }

    pub fn constant(b: f64, horizon: f64) -> Result<Self> {
        Self::new(BoundaryFamily::Constant { b }, horizon)
    }

    pub fn affine(b: f64, v: f64, horizon: f64) -> Result<Self> {
        Self::new(BoundaryFamily::Affine { b, v }, horizon)
    }

    pub fn power(b: f64, c: f64, beta: f64, horizon: f64) -> Result<Self> {
        Self::new(BoundaryFamily::Power { b, c, beta }, horizon)
    }

    pub fn table(knots: Vec<f64>, values: Vec<f64>, horizon: f64) -> Result<Self> {
        Self::new(BoundaryFamily::Table(MonotoneTable::new(knots, values)?), horizon)
    }

    pub fn family(&self) -> &BoundaryFamily {
        &self.family
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `s(0)`.
    pub fn b(&self) -> f64 {
        self.s(0.0)
    }

    /// True when `ṡ ≡ 0`.
    pub fn is_constant(&self) -> bool {
        match &self.family {
            BoundaryFamily::Constant { .. } => true,
            BoundaryFamily::Affine { v, .. } => *v == 0.0,
            BoundaryFamily::Power { c, .. } => *c == 0.0,
            BoundaryFamily::Table(tab) => tab.values.iter().all(|v| *v == tab.values[0]),
        }
    }

    pub fn s(&self, t: f64) -> f64 {
        match &self.family {
            BoundaryFamily::Constant { b } => *b,
            BoundaryFamily::Affine { b, v } => b + v * t,
            BoundaryFamily::Power { b, c, beta } => b + c * t.max(0.0).powf(*beta),
            BoundaryFamily::Table(tab) => tab.eval(t),
        }
    }

    /// `s(t) - s(τ)` without cancellation for the analytic families.
    pub fn increment(&self, tau: f64, t: f64) -> f64 {
        match &self.family {
            BoundaryFamily::Constant { .. } => 0.0,
            BoundaryFamily::Affine { v, .. } => v * (t - tau),
            _ => self.s(t) - self.s(tau),
        }
    }

    pub fn sdot(&self, t: f64) -> f64 {
        match &self.family {
            BoundaryFamily::Constant { .. } => 0.0,
            BoundaryFamily::Affine { v, .. } => *v,
            BoundaryFamily::Power { c, beta, .. } => {
                if *c == 0.0 {
                    0.0
                } else {
                    c * beta * t.powf(beta - 1.0)
                }
            }
            BoundaryFamily::Table(tab) => tab.derivative(t),
        }
    }

    /// `w_s(t) = t^{1-α} ṡ(t)`, extended to `t = 0` by its limit.
    pub fn regularized_derivative(&self, t: f64, alpha: f64) -> f64 {
        match &self.family {
            BoundaryFamily::Constant { .. } => 0.0,
            BoundaryFamily::Affine { v, .. } => v * t.powf(1.0 - alpha),
            BoundaryFamily::Power { c, beta, .. } => {
                if *c == 0.0 {
                    return 0.0;
                }
                let e = beta - alpha;
                if t == 0.0 {
                    if e == 0.0 {
                        c * beta
                    } else if e > 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    c * beta * t.powf(e)
                }
            }
            BoundaryFamily::Table(tab) => t.powf(1.0 - alpha) * tab.derivative(t),
        }
    }

    /// `max{t : s(t) = x}` for `x > b`, 0 for `x <= b`.
    pub fn inverse(&self, x: f64) -> Result<f64> {
        let b = self.b();
        if !(x >= 0.0) {
            return domain(format!("inverse needs x >= 0, got {x}"));
        }
        if x <= b {
            return Ok(0.0);
        }
        let top = self.s(self.horizon);
        if x > top {
            return domain(format!("x={x} exceeds s(T)={top}"));
        }
        match &self.family {
            BoundaryFamily::Constant { .. } => unreachable!("x > b = s(T) handled above"),
            BoundaryFamily::Affine { b, v } => Ok(((x - b) / v).min(self.horizon)),
            BoundaryFamily::Power { b, c, beta } => Ok(((x - b) / c).powf(1.0 / beta).min(self.horizon)),
            BoundaryFamily::Table(_) => {
                // largest t with s(t) <= x
                let (mut lo, mut hi) = (0.0, self.horizon);
                if self.s(hi) <= x {
                    return Ok(hi);
                }
                let tol = 1e-12 * self.horizon;
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    if self.s(mid) <= x {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(lo)
            }
        }
    }

    /// Checks the regularity class: `b > 0`, monotone, `w_s` bounded and
    /// continuous at 0.
    pub fn validate(&self, order: &FractionalOrder) -> BoundaryReport {
        let alpha = order.alpha();
        let t_end = self.horizon;
        let mut checks = Vec::new();

        let b = self.b();
        checks.push(BoundaryCheck {
            name: "positive_b",
            pass: b > 0.0,
            offending_time: (b <= 0.0).then_some(0.0),
            detail: format!("b = {b}"),
        });

        let samples = 1000;
        let ts: Vec<f64> = (0..=samples).map(|i| t_end * i as f64 / samples as f64).collect();
        let bad = ts.windows(2).find(|w| self.s(w[1]) < self.s(w[0]) - 1e-14 * self.s(w[0]).abs());
        checks.push(BoundaryCheck {
            name: "monotone",
            pass: bad.is_none(),
            offending_time: bad.map(|w| w[1]),
            detail: "sampled on 1001 points".into(),
        });

        let refining: Vec<f64> = (8..=52).map(|k| t_end * 0.5f64.powi(k)).collect();
        let mut worst = (0.0f64, 0.0);
        let mut bounded = true;
        let mut offending = None;
        for &t in ts.iter().skip(1).chain(&refining) {
            let w = self.regularized_derivative(t, alpha);
            if !w.is_finite() || w.abs() > 1e12 {
                bounded = false;
                offending.get_or_insert(t);
            } else if w.abs() > worst.0 {
                worst = (w.abs(), t);
            }
        }
        checks.push(BoundaryCheck {
            name: "regularized_derivative_bounded",
            pass: bounded,
            offending_time: offending,
            detail: format!("sup |t^(1-a) s'| = {:.6e} at t = {:.3e}", worst.0, worst.1),
        });

        // Cauchy criterion along t = T 2^{-k}
        let vals: Vec<f64> = refining.iter().map(|&t| self.regularized_derivative(t, alpha)).collect();
        let diffs: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let tail = &diffs[diffs.len() - 10..];
        let scale = 1.0 + vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let growing = tail.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-9) && w[1] > 1e-14 * scale);
        let last = *diffs.last().unwrap();
        let continuous = vals.iter().all(|v| v.is_finite()) && !growing && last <= 1e-2 * scale;
        checks.push(BoundaryCheck {
            name: "regularized_derivative_continuous_at_0",
            pass: continuous,
            offending_time: (!continuous).then(|| *refining.last().unwrap()),
            detail: format!(
                "w_s(T 2^-52) = {:.6e}, last increment {:.3e}",
                vals.last().unwrap(),
                last
            ),
        });
        BoundaryReport { checks }
    }

    /// Empirical constants in `|s(τ)-s(p)| <= C |τ-p|^α` and
    /// `|s(τ)-s(p)| <= C p^{α-1} |τ-p|` over random pairs `p < τ`.
    pub fn increment_constants(&self, order: &FractionalOrder, samples: usize, seed: u64) -> (f64, f64) {
        let alpha = order.alpha();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut c1, mut c2) = (0.0f64, 0.0f64);
        for _ in 0..samples {
            let a: f64 = rng.random::<f64>() * self.horizon;
            let b: f64 = rng.random::<f64>() * self.horizon;
            let (p, tau) = if a < b { (a, b) } else { (b, a) };
            if tau - p <= 0.0 || p <= 0.0 {
                continue;
            }
            let ds = self.increment(p, tau).abs();
            c1 = c1.max(ds / (tau - p).powf(alpha));
            c2 = c2.max(ds / (p.powf(alpha - 1.0) * (tau - p)));
        }
        (c1, c2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCheck {
    pub name: &'static str,
    pub pass: bool,
    pub offending_time: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    pub checks: Vec<BoundaryCheck>,
}

impl BoundaryReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundaryCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> FractionalOrder {
        FractionalOrder::new(0.5).unwrap()
    }

    #[test]
    fn validation_examples() {
        let o = half();
        assert!(MovingBoundary::constant(1.0, 1.0).unwrap().validate(&o).pass());
        let p = MovingBoundary::power(1.0, 1.0, 0.5, 1.0).unwrap();
        assert!(p.validate(&o).pass());
        assert_eq!(p.regularized_derivative(0.0, 0.5), 0.5);
        let bad = MovingBoundary::power(1.0, 1.0, 0.3, 1.0).unwrap();
        let rep = bad.validate(&o);
        assert!(!rep.pass());
        assert!(rep.failures().any(|c| c.name.starts_with("regularized_derivative")));
    }

    #[test]
    fn inverse_examples() {
        let s = MovingBoundary::affine(1.0, 1.0, 1.0).unwrap();
        assert_eq!(s.inverse(1.5).unwrap(), 0.5);
        assert_eq!(s.inverse(0.7).unwrap(), 0.0);
        assert!(s.inverse(2.5).is_err());
        let tab = MovingBoundary::table(vec![0.0, 0.4, 0.6, 1.0], vec![1.0, 2.0, 2.0, 3.0], 1.0).unwrap();
        assert!((tab.s(0.5) - 2.0).abs() < 1e-15);
        // max convention: the right end of the flat segment; the cubic leaves
        // it with zero slope, so s stays within rounding of 2 for ~1e-8
        let t = tab.inverse(2.0).unwrap();
        assert!(t >= 0.6 - 1e-12 && t < 0.6 + 1e-6, "{t}");
        assert_eq!(tab.s(t), 2.0);
    }

    #[test]
    fn table_rejects_decrease() {
        assert!(MonotoneTable::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 1.5]).is_err());
    }

    #[test]
    fn pchip_is_monotone_and_interpolates() {
        let tab = MonotoneTable::new(vec![0.0, 0.2, 0.5, 1.0], vec![1.0, 1.05, 1.6, 1.61]).unwrap();
        let mut prev = tab.eval(0.0);
        for i in 1..=1000 {
            let v = tab.eval(i as f64 / 1000.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        for (t, s) in tab.knots().iter().zip(tab.values()) {
            assert!((tab.eval(*t) - s).abs() < 1e-15);
        }
        let h = 1e-6;
        let fd = (tab.eval(0.3 + h) - tab.eval(0.3 - h)) / (2.0 * h);
        assert!((fd - tab.derivative(0.3)).abs() < 1e-6);
    }
}
