//! Moving cosine basis `φ_n(x,t) = √(2/s(t)) cos(λ_n(t) x)`, `λ_n = π(n+½)/s(t)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::boundary::MovingBoundary;
use crate::error::{domain, Error, Result};
use crate::quad::{gauss_legendre, Rule};

/// `μ_n = π(n + ½)`, the frequency on the unit interval.
pub fn mu(n: usize) -> f64 {
    PI * (n as f64 + 0.5)
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    modes: usize,
    boundary: Arc<MovingBoundary>,
    rule: Arc<Rule>,
}

impl SpectralBasis {
    /// Modes `0..=m`; spatial rule with `max(64, 4(m+1))` nodes.
    pub fn new(m: usize, boundary: Arc<MovingBoundary>) -> Self {
        Self::with_quad_order(m, boundary, (4 * (m + 1)).max(64))
    }

    pub fn with_quad_order(m: usize, boundary: Arc<MovingBoundary>, q: usize) -> Self {
        SpectralBasis { modes: m, boundary, rule: Arc::new(gauss_legendre(q.max(1))) }
    }

    /// Highest mode index `m`.
    pub fn m(&self) -> usize {
        self.modes
    }

    pub fn size(&self) -> usize {
        self.modes + 1
    }

    pub fn boundary(&self) -> &MovingBoundary {
        &self.boundary
    }

    pub fn boundary_arc(&self) -> &Arc<MovingBoundary> {
        &self.boundary
    }

    pub fn quad_order(&self) -> usize {
        self.rule.nodes.len()
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n > self.modes {
            return Err(Error::Index(format!("mode {n} exceeds cutoff m={}", self.modes)));
        }
        Ok(())
    }

    fn check_point(&self, x: f64, t: f64) -> Result<f64> {
        let s = self.boundary.s(t);
        let tol = 1e-12 * s;
        if !(x >= -tol && x <= s + tol) {
            return domain(format!("x={x} outside [0, s({t})={s}]"));
        }
        Ok(s)
    }

    pub fn lambda(&self, n: usize, t: f64) -> Result<f64> {
        self.check_index(n)?;
        Ok(mu(n) / self.boundary.s(t))
    }

    /// `λ_n(t)²` for all modes.
    pub fn lambda_squared(&self, t: f64) -> Vec<f64> {
        let s = self.boundary.s(t);
        (0..=self.modes).map(|n| (mu(n) / s).powi(2)).collect()
    }

    pub fn phi(&self, n: usize, x: f64, t: f64) -> Result<f64> {
        self.check_index(n)?;
        let s = self.check_point(x, t)?;
        Ok(phi_at(n, x, s))
    }

    pub fn phi_x(&self, n: usize, x: f64, t: f64) -> Result<f64> {
        self.check_index(n)?;
        let s = self.check_point(x, t)?;
        Ok(phi_x_at(n, x, s))
    }

    pub fn phi_xx(&self, n: usize, x: f64, t: f64) -> Result<f64> {
        self.check_index(n)?;
        let s = self.check_point(x, t)?;
        Ok(-(mu(n) / s).powi(2) * phi_at(n, x, s))
    }

    /// `∂_t φ_n = ṡ ∂_s φ_n`.
    pub fn phi_t(&self, n: usize, x: f64, t: f64) -> Result<f64> {
        self.check_index(n)?;
        let s = self.check_point(x, t)?;
        let sdot = self.boundary.sdot(t);
        if sdot == 0.0 {
            return Ok(0.0);
        }
        Ok(sdot * phi_s_at(n, x, s))
    }

    /// Gauss nodes and weights on `(0, s(t))`.
    pub fn spatial_rule(&self, t: f64) -> Vec<(f64, f64)> {
        self.rule_on(0.0, self.boundary.s(t))
    }

    pub fn rule_on(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        self.rule.mapped(a, b).collect()
    }

    /// Spatial rule on `(0, s(t))` with one full panel between consecutive
    /// `cuts` that fall inside.
    pub fn split_rule(&self, t: f64, cuts: &[f64]) -> Vec<(f64, f64)> {
        let s = self.boundary.s(t);
        let mut ends: Vec<f64> = cuts.iter().copied().filter(|&c| c > 0.0 && c < s * (1.0 - 1e-12)).collect();
        ends.push(s);
        ends.sort_by(f64::total_cmp);
        ends.dedup();
        let mut out = Vec::with_capacity(ends.len() * self.rule.nodes.len());
        let mut a = 0.0;
        for b in ends {
            out.extend(self.rule.mapped(a, b));
            a = b;
        }
        out
    }

    /// Quadrature Gram and stiffness matrices at time `t`.
    ///
    /// Uses the midpoint rule on the reference interval with as many points as
    /// the spatial rule; it integrates `cos(kπy)` exactly for `0 < k < 2M`, so
    /// orthogonality is limited only by rounding. Phases `(n+½)y` are reduced
    /// exactly.
    pub fn gram_and_stiffness(&self, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let s = self.boundary.s(t);
        let k = self.size();
        let mut gram = DMatrix::zeros(k, k);
        let mut stiff = DMatrix::zeros(k, k);
        let mut p = vec![0.0; k];
        let mut px = vec![0.0; k];
        let points = self.rule.nodes.len().max(k + 1);
        let w = 1.0 / points as f64;
        for i in 0..points {
            let y = (i as f64 + 0.5) * w;
            for n in 0..k {
                let (sin, cos) = sin_cos_half_phase(n, y);
                p[n] = cos;
                px[n] = mu(n) * sin;
            }
            for n in 0..k {
                for j in 0..k {
                    gram[(n, j)] += w * p[n] * p[j];
                    stiff[(n, j)] += w * px[n] * px[j];
                }
            }
        }
        // φ_n = √(2/s) cos(μ_n y), dx = s dy, ∂_x = ∂_y / s
        (gram * 2.0, stiff * (2.0 / (s * s)))
    }

    /// `Σ c_n φ_n(x,t)` (no domain check).
    pub fn combine(&self, c: &[f64], x: f64, t: f64) -> f64 {
        let s = self.boundary.s(t);
        c.iter().enumerate().map(|(n, cn)| cn * phi_at(n, x, s)).sum()
    }

    /// `Σ c_n ∂_x φ_n(x,t)` (no domain check).
    pub fn combine_x(&self, c: &[f64], x: f64, t: f64) -> f64 {
        let s = self.boundary.s(t);
        c.iter().enumerate().map(|(n, cn)| cn * phi_x_at(n, x, s)).sum()
    }
}

/// `φ_n` on `[0, s]`: `√(2/s) cos(μ_n x / s)`, any `n`.
pub fn phi_at(n: usize, x: f64, s: f64) -> f64 {
    (2.0 / s).sqrt() * (mu(n) * x / s).cos()
}

pub fn phi_x_at(n: usize, x: f64, s: f64) -> f64 {
    let l = mu(n) / s;
    -(2.0 / s).sqrt() * l * (l * x).sin()
}

/// `(sin, cos)` of `π(n+½)y`, with the product `(n+½)y` kept exact.
fn sin_cos_half_phase(n: usize, y: f64) -> (f64, f64) {
    let a = n as f64 + 0.5;
    let hi = a * y;
    let lo = a.mul_add(y, -hi);
    let r = hi - 2.0 * (hi / 2.0).round();
    ((r + lo) * PI).sin_cos()
}

/// `∂φ_n/∂s` at fixed `x`.
pub(crate) fn phi_s_at(n: usize, x: f64, s: f64) -> f64 {
    let m = mu(n);
    let r = (2.0 / s).sqrt();
    -0.5 * r * (m * x / s).cos() / s + r * m * x / (s * s) * (m * x / s).sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(m: usize, b: f64) -> SpectralBasis {
        SpectralBasis::new(m, Arc::new(MovingBoundary::constant(b, 1.0).unwrap()))
    }

    #[test]
    fn lambda_examples() {
        assert!((basis(4, 2.0).lambda(0, 0.3).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((basis(4, 1.0).lambda(1, 0.0).unwrap() - 1.5 * PI).abs() < 1e-15);
        let moving = SpectralBasis::new(2, Arc::new(MovingBoundary::affine(1.0, 1.0, 1.0).unwrap()));
        assert!((moving.lambda(0, 1.0).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!(matches!(moving.lambda(3, 0.0), Err(Error::Index(_))));
    }

    #[test]
    fn phi_examples() {
        let b = basis(3, 2.0);
        assert!((b.phi(0, 0.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        for n in 0..=3 {
            assert!(b.phi(n, 2.0, 0.5).unwrap().abs() < 1e-15);
            assert_eq!(b.phi_x(n, 0.0, 0.5).unwrap(), 0.0);
        }
        assert!(b.phi(0, 2.1, 0.5).is_err());
    }

    #[test]
    fn gram_identity_and_stiffness_diagonal() {
        let b = basis(4, 2.0);
        let (g, k) = b.gram_and_stiffness(0.2);
        for i in 0..5 {
            for j in 0..5 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - target).abs() < 1e-12);
                if i != j {
                    assert!(k[(i, j)].abs() < 1e-12);
                }
            }
        }
        assert!((k[(0, 0)] - (PI / 4.0).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn phi_t_matches_finite_difference() {
        let bnd = Arc::new(MovingBoundary::affine(1.0, 0.7, 1.0).unwrap());
        let b = SpectralBasis::new(3, bnd);
        let (x, t, h) = (0.6, 0.4, 1e-5);
        for n in 0..=3 {
            let fd = (b.phi(n, x, t + h).unwrap() - b.phi(n, x, t - h).unwrap()) / (2.0 * h);
            assert!((fd - b.phi_t(n, x, t).unwrap()).abs() < 1e-6);
        }
    }
}
