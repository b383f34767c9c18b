//! Galerkin operators `B`, `D̂`, `D̃`, `E`, `G^ε` and data preparation.

mod data;
pub mod probes;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub use data::{lift_boundary, Eta, LiftedProblem, Mollified, GridField};

use crate::basis::{mu, phi_at, SpectralBasis};
use crate::boundary::MovingBoundary;
use crate::error::{domain, Result};
use crate::field::{Field, SharedField};
use crate::fraccalc::{FractionalOrder, TimeGrid};

#[derive(Debug, Clone)]
pub struct GalerkinOperators {
    basis: SpectralBasis,
    order: FractionalOrder,
    eps: f64,
    dhat: DMatrix<f64>,
    /// `∫_0^1 y sin(μ_n y) cos(μ_k y) dy`, row-major
    y0: Vec<f64>,
}

impl GalerkinOperators {
    pub fn new(basis: SpectralBasis, order: FractionalOrder, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return domain(format!("mollification width must be positive, got {eps}"));
        }
        let k = basis.size();
        let dhat = DMatrix::from_fn(k, k, |n, j| {
            if n == j {
                0.0
            } else {
                let sign = if (n + j) % 2 == 0 { 1.0 } else { -1.0 };
                -2.0 * sign * mu(n) * mu(j) / (mu(n).powi(2) - mu(j).powi(2))
            }
        });
        let mut y0 = vec![0.0; k * k];
        let mut scratch = vec![0.0; k * k];
        fill_pair(k, 1.0, 1.0, 0.0, None, &mut scratch, Some(&mut y0));
        Ok(GalerkinOperators { basis, order, eps, dhat, y0 })
    }

    /// Mollification width `2 t_1` tied to the grid.
    pub fn for_grid(basis: SpectralBasis, order: FractionalOrder, grid: &TimeGrid) -> Result<Self> {
        let eps = 2.0 * grid.nodes()[1];
        Self::new(basis, order, eps)
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn order(&self) -> &FractionalOrder {
        &self.order
    }

    pub fn boundary(&self) -> &MovingBoundary {
        self.basis.boundary()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn size(&self) -> usize {
        self.basis.size()
    }

    fn check_pair(&self, tau: f64, t: f64) -> Result<()> {
        let big_t = self.boundary().horizon();
        if !(tau >= 0.0 && tau <= t && t <= big_t * (1.0 + 1e-14)) {
            return domain(format!("need 0 <= tau <= t <= T, got tau={tau}, t={t}"));
        }
        Ok(())
    }

    /// `C(τ,t)_{n,k} = ∫_0^{s(τ)} φ_n(x,τ) φ_k(x,t) dx`.
    pub fn cross_gram(&self, tau: f64, t: f64) -> Result<DMatrix<f64>> {
        self.check_pair(tau, t)?;
        let k = self.size();
        let bnd = self.boundary();
        let mut c = vec![0.0; k * k];
        fill_pair(k, bnd.s(tau), bnd.s(t), bnd.increment(tau, t), None, &mut c, None);
        Ok(DMatrix::from_row_slice(k, k, &c))
    }

    /// `B(τ,t) = C(τ,t) - I`.
    pub fn b_matrix(&self, tau: f64, t: f64) -> Result<DMatrix<f64>> {
        let mut c = self.cross_gram(tau, t)?;
        for n in 0..self.size() {
            c[(n, n)] -= 1.0;
        }
        Ok(c)
    }

    /// Constant matrix with `D(τ,τ) = (ṡ/s) D̂`.
    pub fn dhat(&self) -> &DMatrix<f64> {
        &self.dhat
    }

    /// `D̃(τ,t) / ṡ(τ)`.
    pub fn dtilde_per_speed(&self, tau: f64, t: f64) -> Result<DMatrix<f64>> {
        self.check_pair(tau, t)?;
        let k = self.size();
        let bnd = self.boundary();
        let mut c = vec![0.0; k * k];
        let mut d = vec![0.0; k * k];
        fill_pair(k, bnd.s(tau), bnd.s(t), bnd.increment(tau, t), Some(&self.y0), &mut c, Some(&mut d));
        Ok(DMatrix::from_row_slice(k, k, &d))
    }

    /// `D̃(τ,t)_{n,k} = ∫_0^{s(τ)} ∂_τφ_n(x,τ) [φ_k(x,t) - φ_k(x,τ)] dx`.
    pub fn dtilde(&self, tau: f64, t: f64) -> Result<DMatrix<f64>> {
        let sdot = self.boundary().sdot(tau);
        if !sdot.is_finite() {
            return domain(format!("s'({tau}) is not finite; use dtilde_per_speed with the regularized derivative"));
        }
        Ok(self.dtilde_per_speed(tau, t)? * sdot)
    }

    /// Diagonal of `E(t) = Γ(1-α) λ_k(t)²`.
    pub fn e_matrix(&self, t: f64) -> DVector<f64> {
        let g = self.order.gamma_one_minus_alpha();
        DVector::from_iterator(self.size(), self.basis.lambda_squared(t).into_iter().map(|l| g * l))
    }

    /// `∫_0^{s(t)} g(x,t) φ_k(x,t) dx` for all modes.
    pub fn projection(&self, g: &dyn Field, t: f64) -> Vec<f64> {
        let k = self.size();
        let mut out = vec![0.0; k];
        if g.is_zero() {
            return out;
        }
        let s = self.boundary().s(t);
        for (x, w) in self.basis.split_rule(t, &g.breakpoints(t)) {
            let gv = w * g.value(x, t);
            for (n, o) in out.iter_mut().enumerate() {
                *o += gv * phi_at(n, x, s);
            }
        }
        out
    }

    /// `G(t)_k = Γ(1-α) ∫_0^{s(t)} g(x,t) φ_k(x,t) dx`.
    pub fn forcing_projection(&self, g: &dyn Field, t: f64) -> DVector<f64> {
        let g1 = self.order.gamma_one_minus_alpha();
        DVector::from_iterator(self.size(), self.projection(g, t).into_iter().map(|v| g1 * v))
    }

    /// `c_k(0) = ∫_0^b v0(x) φ_k(x,0) dx`.
    pub fn project_initial(&self, v0: &dyn Fn(f64) -> f64) -> DVector<f64> {
        let b = self.boundary().b();
        let k = self.size();
        let mut out = DVector::zeros(k);
        for (x, w) in self.basis.rule_on(0.0, b) {
            let v = w * v0(x);
            for n in 0..k {
                out[n] += v * phi_at(n, x, b);
            }
        }
        out
    }

    /// Time-mollified zero extension of `g` with width `ε`.
    pub fn mollify(&self, g: SharedField) -> Result<Mollified> {
        Mollified::new(g, Arc::clone(self.basis.boundary_arc()), self.eps)
    }

    /// Fills `C` (and `D̃/ṡ(τ)` when `d` is given) for one pair; row-major.
    pub(crate) fn pair_blocks(&self, s_tau: f64, s_t: f64, ds: f64, c: &mut [f64], d: Option<&mut [f64]>) {
        fill_pair(self.size(), s_tau, s_t, ds, Some(&self.y0), c, d);
    }
}

fn sinc_ratio(z: f64, sin_z: f64) -> f64 {
    if z.abs() < 1e-3 {
        let z2 = z * z;
        1.0 - z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0))
    } else {
        sin_z / z
    }
}

/// `∫_0^1 y sin(z y) dy = (sin z - z cos z)/z²`.
fn f_moment(z: f64, sin_z: f64, cos_z: f64) -> f64 {
    if z.abs() < 0.5 {
        let z2 = z * z;
        let mut term = z;
        let mut sum = 0.0;
        let mut fact = 1.0; // (2j+1)!
        for j in 0..8 {
            sum += term / (fact * (2 * j + 3) as f64);
            term *= -z2;
            fact *= ((2 * j + 2) * (2 * j + 3)) as f64;
        }
        sum
    } else {
        (sin_z - z * cos_z) / (z * z)
    }
}

/// Closed forms for the pair `(τ, t)` with `s_τ = s(τ)`, `s_t = s(t)`,
/// `ds = s(t) - s(τ)`.
///
/// With `ρ = s_τ/s_t` and `ε_k = μ_k ds/s_t` all frequencies reduce to
/// `π j ± ε_k`, so only `sin ε_k`, `cos ε_k` are evaluated. With `y0 = None`
/// and `d` given, `d` receives `Y(μ_n, μ_k)` instead of `D̃/ṡ`.
fn fill_pair(k: usize, s_tau: f64, s_t: f64, ds: f64, y0: Option<&[f64]>, c: &mut [f64], mut d: Option<&mut [f64]>) {
    let rho = s_tau / s_t;
    let sq = rho.sqrt();
    let trig: Vec<(f64, f64)> = (0..k).map(|j| (mu(j) * ds / s_t).sin_cos()).collect();
    for n in 0..k {
        for j in 0..k {
            let (se, ce) = trig[j];
            let eps = mu(j) * ds / s_t;
            let sign = if (n + j) % 2 == 0 { 1.0 } else { -1.0 };
            let z1 = PI * (n as f64 - j as f64) + eps;
            let z2 = PI * (n + j + 1) as f64 - eps;
            let (s1, c1) = (sign * se, sign * ce);
            let (s2, c2) = (sign * se, -sign * ce);
            let cv = sq * (sinc_ratio(z1, s1) + sinc_ratio(z2, s2));
            c[n * k + j] = cv;
            if let Some(d) = d.as_deref_mut() {
                let yv = 0.5 * (f_moment(z2, s2, c2) + f_moment(z1, s1, c1));
                d[n * k + j] = match y0 {
                    None => yv,
                    Some(y0) => {
                        let delta = if n == j { 1.0 } else { 0.0 };
                        (-0.5 * (cv - delta) + 2.0 * mu(n) * (sq * yv - y0[n * k + j])) / s_tau
                    }
                };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::phi_s_at;
    use crate::quad::gauss_legendre;

    fn ops(bnd: MovingBoundary, m: usize) -> GalerkinOperators {
        let basis = SpectralBasis::new(m, Arc::new(bnd));
        GalerkinOperators::new(basis, FractionalOrder::new(0.5).unwrap(), 0.01).unwrap()
    }

    #[test]
    fn cross_gram_identity_on_diagonal() {
        let o = ops(MovingBoundary::affine(1.0, 1.0, 1.0).unwrap(), 6);
        let b = o.b_matrix(0.4, 0.4).unwrap();
        assert!(b.iter().all(|v| v.abs() < 1e-15));
        let c = ops(MovingBoundary::constant(1.5, 1.0).unwrap(), 6);
        assert!(c.b_matrix(0.1, 0.9).unwrap().iter().all(|v| *v == 0.0));
        assert!(c.dtilde(0.1, 0.9).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cross_gram_matches_quadrature() {
        let o = ops(MovingBoundary::affine(1.0, 1.0, 1.0).unwrap(), 5);
        let (tau, t) = (0.5, 1.0);
        let c = o.cross_gram(tau, t).unwrap();
        let rule = gauss_legendre(64);
        for n in 0..6 {
            for k in 0..6 {
                let q = rule.integrate(0.0, 1.5, |x| phi_at(n, x, 1.5) * phi_at(k, x, 2.0));
                assert!((c[(n, k)] - q).abs() < 1e-10, "{n},{k}");
            }
        }
    }

    #[test]
    fn dtilde_matches_quadrature() {
        let o = ops(MovingBoundary::affine(1.0, 0.8, 1.0).unwrap(), 4);
        let (tau, t) = (0.3, 0.9);
        let d = o.dtilde(tau, t).unwrap();
        let (st, s) = (1.0 + 0.8 * tau, 1.0 + 0.8 * t);
        let rule = gauss_legendre(128);
        for n in 0..5 {
            for k in 0..5 {
                let q = rule.integrate(0.0, st, |x| {
                    0.8 * phi_s_at(n, x, st) * (phi_at(k, x, s) - phi_at(k, x, st))
                });
                assert!((d[(n, k)] - q).abs() < 1e-10, "{n},{k}: {} vs {q}", d[(n, k)]);
            }
        }
    }

    #[test]
    fn dhat_structure() {
        let o = ops(MovingBoundary::affine(1.0, 1.0, 1.0).unwrap(), 6);
        let d = o.dhat();
        for n in 0..7 {
            assert_eq!(d[(n, n)], 0.0);
            for k in 0..7 {
                assert!((d[(n, k)] + d[(k, n)]).abs() < 1e-14);
                if n != k {
                    // 2 μ_n Y(μ_n, μ_k)
                    assert!((d[(n, k)] - 2.0 * mu(n) * o.y0[n * 7 + k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn e_and_forcing_scaling() {
        let o = ops(MovingBoundary::constant(2.0, 1.0).unwrap(), 2);
        let e = o.e_matrix(0.3);
        assert!((e[0] - (PI / 4.0).powi(2) * PI.sqrt()).abs() < 1e-14);
        let o1 = ops(MovingBoundary::constant(1.0, 1.0).unwrap(), 2);
        let g = o1.forcing_projection(&|x: f64, _t: f64| x, 0.5);
        let expect = PI.sqrt() * 2f64.sqrt() * (2.0 / PI - 4.0 / (PI * PI));
        assert!((g[0] - expect).abs() < 1e-13);
        let c0 = o1.project_initial(&|_| 1.0);
        assert!((c0[0] - 2f64.sqrt() * 2.0 / PI).abs() < 1e-14);
    }
}
