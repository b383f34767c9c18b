use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

const MAX_TERMS: usize = 2000;

/// One-parameter Mittag-Leffler function `E_α(z) = Σ z^k / Γ(αk+1)` for real `z`
/// and `α ∈ (0, 1]`.
///
/// Power series for `z >= -1`; for `z < -1` the Laplace-type representation
/// `E_α(-x) = ∫_0^∞ e^{-r x^{1/α}} K_α(r) dr`, integrated with the trapezoidal
/// rule after `r = e^y`.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("Mittag-Leffler parameter must lie in (0,1], got {alpha}"));
    }
    if !z.is_finite() {
        return domain("Mittag-Leffler argument must be finite");
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        let v = z.exp();
        return if v.is_finite() { Ok(v) } else { domain(format!("E_1({z}) overflows")) };
    }
    if z >= -1.0 {
        series(alpha, z)
    } else {
        Ok(negative_axis(alpha, -z))
    }
}

fn series(alpha: f64, z: f64) -> Result<f64> {
    let lz = z.abs().ln();
    let mut sum = 1.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        let mag = (kf * lz - ln_gamma(alpha * kf + 1.0)).exp();
        let term = if z < 0.0 && k % 2 == 1 { -mag } else { mag };
        sum += term;
        if !sum.is_finite() {
            return domain(format!("E_{alpha}({z}) overflows"));
        }
        // terms decay monotonically once αk exceeds log|z|
        if mag < 1e-17 * sum.abs() && kf * alpha > lz.max(1.0) {
            return Ok(sum);
        }
    }
    domain(format!("series for E_{alpha}({z}) did not converge"))
}

fn negative_axis(alpha: f64, x: f64) -> f64 {
    let scale = x.powf(1.0 / alpha);
    let (s, c) = (PI * alpha).sin_cos();
    // trapezoid error ~ exp(-2π d/h), d the distance of the nearest
    // singularity of the integrand from the real y-axis
    let d = (PI * (1.0 - alpha) / alpha).min(0.5 * PI);
    let h = (2.0 * PI * 0.9 * d / 40.0).min(0.05);
    let y_lo = (1e-18f64).ln() / alpha;
    let y_hi = (800.0 / scale).ln();
    let steps = ((y_hi - y_lo) / h).ceil() as usize;
    let mut sum = 0.0;
    for i in 0..=steps {
        let y = y_lo + i as f64 * h;
        let r = y.exp();
        let ra = (alpha * y).exp();
        let kr = s / PI * ra / (ra * ra + 2.0 * ra * c + 1.0);
        sum += (-r * scale).exp() * kr;
    }
    sum * h
}
