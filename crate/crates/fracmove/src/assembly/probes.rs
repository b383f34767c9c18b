//! Named analytic data for forcing `f`, flux `h` and initial datum `u0`.
//!
//! Forcing: `zero`, `one`, `sinxcost` (`sin x cos t`), `steady` (`-u_xx` for
//! `u = cos(πx/2b)`).
//! Initial data: `zero`, `one`, `cos` (`cos(πx/2b)`), `parabola`
//! (`1 - (x/b)²`), `modes:k=a;k=a` (combination of `φ_k(·,0)`).
//! Flux: `zero`, `one`, `t`, `sin`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::basis::phi_at;
use crate::error::{domain, Result};
use crate::field::{zero_field, Field, Profile, SharedField};

struct SinCos;

impl Field for SinCos {
    fn value(&self, x: f64, t: f64) -> f64 {
        x.sin() * t.cos()
    }
    fn dt(&self, x: f64, t: f64) -> f64 {
        -x.sin() * t.sin()
    }
    fn dx(&self, x: f64, t: f64) -> f64 {
        x.cos() * t.cos()
    }
}

pub fn forcing(name: &str, b: f64) -> Result<SharedField> {
    Ok(match name {
        "zero" => zero_field(),
        "one" => Arc::new(|_x: f64, _t: f64| 1.0),
        "sinxcost" => Arc::new(SinCos),
        "steady" => {
            let k = PI / (2.0 * b);
            Arc::new(move |x: f64, _t: f64| k * k * (k * x).cos())
        }
        other => return domain(format!("unknown forcing probe '{other}'")),
    })
}

pub fn initial(name: &str, b: f64) -> Result<Profile> {
    if let Some(spec) = name.strip_prefix("modes:") {
        let mut terms = Vec::new();
        for part in spec.split(';').filter(|p| !p.trim().is_empty()) {
            let (k, a) = part
                .split_once('=')
                .ok_or_else(|| crate::Error::Domain(format!("bad mode term '{part}', expected k=amplitude")))?;
            let k: usize = k.trim().parse().map_err(|_| crate::Error::Domain(format!("bad mode index '{k}'")))?;
            let a: f64 = a.trim().parse().map_err(|_| crate::Error::Domain(format!("bad amplitude '{a}'")))?;
            terms.push((k, a));
        }
        if terms.is_empty() {
            return domain("modes: probe needs at least one k=amplitude term");
        }
        return Ok(Arc::new(move |x| terms.iter().map(|&(k, a)| a * phi_at(k, x, b)).sum()));
    }
    Ok(match name {
        "zero" => Arc::new(|_| 0.0),
        "one" => Arc::new(|_| 1.0),
        "cos" => Arc::new(move |x: f64| (PI * x / (2.0 * b)).cos()),
        "parabola" => Arc::new(move |x: f64| 1.0 - (x / b).powi(2)),
        other => return domain(format!("unknown initial-data probe '{other}'")),
    })
}

pub fn flux(name: &str) -> Result<Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
    Ok(match name {
        "zero" => Arc::new(|_| 0.0),
        "one" => Arc::new(|_| 1.0),
        "t" => Arc::new(|t| t),
        "sin" => Arc::new(f64::sin),
        other => return domain(format!("unknown flux probe '{other}'")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_forcing_is_minus_second_derivative() {
        let b = 1.3;
        let f = forcing("steady", b).unwrap();
        let u = initial("cos", b).unwrap();
        let (x, h) = (0.4, 1e-4);
        let uxx = (u(x + h) - 2.0 * u(x) + u(x - h)) / (h * h);
        assert!((f.value(x, 0.2) + uxx).abs() < 1e-6);
    }

    #[test]
    fn mode_mixture() {
        let u = initial("modes:0=1;2=0.5", 1.0).unwrap();
        assert!((u(0.0) - 1.5 * 2f64.sqrt()).abs() < 1e-14);
        assert!(initial("modes:", 1.0).is_err());
        assert!(initial("nope", 1.0).is_err());
    }
}
