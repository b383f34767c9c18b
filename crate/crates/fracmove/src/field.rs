//! Space-time fields `w(x, t)`.

use std::sync::Arc;

pub trait Field: Send + Sync {
    fn value(&self, x: f64, t: f64) -> f64;

    fn dt(&self, x: f64, t: f64) -> f64 {
        let h = 1e-6 * (1.0 + t.abs());
        let lo = (t - h).max(0.0);
        (self.value(x, t + h) - self.value(x, lo)) / (t + h - lo)
    }

    fn dx(&self, x: f64, t: f64) -> f64 {
        let h = 1e-6 * (1.0 + x.abs());
        let lo = (x - h).max(0.0);
        (self.value(x + h, t) - self.value(lo, t)) / (x + h - lo)
    }

    /// Points in `x` where the field is not smooth at time `t`.
    fn breakpoints(&self, _t: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Lets consumers skip work for the zero field.
    fn is_zero(&self) -> bool {
        false
    }
}

impl<F> Field for F
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn value(&self, x: f64, t: f64) -> f64 {
        self(x, t)
    }
}

pub type SharedField = Arc<dyn Field>;

/// Function of `x` alone (initial data).
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl Field for ZeroField {
    fn value(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
    fn dt(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
    fn dx(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
    fn is_zero(&self) -> bool {
        true
    }
}

pub fn zero_field() -> SharedField {
    Arc::new(ZeroField)
}

pub fn zero_profile() -> Profile {
    Arc::new(|_| 0.0)
}
