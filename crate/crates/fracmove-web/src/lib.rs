//! Browser bindings: coefficient decay curves, a space-time heatmap of the
//! solution and the Mittag-Leffler function. Results are flat `Float64Array`s
//! with the layout given on each function.

use std::sync::Arc;

use wasm_bindgen::prelude::*;

use fracmove::assembly::{probes, GalerkinOperators};
use fracmove::basis::SpectralBasis;
use fracmove::boundary::MovingBoundary;
use fracmove::fraccalc::{mittag_leffler, FractionalOrder, TimeGrid};
use fracmove::solver::{reconstruct_field, solve, CoefficientPath, PicardOptions, Problem};

const MAX_MODES: usize = 32;
const MAX_STEPS: usize = 1024;

fn err(e: impl ToString) -> String {
    e.to_string()
}

/// Unforced problem on `0 < x < 1 + v t`, `t ∈ [0, 1]`, initial datum `1 - x²`.
fn solve_demo(alpha: f64, speed: f64, modes: usize, steps: usize) -> Result<(CoefficientPath, SpectralBasis), String> {
    if modes > MAX_MODES || !(8..=MAX_STEPS).contains(&steps) {
        return Err(format!("need modes <= {MAX_MODES} and 8 <= steps <= {MAX_STEPS}"));
    }
    let order = FractionalOrder::new(alpha).map_err(err)?;
    let boundary = if speed == 0.0 {
        MovingBoundary::constant(1.0, 1.0)
    } else {
        MovingBoundary::affine(1.0, speed, 1.0)
    }
    .map_err(err)?;
    let basis = SpectralBasis::new(modes, Arc::new(boundary));
    let ops = Arc::new(GalerkinOperators::new(basis.clone(), order.clone(), 1.0 / modes.max(1) as f64).map_err(err)?);
    let grid = Arc::new(TimeGrid::with_default_grading(1.0, steps, &order).map_err(err)?);
    let problem = Problem::new(ops, grid, probes::forcing("zero", 1.0).map_err(err)?, probes::initial("parabola", 1.0).map_err(err)?)
        .map_err(err)?;
    let (path, _) = solve(&problem, &PicardOptions::default()).map_err(err)?;
    Ok((path, basis))
}

/// Rows `[t, c_0(t), …, c_m(t)]` for every grid node, concatenated.
pub fn decay_curves_native(alpha: f64, speed: f64, modes: usize, steps: usize) -> Result<Vec<f64>, String> {
    let (path, _) = solve_demo(alpha, speed, modes, steps)?;
    let mut out = Vec::with_capacity(path.grid().len() * (modes + 2));
    for (j, &t) in path.grid().nodes().iter().enumerate() {
        out.push(t);
        out.extend_from_slice(path.c(j));
    }
    Ok(out)
}

/// `u(x_i, t_j)` on `nx × nt` points of `[0, s(1)] × [0, 1]`, row-major in
/// `t`; `NaN` outside the domain.
pub fn field_heatmap_native(alpha: f64, speed: f64, modes: usize, nx: usize, nt: usize) -> Result<Vec<f64>, String> {
    if !(2..=512).contains(&nx) || !(2..=512).contains(&nt) {
        return Err("heatmap needs 2..=512 points per axis".into());
    }
    let (path, basis) = solve_demo(alpha, speed, modes, 256)?;
    let top = basis.boundary().s(1.0);
    let field = reconstruct_field(Arc::new(path), basis, None);
    let mut out = Vec::with_capacity(nx * nt);
    for j in 0..nt {
        let t = j as f64 / (nt - 1) as f64;
        for i in 0..nx {
            let x = top * i as f64 / (nx - 1) as f64;
            out.push(field.sample(x, t).unwrap_or(f64::NAN));
        }
    }
    Ok(out)
}

/// `E_α(z)` at `count` evenly spaced `z` in `[z_min, z_max]`.
pub fn mittag_leffler_curve_native(alpha: f64, z_min: f64, z_max: f64, count: usize) -> Result<Vec<f64>, String> {
    if count < 2 || z_max <= z_min {
        return Err("need count >= 2 and z_min < z_max".into());
    }
    (0..count)
        .map(|i| mittag_leffler(alpha, z_min + (z_max - z_min) * i as f64 / (count - 1) as f64).map_err(err))
        .collect()
}

#[wasm_bindgen]
pub fn decay_curves(alpha: f64, speed: f64, modes: usize, steps: usize) -> Result<Vec<f64>, JsError> {
    decay_curves_native(alpha, speed, modes, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn field_heatmap(alpha: f64, speed: f64, modes: usize, nx: usize, nt: usize) -> Result<Vec<f64>, JsError> {
    field_heatmap_native(alpha, speed, modes, nx, nt).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn mittag_leffler_curve(alpha: f64, z_min: f64, z_max: f64, count: usize) -> Result<Vec<f64>, JsError> {
    mittag_leffler_curve_native(alpha, z_min, z_max, count).map_err(|e| JsError::new(&e))
}
