//! Galerkin coefficient solvers.
//!
//! The coefficients satisfy `c = Pc` with
//! `Pc = c(0) - P₁c - P₂c - P₃c - P₄c + I^α[∫ g^ε φ]`, where `P₄c = I^α[λ² c]`,
//! `P₂c = ∫_0^t (ṡ/s) D̂ᵀc dp` and `P₁ + P₃ = (1/Γ(1-α)) I^α H` with
//! `H(τ) = ∫_0^τ (τ-p)^{-α} p^{α-1} [Bᵀ(p,τ) w(p) + w_s(p) (D̃/ṡ)ᵀ(p,τ) c(p)] dp`.
//! Paths are stored as nodal values `c_j` and regularized derivatives
//! `w_j = t_j^{1-α} c'(t_j)`.

mod l1;
mod path;
mod picard;

use std::sync::{Arc, OnceLock};

pub use l1::l1_direct_solve;
pub use path::{reconstruct_field, CoefficientPath, GalerkinField};
pub use picard::{picard_window, run_fixed_window, solve, PicardOptions, SolveReport, WindowReport};

use crate::assembly::GalerkinOperators;
use crate::error::{domain, Result};
use crate::field::{Field, Profile, SharedField};
use crate::fraccalc::weights::HatTable;
use crate::fraccalc::TimeGrid;
use crate::quad::Singularity;

/// Product-integration weights shared by `P` and the Picard iteration.
pub(crate) struct Tables {
    /// kernel `(t_j-τ)^{α-1}`
    pub iw: HatTable,
    /// kernel `(t_k-p)^{-α} p^{α-1}`
    pub hw: HatTable,
    /// `∫_{t_i}^{t_{i+1}} p^{α-1} {L_i, R_i} dp`
    pub mw: Vec<[f64; 2]>,
}

/// A discretised coefficient problem: operators, grid, projected data.
pub struct Problem {
    ops: Arc<GalerkinOperators>,
    grid: Arc<TimeGrid>,
    c0: Vec<f64>,
    /// `∫ g^ε φ_k dx` at each node, node-major
    gvec: Vec<f64>,
    s: Vec<f64>,
    ws: Vec<f64>,
    lam2: Vec<f64>,
    tables: OnceLock<Tables>,
}

impl Problem {
    /// Projects `v0` and the mollified forcing `g^ε` on the grid.
    pub fn new(ops: Arc<GalerkinOperators>, grid: Arc<TimeGrid>, forcing: SharedField, initial: Profile) -> Result<Self> {
        let c0: Vec<f64> = ops.project_initial(&*initial).iter().copied().collect();
        let k = ops.size();
        let mut gvec = vec![0.0; grid.len() * k];
        if !forcing.is_zero() {
            let g = ops.mollify(forcing)?;
            for (j, &t) in grid.nodes().iter().enumerate() {
                gvec[j * k..(j + 1) * k].copy_from_slice(&ops.projection(&g, t));
            }
        }
        Self::from_coefficients(ops, grid, c0, gvec)
    }

    /// Uses `g` as given (no mollification).
    pub fn unmollified(ops: Arc<GalerkinOperators>, grid: Arc<TimeGrid>, forcing: &dyn Field, initial: Profile) -> Result<Self> {
        let c0: Vec<f64> = ops.project_initial(&*initial).iter().copied().collect();
        let k = ops.size();
        let mut gvec = vec![0.0; grid.len() * k];
        if !forcing.is_zero() {
            for (j, &t) in grid.nodes().iter().enumerate() {
                gvec[j * k..(j + 1) * k].copy_from_slice(&ops.projection(forcing, t));
            }
        }
        Self::from_coefficients(ops, grid, c0, gvec)
    }

    /// From an initial vector and nodal forcing projections `∫ g^ε φ_k`.
    pub fn from_coefficients(ops: Arc<GalerkinOperators>, grid: Arc<TimeGrid>, c0: Vec<f64>, gvec: Vec<f64>) -> Result<Self> {
        let k = ops.size();
        if c0.len() != k || gvec.len() != k * grid.len() {
            return domain("coefficient data does not match the basis size and grid");
        }
        let bnd = ops.boundary();
        if grid.horizon() > bnd.horizon() * (1.0 + 1e-12) {
            return domain(format!(
                "grid horizon {} exceeds boundary horizon {}",
                grid.horizon(),
                bnd.horizon()
            ));
        }
        let alpha = ops.order().alpha();
        let s: Vec<f64> = grid.nodes().iter().map(|&t| bnd.s(t)).collect();
        let ws: Vec<f64> = grid.nodes().iter().map(|&t| bnd.regularized_derivative(t, alpha)).collect();
        if let Some(j) = ws.iter().position(|w| !w.is_finite()) {
            return domain(format!("t^(1-a) s'(t) is not finite at t={}", grid.nodes()[j]));
        }
        let lam2 = grid.nodes().iter().flat_map(|&t| ops.basis().lambda_squared(t)).collect();
        Ok(Problem { ops, grid, c0, gvec, s, ws, lam2, tables: OnceLock::new() })
    }

    pub fn ops(&self) -> &GalerkinOperators {
        &self.ops
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn c0(&self) -> &[f64] {
        &self.c0
    }

    pub fn size(&self) -> usize {
        self.c0.len()
    }

    pub fn forcing_at(&self, j: usize) -> &[f64] {
        let k = self.size();
        &self.gvec[j * k..(j + 1) * k]
    }

    pub(crate) fn lam2_at(&self, j: usize) -> &[f64] {
        let k = self.size();
        &self.lam2[j * k..(j + 1) * k]
    }

    pub(crate) fn s_at(&self, j: usize) -> f64 {
        self.s[j]
    }

    /// No coupling through `ṡ`.
    pub fn is_cylindrical(&self) -> bool {
        self.ops.boundary().is_constant()
    }

    pub(crate) fn tables(&self) -> &Tables {
        self.tables.get_or_init(|| {
            let a = self.ops.order().alpha();
            let nodes = self.grid.nodes();
            let sing = [Singularity::new(0.0, a - 1.0)];
            let mw = (0..nodes.len() - 1)
                .map(|i| {
                    crate::fraccalc::weights::hat_moments(nodes[i], nodes[i + 1], nodes[i], nodes[i + 1], &sing)
                })
                .collect();
            Tables {
                iw: HatTable::build(&self.grid, a, 1.0),
                hw: HatTable::build(&self.grid, 1.0 - a, a),
                mw,
            }
        })
    }

    /// `ψ = (w_s/s) D̂ᵀ c` at node `j`.
    pub(crate) fn drift(&self, j: usize, c: &[f64], out: &mut [f64]) {
        let k = self.size();
        let factor = self.ws[j] / self.s[j];
        if factor == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let d = self.ops.dhat();
        for (q, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for n in 0..k {
                acc += d[(n, q)] * c[n];
            }
            *o = factor * acc;
        }
    }

    /// Adds `Σ_{i ∈ intervals} Ω^L_{ki} Ψ_i + Ω^R_{ki} Ψ_{i+1}` to `out`,
    /// with `Ψ_i = Bᵀ(t_i,t_k) w_i + w_s(t_i) (D̃/ṡ)ᵀ(t_i,t_k) c_i` (node-major `c`, `w`).
    pub(crate) fn add_history(&self, kt: usize, first: usize, last: usize, c: &[f64], w: &[f64], out: &mut [f64]) {
        if self.is_cylindrical() || first >= last {
            return;
        }
        let k = self.size();
        let row = self.tables().hw.row(kt);
        let bnd = self.ops.boundary();
        let nodes = self.grid.nodes();
        let mut cb = vec![0.0; k * k];
        let mut db = vec![0.0; k * k];
        // node i collects weights from intervals i-1 (R) and i (L)
        for i in first..=last.min(kt - 1) {
            let mut weight = 0.0;
            if i < last {
                weight += row[i][0];
            }
            if i > first {
                weight += row[i - 1][1];
            }
            if weight == 0.0 {
                continue;
            }
            let ds = bnd.increment(nodes[i], nodes[kt]);
            self.ops.pair_blocks(self.s[i], self.s[kt], ds, &mut cb, Some(&mut db));
            let ci = &c[i * k..(i + 1) * k];
            let wi = &w[i * k..(i + 1) * k];
            let wsi = self.ws[i];
            for q in 0..k {
                let mut acc = 0.0;
                for n in 0..k {
                    let b = cb[n * k + q] - if n == q { 1.0 } else { 0.0 };
                    acc += b * wi[n] + wsi * db[n * k + q] * ci[n];
                }
                out[q] += weight * acc;
            }
        }
    }
}

/// Derived nodal quantities for a path.
pub(crate) struct Derived {
    pub f: Vec<f64>,
    pub h: Vec<f64>,
    pub psi: Vec<f64>,
    pub p2: Vec<f64>,
}

/// `F_j = ∫g^εφ - λ²c_j - H_j/Γ(1-α)` and the drift pieces for nodes `0..=upto`.
pub(crate) fn derive(problem: &Problem, c: &[f64], w: &[f64], upto: usize) -> Derived {
    let k = problem.size();
    let n = problem.grid.len();
    let g1 = problem.ops.order().gamma_one_minus_alpha();
    let mut f = vec![0.0; n * k];
    let mut h = vec![0.0; n * k];
    let mut psi = vec![0.0; n * k];
    let mut p2 = vec![0.0; n * k];
    let mw = &problem.tables().mw;
    for j in 0..=upto {
        if j > 0 {
            problem.add_history(j, 0, j, c, w, &mut h[j * k..(j + 1) * k]);
        }
        let (gv, l2) = (problem.forcing_at(j), problem.lam2_at(j));
        for q in 0..k {
            f[j * k + q] = gv[q] - l2[q] * c[j * k + q] - h[j * k + q] / g1;
        }
        let mut tmp = vec![0.0; k];
        problem.drift(j, &c[j * k..(j + 1) * k], &mut tmp);
        psi[j * k..(j + 1) * k].copy_from_slice(&tmp);
        if j > 0 {
            for q in 0..k {
                p2[j * k + q] = p2[(j - 1) * k + q] + mw[j - 1][0] * psi[(j - 1) * k + q] + mw[j - 1][1] * psi[j * k + q];
            }
        }
    }
    Derived { f, h, psi, p2 }
}

/// Evaluates `Pc` (values) and `t^{1-α}(Pc)'` at every node.
pub fn apply_p(problem: &Problem, path: &CoefficientPath) -> Result<CoefficientPath> {
    if path.grid().as_ref() != problem.grid.as_ref() || path.modes() != problem.size() {
        return domain("path grid or size does not match the problem");
    }
    let k = problem.size();
    let n = problem.grid.len();
    let order = problem.ops.order();
    let ga = order.gamma_alpha();
    let a = order.alpha();
    let d = derive(problem, path.values_flat(), path.derivatives_flat(), n - 1);
    let tables = problem.tables();
    let nodes = problem.grid.nodes();
    let c0 = path.c0().to_vec();
    let mut cv = vec![0.0; n * k];
    let mut wv = vec![0.0; n * k];
    for q in 0..k {
        cv[q] = c0[q];
        wv[q] = d.f[q] / ga - d.psi[q];
    }
    for j in 1..n {
        let row = tables.iw.row(j);
        let tw = nodes[j].powf(1.0 - a) / ga;
        for q in 0..k {
            let mut acc = 0.0;
            let mut kacc = 0.0;
            for (i, wts) in row.iter().enumerate() {
                let (fi, fi1) = (d.f[i * k + q], d.f[(i + 1) * k + q]);
                acc += wts[0] * fi + wts[1] * fi1;
                kacc += (wts[0] + wts[1]) * (fi1 - fi) / (nodes[i + 1] - nodes[i]);
            }
            cv[j * k + q] = c0[q] + acc / ga - d.p2[j * k + q];
            wv[j * k + q] = tw * kacc + d.f[q] / ga - d.psi[j * k + q];
        }
    }
    CoefficientPath::new(problem.grid.clone(), a, c0, cv, wv)
}

/// `(max_j |c_j - (Pc)_j|, max_j |w_j - t_j^{1-α}(Pc)'_j|)`.
pub fn fixed_point_residual(problem: &Problem, path: &CoefficientPath) -> Result<(f64, f64)> {
    let p = apply_p(problem, path)?;
    let rc = path.values_flat().iter().zip(p.values_flat()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let rw = path
        .derivatives_flat()
        .iter()
        .zip(p.derivatives_flat())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok((rc, rw))
}
