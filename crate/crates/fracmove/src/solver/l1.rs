use crate::error::Result;
use crate::fraccalc::weights::kernel_moment;

use super::{CoefficientPath, Problem};

/// Direct L1 time stepping of
/// `∫_0^t (t-τ)^{-α} d/dτ[Cᵀ(τ,t) c(τ)] dτ + Γ(1-α) λ² c = Γ(1-α) ∫g^εφ`,
/// with `w = t^{1-α} c'` recovered by central differences in `σ = t^α`.
/// A low-order cross-check for the Picard solution.
pub fn l1_direct_solve(problem: &Problem) -> Result<CoefficientPath> {
    let k = problem.size();
    let grid = problem.grid().clone();
    let nodes = grid.nodes();
    let n = nodes.len();
    let order = problem.ops().order();
    let (a, g1) = (order.alpha(), order.gamma_one_minus_alpha());
    let bnd = problem.ops().boundary();
    let cyl = problem.is_cylindrical();

    let mut c = vec![0.0; n * k];
    c[..k].copy_from_slice(problem.c0());
    let mut y = vec![0.0; n * k];
    let mut cb = vec![0.0; k * k];
    for j in 1..n {
        let tj = nodes[j];
        // Y_i = C(t_i, t_j)ᵀ c_i
        for i in 0..j {
            let ci = &c[i * k..(i + 1) * k];
            let yi = &mut y[i * k..(i + 1) * k];
            if cyl {
                yi.copy_from_slice(ci);
                continue;
            }
            problem.ops().pair_blocks(problem.s_at(i), problem.s_at(j), bnd.increment(nodes[i], tj), &mut cb, None);
            for q in 0..k {
                yi[q] = (0..k).map(|m| cb[m * k + q] * ci[m]).sum();
            }
        }
        let wt = |i: usize| {
            let h = nodes[i + 1] - nodes[i];
            kernel_moment(tj - nodes[i], h, 1.0 - a) / h
        };
        let last = wt(j - 1);
        let mut rhs: Vec<f64> = (0..k).map(|q| g1 * problem.forcing_at(j)[q] + last * y[(j - 1) * k + q]).collect();
        for i in 0..j - 1 {
            let ai = wt(i);
            for q in 0..k {
                rhs[q] -= ai * (y[(i + 1) * k + q] - y[i * k + q]);
            }
        }
        let l2 = problem.lam2_at(j);
        for q in 0..k {
            c[j * k + q] = rhs[q] / (last + g1 * l2[q]);
        }
    }

    let sigma: Vec<f64> = nodes.iter().map(|t| t.powf(a)).collect();
    let mut w = vec![0.0; n * k];
    for j in 0..n {
        let (l, r) = if j == 0 {
            (0, 1)
        } else if j == n - 1 {
            (n - 2, n - 1)
        } else {
            (j - 1, j + 1)
        };
        let ds = sigma[r] - sigma[l];
        for q in 0..k {
            w[j * k + q] = a * (c[r * k + q] - c[l * k + q]) / ds;
        }
    }
    CoefficientPath::new(grid, a, problem.c0().to_vec(), c, w)
}
