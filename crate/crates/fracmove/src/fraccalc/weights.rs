//! Product-integration weights for weakly singular kernels.

use crate::quad::{singular_integral_vec, Singularity};

use super::TimeGrid;

/// `∫_{t_i}^{t_{i+1}} (t-τ)^{p-1} dτ` given `a = t - t_i` and `h = t_{i+1} - t_i`.
///
/// `a^p - (a-h)^p` is formed as `-a^p expm1(p ln1p(-h/a))`, which keeps full
/// relative accuracy when `h << a`.
pub fn kernel_moment(a: f64, h: f64, p: f64) -> f64 {
    let r = h / a;
    if r >= 1.0 {
        return a.powf(p) / p;
    }
    -a.powf(p) * (p * (-r).ln_1p()).exp_m1() / p
}

/// Moments of the two hat functions of `[a, b]` over `[lo, hi] ⊂ [a, b]`
/// against the singular factors.
pub(crate) fn hat_moments(a: f64, b: f64, lo: f64, hi: f64, sings: &[Singularity]) -> [f64; 2] {
    let h = b - a;
    singular_integral_vec::<2>(|x| [(b - x) / h, (x - a) / h], lo, hi, sings, 10, 1)
}

/// Lower-triangular table of hat moments `∫_{t_i}^{t_{i+1}} (t_j-τ)^{μ-1} τ^{ν-1} {L_i, R_i} dτ`
/// for all `i < j`.
#[derive(Debug, Clone)]
pub(crate) struct HatTable {
    data: Vec<[f64; 2]>,
}

impl HatTable {
    pub fn build(grid: &TimeGrid, mu: f64, nu: f64) -> Self {
        let nodes = grid.nodes();
        let n = nodes.len();
        let mut data = Vec::with_capacity(n * (n - 1) / 2);
        for j in 1..n {
            let sings = [Singularity::new(nodes[j], mu - 1.0), Singularity::new(0.0, nu - 1.0)];
            for i in 0..j {
                data.push(hat_moments(nodes[i], nodes[i + 1], nodes[i], nodes[i + 1], &sings));
            }
        }
        HatTable { data }
    }

    /// Weights of row `j` (intervals `0..j`).
    pub fn row(&self, j: usize) -> &[[f64; 2]] {
        let start = j * (j - 1) / 2;
        &self.data[start..start + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_matches_closed_form() {
        let p = 0.3;
        let (a, h) = (1.0f64, 0.25);
        let exact = (a.powf(p) - (a - h).powf(p)) / p;
        assert!((kernel_moment(a, h, p) - exact).abs() < 1e-15);
        assert!((kernel_moment(0.5, 0.5, p) - 0.5f64.powf(p) / p).abs() < 1e-15);
        // tiny step far from the singularity
        let v = kernel_moment(1.0, 1e-14, 0.5);
        assert!((v / 1e-14 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hat_rows_sum_to_kernel_moment() {
        let grid = TimeGrid::graded(1.0, 40, 3.0).unwrap();
        let table = HatTable::build(&grid, 0.4, 1.0);
        let nodes = grid.nodes();
        for j in [1, 2, 7, 40] {
            for (i, w) in table.row(j).iter().enumerate() {
                let m = kernel_moment(nodes[j] - nodes[i], nodes[i + 1] - nodes[i], 0.4);
                assert!(((w[0] + w[1]) - m).abs() < 1e-13 * m.max(1e-300), "j={j} i={i}");
            }
        }
    }
}
