//! Worked examples for every public operation, through the public API.

use std::f64::consts::PI;
use std::sync::Arc;

use fracmove::assembly::{lift_boundary, probes, GalerkinOperators};
use fracmove::basis::{phi_at, SpectralBasis};
use fracmove::boundary::MovingBoundary;
use fracmove::field::{zero_field, Field, ZeroField};
use fracmove::fraccalc::{
    beta_kernel_integral, caputo_derivative, moving_caputo, moving_integral, rl_integral, FractionalOrder,
    SampledPath, TimeGrid,
};
use fracmove::solver::{
    apply_p, l1_direct_solve, reconstruct_field, solve, CoefficientPath, PicardOptions, Problem,
};
use fracmove::verify::{duality_bound_check, energy_inequality_check, weak_residual, xt_norm, TestFunction};

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

fn half() -> FractionalOrder {
    FractionalOrder::new(0.5).unwrap()
}

fn ops(bnd: MovingBoundary, m: usize, alpha: f64) -> Arc<GalerkinOperators> {
    let basis = SpectralBasis::new(m, Arc::new(bnd));
    Arc::new(GalerkinOperators::new(basis, FractionalOrder::new(alpha).unwrap(), 0.05).unwrap())
}

#[test]
fn order_caches_gamma_values() {
    for a in [0.1, 0.3, 0.5, 0.9] {
        let o = FractionalOrder::new(a).unwrap();
        close(o.gamma_alpha() * o.gamma_one_minus_alpha(), PI / (PI * a).sin(), 1e-12 * PI / (PI * a).sin());
        close(o.gamma_two_minus_alpha(), (1.0 - a) * o.gamma_one_minus_alpha(), 1e-12);
    }
    for a in [0.0, 1.0, -0.2, f64::NAN] {
        assert!(FractionalOrder::new(a).is_err());
    }
}

#[test]
fn graded_grid_resolves_the_origin() {
    let g = TimeGrid::graded(2.0, 100, 3.0).unwrap();
    assert_eq!(g.nodes()[0], 0.0);
    assert_eq!(*g.nodes().last().unwrap(), 2.0);
    assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    assert!(g.nodes()[1] <= 2.0 * 100f64.powi(-3) * (1.0 + 1e-12));
}

#[test]
fn beta_kernel() {
    close(beta_kernel_integral(&half(), 0.0, 1.0).unwrap(), PI, 1e-8);
    close(beta_kernel_integral(&half(), 0.3, 0.9).unwrap(), PI, 1e-8);
    close(beta_kernel_integral(&FractionalOrder::new(0.3).unwrap(), 0.0, 2.0).unwrap(), 3.8832220, 1e-7);
    assert!(beta_kernel_integral(&half(), 1.0, 1.0).is_err());
}

#[test]
fn riemann_liouville_and_caputo_power_rules() {
    let grid = Arc::new(TimeGrid::uniform(1.0, 64).unwrap());
    let one = SampledPath::from_fn(grid.clone(), |_| 1.0);
    let t = SampledPath::from_fn(grid.clone(), |t| t);
    close(*rl_integral(&half(), &one, 0.5, 0.0).unwrap().values.last().unwrap(), 1.1283792, 1e-7);
    close(*rl_integral(&half(), &t, 0.5, 0.0).unwrap().values.last().unwrap(), 0.7522528, 1e-7);
    close(*caputo_derivative(&half(), &t).unwrap().values.last().unwrap(), 1.1283792, 1e-7);
    let c = SampledPath::from_fn(grid, |_| 3.0);
    assert!(caputo_derivative(&half(), &c).unwrap().values.iter().all(|v| *v == 0.0));
}

#[test]
fn moving_operators() {
    let bnd = MovingBoundary::affine(1.0, 1.0, 1.0).unwrap();
    let one = |_x: f64, _t: f64| 1.0;
    close(moving_integral(&half(), &bnd, &one, 1.5, 1.0, 0.5).unwrap(), 0.7978846, 1e-7);
    assert_eq!(moving_integral(&half(), &bnd, &ZeroField, 1.5, 1.0, 0.5).unwrap(), 0.0);
    assert!(moving_integral(&half(), &bnd, &one, 2.5, 1.0, 0.5).is_err());
    let still = |x: f64, _t: f64| x * x;
    close(moving_caputo(&half(), &bnd, &still, 0.5, 1.0).unwrap(), 0.0, 1e-12);
    let linear = |_x: f64, t: f64| t;
    close(moving_caputo(&half(), &bnd, &linear, 0.5, 1.0).unwrap(), 1.1283792, 1e-6);
}

#[test]
fn mittag_leffler_values() {
    let o = half();
    close(o.mittag_leffler(0.0).unwrap(), 1.0, 1e-15);
    // e·erfc(1)
    close(o.mittag_leffler(-1.0).unwrap(), 0.42758357615580705, 1e-10);
    assert!(o.mittag_leffler(f64::NAN).is_err());
}

#[test]
fn boundary_validation_and_inverse() {
    let o = half();
    assert!(MovingBoundary::constant(1.0, 1.0).unwrap().validate(&o).pass());
    let critical = MovingBoundary::power(1.0, 1.0, 0.5, 1.0).unwrap();
    assert!(critical.validate(&o).pass());
    close(critical.regularized_derivative(1e-12, 0.5), 0.5, 1e-12);
    assert!(!MovingBoundary::power(1.0, 1.0, 0.3, 1.0).unwrap().validate(&o).pass());

    let affine = MovingBoundary::affine(1.0, 1.0, 1.0).unwrap();
    close(affine.inverse(1.5).unwrap(), 0.5, 1e-14);
    assert_eq!(affine.inverse(0.7).unwrap(), 0.0);
    assert!(affine.inverse(2.5).is_err());
    let plateau = MovingBoundary::table(vec![0.0, 0.4, 0.6, 1.0], vec![1.0, 2.0, 2.0, 3.0], 1.0).unwrap();
    // s rises quadratically off the plateau, so s(0.6 + 1e-8) rounds to 2
    close(plateau.inverse(2.0).unwrap(), 0.6, 1e-8);
}

#[test]
fn basis_values() {
    let two = Arc::new(MovingBoundary::constant(2.0, 1.0).unwrap());
    let b = SpectralBasis::new(3, two);
    close(b.lambda(0, 0.3).unwrap(), PI / 4.0, 1e-15);
    close(b.phi(0, 0.0, 0.3).unwrap(), 1.0, 1e-15);
    assert!(b.lambda(4, 0.3).is_err());
    assert!(b.phi(0, 2.5, 0.3).is_err());
    let (_, stiff) = b.gram_and_stiffness(0.5);
    close(stiff[(0, 0)], 0.6168503, 1e-7);
    let one = SpectralBasis::new(1, Arc::new(MovingBoundary::constant(1.0, 1.0).unwrap()));
    close(one.lambda(1, 0.0).unwrap(), 4.7123890, 1e-7);
    let moving = SpectralBasis::new(0, Arc::new(MovingBoundary::affine(1.0, 1.0, 1.0).unwrap()));
    close(moving.lambda(0, 1.0).unwrap(), PI / 4.0, 1e-15);
}

#[test]
fn galerkin_matrices() {
    let moving = ops(MovingBoundary::affine(1.0, 1.0, 1.0).unwrap(), 4, 0.5);
    assert!(moving.b_matrix(0.4, 0.4).unwrap().iter().all(|v| v.abs() < 1e-14));
    assert!(moving.dtilde(0.4, 0.4).unwrap().iter().all(|v| v.abs() < 1e-14));
    assert!(moving.b_matrix(0.9, 0.4).is_err());
    let c = moving.cross_gram(0.5, 1.0).unwrap();
    let q = fracmove::quad::gauss_legendre(64).integrate(0.0, 1.5, |x| phi_at(0, x, 1.5) * phi_at(0, x, 2.0));
    close(c[(0, 0)], q, 1e-10);

    let fixed = ops(MovingBoundary::constant(2.0, 1.0).unwrap(), 4, 0.5);
    assert!(fixed.b_matrix(0.1, 0.8).unwrap().iter().all(|v| *v == 0.0));
    assert!(fixed.dtilde(0.1, 0.8).unwrap().iter().all(|v| *v == 0.0));
    // E carries Γ(1-α) = √π at α = ½
    close(fixed.e_matrix(0.2)[0], (PI / 4.0).powi(2) * PI.sqrt(), 1e-13);
    let d = fixed.dhat();
    for n in 0..5 {
        assert_eq!(d[(n, n)], 0.0);
        for k in 0..5 {
            assert!((d[(n, k)] + d[(k, n)]).abs() < 1e-14);
        }
    }
}

#[test]
fn projections() {
    let unit = ops(MovingBoundary::constant(1.0, 1.0).unwrap(), 3, 0.5);
    assert!(unit.forcing_projection(&ZeroField, 0.5).iter().all(|v| *v == 0.0));
    let phi0 = |x: f64, _t: f64| phi_at(0, x, 1.0);
    let e0 = unit.forcing_projection(&phi0, 0.5);
    close(e0[0], PI.sqrt(), 1e-13);
    close(e0[1], 0.0, 1e-13);
    let x = |x: f64, _t: f64| x;
    close(unit.forcing_projection(&x, 0.5)[0], PI.sqrt() * 2f64.sqrt() * (2.0 / PI - 4.0 / (PI * PI)), 1e-12);
    close(unit.project_initial(&|_| 1.0)[0], 0.9003163, 1e-7);
    let c = unit.project_initial(&|x| phi_at(2, x, 1.0));
    for (k, v) in c.iter().enumerate() {
        close(*v, if k == 2 { 1.0 } else { 0.0 }, 1e-13);
    }
}

#[test]
fn mollifier() {
    let moving = ops(MovingBoundary::affine(1.0, 1.0, 1.0).unwrap(), 2, 0.5);
    assert!(moving.mollify(zero_field()).unwrap().value(0.5, 0.5) == 0.0);
    let one = moving.mollify(Arc::new(|_x: f64, _t: f64| 1.0)).unwrap();
    close(one.value(0.5, 0.5), 1.0, 1e-12);

    // ‖g^ε - g‖ on the fixed domain decreases with ε
    let g = probes::forcing("sinxcost", 1.0).unwrap();
    let rule = fracmove::quad::gauss_legendre(32);
    let mut last = f64::INFINITY;
    for eps in [0.1, 0.05, 0.025] {
        let basis = SpectralBasis::new(2, Arc::new(MovingBoundary::constant(1.0, 1.0).unwrap()));
        let o = GalerkinOperators::new(basis, half(), eps).unwrap();
        let ge = o.mollify(g.clone()).unwrap();
        let mut acc = 0.0;
        for (t, wt) in rule.mapped(0.0, 1.0) {
            for (x, wx) in rule.mapped(0.0, 1.0) {
                acc += wt * wx * (ge.value(x, t) - g.value(x, t)).powi(2);
            }
        }
        let norm = acc.sqrt();
        assert!(norm < last, "eps={eps}: {norm} >= {last}");
        last = norm;
    }
    assert!(GalerkinOperators::new(SpectralBasis::new(1, Arc::new(MovingBoundary::constant(1.0, 1.0).unwrap())), half(), 0.0).is_err());
}

#[test]
fn lifting_without_flux_is_the_identity() {
    let grid = Arc::new(TimeGrid::uniform(1.0, 16).unwrap());
    let h = SampledPath::from_fn(grid, |_| 0.0);
    let f = probes::forcing("sinxcost", 1.0).unwrap();
    let u0 = probes::initial("parabola", 1.0).unwrap();
    let lifted = lift_boundary(f.clone(), &h, u0.clone(), &half(), 1.0).unwrap();
    for (x, t) in [(0.1, 0.2), (0.7, 0.9)] {
        close(lifted.g().value(x, t), f.value(x, t), 1e-14);
        close(lifted.v0()(x), u0(x), 1e-14);
    }
}

fn problem(bnd: MovingBoundary, forcing: &str, initial: &str, n: usize) -> Problem {
    let o = ops(bnd, 4, 0.5);
    let grid = Arc::new(TimeGrid::with_default_grading(1.0, n, &half()).unwrap());
    let b = o.boundary().b();
    let f = probes::forcing(forcing, b).unwrap();
    let g = Arc::new(o.mollify(f).unwrap());
    Problem::new(o, grid, g, probes::initial(initial, b).unwrap()).unwrap()
}

#[test]
fn p_of_a_constant_on_the_fixed_domain() {
    let p = problem(MovingBoundary::constant(1.0, 1.0).unwrap(), "zero", "parabola", 64);
    let grid = p.grid().clone();
    let c0 = p.c0().to_vec();
    let constant = CoefficientPath::from_fn(grid.clone(), 0.5, 5, |k, _| c0[k], |_, _| 0.0);
    let pc = apply_p(&p, &constant).unwrap();
    let o = half();
    let lam2 = p.ops().basis().lambda_squared(0.0);
    for (j, &t) in grid.nodes().iter().enumerate().step_by(8) {
        for k in 0..5 {
            // E = Γ(1-α)λ², c_α = 1/(Γ(α)Γ(1-α)), I^α 1 = t^α/Γ(1+α)
            let p4 = t.powf(0.5) / (o.gamma_alpha() * 0.5) / o.gamma_one_minus_alpha() * o.gamma_one_minus_alpha() * lam2[k] * c0[k];
            close(pc.c(j)[k], c0[k] - p4, 1e-6 * (1.0 + p4.abs()));
        }
    }
    let zero = problem(MovingBoundary::affine(1.0, 1.0, 1.0).unwrap(), "zero", "zero", 32);
    let pz = apply_p(&zero, &CoefficientPath::zeros(zero.grid().clone(), 0.5, 5)).unwrap();
    assert!(pz.values_flat().iter().all(|v| *v == 0.0));
}

#[test]
fn zero_data_gives_zero_paths() {
    let p = problem(MovingBoundary::affine(1.0, 1.0, 1.0).unwrap(), "zero", "zero", 32);
    let (path, report) = solve(&p, &PicardOptions::default()).unwrap();
    assert!(path.values_flat().iter().all(|v| *v == 0.0));
    assert!(report.windows.iter().all(|w| w.iterations <= 1));
    assert!(l1_direct_solve(&p).unwrap().values_flat().iter().all(|v| *v == 0.0));
    assert_eq!(xt_norm(&path), 0.0);
}

#[test]
fn steady_state_stays_put() {
    // unmollified: the zero extension halves g^ε near t = 0
    let o = ops(MovingBoundary::constant(1.0, 1.0).unwrap(), 4, 0.5);
    let grid = Arc::new(TimeGrid::with_default_grading(1.0, 128, &half()).unwrap());
    let f = probes::forcing("steady", 1.0).unwrap();
    let p = Problem::unmollified(o, grid, &*f, probes::initial("cos", 1.0).unwrap()).unwrap();
    let (path, _) = solve(&p, &PicardOptions::default()).unwrap();
    let c0 = p.c0();
    for j in 0..p.grid().len() {
        for (c, c_init) in path.c(j).iter().zip(c0) {
            close(*c, *c_init, 1e-3);
        }
    }
}

#[test]
fn constant_path_reconstructs_the_mode() {
    let basis = SpectralBasis::new(3, Arc::new(MovingBoundary::constant(1.0, 1.0).unwrap()));
    let grid = Arc::new(TimeGrid::uniform(1.0, 8).unwrap());
    let path = Arc::new(CoefficientPath::from_fn(grid, 0.5, 4, |k, _| if k == 2 { 1.0 } else { 0.0 }, |_, _| 0.0));
    let field = reconstruct_field(path, basis, None);
    close(field.sample(0.3, 0.5).unwrap(), phi_at(2, 0.3, 1.0), 1e-14);
    assert!(field.sample(1.3, 0.5).is_none());
}

#[test]
fn verification_on_the_zero_solution() {
    let p = problem(MovingBoundary::affine(1.0, 1.0, 1.0).unwrap(), "zero", "zero", 16);
    let path = Arc::new(CoefficientPath::zeros(p.grid().clone(), 0.5, 5));
    let field = reconstruct_field(path, p.ops().basis().clone(), None);
    let test = TestFunction::linear(1, 1.0);
    assert_eq!(weak_residual(&field, &half(), &ZeroField, None, &test).unwrap(), 0.0);
    let bad = TestFunction::new(1, "nonzero at T", |_| 1.0, |_| 0.0);
    assert!(weak_residual(&field, &half(), &ZeroField, None, &bad).is_err());
    assert!(energy_inequality_check(&field, &half(), &ZeroField, &|_| 0.0, 0.05).unwrap().passed());
    assert!(duality_bound_check(&field, &half()).unwrap().passed());
}
