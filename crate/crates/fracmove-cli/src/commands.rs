use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use fracmove::basis::phi_at;
use fracmove::quad::gauss_legendre;
use fracmove::solver::{fixed_point_residual, reconstruct_field, CoefficientPath, GalerkinField};
use fracmove::verify::{
    appendix_suite, duality_bound_check, energy_inequality_check, pointwise_energy_probe, q_function_suite,
    weak_residual, AppendixOptions, Check, TestFunction, VerificationReport,
};

use crate::config::RunConfig;
use crate::experiment::{Experiment, Solution};
use crate::output::{Cell, Table};
use crate::CliError;

/// Weak-form residual tolerance of the `weak` suite.
pub const WEAK_TOLERANCE: f64 = 1e-2;
/// Required residual reduction when `N` doubles.
pub const WEAK_REDUCTION: f64 = 1.5;

fn footer(table: &mut Table, cfg: &RunConfig, command: &str) {
    table.note("command", command);
    table.note("config_hash", cfg.hash());
    table.note("fracmove", fracmove::VERSION);
    table.note("fracmove_cli", env!("CARGO_PKG_VERSION"));
}

fn prepare(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}

/// What `solve` wrote, for callers that want to inspect it.
pub struct SolveSummary {
    pub experiment: Experiment,
    pub solution: Solution,
    pub residual: (f64, f64),
    pub oracle_error: Option<f64>,
}

/// `max_j max_k |c_k(t_j) - oracle_k(t_j)| / max_k |c_k(0)|`.
pub fn oracle_error(exp: &Experiment, path: &CoefficientPath) -> Result<f64, CliError> {
    let scale = exp.problem.c0().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut err = 0.0f64;
    for (j, &t) in exp.grid.nodes().iter().enumerate() {
        for (c, o) in path.c(j).iter().zip(exp.oracle_at(t)?) {
            err = err.max((c - o).abs());
        }
    }
    Ok(if scale > 0.0 { err / scale } else { err })
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<SolveSummary, CliError> {
    let exp = Experiment::build(cfg)?;
    let solution = exp.solve()?;
    prepare(out)?;
    let path = &solution.path;
    let k = exp.basis.size();
    let oracle = exp.has_oracle();

    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..k).map(|q| format!("c_{q}")));
    header.extend((0..k).map(|q| format!("w_{q}")));
    if oracle {
        header.extend((0..k).map(|q| format!("ml_{q}")));
    }
    let mut coeffs = Table::new(header);
    for (j, &t) in exp.grid.nodes().iter().enumerate() {
        let mut row: Vec<Cell> = vec![t.into()];
        row.extend(path.c(j).iter().map(|&v| Cell::from(v)));
        row.extend(path.w(j).iter().map(|&v| Cell::from(v)));
        if oracle {
            row.extend(exp.oracle_at(t)?.into_iter().map(Cell::from));
        }
        coeffs.push(row);
    }
    let oracle_error = if oracle { Some(oracle_error(&exp, path)?) } else { None };
    footer(&mut coeffs, cfg, "solve");
    if let Some(e) = oracle_error {
        coeffs.note("ml_max_rel_err", crate::output::real(e));
    }
    coeffs.write(&out.join("coefficients.csv"))?;

    let field = exp.field(path.clone());
    let s_top = exp.boundary.s(cfg.horizon);
    let mut grid = Table::new(["x", "t", "u", "inside"]);
    for it in 0..cfg.field_nt {
        let t = cfg.horizon * it as f64 / (cfg.field_nt - 1) as f64;
        for ix in 0..cfg.field_nx {
            let x = s_top * ix as f64 / (cfg.field_nx - 1) as f64;
            let u = field.sample(x, t);
            grid.push(vec![x.into(), t.into(), u.into(), u.is_some().into()]);
        }
    }
    footer(&mut grid, cfg, "solve");
    grid.write(&out.join("field.csv"))?;

    let residual = fixed_point_residual(&exp.problem, path).map_err(|e| CliError::Solver(e.to_string()))?;
    let mut report = Table::new(["metric", "value"]);
    let solver = match cfg.solver {
        crate::config::SolverChoice::Picard => "picard",
        crate::config::SolverChoice::L1 => "l1",
        crate::config::SolverChoice::Both => "both",
    };
    report.push(vec!["solver".into(), solver.into()]);
    report.push(vec!["alpha".into(), cfg.alpha.into()]);
    report.push(vec!["m".into(), cfg.modes.into()]);
    report.push(vec!["N".into(), cfg.n.into()]);
    report.push(vec!["grading".into(), exp.grid.grading().into()]);
    report.push(vec!["eps".into(), exp.ops.eps().into()]);
    report.push(vec!["residual".into(), residual.0.into()]);
    report.push(vec!["residual_derivative".into(), residual.1.into()]);
    report.push(vec!["xt_norm".into(), path.xt_norm().into()]);
    if let Some(r) = &solution.report {
        let max_rho = r.windows.iter().map(|w| w.rho).fold(0.0f64, f64::max);
        report.push(vec!["windows".into(), r.windows.len().into()]);
        report.push(vec!["rejected_windows".into(), r.rejected.len().into()]);
        report.push(vec!["min_window".into(), r.min_window.into()]);
        report.push(vec!["max_rho".into(), max_rho.into()]);
        report.push(vec!["floor_windows".into(), r.windows.iter().filter(|w| w.at_floor).count().into()]);
    }
    if let Some(d) = solution.cross_difference {
        report.push(vec!["picard_l1_rel_diff".into(), d.into()]);
    }
    if let Some(e) = oracle_error {
        report.push(vec!["ml_max_rel_err".into(), e.into()]);
    }
    footer(&mut report, cfg, "solve");
    report.write(&out.join("report.csv"))?;

    if let Some(r) = &solution.report {
        let mut windows = Table::new(["window", "start", "end", "iterations", "rho", "converged", "at_floor"]);
        for (i, w) in r.windows.iter().enumerate() {
            windows.push(vec![
                i.into(),
                w.start.into(),
                w.end.into(),
                w.iterations.into(),
                w.rho.into(),
                w.converged.into(),
                w.at_floor.into(),
            ]);
        }
        footer(&mut windows, cfg, "solve");
        windows.write(&out.join("windows.csv"))?;
        eprintln!("solve: {} windows in {:.3?}", r.windows.len(), r.wall_time);
    }
    Ok(SolveSummary { experiment: exp, solution, residual, oracle_error })
}

/// Galerkin field of the homogenised problem (no lift).
fn homogenised(exp: &Experiment, path: Arc<CoefficientPath>) -> GalerkinField {
    reconstruct_field(path, exp.basis.clone(), None)
}

fn verify_err(e: fracmove::Error) -> CliError {
    CliError::Solver(e.to_string())
}

/// Largest weak residual over test functions `φ_k ψ`, `k ∈ {0, m/2, m}`, `ψ`
/// linear and cosine.
pub fn max_weak_residual(exp: &Experiment, path: Arc<CoefficientPath>) -> Result<f64, CliError> {
    let field = homogenised(exp, path);
    let m = exp.config.modes;
    let mut modes = vec![0, m / 2, m];
    modes.dedup();
    let mut worst = 0.0f64;
    for k in modes {
        for test in [TestFunction::linear(k, exp.config.horizon), TestFunction::cosine(k, exp.config.horizon)] {
            worst = worst.max(weak_residual(&field, &exp.order, &*exp.mollified, None, &test).map_err(verify_err)?);
        }
    }
    Ok(worst)
}

pub fn energy_suite(exp: &Experiment, path: Arc<CoefficientPath>) -> Result<VerificationReport, CliError> {
    let field = homogenised(exp, path);
    let v0 = exp.v0.clone();
    let mut r = energy_inequality_check(&field, &exp.order, &*exp.mollified, &move |x| v0(x), exp.ops.eps())
        .map_err(verify_err)?;
    let t = exp.config.horizon;
    r.extend(pointwise_energy_probe(&exp.order, exp.boundary.clone(), &[0.25 * t, 0.5 * t, t]).map_err(verify_err)?);
    r.extend(duality_bound_check(&field, &exp.order).map_err(verify_err)?);
    Ok(r)
}

pub fn weak_suite(exp: &Experiment, path: Arc<CoefficientPath>) -> Result<VerificationReport, CliError> {
    let cfg = &exp.config;
    let fine = max_weak_residual(exp, path)?;
    let params = format!("N={};m={};alpha={}", cfg.n, cfg.modes, cfg.alpha);
    let mut r = VerificationReport::new();
    r.push(Check::below("weak_residual_max", fine, WEAK_TOLERANCE, params.clone()));
    if cfg.n / 2 >= 8 {
        let coarse_exp = Experiment::build(&cfg.with("N", cfg.n / 2)?)?;
        let coarse = max_weak_residual(&coarse_exp, coarse_exp.solve()?.path)?;
        let ratio = if coarse > 0.0 { fine / coarse } else { 0.0 };
        r.push(
            Check::below("weak_residual_refinement", ratio, 1.0 / WEAK_REDUCTION, format!("{params};coarse_N={}", cfg.n / 2))
                .with_trend(vec![coarse, fine]),
        );
    }
    Ok(r)
}

/// Runs `suite` (`appendix | q | energy | weak | all`).
pub fn run_suites(exp: &Experiment, suite: &str) -> Result<Vec<(&'static str, VerificationReport)>, CliError> {
    let all = suite == "all";
    let opts = AppendixOptions { seed: exp.config.seed, ..AppendixOptions::default() };
    let mut out = Vec::new();
    if all || suite == "appendix" {
        out.push(("appendix", appendix_suite(&exp.order, &opts).map_err(verify_err)?));
    }
    if all || suite == "q" {
        out.push(("q", q_function_suite(&exp.order, &exp.boundary, &opts).map_err(verify_err)?));
    }
    if all || suite == "energy" || suite == "weak" {
        let path = exp.solve()?.path;
        if all || suite == "energy" {
            out.push(("energy", energy_suite(exp, path.clone())?));
        }
        if all || suite == "weak" {
            out.push(("weak", weak_suite(exp, path)?));
        }
    }
    Ok(out)
}

pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<Vec<(&'static str, VerificationReport)>, CliError> {
    let exp = Experiment::build(cfg)?;
    let reports = run_suites(&exp, &cfg.suite)?;
    prepare(out)?;
    let mut table = Table::new(["suite", "check", "measured", "target", "pass", "asserted", "trend", "params"]);
    let mut failed = Vec::new();
    for (suite, r) in &reports {
        for c in &r.checks {
            let trend: Vec<String> = c.trend.iter().map(|v| crate::output::real(*v)).collect();
            table.push(vec![
                (*suite).into(),
                c.name.clone().into(),
                c.measured.into(),
                c.target.into(),
                c.pass.into(),
                c.asserted.into(),
                trend.join(";").into(),
                c.params.clone().into(),
            ]);
        }
        failed.extend(r.failures().map(|c| format!("{suite}/{}", c.name)));
        eprintln!("[{suite}]\n{r}");
    }
    footer(&mut table, cfg, "verify");
    table.note("suite", &cfg.suite);
    table.write(&out.join("verify.csv"))?;
    if failed.is_empty() {
        Ok(reports)
    } else {
        Err(CliError::Verify(format!("{} check(s) failed: {}", failed.len(), failed.join(", "))))
    }
}

/// Modes of the series oracle for convergence runs.
const ORACLE_MODES: usize = 256;

/// `c_k(0)` of the initial datum for `k < count`, cylindrical domain `[0,b]`.
fn series_coefficients(v0: &dyn Fn(f64) -> f64, b: f64, count: usize) -> Vec<f64> {
    let rule = gauss_legendre(4 * count + 64);
    let pts: Vec<(f64, f64)> = rule.mapped(0.0, b).map(|(x, w)| (x, w * v0(x))).collect();
    (0..count).map(|k| pts.iter().map(|&(x, wv)| wv * phi_at(k, x, b)).sum()).collect()
}

/// Nodes compared in a convergence run: the first eight, then about 64 evenly
/// spread, and the last.
fn sampled_nodes(n: usize) -> Vec<usize> {
    let stride = (n / 64).max(1);
    let mut idx: Vec<usize> = (0..n.min(8)).chain((0..n).step_by(stride)).chain([n - 1]).collect();
    idx.sort_unstable();
    idx.dedup();
    idx
}

pub struct LadderRow {
    pub n: usize,
    pub m: usize,
    pub error: f64,
    pub order: Option<f64>,
}

fn solve_entry(cfg: &RunConfig, n: usize, m: usize) -> Result<(Experiment, Arc<CoefficientPath>), CliError> {
    let exp = Experiment::build(&cfg.with("N", n)?.with("m", m)?)?;
    let path = exp.solve()?.path;
    Ok((exp, path))
}

/// Relative `L²(0,s)` error against the Mittag-Leffler series (cylindrical,
/// unforced) or against the last ladder entry.
pub fn convergence_rows(cfg: &RunConfig) -> Result<(Vec<LadderRow>, &'static str), CliError> {
    if cfg.ladder.len() < 2 {
        return Err(CliError::Config(format!("ladder: needs at least two N:m entries, got {}", cfg.ladder.len())));
    }
    let solved: Vec<Result<(Experiment, Arc<CoefficientPath>), CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg.ladder.iter().map(|&(n, m)| s.spawn(move || solve_entry(cfg, n, m))).collect();
        handles.into_iter().map(|h| h.join().expect("ladder worker panicked")).collect()
    });
    let solved = solved.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut errors = Vec::with_capacity(solved.len());
    let oracle = solved[0].0.has_oracle();
    if oracle {
        let exp0 = &solved[0].0;
        let b = exp0.boundary.b();
        let kmax = cfg.ladder.iter().map(|p| p.1 + 1).max().unwrap_or(1).max(ORACLE_MODES);
        let c0 = series_coefficients(&*exp0.v0, b, kmax);
        let norm0 = c0.iter().map(|c| c * c).sum::<f64>().sqrt();
        let a = cfg.alpha;
        for (exp, path) in &solved {
            let mut worst = 0.0f64;
            for j in sampled_nodes(exp.grid.len()) {
                let t = exp.grid.nodes()[j];
                let c = path.c(j);
                let mut e2 = 0.0;
                for (k, &ck0) in c0.iter().enumerate() {
                    let lam = (k as f64 + 0.5) * PI / b;
                    let exact = if ck0 == 0.0 {
                        0.0
                    } else {
                        ck0 * exp.order.mittag_leffler(-lam * lam * t.powf(a)).map_err(verify_err)?
                    };
                    let d = c.get(k).copied().unwrap_or(0.0) - exact;
                    e2 += d * d;
                }
                worst = worst.max(e2.sqrt());
            }
            errors.push(if norm0 > 0.0 { worst / norm0 } else { worst });
        }
    } else {
        let (rexp, rpath) = solved.last().expect("ladder has entries");
        let scale = (0..rexp.grid.len())
            .map(|j| rpath.c(j).iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0f64, f64::max);
        for (exp, path) in &solved {
            let mut worst = 0.0f64;
            for j in sampled_nodes(exp.grid.len()) {
                let t = exp.grid.nodes()[j];
                let reference = rpath.value_at(t);
                let c = path.c(j);
                let n = c.len().max(reference.len());
                let e2: f64 = (0..n)
                    .map(|k| {
                        let d = c.get(k).copied().unwrap_or(0.0) - reference.get(k).copied().unwrap_or(0.0);
                        d * d
                    })
                    .sum();
                worst = worst.max(e2.sqrt());
            }
            errors.push(if scale > 0.0 { worst / scale } else { worst });
        }
    }

    let mut rows = Vec::with_capacity(errors.len());
    for (i, (&(n, m), &error)) in cfg.ladder.iter().zip(&errors).enumerate() {
        let order = (i > 0).then(|| {
            let (pn, pm) = cfg.ladder[i - 1];
            let ratio = (errors[i - 1] / error).ln();
            if n != pn {
                ratio / (n as f64 / pn as f64).ln()
            } else {
                ratio / ((m + 1) as f64 / (pm + 1) as f64).ln()
            }
        });
        rows.push(LadderRow { n, m, error, order: order.filter(|o| o.is_finite()) });
    }
    Ok((rows, if oracle { "mittag_leffler_series" } else { "finest_entry" }))
}

pub fn cmd_convergence(cfg: &RunConfig, out: &Path) -> Result<Vec<LadderRow>, CliError> {
    let (rows, reference) = convergence_rows(cfg)?;
    prepare(out)?;
    let mut table = Table::new(["N", "m", "error", "observed_order"]);
    for r in &rows {
        table.push(vec![r.n.into(), r.m.into(), r.error.into(), r.order.into()]);
    }
    footer(&mut table, cfg, "convergence");
    table.note("reference", reference);
    table.write(&out.join("convergence.csv"))?;
    Ok(rows)
}
