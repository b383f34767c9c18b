//! From a [`RunConfig`] to a solvable problem.

use std::path::Path;
use std::sync::Arc;

use fracmove::assembly::{lift_boundary, probes, GalerkinOperators, GridField, LiftedProblem};
use fracmove::basis::SpectralBasis;
use fracmove::boundary::MovingBoundary;
use fracmove::field::{Profile, SharedField};
use fracmove::fraccalc::{FractionalOrder, SampledPath, TimeGrid};
use fracmove::solver::{l1_direct_solve, reconstruct_field, solve, CoefficientPath, GalerkinField, PicardOptions, Problem, SolveReport};

use crate::config::{BoundarySpec, DataSpec, RunConfig};
use crate::CliError;

pub struct Experiment {
    pub config: RunConfig,
    pub order: FractionalOrder,
    pub boundary: Arc<MovingBoundary>,
    pub grid: Arc<TimeGrid>,
    pub basis: SpectralBasis,
    pub ops: Arc<GalerkinOperators>,
    pub problem: Problem,
    pub lift: Option<LiftedProblem>,
    /// Forcing of the homogenised problem, before mollification.
    pub forcing: SharedField,
    /// `g^ε`, as seen by the solver.
    pub mollified: SharedField,
    /// Initial datum of the homogenised problem.
    pub v0: Profile,
}

pub struct Solution {
    pub path: Arc<CoefficientPath>,
    pub report: Option<SolveReport>,
    /// Relative sup difference between the Picard and L1 paths (`solver = both`).
    pub cross_difference: Option<f64>,
}

fn read_columns(path: &Path, field: &str, width: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let bad = |msg: String| CliError::Config(format!("{field}: {}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != width {
            return Err(bad(format!("row {} has {} columns, expected {width}", i + 2, rec.len())));
        }
        let row: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(format!("row {} is not numeric", i + 2)))?;
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(bad("needs at least two data rows".into()));
    }
    Ok(rows)
}

/// Piecewise-linear interpolant of sorted samples, constant beyond the ends.
fn linear(xs: Vec<f64>, ys: Vec<f64>) -> impl Fn(f64) -> f64 + Send + Sync {
    move |x| {
        let n = xs.len();
        if x <= xs[0] {
            return ys[0];
        }
        if x >= xs[n - 1] {
            return ys[n - 1];
        }
        let i = xs.partition_point(|a| *a <= x) - 1;
        let r = (x - xs[i]) / (xs[i + 1] - xs[i]);
        ys[i] + r * (ys[i + 1] - ys[i])
    }
}

fn sorted_pairs(rows: Vec<Vec<f64>>, path: &Path, field: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(format!("{field}: {}: first column must be strictly increasing", path.display())));
    }
    Ok((xs, ys))
}

fn config_err(field: &str) -> impl Fn(fracmove::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{field}: {e}"))
}

pub fn build_boundary(cfg: &RunConfig) -> Result<MovingBoundary, CliError> {
    let t = cfg.horizon;
    match &cfg.boundary {
        BoundarySpec::Constant { b } => MovingBoundary::constant(*b, t),
        BoundarySpec::Affine { b, v } => MovingBoundary::affine(*b, *v, t),
        BoundarySpec::Power { b, c, beta } => MovingBoundary::power(*b, *c, *beta, t),
        BoundarySpec::Table { path } => {
            let (ts, ss) = sorted_pairs(read_columns(path, "table", 2)?, path, "table")?;
            MovingBoundary::table(ts, ss, t)
        }
    }
    .map_err(config_err("boundary"))
}

impl Experiment {
    pub fn build(cfg: &RunConfig) -> Result<Self, CliError> {
        let order = FractionalOrder::new(cfg.alpha).map_err(config_err("alpha"))?;
        let boundary = Arc::new(build_boundary(cfg)?);
        let report = boundary.validate(&order);
        if !report.pass() {
            let why: Vec<String> = report.failures().map(|c| format!("{} ({})", c.name, c.detail)).collect();
            return Err(CliError::Config(format!("boundary: {}", why.join("; "))));
        }
        let grid = Arc::new(
            match cfg.grading {
                Some(r) => TimeGrid::graded(cfg.horizon, cfg.n, r),
                None => TimeGrid::with_default_grading(cfg.horizon, cfg.n, &order),
            }
            .map_err(config_err("N"))?,
        );
        let basis = SpectralBasis::new(cfg.modes, boundary.clone());
        let ops = Arc::new(
            GalerkinOperators::new(basis.clone(), order.clone(), cfg.eps_or_default()).map_err(config_err("eps"))?,
        );
        let b = boundary.b();

        let f: SharedField = match &cfg.f {
            DataSpec::Named(n) => probes::forcing(n, b).map_err(config_err("f"))?,
            DataSpec::Csv(p) => {
                let rows: Vec<(f64, f64, f64)> = read_columns(p, "f", 3)?.into_iter().map(|r| (r[0], r[1], r[2])).collect();
                Arc::new(GridField::from_rows(&rows).map_err(config_err("f"))?)
            }
        };
        let u0: Profile = match &cfg.u0 {
            DataSpec::Named(n) => probes::initial(n, b).map_err(config_err("u0"))?,
            DataSpec::Csv(p) => {
                let (xs, ys) = sorted_pairs(read_columns(p, "u0", 2)?, p, "u0")?;
                Arc::new(linear(xs, ys))
            }
        };
        let lift = if cfg.h.is_named("zero") {
            None
        } else {
            let h: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match &cfg.h {
                DataSpec::Named(n) => probes::flux(n).map_err(config_err("h"))?,
                DataSpec::Csv(p) => {
                    let (ts, hs) = sorted_pairs(read_columns(p, "h", 2)?, p, "h")?;
                    Arc::new(linear(ts, hs))
                }
            };
            let samples = SampledPath::from_fn(grid.clone(), |t| h(t));
            Some(lift_boundary(f.clone(), &samples, u0.clone(), &order, b).map_err(config_err("h"))?)
        };
        let (forcing, v0) = match &lift {
            Some(l) => (l.g(), l.v0()),
            None => (f, u0),
        };
        let mollified: SharedField = Arc::new(ops.mollify(forcing.clone()).map_err(config_err("eps"))?);
        let problem = Problem::new(ops.clone(), grid.clone(), forcing.clone(), v0.clone()).map_err(config_err("data"))?;
        Ok(Experiment {
            config: cfg.clone(),
            order,
            boundary,
            grid,
            basis,
            ops,
            problem,
            lift,
            forcing,
            mollified,
            v0,
        })
    }

    pub fn picard_options(&self) -> PicardOptions {
        PicardOptions {
            tol: self.config.tol,
            max_iter: self.config.max_iter,
            initial_window: self.config.window,
            ..PicardOptions::default()
        }
    }

    /// Cylindrical, unforced, unlifted: coefficients are `c_k(0) E_α(-λ_k² t^α)`.
    pub fn has_oracle(&self) -> bool {
        self.boundary.is_constant() && self.forcing.is_zero() && self.lift.is_none()
    }

    pub fn solve(&self) -> Result<Solution, CliError> {
        let solver = |e: fracmove::Error| CliError::Solver(e.to_string());
        use crate::config::SolverChoice::*;
        match self.config.solver {
            L1 => Ok(Solution {
                path: Arc::new(l1_direct_solve(&self.problem).map_err(solver)?),
                report: None,
                cross_difference: None,
            }),
            choice => {
                let (path, report) = solve(&self.problem, &self.picard_options()).map_err(solver)?;
                let cross_difference = if choice == Both {
                    let l1 = l1_direct_solve(&self.problem).map_err(solver)?;
                    Some(relative_sup_difference(&path, &l1))
                } else {
                    None
                };
                Ok(Solution { path: Arc::new(path), report: Some(report), cross_difference })
            }
        }
    }

    pub fn field(&self, path: Arc<CoefficientPath>) -> GalerkinField {
        reconstruct_field(path, self.basis.clone(), self.lift.clone())
    }

    /// `c_k(0) E_α(-λ_k² t^α)` for modes `0..=m`.
    pub fn oracle_at(&self, t: f64) -> Result<Vec<f64>, CliError> {
        let c0 = self.problem.c0();
        let lam2 = self.basis.lambda_squared(t);
        c0.iter()
            .zip(lam2)
            .map(|(c, l)| {
                self.order
                    .mittag_leffler(-l * t.powf(self.order.alpha()))
                    .map(|e| c * e)
                    .map_err(|e| CliError::Solver(e.to_string()))
            })
            .collect()
    }
}

/// `max |a - b| / max |a|` over all nodal values.
pub fn relative_sup_difference(a: &CoefficientPath, b: &CoefficientPath) -> f64 {
    let scale = a.values_flat().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d = a.values_flat().iter().zip(b.values_flat()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}
