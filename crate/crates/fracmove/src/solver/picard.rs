use std::time::Duration;

use crate::error::{domain, Error, Result};

use super::{derive, fixed_point_residual, CoefficientPath, Problem};

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    /// Stop when the X-norm change of successive iterates drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// First window length as a fraction of `T`.
    pub initial_window: f64,
    /// Halve the window when the observed ratio reaches this value.
    pub max_ratio: f64,
    /// Smallest window, in grid cells.
    pub min_cells: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions { tol: 1e-10, max_iter: 50, initial_window: 0.125, max_ratio: 0.5, min_cells: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    pub start: f64,
    pub end: f64,
    pub start_index: usize,
    pub end_index: usize,
    pub iterations: usize,
    /// Largest ratio of successive iterate differences.
    pub rho: f64,
    pub converged: bool,
    /// Window was accepted at the minimum size despite `rho >= max_ratio`.
    pub at_floor: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub windows: Vec<WindowReport>,
    /// Windows discarded after a halving.
    pub rejected: Vec<WindowReport>,
    /// `max_j |c_j - (Pc)_j|`
    pub residual: f64,
    /// `max_j |w_j - t_j^{1-α} (Pc)'_j|`
    pub residual_derivative: f64,
    pub min_window: f64,
    pub wall_time: Duration,
}

/// Wall clock; `std::time::Instant` panics on wasm32, where the time is reported as 0.
struct Clock(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Clock {
    fn start() -> Self {
        Clock(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed();
        #[cfg(target_arch = "wasm32")]
        Duration::ZERO
    }
}

/// Node-major iterate plus derived quantities for committed nodes.
struct State {
    c: Vec<f64>,
    w: Vec<f64>,
    f: Vec<f64>,
    h: Vec<f64>,
    psi: Vec<f64>,
    p2: Vec<f64>,
}

impl State {
    fn start(problem: &Problem) -> State {
        let path = CoefficientPath::zeros(problem.grid().clone(), problem.ops().order().alpha(), problem.size());
        let mut c = path.values_flat().to_vec();
        let mut w = path.derivatives_flat().to_vec();
        let k = problem.size();
        c[..k].copy_from_slice(problem.c0());
        let d = derive(problem, &c, &w, 0);
        let ga = problem.ops().order().gamma_alpha();
        for q in 0..k {
            w[q] = d.f[q] / ga - d.psi[q];
        }
        State { c, w, f: d.f, h: d.h, psi: d.psi, p2: d.p2 }
    }

    fn from_path(problem: &Problem, path: &CoefficientPath, upto: usize) -> State {
        let c = path.values_flat().to_vec();
        let w = path.derivatives_flat().to_vec();
        let d = derive(problem, &c, &w, upto);
        State { c, w, f: d.f, h: d.h, psi: d.psi, p2: d.p2 }
    }
}

/// Iterates on the window `(s, e]` with nodes `0..=s` fixed. Returns the
/// report; commits into `state` when `commit` is set and the iteration
/// converged.
fn iterate_window(problem: &Problem, state: &mut State, s: usize, e: usize, opts: &PicardOptions, commit: bool) -> WindowReport {
    let k = problem.size();
    let order = problem.ops().order();
    let (ga, g1, a) = (order.gamma_alpha(), order.gamma_one_minus_alpha(), order.alpha());
    let nodes = problem.grid().nodes();
    let tables = problem.tables();
    let mw = &tables.mw;
    let span = e - s;

    // fixed history
    let mut hhist = vec![0.0; span * k];
    let mut ihist = vec![0.0; span * k];
    let mut khist = vec![0.0; span * k];
    for j in s + 1..=e {
        let r = (j - s - 1) * k;
        problem.add_history(j, 0, s, &state.c, &state.w, &mut hhist[r..r + k]);
        let row = tables.iw.row(j);
        for (i, wts) in row.iter().enumerate().take(s) {
            for q in 0..k {
                let (fi, fi1) = (state.f[i * k + q], state.f[(i + 1) * k + q]);
                ihist[r + q] += wts[0] * fi + wts[1] * fi1;
                khist[r + q] += (wts[0] + wts[1]) * (fi1 - fi) / (nodes[i + 1] - nodes[i]);
            }
        }
    }

    // iterate over nodes s..=e (index 0 is the fixed node s)
    let mut c: Vec<f64> = Vec::with_capacity((span + 1) * k);
    let mut w: Vec<f64> = Vec::with_capacity((span + 1) * k);
    for _ in 0..=span {
        c.extend_from_slice(&state.c[s * k..(s + 1) * k]);
        w.extend_from_slice(&state.w[s * k..(s + 1) * k]);
    }
    let mut f = vec![0.0; (span + 1) * k];
    f[..k].copy_from_slice(&state.f[s * k..(s + 1) * k]);
    let mut h = vec![0.0; (span + 1) * k];
    let mut psi = vec![0.0; (span + 1) * k];
    let mut p2 = vec![0.0; (span + 1) * k];
    psi[..k].copy_from_slice(&state.psi[s * k..(s + 1) * k]);
    p2[..k].copy_from_slice(&state.p2[s * k..(s + 1) * k]);

    // scratch full-length views for add_history
    let mut cfull = state.c.clone();
    let mut wfull = state.w.clone();

    let mut diffs: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut tmp = vec![0.0; k];
    for it in 1..=opts.max_iter {
        iterations = it;
        cfull[s * k..(e + 1) * k].copy_from_slice(&c);
        wfull[s * k..(e + 1) * k].copy_from_slice(&w);
        // lagged history and drift
        for j in s + 1..=e {
            let r = (j - s) * k;
            h[r..r + k].copy_from_slice(&hhist[(j - s - 1) * k..(j - s) * k]);
            problem.add_history(j, s, j, &cfull, &wfull, &mut h[r..r + k]);
            problem.drift(j, &c[r..r + k], &mut tmp);
            psi[r..r + k].copy_from_slice(&tmp);
            let m = mw[j - 1];
            for q in 0..k {
                p2[r + q] = p2[r - k + q] + m[0] * psi[r - k + q] + m[1] * psi[r + q];
            }
        }
        // march with the stiffness term implicit
        let mut dc = 0.0f64;
        let mut dw = 0.0f64;
        for j in s + 1..=e {
            let r = (j - s) * k;
            let row = tables.iw.row(j);
            let (gv, l2) = (problem.forcing_at(j), problem.lam2_at(j));
            let last = row[j - 1];
            let tw = nodes[j].powf(1.0 - a) / ga;
            for q in 0..k {
                let mut acc = ihist[(j - s - 1) * k + q];
                for i in s..j - 1 {
                    let li = (i - s) * k + q;
                    acc += row[i][0] * f[li] + row[i][1] * f[li + k];
                }
                acc += last[0] * f[r - k + q];
                let hq = h[r + q] / g1;
                let num = problem.c0()[q] + (acc + last[1] * (gv[q] - hq)) / ga - p2[r + q];
                let cnew = num / (1.0 + last[1] * l2[q] / ga);
                dc = dc.max((cnew - c[r + q]).abs());
                c[r + q] = cnew;
                f[r + q] = gv[q] - l2[q] * cnew - hq;
            }
            problem.drift(j, &c[r..r + k], &mut tmp);
            for q in 0..k {
                let mut kacc = khist[(j - s - 1) * k + q];
                for i in s..j {
                    let li = (i - s) * k + q;
                    kacc += (row[i][0] + row[i][1]) * (f[li + k] - f[li]) / (nodes[i + 1] - nodes[i]);
                }
                let wnew = tw * kacc + state.f[q] / ga - tmp[q];
                dw = dw.max((wnew - w[r + q]).abs());
                w[r + q] = wnew;
            }
        }
        let d = dc + dw;
        diffs.push(d);
        let scale = 1.0 + c.iter().chain(&w).fold(0.0f64, |m, v| m.max(v.abs()));
        if d < opts.tol {
            converged = true;
            break;
        }
        // rounding floor: further iterations cannot improve
        if it >= 3 && d < 1e-9 * scale && d >= diffs[it - 2] * 0.9 {
            converged = true;
            break;
        }
    }
    let scale = 1.0 + c.iter().chain(&w).fold(0.0f64, |m, v| m.max(v.abs()));
    let rho = diffs
        .windows(2)
        .filter(|p| p[0] > 1e-12 * scale && p[1] > 1e-12 * scale)
        .map(|p| p[1] / p[0])
        .fold(0.0f64, f64::max);
    if converged && commit {
        state.c[s * k..(e + 1) * k].copy_from_slice(&c);
        state.w[s * k..(e + 1) * k].copy_from_slice(&w);
        state.f[s * k..(e + 1) * k].copy_from_slice(&f);
        state.h[(s + 1) * k..(e + 1) * k].copy_from_slice(&h[k..]);
        state.psi[s * k..(e + 1) * k].copy_from_slice(&psi);
        state.p2[s * k..(e + 1) * k].copy_from_slice(&p2);
    }
    WindowReport {
        start: nodes[s],
        end: nodes[e],
        start_index: s,
        end_index: e,
        iterations,
        rho,
        converged,
        at_floor: false,
    }
}

fn window_end(nodes: &[f64], s: usize, len: f64, min_cells: usize) -> usize {
    let n = nodes.len() - 1;
    let target = nodes[s] + len;
    let e = nodes.partition_point(|t| *t < target * (1.0 - 1e-12)).max(s + min_cells);
    e.min(n)
}

/// Runs one window with halving; returns the accepted report and the
/// reports of discarded attempts.
fn adaptive_window(
    problem: &Problem,
    state: &mut State,
    s: usize,
    mut e: usize,
    opts: &PicardOptions,
) -> Result<(WindowReport, Vec<WindowReport>)> {
    let nodes = problem.grid().nodes();
    let mut rejected = Vec::new();
    loop {
        let at_floor = e - s <= opts.min_cells || e - s <= 1;
        let mut rep = iterate_window(problem, state, s, e, opts, false);
        let ok = rep.converged && rep.rho < opts.max_ratio;
        if ok || (at_floor && rep.converged) {
            rep = iterate_window(problem, state, s, e, opts, true);
            rep.at_floor = !ok;
            return Ok((rep, rejected));
        }
        if at_floor {
            return Err(Error::Solver(format!(
                "no contraction on the minimal window [{}, {}] (rho = {:.3}, {} iterations)",
                nodes[s], nodes[e], rep.rho, rep.iterations
            )));
        }
        rejected.push(rep);
        let half = 0.5 * (nodes[e] - nodes[s]);
        e = window_end(nodes, s, half, opts.min_cells).min(e - 1);
    }
}

/// Extends a path solved on `[0, t_start]` over the window ending at node
/// `end` (shrunk by halving when the iteration does not contract).
pub fn picard_window(
    problem: &Problem,
    path: &CoefficientPath,
    start: usize,
    end: usize,
    opts: &PicardOptions,
) -> Result<(CoefficientPath, WindowReport)> {
    let n = problem.grid().steps();
    if !(start < end && end <= n) {
        return domain(format!("window ({start}, {end}] is not inside the grid"));
    }
    if path.grid().as_ref() != problem.grid().as_ref() {
        return domain("path grid does not match the problem");
    }
    let mut state = State::from_path(problem, path, start);
    let (rep, _) = adaptive_window(problem, &mut state, start, end, opts)?;
    let out = CoefficientPath::new(problem.grid().clone(), path.alpha(), problem.c0().to_vec(), state.c, state.w)?;
    Ok((out, rep))
}

/// Iterates on a fixed window `(start, end]` of the solution fixed at
/// `[0, t_start]` without halving; used to measure contraction.
pub fn run_fixed_window(problem: &Problem, path: &CoefficientPath, start: usize, end: usize, opts: &PicardOptions) -> Result<WindowReport> {
    let n = problem.grid().steps();
    if !(start < end && end <= n) {
        return domain(format!("window ({start}, {end}] is not inside the grid"));
    }
    let mut state = if start == 0 { State::start(problem) } else { State::from_path(problem, path, start) };
    Ok(iterate_window(problem, &mut state, start, end, opts, false))
}

/// Solves `c = Pc` on the whole grid by windowed semi-implicit Picard
/// iteration.
pub fn solve(problem: &Problem, opts: &PicardOptions) -> Result<(CoefficientPath, SolveReport)> {
    let clock = Clock::start();
    let nodes = problem.grid().nodes();
    let n = problem.grid().steps();
    let big_t = problem.grid().horizon();
    let mut state = State::start(problem);
    let mut windows = Vec::new();
    let mut rejected = Vec::new();
    let mut len = opts.initial_window * big_t;
    let mut streak = 0;
    let mut s = 0;
    while s < n {
        let e = window_end(nodes, s, len, opts.min_cells);
        let (rep, rej) = adaptive_window(problem, &mut state, s, e, opts)?;
        let accepted_len = rep.end - rep.start;
        if !rej.is_empty() {
            len = accepted_len;
            streak = 0;
        } else {
            streak += 1;
            if streak >= 2 {
                len *= 2.0;
                streak = 0;
            }
        }
        rejected.extend(rej);
        s = rep.end_index;
        windows.push(rep);
    }
    let path = CoefficientPath::new(
        problem.grid().clone(),
        problem.ops().order().alpha(),
        problem.c0().to_vec(),
        state.c,
        state.w,
    )?;
    let (residual, residual_derivative) = fixed_point_residual(problem, &path)?;
    let min_window = windows.iter().map(|w| w.end - w.start).fold(f64::INFINITY, f64::min);
    Ok((
        path,
        SolveReport { windows, rejected, residual, residual_derivative, min_window, wall_time: clock.elapsed() },
    ))
}
