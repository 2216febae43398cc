//! Scaled gradient projection solver.
//!
//! One iteration projects a diagonally scaled gradient step onto the feasible
//! box, then backtracks along the feasible direction under a nonmonotone
//! Armijo condition:
//!
//! ```text
//! z = P(x - alpha_k D_k grad Psi(x))
//! d = z - x
//! accept x + lambda d once Psi(x + lambda d) <= Psi_max + beta lambda grad'd
//! ```
//!
//! where `Psi_max` is the maximum objective value over the last `mu`
//! iterates (`mu = 1` recovers the monotone Armijo rule). The steplength
//! alternates between the two Barzilai-Borwein rules through an adaptive
//! ratio threshold; the scaling is the entrywise clamp of the iterate into
//! `[1/sigma, sigma]` (identity on the sinogram block of the explicit
//! formulation).

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::objective::{Formulation, ObjectiveSpec};
use crate::phantom::Image;
use crate::projector::Sinogram;

/// Line-search and steplength parameters.
#[derive(Debug, Clone)]
pub struct SgpParams {
    /// Armijo sufficient-decrease parameter, in (0, 1).
    pub beta: f64,
    /// Backtracking shrink factor, in (0, 1).
    pub gamma_ls: f64,
    /// Nonmonotone memory: objective reference is the max over the last `mu`
    /// iterates. `mu = 1` gives the monotone Armijo rule.
    pub mu: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Steplength used at the first iteration, before secant data exists.
    pub alpha0: f64,
    /// Scaling clamp threshold (> 1): diagonal entries live in [1/sigma, sigma].
    pub sigma: f64,
    pub max_iter: usize,
    /// Relative stationarity tolerance on ||z - x||.
    pub stop_tol: f64,
    /// Initial Barzilai-Borwein switching threshold, in (0, 1).
    pub bb_switch_threshold: f64,
    /// How many recent BB2 values the alternation rule minimizes over.
    pub bb_memory: usize,
}

impl Default for SgpParams {
    fn default() -> Self {
        SgpParams {
            beta: 1e-4,
            gamma_ls: 0.4,
            mu: 10,
            alpha_min: 1e-10,
            alpha_max: 1e5,
            alpha0: 1.3,
            sigma: 1e6,
            max_iter: 7000,
            stop_tol: 1e-7,
            bb_switch_threshold: 0.15,
            bb_memory: 3,
        }
    }
}

impl SgpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid("beta must lie in (0, 1)"));
        }
        if !(self.gamma_ls > 0.0 && self.gamma_ls < 1.0) {
            return Err(Error::invalid("gamma_ls must lie in (0, 1)"));
        }
        if self.mu < 1 {
            return Err(Error::invalid("mu must be a positive integer"));
        }
        if !(0.0 < self.alpha_min && self.alpha_min < self.alpha_max) {
            return Err(Error::invalid("require 0 < alpha_min < alpha_max"));
        }
        if !(self.alpha0 > 0.0) {
            return Err(Error::invalid("alpha0 must be positive"));
        }
        if !(self.sigma > 1.0) {
            return Err(Error::invalid("sigma must exceed 1"));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::invalid("stop_tol must be nonnegative"));
        }
        if !(self.bb_switch_threshold > 0.0 && self.bb_switch_threshold < 1.0) {
            return Err(Error::invalid("bb_switch_threshold must lie in (0, 1)"));
        }
        if self.bb_memory < 1 {
            return Err(Error::invalid("bb_memory must be a positive integer"));
        }
        Ok(())
    }
}

/// Why the solve loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The projected step returned the iterate exactly (true fixed point).
    Stationary,
    /// ||z - x|| fell below the relative tolerance.
    Tolerance,
    MaxIter,
}

/// Per-iteration diagnostics; one record per accepted step.
#[derive(Debug, Clone)]
pub struct IterRecord {
    pub iter: usize,
    /// Objective value at the accepted iterate.
    pub psi: f64,
    /// Steplength alpha_k used for this step.
    pub alpha: f64,
    /// Accepted line-search parameter lambda_k.
    pub lambda_ls: f64,
    pub backtracks: usize,
    pub grad_norm: f64,
    pub dir_norm: f64,
    /// grad Psi(x_k)' d_k (negative for a descent direction).
    pub grad_dot_dir: f64,
    pub scaling_min: f64,
    pub scaling_max: f64,
    /// Max bound violation of the accepted iterate (0 exactly when feasible).
    pub feasibility_violation: f64,
    /// ROI relative error against the ground truth, when a monitor was given.
    pub roi_rel_err: Option<f64>,
}

/// Outcome of a generic minimization run (flat variable vector).
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub initial_psi: f64,
    pub log: Vec<IterRecord>,
    pub reason: StopReason,
}

/// Outcome of a reconstruction solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub f_hat: Image,
    /// Reconstructed full sinogram (explicit formulation only).
    pub y_hat: Option<Sinogram>,
    pub iterations: usize,
    pub initial_psi: f64,
    pub log: Vec<IterRecord>,
    pub reason: StopReason,
}

/// Euclidean projection onto the box [lower, upper] (upper optional),
/// componentwise. For a diagonal scaling matrix the D-norm projection onto a
/// box coincides with this clamp.
pub fn project_box(x: &mut [f64], lower: f64, upper: Option<f64>) -> Result<()> {
    if let Some(u) = upper {
        if u < lower {
            return Err(Error::invalid(format!("inconsistent bounds: [{lower}, {u}]")));
        }
    }
    match upper {
        Some(u) => {
            for v in x.iter_mut() {
                *v = v.clamp(lower, u);
            }
        }
        None => {
            for v in x.iter_mut() {
                *v = v.max(lower);
            }
        }
    }
    Ok(())
}

/// Diagonal scaling from the current iterate: d_i = min(sigma, max(1/sigma, f_i)).
pub fn update_scaling(f: &[f64], sigma: f64) -> Vec<f64> {
    let lo = sigma.recip();
    f.iter().map(|&v| v.clamp(lo, sigma)).collect()
}

/// The two Barzilai-Borwein steplengths for secant pair (s, zeta) under the
/// diagonal scaling `d`:
///
/// ```text
/// alpha_BB1 = (s' D^-2 s) / (s' D^-1 zeta)
/// alpha_BB2 = (s' D zeta) / (zeta' D^2 zeta)
/// ```
///
/// Non-positive or non-finite denominators fall back to `alpha_max` (BB1) or
/// `alpha_min` (BB2); both results are clamped into [alpha_min, alpha_max].
pub fn bb_steplengths(
    s: &[f64],
    zeta: &[f64],
    d: &[f64],
    alpha_min: f64,
    alpha_max: f64,
) -> (f64, f64) {
    let mut s_dinv2_s = 0.0;
    let mut s_dinv_z = 0.0;
    let mut s_d_z = 0.0;
    let mut z_d2_z = 0.0;
    for ((&si, &zi), &di) in s.iter().zip(zeta.iter()).zip(d.iter()) {
        let sd = si / di;
        s_dinv2_s += sd * sd;
        s_dinv_z += sd * zi;
        s_d_z += si * di * zi;
        z_d2_z += (di * zi) * (di * zi);
    }
    let bb1 = if s_dinv_z > 0.0 && s_dinv_z.is_finite() && s_dinv2_s.is_finite() {
        (s_dinv2_s / s_dinv_z).clamp(alpha_min, alpha_max)
    } else {
        alpha_max
    };
    let bb2 = if z_d2_z > 0.0 && z_d2_z.is_finite() && s_d_z > 0.0 && s_d_z.is_finite() {
        (s_d_z / z_d2_z).clamp(alpha_min, alpha_max)
    } else {
        alpha_min
    };
    (bb1, bb2)
}

/// True when the secant pair carries positive curvature in the D-metric, so
/// the BB2 quotient is a genuine curvature estimate rather than a fallback.
fn bb2_is_genuine(s: &[f64], zeta: &[f64], d: &[f64]) -> bool {
    let mut s_d_z = 0.0;
    let mut z_d2_z = 0.0;
    for ((&si, &zi), &di) in s.iter().zip(zeta.iter()).zip(d.iter()) {
        s_d_z += si * di * zi;
        z_d2_z += (di * zi) * (di * zi);
    }
    s_d_z > 0.0 && s_d_z.is_finite() && z_d2_z > 0.0 && z_d2_z.is_finite()
}

/// Adaptive alternation between the BB rules (variable-threshold strategy).
#[derive(Debug, Clone)]
pub struct SteplengthState {
    threshold: f64,
    recent_bb2: VecDeque<f64>,
    memory: usize,
}

const THRESHOLD_FLOOR: f64 = 1e-6;
const THRESHOLD_CEIL: f64 = 1.0 - 1e-6;

impl SteplengthState {
    pub fn new(initial_threshold: f64, memory: usize) -> Self {
        SteplengthState {
            threshold: initial_threshold.clamp(THRESHOLD_FLOOR, THRESHOLD_CEIL),
            recent_bb2: VecDeque::with_capacity(memory),
            memory,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// If alpha_BB2 / alpha_BB1 <= threshold, return the minimum of the last
    /// `memory` stored BB2 values and shrink the threshold; otherwise return
    /// alpha_BB1 and grow it.
    pub fn select(&mut self, bb1: f64, bb2: f64) -> f64 {
        self.store(bb2);
        self.pick(bb1, bb2)
    }

    /// Variant that keeps degenerate fallback BB2 values (negative curvature
    /// in the scaled metric) out of the memory, so one bad secant cannot pin
    /// the min-of-recent rule at alpha_min for several iterations.
    pub fn select_with_validity(&mut self, bb1: f64, bb2: f64, bb2_genuine: bool) -> f64 {
        if bb2_genuine {
            self.store(bb2);
        }
        self.pick(bb1, bb2)
    }

    fn store(&mut self, bb2: f64) {
        self.recent_bb2.push_back(bb2);
        while self.recent_bb2.len() > self.memory {
            self.recent_bb2.pop_front();
        }
    }

    fn pick(&mut self, bb1: f64, bb2: f64) -> f64 {
        if bb2 / bb1 <= self.threshold {
            self.threshold = (self.threshold * 0.9).clamp(THRESHOLD_FLOOR, THRESHOLD_CEIL);
            let recent_min = self.recent_bb2.iter().cloned().fold(f64::INFINITY, f64::min);
            if recent_min.is_finite() {
                recent_min
            } else {
                bb2
            }
        } else {
            self.threshold = (self.threshold * 1.1).clamp(THRESHOLD_FLOOR, THRESHOLD_CEIL);
            bb1
        }
    }
}

/// A problem the SGP engine can run on: objective, gradient, feasible-set
/// projection and diagonal scaling over a flat variable vector.
pub trait SgpProblem {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<f64>;
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn project(&self, x: &mut [f64]);
    /// Fill `out` with the diagonal scaling for the current iterate; entries
    /// must lie in [1/sigma, sigma].
    fn scaling(&self, x: &[f64], sigma: f64, out: &mut [f64]);
    /// Largest bound violation of `x` (0 when feasible).
    fn feasibility_violation(&self, x: &[f64]) -> f64;
}

struct ImplicitProblem<'a, 'b> {
    obj: &'a ObjectiveSpec<'b>,
}

impl SgpProblem for ImplicitProblem<'_, '_> {
    fn dim(&self) -> usize {
        self.obj.image_len()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.obj.eval_implicit_vec(x)
    }

    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.obj.grad_implicit_vec(x)
    }

    fn project(&self, x: &mut [f64]) {
        project_box(x, self.obj.lower, self.obj.upper).expect("bounds validated");
    }

    fn scaling(&self, x: &[f64], sigma: f64, out: &mut [f64]) {
        let lo = sigma.recip();
        for (o, &v) in out.iter_mut().zip(x.iter()) {
            *o = v.clamp(lo, sigma);
        }
    }

    fn feasibility_violation(&self, x: &[f64]) -> f64 {
        box_violation(x, self.obj.lower, self.obj.upper)
    }
}

struct ExplicitProblem<'a, 'b> {
    obj: &'a ObjectiveSpec<'b>,
    n2: usize,
}

impl SgpProblem for ExplicitProblem<'_, '_> {
    fn dim(&self) -> usize {
        self.n2 + self.obj.sino_len()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.obj.eval_explicit_vec(&x[..self.n2], &x[self.n2..])
    }

    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (mut gf, gy) = self.obj.grad_explicit_vec(&x[..self.n2], &x[self.n2..])?;
        gf.extend_from_slice(&gy);
        Ok(gf)
    }

    fn project(&self, x: &mut [f64]) {
        project_box(&mut x[..self.n2], self.obj.lower, self.obj.upper)
            .expect("bounds validated");
        // Sinogram block: y >= 0.
        project_box(&mut x[self.n2..], 0.0, None).expect("trivial bounds");
    }

    fn scaling(&self, x: &[f64], sigma: f64, out: &mut [f64]) {
        let lo = sigma.recip();
        for (o, &v) in out[..self.n2].iter_mut().zip(x[..self.n2].iter()) {
            *o = v.clamp(lo, sigma);
        }
        // Block-diagonal scaling: identity on the sinogram block.
        for o in out[self.n2..].iter_mut() {
            *o = 1.0;
        }
    }

    fn feasibility_violation(&self, x: &[f64]) -> f64 {
        let vf = box_violation(&x[..self.n2], self.obj.lower, self.obj.upper);
        let vy = box_violation(&x[self.n2..], 0.0, None);
        vf.max(vy)
    }
}

fn box_violation(x: &[f64], lower: f64, upper: Option<f64>) -> f64 {
    let mut v: f64 = 0.0;
    for &xi in x {
        v = v.max(lower - xi);
        if let Some(u) = upper {
            v = v.max(xi - u);
        }
    }
    v.max(0.0)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

const MAX_BACKTRACKS: usize = 50;

/// Run the SGP iteration on any [`SgpProblem`] from a feasible start.
pub fn sgp_minimize<P: SgpProblem>(
    problem: &P,
    params: &SgpParams,
    x0: Vec<f64>,
    monitor: Option<&dyn Fn(&[f64]) -> f64>,
) -> Result<MinimizeResult> {
    params.validate()?;
    if x0.len() != problem.dim() {
        return Err(Error::shape(format!(
            "start vector length {} != problem dimension {}",
            x0.len(),
            problem.dim()
        )));
    }
    if problem.feasibility_violation(&x0) > 0.0 {
        return Err(Error::invalid("starting point is infeasible"));
    }

    let dim = x0.len();
    let mut x = x0;
    let mut psi = problem.eval(&x)?;
    if !psi.is_finite() {
        return Err(Error::invalid(format!("objective at start is not finite ({psi})")));
    }
    let initial_psi = psi;
    let mut grad = problem.grad(&x)?;

    let mut psi_window: VecDeque<f64> = VecDeque::with_capacity(params.mu);
    psi_window.push_back(psi);

    let mut steplength = SteplengthState::new(params.bb_switch_threshold, params.bb_memory);
    let mut secant: Option<(Vec<f64>, Vec<f64>)> = None; // (s, zeta)

    let mut scaling = vec![1.0; dim];
    let mut log = Vec::new();
    let mut reason = StopReason::MaxIter;
    let mut iterations = 0usize;

    for k in 0..params.max_iter {
        problem.scaling(&x, params.sigma, &mut scaling);
        let (scaling_min, scaling_max) = scaling
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));

        let alpha = match &secant {
            None => params.alpha0.clamp(params.alpha_min, params.alpha_max),
            Some((s, zeta)) => {
                let (bb1, bb2) =
                    bb_steplengths(s, zeta, &scaling, params.alpha_min, params.alpha_max);
                steplength.select_with_validity(bb1, bb2, bb2_is_genuine(s, zeta, &scaling))
            }
        };

        // Projected scaled gradient step.
        let mut z: Vec<f64> = x
            .iter()
            .zip(grad.iter())
            .zip(scaling.iter())
            .map(|((&xi, &gi), &di)| xi - alpha * di * gi)
            .collect();
        problem.project(&mut z);

        let mut dir = z;
        for (di, &xi) in dir.iter_mut().zip(x.iter()) {
            *di -= xi;
        }
        let dir_norm = norm(&dir);
        if dir_norm == 0.0 {
            reason = StopReason::Stationary;
            break;
        }
        if dir_norm <= params.stop_tol * norm(&x).max(1.0) {
            reason = StopReason::Tolerance;
            break;
        }
        let grad_dot_dir = dot(&grad, &dir);
        debug_assert!(grad_dot_dir < 0.0, "direction is not descent: {grad_dot_dir}");
        if grad_dot_dir >= 0.0 {
            // Numerically stalled; the projected step no longer descends.
            reason = StopReason::Tolerance;
            break;
        }

        let psi_max = psi_window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda_ls = 1.0;
        let mut backtracks = 0usize;
        let (psi_new, x_new) = loop {
            let trial: Vec<f64> = x
                .iter()
                .zip(dir.iter())
                .map(|(&xi, &di)| xi + lambda_ls * di)
                .collect();
            let value = problem.eval(&trial)?;
            if value <= psi_max + params.beta * lambda_ls * grad_dot_dir {
                break (value, trial);
            }
            backtracks += 1;
            if backtracks > MAX_BACKTRACKS {
                return Err(Error::BacktrackingFailed { iteration: k, halvings: backtracks });
            }
            lambda_ls *= params.gamma_ls;
        };

        let grad_new = problem.grad(&x_new)?;
        let s: Vec<f64> = x_new.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let zeta: Vec<f64> = grad_new.iter().zip(grad.iter()).map(|(a, b)| a - b).collect();

        log.push(IterRecord {
            iter: k,
            psi: psi_new,
            alpha,
            lambda_ls,
            backtracks,
            grad_norm: norm(&grad),
            dir_norm,
            grad_dot_dir,
            scaling_min,
            scaling_max,
            feasibility_violation: problem.feasibility_violation(&x_new),
            roi_rel_err: monitor.map(|m| m(&x_new)),
        });

        x = x_new;
        grad = grad_new;
        psi = psi_new;
        secant = Some((s, zeta));
        if psi_window.len() == params.mu {
            psi_window.pop_front();
        }
        psi_window.push_back(psi);
        iterations = k + 1;
    }

    Ok(MinimizeResult { x, iterations, initial_psi, log, reason })
}

/// Ground truth + ROI pixel set for per-iteration error logging.
pub struct RoiMonitor<'a> {
    pub truth: &'a Image,
    pub pixels: &'a [(usize, usize)],
}

impl RoiMonitor<'_> {
    fn rel_err_of_vec(&self, f: &[f64]) -> f64 {
        let n = self.truth.n;
        let mut num = 0.0;
        let mut den = 0.0;
        for &(i, j) in self.pixels {
            let t = self.truth.values[(i, j)];
            let r = f[j * n + i];
            num += (r - t) * (r - t);
            den += t * t;
        }
        (num / den).sqrt()
    }
}

/// Solve the reconstruction problem described by `obj` starting from `f0`
/// (and `y_init` in explicit mode; defaults to the truncated sinogram y0).
pub fn sgp_solve(
    obj: &ObjectiveSpec,
    params: &SgpParams,
    f0: &Image,
    y_init: Option<&Sinogram>,
    monitor: Option<&RoiMonitor>,
) -> Result<SolveResult> {
    if f0.n != obj.w.n {
        return Err(Error::shape(format!(
            "start image is {}x{}, expected n={}",
            f0.n, f0.n, obj.w.n
        )));
    }
    let n2 = obj.image_len();
    let monitor_fn = monitor.map(|m| move |x: &[f64]| m.rel_err_of_vec(&x[..n2]));
    let monitor_dyn: Option<&dyn Fn(&[f64]) -> f64> =
        monitor_fn.as_ref().map(|f| f as &dyn Fn(&[f64]) -> f64);

    match obj.formulation {
        Formulation::Implicit => {
            let problem = ImplicitProblem { obj };
            let run = sgp_minimize(&problem, params, f0.to_col_major_vec(), monitor_dyn)?;
            Ok(SolveResult {
                f_hat: Image::from_col_major_vec(obj.w.n, obj.w.pixel_size, &run.x)?,
                y_hat: None,
                iterations: run.iterations,
                initial_psi: run.initial_psi,
                log: run.log,
                reason: run.reason,
            })
        }
        Formulation::Explicit => {
            let problem = ExplicitProblem { obj, n2 };
            let mut x0 = f0.to_col_major_vec();
            match y_init {
                Some(y) => {
                    if y.num_views() != obj.w.num_views || y.num_cells() != obj.w.num_cells {
                        return Err(Error::shape("y_init does not match sinogram shape"));
                    }
                    x0.extend(y.to_vec());
                }
                // Default start: the truncated sinogram itself (feasible and
                // consistent inside the ROI).
                None => x0.extend_from_slice(&obj.y0),
            }
            let run = sgp_minimize(&problem, params, x0, monitor_dyn)?;
            let f_hat = Image::from_col_major_vec(obj.w.n, obj.w.pixel_size, &run.x[..n2])?;
            let y_hat =
                Sinogram::from_vec(obj.w.num_views, obj.w.num_cells, run.x[n2..].to_vec())?;
            Ok(SolveResult {
                f_hat,
                y_hat: Some(y_hat),
                iterations: run.iterations,
                initial_psi: run.initial_psi,
                log: run.log,
                reason: run.reason,
            })
        }
    }
}

/// Run the un-regularized functional as an iterative regularization method:
/// identical iteration, but termination is governed solely by `max_iter` (or
/// an exactly stationary point), so the per-iteration ROI log exposes the
/// semi-convergence behavior.
pub fn early_stopped_solve(
    obj: &ObjectiveSpec,
    params: &SgpParams,
    f0: &Image,
    y_init: Option<&Sinogram>,
    monitor: Option<&RoiMonitor>,
) -> Result<SolveResult> {
    let mut p = params.clone();
    p.stop_tol = 0.0;
    sgp_solve(obj, &p, f0, y_init, monitor)
}

/// Check every logged iteration against the solver contract: steplength and
/// scaling clamps, feasibility, descent sign and the nonmonotone Armijo
/// bound. Returns a list of violations (empty when the log is clean).
pub fn check_solver_contract(
    initial_psi: f64,
    log: &[IterRecord],
    params: &SgpParams,
) -> Vec<String> {
    let mut issues = Vec::new();
    let mut psis = vec![initial_psi];
    psis.extend(log.iter().map(|r| r.psi));
    for (idx, r) in log.iter().enumerate() {
        if !(r.alpha >= params.alpha_min && r.alpha <= params.alpha_max) {
            issues.push(format!("iter {}: alpha {} outside clamp", r.iter, r.alpha));
        }
        if r.scaling_min < params.sigma.recip() - 1e-15 || r.scaling_max > params.sigma + 1e-15
        {
            issues.push(format!(
                "iter {}: scaling range [{}, {}] outside [1/sigma, sigma]",
                r.iter, r.scaling_min, r.scaling_max
            ));
        }
        if r.feasibility_violation != 0.0 {
            issues.push(format!(
                "iter {}: iterate violates bounds by {}",
                r.iter, r.feasibility_violation
            ));
        }
        if r.dir_norm > 0.0 && !(r.grad_dot_dir < 0.0) {
            issues.push(format!(
                "iter {}: direction not descent (grad'd = {})",
                r.iter, r.grad_dot_dir
            ));
        }
        // Nonmonotone Armijo: psi_{k+1} <= max of the last mu values + slack.
        let window_start = (idx + 1).saturating_sub(params.mu);
        let psi_max =
            psis[window_start..=idx].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bound = psi_max + params.beta * r.lambda_ls * r.grad_dot_dir;
        if r.psi > bound + 1e-10 * bound.abs().max(1.0) {
            issues.push(format!(
                "iter {}: accepted psi {} exceeds nonmonotone bound {}",
                r.iter, r.psi, bound
            ));
        }
    }
    issues
}
