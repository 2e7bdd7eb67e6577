//! Constrained minimisation on {G(u) = 1}: the levels c_{μ,ν} and c_∞, Nehari scaling,
//! least energies, ground-state extraction and the scan for the existence threshold μ_ν.
//!
//! All minimisation happens in the radial sector on the interior unknowns r_1..r_{M−1}.
//! The descent is a preconditioned projected gradient (metric A_0 = −Δ+1) with a
//! Barzilai–Borwein step, monotone backtracking and exact rescaling back onto the
//! constraint. A bordered Newton solve on the Lagrange system polishes the result.

use crate::constants::{c_inf_closed, critical_mu_values, least_energy_formula, ProblemParams};
use crate::error::{LabError, Result};
use crate::grid::{l2_squared, sector_operator, RadialFn, RadialGrid};
use crate::linalg::{dot, SpdFactor, SymTridiag};
use crate::riesz::RieszKernel;
use crate::spectrum::best_embedding_constant;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::fmt::Write as _;
use std::sync::Arc;

/// Tolerances for [`minimize_c`] and [`minimize_c_inf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinOptions {
    pub max_iter: usize,
    /// Convergence requires the stationarity residual below this.
    pub grad_tol: f64,
    /// Convergence requires |G(u) − 1| below this.
    pub constraint_tol: f64,
    /// Gradient level at which the Newton polish takes over.
    pub polish_below: f64,
    pub polish: bool,
    /// Replace iterates by their absolute value (steers to the positive minimiser).
    pub positivity: bool,
    /// Stop as soon as Q drops below this value (a one-sided certificate).
    pub target: Option<f64>,
}

impl Default for MinOptions {
    fn default() -> Self {
        MinOptions {
            max_iter: 20_000,
            grad_tol: 1e-7,
            constraint_tol: 1e-9,
            polish_below: 1e-4,
            polish: true,
            positivity: true,
            target: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinResult {
    pub value: f64,
    pub minimizer: RadialFn,
    pub constraint_residual: f64,
    /// ‖Q′(u) − (Q/p)G′(u)‖ in the dual norm of the H¹ metric.
    pub grad_norm: f64,
    /// Fraction of the constraint density |u|^p (I_α∗|u|^p) beyond r_max/2.
    pub boundary_mass: f64,
    pub converged: bool,
    pub iterations: usize,
    pub truncation_suspect: bool,
    /// Stopped early because Q fell below the requested target.
    pub certified_below_target: bool,
    /// Largest increase of Q between accepted iterates (rounding-level when ≥ 0).
    pub max_q_increase: f64,
    /// Smallest Q over accepted iterates.
    pub min_iterate_q: f64,
}

pub const TRUNCATION_THRESHOLD: f64 = 1e-4;

/// The quadratic form to minimise, as a tridiagonal matrix on the interior unknowns.
struct Problem<'a> {
    kernel: &'a RieszKernel,
    grid: &'a Arc<RadialGrid>,
    form: SymTridiag,
    metric: SpdFactor,
    metric_matrix: SymTridiag,
    p: f64,
}

impl<'a> Problem<'a> {
    fn quadratic(kernel: &'a RieszKernel, params: &ProblemParams) -> Self {
        let grid = &kernel.grid;
        let h1 = sector_operator(grid, 0).matrix;
        let n = h1.len();
        let b = &grid.potential_weights(params.nu)[..n];
        let form = h1.shifted(params.mu, b);
        let metric = SpdFactor::new(&h1).expect("H1 form is positive definite");
        Problem { kernel, grid, form, metric, metric_matrix: h1, p: params.p() }
    }

    fn mass_only(kernel: &'a RieszKernel, params: &ProblemParams) -> Self {
        let grid = &kernel.grid;
        let n = grid.len() - 1;
        let mass = SymTridiag::new(grid.weights[..n].to_vec(), vec![0.0; n - 1]);
        let metric = SpdFactor::new(&mass).expect("weights are positive");
        Problem { kernel, grid, form: mass.clone(), metric, metric_matrix: mass, p: params.p() }
    }

    fn n(&self) -> usize {
        self.form.len()
    }

    fn full(&self, u: &[f64]) -> Vec<f64> {
        let mut v = u.to_vec();
        v.push(0.0);
        v
    }

    /// G(u) and its Euclidean gradient ∂G/∂u_i = w_i g_i on interior unknowns.
    fn g_grad(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let (g, dens) = self.kernel.g_and_density(&self.full(u));
        let grad = (0..self.n()).map(|i| self.grid.weights[i] * dens[i]).collect();
        (g, grad)
    }

    fn g(&self, u: &[f64]) -> f64 {
        self.kernel.g_values(&self.full(u))
    }

    fn normalize(&self, u: &mut [f64]) -> Result<f64> {
        let g = self.g(u);
        if !(g > 0.0) {
            return Err(LabError::ZeroInput("cannot rescale a function with G(u) = 0".into()));
        }
        let t = g.powf(-1.0 / (2.0 * self.p));
        u.iter_mut().for_each(|v| *v *= t);
        Ok(t)
    }

    /// Lagrange residual r = 2A u − (Q/p)∇G and its dual norm (rᵀ P⁻¹ r)^{1/2}.
    fn stationarity(&self, u: &[f64], q: f64, grad_g: &[f64]) -> f64 {
        let au = self.form.matvec(u);
        let theta = q / self.p;
        let r: Vec<f64> = au.iter().zip(grad_g).map(|(a, g)| 2.0 * a - theta * g).collect();
        let z = self.metric.solve(&r);
        dot(&r, &z).max(0.0).sqrt()
    }

    fn boundary_mass(&self, u: &[f64]) -> f64 {
        constraint_density_fraction(self.kernel, &self.full(u), 0.5 * self.grid.r_max())
    }
}

fn constraint_density_fraction(kernel: &RieszKernel, u: &[f64], radius: f64) -> f64 {
    let p = crate::constants::exponent(kernel.grid.dim(), kernel.alpha);
    let s: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
    let conv = kernel.apply_values(&s);
    let g = &kernel.grid;
    let (mut outer, mut total) = (0.0, 0.0);
    for i in 0..g.len() {
        let d = g.weights[i] * s[i] * conv[i];
        total += d;
        if g.nodes[i] > radius {
            outer += d;
        }
    }
    if total > 0.0 {
        outer / total
    } else {
        0.0
    }
}

struct DescentState {
    u: Vec<f64>,
    q: f64,
    iterations: usize,
    max_increase: f64,
    min_q: f64,
    certified: bool,
}

impl DescentState {
    fn accept(&mut self, u: Vec<f64>, q: f64) {
        self.max_increase = self.max_increase.max(q - self.q);
        self.min_q = self.min_q.min(q);
        self.u = u;
        self.q = q;
    }
}

/// Projected gradient with BB steps in the metric P; returns when the stationarity
/// residual drops below `stop_at`, on stagnation, or at the iteration cap.
fn projected_descent(pb: &Problem, st: &mut DescentState, opts: &MinOptions, stop_at: f64) -> Result<()> {
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut tau = 1.0;
    while st.iterations < opts.max_iter {
        let (_, grad_g) = pb.g_grad(&st.u);
        let au = pb.form.matvec(&st.u);
        let grad_q: Vec<f64> = au.iter().map(|a| 2.0 * a).collect();
        let pq = pb.metric.solve(&grad_q);
        let pg = pb.metric.solve(&grad_g);
        let coef = dot(&grad_g, &pq) / dot(&grad_g, &pg);
        let d: Vec<f64> = pq.iter().zip(&pg).map(|(a, b)| a - coef * b).collect();
        let pd = pb.metric_matrix.matvec(&d);
        let dnorm2 = dot(&d, &pd);
        if pb.stationarity(&st.u, st.q, &grad_g) <= stop_at || dnorm2 <= 0.0 {
            return Ok(());
        }
        if let Some((pu, pdv)) = &prev {
            let s: Vec<f64> = st.u.iter().zip(pu).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = d.iter().zip(pdv).map(|(a, b)| a - b).collect();
            let ps = pb.metric_matrix.matvec(&s);
            let sy = dot(&ps, &y);
            let ss = dot(&ps, &s);
            if sy > 0.0 && ss > 0.0 {
                tau = ss / sy;
            } else {
                tau *= 2.0;
            }
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand: Vec<f64> = st.u.iter().zip(&d).map(|(u, d)| u - tau * d).collect();
            if opts.positivity {
                cand.iter_mut().for_each(|v| *v = v.abs());
            }
            if pb.normalize(&mut cand).is_ok() {
                let q = pb.form.quad_form(&cand);
                if q <= st.q - 1e-4 * tau * dnorm2 || (q <= st.q && tau < 1e-12) {
                    prev = Some((st.u.clone(), d.clone()));
                    st.accept(cand, q);
                    accepted = true;
                    break;
                }
            }
            tau *= 0.5;
        }
        st.iterations += 1;
        if !accepted {
            return Ok(());
        }
        if let Some(t) = opts.target {
            if st.q < t {
                st.certified = true;
                return Ok(());
            }
        }
    }
    Ok(())
}

/// Newton's method on F(u, θ) = (2Au − θ∇G(u), 1 − G(u)) with a dense bordered Jacobian,
/// optionally with one more linear constraint aᵀu = 0 and its multiplier.
/// The iterates leave the constraint set by O(step²); only the final iterate is rescaled,
/// since rescaling every step would feed a first-order error back into the residual.
/// `measure` is the stationarity residual of a rescaled iterate; with `monotone` set, the
/// result is kept only if it does not raise Q beyond rounding.
fn newton_polish(
    pb: &Problem,
    st: &mut DescentState,
    opts: &MinOptions,
    slice: Option<&[f64]>,
    measure: &dyn Fn(&[f64], f64) -> f64,
    monotone: bool,
) -> Result<()> {
    let n = pb.n();
    let w = &pb.grid.weights;
    let p = pb.p;
    let m = pb.grid.len();
    let dim = n + 1 + usize::from(slice.is_some());
    let start_res = measure(&st.u, st.q);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut best_res = start_res;
    let mut u = st.u.clone();
    let mut theta = st.q / p;
    let mut eta = 0.0;
    for _ in 0..25 {
        let full = pb.full(&u);
        let s: Vec<f64> = full.iter().map(|v| v.abs().powf(p)).collect();
        let conv = pb.kernel.apply_values(&s);
        let (g, grad_g) = pb.g_grad(&u);
        let au = pb.form.matvec(&u);
        let t: Vec<f64> = u.iter().map(|&x| if x == 0.0 { 0.0 } else { x.abs().powf(p - 2.0) * x }).collect();
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            let row = &pb.kernel.values[i * m..(i + 1) * m];
            for j in 0..n {
                // E_ij = K_ij w_i w_j
                jac[(i, j)] = -theta * 2.0 * p * p * row[j] * w[i] * w[j] * t[i] * t[j];
            }
            if u[i] != 0.0 {
                jac[(i, i)] -= theta * 2.0 * p * (p - 1.0) * w[i] * conv[i] * u[i].abs().powf(p - 2.0);
            }
            jac[(i, n)] = -grad_g[i];
            jac[(n, i)] = -grad_g[i];
        }
        for i in 0..n {
            jac[(i, i)] += 2.0 * pb.form.d[i];
            if i + 1 < n {
                jac[(i, i + 1)] += 2.0 * pb.form.e[i];
                jac[(i + 1, i)] += 2.0 * pb.form.e[i];
            }
        }
        let mut rhs = DVector::<f64>::zeros(dim);
        for i in 0..n {
            rhs[i] = theta * grad_g[i] - 2.0 * au[i];
        }
        rhs[n] = g - 1.0;
        if let Some(a) = slice {
            for i in 0..n {
                jac[(i, n + 1)] = -a[i];
                jac[(n + 1, i)] = -a[i];
                rhs[i] += eta * a[i];
            }
            rhs[n + 1] = dot(a, &u);
        }
        // symmetric equilibration: the weights span many decades across the grid
        let mut scale: Vec<f64> = (0..n).map(|i| 1.0 / pb.metric_matrix.d[i].sqrt()).collect();
        let border = |v: &[f64]| 1.0 / (0..n).map(|i| (scale[i] * v[i]).powi(2)).sum::<f64>().sqrt();
        let mut extra = vec![border(&grad_g)];
        if let Some(a) = slice {
            extra.push(border(a));
        }
        scale.extend(extra);
        for j in 0..dim {
            for i in 0..dim {
                jac[(i, j)] *= scale[i] * scale[j];
            }
            rhs[j] *= scale[j];
        }
        let Some(step) = jac.lu().solve(&rhs) else {
            break;
        };
        for i in 0..n {
            u[i] += scale[i] * step[i];
        }
        theta += scale[n] * step[n];
        if slice.is_some() {
            eta += scale[n + 1] * step[n + 1];
        }
        let mut cand = u.clone();
        if pb.normalize(&mut cand).is_err() {
            break;
        }
        let q = pb.form.quad_form(&cand);
        let res = measure(&cand, q);
        if !res.is_finite() || res > 1e3 * start_res {
            break;
        }
        if res < best_res {
            best_res = res;
            best = Some((cand, q));
        }
        if res <= 0.05 * opts.grad_tol {
            break;
        }
    }
    if let Some((cand, q)) = best {
        // the constrained minimum lies below any point the descent has accepted, up to rounding
        if !monotone || q <= st.q + 1e-13 * st.q.abs().max(1e-300) {
            st.accept(cand, q);
            st.iterations += 1;
        }
    }
    Ok(())
}

fn finish(pb: &Problem, st: DescentState, opts: &MinOptions) -> Result<MinResult> {
    let g = pb.g(&st.u);
    let (_, grad_g) = pb.g_grad(&st.u);
    let grad_norm = pb.stationarity(&st.u, st.q, &grad_g);
    let constraint_residual = (g - 1.0).abs();
    let boundary_mass = pb.boundary_mass(&st.u);
    let converged = grad_norm <= opts.grad_tol && constraint_residual <= opts.constraint_tol;
    let minimizer = RadialFn::new(pb.grid.clone(), pb.full(&st.u), 0)?;
    Ok(MinResult {
        value: st.q,
        minimizer,
        constraint_residual,
        grad_norm,
        boundary_mass,
        converged,
        iterations: st.iterations,
        truncation_suspect: boundary_mass > TRUNCATION_THRESHOLD,
        certified_below_target: st.certified,
        max_q_increase: st.max_increase,
        min_iterate_q: st.min_q,
    })
}

fn interior_start(kernel: &RieszKernel, init: &RadialFn, positivity: bool) -> Result<Vec<f64>> {
    init.check_grid(&kernel.grid)?;
    let n = kernel.grid.len() - 1;
    let u: Vec<f64> = init.values[..n].iter().map(|v| if positivity { v.abs() } else { *v }).collect();
    if u.iter().all(|v| *v == 0.0) {
        return Err(LabError::ZeroInput("initial guess vanishes on the interior nodes".into()));
    }
    Ok(u)
}

/// The profile u_ε(r) = ε^{N/2}(1 + ε²r²)^{−N/2} used as a default starting point.
pub fn default_start(grid: &Arc<RadialGrid>, nu: f64, eps: f64) -> RadialFn {
    let h = grid.dim() as f64 / 2.0;
    let mut f = RadialFn::from_fn(grid.clone(), 0, |r| eps.powf(h) * (nu * nu + eps * eps * r * r).powf(-h));
    if let Some(last) = f.values.last_mut() {
        *last = 0.0;
    }
    f
}

/// c_{μ,ν} = inf { Q_{μ,ν}(u) : G(u) = 1 } over radial u.
pub fn minimize_c(params: &ProblemParams, kernel: &RieszKernel, init: Option<&RadialFn>, opts: &MinOptions) -> Result<MinResult> {
    params.validate()?;
    check_kernel(kernel, params)?;
    let pb = Problem::quadratic(kernel, params);
    let start = match init {
        Some(f) => f.clone(),
        None => default_start(&kernel.grid, params.nu, 1.0),
    };
    let mut u = interior_start(kernel, &start, opts.positivity)?;
    pb.normalize(&mut u)?;
    let q = pb.form.quad_form(&u);
    let mut st = DescentState { u, q, iterations: 0, max_increase: 0.0, min_q: q, certified: false };
    if opts.target.is_some_and(|t| q < t) {
        st.certified = true;
        return finish(&pb, st, opts);
    }
    let first_stop = if opts.polish { opts.polish_below } else { opts.grad_tol };
    projected_descent(&pb, &mut st, opts, first_stop)?;
    if st.certified {
        return finish(&pb, st, opts);
    }
    if opts.polish {
        let measure = |u: &[f64], q: f64| {
            let (_, gg) = pb.g_grad(u);
            pb.stationarity(u, q, &gg)
        };
        newton_polish(&pb, &mut st, opts, None, &measure, true)?;
        if measure(&st.u, st.q) > opts.grad_tol {
            // the polish could not finish: continue descending, then try once more
            projected_descent(&pb, &mut st, opts, 0.1 * opts.grad_tol)?;
            newton_polish(&pb, &mut st, opts, None, &measure, true)?;
        }
    }
    finish(&pb, st, opts)
}

/// c_∞ = inf { ∫|u|² : G(u) = 1 }, by the monotone iteration u ← normalise(W⁻¹∇G(u)),
/// which increases G on the L² sphere because G is convex.
pub fn minimize_c_inf(
    kernel: &RieszKernel,
    params: &ProblemParams,
    init: Option<&RadialFn>,
    opts: &MinOptions,
) -> Result<MinResult> {
    params.validate()?;
    check_kernel(kernel, params)?;
    let pb = Problem::mass_only(kernel, params);
    let reference = default_start(&kernel.grid, params.nu, 1.0);
    let start = match init {
        Some(f) => {
            interior_start(kernel, f, true)?;
            f.dilated(median_radius(f) / median_radius(&reference))
        }
        None => reference.clone(),
    };
    let mut u = interior_start(kernel, &start, true)?;
    pb.normalize(&mut u)?;
    let q = pb.form.quad_form(&u);
    let mut st = DescentState { u, q, iterations: 0, max_increase: 0.0, min_q: q, certified: false };
    let w = &kernel.grid.weights;
    let n = pb.n();
    // The continuum problem is dilation invariant while its discretisation is not, so the
    // plain iteration creeps along the dilation orbit. The start is moved to the scale of
    // the default profile, updates have their component along the dilation generator of
    // that profile removed, and the Newton stage adds the slice ⟨Du_ref, u⟩ = 0.
    let t_ref = dilation_generator(&reference);
    let slice: Vec<f64> = (0..n).map(|i| w[i] * t_ref[i]).collect();
    let twt = dot(&slice, &t_ref);
    while st.iterations < opts.max_iter {
        let (_, grad_g) = pb.g_grad(&st.u);
        if transverse_stationarity(&pb, &st.u, st.q, &grad_g, &t_ref) <= opts.polish_below {
            break;
        }
        let mut cand: Vec<f64> = grad_g.iter().zip(w).map(|(g, w)| g / w).collect();
        pb.normalize(&mut cand)?;
        let delta: Vec<f64> = cand.iter().zip(&st.u).map(|(c, u)| c - u).collect();
        let c = dot(&slice, &delta) / twt;
        let mut next: Vec<f64> = (0..n).map(|i| (st.u[i] + delta[i] - c * t_ref[i]).abs()).collect();
        pb.normalize(&mut next)?;
        st.iterations += 1;
        let q = pb.form.quad_form(&next);
        st.accept(next, q);
    }
    let measure = |u: &[f64], q: f64| {
        let (_, gg) = pb.g_grad(u);
        transverse_stationarity(&pb, u, q, &gg, &t_ref)
    };
    newton_polish(&pb, &mut st, opts, Some(&slice), &measure, false)?;
    let u = st.u.clone();
    let q = st.q;
    let mut res = finish(&pb, st, opts)?;
    let (_, grad_g) = pb.g_grad(&u);
    res.grad_norm = transverse_stationarity(&pb, &u, q, &grad_g, &t_ref);
    res.converged = res.grad_norm <= opts.grad_tol && res.constraint_residual <= opts.constraint_tol;
    Ok(res)
}

/// The Lagrange residual of the mass-only problem with its component along a dilation
/// generator t removed, measured in the W⁻¹ norm. The discrete problem is only approximately
/// dilation invariant, so that component measures discretisation, not stationarity.
fn transverse_stationarity(pb: &Problem, u: &[f64], q: f64, grad_g: &[f64], t: &[f64]) -> f64 {
    let w = &pb.grid.weights;
    let theta = q / pb.p;
    let r: Vec<f64> = (0..u.len()).map(|i| 2.0 * w[i] * u[i] - theta * grad_g[i]).collect();
    let twt: f64 = t.iter().zip(w).map(|(t, w)| w * t * t).sum();
    let c = if twt > 0.0 { dot(&r, t) / twt } else { 0.0 };
    (0..u.len()).map(|i| (r[i] - c * w[i] * t[i]).powi(2) / w[i]).sum::<f64>().sqrt()
}

/// (N/2)u + r u′ on the interior nodes, by a central difference of the dilation family.
fn dilation_generator(u: &RadialFn) -> Vec<f64> {
    let n = u.grid.len() - 1;
    let h = 1e-4;
    let up = u.dilated(1.0 + h);
    let dn = u.dilated(1.0 - h);
    (0..n).map(|i| (up.values[i] - dn.values[i]) / (2.0 * h)).collect()
}

/// Radius enclosing half of ∫|u|², linear in the cumulative mass between nodes.
fn median_radius(u: &RadialFn) -> f64 {
    let g = &u.grid;
    let total = l2_squared(u);
    let mut acc = 0.0;
    for i in 0..g.len() {
        let d = g.weights[i] * u.values[i] * u.values[i];
        if acc + d >= 0.5 * total && d > 0.0 {
            let lo = if i == 0 { 0.0 } else { g.nodes[i - 1] };
            return lo + (g.nodes[i] - lo) * (0.5 * total - acc) / d;
        }
        acc += d;
    }
    g.r_max()
}

fn check_kernel(kernel: &RieszKernel, params: &ProblemParams) -> Result<()> {
    if kernel.grid.dim() != params.n || kernel.alpha != params.alpha {
        return Err(LabError::GridMismatch(format!(
            "kernel for (N={}, alpha={}) used with (N={}, alpha={})",
            kernel.grid.dim(),
            kernel.alpha,
            params.n,
            params.alpha
        )));
    }
    Ok(())
}

/// Rescales u so that G(tu) = 1.
pub fn normalize_constraint(kernel: &RieszKernel, u: &RadialFn, params: &ProblemParams) -> Result<RadialFn> {
    check_kernel(kernel, params)?;
    u.check_grid(&kernel.grid)?;
    let g = kernel.g_values(&u.values);
    if !(g > 0.0) {
        return Err(LabError::ZeroInput("cannot normalise a function with G(u) = 0".into()));
    }
    Ok(u.scaled(g.powf(-1.0 / (2.0 * params.p()))))
}

/// Scales u onto the Nehari manifold Q(su) = G(su): s = (Q/G)^{N/(2α)}.
pub fn nehari_project(kernel: &RieszKernel, u: &RadialFn, params: &ProblemParams) -> Result<RadialFn> {
    check_kernel(kernel, params)?;
    u.check_grid(&kernel.grid)?;
    let q = crate::grid::sobolev_q(u, params)?;
    if !(q > 0.0) {
        return Err(LabError::NotCoercive(q));
    }
    let g = kernel.g_values(&u.values);
    if !(g > 0.0) {
        return Err(LabError::ZeroInput("G(u) = 0".into()));
    }
    let s = (q / g).powf(params.n as f64 / (2.0 * params.alpha));
    Ok(u.scaled(s))
}

/// m = (α/(2(N+α))) c^{(N+α)/α}.
pub fn least_energy(c_value: f64, params: &ProblemParams) -> Result<f64> {
    if c_value < 0.0 || !c_value.is_finite() {
        return Err(LabError::Domain(format!("least energy needs c >= 0, got {c_value}")));
    }
    Ok(least_energy_formula(params.n, params.alpha, c_value))
}

/// J(u) = ½Q(u) − (N/(2(N+α)))G(u).
pub fn j_functional(kernel: &RieszKernel, u: &RadialFn, params: &ProblemParams) -> Result<f64> {
    check_kernel(kernel, params)?;
    u.check_grid(&kernel.grid)?;
    let q = crate::grid::sobolev_q(u, params)?;
    let g = kernel.g_values(&u.values);
    Ok(0.5 * q - g / (2.0 * params.p()))
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub profile: RadialFn,
    /// ‖−Δu + Vu − (I∗|u|^p)|u|^{p−2}u‖ in the H⁻¹ (dual) grid norm.
    pub residual: f64,
    /// Same residual in the strong grid norm (Σ r_i²/w_i)^{1/2}.
    pub residual_strong: f64,
    /// Minimum over interior nodes (the last node carries the Dirichlet condition).
    pub min_value: f64,
    pub positive: bool,
    pub energy: f64,
    pub least_energy: f64,
    pub energy_rel_err: f64,
}

/// Rescales a c-minimiser onto the Nehari manifold, turning the Lagrange system into the PDE.
pub fn extract_groundstate(min: &MinResult, params: &ProblemParams, kernel: &RieszKernel) -> Result<GroundState> {
    if !(min.value > 0.0) {
        return Err(LabError::NotCoercive(min.value));
    }
    if !min.converged {
        return Err(LabError::NonConvergence {
            what: "minimiser handed to ground-state extraction".into(),
            iterations: min.iterations,
            residual: min.grad_norm,
        });
    }
    check_kernel(kernel, params)?;
    let s = min.value.powf(params.n as f64 / (2.0 * params.alpha));
    let v = min.minimizer.scaled(s);
    let pb = Problem::quadratic(kernel, params);
    let n = pb.n();
    let (_, dens) = kernel.g_and_density(&v.values);
    let av = pb.form.matvec(&v.values[..n]);
    let w = &kernel.grid.weights;
    let r: Vec<f64> = (0..n).map(|i| av[i] - w[i] * dens[i] / (2.0 * pb.p)).collect();
    let residual = dot(&r, &pb.metric.solve(&r)).max(0.0).sqrt();
    let residual_strong = (0..n).map(|i| r[i] * r[i] / w[i]).sum::<f64>().sqrt();
    let min_value = v.values[..n].iter().cloned().fold(f64::INFINITY, f64::min);
    let energy = j_functional(kernel, &v, params)?;
    let m = least_energy(min.value, params)?;
    Ok(GroundState {
        profile: v,
        residual,
        residual_strong,
        min_value,
        positive: min_value > 0.0,
        energy,
        least_energy: m,
        energy_rel_err: ((energy - m) / m).abs(),
    })
}

/// (fraction of ∫|u|² beyond r_max/2, radius containing 90% of ∫|u|²).
pub fn vanishing_diagnostic(u: &RadialFn) -> (f64, f64) {
    let g = &u.grid;
    let total = l2_squared(u);
    if !(total > 0.0) {
        return (0.0, 0.0);
    }
    let half = 0.5 * g.r_max();
    let mut acc = 0.0;
    let mut width = g.r_max();
    let mut found = false;
    let mut outer = 0.0;
    for i in 0..g.len() {
        let d = g.weights[i] * u.values[i] * u.values[i];
        acc += d;
        if !found && acc >= 0.9 * total {
            width = g.nodes[i];
            found = true;
        }
        if g.nodes[i] > half {
            outer += d;
        }
    }
    (outer / total, width)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub mu: f64,
    pub c_value: f64,
    pub converged: bool,
    pub constraint_residual: f64,
    pub grad_norm: f64,
    pub boundary_mass: f64,
    pub iterations: usize,
    pub truncation_suspect: bool,
}

impl ScanPoint {
    fn from(mu: f64, r: &MinResult) -> Self {
        ScanPoint {
            mu,
            c_value: r.value,
            converged: r.converged,
            constraint_residual: r.constraint_residual,
            grad_norm: r.grad_norm,
            boundary_mass: r.boundary_mass,
            iterations: r.iterations,
            truncation_suspect: r.truncation_suspect,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BisectionStep {
    pub mu: f64,
    pub q: f64,
    pub below_threshold: bool,
    pub certified_early: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanOptions {
    /// Gap below c_∞ (relative to c_∞) defining the predicate c(μ) < c_∞ − gap.
    pub tol_gap_rel: f64,
    /// Stop bisecting when the bracket is below this fraction of μ^ν.
    pub width_rel: f64,
    pub abort_fraction: f64,
    pub min: MinOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { tol_gap_rel: 1e-4, width_rel: 1e-3, abort_fraction: 0.1, min: MinOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub n: usize,
    pub alpha: f64,
    pub nu: f64,
    pub c_inf_num: f64,
    pub c_inf_closed: f64,
    pub mu_up: f64,
    pub mu_low_est: f64,
    pub bisection_width: f64,
    pub tol_gap: f64,
    pub hardy: f64,
    pub scan: Vec<ScanPoint>,
    pub bisection: Vec<BisectionStep>,
    pub monotone: bool,
    pub warnings: Vec<String>,
    pub options: ScanOptions,
}

/// Values of c on the requested μ points with continuation in μ, then bisection for μ_ν.
/// Every μ is tried from the continued minimiser and from the default profile; the lower
/// level is kept, so c(μ) is nonincreasing along the scan by construction.
pub fn scan_mu(params: &ProblemParams, kernel: &RieszKernel, mus: &[f64], opts: &ScanOptions) -> Result<ThresholdReport> {
    params.validate()?;
    check_kernel(kernel, params)?;
    let grid = &kernel.grid;
    let mu_up = best_embedding_constant(grid, params.nu)?;
    let mut mus: Vec<f64> = mus.to_vec();
    mus.sort_by(f64::total_cmp);
    if let Some(bad) = mus.iter().find(|m| !(**m >= 0.0 && **m < mu_up)) {
        return Err(LabError::InvalidParams(format!("scan point {bad} outside [0, mu^nu = {mu_up})")));
    }
    let crit = critical_mu_values(params.n, params.nu)?;
    let cinf = minimize_c_inf(kernel, params, None, &opts.min)?;
    let c_inf_num = cinf.value;
    let tol_gap = opts.tol_gap_rel * c_inf_num;
    let threshold = c_inf_num - tol_gap;
    let fresh = default_start(grid, params.nu, 1.0);

    let mut scan = Vec::with_capacity(mus.len());
    let mut results: Vec<MinResult> = Vec::with_capacity(mus.len());
    for &mu in &mus {
        let pm = params.with_mu(mu);
        let warm = results.last().map(|r| r.minimizer.clone());
        let r = best_of(&pm, kernel, warm.as_ref(), &fresh, &opts.min)?;
        scan.push(ScanPoint::from(mu, &r));
        results.push(r);
    }

    // bracket: last scan point above the threshold, first one below it
    let mut lo = 0.0;
    let mut hi = mu_up;
    let mut hi_state: Option<RadialFn> = None;
    for (pt, r) in scan.iter().zip(&results) {
        if pt.c_value < threshold {
            hi = pt.mu;
            hi_state = Some(r.minimizer.clone());
            break;
        }
        lo = pt.mu;
    }
    let mut bisection = Vec::new();
    while hi - lo > opts.width_rel * mu_up {
        let mid = 0.5 * (lo + hi);
        let pm = params.with_mu(mid);
        let mut mo = opts.min;
        mo.target = Some(threshold);
        let r = best_of(&pm, kernel, hi_state.as_ref(), &fresh, &mo)?;
        let below = r.value < threshold;
        bisection.push(BisectionStep { mu: mid, q: r.value, below_threshold: below, certified_early: r.certified_below_target });
        if below {
            hi = mid;
            hi_state = Some(r.minimizer);
        } else {
            lo = mid;
        }
    }
    let mu_low_est = 0.5 * (lo + hi);

    let mut warnings = Vec::new();
    let monotone = scan.windows(2).all(|w| w[1].c_value <= w[0].c_value + 1e-10);
    if !monotone {
        warnings.push("scan values are not monotone within 1e-10".into());
    }
    let attained: Vec<&ScanPoint> = scan.iter().filter(|p| p.mu > mu_low_est).collect();
    let suspect = attained.iter().filter(|p| p.truncation_suspect).count();
    if !attained.is_empty() && suspect as f64 > opts.abort_fraction * attained.len() as f64 {
        return Err(LabError::ScanAborted(format!(
            "{suspect} of {} points above the threshold estimate are truncation-suspect",
            attained.len()
        )));
    }
    let below = scan.len() - attained.len();
    if below > 0 {
        warnings.push(format!(
            "{below} scan points lie below the threshold estimate, where minimising sequences spread and levels reflect the truncated domain"
        ));
    }
    if (cinf.value - c_inf_closed(params.n, params.alpha)?).abs() > 1e-3 * cinf.value {
        warnings.push("numerical c_inf differs from the closed form by more than 1e-3".into());
    }
    Ok(ThresholdReport {
        n: params.n,
        alpha: params.alpha,
        nu: params.nu,
        c_inf_num,
        c_inf_closed: c_inf_closed(params.n, params.alpha)?,
        mu_up,
        mu_low_est,
        bisection_width: hi - lo,
        tol_gap,
        hardy: crit.hardy,
        scan,
        bisection,
        monotone,
        warnings,
        options: *opts,
    })
}

fn best_of(
    params: &ProblemParams,
    kernel: &RieszKernel,
    warm: Option<&RadialFn>,
    fresh: &RadialFn,
    opts: &MinOptions,
) -> Result<MinResult> {
    let a = match warm {
        Some(w) => Some(minimize_c(params, kernel, Some(w), opts)?),
        None => None,
    };
    if let Some(a) = &a {
        if a.certified_below_target {
            return Ok(a.clone());
        }
    }
    let b = minimize_c(params, kernel, Some(fresh), opts)?;
    Ok(match a {
        Some(a) if a.value <= b.value => a,
        _ => b,
    })
}

impl ThresholdReport {
    /// CSV with columns (mu, c_value, converged, constraint_residual, grad_norm, boundary_mass, iterations).
    pub fn scan_csv(&self) -> String {
        let mut s = String::from("mu,c_value,converged,constraint_residual,grad_norm,boundary_mass,iterations\n");
        for p in &self.scan {
            let _ = writeln!(
                s,
                "{:.10e},{:.15e},{},{:.6e},{:.6e},{:.6e},{}",
                p.mu, p.c_value, p.converged, p.constraint_residual, p.grad_norm, p.boundary_mass, p.iterations
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::c_inf_closed;
    use crate::grid::{Grading, GridSpec};
    use crate::riesz::build_kernel;

    fn setup() -> (ProblemParams, RieszKernel) {
        let g = RadialGrid::build(GridSpec::new(3, 200.0, 200, Grading::Sinh { core: 1.0 })).unwrap();
        let k = build_kernel(&g, 2.0).unwrap();
        (ProblemParams::new(3, 2.0, 0.0, 1.0).unwrap(), k)
    }

    #[test]
    fn normalisation_and_homogeneity() {
        let (p, k) = setup();
        let u = default_start(&k.grid, 1.0, 1.0);
        let v = normalize_constraint(&k, &u, &p).unwrap();
        assert!((k.g_values(&v.values) - 1.0).abs() < 1e-12);
        let again = normalize_constraint(&k, &v, &p).unwrap();
        assert!(again.values.iter().zip(&v.values).all(|(a, b)| (a - b).abs() <= 1e-14 * b.abs()));
        let big = v.scaled(2.0);
        let back = normalize_constraint(&k, &big, &p).unwrap();
        assert!(back.values.iter().zip(&v.values).all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs().max(1e-300)));
        assert!(normalize_constraint(&k, &RadialFn::zeros(k.grid.clone(), 0), &p).is_err());
    }

    #[test]
    fn least_energy_formula_values() {
        let p = ProblemParams::new(3, 2.0, 0.0, 1.0).unwrap();
        assert!((least_energy(1.0, &p).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(least_energy(0.0, &p).unwrap(), 0.0);
        assert!(least_energy(-1.0, &p).is_err());
    }

    #[test]
    fn nehari_and_energy() {
        let (p, k) = setup();
        let u = normalize_constraint(&k, &default_start(&k.grid, 1.0, 1.0), &p).unwrap();
        let v = nehari_project(&k, &u, &p).unwrap();
        let q = crate::grid::sobolev_q(&v, &p).unwrap();
        let g = k.g_values(&v.values);
        assert!(((q - g) / q).abs() < 1e-9);
        let j = j_functional(&k, &v, &p).unwrap();
        assert!(((j - 2.0 / 10.0 * q) / j).abs() < 1e-9);
        assert_eq!(j_functional(&k, &v.scaled(-1.0), &p).unwrap(), j);
        assert_eq!(j_functional(&k, &RadialFn::zeros(k.grid.clone(), 0), &p).unwrap(), 0.0);
        // s = Q^{3/4} from G = 1 when N = 3, α = 2
        let qu = crate::grid::sobolev_q(&u, &p).unwrap();
        assert!((v.values[0] / u.values[0] - qu.powf(0.75)).abs() < 1e-12 * qu.powf(0.75));
        let deep = p.with_mu(50.0);
        assert!(matches!(nehari_project(&k, &u, &deep), Err(LabError::NotCoercive(_))));
    }

    #[test]
    fn minimiser_is_a_positive_constrained_critical_point() {
        let (p, k) = setup();
        let p = p.with_mu(2.0);
        let r = minimize_c(&p, &k, None, &MinOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.grad_norm <= 1e-7 && r.constraint_residual <= 1e-9);
        assert!(r.max_q_increase <= 1e-12 * r.value.abs());
        assert!(r.min_iterate_q > 0.0);
        let gs = extract_groundstate(&r, &p, &k).unwrap();
        assert!(gs.positive && gs.residual < 1e-6 && gs.energy_rel_err < 1e-6);
        // a sign-changing start ends at the same level once iterates are replaced by |u|
        let wavy = RadialFn::from_fn(k.grid.clone(), 0, |x| (-x * x / 4.0).exp() * (2.0 * x).cos());
        let r2 = minimize_c(&p, &k, Some(&wavy), &MinOptions::default()).unwrap();
        assert!((r2.value - r.value).abs() < 1e-8 * r.value);
    }

    #[test]
    fn certificate_stops_early() {
        let (p, k) = setup();
        let p = p.with_mu(3.0);
        let opts = MinOptions { target: Some(2.7), ..MinOptions::default() };
        let r = minimize_c(&p, &k, None, &opts).unwrap();
        assert!(r.certified_below_target && r.value < 2.7);
    }

    #[test]
    fn levels_change_sign_at_the_embedding_constant() {
        let (p, k) = setup();
        let lam = best_embedding_constant(&k.grid, 1.0).unwrap();
        let opts = MinOptions::default();
        let below = minimize_c(&p.with_mu(lam - 0.3), &k, None, &opts).unwrap();
        let at = minimize_c(&p.with_mu(lam), &k, None, &opts).unwrap();
        let above = minimize_c(&p.with_mu(lam + 0.3), &k, None, &opts).unwrap();
        assert!(below.value > 0.0 && above.value < 0.0);
        assert!(at.value.abs() < 5e-3);
        assert!(matches!(extract_groundstate(&above, &p.with_mu(lam + 0.3), &k), Err(LabError::NotCoercive(_))));
    }

    #[test]
    fn c_inf_is_scale_free_and_matches_the_closed_form() {
        let (p, k) = setup();
        let opts = MinOptions::default();
        let vals: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&e| minimize_c_inf(&k, &p, Some(&default_start(&k.grid, 1.0, e)), &opts).unwrap())
            .inspect(|r| assert!(r.converged))
            .map(|r| r.value)
            .collect();
        assert!(vals.iter().all(|v| (v - vals[1]).abs() < 1e-6), "{vals:?}");
        let closed = c_inf_closed(3, 2.0).unwrap();
        assert!(((vals[1] - closed) / closed).abs() < 1e-3);
    }

    #[test]
    fn dilation_keeps_mass() {
        let (_, k) = setup();
        let u = default_start(&k.grid, 1.0, 1.0);
        let v = u.dilated(1.7);
        assert!(((l2_squared(&v) - l2_squared(&u)) / l2_squared(&u)).abs() < 1e-6);
        let exact = default_start(&k.grid, 1.0, 1.7);
        let err = v.values.iter().zip(&exact.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6 * exact.max_abs());
    }

    #[test]
    fn vanishing_is_amplitude_free() {
        let (_, k) = setup();
        let u = default_start(&k.grid, 1.0, 1.0);
        let a = vanishing_diagnostic(&u);
        let b = vanishing_diagnostic(&u.scaled(2.0));
        assert!((a.0 - b.0).abs() < 1e-15 && a.1 == b.1);
        let spread = default_start(&k.grid, 1.0, 0.05);
        let c = vanishing_diagnostic(&spread);
        assert!(c.0 > a.0 && c.1 > a.1);
    }
}
