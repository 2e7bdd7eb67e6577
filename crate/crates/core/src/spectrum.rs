//! The weighted eigenproblem −Δφ + φ = λ (ν² + |x|²)^{−1} φ, sector by sector.
//!
//! Each sector ℓ gives a symmetric tridiagonal pencil (A_ℓ, B) with B = diag(w_i/(ν²+r_i²)).
//! Eigenvalues come from Sturm-count bisection on LDLᵀ(A_ℓ − σB), eigenvectors from
//! shifted inverse iteration started just below the bisected value.

use crate::constants::critical_mu_values;
use crate::error::{LabError, Result};
use crate::grid::{dirichlet_energy, l2_squared, sector_operator, weighted_l2, GridSpec, RadialFn, RadialGrid, SectorOperator};
use crate::linalg::{SpdFactor, SymTridiag};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::sync::Arc;

pub const DEFAULT_L_MAX: usize = 8;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub sector: usize,
    /// Dimension of the spherical harmonics of degree ℓ in ℝ^N.
    pub multiplicity: usize,
    /// Radial part, normalised so that ∫ φ²/(ν²+r²) = 1.
    pub func: RadialFn,
    /// ‖Aφ − λBφ‖ measured as (Σ_i res_i²/w_i)^{1/2}.
    pub residual: f64,
    pub decay: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub nu: f64,
    pub pairs: Vec<EigenPair>,
    pub l_max: usize,
    pub grid: GridSpec,
    pub warnings: Vec<String>,
    operators: Vec<SectorOperator>,
}

/// dim of degree-ℓ harmonics on S^{N−1}: C(ℓ+N−1, N−1) − C(ℓ+N−3, N−1).
pub fn harmonic_dimension(n: usize, l: usize) -> usize {
    fn binom(a: usize, b: usize) -> usize {
        if b > a {
            return 0;
        }
        let b = b.min(a - b);
        (0..b).fold(1usize, |acc, k| acc * (a - k) / (k + 1))
    }
    binom(l + n - 1, n - 1) - if l >= 2 { binom(l + n - 3, n - 1) } else { 0 }
}

/// The pencil in symmetrically scaled form: Â = W^{−1/2} A W^{−1/2}, B̂ = diag(1/(ν²+r²)),
/// acting on y = W^{1/2}x. Uniform row scales keep the pivoted solves accurate near r = 0,
/// where the raw rows are tiny.
struct Pencil {
    op: SectorOperator,
    a: SymTridiag,
    b: Vec<f64>,
    sqrt_w: Vec<f64>,
}

impl Pencil {
    fn new(grid: &Arc<RadialGrid>, nu: f64, sector: usize) -> Self {
        let op = sector_operator(grid, sector);
        let n = op.unknowns();
        let sqrt_w: Vec<f64> = grid.weights[..n].iter().map(|w| w.sqrt()).collect();
        let d = (0..n).map(|i| op.matrix.d[i] / (sqrt_w[i] * sqrt_w[i])).collect();
        let e = (0..n.saturating_sub(1)).map(|i| op.matrix.e[i] / (sqrt_w[i] * sqrt_w[i + 1])).collect();
        let b = grid.nodes[..n].iter().map(|r| 1.0 / (nu * nu + r * r)).collect();
        Pencil { op, a: SymTridiag::new(d, e), b, sqrt_w }
    }

    fn a(&self) -> &SymTridiag {
        &self.a
    }

    fn upper_bound(&self) -> f64 {
        let a = self.a();
        let n = a.len();
        (0..n)
            .map(|i| {
                let mut s = a.d[i] / self.b[i];
                if i > 0 {
                    s += a.e[i - 1].abs() / (self.b[i] * self.b[i - 1]).sqrt();
                }
                if i + 1 < n {
                    s += a.e[i].abs() / (self.b[i] * self.b[i + 1]).sqrt();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// k-th eigenvalue (0-based) by bisection on the Sturm count.
    fn eigenvalue(&self, k: usize) -> f64 {
        let mut lo = 0.0;
        let mut hi = self.upper_bound();
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.a().count_below(mid, &self.b) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn b_dot(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).zip(&self.b).map(|((a, b), w)| a * b * w).sum()
    }

    /// Euclidean residual in scaled variables, which equals (Σ res_i²/w_i)^{1/2} in raw ones.
    fn residual(&self, y: &[f64], lambda: f64) -> f64 {
        let ay = self.a().matvec(y);
        ay.iter().zip(y).zip(&self.b).map(|((a, v), b)| (a - lambda * b * v).powi(2)).sum::<f64>().sqrt()
    }

    fn eigenvector(&self, k: usize, lambda: f64, lower: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
        let n = self.a().len();
        let shift = lambda - 1e-9 * lambda.abs().max(1.0);
        let shifted = self.a().shifted(shift, &self.b);
        let spd = if k == 0 { SpdFactor::new(&shifted) } else { None };
        let mut y: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i % 7) as f64)).collect();
        let mut lam = lambda;
        // a fixed number of sweeps: besides the residual, the far tail needs every sweep
        // to shed the relative contamination left by the start vector
        for _ in 0..MAX_SWEEPS {
            let rhs: Vec<f64> = y.iter().zip(&self.b).map(|(v, b)| v * b).collect();
            y = match &spd {
                Some(f) => f.solve(&rhs),
                None => shifted.solve(&rhs).ok_or_else(|| LabError::NonConvergence {
                    what: format!("inverse iteration in sector {}", self.op.sector),
                    iterations: 0,
                    residual: f64::NAN,
                })?,
            };
            for q in lower {
                let c = self.b_dot(&y, q);
                y.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
            let nrm = self.b_dot(&y, &y).sqrt();
            y.iter_mut().for_each(|v| *v /= nrm);
            lam = self.a().quad_form(&y);
        }
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(first) = y.iter().find(|v| v.abs() > 1e-3 * peak) {
            if *first < 0.0 {
                y.iter_mut().for_each(|v| *v = -*v);
            }
        }
        Ok((lam, y))
    }

    fn unscale(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.sqrt_w).map(|(v, s)| v / s).collect()
    }
}

const MAX_SWEEPS: usize = 6;

fn solve_sector(grid: &Arc<RadialGrid>, nu: f64, sector: usize, count: usize) -> Result<(SectorOperator, Vec<EigenPair>)> {
    let pencil = Pencil::new(grid, nu, sector);
    let mult = harmonic_dimension(grid.dim(), sector);
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut pairs = Vec::with_capacity(count);
    for k in 0..count.min(pencil.a().len()) {
        let guess = pencil.eigenvalue(k);
        let (lambda, y) = pencil.eigenvector(k, guess, &vecs)?;
        let residual = pencil.residual(&y, lambda);
        if !(residual <= 1e-8) {
            return Err(LabError::NonConvergence {
                what: format!("eigenpair {k} of sector {sector}"),
                iterations: MAX_SWEEPS,
                residual,
            });
        }
        let mut values = pencil.unscale(&y);
        values.push(0.0);
        let func = RadialFn::new(grid.clone(), values, sector)?;
        let decay = decay_rate(&func).ok();
        vecs.push(y);
        pairs.push(EigenPair { lambda, sector, multiplicity: mult, func, residual, decay });
    }
    Ok((pencil.op, pairs))
}

/// Lowest `count` radial eigenpairs across sectors 0..=ℓ_max, ascending, ties ordered by sector.
pub fn solve_spectrum(grid: &Arc<RadialGrid>, nu: f64, l_max: usize, count: usize) -> Result<SpectrumResult> {
    if count == 0 {
        return Err(LabError::InvalidParams("count must be >= 1".into()));
    }
    if !(nu > 0.0) {
        return Err(LabError::InvalidParams(format!("nu must be > 0, got {nu}")));
    }
    let sectors: Vec<(SectorOperator, Vec<EigenPair>)> =
        (0..=l_max).into_par_iter().map(|l| solve_sector(grid, nu, l, count)).collect::<Result<_>>()?;
    let top_sector_min = sectors[l_max].1.first().map(|p| p.lambda);
    let mut operators = Vec::with_capacity(l_max + 1);
    let mut pairs = Vec::new();
    for (op, ps) in sectors {
        operators.push(op);
        pairs.extend(ps);
    }
    pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.sector.cmp(&b.sector)));
    pairs.truncate(count);
    let mut warnings = Vec::new();
    if let (Some(top), Some(last)) = (top_sector_min, pairs.last()) {
        if last.lambda >= 0.95 * top {
            warnings.push(format!(
                "spectrum may be incomplete: largest reported eigenvalue {:.6} is within 5% of the lowest eigenvalue {:.6} of sector l_max = {l_max}",
                last.lambda, top
            ));
        }
    }
    Ok(SpectrumResult { nu, pairs, l_max, grid: grid.spec, warnings, operators })
}

impl SpectrumResult {
    pub fn lambda1(&self) -> f64 {
        self.pairs[0].lambda
    }

    pub fn operator(&self, sector: usize) -> &SectorOperator {
        &self.operators[sector]
    }

    /// H¹ inner product ∫∇φ_i·∇φ_j + φ_iφ_j of the full eigenfunctions φ(r)Y_ℓ(ω); pairs from
    /// different sectors are orthogonal through their angular parts.
    pub fn h1_inner(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.pairs[i], &self.pairs[j]);
        if a.sector != b.sector {
            return 0.0;
        }
        self.operators[a.sector].form(&a.func.values, &b.func.values)
    }

    /// λ_n with multiplicities: the eigenvalue at full-space position `index` (1-based).
    pub fn lambda_with_multiplicity(&self, index: usize) -> Option<f64> {
        let mut seen = 0;
        for p in &self.pairs {
            seen += p.multiplicity;
            if seen >= index {
                return Some(p.lambda);
            }
        }
        None
    }

    /// CSV with columns (index, lambda, sector, multiplicity, residual, decay_delta).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,lambda,sector,multiplicity,residual,decay_delta\n");
        for (i, p) in self.pairs.iter().enumerate() {
            let decay = p.decay.map(|d| format!("{d:.12e}")).unwrap_or_else(|| "NA".into());
            let _ = writeln!(s, "{},{:.15e},{},{},{:.6e},{}", i + 1, p.lambda, p.sector, p.multiplicity, p.residual, decay);
        }
        s
    }
}

/// μ^ν = λ₁, the lowest sector-0 eigenvalue.
pub fn best_embedding_constant(grid: &Arc<RadialGrid>, nu: f64) -> Result<f64> {
    let (_, pairs) = solve_sector(grid, nu, 0, 1)?;
    Ok(pairs[0].lambda)
}

/// Ground sector-0 eigenpair (λ₁, φ₁) without the rest of the spectrum.
pub fn ground_pair(grid: &Arc<RadialGrid>, nu: f64) -> Result<EigenPair> {
    let (_, mut pairs) = solve_sector(grid, nu, 0, 1)?;
    Ok(pairs.remove(0))
}

/// Exponential decay rate from a least-squares fit of log|φ| over the outer quarter of the
/// range where the tail is numerically resolved (below 0.9 r_max, above floating noise).
pub fn decay_rate(phi: &RadialFn) -> Result<f64> {
    let g = &phi.grid;
    let peak = phi.max_abs();
    if !(peak > 0.0) {
        return Err(LabError::ZeroInput("decay rate of the zero function".into()));
    }
    let floor = 1e-250 * peak;
    let limit = 0.9 * g.r_max();
    let hi = g.nodes.iter().zip(&phi.values).take_while(|(r, v)| **r <= limit && v.abs() >= floor).count();
    if hi < 8 {
        return Err(LabError::InvalidParams("tail below floating noise: no decay estimate".into()));
    }
    let r_hi = g.nodes[hi - 1];
    let r_lo = 0.75 * r_hi;
    let pts: Vec<(f64, f64)> =
        g.nodes[..hi].iter().zip(&phi.values[..hi]).filter(|(r, _)| **r >= r_lo).map(|(r, v)| (*r, v.abs().ln())).collect();
    if pts.len() < 5 {
        return Err(LabError::InvalidParams("too few tail nodes for a decay estimate".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let delta = -sxy / sxx;
    if !(delta > 0.0) {
        return Err(LabError::InvalidParams(format!("non-decaying tail (slope {delta})")));
    }
    Ok(delta)
}

/// 2Np²/(2p+1) + 4ν²p/(4p−N): Rayleigh quotient of u_p = ν^{2p}(ν²+r²)^{−p}, valid for p > N/4.
pub fn rayleigh_formula(n: usize, nu: f64, p: f64) -> f64 {
    let nf = n as f64;
    2.0 * nf * p * p / (2.0 * p + 1.0) + 4.0 * nu * nu * p / (4.0 * p - nf)
}

/// The closed form on the range p ≥ 2, p > N/4.
pub fn rayleigh_up_closed(n: usize, nu: f64, p: f64) -> Result<f64> {
    if n < 3 || !(nu > 0.0) {
        return Err(LabError::Domain(format!("need N >= 3 and nu > 0, got ({n}, {nu})")));
    }
    if !(p >= 2.0 && p > n as f64 / 4.0) || !p.is_finite() {
        return Err(LabError::Domain(format!("p must satisfy p >= 2 and p > N/4 = {}, got {p}", n as f64 / 4.0)));
    }
    Ok(rayleigh_formula(n, nu, p))
}

/// Rayleigh quotient ∫(|∇u|² + u²) / ∫u²/(ν²+r²) of u_p = ν^{2p}(ν²+r²)^{−p} on the grid, with
/// u_p cut to zero at r_max.
pub fn rayleigh_up_discrete(grid: &Arc<RadialGrid>, nu: f64, p: f64) -> Result<f64> {
    if !(nu > 0.0) || !(p > grid.dim() as f64 / 4.0) {
        return Err(LabError::Domain(format!("need nu > 0 and p > N/4, got ({nu}, {p})")));
    }
    let mut u = RadialFn::from_fn(grid.clone(), 0, |r| (nu * nu / (nu * nu + r * r)).powf(p));
    if let Some(last) = u.values.last_mut() {
        *last = 0.0;
    }
    Ok((dirichlet_energy(&u) + l2_squared(&u)) / weighted_l2(&u, nu))
}

/// Golden-section minimisation of the closed form over p > N/4 (the formula is convex there).
pub fn minimize_rayleigh(n: usize, nu: f64) -> (f64, f64) {
    let nf = n as f64;
    let f = |p: f64| rayleigh_formula(n, nu, p);
    let mut a = nf / 4.0 + 1e-9;
    let mut b = nf / 4.0 + 4.0 + nf + nu;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let p = 0.5 * (a + b);
    (p, f(p))
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticRow {
    pub n: usize,
    pub target: f64,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
    pub p_star: f64,
    pub width: f64,
    pub contains_one: bool,
}

/// Bracket [ (ν²+(N−2)²/4)/T, min_p R(p)/T ] around 1 with T = N²(N−2)/(4(N+1)).
pub fn asymptotic_ratio_table(n_list: &[usize], nu: f64) -> Result<Vec<AsymptoticRow>> {
    n_list
        .iter()
        .map(|&n| {
            let crit = critical_mu_values(n, nu)?;
            let (p_star, upper) = minimize_rayleigh(n, nu);
            let lower_ratio = crit.hardy_plus_nu2 / crit.mv_threshold;
            let upper_ratio = upper / crit.mv_threshold;
            Ok(AsymptoticRow {
                n,
                target: crit.mv_threshold,
                lower_ratio,
                upper_ratio,
                p_star,
                width: upper_ratio - lower_ratio,
                contains_one: lower_ratio <= 1.0 && 1.0 <= upper_ratio,
            })
        })
        .collect()
}

/// Residual (Σ r_i²/w_i)^{1/2} of the generalised problem for an arbitrary interior vector.
pub fn pencil_residual(op: &SectorOperator, nu: f64, x: &[f64], lambda: f64) -> f64 {
    let n = op.unknowns();
    let b = op.grid.potential_weights(nu);
    let ax = op.matrix.matvec(&x[..n]);
    (0..n)
        .map(|i| {
            let r = ax[i] - lambda * b[i] * x[i];
            r * r / op.grid.weights[i]
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grading;

    fn grid(n: usize, r_max: f64, m: usize) -> Arc<RadialGrid> {
        RadialGrid::build(GridSpec::new(n, r_max, m, Grading::default())).unwrap()
    }

    #[test]
    fn harmonic_dimensions() {
        assert_eq!(harmonic_dimension(3, 0), 1);
        assert_eq!(harmonic_dimension(3, 1), 3);
        assert_eq!(harmonic_dimension(3, 2), 5);
        assert_eq!(harmonic_dimension(4, 1), 4);
        assert_eq!(harmonic_dimension(4, 2), 9);
        assert_eq!(harmonic_dimension(5, 3), 30);
    }

    #[test]
    fn closed_form_examples() {
        assert!((rayleigh_up_closed(4, 1.0, 2.0).unwrap() - 8.4).abs() < 1e-12);
        assert!(rayleigh_up_closed(3, 1.0, 1.75).is_err());
        assert!((rayleigh_up_closed(12, 1.0, 4.0).unwrap() - (2.0 * 12.0 * 16.0 / 9.0 + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_minimum_against_scan() {
        for &(n, nu) in &[(3usize, 1.0), (4, 1.0), (5, 2.0), (200, 1.0)] {
            let (p, v) = minimize_rayleigh(n, nu);
            let lo = n as f64 / 4.0;
            let scan = (1..2_000_000)
                .map(|k| lo + k as f64 * 1e-4)
                .take_while(|p| *p < lo + 100.0)
                .map(|p| rayleigh_formula(n, nu, p))
                .fold(f64::INFINITY, f64::min);
            assert!(v <= scan + 1e-9 && v >= scan - 1e-6, "N={n}: {v} vs {scan}");
            assert!(p > lo);
            let crit = critical_mu_values(n, nu).unwrap();
            assert!(v >= crit.hardy_plus_nu2);
        }
        let (_, v3) = minimize_rayleigh(3, 1.0);
        assert!((v3 - 5.176_029).abs() < 1e-5);
        assert!(v3 <= 70.0 / 12.0);
    }

    #[test]
    fn asymptotic_brackets() {
        let t = asymptotic_ratio_table(&[10, 25, 50, 100, 200, 400], 1.0).unwrap();
        assert!(t.iter().all(|r| r.contains_one));
        assert!(t[5].width < t[3].width);
        assert!(t[4].width <= 0.05);
        assert!(t[4].lower_ratio >= 0.99 && t[4].upper_ratio <= 1.04);
    }

    #[test]
    fn ground_state_inside_bracket_and_positive() {
        let g = grid(3, 40.0, 800);
        let s = solve_spectrum(&g, 1.0, 2, 3).unwrap();
        let l1 = s.lambda1();
        assert!(l1 > 1.25 && l1 < 5.176_03, "lambda1 = {l1}");
        assert_eq!(s.pairs[0].sector, 0);
        let phi = &s.pairs[0].func;
        assert!(phi.values[..g.len() - 1].iter().all(|v| *v > 0.0));
        for p in &s.pairs {
            assert!(p.residual <= 1e-8);
            assert!((crate::grid::weighted_l2(&p.func, 1.0) - 1.0).abs() < 1e-8);
        }
        assert!(s.pairs.windows(2).all(|w| w[0].lambda <= w[1].lambda));
    }

    #[test]
    fn sector_one_lies_above_sector_zero() {
        let g = grid(4, 40.0, 400);
        let s0 = solve_sector(&g, 1.0, 0, 1).unwrap().1[0].lambda;
        let s1 = solve_sector(&g, 1.0, 1, 1).unwrap().1[0].lambda;
        assert!(s1 >= s0);
    }

    #[test]
    fn embedding_constant_monotone_in_nu() {
        let g = grid(4, 80.0, 800);
        let a = best_embedding_constant(&g, 1.0).unwrap();
        let b = best_embedding_constant(&g, 2.0).unwrap();
        assert!(a > 2.0 && a < 8.4);
        assert!(b > a);
    }

    #[test]
    fn decay_of_ground_state() {
        let g = grid(3, 40.0, 800);
        let phi = ground_pair(&g, 1.0).unwrap();
        let d = decay_rate(&phi.func).unwrap();
        assert!((d - 1.0).abs() < 0.1, "delta = {d}");
        assert!(decay_rate(&RadialFn::zeros(g, 0)).is_err());
    }

    #[test]
    fn discrete_rayleigh_quotient_of_u_p() {
        for (n, p) in [(4usize, 2.0), (3, 3.0), (12, 4.0)] {
            let g = RadialGrid::build(GridSpec::new(n, 80.0, 1600, Grading::Sinh { core: 1.0 })).unwrap();
            let d = rayleigh_up_discrete(&g, 1.0, p).unwrap();
            let c = rayleigh_formula(n, 1.0, p);
            assert!(((d - c) / c).abs() < 1e-3, "N = {n}: {d} vs {c}");
        }
    }
}
