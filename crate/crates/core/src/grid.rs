//! Radial discretisation of ℝ^N: nodes, quadrature weights, sector operators and the
//! quadratic form ∫|∇u|² + V_{μ,ν}|u|².
//!
//! Nodes sit at the midpoints ξ_i = (i − ½)Δξ of a uniform grid in a stretched
//! coordinate ξ ∈ [0, 1], with r = L·sinh(aξ) (or r = r_max·ξ) and Δξ = 1/(M − ½),
//! so that the last node is r_max itself and carries the Dirichlet condition.
//! Weights are the midpoint rule in ξ applied to |S^{N−1}| r^{N−1} r'(ξ).

use crate::constants::ProblemParams;
use crate::error::{LabError, Result};
use crate::linalg::SymTridiag;
use crate::special::gamma_unchecked;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

/// Node distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Grading {
    /// r = core·sinh(aξ): uniform spacing ≈ core·a·Δξ inside r ≲ core, geometric beyond.
    Sinh { core: f64 },
    /// r = r_max·ξ.
    Uniform,
}

impl Default for Grading {
    fn default() -> Self {
        Grading::Sinh { core: 1.0 }
    }
}

/// Everything needed to rebuild a grid bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub r_max: f64,
    pub m: usize,
    pub grading: Grading,
}

impl GridSpec {
    pub fn new(dim: usize, r_max: f64, m: usize, grading: Grading) -> Self {
        GridSpec { dim, r_max, m, grading }
    }

    /// A short stable text form used in headers and cache keys.
    pub fn descriptor(&self) -> String {
        match self.grading {
            Grading::Sinh { core } => {
                format!("N={} r_max={} M={} grading=sinh core={}", self.dim, self.r_max, self.m, core)
            }
            Grading::Uniform => {
                format!("N={} r_max={} M={} grading=uniform", self.dim, self.r_max, self.m)
            }
        }
    }
}

/// Surface area |S^{N−1}| = 2π^{N/2}/Γ(N/2).
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_unchecked(n as f64 / 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub spec: GridSpec,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Cell boundaries: `faces[0] = 0`, `faces[M] = r_max`; node i (0-based) lies in `[faces[i], faces[i+1]]`.
    pub faces: Vec<f64>,
    pub sphere: f64,
    dxi: f64,
    scale: f64,
}

impl RadialGrid {
    pub fn build(spec: GridSpec) -> Result<Arc<RadialGrid>> {
        let GridSpec { dim, r_max, m, grading } = spec;
        if dim < 3 {
            return Err(LabError::InvalidParams(format!("grid dimension must be >= 3, got {dim}")));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(LabError::InvalidParams(format!("r_max must be > 0, got {r_max}")));
        }
        if m < 16 {
            return Err(LabError::InvalidParams(format!("M must be >= 16, got {m}")));
        }
        let scale = match grading {
            Grading::Sinh { core } => {
                if !(core > 0.0) || !core.is_finite() {
                    return Err(LabError::InvalidParams(format!("core length must be > 0, got {core}")));
                }
                (r_max / core).asinh()
            }
            Grading::Uniform => 1.0,
        };
        let dxi = 1.0 / (m as f64 - 0.5);
        let sphere = sphere_area(dim);
        let mut grid = RadialGrid {
            spec,
            nodes: Vec::with_capacity(m),
            weights: Vec::with_capacity(m),
            faces: Vec::with_capacity(m + 1),
            sphere,
            dxi,
            scale,
        };
        for i in 0..m {
            let xi = (i as f64 + 0.5) * dxi;
            let r = if i + 1 == m { r_max } else { grid.map(xi) };
            let mut w = sphere * r.powi(dim as i32 - 1) * grid.map_derivative(xi) * dxi;
            if i + 1 == m {
                w *= 0.5;
            }
            grid.nodes.push(r);
            grid.weights.push(w);
        }
        grid.faces.push(0.0);
        for i in 1..m {
            grid.faces.push(grid.map(i as f64 * dxi));
        }
        grid.faces.push(r_max);
        Ok(Arc::new(grid))
    }

    fn map(&self, xi: f64) -> f64 {
        match self.spec.grading {
            Grading::Sinh { core } => core * (self.scale * xi).sinh(),
            Grading::Uniform => self.spec.r_max * xi,
        }
    }

    fn map_derivative(&self, xi: f64) -> f64 {
        match self.spec.grading {
            Grading::Sinh { core } => core * self.scale * (self.scale * xi).cosh(),
            Grading::Uniform => self.spec.r_max,
        }
    }

    fn inverse_map(&self, r: f64) -> f64 {
        match self.spec.grading {
            Grading::Sinh { core } => (r / core).asinh() / self.scale,
            Grading::Uniform => r / self.spec.r_max,
        }
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.spec.r_max
    }

    /// Volume of the ball B_R: the quadrature of its indicator with the cell containing
    /// R clipped in the stretched coordinate.
    pub fn ball_volume(&self, radius: f64) -> f64 {
        let xr = self.inverse_map(radius.min(self.r_max()));
        let mut vol = 0.0;
        let m = self.len();
        for i in 0..m {
            let lo = i as f64 * self.dxi;
            let hi = if i + 1 == m { 1.0 } else { (i as f64 + 1.0) * self.dxi };
            let full_width = if i + 1 == m { 0.5 * self.dxi } else { self.dxi };
            if xr >= hi {
                vol += self.weights[i];
            } else if xr > lo {
                vol += self.weights[i] * (xr - lo) / full_width;
                break;
            } else {
                break;
            }
        }
        vol
    }

    /// Exact volume of the shell between `faces[i]` and `faces[i+1]`.
    pub fn cell_volume(&self, i: usize) -> f64 {
        let nf = self.dim() as i32;
        self.sphere * (self.faces[i + 1].powi(nf) - self.faces[i].powi(nf)) / self.dim() as f64
    }

    /// Diagonal of the weighted L² form with weight 1/(ν² + r²).
    pub fn potential_weights(&self, nu: f64) -> Vec<f64> {
        self.nodes.iter().zip(&self.weights).map(|(r, w)| w / (nu * nu + r * r)).collect()
    }

    pub fn check_same(&self, other: &RadialGrid) -> Result<()> {
        if self.spec != other.spec {
            return Err(LabError::GridMismatch(format!("{} vs {}", self.spec.descriptor(), other.spec.descriptor())));
        }
        Ok(())
    }
}

/// Values of a radial profile on a grid, tagged with its angular sector ℓ.
#[derive(Debug, Clone)]
pub struct RadialFn {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub sector: usize,
}

impl RadialFn {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, sector: usize) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::GridMismatch(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::InvalidParams(format!("non-finite value at node {i}")));
        }
        Ok(RadialFn { grid, values, sector })
    }

    pub fn zeros(grid: Arc<RadialGrid>, sector: usize) -> Self {
        let m = grid.len();
        RadialFn { grid, values: vec![0.0; m], sector }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<RadialGrid>, sector: usize, f: F) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        RadialFn { grid, values, sector }
    }

    pub fn scaled(&self, t: f64) -> RadialFn {
        RadialFn { grid: self.grid.clone(), values: self.values.iter().map(|v| t * v).collect(), sector: self.sector }
    }

    /// Value at an arbitrary radius by four-point Lagrange interpolation in the stretched
    /// coordinate, with the even reflection u(−r) = u(r) at the origin and zero beyond r_max.
    pub fn interpolate(&self, r: f64) -> f64 {
        let g = &self.grid;
        let r = r.abs();
        if r >= g.r_max() {
            return 0.0;
        }
        let m = g.len() as isize;
        // node i sits at ξ = (i + ½)Δξ in zero-based indexing
        let x = g.inverse_map(r) / g.dxi - 0.5;
        let base = x.floor() as isize - 1;
        let value = |k: isize| -> f64 {
            let k = if k < 0 { -1 - k } else { k };
            if k >= m {
                0.0
            } else {
                self.values[k as usize]
            }
        };
        let mut acc = 0.0;
        for a in 0..4 {
            let xa = (base + a) as f64;
            let mut l = 1.0;
            for b in 0..4 {
                if a != b {
                    let xb = (base + b) as f64;
                    l *= (x - xb) / (xa - xb);
                }
            }
            acc += l * value(base + a);
        }
        acc
    }

    /// The L²-preserving dilation r ↦ λ^{N/2} u(λr), by interpolation.
    pub fn dilated(&self, lambda: f64) -> RadialFn {
        let c = lambda.powf(self.grid.dim() as f64 / 2.0);
        let mut values: Vec<f64> = self.grid.nodes.iter().map(|&r| c * self.interpolate(lambda * r)).collect();
        if let Some(last) = values.last_mut() {
            *last = 0.0;
        }
        RadialFn { grid: self.grid.clone(), values, sector: self.sector }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn check_grid(&self, grid: &RadialGrid) -> Result<()> {
        if Arc::as_ptr(&self.grid) == grid as *const RadialGrid {
            return Ok(());
        }
        self.grid.check_same(grid)
    }

    /// Two-column CSV with a `#` header line carrying N, ℓ, r_max and M.
    pub fn to_csv(&self) -> String {
        let g = &self.grid;
        let mut s = String::with_capacity(48 * g.len());
        let _ = writeln!(s, "# N={} l={} r_max={} M={}", g.dim(), self.sector, g.r_max(), g.len());
        s.push_str("r,u\n");
        for (r, u) in g.nodes.iter().zip(&self.values) {
            let _ = writeln!(s, "{r:.17e},{u:.17e}");
        }
        s
    }

    /// Parses the output of [`RadialFn::to_csv`] against a grid with the same header data.
    pub fn from_csv(grid: Arc<RadialGrid>, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| LabError::InvalidParams("empty profile".into()))?;
        let mut sector = None;
        for tok in header.trim_start_matches('#').split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| LabError::InvalidParams(format!("bad header token {tok}")))?;
            let bad = || LabError::InvalidParams(format!("bad header value {tok}"));
            match k {
                "N" if v.parse::<usize>().map_err(|_| bad())? != grid.dim() => {
                    return Err(LabError::GridMismatch(format!("profile has {tok}")))
                }
                "M" if v.parse::<usize>().map_err(|_| bad())? != grid.len() => {
                    return Err(LabError::GridMismatch(format!("profile has {tok}")))
                }
                "r_max" if v.parse::<f64>().map_err(|_| bad())? != grid.r_max() => {
                    return Err(LabError::GridMismatch(format!("profile has {tok}")))
                }
                "l" => sector = Some(v.parse::<usize>().map_err(|_| bad())?),
                _ => {}
            }
        }
        let mut values = Vec::with_capacity(grid.len());
        for line in lines.skip(1) {
            let (_, u) = line.split_once(',').ok_or_else(|| LabError::InvalidParams(format!("bad profile line {line}")))?;
            values.push(u.trim().parse::<f64>().map_err(|e| LabError::InvalidParams(format!("bad value {u}: {e}")))?);
        }
        RadialFn::new(grid, values, sector.unwrap_or(0))
    }
}

/// Σ w_i f(r_i).
pub fn quadrature(grid: &RadialGrid, f: &RadialFn) -> Result<f64> {
    f.check_grid(grid)?;
    Ok(grid.weights.iter().zip(&f.values).map(|(w, v)| w * v).sum())
}

/// Σ w_i u(r_i)² / (ν² + r_i²).
pub fn weighted_l2(u: &RadialFn, nu: f64) -> f64 {
    let g = &u.grid;
    g.nodes.iter().zip(&g.weights).zip(&u.values).map(|((r, w), v)| w * v * v / (nu * nu + r * r)).sum()
}

/// Σ w_i u(r_i)².
pub fn l2_squared(u: &RadialFn) -> f64 {
    u.grid.weights.iter().zip(&u.values).map(|(w, v)| w * v * v).sum()
}

/// Discrete ∫|∇u|² (including the centrifugal part of sector ℓ).
pub fn dirichlet_energy(u: &RadialFn) -> f64 {
    let g = &u.grid;
    let n = g.dim() as i32;
    let nf = g.dim() as f64;
    let v = &u.values;
    let mut s = 0.0;
    for i in 0..g.len() - 1 {
        let (a, b) = (g.nodes[i], g.nodes[i + 1]);
        let du = v[i + 1] - v[i];
        s += g.sphere * (b.powi(n) - a.powi(n)) / (nf * (b - a) * (b - a)) * du * du;
    }
    if u.sector > 0 {
        let l = u.sector as f64;
        let cf = l * (l + nf - 2.0);
        let r1 = g.nodes[0];
        s += g.sphere * r1.powi(n) / nf * (v[0] / r1).powi(2);
        s += g.nodes.iter().zip(&g.weights).zip(v).map(|((r, w), x)| cf * w * x * x / (r * r)).sum::<f64>();
    }
    s
}

/// Q_{μ,ν}(u) = ∫|∇u|² + |u|² − μ|u|²/(ν²+r²); with μ = 0 this is the squared H¹ norm.
pub fn sobolev_q(u: &RadialFn, params: &ProblemParams) -> Result<f64> {
    if u.grid.dim() != params.n {
        return Err(LabError::GridMismatch(format!("grid dimension {} vs N = {}", u.grid.dim(), params.n)));
    }
    Ok(dirichlet_energy(u) + l2_squared(u) - params.mu * weighted_l2(u, params.nu))
}

/// The form of −Δ + 1 restricted to sector ℓ, on the interior unknowns r_1..r_{M−1}
/// (the node at r_max carries the Dirichlet condition).
#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub grid: Arc<RadialGrid>,
    pub sector: usize,
    /// Matrix A with uᵀAu = ∫|∇u|² + ℓ(ℓ+N−2)|u|²/r² + |u|².
    pub matrix: SymTridiag,
}

impl SectorOperator {
    pub fn unknowns(&self) -> usize {
        self.matrix.len()
    }

    /// Applies the operator L = W⁻¹A (W the quadrature weights) to the interior values of `u`.
    pub fn apply(&self, u: &RadialFn) -> Result<RadialFn> {
        u.check_grid(&self.grid)?;
        let n = self.unknowns();
        let au = self.matrix.matvec(&u.values[..n]);
        let mut out = vec![0.0; self.grid.len()];
        for i in 0..n {
            out[i] = au[i] / self.grid.weights[i];
        }
        RadialFn::new(self.grid.clone(), out, self.sector)
    }

    /// Weighted inner product ⟨Lu, v⟩_w = uᵀAv.
    pub fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.unknowns();
        self.matrix.bilinear(&u[..n], &v[..n])
    }
}

pub fn sector_operator(grid: &Arc<RadialGrid>, sector: usize) -> SectorOperator {
    let g = grid.as_ref();
    let n = g.len() - 1;
    let dim = g.dim() as i32;
    let nf = g.dim() as f64;
    let stiff: Vec<f64> = (0..g.len() - 1)
        .map(|i| {
            let (a, b) = (g.nodes[i], g.nodes[i + 1]);
            g.sphere * (b.powi(dim) - a.powi(dim)) / (nf * (b - a) * (b - a))
        })
        .collect();
    let l = sector as f64;
    let cf = l * (l + nf - 2.0);
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    for i in 0..n {
        let (r, w) = (g.nodes[i], g.weights[i]);
        d[i] = w * (1.0 + cf / (r * r)) + stiff[i];
        if i > 0 {
            d[i] += stiff[i - 1];
            e[i - 1] = -stiff[i - 1];
        }
    }
    if sector > 0 {
        let r1 = g.nodes[0];
        d[0] += g.sphere * r1.powi(dim) / nf / (r1 * r1);
    }
    SectorOperator { grid: grid.clone(), sector, matrix: SymTridiag::new(d, e) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn grid(n: usize, r_max: f64, m: usize) -> Arc<RadialGrid> {
        RadialGrid::build(GridSpec::new(n, r_max, m, Grading::default())).unwrap()
    }

    #[test]
    fn invariants() {
        let g = grid(3, 40.0, 200);
        assert!(g.nodes[0] > 0.0);
        assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*g.nodes.last().unwrap(), 40.0);
        assert!(g.weights.iter().all(|w| *w > 0.0));
        assert!(g.faces.windows(2).all(|w| w[1] > w[0]));
        assert!(RadialGrid::build(GridSpec::new(3, 40.0, 8, Grading::default())).is_err());
        assert!(RadialGrid::build(GridSpec::new(2, 40.0, 80, Grading::default())).is_err());
    }

    #[test]
    fn ball_volumes() {
        let g3 = grid(3, 40.0, 800);
        assert!(rel(g3.ball_volume(1.0), 4.0 * PI / 3.0) < 1e-4);
        let g4 = grid(4, 40.0, 800);
        assert!(rel(g4.ball_volume(1.0), PI * PI / 2.0) < 1e-4);
        for &r in &[0.3, 2.0, 7.5, 20.0] {
            assert!(rel(g3.ball_volume(r), 4.0 * PI / 3.0 * r.powi(3)) < 1e-4, "R = {r}");
        }
    }

    #[test]
    fn gaussian_and_moments() {
        let g = grid(3, 40.0, 800);
        let f = RadialFn::from_fn(g.clone(), 0, |r| (-r * r).exp());
        assert!(rel(quadrature(&g, &f).unwrap(), PI.powf(1.5)) < 1e-6);
        let f = RadialFn::from_fn(g.clone(), 0, |r| r * r * (-r).exp());
        assert!(rel(quadrature(&g, &f).unwrap(), 4.0 * PI * 24.0) < 1e-6);
        let z = RadialFn::zeros(g.clone(), 0);
        assert_eq!(quadrature(&g, &z).unwrap(), 0.0);
    }

    #[test]
    fn indicator_integrals() {
        let g = grid(3, 40.0, 800);
        let f = RadialFn::from_fn(g.clone(), 0, |r| if r < 1.0 { 1.0 } else { 0.0 });
        assert!(rel(quadrature(&g, &f).unwrap(), 4.0 * PI / 3.0) < 2e-2);
        assert!(rel(weighted_l2(&f, 1.0), 4.0 * PI * (1.0 - PI / 4.0)) < 2e-2);
        assert!(rel(weighted_l2(&f.scaled(2.0), 1.0), 4.0 * weighted_l2(&f, 1.0)) < 1e-14);
        assert_eq!(weighted_l2(&RadialFn::zeros(g, 0), 1.0), 0.0);
    }

    #[test]
    fn quadrature_order() {
        // ∫ e^{-r} dV in N = 3 equals 8π
        let exact = 8.0 * PI;
        let err = |m| {
            let g = grid(3, 60.0, m);
            let f = RadialFn::from_fn(g.clone(), 0, |r| (-r).exp());
            (quadrature(&g, &f).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(100), err(200));
        assert!(e1 / e2 >= 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn grid_mismatch_detected() {
        let g = grid(3, 40.0, 100);
        let h = grid(3, 40.0, 120);
        let f = RadialFn::zeros(h, 0);
        assert!(quadrature(&g, &f).is_err());
        assert!(RadialFn::new(g, vec![0.0; 5], 0).is_err());
    }

    #[test]
    fn operator_matches_form() {
        let g = grid(3, 40.0, 400);
        let u = RadialFn::from_fn(g.clone(), 0, |r| (-(r * r)).exp() * (1.0 + r));
        let op = sector_operator(&g, 0);
        let params = ProblemParams::new(3, 2.0, 0.0, 1.0).unwrap();
        let q = sobolev_q(&u, &params).unwrap();
        assert!(rel(op.form(&u.values, &u.values), q) < 1e-10);
        // ⟨Lu, u⟩_w reproduces the form
        let lu = op.apply(&u).unwrap();
        let ip: f64 = g.weights.iter().zip(&lu.values).zip(&u.values).map(|((w, a), b)| w * a * b).sum();
        assert!(rel(ip, q) < 1e-10);
        // symmetry of the banded representation under the weighted inner product
        let v = RadialFn::from_fn(g.clone(), 0, |r| 1.0 / (1.0 + r * r).powi(2));
        let a = op.form(&u.values, &v.values);
        let b = op.form(&v.values, &u.values);
        assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
    }

    #[test]
    fn sector_one_form_includes_centrifugal_term() {
        let g = grid(4, 30.0, 300);
        let u = RadialFn::from_fn(g.clone(), 1, |r| r * (-(r * r)).exp());
        let op = sector_operator(&g, 1);
        let params = ProblemParams::new(4, 2.0, 0.0, 1.0).unwrap();
        assert!(rel(op.form(&u.values, &u.values), sobolev_q(&u, &params).unwrap()) < 1e-10);
    }

    #[test]
    fn rayleigh_quotient_of_up() {
        // u_p = (1 + r²)^{-2} in N = 4: closed-form quotient 8.4
        let g = grid(4, 80.0, 1600);
        let u = RadialFn::from_fn(g.clone(), 0, |r| (1.0 + r * r).powi(-2));
        let params = ProblemParams::new(4, 2.0, 0.0, 1.0).unwrap();
        let ratio = sobolev_q(&u, &params).unwrap() / weighted_l2(&u, 1.0);
        assert!(rel(ratio, 8.4) < 1e-3, "ratio {ratio}");
    }

    #[test]
    fn csv_roundtrip() {
        let g = grid(3, 10.0, 40);
        let u = RadialFn::from_fn(g.clone(), 2, |r| (-r).exp() * r.sin());
        let text = u.to_csv();
        assert!(text.starts_with("# N=3 l=2 r_max=10 M=40"));
        let v = RadialFn::from_csv(g.clone(), &text).unwrap();
        assert_eq!(u.values, v.values);
        assert_eq!(v.sector, 2);
        let h = grid(3, 10.0, 41);
        assert!(RadialFn::from_csv(h, &text).is_err());
    }
}
