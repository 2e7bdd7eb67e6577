//! The radial Riesz potential f ↦ I_α ∗ f, the constraint functional
//! G(u) = ∫ (I_α ∗ |u|^p)|u|^p with p = (N+α)/N, its gradient and the ∗-norm.
//!
//! The kernel is assembled as a Galerkin matrix on the grid cells:
//! E_ij = A_α |S^{N−1}|² ∫_{cell i}∫_{cell j} k(r,s) r^{N−1}s^{N−1} dr ds, where
//! k(r,s) = max(r,s)^{α−N} h(min/max) is the spherical mean of |re − sω|^{α−N}
//! and h(z) = ₂F₁(β, β−N/2+1; N/2; z²), β = (N−α)/2. Realising G as sᵀEs with
//! s = |u|^p makes the discrete form positive semidefinite by construction.
//! The kernel values are K_ij = E_ij/(w_i w_j), so (I_α∗f)(r_i) ≈ Σ_j K_ij w_j f_j.

use crate::constants::{exponent, riesz_constant, ProblemParams};
use crate::error::{LabError, Result};
use crate::grid::{RadialFn, RadialGrid};
use crate::special::{gamma_unchecked, GaussLegendre};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

const SERIES_LIMIT: f64 = 0.9;
const SINGULAR_ORDER: usize = 16;
const CACHE_MAGIC: &[u8; 8] = b"CHQKRNL\0";
const CACHE_VERSION: u32 = 1;

/// Spherical mean h of |e − zω|^{−2β} over ω ∈ S^{N−1}, for 0 ≤ z < 1.
#[derive(Debug, Clone)]
pub struct AngularMean {
    n: usize,
    beta: f64,
    b: f64,
    c: f64,
    norm: f64,
    gl: GaussLegendre,
}

impl AngularMean {
    pub fn new(n: usize, alpha: f64) -> Self {
        let nf = n as f64;
        let beta = (nf - alpha) / 2.0;
        AngularMean {
            n,
            beta,
            b: beta - nf / 2.0 + 1.0,
            c: nf / 2.0,
            norm: gamma_unchecked(nf / 2.0) / (PI.sqrt() * gamma_unchecked((nf - 1.0) / 2.0)),
            gl: GaussLegendre::new(12),
        }
    }

    /// h(z) with `gap = 1 − z` supplied separately so that z → 1 keeps full precision.
    pub fn eval(&self, z: f64, gap: f64) -> f64 {
        if z <= SERIES_LIMIT {
            self.series(z * z)
        } else {
            self.polar(z, gap)
        }
    }

    fn series(&self, x: f64) -> f64 {
        let (a, b, c) = (self.beta, self.b, self.c);
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        loop {
            term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x;
            sum += term;
            k += 1.0;
            if term.abs() <= 1e-17 * sum.abs() || k > 2000.0 {
                break;
            }
        }
        sum
    }

    /// c_N ∫₀^π ((1−z)² + 4z sin²(θ/2))^{−β} sin^{N−2}θ dθ on dyadic intervals
    /// anchored at the width θ_c = (1−z)/√z of the near-singular region.
    fn polar(&self, z: f64, gap: f64) -> f64 {
        let gap = gap.max(f64::MIN_POSITIVE);
        let theta_c = (gap / z.sqrt()).min(PI);
        let integrand = |t: f64| {
            let s = (0.5 * t).sin();
            let d = gap * gap + 4.0 * z * s * s;
            d.powf(-self.beta) * t.sin().powi(self.n as i32 - 2)
        };
        let mut total = self.gl.integrate(0.0, theta_c, integrand);
        let mut lo = theta_c;
        while lo < PI {
            let hi = (2.0 * lo).min(PI);
            total += self.gl.integrate(lo, hi, integrand);
            lo = hi;
        }
        self.norm * total
    }
}

/// Precomputed discrete Riesz potential on a radial grid.
#[derive(Debug, Clone)]
pub struct RieszKernel {
    pub grid: Arc<RadialGrid>,
    pub alpha: f64,
    /// Row-major M×M kernel values K(r_i, r_j).
    pub values: Vec<f64>,
}

struct CellIntegrator<'a> {
    grid: &'a RadialGrid,
    mean: AngularMean,
    n: i32,
    exponent: f64,
    grade: i32,
    g4: GaussLegendre,
    g6: GaussLegendre,
    g10: GaussLegendre,
    gs: Vec<(f64, f64)>,
}

impl<'a> CellIntegrator<'a> {
    fn new(grid: &'a RadialGrid, alpha: f64) -> Self {
        let grade = ((4.0 / alpha).ceil() as i32).clamp(3, 8);
        let g = GaussLegendre::new(10);
        // rule on (0,1) for the graded variable t ↦ t^grade
        let sing = GaussLegendre::new(SINGULAR_ORDER);
        let gs = sing
            .nodes
            .iter()
            .zip(&sing.weights)
            .map(|(x, w)| {
                let t = 0.5 * (x + 1.0);
                (t, 0.5 * w)
            })
            .collect();
        CellIntegrator {
            grid,
            mean: AngularMean::new(grid.dim(), alpha),
            n: grid.dim() as i32,
            exponent: grid.dim() as f64 - alpha,
            grade,
            g4: GaussLegendre::new(4),
            g6: GaussLegendre::new(6),
            g10: g,
            gs,
        }
    }

    /// k(r,s)(rs)^{N−1} given r < s... in any order, with |r − s| = `delta` supplied exactly.
    fn kernel(&self, r: f64, s: f64, delta: f64) -> f64 {
        let (lo, hi) = if r < s { (r, s) } else { (s, r) };
        let z = lo / hi;
        hi.powf(-self.exponent) * self.mean.eval(z, delta / hi) * (r * s).powi(self.n - 1)
    }

    fn graded(&self, t: f64) -> (f64, f64) {
        let m = self.grade;
        (t.powi(m), m as f64 * t.powi(m - 1))
    }

    fn cell(&self, i: usize) -> (f64, f64) {
        (self.grid.faces[i], self.grid.faces[i + 1])
    }

    /// ∫_{cell i}∫_{cell j} k(r,s)(rs)^{N−1} dr ds (without A_α |S|²).
    fn pair(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        if i == j {
            self.diagonal(i)
        } else if j == i + 1 {
            self.adjacent(i)
        } else {
            self.separated(i, j)
        }
    }

    fn separated(&self, i: usize, j: usize) -> f64 {
        let (a, b) = self.cell(i);
        let (c, d) = self.cell(j);
        let ratio = (c - b) / (b - a).max(d - c);
        let gl = if ratio >= 6.0 {
            &self.g4
        } else if ratio >= 1.5 {
            &self.g6
        } else {
            &self.g10
        };
        let (hr, mr) = (0.5 * (b - a), 0.5 * (b + a));
        let (hs, ms) = (0.5 * (d - c), 0.5 * (d + c));
        let mut total = 0.0;
        for (xr, wr) in gl.nodes.iter().zip(&gl.weights) {
            let r = mr + hr * xr;
            let mut inner = 0.0;
            for (xs, ws) in gl.nodes.iter().zip(&gl.weights) {
                let s = ms + hs * xs;
                inner += ws * self.kernel(r, s, s - r);
            }
            total += wr * inner;
        }
        total * hr * hs
    }

    /// Cells [a,c] and [c,b] sharing the face c; Duffy split around the common corner.
    fn adjacent(&self, i: usize) -> f64 {
        let (a, c) = self.cell(i);
        let (_, b) = self.cell(i + 1);
        let (hi, hj) = (c - a, b - c);
        let mut total = 0.0;
        for &(tx, wx) in &self.gs {
            let (x, dx) = self.graded(tx);
            for &(y, wy) in &self.gs {
                // triangle where the left offset dominates, then the mirrored one
                let r = c - hi * x;
                let s = c + hj * x * y;
                let t1 = self.kernel(r, s, x * (hi + hj * y));
                let r = c - hi * x * y;
                let s = c + hj * x;
                let t2 = self.kernel(r, s, x * (hi * y + hj));
                total += wx * wy * dx * x * (t1 + t2);
            }
        }
        total * hi * hj
    }

    fn diagonal(&self, i: usize) -> f64 {
        let (a, b) = self.cell(i);
        let h = b - a;
        let mut total = 0.0;
        for &(tx, wx) in &self.gs {
            let (x, dx) = self.graded(tx);
            let r = a + h * x;
            for &(ty, wy) in &self.gs {
                let (y, dy) = self.graded(ty);
                let delta = h * x * y;
                total += wx * wy * dx * dy * x * self.kernel(r, r - delta, delta);
            }
        }
        2.0 * h * h * total
    }
}

impl RieszKernel {
    pub fn m(&self) -> usize {
        self.grid.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m() + j]
    }

    /// (I_α ∗ f)(r_i) = Σ_j K_ij w_j f_j on raw node values.
    pub fn apply_values(&self, f: &[f64]) -> Vec<f64> {
        let m = self.m();
        let wf: Vec<f64> = self.grid.weights.iter().zip(f).map(|(w, v)| w * v).collect();
        self.values.chunks_exact(m).map(|row| row.iter().zip(&wf).map(|(k, x)| k * x).sum()).collect()
    }

    /// G(u) on raw node values.
    pub fn g_values(&self, u: &[f64]) -> f64 {
        let p = exponent(self.grid.dim(), self.alpha);
        let s: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
        let conv = self.apply_values(&s);
        self.grid.weights.iter().zip(&s).zip(&conv).map(|((w, a), b)| w * a * b).sum()
    }

    /// G(u) together with the pointwise gradient density g = 2p (I∗|u|^p)|u|^{p−2}u,
    /// so that ∂G/∂u_i = w_i g_i.
    pub fn g_and_density(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let p = exponent(self.grid.dim(), self.alpha);
        let s: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
        let conv = self.apply_values(&s);
        let g = self.grid.weights.iter().zip(&s).zip(&conv).map(|((w, a), b)| w * a * b).sum();
        let dens =
            u.iter().zip(&conv).map(|(&x, c)| if x == 0.0 { 0.0 } else { 2.0 * p * c * x.abs().powf(p - 2.0) * x }).collect();
        (g, dens)
    }

    fn header(&self) -> Vec<u8> {
        header_bytes(&self.grid, self.alpha)
    }

    /// Writes the binary cache: header, then row-major little-endian f64 entries.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = self.header();
        buf.reserve(8 * self.values.len());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let tmp = path.with_extension("tmp");
        std::fs::File::create(&tmp)?.write_all(&buf)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Reloads a cache written by [`RieszKernel::save`] for exactly this grid and α.
    pub fn load(path: &Path, grid: &Arc<RadialGrid>, alpha: f64) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let header = header_bytes(grid, alpha);
        if bytes.len() < header.len() || bytes[..header.len()] != header[..] {
            return Err(LabError::Cache(format!(
                "{} does not match grid {} and alpha {alpha}",
                path.display(),
                grid.spec.descriptor()
            )));
        }
        let m = grid.len();
        let body = &bytes[header.len()..];
        if body.len() != 8 * m * m {
            return Err(LabError::Cache(format!("{} is truncated", path.display())));
        }
        let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
        Ok(RieszKernel { grid: grid.clone(), alpha, values })
    }
}

fn header_bytes(grid: &RadialGrid, alpha: f64) -> Vec<u8> {
    let mut h = Vec::with_capacity(64);
    h.extend_from_slice(CACHE_MAGIC);
    h.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    h.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    h.extend_from_slice(&alpha.to_bits().to_le_bytes());
    h.extend_from_slice(&(grid.len() as u64).to_le_bytes());
    h.extend_from_slice(&grid.r_max().to_bits().to_le_bytes());
    match grid.spec.grading {
        crate::grid::Grading::Sinh { core } => {
            h.push(1);
            h.extend_from_slice(&core.to_bits().to_le_bytes());
        }
        crate::grid::Grading::Uniform => {
            h.push(0);
            h.extend_from_slice(&0u64.to_le_bytes());
        }
    }
    h
}

/// File name under a cache directory identifying (N, α, grid).
pub fn cache_path(dir: &Path, grid: &RadialGrid, alpha: f64) -> PathBuf {
    let core = match grid.spec.grading {
        crate::grid::Grading::Sinh { core } => core.to_bits(),
        crate::grid::Grading::Uniform => 0,
    };
    dir.join(format!(
        "riesz_v{CACHE_VERSION}_N{}_a{:016x}_M{}_r{:016x}_c{:016x}.bin",
        grid.dim(),
        alpha.to_bits(),
        grid.len(),
        grid.r_max().to_bits(),
        core
    ))
}

/// Assembles the kernel; rows are distributed over the rayon pool.
pub fn build_kernel(grid: &Arc<RadialGrid>, alpha: f64) -> Result<RieszKernel> {
    let n = grid.dim();
    let a = riesz_constant(n, alpha)?;
    let m = grid.len();
    let integ = CellIntegrator::new(grid, alpha);
    let scale = a * grid.sphere * grid.sphere;
    let rows: Vec<Vec<f64>> = (0..m).into_par_iter().map(|i| (i..m).map(|j| scale * integ.pair(i, j)).collect()).collect();
    let mut values = vec![0.0; m * m];
    // K is the cell average of the kernel, so dividing by exact cell volumes rather than
    // by quadrature weights keeps it a pointwise approximation even next to the origin
    let vol: Vec<f64> = (0..m).map(|i| grid.cell_volume(i)).collect();
    for (i, row) in rows.iter().enumerate() {
        for (off, e) in row.iter().enumerate() {
            let j = i + off;
            if !(e.is_finite() && *e > 0.0) {
                return Err(LabError::Quadrature { i, j, reason: format!("cell integral evaluated to {e}") });
            }
            let k = e / (vol[i] * vol[j]);
            values[i * m + j] = k;
            values[j * m + i] = k;
        }
    }
    Ok(RieszKernel { grid: grid.clone(), alpha, values })
}

/// Loads the kernel from `dir` when a matching cache exists, otherwise builds and stores it.
pub fn build_kernel_cached(grid: &Arc<RadialGrid>, alpha: f64, dir: Option<&Path>) -> Result<RieszKernel> {
    let Some(dir) = dir else {
        return build_kernel(grid, alpha);
    };
    let path = cache_path(dir, grid, alpha);
    if path.exists() {
        if let Ok(k) = RieszKernel::load(&path, grid, alpha) {
            return Ok(k);
        }
    }
    let k = build_kernel(grid, alpha)?;
    std::fs::create_dir_all(dir)?;
    k.save(&path)?;
    Ok(k)
}

fn check(k: &RieszKernel, u: &RadialFn, params: Option<&ProblemParams>) -> Result<()> {
    u.check_grid(&k.grid)?;
    if let Some(p) = params {
        if p.n != k.grid.dim() || p.alpha != k.alpha {
            return Err(LabError::GridMismatch(format!(
                "kernel built for (N={}, alpha={}) used with (N={}, alpha={})",
                k.grid.dim(),
                k.alpha,
                p.n,
                p.alpha
            )));
        }
    }
    Ok(())
}

pub fn riesz_apply(k: &RieszKernel, f: &RadialFn) -> Result<RadialFn> {
    check(k, f, None)?;
    RadialFn::new(k.grid.clone(), k.apply_values(&f.values), f.sector)
}

pub fn g_functional(k: &RieszKernel, u: &RadialFn, params: &ProblemParams) -> Result<f64> {
    check(k, u, Some(params))?;
    Ok(k.g_values(&u.values))
}

/// ‖u‖_∗ = G(u)^{N/(2(N+α))}.
pub fn star_norm(k: &RieszKernel, u: &RadialFn, params: &ProblemParams) -> Result<f64> {
    let g = g_functional(k, u, params)?;
    Ok(g.powf(1.0 / (2.0 * params.p())))
}

pub fn g_gradient(k: &RieszKernel, u: &RadialFn, params: &ProblemParams) -> Result<RadialFn> {
    check(k, u, Some(params))?;
    let (_, dens) = k.g_and_density(&u.values);
    RadialFn::new(k.grid.clone(), dens, u.sector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grading, GridSpec};

    #[test]
    fn angular_mean_newton_case_is_one() {
        // α = 2 gives the Newton kernel, whose spherical mean is max(r,s)^{2−N}
        for n in [3usize, 4, 7] {
            let h = AngularMean::new(n, 2.0);
            for &z in &[0.0, 0.3, 0.89, 0.95, 0.999_999] {
                assert!((h.eval(z, 1.0 - z) - 1.0).abs() < 1e-12, "N={n} z={z}");
            }
        }
    }

    #[test]
    fn angular_mean_branches_agree() {
        for &(n, alpha) in &[(3usize, 0.5), (4, 1.0), (4, 2.5), (5, 3.0), (3, 1.7)] {
            let h = AngularMean::new(n, alpha);
            for &z in &[0.75, 0.85, 0.9] {
                let a = h.series(z * z);
                let b = h.polar(z, 1.0 - z);
                assert!(((a - b) / a).abs() < 1e-11, "N={n} a={alpha} z={z}: {a} vs {b}");
            }
        }
    }

    fn small_grid(n: usize) -> Arc<RadialGrid> {
        RadialGrid::build(GridSpec::new(n, 6.0, 24, Grading::Sinh { core: 1.0 })).unwrap()
    }

    /// Closed-form cell integrals for α = 2, where k(r,s) = max(r,s)^{2−N}.
    fn newton_cells(grid: &RadialGrid, i: usize, j: usize) -> f64 {
        let nf = grid.dim() as f64;
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let (a, b) = (grid.faces[i], grid.faces[i + 1]);
        if i == j {
            2.0 / nf * ((b.powf(nf + 2.0) - a.powf(nf + 2.0)) / (nf + 2.0) - a.powf(nf) * (b * b - a * a) / 2.0)
        } else {
            let (c, d) = (grid.faces[j], grid.faces[j + 1]);
            (b.powf(nf) - a.powf(nf)) / nf * (d * d - c * c) / 2.0
        }
    }

    #[test]
    fn newton_kernel_matches_closed_form() {
        for n in [3usize, 5] {
            let g = small_grid(n);
            let k = build_kernel(&g, 2.0).unwrap();
            let a = riesz_constant(n, 2.0).unwrap() * g.sphere * g.sphere;
            for i in 0..g.len() {
                for j in 0..g.len() {
                    let exact = a * newton_cells(&g, i, j) / (g.cell_volume(i) * g.cell_volume(j));
                    let got = k.entry(i, j);
                    assert!(((got - exact) / exact).abs() < 1e-10, "N={n} ({i},{j}): {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn kernel_symmetric_and_positive() {
        let g = small_grid(4);
        let k = build_kernel(&g, 1.0).unwrap();
        let m = g.len();
        for i in 0..m {
            for j in 0..m {
                assert_eq!(k.entry(i, j), k.entry(j, i));
                assert!(k.entry(i, j) > 0.0);
            }
        }
    }

    #[test]
    fn cache_roundtrip_is_bit_exact() {
        let g = small_grid(3);
        let k = build_kernel(&g, 1.5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = cache_path(dir.path(), &g, 1.5);
        k.save(&path).unwrap();
        let l = RieszKernel::load(&path, &g, 1.5).unwrap();
        assert!(k.values.iter().zip(&l.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(RieszKernel::load(&path, &g, 1.25).is_err());
        let other = RadialGrid::build(GridSpec::new(3, 6.0, 25, Grading::Sinh { core: 1.0 })).unwrap();
        assert!(RieszKernel::load(&path, &other, 1.5).is_err());
        let c = build_kernel_cached(&g, 1.5, Some(dir.path())).unwrap();
        assert_eq!(c.values, k.values);
    }

    /// Cell integrals A S² ∫∫ k(r,s)(rs)^{N−1} from an independent arbitrary-precision
    /// quadrature of the hypergeometric kernel, on a uniform grid with r_max = 3, M = 16.
    const ORACLE: &[(usize, f64, usize, usize, f64)] = &[
        (4, 1.0, 0, 0, 4.5508904727798566e-4),
        (4, 1.0, 5, 5, 0.93760242403089353),
        (4, 1.0, 5, 6, 0.73366662515930328),
        (4, 1.0, 2, 9, 0.044864578224228808),
        (4, 1.0, 15, 15, 7.5625291667469237),
        (4, 1.0, 14, 15, 8.9977977565916525),
        (3, 0.5, 0, 0, 0.0086152734754840613),
        (3, 0.5, 5, 5, 1.1457602575615199),
        (3, 0.5, 5, 6, 0.46740543819503176),
        (3, 0.5, 2, 9, 0.034492983108349884),
        (3, 0.5, 15, 15, 3.3380710044393323),
        (3, 0.5, 14, 15, 1.9641904792523705),
        (5, 3.0, 0, 0, 4.582817434238384e-7),
        (5, 3.0, 5, 5, 0.22900090232607142),
        (5, 3.0, 5, 6, 0.360097098850724),
        (5, 3.0, 2, 9, 0.04127331922279557),
        (5, 3.0, 15, 15, 25.934102269606602),
        (5, 3.0, 14, 15, 44.270191033604532),
    ];

    #[test]
    fn cells_match_high_precision_quadrature() {
        for &(n, alpha, i, j, want) in ORACLE {
            let g = RadialGrid::build(GridSpec::new(n, 3.0, 16, Grading::Uniform)).unwrap();
            let k = build_kernel(&g, alpha).unwrap();
            let got = k.entry(i, j) * g.cell_volume(i) * g.cell_volume(j);
            let tol = if i == j { 1e-7 } else { 1e-9 };
            assert!(((got - want) / want).abs() < tol, "N={n} a={alpha} ({i},{j}): {got} vs {want}");
        }
    }

    #[test]
    fn newton_potential_of_the_unit_ball() {
        let g = RadialGrid::build(GridSpec::new(3, 8.0, 400, Grading::Sinh { core: 1.0 })).unwrap();
        let k = build_kernel(&g, 2.0).unwrap();
        // indicator of B_1, with the cut cell weighted by the fraction of its volume inside
        let f: Vec<f64> = (0..g.len())
            .map(|i| {
                let (a, b) = (g.faces[i], g.faces[i + 1]);
                if b <= 1.0 {
                    1.0
                } else if a >= 1.0 {
                    0.0
                } else {
                    (1.0 - a.powi(3)) / (b.powi(3) - a.powi(3))
                }
            })
            .collect();
        let v = k.apply_values(&f);
        assert!((v[0] - 0.5).abs() < 1e-3, "{}", v[0]);
        for (i, &r) in g.nodes.iter().enumerate() {
            if (1.5..=6.0).contains(&r) {
                assert!((v[i] * 3.0 * r - 1.0).abs() < 1e-3, "r={r}: {}", v[i]);
            }
        }
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    #[test]
    fn g_is_homogeneous_and_its_gradient_is_consistent() {
        let g = small_grid(3);
        let k = build_kernel(&g, 2.0).unwrap();
        let p = crate::constants::exponent(3, 2.0);
        let u: Vec<f64> = g.nodes.iter().map(|r| (-r * r / 3.0).exp() * (1.5 + r.cos())).collect();
        let g0 = k.g_values(&u);
        let u2: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
        assert!((k.g_values(&u2) / g0 - 2f64.powf(2.0 * p)).abs() < 1e-12);
        let (_, dens) = k.g_and_density(&u);
        // Euler: ⟨∇G(u), u⟩ = 2p G(u)
        let euler: f64 = (0..g.len()).map(|i| g.weights[i] * dens[i] * u[i]).sum();
        assert!((euler / (2.0 * p * g0) - 1.0).abs() < 1e-10);
        // random u kept away from 0, where |u|^p is only Hölder continuous
        let mut seed = 7u64;
        let u: Vec<f64> = (0..g.len()).map(|_| 1.0 + lcg(&mut seed)).collect();
        let (_, dens) = k.g_and_density(&u);
        let h: Vec<f64> = (0..g.len()).map(|_| lcg(&mut seed)).collect();
        let eps = 1e-5;
        let plus: Vec<f64> = u.iter().zip(&h).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = u.iter().zip(&h).map(|(a, b)| a - eps * b).collect();
        let fd = (k.g_values(&plus) - k.g_values(&minus)) / (2.0 * eps);
        let exact: f64 = (0..g.len()).map(|i| g.weights[i] * dens[i] * h[i]).sum();
        let hnorm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((fd - exact).abs() <= 1e-6 * hnorm * exact.abs().max(1.0), "{fd} vs {exact}");
    }

    #[test]
    fn riesz_operator_is_linear_and_positive_semidefinite() {
        for &(n, alpha) in &[(3usize, 2.0), (4, 1.0), (5, 3.0)] {
            let g = small_grid(n);
            let k = build_kernel(&g, alpha).unwrap();
            let mut seed = n as u64;
            for _ in 0..50 {
                let f: Vec<f64> = (0..g.len()).map(|_| lcg(&mut seed)).collect();
                let h: Vec<f64> = (0..g.len()).map(|_| lcg(&mut seed)).collect();
                let comb: Vec<f64> = f.iter().zip(&h).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
                let (kf, kh, kc) = (k.apply_values(&f), k.apply_values(&h), k.apply_values(&comb));
                for i in 0..g.len() {
                    assert!((kc[i] - (2.0 * kf[i] - 3.0 * kh[i])).abs() <= 1e-12 * (kf[i].abs() + kh[i].abs() + 1.0));
                }
                let form: f64 = (0..g.len()).map(|i| g.weights[i] * f[i] * kf[i]).sum();
                let scale: f64 = (0..g.len()).map(|i| g.weights[i] * f[i].abs() * kf[i].abs()).sum();
                assert!(form >= -1e-12 * scale, "N={n}: {form}");
            }
        }
    }
}
