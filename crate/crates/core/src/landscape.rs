//! Probes of the energy landscape above the embedding constant μ^ν: the dilation family
//! of HLS extremals, the energy defect 𝓘_μ(ε), the split H¹ = E⁻ ⊕ E⁺, the path
//! construction behind inf_Nehari J = 0 and a sampled estimate of the linking level.

use crate::constants::{c_inf_closed, exponent, least_energy_formula, ProblemParams};
use crate::error::{LabError, Result};
use crate::grid::{dirichlet_energy, l2_squared, sector_operator, weighted_l2, RadialFn, RadialGrid};
use crate::linalg::SymTridiag;
use crate::riesz::RieszKernel;
use crate::spectrum::{EigenPair, SpectrumResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::sync::Arc;

/// Eigenvalues closer than this to μ count as resonant.
pub const RESONANCE_TOL: f64 = 1e-6;

/// U(x) = C ν^{N/2}(ν² + |x|²)^{−N/2} with G(U) = 1, and its dilations u_ε(x) = ε^{N/2}U(εx).
#[derive(Debug, Clone)]
pub struct ExtremalFamily {
    pub n: usize,
    pub alpha: f64,
    pub nu: f64,
    /// The normalising constant C.
    pub amplitude: f64,
    /// U on the grid (ε = 1), zero at the Dirichlet node.
    pub profile: RadialFn,
    /// ∫|U|² on the grid; approximates c_∞.
    pub mass: f64,
}

/// One member u_ε of the family, renormalised on the grid.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub eps: f64,
    pub u: RadialFn,
    /// ∫|u_ε|² after renormalisation.
    pub mass: f64,
    /// G of the exact dilation before renormalisation; its distance from 1 measures how
    /// well the grid resolves u_ε.
    pub g_before: f64,
}

fn extremal_values(grid: &RadialGrid, nu: f64, eps: f64) -> Vec<f64> {
    let h = grid.dim() as f64 / 2.0;
    let mut v: Vec<f64> = grid.nodes.iter().map(|&r| eps.powf(h) * nu.powf(h) * (nu * nu + eps * eps * r * r).powf(-h)).collect();
    if let Some(last) = v.last_mut() {
        *last = 0.0;
    }
    v
}

fn check_pair(kernel: &RieszKernel, n: usize, alpha: f64) -> Result<()> {
    if kernel.grid.dim() != n || kernel.alpha != alpha {
        return Err(LabError::GridMismatch(format!(
            "kernel for (N={}, alpha={}) used with (N={n}, alpha={alpha})",
            kernel.grid.dim(),
            kernel.alpha
        )));
    }
    Ok(())
}

pub fn build_extremal(grid: &Arc<RadialGrid>, kernel: &RieszKernel, nu: f64, alpha: f64) -> Result<ExtremalFamily> {
    let n = grid.dim();
    ProblemParams::new(n, alpha, 0.0, nu)?;
    check_pair(kernel, n, alpha)?;
    grid.check_same(&kernel.grid)?;
    let raw = extremal_values(grid, nu, 1.0);
    let g = kernel.g_values(&raw);
    if !(g > 0.0 && g.is_finite()) {
        return Err(LabError::ZeroInput(format!("cannot normalise the extremal profile: G = {g}")));
    }
    let c = g.powf(-1.0 / (2.0 * exponent(n, alpha)));
    let profile = RadialFn::new(grid.clone(), raw.iter().map(|v| c * v).collect(), 0)?;
    let mass = l2_squared(&profile);
    Ok(ExtremalFamily { n, alpha, nu, amplitude: c, profile, mass })
}

impl ExtremalFamily {
    /// Checks that the width ν/ε of u_ε fits the grid: at most r_max/4, and at least ten
    /// times the innermost cell.
    pub fn check_resolved(&self, eps: f64) -> Result<()> {
        let g = &self.profile.grid;
        let width = self.nu / eps;
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(LabError::Domain(format!("eps must be > 0, got {eps}")));
        }
        if width > g.r_max() / 4.0 {
            return Err(LabError::Domain(format!(
                "u_eps with eps = {eps} has width {width:.3} > r_max/4 = {:.3}; the grid does not resolve it",
                g.r_max() / 4.0
            )));
        }
        if width < 10.0 * g.faces[1] {
            return Err(LabError::Domain(format!("u_eps with eps = {eps} is narrower than ten inner cells")));
        }
        Ok(())
    }

    /// u_ε, rescaled on the grid so that G(u_ε) = 1 exactly.
    pub fn member(&self, kernel: &RieszKernel, eps: f64) -> Result<FamilyMember> {
        self.check_resolved(eps)?;
        check_pair(kernel, self.n, self.alpha)?;
        let g = &self.profile.grid;
        let raw: Vec<f64> = extremal_values(g, self.nu, eps).iter().map(|v| self.amplitude * v).collect();
        let g_before = kernel.g_values(&raw);
        let t = g_before.powf(-1.0 / (2.0 * exponent(self.n, self.alpha)));
        let u = RadialFn::new(g.clone(), raw.iter().map(|v| t * v).collect(), 0)?;
        let mass = l2_squared(&u);
        Ok(FamilyMember { eps, u, mass, g_before })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyDefect {
    pub eps: f64,
    /// 𝓘_μ(ε) = ε^{−2} ∫ |∇u_ε|² − μ|u_ε|²/(ν²+|x|²).
    pub value: f64,
    /// Q_{μ,ν}(u_ε).
    pub q: f64,
    /// ∫|u_ε|², the c_∞ of the identity Q(u_ε) = c_∞ + ε²𝓘_μ(ε).
    pub mass: f64,
}

pub fn i_mu_eps(family: &ExtremalFamily, kernel: &RieszKernel, mu: f64, eps: f64) -> Result<EnergyDefect> {
    let m = family.member(kernel, eps)?;
    let grad = dirichlet_energy(&m.u);
    let pot = weighted_l2(&m.u, family.nu);
    let value = (grad - mu * pot) / (eps * eps);
    Ok(EnergyDefect { eps, value, q: grad + m.mass - mu * pot, mass: m.mass })
}

/// The ε → 0 limit ∫|∇U|² − μ∫U²/|x|², evaluated on the grid profile U. Its sign flips at
/// μ = N²(N−2)/(4(N+1)).
pub fn i_mu_limit(family: &ExtremalFamily, mu: f64) -> f64 {
    let u = &family.profile;
    let g = &u.grid;
    let hardy: f64 = (0..g.len()).map(|i| g.weights[i] * u.values[i] * u.values[i] / (g.nodes[i] * g.nodes[i])).sum();
    dirichlet_energy(u) - mu * hardy
}

#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub mu: f64,
    /// Number of eigenvalues ≤ μ counted with multiplicity.
    pub n: usize,
    /// Eigenpairs spanning E⁻ (all sectors).
    pub basis_minus: Vec<EigenPair>,
    /// λ_{n+1} − μ.
    pub gap: f64,
    /// c in Q_{μ,ν}(v) ≤ −c‖v‖²_{H¹} on E⁻: min over the basis of μ/λ_k − 1.
    pub coercivity: f64,
    pub resonant: bool,
    pub warnings: Vec<String>,
}

impl SpectralSplit {
    /// The sector-0 part of E⁻.
    pub fn radial_basis(&self) -> Vec<&EigenPair> {
        self.basis_minus.iter().filter(|p| p.sector == 0).collect()
    }
}

pub fn spectral_split(spectrum: &SpectrumResult, mu: f64) -> Result<SpectralSplit> {
    spectral_split_with_tol(spectrum, mu, RESONANCE_TOL)
}

pub fn spectral_split_with_tol(spectrum: &SpectrumResult, mu: f64, tol: f64) -> Result<SpectralSplit> {
    let pairs = &spectrum.pairs;
    let lambda1 = spectrum.lambda1();
    if mu < lambda1 - tol {
        return Err(LabError::Bracket { mu, reason: format!("below the lowest eigenvalue {lambda1}") });
    }
    let Some(next) = pairs.iter().find(|p| p.lambda > mu + tol) else {
        return Err(LabError::Bracket {
            mu,
            reason: format!(
                "not below the largest computed eigenvalue {}; request more eigenpairs",
                pairs.last().map_or(f64::NAN, |p| p.lambda)
            ),
        });
    };
    let basis_minus: Vec<EigenPair> = pairs.iter().filter(|p| p.lambda <= mu + tol).cloned().collect();
    let n = basis_minus.iter().map(|p| p.multiplicity).sum();
    let coercivity = basis_minus.iter().map(|p| mu / p.lambda - 1.0).fold(f64::INFINITY, f64::min);
    let resonant = pairs.iter().any(|p| (p.lambda - mu).abs() < tol);
    let mut warnings = Vec::new();
    if resonant {
        warnings.push(format!("mu = {mu} is within {tol:e} of an eigenvalue: resonant case"));
    }
    Ok(SpectralSplit { mu, n, basis_minus, gap: next.lambda - mu, coercivity, resonant, warnings })
}

/// Interior matrix of Q_{μ,ν} in the radial sector.
fn radial_form(grid: &Arc<RadialGrid>, mu: f64, nu: f64) -> SymTridiag {
    let h1 = sector_operator(grid, 0).matrix;
    let n = h1.len();
    h1.shifted(mu, &grid.potential_weights(nu)[..n])
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathSample {
    pub t: f64,
    /// Q_{μ,ν} of the path point rescaled to G = 1.
    pub q: f64,
    /// J at the Nehari point of the ray, when Q > 0.
    pub nehari_energy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathProbe {
    pub q0: f64,
    pub q1: f64,
    /// Frequency k of the endpoint e^{−r²}cos(kr).
    pub frequency: f64,
    /// (resolution, smallest Nehari energy over that many path steps).
    pub levels: Vec<(usize, f64)>,
    pub d_estimate: f64,
    pub sign_change: bool,
    pub trace: Vec<PathSample>,
}

/// Traces γ(t) = (1−t)ũ₀ + tũ₁ between ũ₀ = φ₁ (Q < 0) and ũ₁ = e^{−r²}cos(kr) (Q > 0),
/// both rescaled to G = 1, and records Q along the renormalised path. The sampled infimum of
/// J over the Nehari points of the path is reported for each requested resolution; the
/// resolutions must divide the finest one, so the coarse traces are nested in the fine one.
pub fn d_mu_probe(
    params: &ProblemParams,
    kernel: &RieszKernel,
    split: &SpectralSplit,
    resolutions: &[usize],
) -> Result<PathProbe> {
    params.validate()?;
    check_pair(kernel, params.n, params.alpha)?;
    let grid = &kernel.grid;
    let finest = resolutions.iter().copied().max().unwrap_or(0);
    if finest == 0 || resolutions.iter().any(|&r| r == 0 || finest % r != 0) {
        return Err(LabError::InvalidParams(format!("resolutions {resolutions:?} must be positive divisors of the finest")));
    }
    let form = radial_form(grid, params.mu, params.nu);
    let n_int = form.len();
    let p = params.p();
    let normalise = |v: &[f64]| -> Result<Vec<f64>> {
        let g = kernel.g_values(v);
        if !(g > 0.0) {
            return Err(LabError::ZeroInput("path point with G = 0".into()));
        }
        let t = g.powf(-1.0 / (2.0 * p));
        Ok(v.iter().map(|x| t * x).collect())
    };
    let phi = split
        .radial_basis()
        .first()
        .map(|p| p.func.clone())
        .ok_or_else(|| LabError::InvalidParams("E^- has no radial element".into()))?;
    phi.check_grid(grid)?;
    let u0 = normalise(&phi.values)?;
    let q0 = form.quad_form(&u0[..n_int]);
    let mut chosen = None;
    let mut q1 = f64::NAN;
    for k in [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        let mut v: Vec<f64> = grid.nodes.iter().map(|&r| (-r * r).exp() * (k * r).cos()).collect();
        if let Some(last) = v.last_mut() {
            *last = 0.0;
        }
        let v = normalise(&v)?;
        q1 = form.quad_form(&v[..n_int]);
        if q1 > 0.0 {
            chosen = Some((k, v));
            break;
        }
    }
    let Some((frequency, u1)) = chosen.filter(|_| q0 < 0.0) else {
        return Err(LabError::Endpoints { q0, q1 });
    };
    let trace: Vec<PathSample> = (0..=finest)
        .into_par_iter()
        .map(|j| {
            let t = j as f64 / finest as f64;
            let v: Vec<f64> = u0.iter().zip(&u1).map(|(a, b)| (1.0 - t) * a + t * b).collect();
            let g = kernel.g_values(&v);
            let q = form.quad_form(&v[..n_int]) / g.powf(1.0 / p);
            let nehari_energy = (q > 0.0).then(|| least_energy_formula(params.n, params.alpha, q));
            PathSample { t, q, nehari_energy }
        })
        .collect();
    let sign_change = trace.windows(2).any(|w| w[0].q < 0.0 && w[1].q > 0.0);
    let mut levels: Vec<(usize, f64)> = Vec::new();
    let mut sorted: Vec<usize> = resolutions.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for r in sorted {
        let stride = finest / r;
        let best = trace.iter().step_by(stride).filter_map(|s| s.nehari_energy).fold(f64::INFINITY, f64::min);
        levels.push((r, best));
    }
    let d_estimate = levels.last().map_or(f64::INFINITY, |l| l.1);
    Ok(PathProbe { q0, q1, frequency, levels, d_estimate, sign_change, trace })
}

/// Sampling controls for [`linking_sup`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinkingOptions {
    pub seed: u64,
    pub samples: usize,
    pub batches: usize,
    pub boundary_samples: usize,
    pub refine_rounds: usize,
    /// Overrides for the slab size; chosen automatically when absent.
    pub t_max: Option<f64>,
    pub ball_radius: Option<f64>,
}

impl Default for LinkingOptions {
    fn default() -> Self {
        LinkingOptions {
            seed: 20240531,
            samples: 2048,
            batches: 8,
            boundary_samples: 256,
            refine_rounds: 3,
            t_max: None,
            ball_radius: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkingReport {
    pub n: usize,
    pub alpha: f64,
    pub nu: f64,
    pub mu: f64,
    pub eps: f64,
    pub t_max: f64,
    pub ball_radius: f64,
    pub samples: usize,
    pub batches: usize,
    pub seed: u64,
    /// Dimension of the radial part of E⁻ that is sampled.
    pub radial_dim: usize,
    pub sup_estimate: f64,
    pub argmax_t: f64,
    pub argmax_coeffs: Vec<f64>,
    /// max_t J(t u_ε) from the one-dimensional formula.
    pub axis_sup: f64,
    pub beta: f64,
    pub boundary_max: f64,
    pub boundary_dominated: bool,
    pub enlarged: bool,
    pub pass: bool,
    pub warnings: Vec<String>,
}

impl LinkingReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "linking probe (numerical evidence)");
        let _ = writeln!(s, "N = {}, alpha = {}, nu = {}, mu = {}", self.n, self.alpha, self.nu, self.mu);
        let _ = writeln!(s, "eps = {}, T = {:.6}, R = {:.6}", self.eps, self.t_max, self.ball_radius);
        let _ = writeln!(
            s,
            "samples = {}, batches = {}, seed = {}, radial dim E- = {}",
            self.samples, self.batches, self.seed, self.radial_dim
        );
        let _ = writeln!(s, "sup_estimate = {:.12e}", self.sup_estimate);
        let _ = writeln!(s, "axis_sup = {:.12e}", self.axis_sup);
        let _ = writeln!(s, "beta = {:.12e}", self.beta);
        let _ = writeln!(s, "boundary_max = {:.6e} (dominated: {})", self.boundary_max, self.boundary_dominated);
        let _ = writeln!(s, "result = {}", if self.pass { "PASS" } else { "FAIL" });
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

/// The slab {t u_ε + v : 0 ≤ t ≤ T, v ∈ E⁻_radial, ‖v‖_{H¹} ≤ R} in coordinates (t, c) with
/// v = Σ c_k φ_k/‖φ_k‖_{H¹}. Q is a quadratic form in (t, c); G needs the kernel.
struct Slab<'a> {
    kernel: &'a RieszKernel,
    vectors: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
    p: f64,
}

impl Slab<'_> {
    fn energy(&self, coords: &[f64]) -> f64 {
        let m = self.vectors[0].len();
        let mut w = vec![0.0; m];
        for (c, v) in coords.iter().zip(&self.vectors) {
            if *c != 0.0 {
                w.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
            }
        }
        let mut q = 0.0;
        for (i, ci) in coords.iter().enumerate() {
            for (j, cj) in coords.iter().enumerate() {
                q += ci * cj * self.gram[i][j];
            }
        }
        0.5 * q - self.kernel.g_values(&w) / (2.0 * self.p)
    }
}

fn ball_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64, on_sphere: bool) -> Vec<f64> {
    loop {
        let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1.0 && norm > 1e-12 {
            let s = if on_sphere { radius / norm } else { radius };
            return c.iter().map(|x| x * s).collect();
        }
    }
}

fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (batch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Sampled sup of J over the linking slab built on u_ε, against
/// β = (α/(2(N+α))) c_∞^{(N+α)/α} with the closed-form c_∞. Sampling is Monte Carlo in
/// per-batch ChaCha streams followed by coordinate-wise golden-section refinement of the
/// best point. The outcome is numerical evidence, not a bound.
pub fn linking_sup(
    params: &ProblemParams,
    kernel: &RieszKernel,
    split: &SpectralSplit,
    family: &ExtremalFamily,
    eps: f64,
    opts: &LinkingOptions,
) -> Result<LinkingReport> {
    params.validate()?;
    check_pair(kernel, params.n, params.alpha)?;
    if opts.samples == 0 || opts.batches == 0 {
        return Err(LabError::InvalidParams("samples and batches must be positive".into()));
    }
    let mut warnings = Vec::new();
    if params.n == 3 {
        if split.resonant {
            return Err(LabError::Domain(format!("mu = {} is resonant; N = 3 requires a non-resonant mu", params.mu)));
        }
        if params.alpha <= 1.5 {
            warnings.push("N = 3 with alpha <= 3/2 lies outside the range covered by the theory; exploratory".into());
        }
    }
    let grid = &kernel.grid;
    let member = family.member(kernel, eps)?;
    let radial = split.radial_basis();
    if radial.is_empty() {
        return Err(LabError::InvalidParams("E^- has no radial element".into()));
    }
    if radial.len() < split.basis_minus.len() {
        warnings.push(format!(
            "E^- has {} non-radial eigenpairs; only its radial part (dimension {}) is sampled",
            split.basis_minus.len() - radial.len(),
            radial.len()
        ));
    }
    let form = radial_form(grid, params.mu, params.nu);
    let n_int = form.len();
    let mut vectors = vec![member.u.values.clone()];
    for p in &radial {
        p.func.check_grid(grid)?;
        let h1 = p.lambda.sqrt();
        vectors.push(p.func.values.iter().map(|v| v / h1).collect());
    }
    let dim = vectors.len();
    let gram: Vec<Vec<f64>> =
        (0..dim).map(|i| (0..dim).map(|j| form.bilinear(&vectors[i][..n_int], &vectors[j][..n_int])).collect()).collect();
    let p = params.p();
    let slab = Slab { kernel, vectors, gram, p };

    let q = slab.gram[0][0];
    let (t_star, axis_sup) = if q > 0.0 {
        let t = q.powf(1.0 / (2.0 * p - 2.0));
        (t, (p - 1.0) / (2.0 * p) * q.powf(p / (p - 1.0)))
    } else {
        (1.0, 0.0)
    };
    let beta = least_energy_formula(params.n, params.alpha, c_inf_closed(params.n, params.alpha)?);

    // slab size: T beyond the axis maximiser, R where the negative part of Q dominates the
    // cross terms for every t ≤ T
    let coer = split.coercivity.max(1e-12);
    let cross = (1..dim).map(|k| slab.gram[0][k].powi(2)).sum::<f64>().sqrt();
    let mut t_max = opts.t_max.unwrap_or(3.0 * t_star);
    let mut radius = opts.ball_radius.unwrap_or_else(|| {
        let (a, b, c) = (coer, 2.0 * t_max * cross, t_max * t_max * q.max(0.0));
        1.5 * (b + (b * b + 4.0 * a * c).sqrt()) / (2.0 * a)
    });
    let sub = dim - 1;
    let boundary = |t_max: f64, radius: f64| -> f64 {
        let per = opts.boundary_samples.div_ceil(opts.batches);
        (0..opts.batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = batch_rng(opts.seed.wrapping_add(1), b);
                let mut best = f64::NEG_INFINITY;
                for _ in 0..per {
                    let c = ball_point(&mut rng, sub, radius, false);
                    let mut x = vec![t_max];
                    x.extend(&c);
                    best = best.max(slab.energy(&x));
                    let c = ball_point(&mut rng, sub, radius, true);
                    let mut x = vec![rng.gen_range(0.0..=t_max)];
                    x.extend(&c);
                    best = best.max(slab.energy(&x));
                }
                best
            })
            .reduce(|| f64::NEG_INFINITY, f64::max)
    };
    let mut boundary_max = boundary(t_max, radius);
    let mut enlarged = false;
    if boundary_max >= 0.5 * beta {
        t_max *= 2.0;
        radius *= 2.0;
        enlarged = true;
        boundary_max = boundary(t_max, radius);
    }
    let boundary_dominated = boundary_max < 0.5 * beta;

    let per = opts.samples.div_ceil(opts.batches);
    let (mut best_val, mut best_x) = (0..opts.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(opts.seed, b);
            let mut best = (f64::NEG_INFINITY, Vec::new());
            for _ in 0..per {
                let mut x = vec![rng.gen_range(0.0..=t_max)];
                x.extend(ball_point(&mut rng, sub, radius, false));
                let e = slab.energy(&x);
                if e > best.0 {
                    best = (e, x);
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |acc, b| if b.0 > acc.0 { b } else { acc });
    let mut axis = vec![t_star.min(t_max)];
    axis.extend(std::iter::repeat(0.0).take(sub));
    let axis_val = slab.energy(&axis);
    if axis_val > best_val {
        best_val = axis_val;
        best_x = axis;
    }
    for _ in 0..opts.refine_rounds {
        for k in 0..dim {
            let (lo, hi) = if k == 0 {
                (0.0, t_max)
            } else {
                let others: f64 = (1..dim).filter(|&j| j != k).map(|j| best_x[j] * best_x[j]).sum();
                let h = (radius * radius - others).max(0.0).sqrt();
                (-h, h)
            };
            let mut x = best_x.clone();
            let (arg, val) = golden_max(
                |s| {
                    x[k] = s;
                    slab.energy(&x)
                },
                lo,
                hi,
                40,
            );
            if val > best_val {
                best_val = val;
                best_x[k] = arg;
            }
        }
    }
    let pass = best_val < beta && boundary_dominated;
    Ok(LinkingReport {
        n: params.n,
        alpha: params.alpha,
        nu: params.nu,
        mu: params.mu,
        eps,
        t_max,
        ball_radius: radius,
        samples: per * opts.batches,
        batches: opts.batches,
        seed: opts.seed,
        radial_dim: sub,
        sup_estimate: best_val,
        argmax_t: best_x[0],
        argmax_coeffs: best_x[1..].to_vec(),
        axis_sup,
        beta,
        boundary_max,
        boundary_dominated,
        enlarged,
        pass,
        warnings,
    })
}
