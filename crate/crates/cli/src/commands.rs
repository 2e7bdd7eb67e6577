//! The eight computational commands. Each returns an [`Outcome`]; `verify` lives in its own module.

use crate::config::{usage, RunConfig};
use crate::output::{Artifact, Outcome, Plot, Series};
use anyhow::{Context, Result};
use choquard::constants::{c_inf_closed, critical_mu_values, hls_sharp_constant, riesz_constant, ConstantsBundle, ProblemParams};
use choquard::grid::{RadialFn, RadialGrid};
use choquard::landscape::{build_extremal, d_mu_probe, i_mu_eps, i_mu_limit, linking_sup, spectral_split, LinkingOptions};
use choquard::riesz::{build_kernel_cached, RieszKernel};
use choquard::spectrum::{
    asymptotic_ratio_table, best_embedding_constant, decay_rate, minimize_rayleigh, rayleigh_formula, rayleigh_up_closed,
    rayleigh_up_discrete, solve_spectrum, SpectrumResult,
};
use choquard::variational::{extract_groundstate, minimize_c, minimize_c_inf, scan_mu, MinResult, ScanOptions, ThresholdReport};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

pub const CACHE_ENV: &str = "CHOQUARD_CACHE_DIR";

fn params(cfg: &RunConfig, mu: f64) -> Result<ProblemParams> {
    Ok(ProblemParams::new(cfg.n, cfg.alpha, mu, cfg.nu)?)
}

fn grid(cfg: &RunConfig) -> Result<Arc<RadialGrid>> {
    Ok(RadialGrid::build(cfg.grid)?)
}

pub fn kernel(grid: &Arc<RadialGrid>, alpha: f64) -> Result<RieszKernel> {
    let dir = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    build_kernel_cached(grid, alpha, dir.as_deref()).context("building the Riesz kernel")
}

fn profile_series(label: &str, u: &RadialFn, r_cut: f64) -> Series {
    let g = &u.grid;
    Series {
        label: label.into(),
        points: g.nodes.iter().zip(&u.values).take_while(|(r, _)| **r <= r_cut).map(|(r, v)| (*r, *v)).collect(),
    }
}

pub fn constants(cfg: &RunConfig) -> Result<Outcome> {
    let p = params(cfg, cfg.mu_or(0.0))?;
    let b = ConstantsBundle::new(&p)?;
    let rows = [
        ("p", b.p),
        ("riesz_A", b.riesz_a),
        ("hls_sharp", b.hls_sharp),
        ("c_inf_closed", b.c_inf_closed),
        ("beta", b.beta_level()),
        ("hardy", b.hardy),
        ("mv_threshold", b.mv_threshold),
        ("hardy_plus_nu2", b.hardy_plus_nu2),
    ];
    let mut csv = String::from("quantity,value\n");
    let mut report = format!("constants for N = {}, alpha = {}, nu = {}\n", b.n, b.alpha, b.nu);
    for (k, v) in rows {
        let _ = writeln!(csv, "{k},{v}");
        let _ = writeln!(report, "  {k:<16} {v}");
    }
    let ordered = b.hardy < b.mv_threshold;
    let _ = writeln!(report, "  (N-2)^2/4 < N^2(N-2)/(4(N+1)): {ordered}");
    let _ = writeln!(report, "  nu^2+(N-2)^2/4 > N^2(N-2)/(4(N+1)): {}", b.hardy_plus_nu2 > b.mv_threshold);
    Ok(Outcome {
        report,
        artifacts: vec![Artifact::csv("constants.csv", csv), Artifact::json("constants.json", &b)?],
        plot: None,
        failed: !ordered,
    })
}

#[derive(Serialize)]
struct EigenRow {
    index: usize,
    lambda: f64,
    sector: usize,
    multiplicity: usize,
    residual: f64,
    decay: Option<f64>,
}

#[derive(Serialize)]
struct EigenReport {
    nu: f64,
    l_max: usize,
    grid: String,
    lower_bound: f64,
    upper_bound: f64,
    bracket_ok: bool,
    max_residual: f64,
    max_h1_offdiag: f64,
    max_normalisation_error: f64,
    phi1_decay: Option<f64>,
    pairs: Vec<EigenRow>,
    warnings: Vec<String>,
}

/// Orthogonality and normalisation diagnostics of a spectrum: (max |⟨φ_i,φ_j⟩_{H¹}| relative
/// to the norms, max |∫φ²/(ν²+r²) − 1|).
pub fn eigen_structure(spec: &SpectrumResult) -> (f64, f64) {
    let n = spec.pairs.len();
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            let c = spec.h1_inner(i, j) / (spec.h1_inner(i, i) * spec.h1_inner(j, j)).sqrt();
            off = off.max(c.abs());
        }
    }
    let norm = spec.pairs.iter().map(|p| (choquard::grid::weighted_l2(&p.func, spec.nu) - 1.0).abs()).fold(0.0, f64::max);
    (off, norm)
}

pub fn eigen(cfg: &RunConfig) -> Result<Outcome> {
    params(cfg, 0.0)?;
    let g = grid(cfg)?;
    let spec = solve_spectrum(&g, cfg.nu, cfg.l_max, cfg.count)?;
    let crit = critical_mu_values(cfg.n, cfg.nu)?;
    let (_, upper) = minimize_rayleigh(cfg.n, cfg.nu);
    let l1 = spec.lambda1();
    let bracket_ok = crit.hardy_plus_nu2 < l1 && l1 < upper;
    let max_residual = spec.pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
    let (max_h1_offdiag, max_normalisation_error) = eigen_structure(&spec);
    let phi1_decay = decay_rate(&spec.pairs[0].func).ok();
    let rep = EigenReport {
        nu: cfg.nu,
        l_max: cfg.l_max,
        grid: cfg.grid.descriptor(),
        lower_bound: crit.hardy_plus_nu2,
        upper_bound: upper,
        bracket_ok,
        max_residual,
        max_h1_offdiag,
        max_normalisation_error,
        phi1_decay,
        pairs: spec
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| EigenRow {
                index: i + 1,
                lambda: p.lambda,
                sector: p.sector,
                multiplicity: p.multiplicity,
                residual: p.residual,
                decay: p.decay,
            })
            .collect(),
        warnings: spec.warnings.clone(),
    };
    let mut report = format!("spectrum of -Delta + 1 against (nu^2+r^2)^-1, nu = {}, {}\n", cfg.nu, rep.grid);
    for p in &rep.pairs {
        let _ = writeln!(
            report,
            "  lambda_{:<3} = {:.12}  sector {} (x{})  residual {:.2e}",
            p.index, p.lambda, p.sector, p.multiplicity, p.residual
        );
    }
    let _ = writeln!(report, "bracket: {:.6} < mu^nu = {:.12} < {:.6}: {}", rep.lower_bound, l1, upper, bracket_ok);
    let _ = writeln!(report, "max residual {max_residual:.3e}, max H1 cosine {max_h1_offdiag:.3e}, max normalisation error {max_normalisation_error:.3e}");
    match phi1_decay {
        Some(d) => {
            let _ = writeln!(report, "decay rate of phi_1: {d:.6}");
        }
        None => report.push_str("decay rate of phi_1: tail below floating noise, no estimate\n"),
    }
    for w in &rep.warnings {
        let _ = writeln!(report, "warning: {w}");
    }
    let r_cut = (20.0 * cfg.nu).min(g.r_max());
    let series = spec
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.sector == 0)
        .take(4)
        .map(|(i, p)| profile_series(&format!("phi_{}", i + 1), &p.func, r_cut))
        .collect();
    Ok(Outcome {
        report,
        artifacts: vec![Artifact::csv("spectrum.csv", spec.to_csv()), Artifact::json("spectrum.json", &rep)?],
        plot: Some(Plot {
            title: "radial eigenfunctions".into(),
            x_label: "r".into(),
            y_label: "phi".into(),
            log_x: false,
            series,
        }),
        failed: !bracket_ok,
    })
}

pub fn rayleigh(cfg: &RunConfig) -> Result<Outcome> {
    params(cfg, 0.0)?;
    let g = grid(cfg)?;
    let (p_star, bound) = minimize_rayleigh(cfg.n, cfg.nu);
    let mut report = format!("Rayleigh quotient of u_p = nu^(2p) (nu^2+r^2)^(-p), N = {}, nu = {}\n", cfg.n, cfg.nu);
    let mut csv = String::from("p,closed_form,discrete,rel_err\n");
    let mut failed = false;
    if let Some(p) = cfg.p {
        let closed = rayleigh_up_closed(cfg.n, cfg.nu, p).map_err(|e| usage(e.to_string()))?;
        let discrete = rayleigh_up_discrete(&g, cfg.nu, p)?;
        let rel = ((discrete - closed) / closed).abs();
        let _ = writeln!(report, "p = {p}: closed form = {closed}, discrete = {discrete:.12} (relative difference {rel:.3e})");
        let _ = writeln!(csv, "{p},{closed},{discrete:.15e},{rel:.6e}");
        failed = rel > 1e-3;
    }
    let discrete_star = rayleigh_up_discrete(&g, cfg.nu, p_star)?;
    let _ =
        writeln!(report, "minimum over p > N/4: p* = {p_star:.10}, bound = {bound:.12} (discrete at p*: {discrete_star:.12})");
    let _ = writeln!(csv, "{p_star},{bound},{discrete_star:.15e},{:.6e}", ((discrete_star - bound) / bound).abs());
    let lo = cfg.n as f64 / 4.0;
    let curve = (1..=400).map(|i| lo + 0.025 * i as f64).map(|p| (p, rayleigh_formula(cfg.n, cfg.nu, p))).collect();
    Ok(Outcome {
        report,
        artifacts: vec![Artifact::csv("rayleigh.csv", csv)],
        plot: Some(Plot {
            title: "closed-form Rayleigh quotient".into(),
            x_label: "p".into(),
            y_label: "R(p)".into(),
            log_x: false,
            series: vec![Series { label: "R(p)".into(), points: curve }],
        }),
        failed,
    })
}

#[derive(Serialize)]
struct MinSummary {
    mu: f64,
    value: f64,
    converged: bool,
    constraint_residual: f64,
    grad_norm: f64,
    boundary_mass: f64,
    truncation_suspect: bool,
    iterations: usize,
}

impl MinSummary {
    fn new(mu: f64, r: &MinResult) -> Self {
        MinSummary {
            mu,
            value: r.value,
            converged: r.converged,
            constraint_residual: r.constraint_residual,
            grad_norm: r.grad_norm,
            boundary_mass: r.boundary_mass,
            truncation_suspect: r.truncation_suspect,
            iterations: r.iterations,
        }
    }

    fn describe(&self) -> String {
        format!(
            "value {:.12}, converged {}, |G-1| {:.2e}, grad {:.2e}, boundary mass {:.2e}{}, iterations {}",
            self.value,
            self.converged,
            self.constraint_residual,
            self.grad_norm,
            self.boundary_mass,
            if self.truncation_suspect { " (truncation-suspect)" } else { "" },
            self.iterations
        )
    }
}

#[derive(Serialize)]
struct CinfReport {
    numerical: MinSummary,
    closed_form: f64,
    rel_err: f64,
    extremal_mass: f64,
    hls_ratio_extremal: f64,
}

pub fn cinf(cfg: &RunConfig) -> Result<Outcome> {
    let p = params(cfg, 0.0)?;
    let g = grid(cfg)?;
    let k = kernel(&g, cfg.alpha)?;
    let r = minimize_c_inf(&k, &p, None, &cfg.min)?;
    let closed = c_inf_closed(cfg.n, cfg.alpha)?;
    let fam = build_extremal(&g, &k, cfg.nu, cfg.alpha)?;
    let bound = riesz_constant(cfg.n, cfg.alpha)? * hls_sharp_constant(cfg.n, cfg.alpha)? * fam.mass.powf(p.p());
    let rep = CinfReport {
        numerical: MinSummary::new(0.0, &r),
        closed_form: closed,
        rel_err: ((r.value - closed) / closed).abs(),
        extremal_mass: fam.mass,
        hls_ratio_extremal: k.g_values(&fam.profile.values) / bound,
    };
    let mut report = format!("c_inf for N = {}, alpha = {} on {}\n", cfg.n, cfg.alpha, cfg.grid.descriptor());
    let _ = writeln!(report, "numerical: {}", rep.numerical.describe());
    let _ = writeln!(report, "closed form (A C)^(-N/(N+alpha)) = {closed:.12}, relative difference {:.3e}", rep.rel_err);
    let _ = writeln!(report, "extremal U: mass {:.12}, G(U)/(A C |U|^(2p)) = {:.9}", fam.mass, rep.hls_ratio_extremal);
    if !r.converged {
        report.push_str("solver did not converge\n");
    }
    let r_cut = g.r_max() / 4.0;
    Ok(Outcome {
        report,
        artifacts: vec![Artifact::csv("cinf_minimizer.csv", r.minimizer.to_csv()), Artifact::json("cinf.json", &rep)?],
        plot: Some(Plot {
            title: "c_inf minimiser".into(),
            x_label: "r".into(),
            y_label: "u".into(),
            log_x: true,
            series: vec![profile_series("minimiser", &r.minimizer, r_cut), profile_series("extremal U", &fam.profile, r_cut)],
        }),
        failed: !r.converged,
    })
}

#[derive(Serialize)]
struct GroundStateReport {
    min: MinSummary,
    residual_dual: Option<f64>,
    residual_strong: Option<f64>,
    min_value: Option<f64>,
    positive: Option<bool>,
    energy: Option<f64>,
    least_energy: Option<f64>,
    energy_rel_err: Option<f64>,
}

pub fn groundstate(cfg: &RunConfig) -> Result<Outcome> {
    params(cfg, 0.0)?;
    let g = grid(cfg)?;
    let crit = critical_mu_values(cfg.n, cfg.nu)?;
    let mu = match cfg.mu {
        Some(m) => m,
        None => 0.5 * (crit.hardy_plus_nu2 + best_embedding_constant(&g, cfg.nu)?),
    };
    let p = params(cfg, mu)?;
    let k = kernel(&g, cfg.alpha)?;
    let r = minimize_c(&p, &k, None, &cfg.min)?;
    let summary = MinSummary::new(mu, &r);
    let mut report = format!("c(mu) minimisation, N = {}, alpha = {}, nu = {}, mu = {mu}\n", cfg.n, cfg.alpha, cfg.nu);
    let _ = writeln!(report, "{}", summary.describe());
    let mut artifacts = vec![];
    let mut rep = GroundStateReport {
        min: summary,
        residual_dual: None,
        residual_strong: None,
        min_value: None,
        positive: None,
        energy: None,
        least_energy: None,
        energy_rel_err: None,
    };
    let mut failed = !r.converged;
    let mut shown = r.minimizer.clone();
    if r.converged && r.value > 0.0 {
        let gs = extract_groundstate(&r, &p, &k)?;
        let _ = writeln!(
            report,
            "ground state: PDE residual {:.3e} (dual norm), {:.3e} (grid norm)",
            gs.residual, gs.residual_strong
        );
        let _ = writeln!(report, "min over interior nodes {:.6e}, positive {}", gs.min_value, gs.positive);
        let _ = writeln!(
            report,
            "energy J = {:.12}, least-energy formula = {:.12}, relative difference {:.3e}",
            gs.energy, gs.least_energy, gs.energy_rel_err
        );
        failed |= gs.residual > 1e-6 || !gs.positive;
        rep.residual_dual = Some(gs.residual);
        rep.residual_strong = Some(gs.residual_strong);
        rep.min_value = Some(gs.min_value);
        rep.positive = Some(gs.positive);
        rep.energy = Some(gs.energy);
        rep.least_energy = Some(gs.least_energy);
        rep.energy_rel_err = Some(gs.energy_rel_err);
        artifacts.push(Artifact::csv("groundstate.csv", gs.profile.to_csv()));
        shown = gs.profile;
    } else if r.value <= 0.0 {
        report.push_str("c(mu) <= 0: no positive ground state is extracted at this mu\n");
    } else {
        report.push_str("solver did not converge; the best iterate is reported\n");
    }
    artifacts.push(Artifact::csv("minimizer.csv", r.minimizer.to_csv()));
    artifacts.push(Artifact::json("groundstate.json", &rep)?);
    Ok(Outcome {
        report,
        artifacts,
        plot: Some(Plot {
            title: format!("profile at mu = {mu}"),
            x_label: "r".into(),
            y_label: "u".into(),
            log_x: true,
            series: vec![profile_series("u", &shown, g.r_max() / 2.0)],
        }),
        failed,
    })
}

/// Default scan points as fractions of μ^ν.
pub const SCAN_FRACTIONS: [f64; 8] = [0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 0.995];

pub fn threshold_text(rep: &ThresholdReport) -> String {
    let mut s = format!("threshold scan, N = {}, alpha = {}, nu = {}\n", rep.n, rep.alpha, rep.nu);
    let _ = writeln!(s, "c_inf: numerical {:.12}, closed form {:.12}", rep.c_inf_num, rep.c_inf_closed);
    let _ = writeln!(s, "mu^nu = {:.12}, (N-2)^2/4 = {}", rep.mu_up, rep.hardy);
    let _ = writeln!(
        s,
        "mu_nu estimate = {:.6} (bracket width {:.3e}, gap {:.3e})",
        rep.mu_low_est, rep.bisection_width, rep.tol_gap
    );
    let _ = writeln!(s, "monotone: {}", rep.monotone);
    s.push_str("  mu            c(mu)              converged  grad       boundary   iters\n");
    for p in &rep.scan {
        let _ = writeln!(
            s,
            "  {:<12.6} {:<18.12} {:<10} {:<10.2e} {:<10.2e} {}{}",
            p.mu,
            p.c_value,
            p.converged,
            p.grad_norm,
            p.boundary_mass,
            p.iterations,
            if p.truncation_suspect { " truncation-suspect" } else { "" }
        );
    }
    for b in &rep.bisection {
        let _ = writeln!(s, "  bisection mu = {:.6}: Q = {:.9} below = {}", b.mu, b.q, b.below_threshold);
    }
    for w in &rep.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

pub fn scan(cfg: &RunConfig) -> Result<Outcome> {
    let p = params(cfg, 0.0)?;
    let g = grid(cfg)?;
    let mus = if cfg.mus.is_empty() {
        let up = best_embedding_constant(&g, cfg.nu)?;
        SCAN_FRACTIONS.iter().map(|f| f * up).collect()
    } else {
        cfg.mus.clone()
    };
    let k = kernel(&g, cfg.alpha)?;
    let opts = ScanOptions { min: cfg.min, ..ScanOptions::default() };
    let rep = scan_mu(&p, &k, &mus, &opts).map_err(|e| match e {
        choquard::LabError::InvalidParams(m) => usage(m),
        other => other.into(),
    })?;
    let points = rep.scan.iter().map(|s| (s.mu, s.c_value)).collect();
    Ok(Outcome {
        report: threshold_text(&rep),
        artifacts: vec![Artifact::csv("scan.csv", rep.scan_csv()), Artifact::json("scan.json", &rep)?],
        plot: Some(Plot {
            title: "c(mu)".into(),
            x_label: "mu".into(),
            y_label: "c".into(),
            log_x: false,
            series: vec![Series { label: "c(mu)".into(), points }],
        }),
        failed: !rep.monotone,
    })
}

#[derive(Serialize)]
struct SplitSummary {
    mu: f64,
    n: usize,
    lambdas: Vec<f64>,
    gap: f64,
    coercivity: f64,
    resonant: bool,
}

#[derive(Serialize)]
struct LandscapeReport<'a> {
    mu: f64,
    lambda1: f64,
    defects: Vec<choquard::landscape::EnergyDefect>,
    unresolved_eps: Vec<f64>,
    limit: f64,
    mv_threshold: f64,
    split: SplitSummary,
    d_levels: &'a [(usize, f64)],
    d_estimate: f64,
    q0: f64,
    q1: f64,
    linking: &'a choquard::landscape::LinkingReport,
}

pub fn landscape(cfg: &RunConfig) -> Result<Outcome> {
    params(cfg, 0.0)?;
    let g = grid(cfg)?;
    let spec = solve_spectrum(&g, cfg.nu, cfg.l_max, cfg.count)?;
    let mu = cfg.mu_or(spec.lambda1() + 0.1);
    let p = params(cfg, mu)?;
    let split = spectral_split(&spec, mu).map_err(|e| usage(e.to_string()))?;
    let k = kernel(&g, cfg.alpha)?;
    let fam = build_extremal(&g, &k, cfg.nu, cfg.alpha)?;
    let crit = critical_mu_values(cfg.n, cfg.nu)?;

    let mut report = format!("energy landscape, N = {}, alpha = {}, nu = {}, mu = {mu}\n", cfg.n, cfg.alpha, cfg.nu);
    let _ = writeln!(report, "mu^nu = lambda_1 = {:.12}", spec.lambda1());
    let mut defects = Vec::new();
    let mut unresolved = Vec::new();
    let mut csv = String::from("eps,I_mu,Q,mass,identity_residual\n");
    for &e in &cfg.eps {
        match i_mu_eps(&fam, &k, mu, e) {
            Ok(d) => {
                let resid = ((d.q - (d.mass + e * e * d.value)) / d.q).abs();
                let _ = writeln!(
                    report,
                    "  eps = {e:<6} I_mu = {:+.9}  Q(u_eps) = {:.9}  identity residual {resid:.1e}",
                    d.value, d.q
                );
                let _ = writeln!(csv, "{e},{:.15e},{:.15e},{:.15e},{resid:.3e}", d.value, d.q, d.mass);
                defects.push(d);
            }
            Err(err) => {
                let _ = writeln!(report, "  eps = {e:<6} skipped: {err}");
                unresolved.push(e);
            }
        }
    }
    let limit = i_mu_limit(&fam, mu);
    let _ = writeln!(report, "  eps -> 0 limit {limit:+.9} (sign threshold N^2(N-2)/(4(N+1)) = {})", crit.mv_threshold);
    let lambdas: Vec<f64> = split.basis_minus.iter().map(|b| b.lambda).collect();
    let _ = writeln!(
        report,
        "E-: dimension {} (with multiplicity), gap {:.6}, coercivity {:.6}{}",
        split.n,
        split.gap,
        split.coercivity,
        if split.resonant { ", resonant" } else { "" }
    );
    let probe = d_mu_probe(&p, &k, &split, &cfg.resolutions).map_err(|e| match e {
        choquard::LabError::InvalidParams(m) => usage(m),
        other => other.into(),
    })?;
    let _ = writeln!(report, "path probe: Q(u0) = {:.6}, Q(u1) = {:.6} (k = {})", probe.q0, probe.q1, probe.frequency);
    for (res, v) in &probe.levels {
        let _ = writeln!(report, "  resolution {res:>6}: inf J over Nehari points {v:.3e}");
    }
    let lopts = LinkingOptions { seed: cfg.seed, samples: cfg.samples, ..LinkingOptions::default() };
    let link = linking_sup(&p, &k, &split, &fam, cfg.link_eps, &lopts)?;
    report.push_str(&link.to_text());
    for w in &split.warnings {
        let _ = writeln!(report, "warning: {w}");
    }
    let mut path_csv = String::from("t,q,nehari_energy\n");
    for s in &probe.trace {
        let _ = writeln!(path_csv, "{:.6},{:.15e},{}", s.t, s.q, s.nehari_energy.map_or("NA".into(), |v| format!("{v:.15e}")));
    }
    let json = LandscapeReport {
        mu,
        lambda1: spec.lambda1(),
        defects,
        unresolved_eps: unresolved,
        limit,
        mv_threshold: crit.mv_threshold,
        split: SplitSummary { mu, n: split.n, lambdas, gap: split.gap, coercivity: split.coercivity, resonant: split.resonant },
        d_levels: &probe.levels,
        d_estimate: probe.d_estimate,
        q0: probe.q0,
        q1: probe.q1,
        linking: &link,
    };
    let step = (probe.trace.len() / 500).max(1);
    let points = probe.trace.iter().step_by(step).map(|s| (s.t, s.q)).collect();
    Ok(Outcome {
        artifacts: vec![
            Artifact::csv("defect.csv", csv),
            Artifact::csv("path.csv", path_csv),
            Artifact::text("linking.txt", link.to_text()),
            Artifact::json("landscape.json", &json)?,
        ],
        report,
        plot: Some(Plot {
            title: "Q along the renormalised path".into(),
            x_label: "t".into(),
            y_label: "Q".into(),
            log_x: false,
            series: vec![Series { label: "Q(gamma(t))".into(), points }],
        }),
        failed: false,
    })
}

pub fn asymptotics(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.n_list.iter().any(|&n| n < 3) {
        return Err(usage("every N in --n-list must be >= 3"));
    }
    let rows = asymptotic_ratio_table(&cfg.n_list, cfg.nu)?;
    let mut report = format!("mu^nu / (N^2(N-2)/(4(N+1))) bracket, nu = {}\n", cfg.nu);
    report.push_str("  N      target            lower      upper      width      contains 1\n");
    let mut csv = String::from("N,target,lower_ratio,upper_ratio,p_star,width,contains_one\n");
    for r in &rows {
        let _ = writeln!(
            report,
            "  {:<6} {:<17.9} {:<10.6} {:<10.6} {:<10.3e} {}",
            r.n, r.target, r.lower_ratio, r.upper_ratio, r.width, r.contains_one
        );
        let _ =
            writeln!(csv, "{},{},{},{},{},{},{}", r.n, r.target, r.lower_ratio, r.upper_ratio, r.p_star, r.width, r.contains_one);
    }
    let points = rows.iter().map(|r| (r.n as f64, r.upper_ratio)).collect();
    let lower = rows.iter().map(|r| (r.n as f64, r.lower_ratio)).collect();
    Ok(Outcome {
        report,
        artifacts: vec![Artifact::csv("asymptotics.csv", csv), Artifact::json("asymptotics.json", &rows)?],
        plot: Some(Plot {
            title: "ratio bracket".into(),
            x_label: "N".into(),
            y_label: "ratio".into(),
            log_x: true,
            series: vec![Series { label: "upper".into(), points }, Series { label: "lower".into(), points: lower }],
        }),
        failed: rows.iter().any(|r| !r.contains_one),
    })
}
