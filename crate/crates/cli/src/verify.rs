//! The invariant suite behind `verify`: desk-scale versions of every property the library
//! promises, each reported as one PASS/FAIL line.

use crate::commands::eigen_structure;
use crate::config::RunConfig;
use crate::output::{Artifact, Outcome};
use anyhow::Result;
use choquard::constants::{
    c_inf_closed, critical_mu_values, hls_sharp_constant, pointwise_inequality_check, riesz_constant, ConstantsBundle,
    ProblemParams,
};
use choquard::grid::{Grading, GridSpec, RadialFn, RadialGrid};
use choquard::landscape::{build_extremal, d_mu_probe, i_mu_eps, i_mu_limit, linking_sup, spectral_split, LinkingOptions};
use choquard::riesz::{build_kernel, star_norm};
use choquard::special::gamma;
use choquard::spectrum::{
    asymptotic_ratio_table, decay_rate, ground_pair, minimize_rayleigh, rayleigh_formula, rayleigh_up_discrete, solve_spectrum,
};
use choquard::variational::{extract_groundstate, minimize_c, minimize_c_inf, MinOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::sync::Arc;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn closed_forms() -> Result<Check> {
    let mut worst_gamma = 0.0f64;
    let mut x = 0.5;
    while x <= 30.0 {
        worst_gamma = worst_gamma.max(rel(gamma(x + 1.0)?, x * gamma(x)?));
        x += 0.25;
    }
    let mut positive = true;
    let mut ordered = true;
    for n in 3..=10usize {
        let mut a = 0.25;
        while a < n as f64 {
            positive &= riesz_constant(n, a)? > 0.0 && hls_sharp_constant(n, a)? > 0.0 && c_inf_closed(n, a)? > 0.0;
            a += 0.25;
        }
        let c = critical_mu_values(n, 1.0)?;
        ordered &= c.hardy < c.mv_threshold;
    }
    let above = (3..=5).all(|n| critical_mu_values(n, 1.0).map(|c| c.hardy_plus_nu2 > c.mv_threshold).unwrap_or(false));
    let b = ConstantsBundle::new(&ProblemParams::new(3, 2.0, 0.0, 1.0)?)?;
    let example = (b.hardy, b.mv_threshold, b.hardy_plus_nu2) == (0.25, 0.5625, 1.25);
    Ok(check(
        "closed-form constants",
        worst_gamma <= 1e-12 && positive && ordered && above && example,
        format!("gamma recurrence {worst_gamma:.1e}, positivity {positive}, hardy < threshold {ordered}, nu^2 ordering {above}"),
    ))
}

fn rayleigh_quotients() -> Result<Check> {
    let mut worst = 0.0f64;
    for (n, nu, p) in [(4usize, 1.0, 2.0), (3, 1.0, 3.0), (12, 1.0, 4.0)] {
        let g = RadialGrid::build(GridSpec::new(n, 80.0 * nu, 1600, Grading::Sinh { core: nu }))?;
        worst = worst.max(rel(rayleigh_up_discrete(&g, nu, p)?, rayleigh_formula(n, nu, p)));
    }
    Ok(check("Rayleigh quotient of u_p", worst <= 1e-3, format!("max relative difference {worst:.3e}")))
}

fn embedding_bracket() -> Result<Check> {
    let mut ok = true;
    let mut worst_res = 0.0f64;
    let mut detail = String::new();
    for n in [3usize, 4, 5] {
        for nu in [1.0, 2.0] {
            let g = RadialGrid::build(GridSpec::new(n, 80.0 * nu, 1600, Grading::Sinh { core: nu }))?;
            let pair = ground_pair(&g, nu)?;
            let lo = critical_mu_values(n, nu)?.hardy_plus_nu2;
            let (_, hi) = minimize_rayleigh(n, nu);
            ok &= lo < pair.lambda && pair.lambda < hi;
            worst_res = worst_res.max(pair.residual);
            let _ = write!(detail, "({n},{nu}): {:.6} ", pair.lambda);
        }
    }
    Ok(check("embedding-constant bracket", ok && worst_res <= 1e-8, format!("{detail}max residual {worst_res:.1e}")))
}

fn eigen_structure_check() -> Result<Check> {
    let g = RadialGrid::build(GridSpec::new(3, 80.0, 1600, Grading::Sinh { core: 1.0 }))?;
    let spec = solve_spectrum(&g, 1.0, 2, 6)?;
    let (orth, norm) = eigen_structure(&spec);
    let delta = decay_rate(&spec.pairs[0].func)?;
    let positive = spec.pairs[0].func.values[..g.len() - 1].iter().all(|v| *v > 0.0);
    Ok(check(
        "eigen-structure",
        orth <= 1e-8 && norm <= 1e-8 && (delta - 1.0).abs() <= 0.1 && positive,
        format!("H1 cosine {orth:.1e}, normalisation {norm:.1e}, decay {delta:.4}, phi_1 positive {positive}"),
    ))
}

fn asymptotics() -> Result<Check> {
    let rows = asymptotic_ratio_table(&[10, 25, 50, 100, 200, 400], 1.0)?;
    let contains = rows.iter().all(|r| r.contains_one);
    let w100 = rows[3].width;
    let w200 = rows[4].width;
    let w400 = rows[5].width;
    Ok(check(
        "asymptotic bracket",
        contains && w400 < w100 && w200 <= 0.05,
        format!("width N=100 {w100:.4}, N=200 {w200:.4}, N=400 {w400:.4}"),
    ))
}

fn inequalities(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point_fail = 0usize;
    for _ in 0..1_000_000 {
        let a = rng.gen_range(-1e3..1e3);
        let b = rng.gen_range(-1e3..1e3);
        let p = rng.gen_range(1.0001..1.9999);
        point_fail += usize::from(!pointwise_inequality_check(a, b, p));
    }
    let g = RadialGrid::build(GridSpec::new(3, 60.0, 120, Grading::Sinh { core: 1.0 }))?;
    let k = build_kernel(&g, 2.0)?;
    let params = ProblemParams::new(3, 2.0, 0.0, 1.0)?;
    let m = g.len();
    let bump = |rng: &mut ChaCha8Rng| -> Result<RadialFn> {
        let spec: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..4))
            .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(0.0..8.0), rng.gen_range(0.3..4.0)))
            .collect();
        let mut v: Vec<f64> =
            g.nodes.iter().map(|&r| spec.iter().map(|&(a, c, w)| a * (-((r - c) / w).powi(2)).exp()).sum()).collect();
        v[m - 1] = 0.0;
        Ok(RadialFn::new(g.clone(), v, 0)?)
    };
    let mut tri_fail = 0usize;
    for _ in 0..1000 {
        let u = bump(&mut rng)?;
        let v = bump(&mut rng)?;
        let w = RadialFn::new(g.clone(), u.values.iter().zip(&v.values).map(|(a, b)| a + b).collect(), 0)?;
        let (nu_, nv, nw) = (star_norm(&k, &u, &params)?, star_norm(&k, &v, &params)?, star_norm(&k, &w, &params)?);
        tri_fail += usize::from(nw > (nu_ + nv) * (1.0 + 1e-12));
    }
    let mut sym_fail = 0usize;
    let mut psd_fail = 0usize;
    for _ in 0..1000 {
        let (i, j) = (rng.gen_range(0..m), rng.gen_range(0..m));
        sym_fail += usize::from(k.entry(i, j) != k.entry(j, i) || !(k.entry(i, j) > 0.0));
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let kx = k.apply_values(&x);
        let terms: Vec<f64> = (0..m).map(|i| x[i] * g.weights[i] * kx[i]).collect();
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        psd_fail += usize::from(terms.iter().sum::<f64>() < -1e-12 * scale);
    }
    Ok(check(
        "inequality suites",
        point_fail + tri_fail + sym_fail + psd_fail == 0,
        format!(
            "violations: pointwise {point_fail}/1e6, triangle {tri_fail}/1e3, symmetry {sym_fail}/1e3, positivity {psd_fail}/1e3"
        ),
    ))
}

fn variational() -> Result<Vec<Check>> {
    let g = RadialGrid::build(GridSpec::new(3, 600.0, 360, Grading::Sinh { core: 1.0 }))?;
    let k = build_kernel(&g, 2.0)?;
    let base = ProblemParams::new(3, 2.0, 0.0, 1.0)?;
    let opts = MinOptions::default();
    let cinf = minimize_c_inf(&k, &base, None, &opts)?;
    let closed = c_inf_closed(3, 2.0)?;
    let fam = build_extremal(&g, &k, 1.0, 2.0)?;
    let hls = k.g_values(&fam.profile.values) / (riesz_constant(3, 2.0)? * hls_sharp_constant(3, 2.0)? * fam.mass.powf(base.p()));
    let mut out = vec![check(
        "c_inf consistency",
        cinf.converged && rel(cinf.value, closed) <= 1e-3 && (hls - 1.0).abs() <= 1e-3,
        format!("numerical {:.9}, closed {closed:.9}, extremal HLS ratio {hls:.6}", cinf.value),
    )];

    let up = ground_pair(&g, 1.0)?.lambda;
    let mut levels = Vec::new();
    let mut warm: Option<RadialFn> = None;
    for mu in [1.0, 2.0, 3.0, 4.0, up + 0.5] {
        let r = minimize_c(&base.with_mu(mu), &k, warm.as_ref(), &opts)?;
        warm = Some(r.minimizer.clone());
        levels.push((mu, r.value));
    }
    let monotone = levels.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-10);
    let negative = levels.last().map_or(false, |l| l.1 < 0.0);
    out.push(check(
        "level structure",
        monotone && negative,
        format!("c = {}", levels.iter().map(|(m, c)| format!("{m:.3}:{c:.6}")).collect::<Vec<_>>().join(" ")),
    ));

    let pm = base.with_mu(2.5);
    let r = minimize_c(&pm, &k, None, &opts)?;
    let gs = extract_groundstate(&r, &pm, &k)?;
    out.push(check(
        "ground state and least energy",
        gs.positive && gs.residual <= 1e-6 && gs.energy_rel_err <= 1e-6,
        format!("residual {:.1e}, min {:.3e}, energy identity {:.1e}", gs.residual, gs.min_value, gs.energy_rel_err),
    ));
    Ok(out)
}

fn landscape(seed: u64) -> Result<Check> {
    let g: Arc<RadialGrid> = RadialGrid::build(GridSpec::new(4, 400.0, 240, Grading::Sinh { core: 1.0 }))?;
    let k = build_kernel(&g, 2.0)?;
    let spec = solve_spectrum(&g, 1.0, 1, 3)?;
    let mu = spec.lambda1() + 0.1;
    let params = ProblemParams::new(4, 2.0, mu, 1.0)?;
    let split = spectral_split(&spec, mu)?;
    let fam = build_extremal(&g, &k, 1.0, 2.0)?;
    let d = i_mu_eps(&fam, &k, 2.0, 0.05)?;
    let identity = rel(d.q, d.mass + 0.0025 * d.value);
    let signs = d.value < 0.0 && i_mu_limit(&fam, 1.5) > 0.0;
    let probe = d_mu_probe(&params, &k, &split, &[100, 1000, 10000])?;
    let decreasing = probe.levels.windows(2).all(|w| w[1].1 <= w[0].1);
    let opts = LinkingOptions { seed, samples: 1024, ..LinkingOptions::default() };
    let link = linking_sup(&params, &k, &split, &fam, 0.05, &opts)?;
    Ok(check(
        "landscape above mu^nu",
        identity <= 1e-6 && signs && probe.d_estimate <= 1e-3 && decreasing && link.pass,
        format!(
            "identity {identity:.1e}, I_mu(0.05) {:.4}, d {:.2e}, sup {:.6} < beta {:.6}",
            d.value, probe.d_estimate, link.sup_estimate, link.beta
        ),
    ))
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let mut checks = vec![closed_forms()?, rayleigh_quotients()?, embedding_bracket()?, eigen_structure_check()?, asymptotics()?];
    checks.push(inequalities(cfg.seed)?);
    checks.extend(variational()?);
    checks.push(landscape(cfg.seed)?);
    let mut report = String::from("invariant suite\n");
    let mut csv = String::from("check,result,detail\n");
    for c in &checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(report, "{verdict} {}: {}", c.name, c.detail);
        let _ = writeln!(csv, "{},{verdict},\"{}\"", c.name, c.detail.replace('"', "'"));
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let _ = writeln!(report, "summary: {passed}/{} checks passed", checks.len());
    Ok(Outcome { report, artifacts: vec![Artifact::csv("verify.csv", csv)], plot: None, failed: passed < checks.len() })
}
