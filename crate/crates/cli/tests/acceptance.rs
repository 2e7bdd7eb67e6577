//! Acceptance run: one PASS/FAIL line per criterion, then a single assertion over all of them.
//! Each criterion also carries its wall-clock budget.

use choquard::constants::{
    c_inf_closed, critical_mu_values, hls_sharp_constant, pointwise_inequality_check, riesz_constant, ProblemParams,
};
use choquard::grid::{l2_squared, Grading, GridSpec, RadialFn, RadialGrid};
use choquard::landscape::{build_extremal, d_mu_probe, i_mu_eps, i_mu_limit, linking_sup, spectral_split, LinkingOptions};
use choquard::riesz::{build_kernel, star_norm, RieszKernel};
use choquard::spectrum::{
    asymptotic_ratio_table, decay_rate, ground_pair, minimize_rayleigh, rayleigh_formula, rayleigh_up_discrete, solve_spectrum,
};
use choquard::variational::{extract_groundstate, minimize_c, minimize_c_inf, scan_mu, MinOptions, ScanOptions};
use choquard_cli::commands::eigen_structure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::{Duration, Instant};

type Outcome = Result<(bool, String), String>;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn sinh_grid(n: usize, r_max: f64, m: usize, core: f64) -> Result<Arc<RadialGrid>, String> {
    RadialGrid::build(GridSpec::new(n, r_max, m, Grading::Sinh { core })).map_err(err)
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    for (n, nu, p) in [(4usize, 1.0, 2.0), (3, 1.0, 3.0), (12, 1.0, 4.0)] {
        let g = sinh_grid(n, 80.0 * nu, 1600, nu)?;
        worst = worst.max(rel(rayleigh_up_discrete(&g, nu, p).map_err(err)?, rayleigh_formula(n, nu, p)));
    }
    Ok((worst <= 1e-3, format!("max rel diff {worst:.2e}")))
}

fn criterion_2() -> Outcome {
    let mut inside = true;
    let mut worst_res = 0.0f64;
    for n in [3usize, 4, 5] {
        for nu in [1.0, 2.0] {
            let g = sinh_grid(n, 80.0 * nu, 1600, nu)?;
            let pair = ground_pair(&g, nu).map_err(err)?;
            let lo = critical_mu_values(n, nu).map_err(err)?.hardy_plus_nu2;
            let (_, hi) = minimize_rayleigh(n, nu);
            inside &= lo < pair.lambda && pair.lambda < hi;
            worst_res = worst_res.max(pair.residual);
        }
    }
    Ok((inside && worst_res <= 1e-8, format!("strictly inside {inside}, max residual {worst_res:.1e}")))
}

fn criterion_3() -> Outcome {
    let rows = asymptotic_ratio_table(&[10, 25, 50, 100, 200, 400], 1.0).map_err(err)?;
    let contains = rows.iter().all(|r| r.contains_one);
    let (w100, w200, w400) = (rows[3].width, rows[4].width, rows[5].width);
    Ok((contains && w400 < w100 && w200 <= 0.05, format!("contains 1 {contains}, widths {w100:.4} / {w200:.4} / {w400:.4}")))
}

fn criterion_4() -> Outcome {
    let opts = MinOptions::default();
    let mut worst = 0.0f64;
    let mut hls_worst_ratio = 0.0f64;
    let mut hls_violations = 0usize;
    let mut extremal_gap = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (n, alpha) in [(3usize, 2.0), (4, 2.0), (5, 3.0)] {
        let g = sinh_grid(n, 1000.0, 500, 1.0)?;
        let k = build_kernel(&g, alpha).map_err(err)?;
        let params = ProblemParams::new(n, alpha, 0.0, 1.0).map_err(err)?;
        let r = minimize_c_inf(&k, &params, None, &opts).map_err(err)?;
        worst = worst.max(rel(r.value, c_inf_closed(n, alpha).map_err(err)?));
        let bound = riesz_constant(n, alpha).map_err(err)? * hls_sharp_constant(n, alpha).map_err(err)?;
        let p = params.p();
        let ratio = |u: &RadialFn| k.g_values(&u.values) / (bound * l2_squared(u).powf(p));
        if n == 3 {
            for _ in 0..1000 {
                let u = random_bumps(&g, &mut rng)?;
                let q = ratio(&u);
                hls_worst_ratio = hls_worst_ratio.max(q);
                hls_violations += usize::from(q > 1.0 + 1e-3);
            }
        }
        let fam = build_extremal(&g, &k, 1.0, alpha).map_err(err)?;
        extremal_gap = extremal_gap.max((ratio(&fam.profile) - 1.0).abs());
    }
    Ok((
        worst <= 1e-3 && hls_violations == 0 && extremal_gap <= 1e-3,
        format!(
            "c_inf max rel err {worst:.2e}, HLS violations {hls_violations}/1000 (max ratio {hls_worst_ratio:.6}), extremal |ratio-1| {extremal_gap:.2e}"
        ),
    ))
}

fn random_bumps(g: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> Result<RadialFn, String> {
    let terms: Vec<(f64, f64, f64)> =
        (0..rng.gen_range(1..4)).map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(0.0..8.0), rng.gen_range(0.3..4.0))).collect();
    let mut v: Vec<f64> =
        g.nodes.iter().map(|&r| terms.iter().map(|&(a, c, w)| a * (-((r - c) / w).powi(2)).exp()).sum()).collect();
    if let Some(last) = v.last_mut() {
        *last = 0.0;
    }
    RadialFn::new(g.clone(), v, 0).map_err(err)
}

/// Criteria 5 and 6 share one grid, kernel and ground state.
fn criteria_5_and_6() -> Result<(Outcome, Outcome), String> {
    let g = sinh_grid(3, 1000.0, 500, 1.0)?;
    let k = build_kernel(&g, 2.0).map_err(err)?;
    let base = ProblemParams::new(3, 2.0, 0.0, 1.0).map_err(err)?;
    let up = ground_pair(&g, 1.0).map_err(err)?.lambda;
    let fractions = [0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 0.995];
    let mus: Vec<f64> = fractions.iter().map(|f| f * up).collect();
    let rep = scan_mu(&base, &k, &mus, &ScanOptions::default()).map_err(err)?;
    let monotone = rep.scan.windows(2).all(|w| w[1].c_value <= w[0].c_value + 1e-10);

    let opts = MinOptions::default();
    let at_up = minimize_c(&base.with_mu(up), &k, None, &opts).map_err(err)?.value;
    let above = minimize_c(&base.with_mu(up + 0.5), &k, None, &opts).map_err(err)?.value;

    let mu_d = 0.5 * (rep.mu_low_est + up);
    let pd = base.with_mu(mu_d);
    let md = minimize_c(&pd, &k, None, &opts).map_err(err)?;
    let gs = extract_groundstate(&md, &pd, &k).map_err(err)?;
    let d_ok = md.value > 0.0 && gs.residual <= 1e-6 && gs.positive;
    let e_ok = rep.mu_low_est >= 0.25 - 1e-3 && rep.mu_low_est < up;

    let five = (
        monotone && at_up.abs() <= 5e-3 && above < 0.0 && d_ok && e_ok,
        format!(
            "(a) monotone {monotone}; (b) c(mu^nu={up:.6}) = {at_up:.2e}; (c) c(mu^nu+0.5) = {above:.4}; \
             (d) mu = {mu_d:.4}: c = {:.4}, residual {:.1e}, positive {}; (e) mu_nu = {:.4} in [0.249, {up:.4})",
            md.value, gs.residual, gs.positive, rep.mu_low_est
        ),
    );
    let six = (
        gs.energy_rel_err <= 1e-6,
        format!(
            "mu = {mu_d:.4}: Nehari energy {:.10} vs formula {:.10}, rel {:.1e}",
            gs.energy, gs.least_energy, gs.energy_rel_err
        ),
    );
    Ok((Ok(five), Ok(six)))
}

fn criterion_7() -> Outcome {
    let g = sinh_grid(4, 1000.0, 500, 1.0)?;
    let k: RieszKernel = build_kernel(&g, 2.0).map_err(err)?;
    let fam = build_extremal(&g, &k, 1.0, 2.0).map_err(err)?;
    // N = 4: the sign threshold is N^2 (N-2) / (4 (N+1)) = 1.6
    let eps = 0.05;
    let d = i_mu_eps(&fam, &k, 2.0, eps).map_err(err)?;
    let identity = rel(d.q, d.mass + eps * eps * d.value);
    let a_ok = d.value < 0.0 && i_mu_limit(&fam, 2.0) < 0.0 && i_mu_limit(&fam, 1.5) > 0.0 && identity <= 1e-6;

    let spec = solve_spectrum(&g, 1.0, 2, 6).map_err(err)?;
    let mu = spec.lambda1() + 0.1;
    let params = ProblemParams::new(4, 2.0, mu, 1.0).map_err(err)?;
    let split = spectral_split(&spec, mu).map_err(err)?;
    let probe = d_mu_probe(&params, &k, &split, &[100, 1000, 10000]).map_err(err)?;
    let decreasing = probe.levels.windows(2).all(|w| w[1].1 <= w[0].1);
    let b_ok = probe.d_estimate <= 1e-3 && decreasing;

    let link = linking_sup(&params, &k, &split, &fam, eps, &LinkingOptions::default()).map_err(err)?;
    Ok((
        a_ok && b_ok && link.pass,
        format!(
            "(a) I_2(0.05) = {:.4}, identity {identity:.1e}; (b) d = {:.2e}, nonincreasing {decreasing}; \
             (c) mu = {mu:.4}: sup {:.6} < beta {:.6} {}",
            d.value,
            probe.d_estimate,
            link.sup_estimate,
            link.beta,
            if link.pass { "PASS" } else { "FAIL" }
        ),
    ))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240531);
    let mut point = 0usize;
    for _ in 0..1_000_000 {
        let (a, b) = (rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3));
        point += usize::from(!pointwise_inequality_check(a, b, rng.gen_range(1.0001..1.9999)));
    }
    let g = sinh_grid(3, 60.0, 120, 1.0)?;
    let k = build_kernel(&g, 2.0).map_err(err)?;
    let params = ProblemParams::new(3, 2.0, 0.0, 1.0).map_err(err)?;
    let mut tri = 0usize;
    for _ in 0..1000 {
        let u = random_bumps(&g, &mut rng)?;
        let v = random_bumps(&g, &mut rng)?;
        let w = RadialFn::new(g.clone(), u.values.iter().zip(&v.values).map(|(a, b)| a + b).collect(), 0).map_err(err)?;
        let norm = |f: &RadialFn| star_norm(&k, f, &params).map_err(err);
        tri += usize::from(norm(&w)? > (norm(&u)? + norm(&v)?) * (1.0 + 1e-12));
    }
    let m = g.len();
    let mut kernel_bad = 0usize;
    for _ in 0..1000 {
        let (i, j) = (rng.gen_range(0..m), rng.gen_range(0..m));
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let kx = k.apply_values(&x);
        let terms: Vec<f64> = (0..m).map(|i| x[i] * g.weights[i] * kx[i]).collect();
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        let sym = k.entry(i, j) == k.entry(j, i) && k.entry(i, j) > 0.0;
        kernel_bad += usize::from(!sym || terms.iter().sum::<f64>() < -1e-12 * scale);
    }
    Ok((point + tri + kernel_bad == 0, format!("violations: pointwise {point}/1e6, triangle {tri}/1e3, kernel {kernel_bad}/1e3")))
}

fn criterion_9() -> Outcome {
    let g = sinh_grid(3, 80.0, 1600, 1.0)?;
    let spec = solve_spectrum(&g, 1.0, 2, 6).map_err(err)?;
    let (orth, norm) = eigen_structure(&spec);
    let delta = decay_rate(&spec.pairs[0].func).map_err(err)?;
    Ok((
        orth <= 1e-8 && norm <= 1e-8 && delta > 0.0 && (delta - 1.0).abs() <= 0.1,
        format!("H1 cosine {orth:.1e}, normalisation {norm:.1e}, decay rate {delta:.4}"),
    ))
}

fn criterion_10() -> Outcome {
    let run = |dir: &std::path::Path| -> Result<(i32, Vec<u8>), String> {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_choquard"))
            .args(["verify", "--seed", "20240531", "--out"])
            .arg(dir)
            .output()
            .map_err(err)?;
        Ok((out.status.code().unwrap_or(-1), out.stdout))
    };
    let (a, b) = (tempfile::tempdir().map_err(err)?, tempfile::tempdir().map_err(err)?);
    let (code_a, out_a) = run(a.path())?;
    let (code_b, out_b) = run(b.path())?;
    let mut files_equal = true;
    let mut names = Vec::new();
    for entry in std::fs::read_dir(a.path()).map_err(err)? {
        let name = entry.map_err(err)?.file_name();
        let x = std::fs::read(a.path().join(&name)).map_err(err)?;
        let y = std::fs::read(b.path().join(&name)).unwrap_or_default();
        files_equal &= x == y;
        names.push(name.to_string_lossy().into_owned());
    }
    names.sort();
    Ok((
        code_a == 0 && code_b == 0 && out_a == out_b && files_equal && !names.is_empty(),
        format!("exit codes {code_a}/{code_b}, stdout identical {}, files {names:?} identical {files_equal}", out_a == out_b),
    ))
}

fn report(k: usize, budget: Duration, elapsed: Duration, outcome: Outcome) -> bool {
    let (pass, detail) = match outcome {
        Ok((pass, detail)) => (pass && elapsed <= budget, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {k}: {verdict} [{:.1} s of {} s] {detail}", elapsed.as_secs_f64(), budget.as_secs());
    pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut passed = Vec::new();
    let timed = |f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (t.elapsed(), o)
    };

    let (t, o) = timed(&criterion_1);
    passed.push(report(1, secs(30), t, o));
    let (t, o) = timed(&criterion_2);
    passed.push(report(2, secs(60), t, o));
    let (t, o) = timed(&criterion_3);
    passed.push(report(3, secs(1), t, o));
    let (t, o) = timed(&criterion_4);
    passed.push(report(4, secs(300), t, o));

    let start = Instant::now();
    let (five, six) = match criteria_5_and_6() {
        Ok(pair) => pair,
        Err(e) => (Err(e.clone()), Err(e)),
    };
    let t = start.elapsed();
    passed.push(report(5, secs(600), t, five));
    passed.push(report(6, secs(600), t, six));

    let (t, o) = timed(&criterion_7);
    passed.push(report(7, secs(600), t, o));
    let (t, o) = timed(&criterion_8);
    passed.push(report(8, secs(120), t, o));
    let (t, o) = timed(&criterion_9);
    passed.push(report(9, secs(60), t, o));
    let (t, o) = timed(&criterion_10);
    passed.push(report(10, secs(600), t, o));

    let failed: Vec<usize> = passed.iter().enumerate().filter(|(_, p)| !**p).map(|(i, _)| i + 1).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
