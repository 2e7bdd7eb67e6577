use choquard::constants::{hls_sharp_constant, pointwise_inequality_check, riesz_constant, ProblemParams};
use choquard::grid::{l2_squared, Grading, GridSpec, RadialFn, RadialGrid};
use choquard::landscape::build_extremal;
use choquard::riesz::{build_kernel, star_norm, RieszKernel};
use proptest::prelude::*;
use std::sync::{Arc, OnceLock};

fn fixture(n: usize, alpha: f64) -> &'static (Arc<RadialGrid>, RieszKernel) {
    static N3: OnceLock<(Arc<RadialGrid>, RieszKernel)> = OnceLock::new();
    static N4: OnceLock<(Arc<RadialGrid>, RieszKernel)> = OnceLock::new();
    let cell = if n == 3 { &N3 } else { &N4 };
    assert!(alpha == if n == 3 { 2.0 } else { 1.0 });
    cell.get_or_init(|| {
        let g = RadialGrid::build(GridSpec::new(n, 60.0, 120, Grading::Sinh { core: 1.0 })).unwrap();
        let k = build_kernel(&g, alpha).unwrap();
        (g, k)
    })
}

/// Sum of Gaussian bumps with the given (amplitude, centre, width) triples.
fn bumps(grid: &Arc<RadialGrid>, spec: &[(f64, f64, f64)]) -> RadialFn {
    let mut u = RadialFn::from_fn(grid.clone(), 0, |r| spec.iter().map(|&(a, c, w)| a * (-((r - c) / w).powi(2)).exp()).sum());
    *u.values.last_mut().unwrap() = 0.0;
    u
}

fn bump_strategy() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, 0.0..8.0f64, 0.3..4.0f64), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn pointwise_inequality_holds(a in -1e3..1e3f64, b in -1e3..1e3f64, p in 1.0001..1.9999f64) {
        prop_assert!(pointwise_inequality_check(a, b, p));
    }

    #[test]
    fn star_norm_triangle_inequality(su in bump_strategy(), sv in bump_strategy(), n4 in any::<bool>()) {
        let (n, alpha) = if n4 { (4, 1.0) } else { (3, 2.0) };
        let (g, k) = fixture(n, alpha);
        let params = ProblemParams::new(n, alpha, 0.0, 1.0).unwrap();
        let u = bumps(g, &su);
        let v = bumps(g, &sv);
        let w = RadialFn::new(g.clone(), u.values.iter().zip(&v.values).map(|(a, b)| a + b).collect(), 0).unwrap();
        let nu = star_norm(k, &u, &params).unwrap();
        let nv = star_norm(k, &v, &params).unwrap();
        let nw = star_norm(k, &w, &params).unwrap();
        prop_assert!(nw <= (nu + nv) * (1.0 + 1e-12), "{nw} > {nu} + {nv}");
    }

    #[test]
    fn hls_bound_on_random_functions(s in bump_strategy(), n4 in any::<bool>()) {
        let (n, alpha) = if n4 { (4, 1.0) } else { (3, 2.0) };
        let (g, k) = fixture(n, alpha);
        let u = bumps(g, &s);
        let p = (n as f64 + alpha) / n as f64;
        let bound = riesz_constant(n, alpha).unwrap() * hls_sharp_constant(n, alpha).unwrap() * l2_squared(&u).powf(p);
        prop_assert!(k.g_values(&u.values) <= bound * (1.0 + 1e-3));
    }

    #[test]
    fn kernel_is_symmetric_and_positive(x in prop::collection::vec(-1.0..1.0f64, 120), i in 0..120usize, j in 0..120usize, n4 in any::<bool>()) {
        let (n, alpha) = if n4 { (4, 1.0) } else { (3, 2.0) };
        let (g, k) = fixture(n, alpha);
        prop_assert_eq!(k.entry(i, j), k.entry(j, i));
        prop_assert!(k.entry(i, j) > 0.0);
        let f: Vec<f64> = x.iter().zip(&g.weights).map(|(a, w)| a * w).collect();
        let kx = k.apply_values(&x);
        let q: f64 = f.iter().zip(&kx).map(|(a, b)| a * b).sum();
        let scale: f64 = f.iter().zip(&kx).map(|(a, b)| (a * b).abs()).sum();
        prop_assert!(q >= -1e-12 * scale, "x^T K x = {q}");
    }
}

#[test]
fn hls_is_saturated_by_the_extremal() {
    let g = RadialGrid::build(GridSpec::new(3, 1000.0, 500, Grading::Sinh { core: 1.0 })).unwrap();
    let k = build_kernel(&g, 2.0).unwrap();
    let fam = build_extremal(&g, &k, 1.0, 2.0).unwrap();
    let bound = riesz_constant(3, 2.0).unwrap() * hls_sharp_constant(3, 2.0).unwrap() * fam.mass.powf(5.0 / 3.0);
    let ratio = k.g_values(&fam.profile.values) / bound;
    assert!((ratio - 1.0).abs() < 1e-3, "G(U)/bound = {ratio}");
}
