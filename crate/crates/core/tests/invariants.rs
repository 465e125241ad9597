use std::sync::OnceLock;

use proptest::prelude::*;

use halfcurve::arith::padic::slope_factorization;
use halfcurve::arith::{newton_polygon, Poly};
use halfcurve::dirichlet::{component_index, quadratic, DirichletChar};
use halfcurve::eigencurve::{involution_on_systems, scan, ScanConfig, ScanReport, WeightPoint};
use halfcurve::hecke::{t_ell_integral, t_ellsq_half, u_ellsq_half, EigenSystem, OpLabel};
use halfcurve::qseries::{theta, theta_psi, QSeries};
use halfcurve::shimura::{lift_coefficients, recursion_failure, sh_on_points};
use halfcurve::spaces::{build_space, space_precision, SpaceCache};
use halfcurve::Rational;

fn small_scan() -> &'static ScanReport {
    static R: OnceLock<ScanReport> = OnceLock::new();
    R.get_or_init(|| {
        let cfg = ScanConfig::new(5, 1, DirichletChar::trivial(4), ScanConfig::full_grid(5, &[1, 2])).unwrap();
        scan(&cfg).unwrap()
    })
}

fn half_systems() -> Vec<&'static EigenSystem> {
    small_scan()
        .points
        .iter()
        .flat_map(|pt| pt.half_systems.iter().map(|h| &h.system))
        .collect()
}

#[test]
fn involution_squares_to_identity() {
    let systems = half_systems();
    assert!(!systems.is_empty());
    for s in systems {
        let once = involution_on_systems(s).unwrap();
        assert_ne!(once.j, s.j);
        let twice = involution_on_systems(&once).unwrap();
        assert!(twice.equivalent(s), "involution twice moved a system at j = {}", s.j);
    }
}

#[test]
fn sh_keeps_hecke_eigenvalues() {
    for s in half_systems() {
        let t = sh_on_points(s).unwrap();
        assert_eq!(t.lambda, 2 * s.lambda);
        assert_eq!(t.j, (2 * s.j) % (s.p - 1));
        for (label, _) in &s.eigenvalues {
            let target = match label {
                OpLabel::Tsq(l) => OpLabel::T(*l),
                OpLabel::Usq(l) => OpLabel::U(*l),
                _ => continue,
            };
            assert_eq!(s.value(label), t.value(&target), "{label} vs {target}");
        }
        assert!(t.eigenvalues.iter().all(|(l, _)| matches!(l, OpLabel::T(_) | OpLabel::U(_))));
    }
}

#[test]
fn scan_is_consistent() {
    let r = small_scan();
    assert!(r.all_ok());
    for pt in &r.points {
        for s in [&pt.half, &pt.integral].into_iter().flatten() {
            assert!(s.factors_consistent());
        }
    }
}

#[test]
fn half_operators_preserve_the_space() {
    let chi = DirichletChar::trivial(20);
    let s = build_space(5, 20, &chi, true, space_precision(5, 20, 25)).unwrap();
    let t3 = t_ellsq_half(&s, 3).unwrap();
    let u5 = u_ellsq_half(&s, 5).unwrap();
    assert!(t3.is_endomorphism() && u5.is_endomorphism());
    assert_eq!(t3.matrix.mul(&u5.matrix), u5.matrix.mul(&t3.matrix));
}

#[test]
fn delta_is_a_t2_eigenform() {
    let s = build_space(24, 1, &DirichletChar::trivial(1), true, space_precision(24, 1, 4)).unwrap();
    assert_eq!(s.dim(), 1);
    let t2 = t_ell_integral(&s, 2).unwrap();
    assert_eq!(t2.matrix.get(0, 0).to_string(), "-24");
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = SpaceCache::new(dir.path());
    for (k2, level, chi) in [
        (4u64, 11u64, DirichletChar::trivial(11)),
        (5, 12, DirichletChar::trivial(12)),
        (6, 7, quadratic(-7).extend(7).unwrap()),
    ] {
        let prec = space_precision(k2, level, 2);
        let built = cache.get_or_build(k2, level, &chi, true, prec).unwrap();
        let loaded = cache.load(&built.key()).unwrap();
        assert_eq!(built.basis(), loaded.basis());
        assert_eq!(built.name(), loaded.name());
        assert_eq!(built.pivots(), loaded.pivots());
    }
}

#[test]
fn theta_squared_counts_sums_of_two_squares() {
    let t2 = theta(200).pow(2);
    for n in 1..200usize {
        // r_2(n) = 4 Σ_{d | n} χ_{−4}(d)
        let chi = quadratic(-4);
        let s: i64 = (1..=n)
            .filter(|d| n % d == 0)
            .map(|d| chi.eval_rational(d as i64).unwrap().to_string().parse::<i64>().unwrap())
            .sum();
        assert_eq!(t2.coeff(n).to_string(), (4 * s).to_string(), "n = {n}");
    }
}

#[test]
fn e_psi_lift_satisfies_recursion() {
    let psi = quadratic(-3);
    let prec = 80;
    let th = theta_psi(&psi, prec * prec).unwrap();
    let eps = quadratic(12).extend(36).unwrap();
    let a = lift_coefficients(&th, 1, &eps, 36, prec).unwrap();
    assert_eq!(recursion_failure(&a, &eps, 1, 36).unwrap(), None);
}

fn fredholm() -> impl Strategy<Value = (u64, Poly<Rational>)> {
    (prop::sample::select(vec![2u64, 3, 5, 7]), prop::collection::vec((0u32..5, -30i64..30), 1..9)).prop_map(
        |(p, cs)| {
            let mut c = vec![Rational::one()];
            for (e, u) in cs {
                let u = if u == 0 { 1 } else { u };
                c.push(Rational::from_int(p as i64).pow(e as i64).mul(&Rational::from_int(u)));
            }
            (p, Poly::new(c))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partner_is_an_involution(lambda in 1u64..6, j in -20i64..20, pi in 0usize..4) {
        let p = [3u64, 5, 7, 11][pi];
        let w = WeightPoint::new(lambda, j, p).unwrap();
        prop_assert_eq!(w.partner().partner(), w.clone());
        prop_assert_ne!(w.partner().component(), w.component());
        prop_assert_eq!((w.component() + (p - 1) / 2) % (p - 1), w.partner().component());
    }

    #[test]
    fn component_doubles(lambda in 0u64..20, j in -40i64..40, pi in 0usize..4) {
        let p = [3u64, 5, 7, 11][pi];
        let i = component_index(lambda, j, p);
        prop_assert_eq!(component_index(2 * lambda, 2 * j, p), (2 * i) % (p - 1));
    }

    #[test]
    fn slope_factors_rebuild_the_polynomial((p, f) in fredholm()) {
        let parts = slope_factorization(&f, p).unwrap();
        let total: usize = parts.iter().map(|(_, g)| g.poly.degree().unwrap_or(0)).sum();
        prop_assert_eq!(Some(total), f.degree());
        let prod = parts.iter().fold(Poly::one(), |acc: Poly<Rational>, (_, g)| acc.mul(&g.poly));
        let diff = prod.sub(&f);
        match parts.iter().filter_map(|(_, g)| g.precision).min() {
            None => prop_assert!(diff.is_zero()),
            Some(prec) => prop_assert!(diff.coeffs().iter().all(|c| c.is_zero() || c.valuation(p).unwrap() >= prec)),
        }
        let np = newton_polygon(&f, p).unwrap();
        let mut from_parts: Vec<Rational> = parts
            .iter()
            .flat_map(|(s, g)| std::iter::repeat_n(s.clone(), g.poly.degree().unwrap_or(0)))
            .collect();
        from_parts.sort();
        let mut slopes = np.slope_multiset();
        slopes.sort();
        prop_assert_eq!(from_parts, slopes);
    }

    #[test]
    fn series_product_divides_back(a in prop::collection::vec(-9i64..9, 1..30), b in prop::collection::vec(-9i64..9, 1..30)) {
        let mut b = b;
        b[0] = 1;
        let n = a.len().min(b.len());
        let f = QSeries::from_ints(&a[..n]);
        let g = QSeries::from_ints(&b[..n]);
        prop_assert_eq!(f.mul(&g).div(&g).unwrap(), f.clone());
        prop_assert_eq!(f.mul(&g), g.mul(&f));
    }
}
