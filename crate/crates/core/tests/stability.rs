use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use systolab::comparison::{build_profile, eval_f};
use systolab::stability::{
    default_seed, find_free_boundary_geodesic, second_variation_form, stability_spectrum,
    theorem1_nondisk_report, weighted_norm_sq, GeodesicOptions, WeightedGeodesic,
};
use systolab::surfaces::{
    annulus, flat_annulus, flat_cylinder, hm_annulus, hyperbolic_annulus, hyperbolic_disk,
    AngularMode, ConformalSurface, Surface,
};
use systolab::Error;

fn geodesic(surface: &Surface) -> WeightedGeodesic {
    let seed = default_seed(surface).unwrap();
    find_free_boundary_geodesic(surface, &seed, GeodesicOptions::default()).unwrap()
}

#[test]
fn flat_cylinder_has_trivial_spectrum() {
    let s: Surface = flat_cylinder(3, 2.5, 4.0).unwrap().into();
    let g = geodesic(&s);
    assert!((g.length - 2.5).abs() < 1e-12 && (g.weighted_length - 2.5).abs() < 1e-12);
    assert!(g.points.iter().all(|p| p[1] == g.points[0][1]));
    assert!(g.speed_defect < 1e-8);
    let r = stability_spectrum(&g, 3).unwrap();
    assert!(r.eigenvalue.abs() < 1e-10);
    assert!(r.v.iter().all(|v| (v - 1.0).abs() < 1e-10));
    assert!(r.w.iter().all(|w| w.abs() < 1e-10));
    let rep = theorem1_nondisk_report(&s, None, GeodesicOptions::default(), 1e-6).unwrap();
    assert!(rep.pass && rep.boundary_inf.abs() < 1e-12);
}

#[test]
fn flat_annulus_eigenfunction_is_linear() {
    let s: Surface = flat_annulus(3, 1.0, 2.0).unwrap().into();
    let g = geodesic(&s);
    assert!((g.kappa[0] + 1.0).abs() < 1e-12 && (g.kappa[1] - 0.5).abs() < 1e-12);
    let r = stability_spectrum(&g, 3).unwrap();
    assert!(r.eigenvalue.abs() < 1e-8);
    for (i, &x) in r.s.iter().enumerate() {
        assert!((r.v[i] - (1.0 + x) / 2.0).abs() < 1e-8);
    }
    assert!((r.w_prime[0] - 1.0).abs() < 1e-8 && (r.w_prime[1] - 0.5).abs() < 1e-8);
}

#[test]
fn hyperbolic_annulus_eigenfunction_is_cosh() {
    let w = 1.0;
    let s: Surface = hyperbolic_annulus(3, w).unwrap().into();
    let g = geodesic(&s);
    assert!((g.kappa[0] - w.tanh()).abs() < 1e-10 && (g.kappa[1] - w.tanh()).abs() < 1e-10);
    let r = stability_spectrum(&g, 3).unwrap();
    assert!(r.eigenvalue >= -1e-8 && r.eigenvalue.abs() < 1e-8);
    for (i, &x) in r.s.iter().enumerate() {
        assert!((r.v[i] - (x - w).cosh() / w.cosh()).abs() < 1e-8);
    }
    let rep = theorem1_nondisk_report(&s, None, GeodesicOptions::default(), 1e-6).unwrap();
    assert!((rep.boundary_inf - w.tanh()).abs() < 1e-10 && rep.boundary_inf < 2.0);
    assert!(rep.endpoint_min <= 2.0 + 1e-6 && rep.pass);
}

fn hm(n: u32, r0: f64) -> (Surface, f64, f64) {
    let (s_in, l) = (0.4, eval_f(5.0, n).unwrap());
    let profile = build_profile(n, l, 1e-3).unwrap();
    (hm_annulus(&profile, r0, s_in, l).unwrap().into(), s_in, l)
}

#[test]
fn hm_annulus_matches_closed_forms() {
    for n in [3u32, 5] {
        let nf = n as f64;
        let (s, s_in, l) = hm(n, 1.0);
        let g = geodesic(&s);
        assert!((g.length - (l - s_in)).abs() < 1e-10);
        let r = stability_spectrum(&g, n).unwrap();
        assert!(r.eigenvalue.abs() < 1e-8, "λ = {}", r.eigenvalue);
        // v is proportional to φ(s) = G·tanh(n s/2) with G = cosh(n s/2)^{2/n}
        let phi = |x: f64| (0.5 * nf * x).cosh().powf(2.0 / nf) * (0.5 * nf * x).tanh();
        for (i, &x) in r.s.iter().enumerate() {
            assert!((r.v[i] - phi(s_in + x) / phi(l)).abs() < 1e-7);
        }
        let (gl, z) = (5.0f64, 5f64.powf(-nf));
        let y = (1.0 - z).sqrt();
        let _ = gl;
        assert!((r.w_prime[1] - ((nf - 1.0) * y + nf * z / (2.0 * y))).abs() < 1e-6);
        for e in r.endpoint_identity {
            assert!(e.abs() < 1e-6);
        }
        assert!(r.min_riccati >= -1e-6);
        assert!(r.comparison_holds);
    }
}

#[test]
fn riccati_field_matches_finite_differences_of_w() {
    let (s, _, _) = hm(4, 1.0);
    let g = geodesic(&s);
    let r = stability_spectrum(&g, 4).unwrap();
    let h = r.s[1] - r.s[0];
    let (a, b) = (4.0 / 6.0, 6.0);
    for i in (2..r.s.len() - 2).step_by(17) {
        let w = &r.w;
        let d2 = (-w[i + 2] + 16.0 * w[i + 1] - 30.0 * w[i] + 16.0 * w[i - 1] - w[i - 2]) / (12.0 * h * h);
        let d1 = (-w[i + 2] + 8.0 * w[i + 1] - 8.0 * w[i - 1] + w[i - 2]) / (12.0 * h);
        let direct = -d2 - a * d1 * d1 + b;
        assert!((direct - r.riccati[i]).abs() < 1e-5, "{direct} vs {}", r.riccati[i]);
    }
}

#[test]
fn weighted_cylinder_geodesic_drifts_to_weight_minimum() {
    let (eps, period, len) = (0.1, 6.0, 2.0);
    let c = flat_cylinder(3, len, period)
        .unwrap()
        .with_angular_psi(vec![AngularMode { k: 1, cos: eps, sin: 0.0 }]);
    let s: Surface = c.clone().into();
    let g = find_free_boundary_geodesic(&s, &[[0.0, 2.0], [len, 2.0]], GeodesicOptions::default()).unwrap();
    // oracle: weighted lengths of all vertical segments on a dense scan
    let best = (0..60_000)
        .map(|k| period * k as f64 / 60_000.0)
        .min_by(|x, y| (len * c.psi_angular(*x)[0].exp()).total_cmp(&(len * c.psi_angular(*y)[0].exp())))
        .unwrap();
    for p in &g.points {
        assert!((p[1] - best).abs() < 1e-3);
    }
    assert!((g.weighted_length - len * (-eps).exp()).abs() < 1e-9);
    let r = stability_spectrum(&g, 3).unwrap();
    let k = TAU / period;
    assert!((r.eigenvalue - eps * k * k).abs() < 1e-8);
}

#[test]
fn second_variation_of_cosine_on_flat_cylinder() {
    let len = 3.0;
    let s: Surface = flat_cylinder(3, len, 2.0).unwrap().into();
    let g = geodesic(&s);
    let form = second_variation_form(&g, |x| ((PI * x / len).cos(), -PI / len * (PI * x / len).sin()));
    // oracle: trapezoid sum of ζ'² on a fine grid
    let m = 200_000;
    let oracle: f64 = (0..=m)
        .map(|k| {
            let x = len * k as f64 / m as f64;
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            w * (PI / len * (PI * x / len).sin()).powi(2)
        })
        .sum::<f64>()
        * len
        / m as f64;
    assert!((form - oracle).abs() < 1e-8);
    assert!((form - PI * PI / (2.0 * len)).abs() < 1e-10);
}

#[test]
fn second_variation_is_nonnegative_and_rayleigh_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for surface in [hm(3, 1.0).0, hyperbolic_annulus(3, 0.8).unwrap().into()] {
        let g = geodesic(&surface);
        let r = stability_spectrum(&g, 3).unwrap();
        let l = g.length;
        for _ in 0..50 {
            let coef: Vec<(f64, f64)> = (0..5).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let zeta = |x: f64| {
                coef.iter().enumerate().fold((0.0, 0.0), |(v, d), (j, &(a, b))| {
                    let k = PI * j as f64 / l;
                    (v + a * (k * x).cos() + b * (k * x).sin(), d - a * k * (k * x).sin() + b * k * (k * x).cos())
                })
            };
            assert!(second_variation_form(&g, zeta) >= -1e-6);
        }
        let q = second_variation_form(&g, |x| r.eigenfunction(x));
        let m = weighted_norm_sq(&g, |x| r.eigenfunction(x).0);
        assert!((q / m - r.eigenvalue).abs() < 1e-6, "{} vs {}", q / m, r.eigenvalue);
    }
}

#[test]
fn disk_input_is_rejected() {
    let s: Surface = hyperbolic_disk(3, 1.0).unwrap().into();
    let err = find_free_boundary_geodesic(&s, &[[0.0, 0.0], [1.0, 0.0]], GeodesicOptions::default());
    assert!(matches!(err, Err(Error::Domain(_))));
}

#[test]
fn mesh_annulus_reproduces_flat_case() {
    let m = ConformalSurface::from_fields(3, annulus(1.0, 2.0, 24, 96), |_| 0.0, |_| 0.0).unwrap();
    let s: Surface = m.into();
    let opts = GeodesicOptions {
        tolerance: 1e-4,
        ..Default::default()
    };
    let seed = default_seed(&s).unwrap();
    let g = find_free_boundary_geodesic(&s, &seed, opts).unwrap();
    assert!(g.criticality < 1e-4 && g.orthogonality[0] < 1e-4 && g.orthogonality[1] < 1e-4);
    assert!((g.length - 1.0).abs() < 1e-3);
    let r = stability_spectrum(&g, 3).unwrap();
    // mesh curvature and boundary κ carry O(h²) error, so λ = 0 only to that order
    assert!(r.eigenvalue.abs() < 1e-3, "{}", r.eigenvalue);
    assert!((r.w_prime[0] - 1.0).abs() < 1e-3 && (r.w_prime[1] - 0.5).abs() < 1e-3);
    let rep = theorem1_nondisk_report(&s, None, opts, 1e-6).unwrap();
    assert!(rep.endpoint_min <= 2.0);
}

#[test]
fn weighted_mesh_annulus_satisfies_bound() {
    let m = ConformalSurface::from_fields(
        3,
        annulus(1.0, 2.0, 24, 96),
        |z| 0.05 * z[0],
        |z| 0.1 * (z[0] * z[0] + z[1] * z[1]).sqrt() + 0.05 * z[1],
    )
    .unwrap();
    let s: Surface = m.into();
    assert!(s.hypothesis_residual().min().unwrap().1 > 0.0);
    let opts = GeodesicOptions {
        tolerance: 1e-4,
        ..Default::default()
    };
    let rep = theorem1_nondisk_report(&s, None, opts, 1e-6).unwrap();
    assert!(rep.eigenvalue >= -1e-8);
    assert!(rep.endpoint_min <= rep.bound + 1e-6);
    assert!(rep.boundary_inf <= rep.bound + 1e-6);
}

#[test]
fn geodesic_document_roundtrip() {
    let s: Surface = hyperbolic_annulus(4, 0.5).unwrap().into();
    let g = geodesic(&s);
    let text = serde_json::to_string(&g).unwrap();
    let back: WeightedGeodesic = serde_json::from_str(&text).unwrap();
    assert_eq!(g, back);
}
