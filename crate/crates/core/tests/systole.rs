use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use systolab::systole::{constrained_systole, hm_sigma, hm_sigma_sheared, FlatTorus};

/// Shortest admissible vector over the box `|kᵢ| ≤ radius`, ties within
/// `1e-12` relative broken by the lexicographically smallest `k` with
/// positive winding.
fn brute_force(t: &FlatTorus, radius: i64) -> (f64, Vec<i64>) {
    let m = t.dimension();
    let mut all = Vec::new();
    let mut k = vec![-radius; m];
    loop {
        if k[0] > 0 {
            all.push((t.length(&k), k.clone()));
        }
        let mut i = m;
        loop {
            if i == 0 {
                let min = all.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
                let best = all
                    .iter()
                    .filter(|e| (e.0 - min).abs() <= 1e-12 * min)
                    .map(|e| e.1.clone())
                    .min()
                    .unwrap();
                return (min, best);
            }
            i -= 1;
            if k[i] < radius {
                k[i] += 1;
                break;
            }
            k[i] = -radius;
        }
    }
}

fn condition_number(t: &FlatTorus) -> f64 {
    let m = t.dimension();
    let g = t.gram();
    let e = DMatrix::from_fn(m, m, |i, j| g[i][j]).symmetric_eigenvalues();
    e.max() / e.min()
}

fn random_torus(rng: &mut ChaCha8Rng, m: usize) -> FlatTorus {
    loop {
        let basis: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        if let Ok(t) = FlatTorus::new(basis) {
            if condition_number(&t) <= 100.0 {
                return t;
            }
        }
    }
}

#[test]
fn matches_brute_force_on_random_lattices() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..100 {
        let m = 2 + case % 5;
        let t = random_torus(&mut rng, m);
        let s = constrained_systole(&t);
        let (sigma, witness) = brute_force(&t, 5);
        assert_eq!(s.sigma, sigma, "case {case}");
        assert_eq!(s.witness, witness, "case {case}");
        assert!(s.sigma <= t.length(&{
            let mut e = vec![0; m];
            e[0] = 1;
            e
        }));
    }
}

#[test]
fn documented_two_dimensional_cases() {
    let t = FlatTorus::new(vec![vec![1.0, 0.0], vec![0.9, 0.1]]).unwrap();
    let s = constrained_systole(&t);
    assert!((s.sigma - 0.02f64.sqrt()).abs() < 1e-14);
    assert_eq!(s.witness, vec![1, -1]);
    assert_eq!(brute_force(&t, 5).1, s.witness);

    let hex = FlatTorus::new(vec![vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap();
    let s = constrained_systole(&hex);
    assert!((s.sigma - 1.0).abs() < 1e-14);
    // (1,0) and (1,−1) have equal length; the smaller coefficient vector wins.
    assert_eq!(s.witness, vec![1, -1]);
}

#[test]
fn winding_constraint_excludes_short_fibers() {
    let t = FlatTorus::rectangular(&[3.0, 0.1, 0.2]).unwrap();
    let s = constrained_systole(&t);
    assert_eq!(s.sigma, 3.0);
    assert_eq!(s.witness, vec![1, 0, 0]);

    let t = FlatTorus::with_xi_index(vec![vec![0.1, 0.0], vec![0.0, 2.0]], 1).unwrap();
    let s = constrained_systole(&t);
    assert_eq!(s.sigma, 2.0);
    assert_eq!(s.witness, vec![0, 1]);
}

#[test]
fn scaling_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in 2..=6 {
        let t = random_torus(&mut rng, m);
        let s = constrained_systole(&t);
        for c in [0.25, 3.0, 17.5] {
            let sc = constrained_systole(&t.scaled(c).unwrap());
            assert!((sc.sigma - c * s.sigma).abs() <= 1e-14 * sc.sigma);
            assert_eq!(sc.witness, s.witness);
        }
    }
}

#[test]
fn horowitz_myers_sigma() {
    let s = hm_sigma(3, 1.0, &[10.0]).unwrap();
    assert!(!s.flagged);
    assert_eq!(s.sigma, 4.0 * PI / 3.0);
    assert_eq!(s.witness, vec![1, 0]);

    let s = hm_sigma(7, 2.0, &[5.0; 5]).unwrap();
    assert!(!s.flagged);
    assert!((s.sigma - 2.0 * PI / 7.0).abs() < 1e-15);

    let s = hm_sigma_sheared(4, 1.0, &[0.4, 1.5], &[0.9 * PI, 0.0]).unwrap();
    assert!(s.flagged);
    assert!(s.sigma < s.nominal);
    assert_eq!(s.witness, vec![1, -1, 0]);
    let t = systolab::systole::hm_torus(4, 1.0, &[0.4, 1.5], &[0.9 * PI, 0.0]).unwrap();
    assert_eq!((s.sigma, s.witness.clone()), brute_force(&t, 5));

    let s = hm_sigma(3, 1.0, &[1.0]).unwrap();
    assert!(s.flagged);
    assert_eq!(s.sigma, 4.0 * PI / 3.0);

    assert!(hm_sigma(3, 1.0, &[1.0, 2.0]).is_err());
    assert!(hm_sigma(2, 1.0, &[]).is_err());
    assert!(hm_sigma(3, -1.0, &[1.0]).is_err());
}

#[test]
fn torus_document_roundtrip() {
    let t: FlatTorus = serde_json::from_str(r#"{"basis": [[1.0, 0.0], [0.3, 2.0]]}"#).unwrap();
    assert_eq!(t.xi_index(), 0);
    let back: FlatTorus = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
    assert_eq!(back, t);
    assert!((t.volume() - 2.0).abs() < 1e-15);
}
