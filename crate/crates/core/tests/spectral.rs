mod common;

use densilab::matrix::commutator;
use densilab::{absolutize, decompose, is_expansive, is_positive, power, SymMatrix, DEFAULT_TOL};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_orthogonal, sym_from_spectrum};

fn rows(m: &[&[f64]]) -> SymMatrix {
    SymMatrix::from_rows(&m.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}

/// Spectrum whose moduli are pairwise separated by at least 5% so that
/// eigenspaces of the absolutized map are those of the map itself.
fn separated_spectrum(d: usize) -> impl Strategy<Value = Vec<f64>> {
    (
        1.1f64..3.0,
        prop::collection::vec(1.05f64..1.8, d - 1),
        prop::collection::vec(any::<bool>(), d),
    )
        .prop_map(|(start, steps, signs)| {
            let mut acc = start;
            let mut v = vec![start];
            for s in steps {
                acc *= s;
                v.push(acc);
            }
            v.into_iter().zip(signs).map(|(x, neg)| if neg { -x } else { x }).collect()
        })
}

fn sym_case() -> impl Strategy<Value = (SymMatrix, Vec<f64>)> {
    (1usize..=6)
        .prop_flat_map(|d| (separated_spectrum(d), any::<u64>()))
        .prop_map(|(spectrum, seed)| {
            let q = random_orthogonal(&mut ChaCha8Rng::seed_from_u64(seed), spectrum.len());
            (sym_from_spectrum(&q, &spectrum), spectrum)
        })
}

fn positive_case() -> impl Strategy<Value = SymMatrix> {
    sym_case().prop_map(|(a, _)| absolutize(&a).unwrap())
}

#[test]
fn decompose_examples() {
    let d = decompose(&SymMatrix::diagonal(&[2.0, 4.0]), DEFAULT_TOL).unwrap();
    assert_eq!(d.distinct_eigenvalues, vec![2.0, 4.0]);
    assert_eq!(d.multiplicities, vec![1, 1]);
    assert!(close(&d.basis.abs(), &DMatrix::identity(2, 2), 1e-15));

    let d = decompose(&SymMatrix::scaled_identity(3, 2.0), DEFAULT_TOL).unwrap();
    assert_eq!(d.distinct_eigenvalues, vec![2.0]);
    assert_eq!(d.multiplicities, vec![3]);

    let d = decompose(&rows(&[&[3.0, 1.0], &[1.0, 3.0]]), DEFAULT_TOL).unwrap();
    assert_eq!(d.distinct_eigenvalues, vec![2.0, 4.0]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u = d.basis.column(0);
    assert!((u[0] * u[1] + 0.5).abs() < 1e-15 && (u[0].abs() - s).abs() < 1e-15);
    let v = d.basis.column(1);
    assert!((v[0] * v[1] - 0.5).abs() < 1e-15);

    let e = SymMatrix::new(2, vec![1.0, 2.0, 2.5, 1.0]).unwrap_err();
    assert_eq!(e.code(), "NotSymmetric");
}

#[test]
fn expansive_and_positive_examples() {
    let swap = rows(&[&[0.0, 2.0], &[2.0, 0.0]]);
    assert!(is_expansive(&SymMatrix::diagonal(&[2.0, 4.0])));
    assert!(!is_expansive(&SymMatrix::diagonal(&[1.0, 3.0])));
    assert!(is_expansive(&swap));
    assert!(is_positive(&SymMatrix::diagonal(&[2.0, 4.0])));
    assert!(!is_positive(&swap));
    assert!(!is_positive(&SymMatrix::scaled_identity(2, -1.0)));
}

#[test]
fn power_and_absolutize_examples() {
    let p = power(&SymMatrix::diagonal(&[2.0, 4.0]), 2.0).unwrap();
    assert!(close(p.as_matrix(), SymMatrix::diagonal(&[4.0, 16.0]).as_matrix(), 1e-15));
    let p = power(&SymMatrix::diagonal(&[4.0, 16.0]), 0.5).unwrap();
    assert!(close(p.as_matrix(), SymMatrix::diagonal(&[2.0, 4.0]).as_matrix(), 1e-15));
    let p = power(&rows(&[&[3.0, 1.0], &[1.0, 3.0]]), 2.0).unwrap();
    assert!(close(p.as_matrix(), rows(&[&[10.0, 6.0], &[6.0, 10.0]]).as_matrix(), 1e-14));
    assert_eq!(power(&rows(&[&[0.0, 2.0], &[2.0, 0.0]]), 2.0).unwrap_err().code(), "NotPositive");

    let a = absolutize(&SymMatrix::diagonal(&[-2.0, 3.0])).unwrap();
    assert!(close(a.as_matrix(), SymMatrix::diagonal(&[2.0, 3.0]).as_matrix(), 1e-15));
    let pos = rows(&[&[3.0, 1.0], &[1.0, 3.0]]);
    assert!(close(absolutize(&pos).unwrap().as_matrix(), pos.as_matrix(), 1e-14));
    let a = absolutize(&rows(&[&[0.0, 2.0], &[2.0, 0.0]])).unwrap();
    assert!(close(a.as_matrix(), &(DMatrix::identity(2, 2) * 2.0), 1e-15));
    assert_eq!(absolutize(&SymMatrix::diagonal(&[1.0, 3.0])).unwrap_err().code(), "NotExpansive");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decomposition_reconstructs((a, spectrum) in sym_case()) {
        let dec = decompose(&a, DEFAULT_TOL).unwrap();
        let d = a.dim();
        prop_assert!((dec.reconstruct() - a.as_matrix()).norm() <= 10.0 * DEFAULT_TOL * a.norm() * d as f64);
        let gram = dec.basis.transpose() * &dec.basis;
        prop_assert!((gram - DMatrix::identity(d, d)).norm() <= 1e-13);
        let total = dec.eigenspaces.iter().fold(DMatrix::zeros(d, d), |acc, p| acc + p);
        prop_assert!((total - DMatrix::identity(d, d)).norm() <= 1e-12);
        let mut want = spectrum.clone();
        want.sort_by(f64::total_cmp);
        for (x, y) in dec.eigenvalues.iter().zip(&want) {
            prop_assert!((x - y).abs() <= 1e-12 * a.norm());
        }
    }

    #[test]
    fn power_commutes_and_scales_eigenvalues(a in positive_case(), t in 0.2f64..3.0) {
        let p = power(&a, t).unwrap();
        let c = commutator(p.as_matrix(), a.as_matrix());
        prop_assert!(c.norm() <= 1e-11 * p.norm() * a.norm());
        let dec = decompose(&a, DEFAULT_TOL).unwrap();
        for (k, &lambda) in dec.eigenvalues.iter().enumerate() {
            let u = dec.basis.column(k);
            let r = p.as_matrix() * u - u * lambda.powf(t);
            prop_assert!(r.norm() <= 1e-11 * p.norm());
        }
        prop_assert!(close(power(&a, 1.0).unwrap().as_matrix(), a.as_matrix(), 1e-12));
        let s = 0.7;
        let twice = power(&power(&a, s).unwrap(), t).unwrap();
        prop_assert!(close(twice.as_matrix(), power(&a, s * t).unwrap().as_matrix(), 1e-11));
    }

    #[test]
    fn power_determinant(a in positive_case(), t in 0.2f64..3.0) {
        let det = a.as_matrix().determinant();
        let det_t = power(&a, t).unwrap().as_matrix().determinant();
        prop_assert!((det_t - det.powf(t)).abs() <= 1e-9 * det.powf(t));
    }

    #[test]
    fn absolutize_keeps_eigenspaces((a, _) in sym_case()) {
        let abs = absolutize(&a).unwrap();
        prop_assert!(is_positive(&abs));
        prop_assert!(close(absolutize(&abs).unwrap().as_matrix(), abs.as_matrix(), 1e-12));
        let pa = decompose(&a, DEFAULT_TOL).unwrap().eigenspaces;
        let pb = decompose(&abs, DEFAULT_TOL).unwrap().eigenspaces;
        prop_assert_eq!(pa.len(), pb.len());
        for p in &pa {
            let best = pb.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(best <= 1e-10, "projector mismatch {}", best);
        }
    }
}
