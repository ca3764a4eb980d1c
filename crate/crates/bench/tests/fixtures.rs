use compser_bench::{random_vector, spherical_basis};
use compser_core::asymptotics::{matcoef_direct, matcoef_nbar, MatcoefConfig};

#[test]
fn benchmarked_matcoef_paths_agree() {
    let b = spherical_basis(1, 0.75, 16);
    let u = random_vector(&b, 7);
    let v = random_vector(&b, 8);
    let direct = matcoef_direct(&u, &v, 6.0, &MatcoefConfig::default()).unwrap();
    let nbar = matcoef_nbar(&u, &v, 6.0).unwrap();
    assert!((direct - nbar).norm() <= 1e-8 * direct.norm().max(1e-3));
}

#[test]
fn random_vectors_fill_every_ktype() {
    let b = spherical_basis(2, 1.4, 3);
    let u = random_vector(&b, 1);
    assert_eq!(u.coeffs.len(), b.dim);
    assert!(u.coeffs.iter().all(|c| c.norm() > 0.0));
}
