//! Invariants of the model checked on random inputs.

use compser_core::asymptotics::{matcoef_direct, MatcoefConfig};
use compser_core::group::random_m;
use compser_core::harmonic::{a_ratio, unitary_inner, IntertwiningScalars};
use compser_core::liealg::ktypes_of_compser;
use compser_core::model::{act_k, inner_k};
use compser_core::quadrature::k_coord;
use compser_core::{Basis, CompSerLabel, KType, ModelVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn label(d: usize, u: i64, frac: f64) -> CompSerLabel {
    let df = d as f64;
    let hi = if u != 0 && d == 3 { df - 1.0 } else { df };
    CompSerLabel::with_upsilon(d, u, df / 2.0 + frac * (hi - df / 2.0)).unwrap()
}

fn arb_label() -> impl Strategy<Value = CompSerLabel> {
    (1usize..=3, 0i64..=1, 0.02f64..0.98).prop_map(|(d, u, f)| {
        let u = if d == 1 || (d == 2 && u != 0) { 0 } else { u };
        label(d, u, f)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scalar_ratios_compose(l in arb_label(), picks in proptest::collection::vec(0usize..1000, 3)) {
        let ks = ktypes_of_compser(&l, 12).unwrap();
        let [a, b, c] = [ks[picks[0] % ks.len()], ks[picks[1] % ks.len()], ks[picks[2] % ks.len()]];
        let direct = a_ratio(&l, a, c).unwrap();
        let via = a_ratio(&l, a, b).unwrap() * a_ratio(&l, b, c).unwrap();
        prop_assert!((direct - via).abs() <= 1e-12 * direct.abs().max(via.abs()));
        prop_assert!((a_ratio(&l, a, b).unwrap() * a_ratio(&l, b, a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalars_are_positive(l in arb_label()) {
        let sc = IntertwiningScalars::new(&l, 10).unwrap();
        for tau in ktypes_of_compser(&l, 10).unwrap() {
            prop_assert!(sc.get(tau).unwrap() > 0.0);
        }
    }

    #[test]
    fn unitary_form_is_k_invariant_and_hermitian(l in arb_label(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = Basis::new(&l, 3).unwrap();
        let sc = IntertwiningScalars::new(&l, 3).unwrap();
        let u = ModelVector::random(&basis, &basis.ktypes(), &mut rng).unwrap();
        let v = ModelVector::random(&basis, &basis.ktypes(), &mut rng).unwrap();
        let k = k_coord(&compser_core::group::random_k(l.d, &mut rng)).unwrap();
        let before = unitary_inner(&u, &v, &sc).unwrap();
        let after = unitary_inner(&act_k(&k, &u), &act_k(&k, &v), &sc).unwrap();
        prop_assert!((before - after).norm() < 1e-11 * u.norm() * v.norm() * 1e3);
        let back = unitary_inner(&v, &u, &sc).unwrap();
        prop_assert!((before - back.conj()).norm() < 1e-13);
        prop_assert!(unitary_inner(&u, &u, &sc).unwrap().re > 0.0);
    }

    #[test]
    fn matrix_coefficients_are_m_invariant(d in 1usize..=2, f in 0.05f64..0.95, t in 0.0f64..4.0, seed in any::<u64>()) {
        // M commutes with a_t, so ⟨U(a_t)U(m)u, U(m)v⟩ = ⟨U(a_t)u, v⟩
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = label(d, 0, f);
        let basis = Basis::new(&l, 3).unwrap();
        let u = ModelVector::random(&basis, &basis.ktypes(), &mut rng).unwrap();
        let v = ModelVector::random(&basis, &basis.ktypes(), &mut rng).unwrap();
        let m = k_coord(&random_m(d, &mut rng)).unwrap();
        let cfg = MatcoefConfig::default();
        let plain = matcoef_direct(&u, &v, t, &cfg).unwrap();
        let moved = matcoef_direct(&act_k(&m, &u), &act_k(&m, &v), t, &cfg).unwrap();
        prop_assert!((plain - moved).norm() < 1e-10 * u.norm() * v.norm(), "{plain} vs {moved}");
    }

    #[test]
    fn matrix_coefficients_are_sesquilinear(d in 1usize..=2, f in 0.05f64..0.95, t in 0.0f64..4.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = Basis::new(&label(d, 0, f), 2).unwrap();
        let ks = basis.ktypes();
        let [u, v, w] = [0, 1, 2].map(|_| ModelVector::random(&basis, &ks, &mut rng).unwrap());
        let cfg = MatcoefConfig::default();
        let z = num_complex::Complex64::new(0.3, -1.1);
        let lhs = matcoef_direct(&u, &v.add(&w.scale(z)).unwrap(), t, &cfg).unwrap();
        let rhs = matcoef_direct(&u, &v, t, &cfg).unwrap() + z.conj() * matcoef_direct(&u, &w, t, &cfg).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
    }
}

#[test]
fn k_pairing_matches_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let basis = Basis::new(&label(2, 1, 0.5), 3).unwrap();
    let u = ModelVector::random(&basis, &[KType::new(1, 0), KType::new(3, 0)], &mut rng).unwrap();
    let direct: num_complex::Complex64 = u.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().into();
    assert!((inner_k(&u, &u).unwrap() - direct).norm() < 1e-14);
}
