use fischer_nf::algebra::{BiPolynomial, GaussianRational, Matrix, TransformPolynomial};
use fischer_nf::normalform::{normalize, verify_normal_form, NormalFormResult};
use fischer_nf::ManifoldSpec;

fn cube(p: &BiPolynomial) -> BiPolynomial {
    p.pow_truncated(3, u32::MAX)
}

/// `E^{11} = z11³ − z̄11³` has skew pure parts. Solving
/// `F F̄ᵗ + φ'(F, F̄) = G(Z, Z Z̄ᵗ + E)` puts `G^{11} = W11 − 2 z11³` and
/// leaves the real pure term `φ'^{11} = −z11³ − z̄11³`.
#[test]
fn skew_pure_terms_move_into_g() {
    let n = 1;
    let z = BiPolynomial::z(n, 1, 1);
    let zb = BiPolynomial::zbar(n, 1, 1);
    let mut e = Matrix::from_fn(2, 2, |_, _| BiPolynomial::zero(n));
    *e.get_mut(0, 0) = &cube(&z) - &cube(&zb);
    let m = ManifoldSpec::new(n, 4, e, false).unwrap();
    assert!(!m.satisfies_reality());

    let r = normalize(&m, 3).unwrap();
    assert!(verify_normal_form(&r).passed());
    let g30 = r.transform.g().get(0, 0).zw_part(3, 0);
    let want = TransformPolynomial::z(n, 1, 1).pow_truncated(3, u32::MAX).scale(&GaussianRational::from_ints(-2, 0));
    assert_eq!(g30, want);
    let phi = r.normalized.e().get(0, 0).homogeneous_part(3);
    assert_eq!(phi, (&cube(&z) + &cube(&zb)).scale(&GaussianRational::from_ints(-1, 0)));
    for (a, b) in [(0, 1), (1, 0), (1, 1)] {
        assert!(r.normalized.e().get(a, b).homogeneous_part(3).is_zero());
    }
}

#[test]
fn model_is_fixed() {
    for n in 1..=2 {
        let r = normalize(&ManifoldSpec::model(n, 6), 6).unwrap();
        assert!(r.transform.is_identity());
        assert!(r.normalized.order().is_none());
        assert!(verify_normal_form(&r).passed());
    }
}

#[test]
fn json_round_trip_reverifies() {
    let n = 1;
    let z = BiPolynomial::z(n, 1, 1);
    let zb = BiPolynomial::zbar(n, 1, 1);
    let mut e = Matrix::from_fn(2, 2, |_, _| BiPolynomial::zero(n));
    // A removable term of bidegree (2,1) plus its conjugate.
    *e.get_mut(0, 1) = &(&z * &z) * &zb;
    *e.get_mut(1, 0) = &(&zb * &zb) * &z;
    let m = ManifoldSpec::new(n, 5, e, true).unwrap();
    let r = normalize(&m, 5).unwrap();
    assert!(verify_normal_form(&r).passed());
    let text = serde_json::to_string(&r.to_json()).unwrap();
    let back = NormalFormResult::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(serde_json::to_string(&back.to_json()).unwrap(), text);
    assert!(verify_normal_form(&back).passed());
}
