use conic_hypertope::gf::{build_field, Fe, Field};
use conic_hypertope::plane::Plane;
use conic_hypertope::triangles::{rank_triple, unrank_triple};
use proptest::prelude::*;

const FIELDS: [(u32, u32); 7] = [(11, 1), (3, 1), (3, 3), (5, 2), (7, 1), (7, 2), (13, 1)];

fn field_and_elems() -> impl Strategy<Value = (Field, Fe, Fe, Fe)> {
    (0..FIELDS.len(), any::<u32>(), any::<u32>(), any::<u32>()).prop_map(|(i, a, b, c)| {
        let (p, n) = FIELDS[i];
        let f = build_field(p, n, None).unwrap();
        let q = f.q();
        let e = |x: u32| f.element(x % q).unwrap();
        let (a, b, c) = (e(a), e(b), e(c));
        (f, a, b, c)
    })
}

proptest! {
    #[test]
    fn field_axioms((f, a, b, c) in field_and_elems()) {
        let zero = f.from_int(0);
        let one = f.from_int(1);
        prop_assert_eq!(f.add(a, b), f.add(b, a));
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.add(a, f.neg(a)), zero);
        prop_assert_eq!(f.sub(f.add(a, b), b), a);
        prop_assert_eq!(f.mul(a, one), a);
        if !a.is_zero() {
            prop_assert_eq!(f.mul(a, f.invert(a).unwrap()), one);
            prop_assert_eq!(f.pow(a, (f.q() - 1) as u64), one);
        } else {
            prop_assert!(f.invert(a).is_err());
        }
    }

    #[test]
    fn frobenius_is_an_automorphism((f, a, b, _c) in field_and_elems(), k in 0u32..3) {
        let k = k % f.n();
        let phi = |x| f.frobenius_map(x, k);
        prop_assert_eq!(phi(f.add(a, b)), f.add(phi(a), phi(b)));
        prop_assert_eq!(phi(f.mul(a, b)), f.mul(phi(a), phi(b)));
        prop_assert_eq!(f.frobenius_map(a, f.n()), a);
    }

    #[test]
    fn coefficient_encoding_round_trips((f, a, _b, _c) in field_and_elems()) {
        prop_assert_eq!(f.from_coeffs(&f.coeffs(a)), a);
        prop_assert_eq!(f.element(a.encoding()), Some(a));
    }

    #[test]
    fn triple_rank_round_trips(n in 3u64..2000, seed in any::<u64>()) {
        let total = n * (n - 1) * (n - 2) / 6;
        let r = seed % total;
        let t = unrank_triple(n, r);
        prop_assert!(t[0] < t[1] && t[1] < t[2] && t[2] < n);
        prop_assert_eq!(rank_triple(n, t), r);
    }
}

#[test]
fn polarity_is_an_involutive_bijection() {
    for (p, n) in [(3, 1), (5, 1), (3, 2)] {
        let pl = Plane::new(build_field(p, n, None).unwrap());
        for pt in pl.points() {
            let l = pl.polar(pt);
            assert_eq!(pl.pole(&l), *pt);
            assert_eq!(pl.on_conic(pt), pl.incident(pt, &l));
        }
    }
}
