mod common;

use proptest::prelude::*;
use rug::Rational;

use common::*;
use dulac_core::group::{compose_h_to, conj_affine, conj_affine_inverse, invert_h_to, LogMap};
use dulac_core::series::{Floor, GenExpSeries};
use dulac_core::syntax::{
    parse_coefficient, parse_exponent, parse_polycycle, parse_series, parse_star, parse_word, print_coefficient,
    print_exponent, print_polycycle, print_series, print_star, print_word,
};

fn coarser(a: &GenExpSeries, b: &GenExpSeries) -> Floor {
    a.floor().clone().max(b.floor().clone())
}

fn same_to_floor(a: &GenExpSeries, b: &GenExpSeries) -> bool {
    let f = coarser(a, b);
    a.truncate(&f) == b.truncate(&f)
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn addition_is_commutative_and_associative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (any_series(&mut r), any_series(&mut r), any_series(&mut r));
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert!(same_to_floor(&a.add(&b).add(&c), &a.add(&b.add(&c))));
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn multiplication_is_associative_and_distributive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (fc0_series(&mut r, 4, 8, true), fc0_series(&mut r, 4, 8, true), fc0_series(&mut r, 4, 8, true));
        prop_assert!(same_to_floor(&a.mul(&b), &b.mul(&a)));
        prop_assert!(same_to_floor(&a.mul(&b).mul(&c), &a.mul(&b.mul(&c))));
        prop_assert!(same_to_floor(&a.mul(&b.add(&c)), &a.mul(&b).add(&a.mul(&c))));
    }

    #[test]
    fn derivative_is_a_derivation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (fc0_series(&mut r, 4, 8, true), fc0_series(&mut r, 4, 8, true));
        let lhs = a.mul(&b).derivative();
        let rhs = a.derivative().mul(&b).add(&a.mul(&b.derivative()));
        prop_assert!(same_to_floor(&lhs, &rhs));
    }

    #[test]
    fn argument_scaling_is_a_ring_homomorphism(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (fc0_series(&mut r, 4, 8, false), fc0_series(&mut r, 4, 8, false));
        let alpha = positive_rational(&mut r, 5, &[1, 2, 3]);
        let beta = log_linear(&mut r);
        let s = |x: &GenExpSeries| x.scale_argument(&alpha, &beta);
        prop_assert!(same_to_floor(&s(&a.mul(&b)), &s(&a).mul(&s(&b))));
        prop_assert!(same_to_floor(&s(&a.add(&b)), &s(&a).add(&s(&b))));
    }

    #[test]
    fn leading_term_is_multiplicative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (fc0_series(&mut r, 4, 8, true), fc0_series(&mut r, 4, 8, true));
        let p = a.mul(&b);
        match (a.leading_term(), b.leading_term()) {
            (Some((ma, ca)), Some((mb, cb))) => {
                let mu = Rational::from(ma + mb);
                if p.floor().admits(&mu) {
                    let (pm, pc) = p.leading_term().expect("nonzero product");
                    prop_assert_eq!(pm, &mu);
                    prop_assert_eq!(pc, &(ca * cb));
                }
            }
            _ => prop_assert!(p.is_zero()),
        }
    }

    #[test]
    fn near_identity_maps_form_a_group(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (f, g, h) = (log_map(&mut r, 4, 6), log_map(&mut r, 4, 6), log_map(&mut r, 4, 6));
        let fl = f.deviation().floor().clone();
        let inv = invert_h_to(&f, &fl).unwrap();
        prop_assert!(compose_h_to(&f, &inv, &fl).unwrap().is_identity());
        prop_assert!(compose_h_to(&inv, &f, &fl).unwrap().is_identity());
        let all = fl.max(g.deviation().floor().clone()).max(h.deviation().floor().clone());
        let left = compose_h_to(&compose_h_to(&f, &g, &all).unwrap(), &h, &all).unwrap();
        let right = compose_h_to(&f, &compose_h_to(&g, &h, &all).unwrap(), &all).unwrap();
        prop_assert!(same_to_floor(left.deviation(), right.deviation()));
        let with_id = compose_h_to(&f, &LogMap::identity(), &all).unwrap();
        prop_assert_eq!(with_id.deviation(), &f.deviation().truncate(&all));
    }

    #[test]
    fn affine_conjugation_is_invertible(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = log_map(&mut r, 4, 6);
        let a = affine(&mut r);
        let back = conj_affine_inverse(&a, &conj_affine(&a, &f));
        prop_assert_eq!(back.deviation(), f.deviation());
    }

    #[test]
    fn printed_values_parse_back(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = any_series(&mut r);
        prop_assert_eq!(parse_series(&print_series(&s)).unwrap(), s);
        let e = exponent(&mut r, true);
        prop_assert_eq!(parse_exponent(&print_exponent(&e)).unwrap(), e);
        let k = coefficient(&mut r, 1, true);
        prop_assert_eq!(parse_coefficient(&print_coefficient(&k)).unwrap(), k);
        let st = any_star(&mut r);
        prop_assert_eq!(parse_star(&print_star(&st)).unwrap(), st);
        let w = word(&mut r);
        prop_assert_eq!(parse_word(&print_word(&w)).unwrap(), w);
        let p = polycycle(&mut r);
        prop_assert_eq!(parse_polycycle(&print_polycycle(&p)).unwrap(), p);
    }
}
