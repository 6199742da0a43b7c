use proptest::prelude::*;

use qform_core::arithmetic::rho::{rho, rho_brute};
use qform_core::arithmetic::sieve::SieveTables;
use qform_core::bqf::{enumerate_reduced_forms, reduce, transform, Form, UnimodularMap};
use qform_core::composition::compose_classes;
use qform_core::numtheory::{factor, gcd};

fn primitive_form() -> impl Strategy<Value = Form> {
    (1i64..60, -60i64..60, 1i64..60).prop_filter_map("definite primitive", |(a, b, c)| {
        Form::new(a, b, c).ok().filter(|f| f.is_positive_definite() && f.is_primitive())
    })
}

fn unimodular() -> impl Strategy<Value = UnimodularMap> {
    (-40i64..40, -40i64..40).prop_filter_map("coprime column", |(x, y)| {
        UnimodularMap::with_first_column(x, y).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn reduction_is_a_class_invariant(f in primitive_form(), u in unimodular()) {
        let (r, w) = reduce(&f).unwrap();
        prop_assert!(r.is_reduced());
        prop_assert_eq!(r.discriminant(), f.discriminant());
        prop_assert_eq!(transform(&f, &w).unwrap(), r);
        let g = transform(&f, &u).unwrap();
        prop_assert_eq!(reduce(&g).unwrap().0, r);
    }

    #[test]
    fn rho_is_multiplicative(f in primitive_form(), d1 in 1u64..300, d2 in 1u64..300) {
        prop_assume!(gcd(d1 as i64, d2 as i64) == 1);
        prop_assert_eq!(rho(d1 * d2, &f), rho(d1, &f) * rho(d2, &f));
        prop_assert_eq!(rho(d1, &f), rho_brute(d1, &f));
    }

    #[test]
    fn class_composition_is_a_group_law(f in primitive_form(), i in 0usize..64, j in 0usize..64) {
        let classes = enumerate_reduced_forms(f.discriminant()).unwrap();
        let g = classes[i % classes.len()];
        let h = classes[j % classes.len()];
        let f = reduce(&f).unwrap().0;
        let principal = Form::principal(f.discriminant()).unwrap();
        prop_assert_eq!(compose_classes(&f, &principal).unwrap(), f);
        prop_assert_eq!(compose_classes(&f, &g).unwrap(), compose_classes(&g, &f).unwrap());
        let left = compose_classes(&compose_classes(&f, &g).unwrap(), &h).unwrap();
        let right = compose_classes(&f, &compose_classes(&g, &h).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        let inverse = reduce(&Form::new(f.a(), -f.b(), f.c()).unwrap()).unwrap().0;
        prop_assert_eq!(compose_classes(&f, &inverse).unwrap(), principal);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn sieve_entries_match_factorisation(n in 1u64..100_000) {
        thread_local! {
            static TABLES: SieveTables = SieveTables::build(100_000).unwrap();
        }
        let fs = factor(n);
        let mu = if fs.iter().any(|&(_, e)| e > 1) { 0 } else if fs.len() % 2 == 0 { 1 } else { -1 };
        let lambda = if fs.len() == 1 { (fs[0].0 as f64).ln() } else { 0.0 };
        TABLES.with(|t| {
            prop_assert_eq!(t.mu(n) as i32, mu);
            prop_assert_eq!(t.lambda(n), lambda);
            Ok(())
        })?;
    }
}
