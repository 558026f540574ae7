use auxbound::polynomial::{parse, var_list, Monomial, Polynomial};
use proptest::prelude::*;

fn vars() -> Vec<String> {
    var_list(&["t", "x", "y"])
}

fn poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(((0u32..4, 0u32..4, 0u32..4), -5.0f64..5.0), 0..8).prop_map(|terms| {
        Polynomial::from_terms(
            &vars(),
            terms.into_iter().map(|((a, b, c), k)| (Monomial::from_dense(&[a, b, c]), k)),
        )
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, 3)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn ring_operations_commute_with_evaluation(p in poly(), q in poly(), x in point()) {
        let (pv, qv) = (p.eval(&x), q.eval(&x));
        prop_assert!(close(p.add(&q).unwrap().eval(&x), pv + qv));
        prop_assert!(close(p.sub(&q).unwrap().eval(&x), pv - qv));
        prop_assert!(close(p.mul(&q).unwrap().eval(&x), pv * qv));
        prop_assert!(close(p.pow(2).eval(&x), pv * pv));
        prop_assert!(close(p.scale(-2.5).eval(&x), -2.5 * pv));
    }

    #[test]
    fn product_degree_adds(p in poly(), q in poly()) {
        let r = p.mul(&q).unwrap();
        if !p.is_zero() && !q.is_zero() {
            prop_assert_eq!(r.degree(), p.degree() + q.degree());
        } else {
            prop_assert!(r.is_zero());
        }
    }

    #[test]
    fn product_rule(p in poly(), q in poly()) {
        for v in ["t", "x", "y"] {
            let lhs = p.mul(&q).unwrap().differentiate(v).unwrap();
            let rhs = p.differentiate(v).unwrap().mul(&q).unwrap()
                .add(&p.mul(&q.differentiate(v).unwrap()).unwrap()).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs_coefficient() <= 1e-9);
        }
    }

    #[test]
    fn display_parse_round_trip(p in poly()) {
        let back = parse(&p.to_string(), &vars()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn derivative_matches_finite_difference(p in poly(), x in point()) {
        let h = 1e-6;
        for i in 0..3 {
            let mut up = x.clone();
            let mut down = x.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (p.eval(&up) - p.eval(&down)) / (2.0 * h);
            let exact = p.differentiate_index(i).eval(&x);
            prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "{fd} vs {exact}");
        }
    }

    #[test]
    fn substitution_fixes_a_variable(p in poly(), x in point()) {
        let q = p.substitute_value("t", x[0]).unwrap();
        prop_assert!(close(q.eval(&x), p.eval(&x)));
        prop_assert!(!q.depends_on("t"));
    }
}
