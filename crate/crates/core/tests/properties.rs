use num_rational::BigRational;
use proptest::prelude::*;

use miniwhy::discharge::simplify;
use miniwhy::logic::{check_permut, eval, ArithOp, CmpOp, MapEnv, NumericMode, Sort, Tag, Term, Value, Var};
use miniwhy::syntax::{parse, pretty_print};

// ---- parse / pretty-print round trip ----

fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (-20i64..20).prop_map(|i| i.to_string()),
        (0u32..1000, 1u32..4).prop_map(|(n, d)| format!("{n}.{}", "5".repeat(d as usize))),
        Just("a".to_string()),
        Just("b".to_string()),
        Just("xs[a]".to_string()),
        Just("xs.length".to_string()),
        Just("\\result".to_string()),
        Just("true".to_string()),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        let op = prop_oneof![
            Just("+"), Just("-"), Just("*"), Just("/"), Just("<"), Just("<="), Just("=="),
            Just("!="), Just("&&"), Just("||"), Just("==>"),
        ];
        prop_oneof![
            (inner.clone(), op, inner.clone()).prop_map(|(a, o, b)| format!("{a} {o} {b}")),
            inner.clone().prop_map(|a| format!("({a})")),
            inner.clone().prop_map(|a| format!("!({a})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("\\old({a})")),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(a, b, c)| format!("{a} <= {b} < {c}")),
            inner.clone().prop_map(|a| format!("(\\forall integer k; 0 <= k < a ==> {a} <= k)")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn pretty_output_parses_to_the_same_tree(e in expr_text(), g in expr_text()) {
        let src = format!(
            "/*@ requires {e};\n  @ ensures {g}; @*/\nint f(int a, int b, real[] xs) {{\n  /*@ loop_invariant {g}; @*/\n  while (a < b) {{ a = a + 1; }}\n  return a;\n}}"
        );
        let tree = parse(&src).unwrap();
        let printed = pretty_print(&tree);
        let again = parse(&printed).unwrap();
        prop_assert_eq!(&tree, &again);
        prop_assert_eq!(printed, pretty_print(&again));
    }
}

// ---- simplifier soundness ----

fn var(name: &str, sort: Sort) -> Term {
    Term::Var(Var::new(name, Tag::Cur, sort, 0))
}

fn int_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![(-4i64..5).prop_map(Term::int), Just(var("x", Sort::Int)), Just(var("y", Sort::Int))];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop_oneof![Just(ArithOp::Add), Just(ArithOp::Sub), Just(ArithOp::Mul)])
                .prop_map(|(a, b, op)| Term::arith(op, a, b)),
            inner.clone().prop_map(|a| Term::Neg(Box::new(a))),
            Just(Term::length(var("arr", Sort::RealArray))),
        ]
    })
}

fn real_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (-6i64..7, 1i64..4).prop_map(|(n, d)| Term::real(BigRational::new(n.into(), d.into()))),
        Just(var("p", Sort::Real)),
        Just(var("q", Sort::Real)),
        int_term().prop_map(Term::to_real),
        int_term().prop_map(|i| Term::select(var("arr", Sort::RealArray), i)),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (
                inner.clone(),
                inner.clone(),
                prop_oneof![Just(ArithOp::Add), Just(ArithOp::Sub), Just(ArithOp::Mul), Just(ArithOp::Div)]
            )
                .prop_map(|(a, b, op)| Term::arith(op, a, b)),
            (int_term(), inner.clone(), int_term()).prop_map(|(i, v, j)| {
                Term::select(Term::store(var("arr", Sort::RealArray), i, v), j)
            }),
        ]
    })
}

fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop_oneof![Just(CmpOp::Lt), Just(CmpOp::Le), Just(CmpOp::Eq), Just(CmpOp::Ne), Just(CmpOp::Ge), Just(CmpOp::Gt)]
}

fn bool_term() -> impl Strategy<Value = Term> {
    let k = Var::bound("k", Sort::Int);
    let atom = prop_oneof![
        (cmp_op(), int_term(), int_term()).prop_map(|(op, a, b)| Term::cmp(op, a, b)),
        (cmp_op(), real_term(), real_term()).prop_map(|(op, a, b)| Term::cmp(op, a, b)),
        any::<bool>().prop_map(Term::Bool),
        (-2i64..3, 0i64..4, cmp_op(), int_term()).prop_map(move |(lo, width, op, t)| {
            let kt = Term::Var(k.clone());
            let range = Term::and(vec![Term::cmp(CmpOp::Le, Term::int(lo), kt.clone()), Term::cmp(CmpOp::Le, kt.clone(), Term::int(lo + width))]);
            let body = Term::cmp(op, Term::arith(ArithOp::Add, kt, t), var("y", Sort::Int));
            Term::Forall(vec![k.clone()], Box::new(Term::implies(range, body)))
        }),
    ];
    atom.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..3).prop_map(Term::and),
            prop::collection::vec(inner.clone(), 0..3).prop_map(Term::or),
            inner.clone().prop_map(Term::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::implies(a, b)),
        ]
    })
}

fn env_strategy() -> impl Strategy<Value = MapEnv> {
    (-5i64..6, -5i64..6, -9i64..10, 1i64..4, -9i64..10, prop::collection::vec(-5i64..6, 3)).prop_map(|(x, y, pn, pd, q, arr)| {
        let mut env = MapEnv::default();
        env.bind(Var::new("x", Tag::Cur, Sort::Int, 0), Value::int(x));
        env.bind(Var::new("y", Tag::Cur, Sort::Int, 0), Value::int(y));
        env.bind(Var::new("p", Tag::Cur, Sort::Real, 0), Value::rat(pn, pd));
        env.bind(Var::new("q", Tag::Cur, Sort::Real, 0), Value::rat(q, 1));
        env.bind(
            Var::new("arr", Tag::Cur, Sort::RealArray, 0),
            Value::array(arr.into_iter().map(|v| Value::rat(v, 1)).collect()),
        );
        env
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn simplify_preserves_value(t in bool_term(), env in env_strategy()) {
        // Terms that fault (division by zero, out-of-range select) have no
        // value to preserve.
        if let Ok(v) = eval(&t, &env, NumericMode::Rational) {
            let s = simplify(&t);
            prop_assert_eq!(eval(&s, &env, NumericMode::Rational), Ok(v), "simplified to {}", s);
        }
    }

    #[test]
    fn simplify_preserves_real_value(t in real_term(), env in env_strategy()) {
        if let Ok(v) = eval(&t, &env, NumericMode::Rational) {
            let s = simplify(&t);
            prop_assert_eq!(eval(&s, &env, NumericMode::Rational), Ok(v), "simplified to {}", s);
        }
    }
}

// ---- Permut against a sorted-multiset oracle ----

fn permut_oracle(a: &[i64], b: &[i64], lo: i64, hi: i64) -> Option<bool> {
    if lo < 0 || hi + 1 < lo || hi >= a.len() as i64 || hi >= b.len() as i64 {
        return None;
    }
    if hi < lo {
        return Some(true);
    }
    let mut x = a[lo as usize..=hi as usize].to_vec();
    let mut y = b[lo as usize..=hi as usize].to_vec();
    x.sort_unstable();
    y.sort_unstable();
    Some(x == y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3000))]

    #[test]
    fn permut_matches_sorted_multisets(
        a in prop::collection::vec(0i64..4, 0..7),
        shuffle in any::<bool>(),
        b in prop::collection::vec(0i64..4, 0..7),
        lo in -1i64..7,
        hi in -2i64..7,
    ) {
        // Half the cases compare an array with a rotation of itself, so
        // true answers are common.
        let b = if shuffle { let mut r = a.clone(); r.rotate_left(a.len() / 2); r } else { b };
        let va: Vec<Value> = a.iter().map(|&x| Value::int(x)).collect();
        let vb: Vec<Value> = b.iter().map(|&x| Value::int(x)).collect();
        prop_assert_eq!(check_permut(&va, &vb, lo, hi).ok(), permut_oracle(&a, &b, lo, hi));
    }
}
