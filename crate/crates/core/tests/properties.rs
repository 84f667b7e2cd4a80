mod common;

use std::convert::Infallible;

use bunched_fuzz::bunch::{contract, exchange_iso, shape_eq, Bunch};
use bunched_fuzz::lang::Ty;
use bunched_fuzz::metrics::{c_factor, lp_norm, PIdx, Sens};
use bunched_fuzz::runtime::{dist_bind, dist_return, FinDist, Value};
use bunched_fuzz::vmetric::{
    assignment_distance, fn_probe_term, hellinger, max_divergence, value_distance, Assignment,
};
use common::*;
use proptest::prelude::*;

fn lp(p: f64, xs: &[f64]) -> f64 {
    if p.is_infinite() {
        return xs.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    xs.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

fn grades(n: usize) -> impl Strategy<Value = Vec<Sens>> {
    proptest::collection::vec(arb_sens(), n)
}

fn kernel(n: usize, m: usize) -> impl Strategy<Value = Vec<FinDist>> {
    proptest::collection::vec(arb_dist(m), n)
}

fn bind(mu: &FinDist, k: &[FinDist]) -> FinDist {
    dist_bind(mu, |x| Ok::<_, Infallible>(k[x.as_real().unwrap() as usize].clone())).unwrap()
}

fn same_dist(a: &FinDist, b: &FinDist) -> bool {
    a.len() == b.len() && a.support().iter().all(|(v, p)| (b.prob(v) - p).abs() < 1e-12)
}

proptest! {
    #[test]
    fn lp_norm_matches_direct_formula(xs in proptest::collection::vec(0.0f64..100.0, 0..8), p in arb_pidx()) {
        let s: Vec<Sens> = xs.iter().map(|&x| sens(x)).collect();
        let want = lp(p.value(), &xs);
        prop_assert!((lp_norm(p, &s).value() - want).abs() <= 1e-9 * want.max(1.0));
    }

    #[test]
    fn norms_decrease_in_p(xs in proptest::collection::vec(0.0f64..100.0, 1..8), a in arb_pidx(), b in arb_pidx()) {
        let (p, q) = if a.value() <= b.value() { (a, b) } else { (b, a) };
        let s: Vec<Sens> = xs.iter().map(|&x| sens(x)).collect();
        let (np, nq) = (lp_norm(p, &s).value(), lp_norm(q, &s).value());
        prop_assert!(nq <= np * (1.0 + 1e-9) + 1e-12);
        // and the reverse comparison costs n^(1/p - 1/q)
        let n = xs.len() as f64;
        prop_assert!(np <= n.powf(p.recip() - q.recip()) * nq * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn holder(pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..8), p in arb_pidx()) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let dot: f64 = x.iter().zip(&y).map(|(a, b)| (a * b).abs()).sum();
        let bound = lp(p.value(), &x) * lp(p.conjugate().value(), &y);
        prop_assert!(dot <= bound * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn contraction_at_infinity_is_idempotent(shape in arb_shape(), seed in grades(8)) {
        let g = shape.build("x", &seed);
        prop_assert_eq!(contract(PIdx::INF, &g, &g).unwrap(), g);
    }

    #[test]
    fn contraction_is_sound(
        (shape, vals) in arb_shape().prop_flat_map(|s| { let t = s.leaf_types(); (Just(s), arb_value_pairs(t)) }),
        gs in grades(8),
        ds in grades(8),
        p in arb_pidx(),
    ) {
        let g = shape.build("x", &gs);
        let d = shape.build("y", &ds);
        let merged = contract(p, &g, &d).unwrap();
        let (xs, ys): (Vec<Value>, Vec<Value>) = vals.into_iter().unzip();
        let lhs = assignment_distance(&merged, &assignment("x", &xs), &assignment("x", &ys)).unwrap();
        let mut dup_x: Assignment = assignment("x", &xs);
        dup_x.extend(assignment("y", &xs));
        let mut dup_y: Assignment = assignment("x", &ys);
        dup_y.extend(assignment("y", &ys));
        let both = Bunch::node(p, g, d);
        let rhs = assignment_distance(&both, &dup_x, &dup_y).unwrap();
        prop_assert!(lhs.is_inf() || rhs.value() <= lhs.value() + 1e-9, "{rhs:?} > {lhs:?} in {merged}");
    }

    #[test]
    fn exchange_preserves_distance(
        (shape, vals) in arb_shape().prop_flat_map(|s| { let t = s.leaf_types(); (Just(s), arb_value_pairs(t)) }),
        gs in grades(8),
        choices in proptest::collection::vec(any::<u8>(), 64),
    ) {
        let g = shape.build("x", &gs);
        let d = exchange(&g, &mut choices.into_iter());
        let perm = exchange_iso(&g, &d).unwrap();
        prop_assert_eq!(perm.len(), shape.leaves());
        let (xs, ys): (Vec<Value>, Vec<Value>) = vals.into_iter().unzip();
        let (a, b) = (assignment("x", &xs), assignment("x", &ys));
        let dg = assignment_distance(&g, &a, &b).unwrap();
        let dd = assignment_distance(&d, &a, &b).unwrap();
        prop_assert!(dg == dd || (dg.value() - dd.value()).abs() <= 1e-9 * dg.value().max(1.0));
    }

    #[test]
    fn shape_equality_ignores_names_and_grades(shape in arb_shape(), gs in grades(8), ds in grades(8)) {
        prop_assert!(shape_eq(&shape.build("x", &gs), &shape.build("y", &ds)));
    }

    #[test]
    fn value_distance_is_a_pseudosemimetric(
        (ty, v, w) in arb_ty().prop_flat_map(|t| (Just(t.clone()), arb_value_of(&t), arb_value_of(&t))),
    ) {
        prop_assert_eq!(value_distance(&ty, &v, &v).unwrap(), Sens::ZERO);
        prop_assert_eq!(value_distance(&ty, &v, &w).unwrap(), value_distance(&ty, &w, &v).unwrap());
    }

    #[test]
    fn tensor_subtyping(a in -10.0f64..10.0, b in -10.0f64..10.0, c in -10.0f64..10.0, d in -10.0f64..10.0,
                        x in arb_pidx(), y in arb_pidx()) {
        let (p, q) = if x.value() <= y.value() { (x, y) } else { (y, x) };
        let v = Value::pair(Value::Real(a), Value::Real(b));
        let w = Value::pair(Value::Real(c), Value::Real(d));
        let dp = value_distance(&Ty::tensor(p, Ty::Real, Ty::Real), &v, &w).unwrap().value();
        let dq = value_distance(&Ty::tensor(q, Ty::Real, Ty::Real), &v, &w).unwrap().value();
        prop_assert!(dq <= dp * (1.0 + 1e-9) + 1e-12);
        prop_assert!(dp <= 2f64.powf(p.recip() - q.recip()) * dq * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn tensor_distributivity(xs in proptest::collection::vec(-10.0f64..10.0, 8), p in arb_finite_pidx(), q in arb_pidx()) {
        // (x, z), (y, w) under (X (*@p) Z) (*@q) (Y (*@p) W) against
        // (x, y), (z, w) under (X (*@q) Y) (*@p) (Z (*@q) W)
        let r = |i: usize| Value::Real(xs[i]);
        let quad = |a: Value, b: Value, c: Value, d: Value| Value::pair(Value::pair(a, b), Value::pair(c, d));
        let (x, y, z, w) = (0, 1, 2, 3);
        let left_ty = Ty::tensor(q, Ty::tensor(p, Ty::Real, Ty::Real), Ty::tensor(p, Ty::Real, Ty::Real));
        let right_ty = Ty::tensor(p, Ty::tensor(q, Ty::Real, Ty::Real), Ty::tensor(q, Ty::Real, Ty::Real));
        let lhs = value_distance(
            &left_ty,
            &quad(r(x), r(z), r(y), r(w)),
            &quad(r(x + 4), r(z + 4), r(y + 4), r(w + 4)),
        ).unwrap().value();
        let rhs = value_distance(
            &right_ty,
            &quad(r(x), r(y), r(z), r(w)),
            &quad(r(x + 4), r(y + 4), r(z + 4), r(w + 4)),
        ).unwrap().value();
        prop_assert!(lhs <= c_factor(p, q).value() * rhs * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn lolli_one_is_below_lolli_p(dc in 0.0f64..50.0, dd in 0.0f64..50.0, p in arb_pidx()) {
        let one = fn_probe_term(PIdx::ONE, sens(dc), sens(dd)).value();
        let at_p = fn_probe_term(p, sens(dc), sens(dd)).value();
        prop_assert!(one <= at_p * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn monad_laws(mu in arb_dist(5), k in kernel(5, 4), h in kernel(4, 3), x in 0usize..5) {
        // return x >>= k is k x
        let left = bind(&dist_return(Value::Real(x as f64)), &k);
        prop_assert!(same_dist(&left, &k[x]));
        // mu >>= return is mu
        let right = dist_bind(&mu, |v| Ok::<_, Infallible>(dist_return(v.clone()))).unwrap();
        prop_assert!(same_dist(&right, &mu));
        // (mu >>= k) >>= h is mu >>= (fun v -> k v >>= h)
        let outer = bind(&bind(&mu, &k), &h);
        let inner = dist_bind(&mu, |v| Ok::<_, Infallible>(bind(&k[v.as_real().unwrap() as usize], &h))).unwrap();
        prop_assert!(same_dist(&outer, &inner));
    }

    #[test]
    fn max_divergence_composes_additively(
        n in 1usize..=8, m in 1usize..=8, seed in any::<u64>(),
    ) {
        let (mu, nu, f, g) = random_pair(n, m, seed);
        let lhs = max_divergence(&bind(&mu, &f), &bind(&nu, &g)).value();
        let step = f.iter().zip(&g).map(|(a, b)| max_divergence(a, b).value()).fold(0.0, f64::max);
        prop_assert!(lhs <= max_divergence(&mu, &nu).value() + step + 1e-9);
    }

    #[test]
    fn hellinger_composes_in_root_sum_square(
        n in 1usize..=8, m in 1usize..=8, seed in any::<u64>(),
    ) {
        let (mu, nu, f, g) = random_pair(n, m, seed);
        let lhs = hellinger(&bind(&mu, &f), &bind(&nu, &g)).value();
        let step = f.iter().zip(&g).map(|(a, b)| hellinger(a, b).value()).fold(0.0, f64::max);
        prop_assert!(lhs <= hellinger(&mu, &nu).value().hypot(step) + 1e-9);
    }
}

/// Two distributions on `0..n` and two kernels into `0..m`, some masses
/// zeroed so that supports can differ.
type Pair = (FinDist, FinDist, Vec<FinDist>, Vec<FinDist>);

fn random_pair(n: usize, m: usize, seed: u64) -> Pair {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dist = |k: usize, rng: &mut rand_chacha::ChaCha8Rng| loop {
        let ws: Vec<(Value, f64)> = (0..k)
            .map(|i| (Value::Real(i as f64), if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.01..1.0) }))
            .collect();
        if let Some(d) = FinDist::from_weights(ws) {
            return d;
        }
    };
    let mu = dist(n, &mut rng);
    let nu = dist(n, &mut rng);
    let f = (0..n).map(|_| dist(m, &mut rng)).collect();
    let g = (0..n).map(|_| dist(m, &mut rng)).collect();
    (mu, nu, f, g)
}

#[test]
fn dlap_is_private_on_integers() {
    use bunched_fuzz::runtime::prims::dlap_dist;
    for eps in [0.5, 1.0, 2.0] {
        for x in -5..=5 {
            for y in -5..=5 {
                let a = dlap_dist(eps, x as f64).unwrap();
                let b = dlap_dist(eps, y as f64).unwrap();
                let d = max_divergence(&a, &b).value();
                assert!(d <= eps * f64::from(x - y).abs() + 1e-6, "eps {eps}: {x} vs {y} diverge by {d}");
            }
        }
    }
}
