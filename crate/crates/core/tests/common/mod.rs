#![allow(dead_code)]

use std::path::PathBuf;

use bunched_fuzz::bunch::Bunch;
use bunched_fuzz::lang::{Side, Ty};
use bunched_fuzz::metrics::{PIdx, Sens};
use bunched_fuzz::runtime::{FinDist, Value};
use bunched_fuzz::vmetric::Assignment;
use proptest::prelude::*;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every corpus file as `(stem, source)`, sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "bfz"))
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            (stem, std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

pub fn pidx(v: f64) -> PIdx {
    PIdx::new(v).unwrap()
}

pub fn sens(v: f64) -> Sens {
    Sens::new(v).unwrap()
}

pub fn arb_pidx() -> impl Strategy<Value = PIdx> {
    prop_oneof![Just(PIdx::ONE), Just(PIdx::TWO), Just(pidx(3.0)), Just(PIdx::INF), (1.0f64..6.0).prop_map(pidx),]
}

pub fn arb_finite_pidx() -> impl Strategy<Value = PIdx> {
    prop_oneof![Just(PIdx::ONE), Just(PIdx::TWO), Just(pidx(3.0)), (1.0f64..6.0).prop_map(pidx)]
}

pub fn arb_sens() -> impl Strategy<Value = Sens> {
    prop_oneof![
        2 => Just(Sens::ZERO),
        8 => (0.0f64..5.0).prop_map(sens),
        1 => Just(Sens::INF),
    ]
}

/// Leaf types used for random environments.
pub fn arb_leaf_ty() -> impl Strategy<Value = Ty> {
    prop_oneof![
        3 => Just(Ty::Real),
        1 => arb_finite_pidx().prop_map(|q| Ty::tensor(q, Ty::Real, Ty::Real)),
    ]
}

/// The shape of a bunch: node indices and leaf types, no names or grades.
#[derive(Clone, Debug)]
pub enum Shape {
    Empty,
    Leaf(Ty),
    Node(PIdx, Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn leaves(&self) -> usize {
        match self {
            Shape::Empty => 0,
            Shape::Leaf(_) => 1,
            Shape::Node(_, l, r) => l.leaves() + r.leaves(),
        }
    }

    pub fn leaf_types(&self) -> Vec<Ty> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<Ty>) {
        match self {
            Shape::Empty => {}
            Shape::Leaf(t) => out.push(t.clone()),
            Shape::Node(_, l, r) => {
                l.collect(out);
                r.collect(out);
            }
        }
    }

    /// Names leaves `{prefix}0, {prefix}1, …` in order with the given grades.
    pub fn build(&self, prefix: &str, grades: &[Sens]) -> Bunch {
        let mut i = 0;
        self.build_rec(prefix, grades, &mut i)
    }

    fn build_rec(&self, prefix: &str, grades: &[Sens], i: &mut usize) -> Bunch {
        match self {
            Shape::Empty => Bunch::Empty,
            Shape::Leaf(t) => {
                let b = Bunch::leaf(&format!("{prefix}{i}"), t.clone(), grades[*i]);
                *i += 1;
                b
            }
            Shape::Node(p, l, r) => {
                let l = l.build_rec(prefix, grades, i);
                let r = r.build_rec(prefix, grades, i);
                Bunch::node(*p, l, r)
            }
        }
    }
}

/// Shapes of depth at most 3 with at least one leaf.
pub fn arb_shape() -> impl Strategy<Value = Shape> {
    let leaf = arb_leaf_ty().prop_map(Shape::Leaf);
    leaf.prop_recursive(3, 8, 2, |inner| {
        (arb_pidx(), inner.clone(), inner).prop_map(|(p, l, r)| Shape::Node(p, Box::new(l), Box::new(r)))
    })
}

pub fn arb_real() -> impl Strategy<Value = f64> {
    prop_oneof![
        1 => Just(0.0),
        1 => (-3i32..=3).prop_map(f64::from),
        6 => -10.0f64..10.0,
    ]
}

pub fn arb_value_of(ty: &Ty) -> BoxedStrategy<Value> {
    match ty {
        Ty::Real => arb_real().prop_map(Value::Real).boxed(),
        Ty::Unit => Just(Value::Unit).boxed(),
        Ty::Tensor(_, a, b) => (arb_value_of(a), arb_value_of(b)).prop_map(|(x, y)| Value::pair(x, y)).boxed(),
        Ty::Sum(a, b) => prop_oneof![
            arb_value_of(a).prop_map(|v| Value::inj(Side::Left, v)),
            arb_value_of(b).prop_map(|v| Value::inj(Side::Right, v)),
        ]
        .boxed(),
        Ty::Bang(_, a) => arb_value_of(a).prop_map(Value::bang).boxed(),
        Ty::SetOf(a) => proptest::collection::vec(arb_value_of(a), 0..4).prop_map(Value::set).boxed(),
        _ => unimplemented!("test values for {ty}"),
    }
}

/// First-order types of depth at most 3 without distributions.
pub fn arb_ty() -> impl Strategy<Value = Ty> {
    let leaf = prop_oneof![Just(Ty::Real), Just(Ty::Unit)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (arb_pidx(), inner.clone(), inner.clone()).prop_map(|(p, a, b)| Ty::tensor(p, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ty::sum(a, b)),
            (prop_oneof![(0.0f64..4.0).prop_map(sens), Just(Sens::INF)], inner.clone())
                .prop_map(|(s, a)| Ty::bang(s, a)),
            inner.prop_map(Ty::set_of),
        ]
    })
}

/// Two values for each leaf type, in order.
pub fn arb_value_pairs(tys: Vec<Ty>) -> BoxedStrategy<Vec<(Value, Value)>> {
    let parts: Vec<BoxedStrategy<(Value, Value)>> = tys
        .iter()
        .map(|t| {
            let same = arb_value_of(t).prop_map(|v| (v.clone(), v));
            prop_oneof![1 => same, 4 => (arb_value_of(t), arb_value_of(t))].boxed()
        })
        .collect();
    parts.boxed()
}

pub fn assignment(prefix: &str, vals: &[Value]) -> Assignment {
    vals.iter().enumerate().map(|(i, v)| (format!("{prefix}{i}"), v.clone())).collect()
}

/// A random rewrite of `b` by exchange: at each node, possibly swap the
/// children, reassociate with an equally indexed left child, or pad with
/// the empty bunch. `choices` drives the decisions.
pub fn exchange(b: &Bunch, choices: &mut impl Iterator<Item = u8>) -> Bunch {
    match b {
        Bunch::Empty | Bunch::Leaf { .. } => {
            if choices.next().unwrap_or(0).is_multiple_of(7) {
                Bunch::node(PIdx::TWO, Bunch::Empty, b.clone())
            } else {
                b.clone()
            }
        }
        Bunch::Node(p, l, r) => {
            let l = exchange(l, choices);
            let r = exchange(r, choices);
            let c = choices.next().unwrap_or(0);
            match (c % 3, &l) {
                (0, _) => Bunch::node(*p, r, l),
                (1, Bunch::Node(q, a, m)) if q == p => {
                    Bunch::node(*p, (**a).clone(), Bunch::node(*p, (**m).clone(), r))
                }
                _ => Bunch::node(*p, l, r),
            }
        }
    }
}

/// A distribution over `0..n` with random positive masses.
pub fn arb_dist(n: usize) -> impl Strategy<Value = FinDist> {
    proptest::collection::vec(0.01f64..1.0, n).prop_map(|ws| {
        FinDist::from_weights(ws.into_iter().enumerate().map(|(i, w)| (Value::Real(i as f64), w)).collect()).unwrap()
    })
}
