//! Bunched typing environments.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::lang::Ty;
use crate::metrics::{c_factor, fmt_grade, lp_norm, sens_mul, PIdx, Sens};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BunchError {
    #[error("bunches have different shapes")]
    ShapeMismatch,
    #[error("bunches are not related by exchange: {0}")]
    NotRelated(String),
    #[error("variable `{0}` is already bound in the bunch")]
    Duplicate(String),
    #[error("cannot pop a bunch that is not a node")]
    NotANode,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Bunch {
    Empty,
    Leaf { var: String, ty: Ty, sens: Sens },
    Node(PIdx, Box<Bunch>, Box<Bunch>),
}

impl Bunch {
    pub fn leaf(var: &str, ty: Ty, sens: Sens) -> Bunch {
        Bunch::Leaf { var: var.to_string(), ty, sens }
    }

    pub fn node(p: PIdx, l: Bunch, r: Bunch) -> Bunch {
        Bunch::Node(p, Box::new(l), Box::new(r))
    }

    /// Leaf variables, left to right.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.for_each_leaf(&mut |v, _, _| out.push(v.to_string()));
        out
    }

    pub fn for_each_leaf<'a>(&'a self, f: &mut impl FnMut(&'a str, &'a Ty, Sens)) {
        match self {
            Bunch::Empty => {}
            Bunch::Leaf { var, ty, sens } => f(var, ty, *sens),
            Bunch::Node(_, l, r) => {
                l.for_each_leaf(f);
                r.for_each_leaf(f);
            }
        }
    }

    pub fn leaves(&self) -> Vec<(String, Ty, Sens)> {
        let mut out = Vec::new();
        self.for_each_leaf(&mut |v, t, s| out.push((v.to_string(), t.clone(), s)));
        out
    }

    pub fn leaf_sens(&self, name: &str) -> Option<Sens> {
        let mut found = None;
        self.for_each_leaf(&mut |v, _, s| {
            if v == name {
                found = Some(s);
            }
        });
        found
    }

    /// True when every leaf has sensitivity zero (vacuously for `Empty`).
    pub fn all_zero(&self) -> bool {
        match self {
            Bunch::Empty => true,
            Bunch::Leaf { sens, .. } => sens.is_zero(),
            Bunch::Node(_, l, r) => l.all_zero() && r.all_zero(),
        }
    }

    pub fn map_sens(&self, f: &impl Fn(&str, Sens) -> Sens) -> Bunch {
        match self {
            Bunch::Empty => Bunch::Empty,
            Bunch::Leaf { var, ty, sens } => Bunch::Leaf { var: var.clone(), ty: ty.clone(), sens: f(var, *sens) },
            Bunch::Node(p, l, r) => Bunch::node(*p, l.map_sens(f), r.map_sens(f)),
        }
    }

    /// Every leaf sensitivity set to zero.
    pub fn zeroed(&self) -> Bunch {
        self.map_sens(&|_, _| Sens::ZERO)
    }

    pub fn set_sens(&self, name: &str, s: Sens) -> Bunch {
        self.map_sens(&|v, old| if v == name { s } else { old })
    }

    pub fn depth(&self) -> usize {
        match self {
            Bunch::Empty | Bunch::Leaf { .. } => 0,
            Bunch::Node(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Bunch::Empty => json!("empty"),
            Bunch::Leaf { var, ty, sens } => json!({
                "leaf": { "var": var, "ty": ty.to_string(), "sens": fmt_grade(*sens) }
            }),
            Bunch::Node(p, l, r) => json!({
                "node": { "p": p.to_string(), "left": l.to_json(), "right": r.to_json() }
            }),
        }
    }
}

/// `[x : real]_2 ,p [y : real]_1`, with nested nodes parenthesised and `.`
/// for the empty bunch.
impl fmt::Display for Bunch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bunch::Empty => f.write_str("."),
            Bunch::Leaf { var, ty, sens } => write!(f, "[{var} : {ty}]_{}", fmt_grade(*sens)),
            Bunch::Node(_, l, r) if **l == Bunch::Empty => write!(f, "{r}"),
            Bunch::Node(_, l, r) if **r == Bunch::Empty => write!(f, "{l}"),
            Bunch::Node(p, l, r) => {
                let side = |b: &Bunch| {
                    let s = b.to_string();
                    if s.contains(" ,") {
                        format!("({s})")
                    } else {
                        s
                    }
                };
                write!(f, "{} ,{p} {}", side(l), side(r))
            }
        }
    }
}

/// Same tree shape, equal node indices and equal leaf types.
pub fn shape_eq(g: &Bunch, d: &Bunch) -> bool {
    match (g, d) {
        (Bunch::Empty, Bunch::Empty) => true,
        (Bunch::Leaf { ty: a, .. }, Bunch::Leaf { ty: b, .. }) => a == b,
        (Bunch::Node(p, g1, g2), Bunch::Node(q, d1, d2)) => p == q && shape_eq(g1, d1) && shape_eq(g2, d2),
        _ => false,
    }
}

/// Multiplies every leaf sensitivity by `s`.
pub fn scale(s: Sens, g: &Bunch) -> Bunch {
    g.map_sens(&|_, r| sens_mul(s, r))
}

/// Scales only the leaves whose variable is in `vars`; the rest keep their
/// sensitivity.
pub fn scale_vars(s: Sens, g: &Bunch, vars: &HashSet<String>) -> Bunch {
    g.map_sens(&|v, r| if vars.contains(v) { sens_mul(s, r) } else { r })
}

/// Leafwise maximum of two shape-equal bunches, names from the left.
pub fn leafwise_max(g: &Bunch, d: &Bunch) -> Result<Bunch, BunchError> {
    if !shape_eq(g, d) {
        return Err(BunchError::ShapeMismatch);
    }
    Ok(zip_sens(g, d, &|a, b| a.max(b)))
}

fn zip_sens(g: &Bunch, d: &Bunch, f: &impl Fn(Sens, Sens) -> Sens) -> Bunch {
    match (g, d) {
        (Bunch::Leaf { var, ty, sens }, Bunch::Leaf { sens: r, .. }) => {
            Bunch::Leaf { var: var.clone(), ty: ty.clone(), sens: f(*sens, *r) }
        }
        (Bunch::Node(p, g1, g2), Bunch::Node(_, d1, d2)) => Bunch::node(*p, zip_sens(g1, d1, f), zip_sens(g2, d2, f)),
        _ => g.clone(),
    }
}

/// Merges two shape-equal bunches: leafwise L^p norms of the grades, with
/// every node indexed by `q` scaled by `c_factor(p, q)`. Names come from the
/// left bunch.
///
/// A side whose leaves are all zero is weakening rather than contraction, so
/// it leaves the other side untouched; and a node one of whose subtrees is
/// all zero on both sides behaves like its other subtree alone, so no
/// correction factor is charged there.
pub fn contract(p: PIdx, g: &Bunch, d: &Bunch) -> Result<Bunch, BunchError> {
    if !shape_eq(g, d) {
        return Err(BunchError::ShapeMismatch);
    }
    Ok(contract_rec(p, g, d, true))
}

/// The same merge without the correction factors. Useful for diagnosing
/// which part of a grade comes from index mismatches.
pub fn contract_uncorrected(p: PIdx, g: &Bunch, d: &Bunch) -> Result<Bunch, BunchError> {
    if !shape_eq(g, d) {
        return Err(BunchError::ShapeMismatch);
    }
    Ok(contract_rec(p, g, d, false))
}

fn contract_rec(p: PIdx, g: &Bunch, d: &Bunch, correct: bool) -> Bunch {
    if d.all_zero() {
        return g.clone();
    }
    if g.all_zero() {
        return zip_sens(g, d, &|_, r| r);
    }
    match (g, d) {
        (Bunch::Leaf { var, ty, sens }, Bunch::Leaf { sens: r, .. }) => {
            Bunch::Leaf { var: var.clone(), ty: ty.clone(), sens: lp_norm(p, &[*sens, *r]) }
        }
        (Bunch::Node(q, g1, g2), Bunch::Node(_, d1, d2)) => {
            let l = contract_rec(p, g1, d1, correct);
            let r = contract_rec(p, g2, d2, correct);
            let single_sided = (g1.all_zero() && d1.all_zero()) || (g2.all_zero() && d2.all_zero());
            if !correct || single_sided {
                return Bunch::node(*q, l, r);
            }
            let c = c_factor(p, *q);
            Bunch::node(*q, scale(c, &l), scale(c, &r))
        }
        _ => g.clone(),
    }
}

/// Normal form modulo associativity and commutativity at equal indices, with
/// `Empty` as unit.
#[derive(Clone, Debug)]
enum Nf {
    Leaf(String, String),
    Node(String, Vec<Nf>),
}

impl Nf {
    fn key(&self) -> String {
        match self {
            Nf::Leaf(v, rest) => format!("[{v}:{rest}]"),
            Nf::Node(p, kids) => {
                let mut ks: Vec<String> = kids.iter().map(Nf::key).collect();
                ks.sort();
                format!("({p}|{})", ks.join(","))
            }
        }
    }
}

fn normalize(b: &Bunch) -> Option<Nf> {
    match b {
        Bunch::Empty => None,
        Bunch::Leaf { var, ty, sens } => Some(Nf::Leaf(var.clone(), format!("{ty}|{sens}"))),
        Bunch::Node(p, l, r) => {
            let pk = p.to_string();
            let mut kids = Vec::new();
            for child in [normalize(l), normalize(r)].into_iter().flatten() {
                match child {
                    Nf::Node(q, inner) if q == pk => kids.extend(inner),
                    other => kids.push(other),
                }
            }
            match kids.len() {
                0 => None,
                1 => kids.pop(),
                _ => Some(Nf::Node(pk, kids)),
            }
        }
    }
}

/// For bunches related by exchange, maps each leaf position of `d` to the
/// leaf position of `g` holding the same variable.
pub fn exchange_iso(g: &Bunch, d: &Bunch) -> Result<Vec<usize>, BunchError> {
    let kg = normalize(g).map(|n| n.key()).unwrap_or_default();
    let kd = normalize(d).map(|n| n.key()).unwrap_or_default();
    if kg != kd {
        return Err(BunchError::NotRelated(format!("{kg} vs {kd}")));
    }
    let positions: BTreeMap<String, usize> = g.vars().into_iter().enumerate().map(|(i, v)| (v, i)).collect();
    d.vars()
        .iter()
        .map(|v| positions.get(v).copied().ok_or_else(|| BunchError::NotRelated(format!("missing `{v}`"))))
        .collect()
}

/// `Node(p, g, new)`, rejecting names already bound in `g`.
pub fn comb_extend(g: &Bunch, p: PIdx, new: Bunch) -> Result<Bunch, BunchError> {
    let existing: HashSet<String> = g.vars().into_iter().collect();
    if let Some(dup) = new.vars().into_iter().find(|v| existing.contains(v)) {
        return Err(BunchError::Duplicate(dup));
    }
    Ok(Bunch::node(p, g.clone(), new))
}

pub fn comb_pop(g: &Bunch) -> Result<(Bunch, Bunch), BunchError> {
    match g {
        Bunch::Node(_, l, r) => Ok(((**l).clone(), (**r).clone())),
        _ => Err(BunchError::NotANode),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> Sens {
        Sens::new(v).unwrap()
    }

    fn p(v: f64) -> PIdx {
        PIdx::new(v).unwrap()
    }

    fn lf(v: &str, sens: f64) -> Bunch {
        Bunch::leaf(v, Ty::Real, s(sens))
    }

    #[test]
    fn vars_examples() {
        assert!(Bunch::Empty.vars().is_empty());
        assert_eq!(lf("x", 1.0).vars(), vec!["x"]);
        assert_eq!(Bunch::node(p(2.0), lf("x", 1.0), lf("y", 1.0)).vars(), vec!["x", "y"]);
    }

    #[test]
    fn shape_eq_examples() {
        assert!(shape_eq(&lf("x", 3.0), &lf("y", 7.0)));
        let a = Bunch::node(p(1.0), lf("x", 1.0), lf("y", 1.0));
        let b = Bunch::node(p(2.0), lf("x", 1.0), lf("y", 1.0));
        assert!(!shape_eq(&a, &b));
        assert!(!shape_eq(&Bunch::Empty, &lf("x", 0.0)));
        assert!(!shape_eq(&lf("x", 0.0), &Bunch::leaf("x", Ty::Unit, s(0.0))));
    }

    #[test]
    fn scale_examples() {
        let g = Bunch::node(p(2.0), lf("x", 3.0), lf("y", 0.5));
        assert_eq!(scale(Sens::ONE, &g), g);
        assert_eq!(scale(Sens::INF, &lf("x", 0.0)), Bunch::leaf("x", Ty::Real, Sens::INF));
        assert_eq!(scale(s(2.0), &g), Bunch::node(p(2.0), lf("x", 6.0), lf("y", 1.0)));
    }

    #[test]
    fn contract_leaf_examples() {
        let r = contract(p(2.0), &lf("x", 2.0 * 2f64.sqrt()), &lf("y", 2f64.sqrt())).unwrap();
        let Bunch::Leaf { var, sens, .. } = r else { panic!() };
        assert_eq!(var, "x");
        assert!((sens.value() - 10f64.sqrt()).abs() < 1e-12);
        assert_eq!(contract(PIdx::INF, &lf("x", 3.0), &lf("x", 5.0)).unwrap(), lf("x", 5.0));
    }

    #[test]
    fn contract_at_one_over_one_nodes_sums() {
        let g = Bunch::node(p(1.0), lf("x", 1.0), lf("y", 2.0));
        let d = Bunch::node(p(1.0), lf("x", 3.0), lf("y", 4.0));
        assert_eq!(contract(p(1.0), &g, &d).unwrap(), Bunch::node(p(1.0), lf("x", 4.0), lf("y", 6.0)));
    }

    #[test]
    fn contract_charges_correction_across_indices() {
        let g = Bunch::node(p(1.0), lf("x", 1.0), lf("y", 1.0));
        let r = contract(p(2.0), &g, &g).unwrap();
        let want = 2f64.sqrt() * 2f64.sqrt();
        for (_, _, sens) in r.leaves() {
            assert!((sens.value() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn contract_weakening_shortcuts() {
        let g = Bunch::node(p(1.0), lf("x", 1.0), lf("y", 0.0));
        let z = g.zeroed();
        assert_eq!(contract(p(2.0), &g, &z).unwrap(), g);
        let named = Bunch::node(p(1.0), lf("a", 0.0), lf("b", 0.0));
        let r = contract(p(2.0), &named, &g).unwrap();
        assert_eq!(r.vars(), vec!["a", "b"]);
        assert_eq!(r.leaf_sens("a"), Some(s(1.0)));
        // one-sided subtree: no correction at the node
        let e = Bunch::node(p(1.0), Bunch::Empty, lf("z", 1.0));
        let r = contract(p(2.0), &e, &e).unwrap();
        assert!((r.leaf_sens("z").unwrap().value() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn contract_rejects_shape_mismatch() {
        assert_eq!(contract(p(1.0), &lf("x", 1.0), &Bunch::Empty), Err(BunchError::ShapeMismatch));
    }

    #[test]
    fn contract_inf_idempotent() {
        let g = Bunch::node(p(3.0), Bunch::node(p(1.0), lf("a", 2.0), lf("b", 0.0)), lf("c", 7.0));
        assert_eq!(contract(PIdx::INF, &g, &g).unwrap(), g);
    }

    #[test]
    fn exchange_examples() {
        let a = lf("a", 1.0);
        let b = lf("b", 2.0);
        let c = lf("c", 3.0);
        let w = exchange_iso(&Bunch::node(p(2.0), a.clone(), b.clone()), &Bunch::node(p(2.0), b.clone(), a.clone()))
            .unwrap();
        assert_eq!(w, vec![1, 0]);
        let l = Bunch::node(p(1.0), a.clone(), Bunch::node(p(2.0), b.clone(), c.clone()));
        let r = Bunch::node(p(1.0), Bunch::node(p(2.0), a.clone(), b.clone()), c.clone());
        assert!(exchange_iso(&l, &r).is_err());
        let w = exchange_iso(&l, &Bunch::node(p(5.0), Bunch::Empty, l.clone())).unwrap();
        assert_eq!(w, vec![0, 1, 2]);
        let assoc_l = Bunch::node(p(2.0), a.clone(), Bunch::node(p(2.0), b.clone(), c.clone()));
        let assoc_r = Bunch::node(p(2.0), Bunch::node(p(2.0), c, a), b);
        assert_eq!(exchange_iso(&assoc_l, &assoc_r).unwrap(), vec![2, 0, 1]);
    }

    #[test]
    fn comb_operations() {
        let x = lf("x", 1.0);
        let g = comb_extend(&Bunch::Empty, PIdx::ONE, x.clone()).unwrap();
        assert_eq!(g, Bunch::node(PIdx::ONE, Bunch::Empty, x.clone()));
        assert_eq!(comb_pop(&g).unwrap(), (Bunch::Empty, x.clone()));
        assert_eq!(comb_extend(&g, p(2.0), x), Err(BunchError::Duplicate("x".into())));
        assert_eq!(comb_pop(&Bunch::Empty), Err(BunchError::NotANode));
    }

    #[test]
    fn json_form() {
        let g = Bunch::node(PIdx::INF, Bunch::Empty, lf("x", 10f64.sqrt()));
        let j = g.to_json();
        assert_eq!(j["node"]["p"], "inf");
        assert_eq!(j["node"]["left"], "empty");
        assert_eq!(j["node"]["right"]["leaf"]["sens"], "3.16227766");
    }
}
