//! Random values, neighbouring values, and a type-directed library of
//! non-expansive functions used wherever a test needs a function argument.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::SampleConfig;
use crate::lang::ast::{Side, Ty};
use crate::metrics::PIdx;
use crate::runtime::dist::FinDist;
use crate::runtime::prims::clip;
use crate::runtime::value::Value;

type Proj = Arc<dyn Fn(&Value) -> f64 + Send + Sync>;
type Embed = Arc<dyn Fn(f64) -> Value + Send + Sync>;

const MAX_DIST_SUPPORT: usize = 4;

fn gen_real(cfg: &SampleConfig, rng: &mut ChaCha8Rng) -> f64 {
    let s = cfg.value_scale;
    if cfg.integral {
        let b = s.floor() as i64;
        rng.gen_range(-b..=b) as f64
    } else {
        rng.gen_range(-s..=s)
    }
}

/// A random inhabitant of `ty`. Arrow positions get library functions.
pub fn gen_value(ty: &Ty, cfg: &SampleConfig, rng: &mut ChaCha8Rng) -> Value {
    match ty {
        Ty::Unit => Value::Unit,
        Ty::Real => Value::Real(gen_real(cfg, rng)),
        Ty::Bang(_, a) => Value::bang(gen_value(a, cfg, rng)),
        Ty::Tensor(_, a, b) => {
            let x = gen_value(a, cfg, rng);
            Value::pair(x, gen_value(b, cfg, rng))
        }
        Ty::Sum(a, b) => {
            if rng.gen_bool(0.5) {
                Value::inj(Side::Left, gen_value(a, cfg, rng))
            } else {
                Value::inj(Side::Right, gen_value(b, cfg, rng))
            }
        }
        Ty::SetOf(a) => {
            let n = rng.gen_range(0..=cfg.set_max);
            Value::set((0..n).map(|_| gen_value(a, cfg, rng)).collect())
        }
        Ty::ProbP(a) | Ty::ProbH(a) => {
            let n = rng.gen_range(1..=MAX_DIST_SUPPORT);
            let items = (0..n).map(|_| (gen_value(a, cfg, rng), rng.gen_range(0.05..1.0))).collect();
            Value::dist(FinDist::from_weights(items).expect("positive weights"))
        }
        Ty::Arrow(p, a, b) => library_fn(*p, a, b, rng),
    }
}

/// The "zero" inhabitant: reals 0, left injections, empty sets, point
/// masses. Arrow positions still draw library functions from `rng`.
pub fn origin(ty: &Ty, rng: &mut ChaCha8Rng) -> Value {
    match ty {
        Ty::Unit => Value::Unit,
        Ty::Real => Value::Real(0.0),
        Ty::Bang(_, a) => Value::bang(origin(a, rng)),
        Ty::Tensor(_, a, b) => {
            let x = origin(a, rng);
            Value::pair(x, origin(b, rng))
        }
        Ty::Sum(a, _) => Value::inj(Side::Left, origin(a, rng)),
        Ty::SetOf(_) => Value::set(Vec::new()),
        Ty::ProbP(a) | Ty::ProbH(a) => Value::dist(FinDist::point(origin(a, rng))),
        Ty::Arrow(p, a, b) => library_fn(*p, a, b, rng),
    }
}

/// A fresh random value that keeps every function of `v`, so that function
/// positions stay at distance zero.
pub fn regen(ty: &Ty, v: &Value, cfg: &SampleConfig, rng: &mut ChaCha8Rng) -> Value {
    if !ty.contains_arrow() {
        return gen_value(ty, cfg, rng);
    }
    match (ty, v) {
        (Ty::Bang(_, a), Value::Bang(x)) => Value::bang(regen(a, x, cfg, rng)),
        (Ty::Tensor(_, a, b), Value::Pair(x, y)) => {
            let x = regen(a, x, cfg, rng);
            Value::pair(x, regen(b, y, cfg, rng))
        }
        (Ty::Sum(a, _), Value::Inj(Side::Left, x)) => Value::inj(Side::Left, regen(a, x, cfg, rng)),
        (Ty::Sum(_, b), Value::Inj(Side::Right, x)) => Value::inj(Side::Right, regen(b, x, cfg, rng)),
        _ => v.clone(),
    }
}

/// Number of positions [`perturb`] can move: each real, and each set as a
/// whole.
pub fn coord_count(ty: &Ty, v: &Value) -> usize {
    match (ty, v) {
        (Ty::Real, _) => 1,
        (Ty::Bang(_, a), Value::Bang(x)) => coord_count(a, x),
        (Ty::Tensor(_, a, b), Value::Pair(x, y)) => coord_count(a, x) + coord_count(b, y),
        (Ty::Sum(a, _), Value::Inj(Side::Left, x)) => coord_count(a, x),
        (Ty::Sum(_, b), Value::Inj(Side::Right, x)) => coord_count(b, x),
        (Ty::SetOf(_), _) => 1,
        _ => 0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// Reals move by `+1`; sets gain (or lose) their element type's origin.
    Unit,
    /// Reals move by a random nonzero amount of at most 1 (an integer step
    /// of 1 or 2 in integral mode); sets gain or lose a random element.
    Random,
}

/// Moves coordinate `*k` of `v`, counting down through the coordinates in
/// order. Returns `v` unchanged when fewer than `*k + 1` coordinates exist.
pub fn perturb(ty: &Ty, v: &Value, k: &mut usize, step: Step, cfg: &SampleConfig, rng: &mut ChaCha8Rng) -> Value {
    match (ty, v) {
        (Ty::Real, Value::Real(x)) => {
            if *k > 0 {
                *k -= 1;
                return v.clone();
            }
            *k = usize::MAX;
            let delta = match step {
                Step::Unit => 1.0,
                Step::Random if cfg.integral => {
                    let m = rng.gen_range(1..=2) as f64;
                    if rng.gen_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                }
                Step::Random => {
                    let m = rng.gen_range(1e-3..=1.0);
                    if rng.gen_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                }
            };
            Value::Real(x + delta)
        }
        (Ty::Bang(_, a), Value::Bang(x)) => Value::bang(perturb(a, x, k, step, cfg, rng)),
        (Ty::Tensor(_, a, b), Value::Pair(x, y)) => {
            let x2 = perturb(a, x, k, step, cfg, rng);
            let y2 = perturb(b, y, k, step, cfg, rng);
            Value::pair(x2, y2)
        }
        (Ty::Sum(a, _), Value::Inj(Side::Left, x)) => Value::inj(Side::Left, perturb(a, x, k, step, cfg, rng)),
        (Ty::Sum(_, b), Value::Inj(Side::Right, x)) => Value::inj(Side::Right, perturb(b, x, k, step, cfg, rng)),
        (Ty::SetOf(a), Value::Set(items)) => {
            if *k > 0 {
                *k -= 1;
                return v.clone();
            }
            *k = usize::MAX;
            let mut items: Vec<Value> = items.as_ref().clone();
            match step {
                Step::Unit => {
                    let o = origin(a, rng);
                    match items.iter().position(|x| *x == o) {
                        Some(i) => {
                            items.remove(i);
                        }
                        None => items.push(o),
                    }
                }
                Step::Random => {
                    if !items.is_empty() && rng.gen_bool(0.5) {
                        let i = rng.gen_range(0..items.len());
                        items.remove(i);
                    } else {
                        let fresh = gen_value(a, cfg, rng);
                        if !items.contains(&fresh) {
                            items.push(fresh);
                        }
                    }
                }
            }
            Value::set(items)
        }
        _ => v.clone(),
    }
}

/// `2^-(1 - 1/p)`: equal weights whose dual-norm is 1, so that
/// `u*a + u*b` is non-expansive from an L^p pair.
fn dual_weight(p: PIdx) -> f64 {
    2f64.powf(-(1.0 - p.recip()))
}

/// A real-valued non-expansive projection of `ty`.
fn projection(ty: &Ty, rng: &mut ChaCha8Rng) -> (Proj, String) {
    match ty {
        Ty::Real => {
            let k: f64 = rng.gen_range(-1.0..=1.0);
            let c: f64 = rng.gen_range(-1.0..=1.0);
            match rng.gen_range(0..6) {
                0 => (Arc::new(|v| v.as_real().unwrap_or(0.0)), "x".into()),
                1 => (Arc::new(|v| -v.as_real().unwrap_or(0.0)), "-x".into()),
                2 => (Arc::new(|v| clip(v.as_real().unwrap_or(0.0))), "clip x".into()),
                3 => (Arc::new(|v| v.as_real().unwrap_or(0.0).sin()), "sin x".into()),
                4 => (Arc::new(|v| v.as_real().unwrap_or(0.0).abs()), "|x|".into()),
                _ => (Arc::new(move |v| k * v.as_real().unwrap_or(0.0) + c), format!("{k}*x + {c}")),
            }
        }
        Ty::Bang(s, a) => {
            let (g, d) = projection(a, rng);
            let inner = move |v: &Value| match v {
                Value::Bang(x) => g(x),
                _ => 0.0,
            };
            if s.is_inf() {
                // !inf separates every pair of distinct values
                (Arc::new(inner), format!("({d}) . unbox"))
            } else {
                let s = s.value();
                (Arc::new(move |v| s * inner(v)), format!("{s} * ({d}) . unbox"))
            }
        }
        Ty::Tensor(p, a, b) => {
            let (ga, da) = projection(a, rng);
            let (gb, db) = projection(b, rng);
            let u = dual_weight(*p);
            match rng.gen_range(0..3) {
                0 => (Arc::new(move |v| if let Value::Pair(x, _) = v { ga(x) } else { 0.0 }), format!("({da}) . fst")),
                1 => (Arc::new(move |v| if let Value::Pair(_, y) = v { gb(y) } else { 0.0 }), format!("({db}) . snd")),
                _ => (
                    Arc::new(move |v| if let Value::Pair(x, y) = v { u * (ga(x) + gb(y)) } else { 0.0 }),
                    format!("{u} * (({da}) . fst + ({db}) . snd)"),
                ),
            }
        }
        Ty::Sum(a, b) => {
            let (ga, da) = projection(a, rng);
            let (gb, db) = projection(b, rng);
            (
                Arc::new(move |v| match v {
                    Value::Inj(Side::Left, x) => ga(x),
                    Value::Inj(Side::Right, y) => gb(y),
                    _ => 0.0,
                }),
                format!("case {da} | {db}"),
            )
        }
        Ty::SetOf(a) => {
            if rng.gen_bool(0.5) {
                (Arc::new(|v| if let Value::Set(xs) = v { xs.len() as f64 } else { 0.0 }), "size".into())
            } else {
                let (g, d) = projection(a, rng);
                (
                    Arc::new(move |v| if let Value::Set(xs) = v { xs.iter().map(|x| clip(g(x))).sum() } else { 0.0 }),
                    format!("sum clip ({d})"),
                )
            }
        }
        Ty::Unit | Ty::ProbP(_) | Ty::ProbH(_) | Ty::Arrow(..) => (Arc::new(|_| 0.0), "0".into()),
    }
}

/// A non-expansive map from the reals into `ty`.
fn embedding(ty: &Ty, rng: &mut ChaCha8Rng) -> (Embed, String) {
    let constant = |v: Value, d: String| -> (Embed, String) { (Arc::new(move |_| v.clone()), d) };
    match ty {
        Ty::Real => {
            if rng.gen_bool(0.5) {
                (Arc::new(Value::Real), "r".into())
            } else {
                (Arc::new(|r| Value::Real(-r)), "-r".into())
            }
        }
        Ty::Bang(s, _) if s.is_inf() || s.is_zero() => {
            let o = origin(ty, rng);
            let d = o.to_string();
            constant(o, d)
        }
        Ty::Bang(s, a) => {
            let (e, d) = embedding(a, rng);
            let s = s.value();
            (Arc::new(move |r| Value::bang(e(r / s))), format!("!({d})[r/{s}]"))
        }
        Ty::Tensor(_, a, b) => {
            if rng.gen_bool(0.5) {
                let (e, d) = embedding(a, rng);
                let o = origin(b, rng);
                let od = o.to_string();
                (Arc::new(move |r| Value::pair(e(r), o.clone())), format!("({d}, {od})"))
            } else {
                let o = origin(a, rng);
                let od = o.to_string();
                let (e, d) = embedding(b, rng);
                (Arc::new(move |r| Value::pair(o.clone(), e(r))), format!("({od}, {d})"))
            }
        }
        Ty::Sum(a, _) => {
            let (e, d) = embedding(a, rng);
            (Arc::new(move |r| Value::inj(Side::Left, e(r))), format!("inl ({d})"))
        }
        Ty::Arrow(q, a, b) => {
            let (g, gd) = projection(a, rng);
            let (e, ed) = embedding(b, rng);
            let u = dual_weight(*q);
            let desc = format!("fun y -> ({ed})[r := {u} * (r + ({gd})(y))]");
            let name = desc.clone();
            (
                Arc::new(move |r| {
                    let (g, e) = (g.clone(), e.clone());
                    Value::native(&name, move |y| Ok(e(u * (r + g(&y)))))
                }),
                desc,
            )
        }
        Ty::Unit | Ty::SetOf(_) | Ty::ProbP(_) | Ty::ProbH(_) => {
            let o = origin(ty, rng);
            let d = o.to_string();
            constant(o, d)
        }
    }
}

/// A random non-expansive function from `dom` to `cod`, valid at any index
/// `p`: it factors through a non-expansive projection to the reals.
pub fn library_fn(_p: PIdx, dom: &Ty, cod: &Ty, rng: &mut ChaCha8Rng) -> Value {
    let (g, gd) = projection(dom, rng);
    let (e, ed) = embedding(cod, rng);
    let name = format!("fun x -> ({ed})[r := ({gd})(x)]");
    Value::native(&name, move |x| Ok(e(g(&x))))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::lang::parser::parse_ty;
    use crate::runtime::eval::apply;
    use crate::vmetric::value_distance;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn generated_values_inhabit_their_types() {
        let cfg = SampleConfig::default();
        for src in ["unit", "real", "![2] real", "real (*@2) (real + unit)", "set real", "circP real", "real -o real"] {
            let ty = parse_ty(src).unwrap();
            let mut r = rng(7);
            for _ in 0..50 {
                let v = gen_value(&ty, &cfg, &mut r);
                assert!(crate::vmetric::inhabits(&ty, &v), "{src}: {v}");
            }
        }
    }

    #[test]
    fn sets_respect_the_size_bound() {
        let cfg = SampleConfig::default();
        let mut r = rng(1);
        for _ in 0..100 {
            let Value::Set(xs) = gen_value(&Ty::set_of(Ty::Real), &cfg, &mut r) else { panic!() };
            assert!(xs.len() <= cfg.set_max);
        }
    }

    #[test]
    fn unit_step_moves_one_coordinate() {
        let cfg = SampleConfig::default();
        let ty = parse_ty("real (*) (real (*) set real)").unwrap();
        let o = origin(&ty, &mut rng(0));
        assert_eq!(coord_count(&ty, &o), 3);
        let moved: Vec<String> = (0..3)
            .map(|i| {
                let mut k = i;
                perturb(&ty, &o, &mut k, Step::Unit, &cfg, &mut rng(0)).to_string()
            })
            .collect();
        assert_eq!(moved, vec!["(1, (0, {}))", "(0, (1, {}))", "(0, (0, {0}))"]);
    }

    #[test]
    fn library_functions_are_non_expansive() {
        let cfg = SampleConfig::default();
        let cases = [
            ("real (*@2) real", "real"),
            ("real (*) ![3] real", "real (*@inf) real"),
            ("set real", "![2] real"),
            ("real + real", "real -o@2 real"),
            ("![0.5] real", "real + unit"),
        ];
        for (dom, cod) in cases {
            let (dom, cod) = (parse_ty(dom).unwrap(), parse_ty(cod).unwrap());
            let mut r = rng(3);
            for _ in 0..200 {
                let f = library_fn(PIdx::ONE, &dom, &cod, &mut r);
                let x = gen_value(&dom, &cfg, &mut r);
                let y = gen_value(&dom, &cfg, &mut r);
                let (fx, fy) = (apply(&f, x.clone()).unwrap(), apply(&f, y.clone()).unwrap());
                let din = value_distance(&dom, &x, &y).unwrap();
                match &cod {
                    Ty::Arrow(q, a, b) => {
                        // compare the curried results on a common argument pair
                        let (z, w) = (gen_value(a, &cfg, &mut r), gen_value(a, &cfg, &mut r));
                        let dout = value_distance(b, &apply(&fx, z.clone()).unwrap(), &apply(&fy, w.clone()).unwrap())
                            .unwrap();
                        let bound = crate::metrics::lp_norm(*q, &[din, value_distance(a, &z, &w).unwrap()]);
                        assert!(dout.value() <= bound.value() * (1.0 + 1e-12) + 1e-12);
                    }
                    _ => {
                        let dout = value_distance(&cod, &fx, &fy).unwrap();
                        assert!(dout.value() <= din.value() * (1.0 + 1e-12) + 1e-12, "{f}: {dout} > {din}");
                    }
                }
            }
        }
    }
}
