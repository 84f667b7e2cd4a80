//! Runtime behaviour of the primitives.

use super::dist::FinDist;
use super::eval::{apply, EvalError};
use super::value::Value;
use crate::lang::ast::Side;
use crate::lang::prims::PrimOp;
use crate::metrics::{lp_norm, PIdx, Sens};
use crate::vmetric::value_distance;

/// Half-width of the fixed output window of `dlap`.
pub const DLAP_WINDOW: i64 = 60;
/// Half-width of the fixed candidate grid of `lpmech2`.
pub const LPMECH_GRID: i64 = 8;

fn bad(name: &str, expected: &str, found: &Value) -> EvalError {
    EvalError::Prim(format!("prim.{name}: expected {expected}, found {found}"))
}

fn real(name: &str, v: &Value) -> Result<f64, EvalError> {
    v.as_real().ok_or_else(|| bad(name, "a real", v))
}

fn unbang<'a>(name: &str, v: &'a Value) -> Result<&'a Value, EvalError> {
    match v {
        Value::Bang(inner) => Ok(inner),
        other => Err(bad(name, "a boxed value", other)),
    }
}

fn pair<'a>(name: &str, v: &'a Value) -> Result<(&'a Value, &'a Value), EvalError> {
    match v {
        Value::Pair(a, b) => Ok((a, b)),
        other => Err(bad(name, "a pair", other)),
    }
}

pub fn clip(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

pub fn rotate(theta: f64, x: f64, y: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (c * x - s * y, s * x + c * y)
}

/// `P(K >= m)` for the two-sided geometric `P(K = k) ∝ a^|k|`.
fn geo_tail(a: f64, m: i64) -> f64 {
    if m >= 1 {
        a.powi(m.min(i32::MAX as i64) as i32) / (1.0 + a)
    } else {
        1.0 - a.powi((1 - m).min(i32::MAX as i64) as i32) / (1.0 + a)
    }
}

/// Discrete Laplace noise around `round(x)`, post-processed by clamping into
/// the window `[-DLAP_WINDOW, DLAP_WINDOW]` so that the output space does not
/// depend on the input.
pub fn dlap_dist(eps: f64, x: f64) -> Result<FinDist, EvalError> {
    if !x.is_finite() {
        return Err(EvalError::Prim(format!("prim.dlap: input {x} is not finite")));
    }
    let n = x.round().clamp(-1e15, 1e15) as i64;
    let a = (-eps).exp();
    let c = (eps / 2.0).tanh();
    let w = DLAP_WINDOW;
    let mut items = Vec::with_capacity((2 * w + 1) as usize);
    for y in -w..=w {
        let mass = if y == w {
            geo_tail(a, w - n)
        } else if y == -w {
            geo_tail(a, w + n)
        } else {
            c * (-eps * (y - n).abs() as f64).exp()
        };
        items.push((Value::Real(y as f64), mass));
    }
    FinDist::from_weights(items).ok_or_else(|| EvalError::Prim("prim.dlap: no mass in window".into()))
}

/// Exponential mechanism over the integer grid `[-G, G]^2` scored by the
/// `p`-distance to `center`.
pub fn lpmech2_dist(eps: f64, p: PIdx, s: f64, center: (f64, f64)) -> Result<FinDist, EvalError> {
    let g = LPMECH_GRID;
    let mut items = Vec::with_capacity(((2 * g + 1) * (2 * g + 1)) as usize);
    for i in -g..=g {
        for j in -g..=g {
            let (yi, yj) = (i as f64, j as f64);
            let d =
                lp_norm(p, &[Sens::from_f64_lossy((center.0 - yi).abs()), Sens::from_f64_lossy((center.1 - yj).abs())]);
            items.push((Value::pair(Value::Real(yi), Value::Real(yj)), -eps * d.value() / (2.0 * s)));
        }
    }
    FinDist::from_log_weights(items).ok_or_else(|| EvalError::Prim("prim.lpmech2: query result is not finite".into()))
}

/// The runtime value of a resolved primitive.
pub fn prim_value(op: &PrimOp) -> Value {
    match op.clone() {
        PrimOp::Add => Value::native("add", |v| {
            let (a, b) = pair("add", &v)?;
            Ok(Value::Real(real("add", a)? + real("add", b)?))
        }),
        PrimOp::Scale(k) => Value::native("scale", move |v| {
            let x = real("scale", unbang("scale", &v)?)?;
            Ok(Value::Real(k * x))
        }),
        PrimOp::Rot(theta) => Value::native("rot", move |v| {
            let (a, b) = pair("rot", &v)?;
            let (x, y) = rotate(theta, real("rot", a)?, real("rot", b)?);
            Ok(Value::pair(Value::Real(x), Value::Real(y)))
        }),
        PrimOp::Dist(ty) => Value::native("dist", move |v| {
            let (a, b) = pair("dist", &v)?;
            let d = value_distance(&ty, a, b).map_err(|e| EvalError::Prim(format!("prim.dist: {e}")))?;
            Ok(Value::Real(d.value()))
        }),
        PrimOp::Clip => Value::native("clip", |v| Ok(Value::Real(clip(real("clip", &v)?)))),
        PrimOp::Cmp => Value::native("cmp", |v| {
            let (a, b) = pair("cmp", &v)?;
            let a = real("cmp", unbang("cmp", a)?)?;
            let b = real("cmp", unbang("cmp", b)?)?;
            let side = if a < b { Side::Left } else { Side::Right };
            Ok(Value::inj(side, Value::Unit))
        }),
        PrimOp::Sum(_) => Value::native("sum", |v| {
            let f = unbang("sum", &v)?.clone();
            Ok(Value::native("sum", move |set| {
                let Value::Set(items) = &set else { return Err(bad("sum", "a set", &set)) };
                let mut total = 0.0;
                for x in items.iter() {
                    total += clip(real("sum", &apply(&f, Value::bang(x.clone()))?)?);
                }
                Ok(Value::Real(total))
            }))
        }),
        PrimOp::Relax { .. } => Value::native("relax", Ok),
        PrimOp::Tighten { .. } => Value::native("tighten", |v| Ok(unbang("tighten", &v)?.clone())),
        PrimOp::Dlap(eps) => Value::native("dlap", move |v| {
            let x = real("dlap", unbang("dlap", &v)?)?;
            Ok(Value::dist(dlap_dist(eps, x)?))
        }),
        PrimOp::LpMech2 { eps, p, s } => Value::native("lpmech2", move |v| {
            let f = unbang("lpmech2", &v)?.clone();
            Ok(Value::native("lpmech2", move |db| {
                let db = unbang("lpmech2", &db)?.clone();
                let out = apply(&f, Value::bang(db))?;
                let (a, b) = pair("lpmech2", &out)?;
                let center = (real("lpmech2", a)?, real("lpmech2", b)?);
                Ok(Value::dist(lpmech2_dist(eps, p, s, center)?))
            }))
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_term;
    use crate::runtime::eval::{eval, Env};
    use crate::runtime::value::parse_value;

    fn run(src: &str) -> Value {
        eval(&parse_term(src).unwrap(), &Env::new()).unwrap()
    }

    #[test]
    fn dlap_mode_matches_closed_form() {
        let d = dlap_dist(1.0, 0.0).unwrap();
        let e = (-1f64).exp();
        assert!((d.prob(&Value::Real(0.0)) - (1.0 - e) / (1.0 + e)).abs() < 1e-9);
        assert_eq!(d.len(), (2 * DLAP_WINDOW + 1) as usize);
        let total: f64 = d.support().iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dlap_far_input_piles_on_endpoint() {
        let d = dlap_dist(1.0, 1000.0).unwrap();
        assert!(d.prob(&Value::Real(60.0)) > 1.0 - 1e-12);
    }

    #[test]
    fn clipped_sum() {
        let f = run("prim.sum (![inf] (fun (x : ![inf] real) -o x))");
        let v = apply(&f, parse_value("{0.5, 2.0}").unwrap()).unwrap();
        assert_eq!(v.as_real(), Some(1.5));
    }

    #[test]
    fn cmp_scale_tighten() {
        assert_eq!(run("prim.cmp (![inf] 1, ![inf] 2)"), parse_value("inl ()").unwrap());
        assert_eq!(run("prim.cmp (![inf] 2, ![inf] 2)"), parse_value("inr ()").unwrap());
        assert_eq!(run("prim.scale[-3] (![3] 2)"), Value::Real(-6.0));
        assert_eq!(run("prim.tighten[1, 2, real, real] (![2] (1, 2)@2)"), parse_value("(1, 2)").unwrap());
        assert_eq!(run("prim.clip -4"), Value::Real(-1.0));
    }

    #[test]
    fn dist_primitive() {
        assert_eq!(run("prim.dist[real (*@2) real] ((0, 0)@2, (3, 4)@2)"), Value::Real(5.0));
    }

    #[test]
    fn lpmech2_concentrates_near_the_query() {
        let d = lpmech2_dist(4.0, PIdx::TWO, 1.0, (1.0, -2.0)).unwrap();
        let best = d.support().iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert_eq!(best.0, parse_value("(1, -2)").unwrap());
        assert_eq!(d.len(), 17 * 17);
    }
}
