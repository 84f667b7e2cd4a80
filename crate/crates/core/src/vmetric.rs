//! Distances between values, assignments and distributions.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::bunch::Bunch;
use crate::lang::ast::{Side, Ty};
use crate::metrics::{lp_norm, sens_add, sens_mul, PIdx, Sens, P_INF_CUTOFF};
use crate::runtime::dist::FinDist;
use crate::runtime::eval::apply;
use crate::runtime::value::Value;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VmetricError {
    #[error("values of type {0} have no computable distance; only probe-based lower bounds are available")]
    Arrow(String),
    #[error("value {value} does not inhabit {ty}")]
    Ill { ty: String, value: String },
    #[error("assignment is missing `{0}`")]
    Missing(String),
    #[error("evaluation failed while probing: {0}")]
    Eval(String),
}

/// Which reading of the distribution distance to use for `circP`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DivergenceForm {
    /// `max_x |ln(mu(x)/nu(x))|`.
    #[default]
    Max,
    /// `sum_x |ln(mu(x)/nu(x))|`.
    Sum,
}

/// Knobs for the distance computations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MetricOptions {
    pub divergence: DivergenceForm,
    /// Give distance 0 to a function compared with itself instead of
    /// rejecting the arrow type. Only sound for functions known to be
    /// non-expansive, such as those the harness generates.
    pub identical_functions: bool,
}

pub type Assignment = BTreeMap<String, Value>;

fn ill(ty: &Ty, v: &Value) -> VmetricError {
    VmetricError::Ill { ty: ty.to_string(), value: v.to_string() }
}

pub fn value_distance(ty: &Ty, v: &Value, w: &Value) -> Result<Sens, VmetricError> {
    value_distance_opts(MetricOptions::default(), ty, v, w)
}

pub fn value_distance_opts(opts: MetricOptions, ty: &Ty, v: &Value, w: &Value) -> Result<Sens, VmetricError> {
    match (ty, v, w) {
        (Ty::Unit, Value::Unit, Value::Unit) => Ok(Sens::ZERO),
        (Ty::Real, Value::Real(x), Value::Real(y)) => {
            Ok(if x == y { Sens::ZERO } else { Sens::new((x - y).abs()).unwrap_or(Sens::INF) })
        }
        (Ty::Bang(s, a), Value::Bang(x), Value::Bang(y)) => {
            if s.is_inf() {
                // only equality matters here, so arrow contents are fine
                check_inhabits(a, x)?;
                check_inhabits(a, y)?;
                return Ok(if x == y { Sens::ZERO } else { Sens::INF });
            }
            Ok(sens_mul(*s, value_distance_opts(opts, a, x, y)?))
        }
        (Ty::Sum(a, b), Value::Inj(sx, x), Value::Inj(sy, y)) => {
            let branch = |side: &Side| if *side == Side::Left { a } else { b };
            if sx != sy {
                check_inhabits(branch(sx), x)?;
                check_inhabits(branch(sy), y)?;
                return Ok(Sens::INF);
            }
            value_distance_opts(opts, branch(sx), x, y)
        }
        (Ty::Tensor(p, a, b), Value::Pair(x1, x2), Value::Pair(y1, y2)) => {
            let d1 = value_distance_opts(opts, a, x1, y1)?;
            let d2 = value_distance_opts(opts, b, x2, y2)?;
            Ok(lp_norm(*p, &[d1, d2]))
        }
        (Ty::SetOf(a), Value::Set(xs), Value::Set(ys)) => {
            for x in xs.iter().chain(ys.iter()) {
                check_inhabits(a, x)?;
            }
            Ok(Sens::new(symmetric_difference(xs, ys) as f64).unwrap_or(Sens::INF))
        }
        (Ty::ProbP(_), Value::Dist(m), Value::Dist(n)) => Ok(match opts.divergence {
            DivergenceForm::Max => max_divergence(m, n),
            DivergenceForm::Sum => sum_divergence(m, n),
        }),
        (Ty::ProbH(_), Value::Dist(m), Value::Dist(n)) => Ok(hellinger(m, n)),
        (Ty::Arrow(..), v, w) if opts.identical_functions && v.is_function() && v == w => Ok(Sens::ZERO),
        (Ty::Arrow(..), _, _) => Err(VmetricError::Arrow(ty.to_string())),
        (_, v, w) => {
            check_inhabits(ty, v)?;
            Err(ill(ty, w))
        }
    }
}

fn check_inhabits(ty: &Ty, v: &Value) -> Result<(), VmetricError> {
    if inhabits(ty, v) {
        Ok(())
    } else {
        Err(ill(ty, v))
    }
}

/// Shallow structural membership; distributions and sets check their
/// elements, functions are accepted at any arrow type.
pub fn inhabits(ty: &Ty, v: &Value) -> bool {
    match (ty, v) {
        (Ty::Unit, Value::Unit) | (Ty::Real, Value::Real(_)) => true,
        (Ty::Bang(_, a), Value::Bang(x)) => inhabits(a, x),
        (Ty::Sum(a, _), Value::Inj(Side::Left, x)) => inhabits(a, x),
        (Ty::Sum(_, b), Value::Inj(Side::Right, x)) => inhabits(b, x),
        (Ty::Tensor(_, a, b), Value::Pair(x, y)) => inhabits(a, x) && inhabits(b, y),
        (Ty::SetOf(a), Value::Set(xs)) => xs.iter().all(|x| inhabits(a, x)),
        (Ty::ProbP(a) | Ty::ProbH(a), Value::Dist(d)) => d.support().iter().all(|(x, _)| inhabits(a, x)),
        (Ty::Arrow(..), v) => v.is_function(),
        _ => false,
    }
}

fn symmetric_difference(xs: &[Value], ys: &[Value]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            Ordering::Less => {
                n += 1;
                i += 1;
            }
            Ordering::Greater => {
                n += 1;
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    n + (xs.len() - i) + (ys.len() - j)
}

/// Walks the union of both supports in order, yielding `(mu(x), nu(x))`.
fn paired_masses(mu: &FinDist, nu: &FinDist) -> Vec<(f64, f64)> {
    let (a, b) = (mu.support(), nu.support());
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len().max(b.len()));
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.0.cmp(&y.0),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        match ord {
            Ordering::Less => {
                out.push((a[i].1, 0.0));
                i += 1;
            }
            Ordering::Greater => {
                out.push((0.0, b[j].1));
                j += 1;
            }
            Ordering::Equal => {
                out.push((a[i].1, b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn log_ratio(p: f64, q: f64) -> Sens {
    match (p == 0.0, q == 0.0) {
        (true, true) => Sens::ZERO,
        (true, false) | (false, true) => Sens::INF,
        _ => Sens::from_f64_lossy((p.ln() - q.ln()).abs()),
    }
}

/// `max_x |ln(mu(x)/nu(x))|` over the union of supports.
pub fn max_divergence(mu: &FinDist, nu: &FinDist) -> Sens {
    paired_masses(mu, nu).into_iter().map(|(p, q)| log_ratio(p, q)).fold(Sens::ZERO, Sens::max)
}

/// `sum_x |ln(mu(x)/nu(x))|` over the union of supports.
pub fn sum_divergence(mu: &FinDist, nu: &FinDist) -> Sens {
    paired_masses(mu, nu).into_iter().map(|(p, q)| log_ratio(p, q)).fold(Sens::ZERO, sens_add)
}

pub fn hellinger(mu: &FinDist, nu: &FinDist) -> Sens {
    let s: f64 = paired_masses(mu, nu).into_iter().map(|(p, q)| (p.sqrt() - q.sqrt()).powi(2)).sum();
    Sens::from_f64_lossy((0.5 * s).sqrt().min(1.0))
}

/// Distance between two assignments to the variables of `env`, weighted by
/// the leaf grades and combined by the node indices.
pub fn assignment_distance(env: &Bunch, g: &Assignment, h: &Assignment) -> Result<Sens, VmetricError> {
    assignment_distance_opts(MetricOptions::default(), env, g, h)
}

pub fn assignment_distance_opts(
    opts: MetricOptions,
    env: &Bunch,
    g: &Assignment,
    h: &Assignment,
) -> Result<Sens, VmetricError> {
    match env {
        Bunch::Empty => Ok(Sens::ZERO),
        Bunch::Leaf { var, ty, sens } => {
            let x = g.get(var).ok_or_else(|| VmetricError::Missing(var.clone()))?;
            let y = h.get(var).ok_or_else(|| VmetricError::Missing(var.clone()))?;
            if sens.is_inf() {
                check_inhabits(ty, x)?;
                check_inhabits(ty, y)?;
                return Ok(if x == y { Sens::ZERO } else { Sens::INF });
            }
            Ok(sens_mul(*sens, value_distance_opts(opts, ty, x, y)?))
        }
        Bunch::Node(p, l, r) => {
            let dl = assignment_distance_opts(opts, l, g, h)?;
            let dr = assignment_distance_opts(opts, r, g, h)?;
            Ok(lp_norm(*p, &[dl, dr]))
        }
    }
}

/// One probe's contribution to the function-distance lower bound:
/// `(max(dc^p - dd^p, 0))^(1/p)`, or for `p = inf`, `dc` when `dc > dd`.
pub fn fn_probe_term(p: PIdx, dc: Sens, dd: Sens) -> Sens {
    if dc.value() <= dd.value() {
        return Sens::ZERO;
    }
    if dc.is_inf() {
        return Sens::INF;
    }
    if p.is_inf() || p.value() >= P_INF_CUTOFF {
        return dc;
    }
    // dc > dd >= 0, so dividing by dc keeps both powers in [0, 1]
    let (c, d) = (dc.value(), dd.value());
    let inner = 1.0 - (d / c).powf(p.value());
    Sens::from_f64_lossy(c * inner.max(0.0).powf(1.0 / p.value()))
}

/// A lower bound on the distance between `f` and `g` at `dom -o@p cod`,
/// taken as the supremum of [`fn_probe_term`] over `probes`.
pub fn fn_distance_lb(
    p: PIdx,
    dom: &Ty,
    cod: &Ty,
    f: &Value,
    g: &Value,
    probes: &[(Value, Value)],
) -> Result<Sens, VmetricError> {
    let mut best = Sens::ZERO;
    for (x, y) in probes {
        let fx = apply(f, x.clone()).map_err(|e| VmetricError::Eval(e.to_string()))?;
        let gy = apply(g, y.clone()).map_err(|e| VmetricError::Eval(e.to_string()))?;
        let dc = value_distance(cod, &fx, &gy)?;
        let dd = value_distance(dom, x, y)?;
        best = best.max(fn_probe_term(p, dc, dd));
    }
    Ok(best)
}
