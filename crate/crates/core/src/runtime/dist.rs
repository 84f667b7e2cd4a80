use std::cmp::Ordering;
use std::fmt;

use super::value::Value;
use crate::lang::printer::fmt_num;

/// A finite-support probability distribution, kept sorted by value with
/// distinct support points and positive masses summing to one.
#[derive(Clone, Debug)]
pub struct FinDist {
    support: Vec<(Value, f64)>,
}

impl FinDist {
    pub fn point(v: Value) -> FinDist {
        FinDist { support: vec![(v, 1.0)] }
    }

    /// Merges equal values, drops non-positive weights and normalizes.
    /// Returns `None` when no weight is positive and finite.
    pub fn from_weights(mut items: Vec<(Value, f64)>) -> Option<FinDist> {
        items.retain(|(_, w)| *w > 0.0 && w.is_finite());
        if items.is_empty() {
            return None;
        }
        items.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Value, f64)> = Vec::with_capacity(items.len());
        for (v, w) in items {
            match merged.last_mut() {
                Some((last, acc)) if *last == v => *acc += w,
                _ => merged.push((v, w)),
            }
        }
        let total: f64 = merged.iter().map(|(_, w)| w).sum();
        for (_, w) in &mut merged {
            *w /= total;
        }
        Some(FinDist { support: merged })
    }

    /// Normalizes weights given in log space.
    pub fn from_log_weights(items: Vec<(Value, f64)>) -> Option<FinDist> {
        let max = items.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return None;
        }
        FinDist::from_weights(items.into_iter().map(|(v, l)| (v, (l - max).exp())).collect())
    }

    pub fn uniform(vals: Vec<Value>) -> Option<FinDist> {
        FinDist::from_weights(vals.into_iter().map(|v| (v, 1.0)).collect())
    }

    pub fn support(&self) -> &[(Value, f64)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn prob(&self, v: &Value) -> f64 {
        match self.support.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(i) => self.support[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn bind<E>(&self, mut k: impl FnMut(&Value) -> Result<FinDist, E>) -> Result<FinDist, E> {
        let mut acc = Vec::new();
        for (v, p) in &self.support {
            let inner = k(v)?;
            acc.extend(inner.support.into_iter().map(|(w, q)| (w, p * q)));
        }
        // every mass is positive, so the result is never empty
        Ok(FinDist::from_weights(acc).expect("bind of a normalized distribution"))
    }

    pub fn map(&self, f: impl Fn(&Value) -> Value) -> FinDist {
        FinDist::from_weights(self.support.iter().map(|(v, p)| (f(v), *p)).collect())
            .expect("map of a normalized distribution")
    }

    pub(crate) fn cmp_structural(&self, other: &FinDist) -> Ordering {
        let lhs = self.support.iter();
        let rhs = other.support.iter();
        lhs.zip(rhs)
            .map(|((v, p), (w, q))| v.cmp(w).then_with(|| p.total_cmp(q)))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| self.len().cmp(&other.len()))
    }
}

impl fmt::Display for FinDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("dist{")?;
        for (i, (v, p)) in self.support.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}: {}", fmt_num(*p))?;
        }
        f.write_str("}")
    }
}

/// Point mass at `v`.
pub fn dist_return(v: Value) -> FinDist {
    FinDist::point(v)
}

pub fn dist_bind<E>(mu: &FinDist, k: impl FnMut(&Value) -> Result<FinDist, E>) -> Result<FinDist, E> {
    mu.bind(k)
}

#[cfg(test)]
mod tests {
    use std::convert::Infallible;

    use super::*;

    fn r(x: f64) -> Value {
        Value::Real(x)
    }

    #[test]
    fn enumerated_bind() {
        let mu = FinDist::uniform(vec![r(0.0), r(1.0)]).unwrap();
        let out = dist_bind(&mu, |x| {
            let x = x.as_real().unwrap();
            Ok::<_, Infallible>(FinDist::uniform(vec![r(x), r(x + 1.0)]).unwrap())
        })
        .unwrap();
        assert_eq!(out.len(), 3);
        assert!((out.prob(&r(0.0)) - 0.25).abs() < 1e-15);
        assert!((out.prob(&r(1.0)) - 0.5).abs() < 1e-15);
        assert!((out.prob(&r(2.0)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn return_is_a_point() {
        let d = dist_return(r(3.0));
        assert_eq!(d.len(), 1);
        assert_eq!(d.prob(&r(3.0)), 1.0);
        assert_eq!(Value::dist(d), Value::dist(dist_return(r(3.0))));
    }

    #[test]
    fn weights_merge_and_normalize() {
        let d = FinDist::from_weights(vec![(r(1.0), 1.0), (r(0.0), 2.0), (r(1.0), 1.0), (r(5.0), 0.0)]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.prob(&r(0.0)), 0.5);
        assert_eq!(d.to_string(), "dist{0: 0.5, 1: 0.5}");
        assert!(FinDist::from_weights(vec![(r(0.0), 0.0)]).is_none());
    }

    #[test]
    fn log_weights_survive_underflow() {
        let d = FinDist::from_log_weights(vec![(r(0.0), -2000.0), (r(1.0), -2000.0 - 2f64.ln())]).unwrap();
        assert!((d.prob(&r(0.0)) - 2.0 / 3.0).abs() < 1e-12);
    }
}
