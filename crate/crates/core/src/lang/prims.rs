//! The primitive table: argument decoding and closed signatures.

use thiserror::Error;

use super::ast::{PrimArg, Ty};
use crate::metrics::{PIdx, Sens};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PrimError {
    #[error("unknown primitive `{0}`")]
    Unknown(String),
    #[error("primitive `{name}`: {msg}")]
    BadArgs { name: String, msg: String },
    #[error("primitive `{name}` needs p <= q, got p = {p}, q = {q}")]
    PAboveQ { name: String, p: PIdx, q: PIdx },
}

/// A primitive with its arguments decoded.
#[derive(Clone, Debug, PartialEq)]
pub enum PrimOp {
    Add,
    Scale(f64),
    Rot(f64),
    Dist(Ty),
    Clip,
    Cmp,
    Sum(Ty),
    Relax { p: PIdx, q: PIdx, left: Ty, right: Ty },
    Tighten { p: PIdx, q: PIdx, left: Ty, right: Ty },
    Dlap(f64),
    LpMech2 { eps: f64, p: PIdx, s: f64 },
}

pub const PRIM_NAMES: &[&str] =
    &["add", "scale", "rot", "dist", "clip", "cmp", "sum", "relax", "tighten", "dlap", "lpmech2"];

struct Args<'a> {
    name: &'a str,
    args: &'a [PrimArg],
}

impl Args<'_> {
    fn bad(&self, msg: impl Into<String>) -> PrimError {
        PrimError::BadArgs { name: self.name.to_string(), msg: msg.into() }
    }

    fn arity(&self, lo: usize, hi: usize) -> Result<(), PrimError> {
        let n = self.args.len();
        if n < lo || n > hi {
            let want = if lo == hi { format!("{lo}") } else { format!("{lo} to {hi}") };
            return Err(self.bad(format!("expected {want} arguments, got {n}")));
        }
        Ok(())
    }

    fn num(&self, i: usize) -> Result<f64, PrimError> {
        match &self.args[i] {
            PrimArg::Num(x) => Ok(*x),
            PrimArg::Ty(_) => Err(self.bad(format!("argument {} must be a number", i + 1))),
        }
    }

    fn finite(&self, i: usize) -> Result<f64, PrimError> {
        let x = self.num(i)?;
        if !x.is_finite() {
            return Err(self.bad(format!("argument {} must be finite", i + 1)));
        }
        Ok(x)
    }

    fn pidx(&self, i: usize) -> Result<PIdx, PrimError> {
        let x = self.num(i)?;
        PIdx::new(x).ok_or_else(|| self.bad(format!("argument {} must be a p-index >= 1", i + 1)))
    }

    fn positive(&self, i: usize) -> Result<f64, PrimError> {
        let x = self.finite(i)?;
        if x <= 0.0 {
            return Err(self.bad(format!("argument {} must be positive", i + 1)));
        }
        Ok(x)
    }

    fn ty(&self, i: usize) -> Result<Ty, PrimError> {
        match &self.args[i] {
            PrimArg::Ty(t) => Ok(t.clone()),
            PrimArg::Num(_) => Err(self.bad(format!("argument {} must be a type", i + 1))),
        }
    }

    fn opt_ty(&self, i: usize) -> Result<Ty, PrimError> {
        if i < self.args.len() {
            let t = self.ty(i)?;
            if t.contains_arrow() {
                return Err(self.bad("element type must not contain functions"));
            }
            Ok(t)
        } else {
            Ok(Ty::Real)
        }
    }
}

impl PrimOp {
    pub fn resolve(name: &str, args: &[PrimArg]) -> Result<PrimOp, PrimError> {
        let a = Args { name, args };
        let op = match name {
            "add" => {
                a.arity(0, 0)?;
                PrimOp::Add
            }
            "clip" => {
                a.arity(0, 0)?;
                PrimOp::Clip
            }
            "cmp" => {
                a.arity(0, 0)?;
                PrimOp::Cmp
            }
            "scale" => {
                a.arity(1, 1)?;
                PrimOp::Scale(a.finite(0)?)
            }
            "rot" => {
                a.arity(1, 1)?;
                PrimOp::Rot(a.finite(0)?)
            }
            "dist" => {
                a.arity(0, 1)?;
                PrimOp::Dist(a.opt_ty(0)?)
            }
            "sum" => {
                a.arity(0, 1)?;
                PrimOp::Sum(a.opt_ty(0)?)
            }
            "relax" | "tighten" => {
                a.arity(4, 4)?;
                let (p, q) = (a.pidx(0)?, a.pidx(1)?);
                if p > q {
                    return Err(PrimError::PAboveQ { name: name.to_string(), p, q });
                }
                let (left, right) = (a.ty(2)?, a.ty(3)?);
                if name == "relax" {
                    PrimOp::Relax { p, q, left, right }
                } else {
                    PrimOp::Tighten { p, q, left, right }
                }
            }
            "dlap" => {
                a.arity(1, 1)?;
                PrimOp::Dlap(a.positive(0)?)
            }
            "lpmech2" => {
                a.arity(2, 3)?;
                let eps = a.positive(0)?;
                let p = a.pidx(1)?;
                let s = if args.len() == 3 { a.positive(2)? } else { 1.0 };
                PrimOp::LpMech2 { eps, p, s }
            }
            other => return Err(PrimError::Unknown(other.to_string())),
        };
        Ok(op)
    }

    pub fn sig(&self) -> Ty {
        let r = || Ty::Real;
        let one = PIdx::ONE;
        let sens = |x: f64| Sens::new(x).unwrap_or(Sens::INF);
        match self {
            PrimOp::Add => Ty::arrow(one, Ty::tensor(one, r(), r()), r()),
            PrimOp::Scale(k) => Ty::arrow(one, Ty::bang(sens(k.abs()), r()), r()),
            PrimOp::Rot(_) => {
                let v = Ty::tensor(PIdx::TWO, r(), r());
                Ty::arrow(one, v.clone(), v)
            }
            PrimOp::Dist(t) => Ty::arrow(one, Ty::tensor(one, t.clone(), t.clone()), r()),
            PrimOp::Clip => Ty::arrow(one, r(), r()),
            PrimOp::Cmp => Ty::arrow(
                one,
                Ty::tensor(one, Ty::bang(Sens::INF, r()), Ty::bang(Sens::INF, r())),
                Ty::sum(Ty::Unit, Ty::Unit),
            ),
            PrimOp::Sum(t) => Ty::arrow(
                one,
                Ty::bang(Sens::INF, Ty::arrow(one, Ty::bang(Sens::INF, t.clone()), r())),
                Ty::arrow(one, Ty::set_of(t.clone()), r()),
            ),
            PrimOp::Relax { p, q, left, right } => {
                Ty::arrow(one, Ty::tensor(*p, left.clone(), right.clone()), Ty::tensor(*q, left.clone(), right.clone()))
            }
            PrimOp::Tighten { p, q, left, right } => Ty::arrow(
                one,
                Ty::bang(tighten_grade(*p, *q), Ty::tensor(*q, left.clone(), right.clone())),
                Ty::tensor(*p, left.clone(), right.clone()),
            ),
            PrimOp::Dlap(eps) => Ty::arrow(one, Ty::bang(sens(*eps), r()), Ty::prob_p(r())),
            PrimOp::LpMech2 { eps, p, s } => {
                let db = Ty::set_of(r());
                let out = Ty::tensor(*p, r(), r());
                Ty::arrow(
                    one,
                    Ty::bang(Sens::INF, Ty::arrow(one, Ty::bang(sens(*s), db.clone()), out.clone())),
                    Ty::arrow(one, Ty::bang(sens(*eps), db), Ty::prob_p(out)),
                )
            }
        }
    }
}

/// `2^(1/p - 1/q)`, the factor by which the `q`-distance must be scaled to
/// dominate the `p`-distance.
pub fn tighten_grade(p: PIdx, q: PIdx) -> Sens {
    Sens::new(2f64.powf(p.recip() - q.recip())).unwrap_or(Sens::INF)
}

pub fn prim_sig(name: &str, args: &[PrimArg]) -> Result<Ty, PrimError> {
    PrimOp::resolve(name, args).map(|op| op.sig())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_ty;

    fn n(x: f64) -> PrimArg {
        PrimArg::Num(x)
    }

    #[test]
    fn add_signature() {
        assert_eq!(prim_sig("add", &[]).unwrap(), parse_ty("real (*) real -o real").unwrap());
    }

    #[test]
    fn tighten_grade_is_sqrt2() {
        let t = prim_sig("tighten", &[n(1.0), n(2.0), PrimArg::Ty(Ty::Real), PrimArg::Ty(Ty::Real)]).unwrap();
        let Ty::Arrow(_, dom, _) = t else { panic!() };
        let Ty::Bang(s, _) = *dom else { panic!() };
        assert!((s.value() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn relax_requires_p_le_q() {
        let e = prim_sig("relax", &[n(2.0), n(1.0), PrimArg::Ty(Ty::Real), PrimArg::Ty(Ty::Real)]).unwrap_err();
        assert!(matches!(e, PrimError::PAboveQ { .. }));
    }

    #[test]
    fn unknown_and_bad_arity() {
        assert!(matches!(prim_sig("nope", &[]), Err(PrimError::Unknown(_))));
        assert!(matches!(prim_sig("scale", &[]), Err(PrimError::BadArgs { .. })));
        assert!(matches!(prim_sig("dlap", &[n(0.0)]), Err(PrimError::BadArgs { .. })));
        assert!(matches!(prim_sig("scale", &[PrimArg::Ty(Ty::Real)]), Err(PrimError::BadArgs { .. })));
    }

    #[test]
    fn table_entries() {
        let cases: &[(&str, Vec<PrimArg>, &str)] = &[
            ("scale", vec![n(-3.0)], "![3] real -o real"),
            ("rot", vec![n(0.5)], "real (*@2) real -o real (*@2) real"),
            ("dist", vec![], "real (*) real -o real"),
            ("clip", vec![], "real -o real"),
            ("cmp", vec![], "![inf] real (*) ![inf] real -o unit + unit"),
            ("sum", vec![], "![inf] (![inf] real -o real) -o set real -o real"),
            (
                "relax",
                vec![n(1.0), n(2.0), PrimArg::Ty(Ty::Real), PrimArg::Ty(Ty::Unit)],
                "real (*) unit -o real (*@2) unit",
            ),
            ("dlap", vec![n(0.5)], "![0.5] real -o circP real"),
            (
                "lpmech2",
                vec![n(1.0), n(2.0)],
                "![inf] (![1] set real -o real (*@2) real) -o ![1] set real -o circP (real (*@2) real)",
            ),
        ];
        for (name, args, expected) in cases {
            assert_eq!(prim_sig(name, args).unwrap(), parse_ty(expected).unwrap(), "{name}");
        }
    }

    #[test]
    fn every_signature_is_arrow_typed() {
        for name in PRIM_NAMES {
            let args: Vec<PrimArg> = match *name {
                "scale" | "rot" | "dlap" => vec![n(1.0)],
                "relax" | "tighten" => vec![n(1.0), n(2.0), PrimArg::Ty(Ty::Real), PrimArg::Ty(Ty::Real)],
                "lpmech2" => vec![n(1.0), n(1.0)],
                _ => vec![],
            };
            assert!(matches!(prim_sig(name, &args).unwrap(), Ty::Arrow(..)), "{name}");
        }
    }
}
