use std::fmt;
use std::sync::Arc;

use crate::metrics::{PIdx, Sens};

/// Source position, 1-based. Ignored by structural equality so that
/// reparsed programs compare equal to their originals.
#[derive(Clone, Copy, Debug, Default)]
pub struct Loc {
    pub line: usize,
    pub col: usize,
}

impl Loc {
    pub fn new(line: usize, col: usize) -> Loc {
        Loc { line, col }
    }
}

impl PartialEq for Loc {
    fn eq(&self, _other: &Loc) -> bool {
        true
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ty {
    Unit,
    Real,
    Bang(Sens, Box<Ty>),
    Tensor(PIdx, Box<Ty>, Box<Ty>),
    Arrow(PIdx, Box<Ty>, Box<Ty>),
    Sum(Box<Ty>, Box<Ty>),
    ProbP(Box<Ty>),
    ProbH(Box<Ty>),
    SetOf(Box<Ty>),
}

impl Ty {
    pub fn bang(s: Sens, t: Ty) -> Ty {
        Ty::Bang(s, Box::new(t))
    }

    pub fn tensor(p: PIdx, a: Ty, b: Ty) -> Ty {
        Ty::Tensor(p, Box::new(a), Box::new(b))
    }

    pub fn arrow(p: PIdx, a: Ty, b: Ty) -> Ty {
        Ty::Arrow(p, Box::new(a), Box::new(b))
    }

    pub fn sum(a: Ty, b: Ty) -> Ty {
        Ty::Sum(Box::new(a), Box::new(b))
    }

    pub fn set_of(t: Ty) -> Ty {
        Ty::SetOf(Box::new(t))
    }

    pub fn prob_p(t: Ty) -> Ty {
        Ty::ProbP(Box::new(t))
    }

    pub fn prob_h(t: Ty) -> Ty {
        Ty::ProbH(Box::new(t))
    }

    /// Structural equality with grades and indices compared up to
    /// [`crate::metrics::GRADE_TOL`].
    pub fn approx_eq(&self, other: &Ty) -> bool {
        self.compare(other, true)
    }

    /// Equality ignoring every p-index; used to tell index mismatches apart
    /// from genuine shape mismatches.
    pub fn eq_modulo_p(&self, other: &Ty) -> bool {
        self.compare(other, false)
    }

    fn compare(&self, other: &Ty, check_p: bool) -> bool {
        let peq = |a: PIdx, b: PIdx| !check_p || a.approx_eq(b);
        match (self, other) {
            (Ty::Unit, Ty::Unit) | (Ty::Real, Ty::Real) => true,
            (Ty::Bang(s, a), Ty::Bang(r, b)) => s.approx_eq(*r) && a.compare(b, check_p),
            (Ty::Tensor(p, a1, a2), Ty::Tensor(q, b1, b2)) | (Ty::Arrow(p, a1, a2), Ty::Arrow(q, b1, b2)) => {
                std::mem::discriminant(self) == std::mem::discriminant(other)
                    && peq(*p, *q)
                    && a1.compare(b1, check_p)
                    && a2.compare(b2, check_p)
            }
            (Ty::Sum(a1, a2), Ty::Sum(b1, b2)) => a1.compare(b1, check_p) && a2.compare(b2, check_p),
            (Ty::ProbP(a), Ty::ProbP(b)) | (Ty::ProbH(a), Ty::ProbH(b)) | (Ty::SetOf(a), Ty::SetOf(b)) => {
                a.compare(b, check_p)
            }
            _ => false,
        }
    }

    pub fn contains_arrow(&self) -> bool {
        match self {
            Ty::Unit | Ty::Real => false,
            Ty::Arrow(..) => true,
            Ty::Bang(_, t) | Ty::ProbP(t) | Ty::ProbH(t) | Ty::SetOf(t) => t.contains_arrow(),
            Ty::Tensor(_, a, b) | Ty::Sum(a, b) => a.contains_arrow() || b.contains_arrow(),
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::lang::printer::print_ty(self))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monad {
    /// Max-divergence (privacy) monad.
    P,
    /// Hellinger monad.
    H,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PrimArg {
    Num(f64),
    Ty(Ty),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub kind: TermKind,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TermKind {
    Var(String),
    RealLit(f64),
    UnitLit,
    Lam {
        p: PIdx,
        var: String,
        ty: Ty,
        body: Arc<Term>,
    },
    App(Arc<Term>, Arc<Term>),
    Pair(PIdx, Arc<Term>, Arc<Term>),
    /// `q = None` splices the pattern at the right-hand side's own index.
    LetPair {
        q: Option<PIdx>,
        x: String,
        y: String,
        rhs: Arc<Term>,
        body: Arc<Term>,
    },
    Inj {
        side: Side,
        other: Ty,
        arg: Arc<Term>,
    },
    Case {
        p: PIdx,
        scrut: Arc<Term>,
        x: String,
        left: Arc<Term>,
        y: String,
        right: Arc<Term>,
    },
    Bang(Sens, Arc<Term>),
    LetBang {
        p: PIdx,
        x: String,
        rhs: Arc<Term>,
        body: Arc<Term>,
    },
    MLet {
        p: PIdx,
        x: String,
        rhs: Arc<Term>,
        body: Arc<Term>,
    },
    Return(Monad, Arc<Term>),
    Prim {
        name: String,
        args: Vec<PrimArg>,
    },
}

impl Term {
    pub fn new(kind: TermKind, loc: Loc) -> Term {
        Term { kind, loc }
    }

    /// A term at the default location, for programmatic construction.
    pub fn mk(kind: TermKind) -> Term {
        Term { kind, loc: Loc::default() }
    }

    pub fn var(name: &str) -> Term {
        Term::mk(TermKind::Var(name.to_string()))
    }

    /// Free variables, in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let under = |t: &Term, names: &[&String], bound: &mut Vec<String>, out: &mut Vec<String>| {
            for n in names {
                bound.push((*n).clone());
            }
            t.collect_free(bound, out);
            for _ in names {
                bound.pop();
            }
        };
        match &self.kind {
            TermKind::Var(v) => {
                if !bound.contains(v) && !out.contains(v) {
                    out.push(v.clone());
                }
            }
            TermKind::RealLit(_) | TermKind::UnitLit | TermKind::Prim { .. } => {}
            TermKind::Lam { var, body, .. } => under(body, &[var], bound, out),
            TermKind::App(a, b) | TermKind::Pair(_, a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            TermKind::LetPair { x, y, rhs, body, .. } => {
                rhs.collect_free(bound, out);
                under(body, &[x, y], bound, out);
            }
            TermKind::Inj { arg, .. } | TermKind::Bang(_, arg) | TermKind::Return(_, arg) => {
                arg.collect_free(bound, out)
            }
            TermKind::Case { scrut, x, left, y, right, .. } => {
                scrut.collect_free(bound, out);
                under(left, &[x], bound, out);
                under(right, &[y], bound, out);
            }
            TermKind::LetBang { x, rhs, body, .. } | TermKind::MLet { x, rhs, body, .. } => {
                rhs.collect_free(bound, out);
                under(body, &[x], bound, out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Ty,
    /// Claimed sensitivity in this parameter, checked against the inferred one.
    pub grade: Option<Sens>,
    /// Index of the node that attaches this parameter to the ones before it.
    pub p: PIdx,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Def {
    pub name: String,
    pub params: Vec<Param>,
    pub ty: Option<Ty>,
    pub body: Term,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Program {
    pub defs: Vec<Def>,
    pub entry: Option<Term>,
}

/// Suffix used by the parser for the hidden binder of `fun (x : ![s] T)`.
pub const BANG_BINDER_SUFFIX: &str = "#";
