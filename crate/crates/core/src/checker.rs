//! Syntax-directed sensitivity checking.
//!
//! Every judgment's environment is a left comb over the whole lexical scope,
//! with zero-graded leaves for variables the term does not use. Sibling
//! premises therefore always have equal shapes and can be contracted
//! directly.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::bunch::{self, Bunch, BunchError};
use crate::lang::ast::{Def, Loc, Monad, Program, Side, Term, TermKind, Ty};
use crate::lang::prims::{PrimError, PrimOp};
use crate::metrics::{fmt_grade, sens_div_ceil, PIdx, Sens};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    UnboundVar,
    TypeMismatch,
    PMismatch,
    GradeViolation,
    ShapeError,
    UnknownPrim,
    AnnotationNeeded,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::UnboundVar => "unbound-var",
            ErrorKind::TypeMismatch => "type-mismatch",
            ErrorKind::PMismatch => "p-mismatch",
            ErrorKind::GradeViolation => "grade-violation",
            ErrorKind::ShapeError => "shape-error",
            ErrorKind::UnknownPrim => "unknown-prim",
            ErrorKind::AnnotationNeeded => "annotation-needed",
        })
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("{loc}: {kind}: {message}")]
pub struct TypeError {
    pub kind: ErrorKind,
    pub loc: Loc,
    pub message: String,
    pub expected: Option<String>,
    pub actual: Option<String>,
}

impl TypeError {
    fn new(kind: ErrorKind, loc: Loc, message: impl Into<String>) -> TypeError {
        TypeError { kind, loc, message: message.into(), expected: None, actual: None }
    }

    fn with(mut self, expected: impl fmt::Display, actual: impl fmt::Display) -> TypeError {
        self.expected = Some(expected.to_string());
        self.actual = Some(actual.to_string());
        self
    }

    pub fn to_json(&self) -> Json {
        json!({
            "kind": self.kind.to_string(),
            "line": self.loc.line,
            "col": self.loc.col,
            "message": self.message,
            "expected": self.expected,
            "actual": self.actual,
        })
    }
}

/// A variable in scope, bound at the node index `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScopeVar {
    pub name: String,
    pub ty: Ty,
    pub p: PIdx,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Judgment {
    pub env: Bunch,
    pub ty: Ty,
}

#[derive(Clone, Debug)]
struct Var {
    user: String,
    internal: String,
    ty: Ty,
}

#[derive(Clone, Debug)]
enum Item {
    One { p: PIdx, v: Var },
    Group { p: PIdx, inner: PIdx, x: Var, y: Var },
}

impl Item {
    fn bunch(&self) -> Bunch {
        match self {
            Item::One { v, .. } => Bunch::leaf(&v.internal, v.ty.clone(), Sens::ZERO),
            Item::Group { inner, x, y, .. } => Bunch::node(
                *inner,
                Bunch::leaf(&x.internal, x.ty.clone(), Sens::ZERO),
                Bunch::leaf(&y.internal, y.ty.clone(), Sens::ZERO),
            ),
        }
    }

    fn p(&self) -> PIdx {
        match self {
            Item::One { p, .. } | Item::Group { p, .. } => *p,
        }
    }
}

struct Out {
    env: Bunch,
    ty: Ty,
    used: HashSet<String>,
}

type CResult<T> = Result<T, TypeError>;

struct Ctx<'g> {
    scope: Vec<Item>,
    globals: &'g HashMap<String, Ty>,
    fresh: usize,
    /// When false, contraction skips the c(p, q) factors.
    correct: bool,
}

fn mismatch(loc: Loc, what: &str, expected: &Ty, actual: &Ty) -> TypeError {
    let kind = if expected.eq_modulo_p(actual) { ErrorKind::PMismatch } else { ErrorKind::TypeMismatch };
    TypeError::new(kind, loc, format!("{what}: expected `{expected}`, found `{actual}`")).with(expected, actual)
}

fn shape(loc: Loc, e: BunchError) -> TypeError {
    TypeError::new(ErrorKind::ShapeError, loc, e.to_string())
}

impl<'g> Ctx<'g> {
    fn new(globals: &'g HashMap<String, Ty>) -> Ctx<'g> {
        Ctx { scope: Vec::new(), globals, fresh: 0, correct: true }
    }

    fn var(&mut self, user: &str, ty: Ty) -> Var {
        self.fresh += 1;
        Var { user: user.to_string(), internal: format!("{user}%{}", self.fresh), ty }
    }

    fn zero_env(&self) -> Bunch {
        self.scope.iter().fold(Bunch::Empty, |acc, it| Bunch::node(it.p(), acc, it.bunch()))
    }

    fn lookup(&self, name: &str) -> Option<&Var> {
        self.scope.iter().rev().find_map(|it| match it {
            Item::One { v, .. } if v.user == name => Some(v),
            Item::Group { x, y, .. } => {
                if y.user == name {
                    Some(y)
                } else if x.user == name {
                    Some(x)
                } else {
                    None
                }
            }
            _ => None,
        })
    }

    fn contract(&self, p: PIdx, g: &Bunch, d: &Bunch, loc: Loc) -> CResult<Bunch> {
        let r = if self.correct { bunch::contract(p, g, d) } else { bunch::contract_uncorrected(p, g, d) };
        r.map_err(|e| shape(loc, e))
    }

    /// Infers `body` with `item` pushed, returning the popped top subtree.
    fn under(&mut self, item: Item, body: &Term) -> CResult<(Out, Bunch)> {
        self.scope.push(item);
        let r = self.infer(body);
        self.scope.pop();
        let out = r?;
        let (rest, top) = bunch::comb_pop(&out.env).map_err(|e| shape(body.loc, e))?;
        Ok((Out { env: rest, ty: out.ty, used: out.used }, top))
    }

    fn infer(&mut self, t: &Term) -> CResult<Out> {
        let loc = t.loc;
        match &t.kind {
            TermKind::Var(name) => {
                if let Some(v) = self.lookup(name) {
                    let internal = v.internal.clone();
                    let ty = v.ty.clone();
                    let env = self.zero_env().set_sens(&internal, Sens::ONE);
                    return Ok(Out { env, ty, used: HashSet::from([internal]) });
                }
                if let Some(ty) = self.globals.get(name) {
                    return Ok(Out { env: self.zero_env(), ty: ty.clone(), used: HashSet::new() });
                }
                Err(TypeError::new(ErrorKind::UnboundVar, loc, format!("unbound variable `{name}`")))
            }
            TermKind::RealLit(_) => Ok(Out { env: self.zero_env(), ty: Ty::Real, used: HashSet::new() }),
            TermKind::UnitLit => Ok(Out { env: self.zero_env(), ty: Ty::Unit, used: HashSet::new() }),
            TermKind::Prim { name, args } => {
                let op = PrimOp::resolve(name, args).map_err(|e| {
                    let kind = match e {
                        PrimError::Unknown(_) => ErrorKind::UnknownPrim,
                        PrimError::PAboveQ { .. } => ErrorKind::PMismatch,
                        PrimError::BadArgs { .. } => ErrorKind::TypeMismatch,
                    };
                    TypeError::new(kind, loc, e.to_string())
                })?;
                Ok(Out { env: self.zero_env(), ty: op.sig(), used: HashSet::new() })
            }
            TermKind::Lam { p, var, ty, body } => {
                let v = self.var(var, ty.clone());
                let item = Item::One { p: *p, v: v.clone() };
                let (out, top) = self.under(item.clone(), body)?;
                let s = top.leaf_sens(&v.internal).unwrap_or(Sens::ZERO);
                if !s.approx_le(Sens::ONE) {
                    return Err(self.lambda_violation(loc, var, s, item, body));
                }
                let mut used = out.used;
                used.remove(&v.internal);
                Ok(Out { env: out.env, ty: Ty::arrow(*p, ty.clone(), out.ty), used })
            }
            TermKind::App(f, a) => {
                let fo = self.infer(f)?;
                let ao = self.infer(a)?;
                let Ty::Arrow(p, dom, cod) = &fo.ty else {
                    return Err(TypeError::new(
                        ErrorKind::TypeMismatch,
                        f.loc,
                        format!("applying a term of non-function type `{}`", fo.ty),
                    )
                    .with("a function type", &fo.ty));
                };
                if !dom.approx_eq(&ao.ty) {
                    return Err(mismatch(a.loc, "argument", dom, &ao.ty));
                }
                let env = self.contract(*p, &fo.env, &ao.env, loc)?;
                Ok(Out { env, ty: (**cod).clone(), used: &fo.used | &ao.used })
            }
            TermKind::Pair(p, a, b) => {
                let ao = self.infer(a)?;
                let bo = self.infer(b)?;
                let env = self.contract(*p, &ao.env, &bo.env, loc)?;
                Ok(Out { env, ty: Ty::tensor(*p, ao.ty, bo.ty), used: &ao.used | &bo.used })
            }
            TermKind::LetPair { q, x, y, rhs, body } => {
                let ro = self.infer(rhs)?;
                let Ty::Tensor(p, tx, ty) = &ro.ty else {
                    return Err(TypeError::new(
                        ErrorKind::TypeMismatch,
                        rhs.loc,
                        format!("pair pattern needs a tensor, found `{}`", ro.ty),
                    )
                    .with("a tensor type", &ro.ty));
                };
                let q = q.unwrap_or(*p);
                let vx = self.var(x, (**tx).clone());
                let vy = self.var(y, (**ty).clone());
                let item = Item::Group { p: q, inner: *p, x: vx.clone(), y: vy.clone() };
                let (bo, top) = self.under(item, body)?;
                let s = top
                    .leaf_sens(&vx.internal)
                    .unwrap_or(Sens::ZERO)
                    .max(top.leaf_sens(&vy.internal).unwrap_or(Sens::ZERO));
                let scaled = bunch::scale_vars(s, &ro.env, &ro.used);
                let env = self.contract(q, &bo.env, &scaled, loc)?;
                let mut used = bo.used;
                used.remove(&vx.internal);
                used.remove(&vy.internal);
                Ok(Out { env, ty: bo.ty, used: &used | &ro.used })
            }
            TermKind::Inj { side, other, arg } => {
                let ao = self.infer(arg)?;
                let ty = match side {
                    Side::Left => Ty::sum(ao.ty, other.clone()),
                    Side::Right => Ty::sum(other.clone(), ao.ty),
                };
                Ok(Out { env: ao.env, ty, used: ao.used })
            }
            TermKind::Case { p, scrut, x, left, y, right } => {
                let so = self.infer(scrut)?;
                let Ty::Sum(tl, tr) = &so.ty else {
                    return Err(TypeError::new(
                        ErrorKind::TypeMismatch,
                        scrut.loc,
                        format!("case needs a sum, found `{}`", so.ty),
                    )
                    .with("a sum type", &so.ty));
                };
                let vx = self.var(x, (**tl).clone());
                let (lo, ltop) = self.under(Item::One { p: *p, v: vx.clone() }, left)?;
                let vy = self.var(y, (**tr).clone());
                let (ro, rtop) = self.under(Item::One { p: *p, v: vy.clone() }, right)?;
                if !lo.ty.approx_eq(&ro.ty) {
                    return Err(mismatch(right.loc, "case branches disagree", &lo.ty, &ro.ty));
                }
                let s = ltop
                    .leaf_sens(&vx.internal)
                    .unwrap_or(Sens::ZERO)
                    .max(rtop.leaf_sens(&vy.internal).unwrap_or(Sens::ZERO));
                let joined = bunch::leafwise_max(&lo.env, &ro.env).map_err(|e| shape(loc, e))?;
                let scaled = bunch::scale_vars(s, &so.env, &so.used);
                let env = self.contract(*p, &joined, &scaled, loc)?;
                let mut used = &lo.used | &ro.used;
                used.remove(&vx.internal);
                used.remove(&vy.internal);
                Ok(Out { env, ty: lo.ty, used: &used | &so.used })
            }
            TermKind::Bang(s, arg) => {
                let ao = self.infer(arg)?;
                let env = bunch::scale_vars(*s, &ao.env, &ao.used);
                Ok(Out { env, ty: Ty::bang(*s, ao.ty), used: ao.used })
            }
            TermKind::LetBang { p, x, rhs, body } => {
                let ro = self.infer(rhs)?;
                let Ty::Bang(r, inner) = &ro.ty else {
                    return Err(TypeError::new(
                        ErrorKind::TypeMismatch,
                        rhs.loc,
                        format!("`let !` needs a `!` type, found `{}`", ro.ty),
                    )
                    .with("a ! type", &ro.ty));
                };
                let v = self.var(x, (**inner).clone());
                let (bo, top) = self.under(Item::One { p: *p, v: v.clone() }, body)?;
                let t = top.leaf_sens(&v.internal).unwrap_or(Sens::ZERO);
                let s = sens_div_ceil(t, *r);
                let scaled = bunch::scale_vars(s, &ro.env, &ro.used);
                let env = self.contract(*p, &bo.env, &scaled, loc)?;
                let mut used = bo.used;
                used.remove(&v.internal);
                Ok(Out { env, ty: bo.ty, used: &used | &ro.used })
            }
            TermKind::MLet { p, x, rhs, body } => {
                let ro = self.infer(rhs)?;
                let (monad, inner) = match &ro.ty {
                    Ty::ProbP(t) => (Monad::P, t),
                    Ty::ProbH(t) => (Monad::H, t),
                    other => {
                        return Err(TypeError::new(
                            ErrorKind::TypeMismatch,
                            rhs.loc,
                            format!("`mlet` needs a distribution, found `{other}`"),
                        )
                        .with("circP or circH type", other))
                    }
                };
                let v = self.var(x, (**inner).clone());
                let (bo, _) = self.under(Item::One { p: *p, v: v.clone() }, body)?;
                let ok = matches!((monad, &bo.ty), (Monad::P, Ty::ProbP(_)) | (Monad::H, Ty::ProbH(_)));
                if !ok {
                    let want = if monad == Monad::P { "circP" } else { "circH" };
                    return Err(TypeError::new(
                        ErrorKind::TypeMismatch,
                        body.loc,
                        format!("`mlet` body must be a {want} distribution, found `{}`", bo.ty),
                    )
                    .with(want, &bo.ty));
                }
                let cp = if monad == Monad::P { PIdx::ONE } else { PIdx::TWO };
                let env = self.contract(cp, &ro.env, &bo.env, loc)?;
                let mut used = bo.used;
                used.remove(&v.internal);
                Ok(Out { env, ty: bo.ty, used: &used | &ro.used })
            }
            TermKind::Return(monad, arg) => {
                let ao = self.infer(arg)?;
                let env = bunch::scale_vars(Sens::INF, &ao.env, &ao.used);
                let ty = match monad {
                    Monad::P => Ty::prob_p(ao.ty),
                    Monad::H => Ty::prob_h(ao.ty),
                };
                Ok(Out { env, ty, used: ao.used })
            }
        }
    }

    /// A lambda whose variable is used more than once. When the excess is
    /// entirely due to contraction across differing indices the error is
    /// reported as an index mismatch.
    fn lambda_violation(&mut self, loc: Loc, var: &str, s: Sens, item: Item, body: &Term) -> TypeError {
        let saved = self.correct;
        self.correct = false;
        let retry = self.under(item.clone(), body);
        self.correct = saved;
        let internal = match &item {
            Item::One { v, .. } => v.internal.clone(),
            Item::Group { .. } => unreachable!("lambdas bind single variables"),
        };
        if let Ok((_, top)) = retry {
            if top.leaf_sens(&internal).is_some_and(|r| r.approx_le(Sens::ONE)) {
                return TypeError::new(
                    ErrorKind::PMismatch,
                    loc,
                    format!(
                        "`{var}` has sensitivity {} only because of contraction across different p-indices; \
                         the lambda's index does not match the indices of its uses",
                        fmt_grade(s)
                    ),
                )
                .with("1", fmt_grade(s));
            }
        }
        TypeError::new(
            ErrorKind::GradeViolation,
            loc,
            format!(
                "`{var}` is used with sensitivity {} but a lambda binds it at 1; \
                 bind it as `fun ({var} : ![{}] T)` instead",
                fmt_grade(s),
                fmt_grade(s)
            ),
        )
        .with("1", fmt_grade(s))
    }
}

/// Infers a judgment for `term` whose environment covers `scope`, in order.
pub fn infer(term: &Term, scope: &[ScopeVar]) -> Result<Judgment, TypeError> {
    infer_with_globals(term, scope, &HashMap::new())
}

pub fn infer_with_globals(
    term: &Term,
    scope: &[ScopeVar],
    globals: &HashMap<String, Ty>,
) -> Result<Judgment, TypeError> {
    let mut ctx = Ctx::new(globals);
    let mut renames = HashMap::new();
    for sv in scope {
        let v = ctx.var(&sv.name, sv.ty.clone());
        renames.insert(v.internal.clone(), sv.name.clone());
        ctx.scope.push(Item::One { p: sv.p, v });
    }
    let out = ctx.infer(term)?;
    Ok(Judgment { env: rename(&out.env, &renames), ty: out.ty })
}

fn rename(b: &Bunch, names: &HashMap<String, String>) -> Bunch {
    match b {
        Bunch::Empty => Bunch::Empty,
        Bunch::Leaf { var, ty, sens } => {
            Bunch::Leaf { var: names.get(var).cloned().unwrap_or_else(|| var.clone()), ty: ty.clone(), sens: *sens }
        }
        Bunch::Node(p, l, r) => Bunch::node(*p, rename(l, names), rename(r, names)),
    }
}

#[derive(Clone, Debug)]
pub struct DefReport {
    pub name: String,
    /// Inferred result type, when inference succeeded.
    pub ty: Option<Ty>,
    /// Inferred environment over the parameters.
    pub env: Option<Bunch>,
    /// The environment with every claimed parameter grade substituted.
    pub claimed_env: Option<Bunch>,
    pub errors: Vec<TypeError>,
}

impl DefReport {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }

    /// A judgment the harness can test: present when inference succeeded and
    /// every error is a grade claim that the checker could not confirm.
    pub fn testable(&self) -> Option<Judgment> {
        let only_grades = self.errors.iter().all(|e| e.kind == ErrorKind::GradeViolation);
        match (&self.claimed_env, &self.ty) {
            (Some(env), Some(ty)) if only_grades => Some(Judgment { env: env.clone(), ty: ty.clone() }),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Json {
        json!({
            "name": self.name,
            "status": if self.ok() { "pass" } else { "fail" },
            "type": self.ty.as_ref().map(|t| t.to_string()),
            "env": self.env.as_ref().map(Bunch::to_json),
            "errors": self.errors.iter().map(TypeError::to_json).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub defs: Vec<DefReport>,
    /// The entry term's type, or its error.
    pub entry: Option<Result<Ty, TypeError>>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.defs.iter().all(DefReport::ok) && !matches!(self.entry, Some(Err(_)))
    }

    pub fn get(&self, name: &str) -> Option<&DefReport> {
        self.defs.iter().find(|d| d.name == name)
    }

    pub fn to_json(&self) -> Json {
        let mut j = json!({
            "status": if self.ok() { "pass" } else { "fail" },
            "definitions": self.defs.iter().map(DefReport::to_json).collect::<Vec<_>>(),
        });
        if let Some(entry) = &self.entry {
            j["entry"] = match entry {
                Ok(t) => json!({ "status": "pass", "type": t.to_string() }),
                Err(e) => json!({ "status": "fail", "errors": [e.to_json()] }),
            };
        }
        j
    }
}

fn check_def(def: &Def, globals: &HashMap<String, Ty>) -> DefReport {
    let scope: Vec<ScopeVar> =
        def.params.iter().map(|p| ScopeVar { name: p.name.clone(), ty: p.ty.clone(), p: p.p }).collect();
    let mut report = DefReport { name: def.name.clone(), ty: None, env: None, claimed_env: None, errors: Vec::new() };
    let j = match infer_with_globals(&def.body, &scope, globals) {
        Ok(j) => j,
        Err(e) => {
            report.errors.push(e);
            return report;
        }
    };
    if let Some(declared) = &def.ty {
        if !declared.approx_eq(&j.ty) {
            report.errors.push(mismatch(def.loc, "declared type", declared, &j.ty));
        }
    }
    let mut claimed = j.env.clone();
    for prm in &def.params {
        let Some(claim) = prm.grade else { continue };
        let inferred = j.env.leaf_sens(&prm.name).unwrap_or(Sens::ZERO);
        if !inferred.approx_le(claim) {
            report.errors.push(
                TypeError::new(
                    ErrorKind::GradeViolation,
                    def.loc,
                    format!(
                        "parameter `{}` is claimed {}-sensitive but the body is {}-sensitive in it",
                        prm.name,
                        fmt_grade(claim),
                        fmt_grade(inferred)
                    ),
                )
                .with(fmt_grade(claim), fmt_grade(inferred)),
            );
        }
        claimed = claimed.set_sens(&prm.name, claim);
    }
    report.ty = Some(j.ty);
    report.env = Some(j.env);
    report.claimed_env = Some(claimed);
    report
}

/// Checks every definition in order. Closed definitions that check become
/// constants visible to later definitions and to the entry term.
pub fn check_program(prog: &Program) -> CheckReport {
    let mut globals: HashMap<String, Ty> = HashMap::new();
    let mut defs = Vec::new();
    for def in &prog.defs {
        let r = check_def(def, &globals);
        if r.ok() && def.params.is_empty() {
            if let Some(t) = &r.ty {
                globals.insert(def.name.clone(), t.clone());
            }
        }
        defs.push(r);
    }
    let entry = prog.entry.as_ref().map(|e| infer_with_globals(e, &[], &globals).map(|j| j.ty));
    CheckReport { defs, entry }
}
