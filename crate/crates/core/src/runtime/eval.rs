use std::sync::Arc;

use thiserror::Error;

use super::dist::{dist_bind, dist_return};
use super::prims::prim_value;
use super::value::{Closure, Value};
use crate::lang::ast::{Def, Loc, Program, Side, Term, TermKind};
use crate::lang::prims::PrimOp;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("{loc}: unbound variable `{name}`")]
    Unbound { loc: Loc, name: String },
    #[error("{loc}: expected {expected}, found {found}")]
    Misuse { loc: Loc, expected: &'static str, found: String },
    #[error("{0}")]
    Prim(String),
    #[error("`{def}` takes {want} arguments, got {got}")]
    Arity { def: String, want: usize, got: usize },
    #[error("no entry term and no definitions to run")]
    NothingToRun,
}

fn misuse(loc: Loc, expected: &'static str, found: &Value) -> EvalError {
    EvalError::Misuse { loc, expected, found: found.to_string() }
}

struct EnvNode {
    name: String,
    val: Value,
    next: Env,
}

/// A persistent environment; extending it never disturbs captured copies.
#[derive(Clone, Default)]
pub struct Env(Option<Arc<EnvNode>>);

impl Env {
    pub fn new() -> Env {
        Env(None)
    }

    pub fn bind(&self, name: &str, val: Value) -> Env {
        Env(Some(Arc::new(EnvNode { name: name.to_string(), val, next: self.clone() })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        let mut cur = &self.0;
        while let Some(node) = cur {
            if node.name == name {
                return Some(&node.val);
            }
            cur = &node.next.0;
        }
        None
    }
}

pub fn apply(f: &Value, arg: Value) -> Result<Value, EvalError> {
    match f {
        Value::Clos(c) => eval(&c.body, &c.env.bind(&c.var, arg)),
        Value::Native(n) => (n.f)(arg),
        other => Err(EvalError::Prim(format!("cannot apply non-function {other}"))),
    }
}

pub fn eval(t: &Term, env: &Env) -> Result<Value, EvalError> {
    let loc = t.loc;
    match &t.kind {
        TermKind::Var(name) => env.lookup(name).cloned().ok_or_else(|| EvalError::Unbound { loc, name: name.clone() }),
        TermKind::RealLit(x) => Ok(Value::Real(*x)),
        TermKind::UnitLit => Ok(Value::Unit),
        TermKind::Lam { var, body, .. } => {
            Ok(Value::Clos(Arc::new(Closure { env: env.clone(), var: var.clone(), body: body.clone() })))
        }
        TermKind::App(f, a) => {
            let fv = eval(f, env)?;
            let av = eval(a, env)?;
            if !fv.is_function() {
                return Err(misuse(loc, "a function", &fv));
            }
            apply(&fv, av)
        }
        TermKind::Pair(_, a, b) => Ok(Value::pair(eval(a, env)?, eval(b, env)?)),
        TermKind::LetPair { x, y, rhs, body, .. } => match eval(rhs, env)? {
            Value::Pair(a, b) => eval(body, &env.bind(x, (*a).clone()).bind(y, (*b).clone())),
            other => Err(misuse(loc, "a pair", &other)),
        },
        TermKind::Inj { side, arg, .. } => Ok(Value::inj(*side, eval(arg, env)?)),
        TermKind::Case { scrut, x, left, y, right, .. } => match eval(scrut, env)? {
            Value::Inj(Side::Left, v) => eval(left, &env.bind(x, (*v).clone())),
            Value::Inj(Side::Right, v) => eval(right, &env.bind(y, (*v).clone())),
            other => Err(misuse(loc, "an injection", &other)),
        },
        TermKind::Bang(_, arg) => Ok(Value::bang(eval(arg, env)?)),
        TermKind::LetBang { x, rhs, body, .. } => match eval(rhs, env)? {
            Value::Bang(v) => eval(body, &env.bind(x, (*v).clone())),
            other => Err(misuse(loc, "a boxed value", &other)),
        },
        TermKind::MLet { x, rhs, body, .. } => match eval(rhs, env)? {
            Value::Dist(mu) => {
                let out = dist_bind(&mu, |v| match eval(body, &env.bind(x, v.clone()))? {
                    Value::Dist(d) => Ok((*d).clone()),
                    other => Err(misuse(body.loc, "a distribution", &other)),
                })?;
                Ok(Value::dist(out))
            }
            other => Err(misuse(loc, "a distribution", &other)),
        },
        TermKind::Return(_, arg) => Ok(Value::dist(dist_return(eval(arg, env)?))),
        TermKind::Prim { name, args } => {
            let op = PrimOp::resolve(name, args).map_err(|e| EvalError::Prim(e.to_string()))?;
            Ok(prim_value(&op))
        }
    }
}

/// Evaluates the closed definitions of `prog` in order and returns the
/// environment binding them.
pub fn eval_globals(prog: &Program) -> Result<Env, EvalError> {
    let mut env = Env::new();
    for def in &prog.defs {
        if def.params.is_empty() {
            let v = eval(&def.body, &env)?;
            env = env.bind(&def.name, v);
        }
    }
    Ok(env)
}

/// Runs `def` with its parameters bound positionally to `args`.
pub fn eval_def(def: &Def, globals: &Env, args: &[Value]) -> Result<Value, EvalError> {
    if args.len() != def.params.len() {
        return Err(EvalError::Arity { def: def.name.clone(), want: def.params.len(), got: args.len() });
    }
    let mut env = globals.clone();
    for (prm, v) in def.params.iter().zip(args) {
        env = env.bind(&prm.name, v.clone());
    }
    eval(&def.body, &env)
}

/// Evaluates the entry term applied to `args`, or, without an entry term,
/// the last definition with `args` as its parameters.
pub fn run_program(prog: &Program, args: &[Value]) -> Result<Value, EvalError> {
    let globals = eval_globals(prog)?;
    match (&prog.entry, prog.defs.last()) {
        (Some(entry), _) => {
            let mut v = eval(entry, &globals)?;
            for a in args {
                if !v.is_function() {
                    return Err(misuse(entry.loc, "a function to apply to the next argument", &v));
                }
                v = apply(&v, a.clone())?;
            }
            Ok(v)
        }
        (None, Some(def)) => eval_def(def, &globals, args),
        (None, None) => Err(EvalError::NothingToRun),
    }
}
