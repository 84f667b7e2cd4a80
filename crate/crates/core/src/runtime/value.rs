use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use super::dist::FinDist;
use super::eval::{Env, EvalError};
use crate::lang::ast::{Side, Term};
use crate::lang::lexer::{lex, Tok};
use crate::lang::printer::fmt_num;
use crate::lang::ParseError;

pub type NativeFn = dyn Fn(Value) -> Result<Value, EvalError> + Send + Sync;

#[derive(Clone)]
pub struct Native {
    pub name: String,
    pub f: Arc<NativeFn>,
}

pub struct Closure {
    pub env: Env,
    pub var: String,
    pub body: Arc<Term>,
}

#[derive(Clone)]
pub enum Value {
    Real(f64),
    Unit,
    Pair(Arc<Value>, Arc<Value>),
    Inj(Side, Arc<Value>),
    Bang(Arc<Value>),
    Clos(Arc<Closure>),
    Native(Native),
    Dist(Arc<FinDist>),
    /// Sorted and free of duplicates.
    Set(Arc<Vec<Value>>),
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Arc::new(a), Arc::new(b))
    }

    pub fn inj(side: Side, v: Value) -> Value {
        Value::Inj(side, Arc::new(v))
    }

    pub fn bang(v: Value) -> Value {
        Value::Bang(Arc::new(v))
    }

    pub fn set(mut items: Vec<Value>) -> Value {
        items.sort();
        items.dedup();
        Value::Set(Arc::new(items))
    }

    pub fn native(name: &str, f: impl Fn(Value) -> Result<Value, EvalError> + Send + Sync + 'static) -> Value {
        Value::Native(Native { name: name.to_string(), f: Arc::new(f) })
    }

    pub fn dist(d: FinDist) -> Value {
        Value::Dist(Arc::new(d))
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(*x),
            _ => None,
        }
    }

    pub fn is_function(&self) -> bool {
        matches!(self, Value::Clos(_) | Value::Native(_))
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Real(_) => 0,
            Value::Unit => 1,
            Value::Pair(..) => 2,
            Value::Inj(..) => 3,
            Value::Bang(_) => 4,
            Value::Set(_) => 5,
            Value::Dist(_) => 6,
            Value::Clos(_) => 7,
            Value::Native(_) => 8,
        }
    }

    fn fn_addr(&self) -> usize {
        match self {
            Value::Clos(c) => Arc::as_ptr(c) as *const u8 as usize,
            Value::Native(n) => Arc::as_ptr(&n.f) as *const u8 as usize,
            _ => 0,
        }
    }
}

fn cmp_real(a: f64, b: f64) -> Ordering {
    if a == b {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => cmp_real(*a, *b),
            (Value::Unit, Value::Unit) => Ordering::Equal,
            (Value::Pair(a1, a2), Value::Pair(b1, b2)) => a1.cmp(b1).then_with(|| a2.cmp(b2)),
            (Value::Inj(s, a), Value::Inj(t, b)) => {
                let side = |s: &Side| matches!(s, Side::Right) as u8;
                side(s).cmp(&side(t)).then_with(|| a.cmp(b))
            }
            (Value::Bang(a), Value::Bang(b)) => a.cmp(b),
            (Value::Set(a), Value::Set(b)) => a.iter().cmp(b.iter()),
            (Value::Dist(a), Value::Dist(b)) => a.cmp_structural(b),
            // functions have no structure to compare; identity is the best we can do
            (a, b) if a.is_function() && b.is_function() => {
                a.rank().cmp(&b.rank()).then_with(|| a.fn_addr().cmp(&b.fn_addr()))
            }
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Value) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(x) => f.write_str(&fmt_num(*x)),
            Value::Unit => f.write_str("()"),
            Value::Pair(a, b) => write!(f, "({a}, {b})"),
            Value::Inj(Side::Left, v) => write!(f, "inl {}", Wrapped(v)),
            Value::Inj(Side::Right, v) => write!(f, "inr {}", Wrapped(v)),
            Value::Bang(v) => write!(f, "!{}", Wrapped(v)),
            Value::Set(items) => {
                f.write_str("{")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
            Value::Dist(d) => write!(f, "{d}"),
            Value::Clos(_) => f.write_str("<fun>"),
            Value::Native(n) => write!(f, "<prim {}>", n.name),
        }
    }
}

/// Parenthesises prefix forms nested under another prefix.
struct Wrapped<'a>(&'a Value);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Value::Inj(..) | Value::Bang(_) => write!(f, "({})", self.0),
            Value::Real(x) if *x < 0.0 => write!(f, "({})", self.0),
            v => write!(f, "{v}"),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

const MAX_VALUE_DEPTH: usize = 200;

/// Parses a value literal: reals, `()`, `(v, w)`, `inl v`, `inr v`, `!v` and
/// `{v1, v2, ...}`.
pub fn parse_value(src: &str) -> Result<Value, ParseError> {
    let toks = lex(src)?;
    let mut pos = 0;
    let v = value_at(&toks, &mut pos, 0)?;
    if toks[pos].0 != Tok::Eof {
        return Err(ParseError::syntax(toks[pos].1, format!("unexpected {}", toks[pos].0.describe())));
    }
    Ok(v)
}

fn value_at(toks: &[(Tok, crate::lang::Loc)], pos: &mut usize, depth: usize) -> Result<Value, ParseError> {
    let (tok, loc) = toks[*pos].clone();
    if depth > MAX_VALUE_DEPTH {
        return Err(ParseError::syntax(loc, "nesting too deep"));
    }
    let expect = |pos: &mut usize, t: Tok| -> Result<(), ParseError> {
        if toks[*pos].0 == t {
            *pos += 1;
            Ok(())
        } else {
            Err(ParseError::syntax(
                toks[*pos].1,
                format!("expected {}, found {}", t.describe(), toks[*pos].0.describe()),
            ))
        }
    };
    match tok {
        Tok::Num(n) => {
            *pos += 1;
            Ok(Value::Real(n))
        }
        Tok::Inf => {
            *pos += 1;
            Ok(Value::Real(f64::INFINITY))
        }
        Tok::Minus => {
            *pos += 1;
            match toks[*pos].0 {
                Tok::Num(n) => {
                    *pos += 1;
                    Ok(Value::Real(-n))
                }
                Tok::Inf => {
                    *pos += 1;
                    Ok(Value::Real(f64::NEG_INFINITY))
                }
                _ => Err(ParseError::syntax(toks[*pos].1, "expected a number after `-`")),
            }
        }
        Tok::LParen => {
            *pos += 1;
            if toks[*pos].0 == Tok::RParen {
                *pos += 1;
                return Ok(Value::Unit);
            }
            let a = value_at(toks, pos, depth + 1)?;
            if toks[*pos].0 == Tok::Comma {
                *pos += 1;
                let b = value_at(toks, pos, depth + 1)?;
                expect(pos, Tok::RParen)?;
                return Ok(Value::pair(a, b));
            }
            expect(pos, Tok::RParen)?;
            Ok(a)
        }
        Tok::Inl | Tok::Inr => {
            *pos += 1;
            let side = if tok == Tok::Inl { Side::Left } else { Side::Right };
            Ok(Value::inj(side, value_at(toks, pos, depth + 1)?))
        }
        Tok::Bang => {
            *pos += 1;
            Ok(Value::bang(value_at(toks, pos, depth + 1)?))
        }
        Tok::LBrace => {
            *pos += 1;
            let mut items = Vec::new();
            if toks[*pos].0 != Tok::RBrace {
                loop {
                    items.push(value_at(toks, pos, depth + 1)?);
                    if toks[*pos].0 == Tok::Comma {
                        *pos += 1;
                    } else {
                        break;
                    }
                }
            }
            expect(pos, Tok::RBrace)?;
            Ok(Value::set(items))
        }
        other => Err(ParseError::syntax(loc, format!("expected a value, found {}", other.describe()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        for src in ["1.5", "()", "(1, (2, -3))", "inl !(-2)", "inr ()", "{3, 1, 2}", "!inl 0", "{}"] {
            let v = parse_value(src).unwrap();
            let again = parse_value(&v.to_string()).unwrap();
            assert_eq!(v, again, "{src}");
        }
    }

    #[test]
    fn sets_are_sorted_and_deduplicated() {
        let v = parse_value("{2, 1, 2, -0, 0}").unwrap();
        assert_eq!(v.to_string(), "{-0, 1, 2}");
    }

    #[test]
    fn ordering_is_total_and_consistent() {
        let vals: Vec<Value> = ["0", "-0", "1", "()", "(0, 1)", "inl 0", "inr 0", "!0", "{0}"]
            .iter()
            .map(|s| parse_value(s).unwrap())
            .collect();
        for a in &vals {
            for b in &vals {
                assert_eq!(a.cmp(b), b.cmp(a).reverse());
            }
        }
        assert_eq!(vals[0], vals[1]);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_value("(1, ").is_err());
        assert!(parse_value("1 2").is_err());
        assert!(parse_value("-x").is_err());
    }
}
