use super::ast::*;
use crate::metrics::{PIdx, Sens};

pub fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

fn fmt_p(p: PIdx) -> String {
    p.to_string()
}

fn fmt_s(s: Sens) -> String {
    s.to_string()
}

pub fn print_ty(t: &Ty) -> String {
    let mut out = String::new();
    ty_at(t, 0, &mut out);
    out
}

// levels: 0 arrow, 1 sum, 2 tensor, 3 prefix
fn ty_at(t: &Ty, level: u8, out: &mut String) {
    let own = match t {
        Ty::Arrow(..) => 0,
        Ty::Sum(..) => 1,
        Ty::Tensor(..) => 2,
        Ty::Bang(..) | Ty::ProbP(_) | Ty::ProbH(_) | Ty::SetOf(_) => 3,
        Ty::Unit | Ty::Real => 4,
    };
    if own < level {
        out.push('(');
        ty_at(t, 0, out);
        out.push(')');
        return;
    }
    match t {
        Ty::Unit => out.push_str("unit"),
        Ty::Real => out.push_str("real"),
        Ty::Bang(s, a) => {
            out.push_str(&format!("![{}] ", fmt_s(*s)));
            ty_at(a, 3, out);
        }
        Ty::ProbP(a) => {
            out.push_str("circP ");
            ty_at(a, 3, out);
        }
        Ty::ProbH(a) => {
            out.push_str("circH ");
            ty_at(a, 3, out);
        }
        Ty::SetOf(a) => {
            out.push_str("set ");
            ty_at(a, 3, out);
        }
        Ty::Tensor(p, a, b) => {
            ty_at(a, 2, out);
            if *p == PIdx::ONE {
                out.push_str(" (*) ");
            } else {
                out.push_str(&format!(" (*@{}) ", fmt_p(*p)));
            }
            ty_at(b, 3, out);
        }
        Ty::Sum(a, b) => {
            ty_at(a, 1, out);
            out.push_str(" + ");
            ty_at(b, 2, out);
        }
        Ty::Arrow(p, a, b) => {
            ty_at(a, 1, out);
            out.push_str(&lolli(*p));
            ty_at(b, 0, out);
        }
    }
}

fn lolli(p: PIdx) -> String {
    if p == PIdx::ONE {
        " -o ".to_string()
    } else {
        format!(" -o@{} ", fmt_p(p))
    }
}

fn at(p: PIdx) -> String {
    if p == PIdx::ONE {
        String::new()
    } else {
        format!("@{}", fmt_p(p))
    }
}

pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    term_at(t, 0, &mut out);
    out
}

/// Recognises the shape produced by the `fun (x : ![s] T)` sugar.
fn bang_binder(var: &str, ty: &Ty, body: &Term, p: PIdx) -> Option<(String, Term)> {
    let base = var.strip_suffix(BANG_BINDER_SUFFIX)?;
    if !matches!(ty, Ty::Bang(..)) {
        return None;
    }
    match &body.kind {
        TermKind::LetBang { p: q, x, rhs, body } if *q == p && x == base => match &rhs.kind {
            TermKind::Var(v) if v == var => Some((x.clone(), (**body).clone())),
            _ => None,
        },
        _ => None,
    }
}

// levels: 0 binder forms, 1 application, 2 prefix, 3 atom
fn term_at(t: &Term, level: u8, out: &mut String) {
    let own = match &t.kind {
        TermKind::Lam { .. }
        | TermKind::LetPair { .. }
        | TermKind::LetBang { .. }
        | TermKind::MLet { .. }
        | TermKind::Case { .. } => 0,
        TermKind::App(..) => 1,
        TermKind::Bang(..) | TermKind::Inj { .. } | TermKind::Return(..) => 2,
        TermKind::RealLit(x) if *x < 0.0 || (*x == 0.0 && x.is_sign_negative()) => 2,
        _ => 3,
    };
    if own < level {
        out.push('(');
        term_at(t, 0, out);
        out.push(')');
        return;
    }
    match &t.kind {
        TermKind::Var(v) => out.push_str(v),
        TermKind::RealLit(x) => out.push_str(&fmt_num(*x)),
        TermKind::UnitLit => out.push_str("()"),
        TermKind::Lam { p, var, ty, body } => {
            let (name, body) = match bang_binder(var, ty, body, *p) {
                Some((n, b)) => (n, b),
                None => (var.clone(), (**body).clone()),
            };
            out.push_str(&format!("fun ({name} : {}){}", print_ty(ty), lolli(*p).trim_end()));
            out.push(' ');
            term_at(&body, 0, out);
        }
        TermKind::App(f, a) => {
            term_at(f, 1, out);
            out.push(' ');
            term_at(a, 2, out);
        }
        TermKind::Pair(p, a, b) => {
            out.push('(');
            term_at(a, 0, out);
            out.push_str(", ");
            term_at(b, 0, out);
            out.push(')');
            out.push_str(&at(*p));
        }
        TermKind::LetPair { q, x, y, rhs, body } => {
            out.push_str(&format!("let ({x}, {y})"));
            if let Some(q) = q {
                out.push_str(&format!("@{}", fmt_p(*q)));
            }
            out.push_str(" = ");
            term_at(rhs, 0, out);
            out.push_str(" in ");
            term_at(body, 0, out);
        }
        TermKind::Inj { side, other, arg } => {
            let kw = match side {
                Side::Left => "inl",
                Side::Right => "inr",
            };
            out.push_str(&format!("{kw}[{}] ", print_ty(other)));
            term_at(arg, 2, out);
        }
        TermKind::Case { p, scrut, x, left, y, right } => {
            out.push_str(&format!("case{} ", at(*p)));
            term_at(scrut, 0, out);
            out.push_str(&format!(" {{ inl {x} -> "));
            term_at(left, 0, out);
            out.push_str(&format!(" | inr {y} -> "));
            term_at(right, 0, out);
            out.push_str(" }");
        }
        TermKind::Bang(s, a) => {
            out.push_str(&format!("![{}] ", fmt_s(*s)));
            term_at(a, 2, out);
        }
        TermKind::LetBang { p, x, rhs, body } => {
            out.push_str(&format!("let !{x}{} = ", at(*p)));
            term_at(rhs, 0, out);
            out.push_str(" in ");
            term_at(body, 0, out);
        }
        TermKind::MLet { p, x, rhs, body } => {
            out.push_str(&format!("mlet{} {x} = ", at(*p)));
            term_at(rhs, 0, out);
            out.push_str(" in ");
            term_at(body, 0, out);
        }
        TermKind::Return(m, a) => {
            out.push_str(match m {
                Monad::P => "return ",
                Monad::H => "return[H] ",
            });
            term_at(a, 2, out);
        }
        TermKind::Prim { name, args } => {
            out.push_str(&format!("prim.{name}"));
            if !args.is_empty() {
                let parts: Vec<String> = args
                    .iter()
                    .map(|a| match a {
                        PrimArg::Num(x) => fmt_num(*x),
                        PrimArg::Ty(t) => print_ty(t),
                    })
                    .collect();
                out.push_str(&format!("[{}]", parts.join(", ")));
            }
        }
    }
}

pub fn print_def(d: &Def) -> String {
    let mut out = format!("def {}", d.name);
    for prm in &d.params {
        out.push_str(&format!(" ({} : {})", prm.name, print_ty(&prm.ty)));
        if let Some(g) = prm.grade {
            out.push_str(&format!("[{}]", fmt_s(g)));
        }
        out.push_str(&at(prm.p));
    }
    if let Some(t) = &d.ty {
        out.push_str(&format!(" : {}", print_ty(t)));
    }
    out.push_str(" =\n  ");
    out.push_str(&print_term(&d.body));
    out
}

pub fn print_program(prog: &Program) -> String {
    let mut parts: Vec<String> = prog.defs.iter().map(print_def).collect();
    if let Some(e) = &prog.entry {
        parts.push(format!("main =\n  {}", print_term(e)));
    }
    let mut out = parts.join("\n\n");
    out.push('\n');
    out
}
