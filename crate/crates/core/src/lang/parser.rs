use std::sync::Arc;

use super::ast::*;
use super::lexer::{lex, Tok};
use super::ParseError;
use crate::metrics::{PIdx, Sens};

type PResult<T> = Result<T, ParseError>;

pub fn parse_program(src: &str) -> PResult<Program> {
    let mut p = Parser::new(src)?;
    let prog = p.program()?;
    p.expect_eof()?;
    Ok(prog)
}

pub fn parse_term(src: &str) -> PResult<Term> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_ty(src: &str) -> PResult<Ty> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

/// Nesting limit guarding the recursive descent against stack exhaustion.
const MAX_DEPTH: usize = 200;

pub(crate) struct Parser {
    toks: Vec<(Tok, Loc)>,
    pos: usize,
    depth: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> PResult<Parser> {
        Ok(Parser { toks: lex(src)?, pos: 0, depth: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    pub(crate) fn loc(&self) -> Loc {
        self.toks[self.pos].1
    }

    pub(crate) fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    pub(crate) fn expect_eof(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    pub(crate) fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::syntax(self.loc(), format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Parser) -> PResult<T>) -> PResult<T> {
        if self.depth >= MAX_DEPTH {
            return Err(ParseError::syntax(self.loc(), "nesting too deep"));
        }
        self.depth += 1;
        let r = f(self);
        self.depth -= 1;
        r
    }

    /// Left-nested chains count towards the same nesting budget.
    fn chain_limit(&self, n: usize) -> PResult<()> {
        if self.depth + n >= MAX_DEPTH {
            return Err(ParseError::syntax(self.loc(), "nesting too deep"));
        }
        Ok(())
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    // ---- numbers, indices, grades ----

    pub(crate) fn num_expr(&mut self) -> PResult<f64> {
        let loc = self.loc();
        let v = self.num_sum()?;
        if v.is_nan() {
            return Err(ParseError::syntax(loc, "numeric expression is not a number"));
        }
        Ok(v)
    }

    fn num_sum(&mut self) -> PResult<f64> {
        let mut v = self.num_prod()?;
        loop {
            if self.eat(&Tok::Plus) {
                v += self.num_prod()?;
            } else if self.eat(&Tok::Minus) {
                v -= self.num_prod()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn num_prod(&mut self) -> PResult<f64> {
        let mut v = self.num_unary()?;
        loop {
            if self.eat(&Tok::Star) {
                v *= self.num_unary()?;
            } else if self.eat(&Tok::Slash) {
                v /= self.num_unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn num_unary(&mut self) -> PResult<f64> {
        self.nested(|p| p.num_unary_inner())
    }

    fn num_unary_inner(&mut self) -> PResult<f64> {
        match self.peek().clone() {
            Tok::Minus => {
                self.advance();
                Ok(-self.num_unary()?)
            }
            Tok::Num(n) => {
                self.advance();
                Ok(n)
            }
            Tok::Inf => {
                self.advance();
                Ok(f64::INFINITY)
            }
            Tok::Pi => {
                self.advance();
                Ok(std::f64::consts::PI)
            }
            Tok::Ident(ref f) if f == "sqrt" => {
                self.advance();
                self.expect(&Tok::LParen)?;
                let v = self.num_sum()?;
                self.expect(&Tok::RParen)?;
                Ok(v.sqrt())
            }
            Tok::LParen => {
                self.advance();
                let v = self.num_sum()?;
                self.expect(&Tok::RParen)?;
                Ok(v)
            }
            _ => Err(self.unexpected("number")),
        }
    }

    fn pidx(&mut self) -> PResult<PIdx> {
        let loc = self.loc();
        let v = match *self.peek() {
            Tok::Num(n) => n,
            Tok::Inf => f64::INFINITY,
            _ => return Err(self.unexpected("p-index")),
        };
        self.advance();
        PIdx::new(v).ok_or(ParseError::PIndexBelowOne { loc, value: v })
    }

    fn opt_at(&mut self) -> PResult<Option<PIdx>> {
        if self.eat(&Tok::At) {
            Ok(Some(self.pidx()?))
        } else {
            Ok(None)
        }
    }

    fn at_or_one(&mut self) -> PResult<PIdx> {
        Ok(self.opt_at()?.unwrap_or(PIdx::ONE))
    }

    fn grade(&mut self) -> PResult<Sens> {
        let loc = self.loc();
        let v = self.num_expr()?;
        Sens::new(v).ok_or(ParseError::NegativeSens { loc, value: v })
    }

    fn bracket_grade(&mut self) -> PResult<Sens> {
        self.expect(&Tok::LBracket)?;
        let s = self.grade()?;
        self.expect(&Tok::RBracket)?;
        Ok(s)
    }

    // ---- types ----

    pub(crate) fn ty(&mut self) -> PResult<Ty> {
        self.nested(|p| p.ty_inner())
    }

    fn ty_inner(&mut self) -> PResult<Ty> {
        let dom = self.ty_sum()?;
        if self.eat(&Tok::Lolli) {
            let p = self.at_or_one()?;
            let cod = self.ty()?;
            return Ok(Ty::arrow(p, dom, cod));
        }
        Ok(dom)
    }

    fn ty_sum(&mut self) -> PResult<Ty> {
        let mut t = self.ty_tensor()?;
        let mut n = 0;
        while self.eat(&Tok::Plus) {
            n += 1;
            self.chain_limit(n)?;
            let r = self.ty_tensor()?;
            t = Ty::sum(t, r);
        }
        Ok(t)
    }

    fn ty_tensor(&mut self) -> PResult<Ty> {
        let mut t = self.ty_prefix()?;
        let mut n = 0;
        while *self.peek() == Tok::LParen && *self.peek_at(1) == Tok::Star {
            n += 1;
            self.chain_limit(n)?;
            self.advance();
            self.advance();
            let p = self.at_or_one()?;
            self.expect(&Tok::RParen)?;
            let r = self.ty_prefix()?;
            t = Ty::tensor(p, t, r);
        }
        Ok(t)
    }

    fn ty_prefix(&mut self) -> PResult<Ty> {
        self.nested(|p| p.ty_prefix_inner())
    }

    fn ty_prefix_inner(&mut self) -> PResult<Ty> {
        match self.peek() {
            Tok::Bang => {
                self.advance();
                let s = self.bracket_grade()?;
                Ok(Ty::bang(s, self.ty_prefix()?))
            }
            Tok::CircP => {
                self.advance();
                Ok(Ty::prob_p(self.ty_prefix()?))
            }
            Tok::CircH => {
                self.advance();
                Ok(Ty::prob_h(self.ty_prefix()?))
            }
            Tok::Set => {
                self.advance();
                Ok(Ty::set_of(self.ty_prefix()?))
            }
            _ => self.ty_atom(),
        }
    }

    fn ty_atom(&mut self) -> PResult<Ty> {
        match self.peek() {
            Tok::Real => {
                self.advance();
                Ok(Ty::Real)
            }
            Tok::Unit => {
                self.advance();
                Ok(Ty::Unit)
            }
            Tok::LParen => {
                self.advance();
                let t = self.ty()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.unexpected("type")),
        }
    }

    // ---- terms ----

    pub(crate) fn term(&mut self) -> PResult<Term> {
        self.nested(|p| p.term_inner())
    }

    fn term_inner(&mut self) -> PResult<Term> {
        let loc = self.loc();
        match self.peek() {
            Tok::Fun => self.lambda(),
            Tok::Let => {
                self.advance();
                if self.eat(&Tok::Bang) {
                    let x = self.ident()?;
                    let p = self.at_or_one()?;
                    self.expect(&Tok::Eq)?;
                    let rhs = self.term()?;
                    self.expect(&Tok::In)?;
                    let body = self.term()?;
                    Ok(Term::new(TermKind::LetBang { p, x, rhs: Arc::new(rhs), body: Arc::new(body) }, loc))
                } else {
                    self.expect(&Tok::LParen)?;
                    let x = self.ident()?;
                    self.expect(&Tok::Comma)?;
                    let y = self.ident()?;
                    self.expect(&Tok::RParen)?;
                    let q = self.opt_at()?;
                    self.expect(&Tok::Eq)?;
                    let rhs = self.term()?;
                    self.expect(&Tok::In)?;
                    let body = self.term()?;
                    Ok(Term::new(TermKind::LetPair { q, x, y, rhs: Arc::new(rhs), body: Arc::new(body) }, loc))
                }
            }
            Tok::MLet => {
                self.advance();
                let p = self.at_or_one()?;
                let x = self.ident()?;
                self.expect(&Tok::Eq)?;
                let rhs = self.term()?;
                self.expect(&Tok::In)?;
                let body = self.term()?;
                Ok(Term::new(TermKind::MLet { p, x, rhs: Arc::new(rhs), body: Arc::new(body) }, loc))
            }
            Tok::Case => {
                self.advance();
                let p = self.at_or_one()?;
                let scrut = self.term()?;
                self.expect(&Tok::LBrace)?;
                self.expect(&Tok::Inl)?;
                let x = self.ident()?;
                self.expect(&Tok::Arrow)?;
                let left = self.term()?;
                self.expect(&Tok::Bar)?;
                self.expect(&Tok::Inr)?;
                let y = self.ident()?;
                self.expect(&Tok::Arrow)?;
                let right = self.term()?;
                self.expect(&Tok::RBrace)?;
                Ok(Term::new(
                    TermKind::Case { p, scrut: Arc::new(scrut), x, left: Arc::new(left), y, right: Arc::new(right) },
                    loc,
                ))
            }
            _ => self.app(),
        }
    }

    fn lambda(&mut self) -> PResult<Term> {
        let loc = self.loc();
        self.expect(&Tok::Fun)?;
        self.expect(&Tok::LParen)?;
        let var = self.ident()?;
        self.expect(&Tok::Colon)?;
        let ty = self.ty()?;
        self.expect(&Tok::RParen)?;
        self.expect(&Tok::Lolli)?;
        let p = self.at_or_one()?;
        let body = self.term()?;
        Ok(desugar_lambda(p, var, ty, body, loc))
    }

    fn starts_prefix(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_) | Tok::Num(_) | Tok::LParen | Tok::Prim | Tok::Bang | Tok::Inl | Tok::Inr | Tok::Return
        ) || (*self.peek() == Tok::Minus && matches!(self.peek_at(1), Tok::Num(_)))
    }

    fn app(&mut self) -> PResult<Term> {
        let mut f = self.prefix()?;
        let mut n = 0;
        while self.starts_prefix() {
            n += 1;
            self.chain_limit(n)?;
            let loc = self.loc();
            let a = self.prefix()?;
            f = Term::new(TermKind::App(Arc::new(f), Arc::new(a)), loc);
        }
        Ok(f)
    }

    fn prefix(&mut self) -> PResult<Term> {
        self.nested(|p| p.prefix_inner())
    }

    fn prefix_inner(&mut self) -> PResult<Term> {
        let loc = self.loc();
        match self.peek() {
            Tok::Bang => {
                self.advance();
                let s = self.bracket_grade()?;
                let e = self.prefix()?;
                Ok(Term::new(TermKind::Bang(s, Arc::new(e)), loc))
            }
            Tok::Inl | Tok::Inr => {
                let side = if self.advance() == Tok::Inl { Side::Left } else { Side::Right };
                self.expect(&Tok::LBracket)?;
                let other = self.ty()?;
                self.expect(&Tok::RBracket)?;
                let e = self.prefix()?;
                Ok(Term::new(TermKind::Inj { side, other, arg: Arc::new(e) }, loc))
            }
            Tok::Return => {
                self.advance();
                let mut monad = Monad::P;
                if self.eat(&Tok::LBracket) {
                    let m = self.ident()?;
                    monad = match m.as_str() {
                        "P" => Monad::P,
                        "H" => Monad::H,
                        _ => {
                            return Err(ParseError::syntax(
                                self.toks[self.pos - 1].1,
                                format!("unknown monad `{m}`, expected P or H"),
                            ))
                        }
                    };
                    self.expect(&Tok::RBracket)?;
                }
                let e = self.prefix()?;
                Ok(Term::new(TermKind::Return(monad, Arc::new(e)), loc))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> PResult<Term> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(Term::new(TermKind::Var(s), loc))
            }
            Tok::Num(n) => {
                self.advance();
                Ok(Term::new(TermKind::RealLit(n), loc))
            }
            Tok::Minus => {
                self.advance();
                match *self.peek() {
                    Tok::Num(n) => {
                        self.advance();
                        Ok(Term::new(TermKind::RealLit(-n), loc))
                    }
                    _ => Err(self.unexpected("number")),
                }
            }
            Tok::LParen => {
                self.advance();
                if self.eat(&Tok::RParen) {
                    return Ok(Term::new(TermKind::UnitLit, loc));
                }
                let a = self.term()?;
                if self.eat(&Tok::Comma) {
                    let b = self.term()?;
                    self.expect(&Tok::RParen)?;
                    let p = self.at_or_one()?;
                    return Ok(Term::new(TermKind::Pair(p, Arc::new(a), Arc::new(b)), loc));
                }
                self.expect(&Tok::RParen)?;
                Ok(a)
            }
            Tok::Prim => {
                self.advance();
                self.expect(&Tok::Dot)?;
                let name = self.ident()?;
                let mut args = Vec::new();
                if self.eat(&Tok::LBracket) {
                    loop {
                        args.push(self.prim_arg()?);
                        if self.eat(&Tok::RBracket) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                Ok(Term::new(TermKind::Prim { name, args }, loc))
            }
            _ => Err(self.unexpected("term")),
        }
    }

    fn prim_arg(&mut self) -> PResult<PrimArg> {
        let save = self.pos;
        if let Ok(n) = self.num_expr() {
            if matches!(self.peek(), Tok::Comma | Tok::RBracket) {
                return Ok(PrimArg::Num(n));
            }
        }
        self.pos = save;
        Ok(PrimArg::Ty(self.ty()?))
    }

    // ---- programs ----

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        while *self.peek() == Tok::Def {
            let loc = self.loc();
            let def = self.def()?;
            if prog.defs.iter().any(|d| d.name == def.name) {
                return Err(ParseError::syntax(loc, format!("duplicate definition `{}`", def.name)));
            }
            prog.defs.push(def);
        }
        if self.eat(&Tok::Main) {
            self.expect(&Tok::Eq)?;
            prog.entry = Some(self.term()?);
        }
        Ok(prog)
    }

    fn def(&mut self) -> PResult<Def> {
        let loc = self.loc();
        self.expect(&Tok::Def)?;
        let name = self.ident()?;
        let mut params: Vec<Param> = Vec::new();
        while *self.peek() == Tok::LParen {
            let ploc = self.loc();
            self.advance();
            let pname = self.ident()?;
            self.expect(&Tok::Colon)?;
            let ty = self.ty()?;
            self.expect(&Tok::RParen)?;
            let grade = if *self.peek() == Tok::LBracket { Some(self.bracket_grade()?) } else { None };
            let p = self.at_or_one()?;
            if params.iter().any(|q| q.name == pname) {
                return Err(ParseError::syntax(ploc, format!("duplicate parameter `{pname}`")));
            }
            params.push(Param { name: pname, ty, grade, p });
        }
        let ty = if self.eat(&Tok::Colon) { Some(self.ty()?) } else { None };
        self.expect(&Tok::Eq)?;
        let body = self.term()?;
        Ok(Def { name, params, ty, body, loc })
    }
}

/// `fun (x : ![s] T) -o@p e` binds a hidden variable at grade 1 and unwraps
/// it immediately.
fn desugar_lambda(p: PIdx, var: String, ty: Ty, body: Term, loc: Loc) -> Term {
    if let Ty::Bang(..) = ty {
        let hidden = format!("{var}{BANG_BINDER_SUFFIX}");
        let unwrap = Term::new(
            TermKind::LetBang {
                p,
                x: var,
                rhs: Arc::new(Term::new(TermKind::Var(hidden.clone()), loc)),
                body: Arc::new(body),
            },
            loc,
        );
        return Term::new(TermKind::Lam { p, var: hidden, ty, body: Arc::new(unwrap) }, loc);
    }
    Term::new(TermKind::Lam { p, var, ty, body: Arc::new(body) }, loc)
}
