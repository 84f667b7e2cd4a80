use super::ast::Loc;
use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(f64),
    // keywords
    Def,
    Main,
    Fun,
    Let,
    In,
    MLet,
    Case,
    Inl,
    Inr,
    Return,
    Real,
    Unit,
    Set,
    CircP,
    CircH,
    Inf,
    Pi,
    Prim,
    // punctuation
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Eq,
    Bang,
    At,
    Dot,
    Plus,
    Star,
    Slash,
    Minus,
    Lolli,
    Arrow,
    Bar,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Def => "def",
            Tok::Main => "main",
            Tok::Fun => "fun",
            Tok::Let => "let",
            Tok::In => "in",
            Tok::MLet => "mlet",
            Tok::Case => "case",
            Tok::Inl => "inl",
            Tok::Inr => "inr",
            Tok::Return => "return",
            Tok::Real => "real",
            Tok::Unit => "unit",
            Tok::Set => "set",
            Tok::CircP => "circP",
            Tok::CircH => "circH",
            Tok::Inf => "inf",
            Tok::Pi => "pi",
            Tok::Prim => "prim",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Eq => "=",
            Tok::Bang => "!",
            Tok::At => "@",
            Tok::Dot => ".",
            Tok::Plus => "+",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Minus => "-",
            Tok::Lolli => "-o",
            Tok::Arrow => "->",
            Tok::Bar => "|",
            Tok::Ident(_) | Tok::Num(_) | Tok::Eof => "",
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "def" => Tok::Def,
        "main" => Tok::Main,
        "fun" => Tok::Fun,
        "let" => Tok::Let,
        "in" => Tok::In,
        "mlet" => Tok::MLet,
        "case" => Tok::Case,
        "inl" => Tok::Inl,
        "inr" => Tok::Inr,
        "return" => Tok::Return,
        "real" => Tok::Real,
        "unit" => Tok::Unit,
        "set" => Tok::Set,
        "circP" => Tok::CircP,
        "circH" => Tok::CircH,
        "inf" => Tok::Inf,
        "pi" => Tok::Pi,
        "prim" => Tok::Prim,
        _ => return None,
    })
}

pub fn is_keyword(word: &str) -> bool {
    keyword(word).is_some()
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Loc)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let loc = Loc::new(line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '-'
            && chars.get(i + 1) == Some(&'o')
            && !chars.get(i + 2).is_some_and(|&c| c.is_ascii_alphanumeric() || c == '\'')
        {
            bump!();
            bump!();
            out.push((Tok::Lolli, loc));
            // `-o_p` is accepted as a spelling of `-o@p`
            if chars.get(i) == Some(&'_') {
                out.push((Tok::At, Loc::new(line, col)));
                bump!();
            }
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            bump!();
            bump!();
            out.push((Tok::Arrow, loc));
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            if i < chars.len() && chars[i] == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = (i, line, col);
                bump!();
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    bump!();
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                } else {
                    (i, line, col) = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let n: f64 = text.parse().map_err(|_| ParseError::syntax(loc, format!("malformed number `{text}`")))?;
            out.push((Tok::Num(n), loc));
            continue;
        }
        if ident_start(c) {
            let start = i;
            while i < chars.len() && ident_continue(chars[i]) {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            out.push((keyword(&word).unwrap_or(Tok::Ident(word)), loc));
            continue;
        }
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '=' => Tok::Eq,
            '!' => Tok::Bang,
            '@' => Tok::At,
            '.' => Tok::Dot,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '-' => Tok::Minus,
            '|' => Tok::Bar,
            other => {
                return Err(ParseError::syntax(loc, format!("unexpected character `{other}`")));
            }
        };
        bump!();
        out.push((tok, loc));
    }
    out.push((Tok::Eof, Loc::new(line, col)));
    Ok(out)
}
