//! Concrete syntax.
//!
//! Types: `o` (atom), `(a * b)` (tensor; `()` unit, `(a)` unary),
//! `[a,b] -o c` (arrow). Parentheses around types always denote a tensor.
//!
//! Terms: `x` (variable), `<s,t>` (list), `s[x:a,y:b := t]` (explicit
//! substitution, postfix), `\<x:a>. s` (abstraction, body extends right),
//! `s <t,u>` (application, postfix), `f(s,t)` (generator application),
//! `(s)` (grouping).
//!
//! Judgments: `x:a, y:b |- s : c`. Signatures: statements
//! `atoms o, p;` and `arrow f : o, o -> (o * o);` with `#` line comments.

use crate::signature::{Generator, SigError, Signature, SignatureKind, Type};
use crate::syntax::Term;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected character `{ch}` at offset {pos}")]
    InvalidChar { ch: char, pos: usize },
    #[error("unexpected end of input (expected {expected})")]
    UnexpectedEnd { expected: String },
    #[error("unexpected `{found}` at offset {pos} (expected {expected})")]
    Unexpected { found: String, pos: usize, expected: String },
    #[error("duplicate binder `{0}`")]
    DuplicateBinder(String),
    #[error("trailing input at offset {pos}")]
    TrailingInput { pos: usize },
    #[error(transparent)]
    Signature(#[from] SigError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LAngle,
    RAngle,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Star,
    Assign,    // :=
    Backslash, // \
    Dot,
    Turnstile, // |-
    Lollipop,  // -o
    Arrow,     // ->
    Semi,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Tok::Ident(x) => return write!(f, "{x}"),
            Tok::LAngle => "<",
            Tok::RAngle => ">",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Star => "*",
            Tok::Assign => ":=",
            Tok::Backslash => "\\",
            Tok::Dot => ".",
            Tok::Turnstile => "|-",
            Tok::Lollipop => "-o",
            Tok::Arrow => "->",
            Tok::Semi => ";",
        };
        write!(f, "{s}")
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '<' => {
                toks.push((Tok::LAngle, i));
                i += 1;
            }
            '>' => {
                toks.push((Tok::RAngle, i));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            '[' => {
                toks.push((Tok::LBracket, i));
                i += 1;
            }
            ']' => {
                toks.push((Tok::RBracket, i));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            ';' => {
                toks.push((Tok::Semi, i));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            '\\' => {
                toks.push((Tok::Backslash, i));
                i += 1;
            }
            '.' => {
                toks.push((Tok::Dot, i));
                i += 1;
            }
            ':' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((Tok::Assign, i));
                    i += 2;
                } else {
                    toks.push((Tok::Colon, i));
                    i += 1;
                }
            }
            '|' => {
                if bytes.get(i + 1) == Some(&b'-') {
                    toks.push((Tok::Turnstile, i));
                    i += 2;
                } else {
                    return Err(ParseError::InvalidChar { ch: '|', pos: i });
                }
            }
            '-' => match bytes.get(i + 1) {
                Some(&b'o') if !is_ident_char(bytes.get(i + 2).copied()) => {
                    toks.push((Tok::Lollipop, i));
                    i += 2;
                }
                Some(&b'>') => {
                    toks.push((Tok::Arrow, i));
                    i += 2;
                }
                _ => return Err(ParseError::InvalidChar { ch: '-', pos: i }),
            },
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && is_ident_char(Some(bytes[i])) {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => return Err(ParseError::InvalidChar { ch: c, pos: i }),
        }
    }
    Ok(toks)
}

fn is_ident_char(b: Option<u8>) -> bool {
    matches!(b, Some(b) if (b as char).is_ascii_alphanumeric() || b == b'_' || b == b'\'')
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    i: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser { toks: lex(src)?, i: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map(|(_, p)| *p).unwrap_or(usize::MAX)
    }

    fn next(&mut self, expected: &str) -> Result<Tok, ParseError> {
        match self.toks.get(self.i) {
            Some((t, _)) => {
                self.i += 1;
                Ok(t.clone())
            }
            None => Err(ParseError::UnexpectedEnd { expected: expected.to_string() }),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let pos = self.pos();
        let got = self.next(&want.to_string())?;
        if got == want {
            Ok(())
        } else {
            Err(ParseError::Unexpected {
                found: got.to_string(),
                pos,
                expected: want.to_string(),
            })
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, ParseError> {
        let pos = self.pos();
        match self.next(expected)? {
            Tok::Ident(x) => Ok(x),
            other => Err(ParseError::Unexpected {
                found: other.to_string(),
                pos,
                expected: expected.to_string(),
            }),
        }
    }

    fn done(&self) -> Result<(), ParseError> {
        match self.toks.get(self.i) {
            None => Ok(()),
            Some((_, p)) => Err(ParseError::TrailingInput { pos: *p }),
        }
    }

    // ---- types ----

    fn ty(&mut self) -> Result<Type, ParseError> {
        match self.peek() {
            Some(Tok::LBracket) => {
                self.expect(Tok::LBracket)?;
                let mut args = Vec::new();
                if self.peek() != Some(&Tok::RBracket) {
                    loop {
                        args.push(self.ty()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket)?;
                self.expect(Tok::Lollipop)?;
                let res = self.ty()?;
                Ok(Type::Arrow(args, Box::new(res)))
            }
            Some(Tok::LParen) => {
                self.expect(Tok::LParen)?;
                let mut parts = Vec::new();
                if self.peek() != Some(&Tok::RParen) {
                    loop {
                        parts.push(self.ty()?);
                        if !self.eat(&Tok::Star) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
                Ok(Type::Tensor(parts))
            }
            Some(Tok::Ident(_)) => Ok(Type::Atom(self.ident("type")?)),
            Some(t) => Err(ParseError::Unexpected {
                found: t.to_string(),
                pos: self.pos(),
                expected: "type".to_string(),
            }),
            None => Err(ParseError::UnexpectedEnd { expected: "type".to_string() }),
        }
    }

    // ---- terms ----

    fn binders(&mut self, closer: &Tok) -> Result<Vec<(String, Type)>, ParseError> {
        let mut out: Vec<(String, Type)> = Vec::new();
        if self.peek() != Some(closer) {
            loop {
                let name = self.ident("binder name")?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                if out.iter().any(|(n, _)| *n == name) {
                    return Err(ParseError::DuplicateBinder(name));
                }
                out.push((name, ty));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        Ok(out)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if self.peek() == Some(&Tok::Backslash) {
            self.expect(Tok::Backslash)?;
            self.expect(Tok::LAngle)?;
            let binders = self.binders(&Tok::RAngle)?;
            self.expect(Tok::RAngle)?;
            self.expect(Tok::Dot)?;
            let body = self.term()?;
            return Ok(Term::abs_bind(binders, body));
        }
        let mut t = self.atom_term()?;
        loop {
            match self.peek() {
                Some(Tok::LAngle) => {
                    self.expect(Tok::LAngle)?;
                    let args = self.term_list(&Tok::RAngle)?;
                    self.expect(Tok::RAngle)?;
                    t = Term::App { fun: Box::new(t), args };
                }
                Some(Tok::LBracket) => {
                    self.expect(Tok::LBracket)?;
                    let binders = self.binders(&Tok::Assign)?;
                    self.expect(Tok::Assign)?;
                    let arg = self.term()?;
                    self.expect(Tok::RBracket)?;
                    t = Term::esub_bind(t, binders, arg);
                }
                _ => break,
            }
        }
        Ok(t)
    }

    fn term_list(&mut self, closer: &Tok) -> Result<Vec<Term>, ParseError> {
        let mut out = Vec::new();
        if self.peek() != Some(closer) {
            loop {
                out.push(self.term()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        Ok(out)
    }

    fn atom_term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let name = self.ident("term")?;
                if self.peek() == Some(&Tok::LParen) {
                    self.expect(Tok::LParen)?;
                    let args = self.term_list(&Tok::RParen)?;
                    self.expect(Tok::RParen)?;
                    Ok(Term::Gen { name, args })
                } else {
                    Ok(Term::FVar(name))
                }
            }
            Some(Tok::LAngle) => {
                self.expect(Tok::LAngle)?;
                let items = self.term_list(&Tok::RAngle)?;
                self.expect(Tok::RAngle)?;
                Ok(Term::List(items))
            }
            Some(Tok::LParen) => {
                self.expect(Tok::LParen)?;
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Some(t) => Err(ParseError::Unexpected {
                found: t.to_string(),
                pos: self.pos(),
                expected: "term".to_string(),
            }),
            None => Err(ParseError::UnexpectedEnd { expected: "term".to_string() }),
        }
    }

    // ---- judgments ----

    fn context(&mut self) -> Result<Vec<(String, Type)>, ParseError> {
        let mut ctx = Vec::new();
        if self.peek() != Some(&Tok::Turnstile) {
            loop {
                let name = self.ident("context variable")?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                ctx.push((name, ty));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        Ok(ctx)
    }

    fn judgment(&mut self) -> Result<ParsedJudgment, ParseError> {
        let context = self.context()?;
        self.expect(Tok::Turnstile)?;
        let term = self.term()?;
        self.expect(Tok::Colon)?;
        let ty = self.ty()?;
        Ok(ParsedJudgment { context, term, ty })
    }
}

/// A surface judgment `x:a, … |- s : t`, before typechecking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedJudgment {
    pub context: Vec<(String, Type)>,
    pub term: Term,
    pub ty: Type,
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.done()?;
    Ok(t)
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    p.done()?;
    Ok(t)
}

pub fn parse_judgment(src: &str) -> Result<ParsedJudgment, ParseError> {
    let mut p = Parser::new(src)?;
    let j = p.judgment()?;
    p.done()?;
    Ok(j)
}

/// Parses signature statements (`atoms …;`, `arrow f : … -> …;`) and
/// validates the result for the given kind.
pub fn parse_signature(src: &str, kind: SignatureKind) -> Result<Signature, ParseError> {
    let mut p = Parser::new(src)?;
    let mut atoms: Vec<String> = Vec::new();
    let mut gens: Vec<(String, Generator)> = Vec::new();
    while p.peek().is_some() {
        let pos = p.pos();
        let head = p.ident("`atoms` or `arrow`")?;
        match head.as_str() {
            "atoms" => loop {
                atoms.push(p.ident("atom name")?);
                if p.eat(&Tok::Comma) {
                    continue;
                }
                p.expect(Tok::Semi)?;
                break;
            },
            "arrow" => {
                let name = p.ident("generator name")?;
                p.expect(Tok::Colon)?;
                let mut sources = Vec::new();
                if p.peek() != Some(&Tok::Arrow) {
                    loop {
                        sources.push(p.ty()?);
                        if !p.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                p.expect(Tok::Arrow)?;
                let target = p.ty()?;
                p.expect(Tok::Semi)?;
                gens.push((name, Generator { sources, target }));
            }
            other => {
                return Err(ParseError::Unexpected {
                    found: other.to_string(),
                    pos,
                    expected: "`atoms` or `arrow`".to_string(),
                })
            }
        }
    }
    Ok(Signature::new(kind, atoms, gens)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Binder;

    #[test]
    fn types_round_trip_display() {
        for src in ["o", "()", "(a)", "(a * b)", "((a * b) * c)", "[a,b] -o c", "[] -o ()",
            "[(a * b)] -o [c] -o d"]
        {
            let t = parse_type(src).unwrap();
            assert_eq!(parse_type(&t.to_string()).unwrap(), t, "round-trip of {src}");
        }
        assert_eq!(parse_type("(a)").unwrap(), Type::Tensor(vec![Type::atom("a")]));
        assert_ne!(parse_type("(a)").unwrap(), parse_type("a").unwrap());
        // Arrow is right-associative.
        assert_eq!(
            parse_type("[a] -o [b] -o c").unwrap(),
            Type::Arrow(
                vec![Type::atom("a")],
                Box::new(Type::Arrow(vec![Type::atom("b")], Box::new(Type::atom("c"))))
            )
        );
    }

    #[test]
    fn terms_parse_to_expected_shapes() {
        assert_eq!(parse_term("x").unwrap(), Term::var("x"));
        assert_eq!(
            parse_term("<x , y>").unwrap(),
            Term::List(vec![Term::var("x"), Term::var("y")])
        );
        assert_eq!(parse_term("<>").unwrap(), Term::List(vec![]));
        assert_eq!(
            parse_term("f(x,y)").unwrap(),
            Term::Gen {
                name: "f".into(),
                args: vec![Term::var("x"), Term::var("y")]
            }
        );
        assert_eq!(parse_term("f()").unwrap(), Term::Gen { name: "f".into(), args: vec![] });
        let e = parse_term("<u,v>[u:a,v:b := z]").unwrap();
        assert_eq!(
            e,
            Term::ESub {
                body: Box::new(Term::List(vec![
                    Term::BVar { group: 0, slot: 0 },
                    Term::BVar { group: 0, slot: 1 }
                ])),
                binders: vec![Binder::new("u", Type::atom("a")), Binder::new("v", Type::atom("b"))],
                arg: Box::new(Term::var("z")),
            }
        );
        assert!(parse_term("<>[ := x]").unwrap().is_list_under_chain());
        let lam = parse_term("\\<x:a>. x").unwrap();
        assert_eq!(
            lam,
            Term::Abs {
                binders: vec![Binder::new("x", Type::atom("a"))],
                body: Box::new(Term::BVar { group: 0, slot: 0 })
            }
        );
        // The abstraction body extends as far right as possible.
        let wide = parse_term("\\<x:a>. x <u>").unwrap();
        assert!(matches!(wide, Term::Abs { .. }));
        let tight = parse_term("(\\<x:a>. x) <u>").unwrap();
        assert!(matches!(tight, Term::App { .. }));
    }

    #[test]
    fn application_chains_are_left_nested() {
        let t = parse_term("x <y> <z>").unwrap();
        let Term::App { fun, args } = &t else { panic!() };
        assert_eq!(args.len(), 1);
        assert!(matches!(fun.as_ref(), Term::App { .. }));
        let u = parse_term("x[u:a := y][v:b := z]").unwrap();
        let (chain, _) = u.chain_view();
        assert_eq!(chain.len(), 2);
    }

    #[test]
    fn shadowed_binders_resolve_to_the_innermost_group() {
        let t = parse_term("x[x:a := x][x:(a) := z]").unwrap();
        // Outermost substitution binds the x inside the inner argument; the
        // inner body's x refers to the inner binder.
        let Term::ESub { body, .. } = &t else { panic!() };
        let Term::ESub { body: inner_body, arg: inner_arg, .. } = body.as_ref() else { panic!() };
        assert_eq!(inner_body.as_ref(), &Term::BVar { group: 0, slot: 0 });
        // The inner argument is outside the inner binder group, so the
        // outer binder is its group 0.
        assert_eq!(inner_arg.as_ref(), &Term::BVar { group: 0, slot: 0 });
        assert_eq!(t.fv(), vec!["z"]);
    }

    #[test]
    fn judgments_and_signatures_parse() {
        let j = parse_judgment("x:(a*b) |- x : (a * b)").unwrap();
        assert_eq!(j.context, vec![("x".into(), parse_type("(a*b)").unwrap())]);
        assert_eq!(j.term, Term::var("x"));
        let j2 = parse_judgment("|- <> : ()").unwrap();
        assert!(j2.context.is_empty());
        let sig = parse_signature(
            "# a signature\natoms o, p;\narrow f : o, p -> (o * p);\narrow c : -> o;",
            SignatureKind::Autonomous,
        )
        .unwrap();
        assert_eq!(sig.atoms(), &["o".to_string(), "p".to_string()]);
        assert_eq!(sig.generator("f").unwrap().sources.len(), 2);
        assert_eq!(sig.generator("c").unwrap().sources.len(), 0);
        assert!(sig.generator("g").is_none());
    }

    #[test]
    fn parse_errors_are_reported() {
        assert!(matches!(parse_term("x +"), Err(ParseError::InvalidChar { ch: '+', .. })));
        assert!(matches!(parse_term("<x"), Err(ParseError::UnexpectedEnd { .. })));
        assert!(matches!(parse_term("x y"), Err(ParseError::TrailingInput { .. })));
        assert!(matches!(
            parse_term("x[u:a,u:b := z]"),
            Err(ParseError::DuplicateBinder(_))
        ));
        assert!(matches!(parse_type("(a *"), Err(ParseError::UnexpectedEnd { .. })));
        assert!(matches!(
            parse_signature("atoms o, o;", SignatureKind::Representable),
            Err(ParseError::Signature(SigError::DuplicateAtom(_)))
        ));
    }
}
