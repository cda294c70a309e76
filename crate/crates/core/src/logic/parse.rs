//! Parsers for the three input formats: theory files, bias files and
//! mega-example files. All three share one lexer.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::logic::bias::{ModeArg, ModeDeclaration, ModeSchema, Recall};
use crate::logic::{
    Atom, Clause, Literal, MegaExample, Pred, Term, Theory, ANNOTATION_SUM_EPS,
};
use crate::symbol::Symbol;

#[derive(Error, Debug, Clone, PartialEq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Ident(String),
    Var(String),
    Num(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Dot,
    Neck, // :-
    Colon,
    Slash,
    Plus,
    Minus,
    Hash,
    Star,
    NegOp, // \+
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if let Some(c) = c {
                if c == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
            }
            c
        }};
    }

    loop {
        let (tl, tc) = (line, col);
        let c = match chars.peek().copied() {
            Some(c) => c,
            None => break,
        };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '%' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump!();
            }
            continue;
        }
        let tok = if c.is_ascii_digit() {
            Tok::Num(lex_number(&mut chars, &mut line, &mut col))
        } else if c.is_ascii_lowercase() {
            Tok::Ident(lex_ident(&mut chars, &mut line, &mut col))
        } else if c.is_ascii_uppercase() || c == '_' {
            Tok::Var(lex_ident(&mut chars, &mut line, &mut col))
        } else {
            match c {
                '\'' => {
                    bump!();
                    let mut s = String::new();
                    loop {
                        match bump!() {
                            Some('\'') => break,
                            Some(c) => s.push(c),
                            None => {
                                return Err(ParseError {
                                    line: tl,
                                    col: tc,
                                    msg: "unterminated quoted atom".into(),
                                })
                            }
                        }
                    }
                    Tok::Ident(s)
                }
                '(' => {
                    bump!();
                    Tok::LParen
                }
                ')' => {
                    bump!();
                    Tok::RParen
                }
                '[' => {
                    bump!();
                    Tok::LBracket
                }
                ']' => {
                    bump!();
                    Tok::RBracket
                }
                ',' => {
                    bump!();
                    Tok::Comma
                }
                ';' => {
                    bump!();
                    Tok::Semi
                }
                '.' => {
                    bump!();
                    Tok::Dot
                }
                '*' => {
                    bump!();
                    Tok::Star
                }
                '/' => {
                    bump!();
                    Tok::Slash
                }
                '+' => {
                    bump!();
                    Tok::Plus
                }
                '#' => {
                    bump!();
                    Tok::Hash
                }
                ':' => {
                    bump!();
                    if chars.peek() == Some(&'-') {
                        bump!();
                        Tok::Neck
                    } else {
                        Tok::Colon
                    }
                }
                '-' => {
                    bump!();
                    match chars.peek() {
                        Some(d) if d.is_ascii_digit() => {
                            let rest = lex_number(&mut chars, &mut line, &mut col);
                            Tok::Num(format!("-{rest}"))
                        }
                        _ => Tok::Minus,
                    }
                }
                '\\' => {
                    bump!();
                    if chars.peek() == Some(&'+') {
                        bump!();
                        Tok::NegOp
                    } else {
                        return Err(ParseError {
                            line: tl,
                            col: tc,
                            msg: "expected \\+".into(),
                        });
                    }
                }
                other => {
                    return Err(ParseError {
                        line: tl,
                        col: tc,
                        msg: format!("unexpected character '{other}'"),
                    })
                }
            }
        };
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

fn lex_ident(
    chars: &mut std::iter::Peekable<std::str::Chars<'_>>,
    line: &mut usize,
    col: &mut usize,
) -> String {
    let mut s = String::new();
    while let Some(&c) = chars.peek() {
        if c.is_ascii_alphanumeric() || c == '_' {
            s.push(c);
            chars.next();
            *col += 1;
        } else {
            break;
        }
    }
    let _ = line;
    s
}

fn lex_number(
    chars: &mut std::iter::Peekable<std::str::Chars<'_>>,
    line: &mut usize,
    col: &mut usize,
) -> String {
    let mut s = String::new();
    let mut take_digits = |s: &mut String,
                           chars: &mut std::iter::Peekable<std::str::Chars<'_>>,
                           col: &mut usize| {
        while let Some(&c) = chars.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                chars.next();
                *col += 1;
            } else {
                break;
            }
        }
    };
    take_digits(&mut s, chars, col);
    // consume '.' only when a digit follows, so clause-final dots survive
    let mut look = chars.clone();
    if look.next() == Some('.') {
        if let Some(d) = look.next() {
            if d.is_ascii_digit() {
                s.push('.');
                chars.next();
                *col += 1;
                take_digits(&mut s, chars, col);
            }
        }
    }
    if matches!(chars.peek(), Some('e') | Some('E')) {
        let mut look = chars.clone();
        look.next();
        let sign = matches!(look.peek(), Some('+') | Some('-'));
        if sign {
            look.next();
        }
        if matches!(look.peek(), Some(d) if d.is_ascii_digit()) {
            s.push(chars.next().unwrap());
            *col += 1;
            if sign {
                s.push(chars.next().unwrap());
                *col += 1;
            }
            take_digits(&mut s, chars, col);
        }
    }
    let _ = line;
    s
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        (self.toks[self.pos].line, self.toks[self.pos].col)
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError { line, col, msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn parse_term(&mut self) -> Result<Term, ParseError> {
        match self.next() {
            Tok::Var(v) => Ok(Term::Var(Symbol::new(v))),
            Tok::Num(n) => Ok(Term::Const(Symbol::new(n))),
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.next();
                    let mut args = vec![self.parse_term()?];
                    while *self.peek() == Tok::Comma {
                        self.next();
                        args.push(self.parse_term()?);
                    }
                    self.expect(Tok::RParen, ")")?;
                    Ok(Term::Compound(Symbol::new(name), args))
                } else {
                    Ok(Term::Const(Symbol::new(name)))
                }
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                self.err("expected term")
            }
        }
    }

    fn parse_atom(&mut self) -> Result<Atom, ParseError> {
        let name = match self.next() {
            Tok::Ident(n) => n,
            _ => {
                self.pos = self.pos.saturating_sub(1);
                return self.err("expected atom");
            }
        };
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.next();
            args.push(self.parse_term()?);
            while *self.peek() == Tok::Comma {
                self.next();
                args.push(self.parse_term()?);
            }
            self.expect(Tok::RParen, ")")?;
        }
        Ok(Atom::new(name, args))
    }

    fn parse_number(&mut self, what: &str) -> Result<f64, ParseError> {
        match self.next() {
            Tok::Num(n) => n.parse::<f64>().map_err(|_| {
                let (line, col) = self.here();
                ParseError { line, col, msg: format!("invalid {what}") }
            }),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                self.err(format!("expected {what}"))
            }
        }
    }
}

/// Parse a theory file: one `.`-terminated clause per statement, annotated
/// disjunctive heads, optional body. A single unannotated head is read as a
/// deterministic fact with probability 1.
pub fn parse_theory(text: &str) -> Result<Theory, ParseError> {
    let mut p = Parser::new(text)?;
    let mut clauses = Vec::new();
    while !p.at_eof() {
        let start = p.here();
        let mut head = Vec::new();
        let mut annotated = false;
        loop {
            let atom = p.parse_atom()?;
            let prob = if *p.peek() == Tok::Colon {
                p.next();
                annotated = true;
                let v = p.parse_number("annotation")?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(ParseError {
                        line: start.0,
                        col: start.1,
                        msg: format!("annotation {v} outside [0,1]"),
                    });
                }
                Some(v)
            } else {
                None
            };
            head.push((atom, prob));
            if *p.peek() == Tok::Semi {
                p.next();
            } else {
                break;
            }
        }
        if head.len() > 1 && head.iter().any(|(_, p)| p.is_none()) {
            return Err(ParseError {
                line: start.0,
                col: start.1,
                msg: "every disjunct of a multi-head clause needs an annotation".into(),
            });
        }
        let head: Vec<(Atom, f64)> = head
            .into_iter()
            .map(|(a, p)| (a, p.unwrap_or(1.0)))
            .collect();
        let _ = annotated;
        let sum: f64 = head.iter().map(|(_, p)| p).sum();
        if sum > 1.0 + ANNOTATION_SUM_EPS {
            return Err(ParseError {
                line: start.0,
                col: start.1,
                msg: format!("head annotations sum to {sum} > 1"),
            });
        }
        let mut body = Vec::new();
        if *p.peek() == Tok::Neck {
            p.next();
            loop {
                let positive = if *p.peek() == Tok::NegOp {
                    p.next();
                    false
                } else {
                    true
                };
                let atom = p.parse_atom()?;
                body.push(Literal { atom, positive });
                if *p.peek() == Tok::Comma {
                    p.next();
                } else {
                    break;
                }
            }
        }
        p.expect(Tok::Dot, ". at end of clause")?;
        clauses.push(Clause::new(head, body));
    }
    Ok(Theory::from_clauses(clauses))
}

/// Serialize a theory in the same format `parse_theory` reads; annotations
/// are printed with six significant digits.
pub fn serialize_theory(theory: &Theory) -> String {
    theory.to_string()
}

fn parse_recall(p: &mut Parser) -> Result<Recall, ParseError> {
    match p.next() {
        Tok::Star => Ok(Recall::Star),
        Tok::Num(n) => match n.parse::<usize>() {
            Ok(v) if v >= 1 => Ok(Recall::Finite(v)),
            _ => p.err("recall must be a positive integer or *"),
        },
        _ => {
            p.pos = p.pos.saturating_sub(1);
            p.err("expected recall")
        }
    }
}

fn parse_mode_schema(p: &mut Parser) -> Result<ModeSchema, ParseError> {
    let name = match p.next() {
        Tok::Ident(n) => n,
        _ => {
            p.pos = p.pos.saturating_sub(1);
            return p.err("expected schema");
        }
    };
    let mut args = Vec::new();
    if *p.peek() == Tok::LParen {
        p.next();
        loop {
            let arg = match p.peek().clone() {
                Tok::Plus => {
                    p.next();
                    ModeArg::Input(parse_type_name(p)?)
                }
                Tok::Minus => {
                    p.next();
                    if *p.peek() == Tok::Hash {
                        p.next();
                        ModeArg::OutputConst(parse_type_name(p)?)
                    } else {
                        ModeArg::Output(parse_type_name(p)?)
                    }
                }
                Tok::Hash => {
                    p.next();
                    ModeArg::GroundConst(parse_type_name(p)?)
                }
                Tok::Var(_) => return p.err("unknown placemarker form"),
                _ => {
                    let t = p.parse_term()?;
                    if !t.is_ground() {
                        return p.err("schema terms must be ground");
                    }
                    ModeArg::Fixed(t)
                }
            };
            args.push(arg);
            if *p.peek() == Tok::Comma {
                p.next();
            } else {
                break;
            }
        }
        p.expect(Tok::RParen, ")")?;
    }
    Ok(ModeSchema { predicate: Symbol::new(name), args })
}

fn parse_type_name(p: &mut Parser) -> Result<Symbol, ParseError> {
    match p.next() {
        Tok::Ident(n) => Ok(Symbol::new(n)),
        _ => {
            p.pos = p.pos.saturating_sub(1);
            p.err("unknown placemarker form")
        }
    }
}

/// Parse a bias file of `modeh`/`modeb` declarations, including the
/// multi-head form `modeh(r,[schemas],[atoms],[pred/arity,...])`.
pub fn parse_bias(text: &str) -> Result<Vec<ModeDeclaration>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut decls = Vec::new();
    while !p.at_eof() {
        let kind = match p.next() {
            Tok::Ident(n) if n == "modeh" || n == "modeb" => n,
            _ => {
                p.pos = p.pos.saturating_sub(1);
                return p.err("expected modeh or modeb declaration");
            }
        };
        p.expect(Tok::LParen, "(")?;
        let recall = parse_recall(&mut p)?;
        p.expect(Tok::Comma, ",")?;
        let decl = if kind == "modeb" {
            let schema = parse_mode_schema(&mut p)?;
            ModeDeclaration::Body { recall, schema }
        } else if *p.peek() == Tok::LBracket {
            let start = p.here();
            p.next();
            let mut schemas = vec![parse_mode_schema(&mut p)?];
            while *p.peek() == Tok::Comma {
                p.next();
                schemas.push(parse_mode_schema(&mut p)?);
            }
            p.expect(Tok::RBracket, "]")?;
            p.expect(Tok::Comma, ",")?;
            p.expect(Tok::LBracket, "[")?;
            let mut shared = vec![p.parse_atom()?];
            while *p.peek() == Tok::Comma {
                p.next();
                shared.push(p.parse_atom()?);
            }
            p.expect(Tok::RBracket, "]")?;
            p.expect(Tok::Comma, ",")?;
            p.expect(Tok::LBracket, "[")?;
            let mut body_preds = vec![parse_pred_indicator(&mut p)?];
            while *p.peek() == Tok::Comma {
                p.next();
                body_preds.push(parse_pred_indicator(&mut p)?);
            }
            p.expect(Tok::RBracket, "]")?;
            if schemas.len() != shared.len() {
                return Err(ParseError {
                    line: start.0,
                    col: start.1,
                    msg: format!(
                        "multihead declaration has {} schemas but {} atoms",
                        schemas.len(),
                        shared.len()
                    ),
                });
            }
            ModeDeclaration::MultiHead { recall, schemas, shared, body_preds }
        } else {
            let schema = parse_mode_schema(&mut p)?;
            ModeDeclaration::Head { recall, schema }
        };
        p.expect(Tok::RParen, ")")?;
        p.expect(Tok::Dot, ".")?;
        decls.push(decl);
    }
    Ok(decls)
}

fn parse_pred_indicator(p: &mut Parser) -> Result<Pred, ParseError> {
    let name = match p.next() {
        Tok::Ident(n) => n,
        _ => {
            p.pos = p.pos.saturating_sub(1);
            return p.err("expected predicate/arity");
        }
    };
    p.expect(Tok::Slash, "/")?;
    let arity = match p.next() {
        Tok::Num(n) => n
            .parse::<usize>()
            .map_err(|_| ParseError { line: 0, col: 0, msg: "invalid arity".into() })?,
        _ => {
            p.pos = p.pos.saturating_sub(1);
            return p.err("expected arity");
        }
    };
    Ok(Pred::new(name, arity))
}

/// Parse a mega-example file: blocks of ground facts delimited by
/// `begin(model(Name)).` and `end(model(Name)).`, with negatives wrapped in
/// `neg/1`.
pub fn parse_examples(text: &str) -> Result<Vec<MegaExample>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut out: Vec<MegaExample> = Vec::new();
    let mut open: Option<MegaExample> = None;
    while !p.at_eof() {
        let start = p.here();
        let atom = p.parse_atom()?;
        p.expect(Tok::Dot, ". at end of fact")?;
        let block_name = |a: &Atom| -> Option<Symbol> {
            if a.args.len() != 1 {
                return None;
            }
            match &a.args[0] {
                Term::Compound(f, args) if f.as_str() == "model" && args.len() == 1 => {
                    match &args[0] {
                        Term::Const(c) => Some(c.clone()),
                        _ => None,
                    }
                }
                _ => None,
            }
        };
        if atom.predicate.as_str() == "begin" {
            let name = match block_name(&atom) {
                Some(n) => n,
                None => {
                    return Err(ParseError {
                        line: start.0,
                        col: start.1,
                        msg: "expected begin(model(name))".into(),
                    })
                }
            };
            if open.is_some() {
                return Err(ParseError {
                    line: start.0,
                    col: start.1,
                    msg: "begin inside an open block".into(),
                });
            }
            open = Some(MegaExample::new(name));
            continue;
        }
        if atom.predicate.as_str() == "end" {
            let name = match block_name(&atom) {
                Some(n) => n,
                None => {
                    return Err(ParseError {
                        line: start.0,
                        col: start.1,
                        msg: "expected end(model(name))".into(),
                    })
                }
            };
            match open.take() {
                Some(block) if block.name == name => {
                    check_consistent(&block, start)?;
                    out.push(block);
                }
                Some(block) => {
                    return Err(ParseError {
                        line: start.0,
                        col: start.1,
                        msg: format!("end(model({name})) closes block {}", block.name),
                    })
                }
                None => {
                    return Err(ParseError {
                        line: start.0,
                        col: start.1,
                        msg: "end without matching begin".into(),
                    })
                }
            }
            continue;
        }
        let block = match open.as_mut() {
            Some(b) => b,
            None => {
                return Err(ParseError {
                    line: start.0,
                    col: start.1,
                    msg: "fact outside a begin/end block".into(),
                })
            }
        };
        if atom.predicate.as_str() == "neg" && atom.args.len() == 1 {
            let inner = match &atom.args[0] {
                Term::Compound(f, args) => Atom { predicate: f.clone(), args: args.clone() },
                Term::Const(c) => Atom::new(c.clone(), vec![]),
                Term::Var(_) => {
                    return Err(ParseError {
                        line: start.0,
                        col: start.1,
                        msg: "negative example must be ground".into(),
                    })
                }
            };
            if !inner.is_ground() {
                return Err(ParseError {
                    line: start.0,
                    col: start.1,
                    msg: format!("negative example {inner} is not ground"),
                });
            }
            block.negatives.insert(inner);
        } else {
            if !atom.is_ground() {
                return Err(ParseError {
                    line: start.0,
                    col: start.1,
                    msg: format!("fact {atom} is not ground"),
                });
            }
            block.facts.insert(atom);
        }
    }
    if let Some(block) = open {
        let (line, col) = p.here();
        return Err(ParseError {
            line,
            col,
            msg: format!("unterminated block {}", block.name),
        });
    }
    Ok(out)
}

fn check_consistent(block: &MegaExample, at: (usize, usize)) -> Result<(), ParseError> {
    let overlap: BTreeSet<_> = block.facts.intersection(&block.negatives).collect();
    if let Some(atom) = overlap.into_iter().next() {
        return Err(ParseError {
            line: at.0,
            col: at.1,
            msg: format!("{atom} appears both as a fact and as a negative in {}", block.name),
        });
    }
    Ok(())
}
