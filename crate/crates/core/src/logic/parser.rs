use std::collections::{HashMap, HashSet};

use super::{Atom, Formula, LogicError, LogicErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Comma,
    Colon,
    LParen,
    RParen,
    And,
    Or,
    Not,
    Arrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{}`", s),
            Tok::Number(n) => format!("number {}", n),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Not => "`~`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(crate) fn lex(text: &str, first_line: usize) -> Result<Vec<Spanned>, LogicError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, first_line, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut push = |tok, len: usize, i: &mut usize, col: &mut usize| {
            out.push(Spanned { tok, line: tl, col: tc });
            *i += len;
            *col += len;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            ':' => push(Tok::Colon, 1, &mut i, &mut col),
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '&' => push(Tok::And, 1, &mut i, &mut col),
            '|' => push(Tok::Or, 1, &mut i, &mut col),
            '~' => push(Tok::Not, 1, &mut i, &mut col),
            '-' if chars.get(i + 1) == Some(&'>') => push(Tok::Arrow, 2, &mut i, &mut col),
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Spanned { tok: Tok::Ident(word), line: tl, col: tc });
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' => {
                let start = i;
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                let value = word.parse::<f64>().map_err(|_| {
                    LogicError::new(LogicErrorKind::Syntax, tl, tc, format!("malformed number `{}`", word))
                })?;
                out.push(Spanned { tok: Tok::Number(value), line: tl, col: tc });
            }
            other => {
                return Err(LogicError::new(
                    LogicErrorKind::Syntax,
                    tl,
                    tc,
                    format!("unexpected character `{}`", other),
                ))
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

const RESERVED: [&str; 2] = ["forall", "exists"];

impl Parser {
    pub(crate) fn new(toks: Vec<Spanned>) -> Self {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, kind: LogicErrorKind, msg: impl Into<String>) -> LogicError {
        let t = self.peek();
        LogicError::new(kind, t.line, t.col, msg)
    }

    fn expect(&mut self, want: Tok, ctx: &str) -> Result<Spanned, LogicError> {
        if self.peek().tok == want {
            Ok(self.bump())
        } else {
            Err(self.err_here(
                LogicErrorKind::Syntax,
                format!("expected {} {}, found {}", want.describe(), ctx, self.peek().tok.describe()),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LogicError> {
        match self.peek().tok.clone() {
            Tok::Ident(s) if s == "exists" => Err(self.err_here(
                LogicErrorKind::Reserved,
                "existential quantification is not supported",
            )),
            Tok::Ident(s) if RESERVED.contains(&s.as_str()) => {
                Err(self.err_here(LogicErrorKind::Reserved, format!("`{}` is reserved and cannot name a {}", s, what)))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.err_here(
                LogicErrorKind::Syntax,
                format!("expected a {}, found {}", what, other.describe()),
            )),
        }
    }

    pub(crate) fn at_number(&self) -> Option<f64> {
        match self.peek().tok {
            Tok::Number(n) => Some(n),
            _ => None,
        }
    }

    pub(crate) fn skip(&mut self) {
        self.bump();
    }

    /// formula := ("forall" ident ("," ident)* ":")* expr
    pub(crate) fn formula(&mut self) -> Result<Formula, LogicError> {
        if matches!(&self.peek().tok, Tok::Ident(s) if s == "forall") {
            self.bump();
            let mut vars = vec![self.ident("variable")?];
            while self.peek().tok == Tok::Comma {
                self.bump();
                vars.push(self.ident("variable")?);
            }
            self.expect(Tok::Colon, "after the quantified variables")?;
            let body = self.formula()?;
            return Ok(Formula::ForAll(vars, Box::new(body)));
        }
        self.expr()
    }

    fn expr(&mut self) -> Result<Formula, LogicError> {
        let lhs = self.or()?;
        if self.peek().tok == Tok::Arrow {
            self.bump();
            let rhs = self.expr()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, LogicError> {
        let mut lhs = self.and()?;
        while self.peek().tok == Tok::Or {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, LogicError> {
        let mut lhs = self.unary()?;
        while self.peek().tok == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LogicError> {
        match self.peek().tok.clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::Not(Box::new(self.unary()?)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "to close the group")?;
                Ok(inner)
            }
            Tok::Ident(s) if s == "forall" => Err(self.err_here(
                LogicErrorKind::NonPrenex,
                "quantifiers may only appear at the start of a formula",
            )),
            Tok::Ident(_) => self.atom(),
            other => Err(self.err_here(
                LogicErrorKind::Syntax,
                format!("expected an atom, `~` or `(`, found {}", other.describe()),
            )),
        }
    }

    fn atom(&mut self) -> Result<Formula, LogicError> {
        let predicate = self.ident("predicate")?;
        let mut args = Vec::new();
        if self.peek().tok == Tok::LParen {
            self.bump();
            if self.peek().tok != Tok::RParen {
                args.push(self.ident("variable")?);
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    args.push(self.ident("variable")?);
                }
            }
            self.expect(Tok::RParen, "to close the argument list")?;
        }
        Ok(Formula::Atom(Atom { predicate, args }))
    }

    pub(crate) fn finish(&mut self) -> Result<(), LogicError> {
        if self.peek().tok == Tok::Eof {
            Ok(())
        } else {
            Err(self.err_here(
                LogicErrorKind::Syntax,
                format!("unexpected {} after the formula", self.peek().tok.describe()),
            ))
        }
    }

    pub(crate) fn position(&self) -> (usize, usize) {
        (self.peek().line, self.peek().col)
    }
}

/// Checks variable binding and arity consistency, recording predicate
/// arities into `signature`.
pub(crate) fn validate(
    f: &Formula,
    signature: &mut HashMap<String, usize>,
    line: usize,
    col: usize,
) -> Result<(), LogicError> {
    let (blocks, body) = f.prefix();
    let mut bound = HashSet::new();
    for v in blocks.iter().flat_map(|b| b.iter()) {
        if !bound.insert(v.as_str()) {
            return Err(LogicError::new(
                LogicErrorKind::DuplicateVariable,
                line,
                col,
                format!("variable `{}` is quantified twice", v),
            ));
        }
    }
    for atom in body.atoms() {
        for a in &atom.args {
            if !bound.contains(a.as_str()) {
                return Err(LogicError::new(
                    LogicErrorKind::Unbound,
                    line,
                    col,
                    format!("variable `{}` in `{}` is not bound by a quantifier", a, atom),
                ));
            }
        }
        match signature.get(&atom.predicate) {
            Some(&n) if n != atom.args.len() => {
                return Err(LogicError::new(
                    LogicErrorKind::Arity,
                    line,
                    col,
                    format!(
                        "predicate `{}` used with {} arguments but earlier with {}",
                        atom.predicate,
                        atom.args.len(),
                        n
                    ),
                ))
            }
            Some(_) => {}
            None => {
                signature.insert(atom.predicate.clone(), atom.args.len());
            }
        }
    }
    Ok(())
}

pub(crate) fn parse_at(text: &str, line: usize, signature: &mut HashMap<String, usize>) -> Result<Formula, LogicError> {
    let mut p = Parser::new(lex(text, line)?);
    let (l, c) = p.position();
    let f = p.formula()?;
    p.finish()?;
    validate(&f, signature, l, c)?;
    Ok(f)
}

/// Parses a single closed formula.
pub fn parse_formula(text: &str) -> Result<Formula, LogicError> {
    parse_at(text, 1, &mut HashMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_grouping() {
        let f = parse_formula("forall x, y: chair(x) & partOf(y, x) -> cushion(y) | armRest(y)").unwrap();
        let expected = Formula::forall(
            &["x", "y"],
            Formula::implies(
                Formula::and(Formula::atom("chair", &["x"]), Formula::atom("partOf", &["y", "x"])),
                Formula::or(Formula::atom("cushion", &["y"]), Formula::atom("armRest", &["y"])),
            ),
        );
        assert_eq!(f, expected);
        let g = parse_formula("a -> b -> c").unwrap();
        assert_eq!(
            g,
            Formula::implies(Formula::atom("a", &[]), Formula::implies(Formula::atom("b", &[]), Formula::atom("c", &[])))
        );
        assert_eq!(parse_formula("~p & q").unwrap(), Formula::and(Formula::not(Formula::atom("p", &[])), Formula::atom("q", &[])));
    }

    #[test]
    fn symmetry_rule() {
        let f = parse_formula("forall x, y: same(x, y) -> same(y, x)").unwrap();
        assert!(matches!(f.matrix(), Formula::Implies(..)));
    }

    #[test]
    fn errors_carry_kind_and_position() {
        let e = parse_formula("forall x: p(x) & forall y: q(y)").unwrap_err();
        assert_eq!(e.kind, LogicErrorKind::NonPrenex);
        assert_eq!((e.line, e.col), (1, 18));
        assert_eq!(parse_formula("forall x: p(y)").unwrap_err().kind, LogicErrorKind::Unbound);
        assert_eq!(parse_formula("forall x: p(x) & p(x, x)").unwrap_err().kind, LogicErrorKind::Arity);
        assert_eq!(parse_formula("exists x: p(x)").unwrap_err().kind, LogicErrorKind::Reserved);
        assert_eq!(parse_formula("forall x: p(x) &").unwrap_err().kind, LogicErrorKind::Syntax);
        assert_eq!(parse_formula("forall x, x: p(x)").unwrap_err().kind, LogicErrorKind::DuplicateVariable);
        assert_eq!(parse_formula("forall x: (p(x)").unwrap_err().kind, LogicErrorKind::Syntax);
        assert_eq!(parse_formula("p $ q").unwrap_err().kind, LogicErrorKind::Syntax);
    }

    #[test]
    fn nullary_atoms() {
        assert_eq!(parse_formula("p()").unwrap(), parse_formula("p").unwrap());
        assert!(parse_formula("p & ~(p & q)").is_ok());
    }
}
