//! Recursive-descent parser for the concrete formula syntax.
//!
//! ```text
//! or      := and ('|' and)*
//! and     := unary ('&' unary)*
//! unary   := '!' unary
//!          | ('G' | 'F') window unary
//!          | ('AND' | 'OR') '{' num (',' num)* '}' '(' or (';' or)* ')'
//!          | 'TRUE' | 'FALSE'
//!          | 'h' int ('>' | '<=') num
//!          | '(' or ')'
//! window  := '[' int ',' int (']' | ')')
//! ```
//!
//! A window closed with `)` is half-open and normalizes to `[a, b-1]`.

use super::ast::{Cmp, Formula};
use super::ParseError;

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let f = p.or()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ParseError::syntax(p.pos, "unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ParseError::syntax(self.pos, format!("expected '{}'", c as char)))
        }
    }

    fn keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        let end = self.pos + word.len();
        if self.src.get(self.pos..end) == Some(word.as_bytes())
            && !self.src.get(end).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos = end;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut items = vec![self.and()?];
        while self.eat(b'|') {
            items.push(self.and()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Formula::Or(items) })
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut items = vec![self.unary()?];
        while self.eat(b'&') {
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Formula::And(items) })
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(ParseError::syntax(self.pos, "unexpected end of input")),
            Some(b'!') => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(b'(') => {
                self.pos += 1;
                let f = self.or()?;
                self.expect(b')')?;
                Ok(f)
            }
            Some(b'h') => self.predicate(),
            Some(b'G' | b'F') if self.src.get(self.pos + 1).is_some_and(|c| c.is_ascii_whitespace() || *c == b'[') => {
                let always = self.src[self.pos] == b'G';
                self.pos += 1;
                let (a, b) = self.window()?;
                let child = self.unary()?;
                Ok(if always {
                    Formula::Always { a, b, child: Box::new(child) }
                } else {
                    Formula::Eventually { a, b, child: Box::new(child) }
                })
            }
            _ => {
                if self.keyword("TRUE") {
                    Ok(Formula::True)
                } else if self.keyword("FALSE") {
                    Ok(Formula::falsum())
                } else if self.keyword("AND") {
                    let (weights, children) = self.weighted(start)?;
                    Ok(Formula::WAnd { weights, children })
                } else if self.keyword("OR") {
                    let (weights, children) = self.weighted(start)?;
                    Ok(Formula::WOr { weights, children })
                } else {
                    Err(ParseError::syntax(self.pos, "expected a formula"))
                }
            }
        }
    }

    fn predicate(&mut self) -> Result<Formula, ParseError> {
        self.pos += 1; // 'h'
        let at = self.pos;
        let class = self.integer()?;
        if class == 0 {
            return Err(ParseError::semantic(at, "predicate classes are 1-based"));
        }
        self.skip_ws();
        let cmp = if self.src[self.pos..].starts_with(b"<=") {
            self.pos += 2;
            Cmp::Le
        } else if self.src[self.pos..].starts_with(b">=") || self.src[self.pos..].starts_with(b"<") {
            return Err(ParseError::syntax(
                self.pos,
                "only '>' and '<=' comparisons are supported",
            ));
        } else if self.eat(b'>') {
            Cmp::Gt
        } else {
            return Err(ParseError::syntax(self.pos, "expected '>' or '<='"));
        };
        let threshold = self.number()?;
        Ok(Formula::pred(class, cmp, threshold))
    }

    fn window(&mut self) -> Result<(usize, usize), ParseError> {
        let start = self.pos;
        self.expect(b'[')?;
        let a = self.integer()?;
        self.expect(b',')?;
        let b = self.integer()?;
        if self.eat(b']') {
            if a > b {
                return Err(ParseError::empty_window(start, a, b));
            }
            Ok((a, b))
        } else if self.eat(b')') {
            if b == 0 || b - 1 < a {
                return Err(ParseError::empty_window(start, a, b.saturating_sub(1)));
            }
            Ok((a, b - 1))
        } else {
            Err(ParseError::syntax(self.pos, "expected ']' or ')' closing the window"))
        }
    }

    fn weighted(&mut self, start: usize) -> Result<(Vec<f64>, Vec<Formula>), ParseError> {
        self.expect(b'{')?;
        let mut weights = vec![self.number()?];
        while self.eat(b',') {
            weights.push(self.number()?);
        }
        self.expect(b'}')?;
        self.expect(b'(')?;
        let mut children = vec![self.or()?];
        while self.eat(b';') {
            children.push(self.or()?);
        }
        self.expect(b')')?;
        if weights.len() != children.len() {
            return Err(ParseError::semantic(
                start,
                format!("{} weights for {} subformulas", weights.len(), children.len()),
            ));
        }
        if weights.iter().any(|w| *w <= 0.0) {
            return Err(ParseError::semantic(start, "weights must be strictly positive"));
        }
        Ok((weights, children))
    }

    fn integer(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ParseError::syntax(start, "expected a nonnegative integer"))
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        if i < s.len() && (s[i] == b'-' || s[i] == b'+') {
            i += 1;
        }
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'-' || s[j] == b'+') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                i = j;
                while i < s.len() && s[i].is_ascii_digit() {
                    i += 1;
                }
            }
        }
        let value = std::str::from_utf8(&s[start..i])
            .ok()
            .and_then(|t| t.parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(|| ParseError::syntax(start, "expected a number"))?;
        self.pos = i;
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::ParseErrorKind;

    #[test]
    fn parses_learned_conjunct() {
        let f = parse_formula("G[19,49](h1 <= -4.0) & G[36,47](h2 > 3.1)").unwrap();
        let expected = Formula::And(vec![
            Formula::always(19, 49, Formula::pred(1, Cmp::Le, -4.0)).unwrap(),
            Formula::always(36, 47, Formula::pred(2, Cmp::Gt, 3.1)).unwrap(),
        ]);
        assert_eq!(f, expected);
    }

    #[test]
    fn literal_and_empty_window() {
        assert_eq!(parse_formula("TRUE").unwrap(), Formula::True);
        let err = parse_formula("F[5,3](h1 > 0)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::EmptyWindow);
        assert_eq!(err.pos, 1);
    }

    #[test]
    fn half_open_windows_normalize() {
        let f = parse_formula("F[0,30)G[0,60) h5 > 0 & G[0,60)(h4 <= 0)").unwrap();
        let expected = Formula::And(vec![
            Formula::eventually(
                0,
                29,
                Formula::always(0, 59, Formula::pred(5, Cmp::Gt, 0.0)).unwrap(),
            )
            .unwrap(),
            Formula::always(0, 59, Formula::pred(4, Cmp::Le, 0.0)).unwrap(),
        ]);
        assert_eq!(f, expected);
        assert!(parse_formula("G[3,3)(h1 > 0)").is_err());
    }

    #[test]
    fn weighted_nodes() {
        let f = parse_formula("AND{2.8,0.6,0.1}(h1 > 0; TRUE; !h2 <= 1)").unwrap();
        match &f {
            Formula::WAnd { weights, children } => {
                assert_eq!(weights, &vec![2.8, 0.6, 0.1]);
                assert_eq!(children.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(f.to_string(), "AND{2.8,0.6,0.1}(h1 > 0; TRUE; !(h2 <= 1))");
        assert!(parse_formula("AND{1,2}(TRUE)").is_err());
        assert!(parse_formula("OR{1,-2}(TRUE; TRUE)").is_err());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_formula("h1 >").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        assert_eq!(e.pos, 4);
        assert!(parse_formula("h1 < 3").is_err());
        assert!(parse_formula("h0 > 3").is_err());
        assert!(parse_formula("(h1 > 3").is_err());
        assert!(parse_formula("h1 > 3 h2").is_err());
        assert!(parse_formula("G[1,2]").is_err());
    }

    #[test]
    fn precedence_and_whitespace() {
        let a = parse_formula("!h1>0&h2<=1|TRUE").unwrap();
        let b = parse_formula("  ( (!(h1 > 0)) & (h2 <= 1) ) | TRUE ").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "(!(h1 > 0) & h2 <= 1) | TRUE");
    }
}
