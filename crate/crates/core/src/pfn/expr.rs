//! Expression tree, parser and printer for P functions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! or   := xor ('|' xor)*
//! xor  := and ('^' and)*
//! and  := not ('&' not)*
//! not  := '!' not | atom
//! atom := 'x' | 'y' | 'x'k | 'y'k | 's'k | '0' | '1' | '(' or ')'
//! ```
//!
//! All binary operators are left-associative. `xk`, `yk` and `sk` refer to
//! the k-th most recent measurement, `k >= 1`.

use std::fmt;

use crate::error::{Error, Result};

/// A variable of a P function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    /// Projected `theta` of the k-th previous measurement.
    Xk(usize),
    /// Projected `phi` of the k-th previous measurement.
    Yk(usize),
    /// Outcome of the k-th previous measurement.
    Sk(usize),
}

impl Var {
    /// Memory depth needed to bind this variable.
    pub fn depth(self) -> usize {
        match self {
            Var::X | Var::Y => 0,
            Var::Xk(k) | Var::Yk(k) | Var::Sk(k) => k,
        }
    }

    /// Column of this variable in the fixed order `[x, y, x1, y1, s1, ...]`.
    pub fn column(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::Xk(k) => 3 * k - 1,
            Var::Yk(k) => 3 * k,
            Var::Sk(k) => 3 * k + 1,
        }
    }

    pub fn from_column(col: usize) -> Var {
        match col {
            0 => Var::X,
            1 => Var::Y,
            c => {
                let k = (c + 1) / 3;
                match (c + 1) % 3 {
                    0 => Var::Xk(k),
                    1 => Var::Yk(k),
                    _ => Var::Sk(k),
                }
            }
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X => write!(f, "x"),
            Var::Y => write!(f, "y"),
            Var::Xk(k) => write!(f, "x{k}"),
            Var::Yk(k) => write!(f, "y{k}"),
            Var::Sk(k) => write!(f, "s{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Const(bool),
    Var(Var),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Xor(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

pub fn var(v: Var) -> BoolExpr {
    BoolExpr::Var(v)
}

pub fn not(a: BoolExpr) -> BoolExpr {
    BoolExpr::Not(Box::new(a))
}

pub fn and(a: BoolExpr, b: BoolExpr) -> BoolExpr {
    BoolExpr::And(Box::new(a), Box::new(b))
}

pub fn xor(a: BoolExpr, b: BoolExpr) -> BoolExpr {
    BoolExpr::Xor(Box::new(a), Box::new(b))
}

pub fn or(a: BoolExpr, b: BoolExpr) -> BoolExpr {
    BoolExpr::Or(Box::new(a), Box::new(b))
}

impl BoolExpr {
    /// Largest history index referenced, 0 for memoryless expressions.
    pub fn required_depth(&self) -> usize {
        match self {
            BoolExpr::Const(_) => 0,
            BoolExpr::Var(v) => v.depth(),
            BoolExpr::Not(a) => a.required_depth(),
            BoolExpr::And(a, b) | BoolExpr::Xor(a, b) | BoolExpr::Or(a, b) => {
                a.required_depth().max(b.required_depth())
            }
        }
    }

    /// Evaluates with `value(v)` supplying each variable.
    pub fn eval_with(&self, value: &impl Fn(Var) -> bool) -> bool {
        match self {
            BoolExpr::Const(c) => *c,
            BoolExpr::Var(v) => value(*v),
            BoolExpr::Not(a) => !a.eval_with(value),
            BoolExpr::And(a, b) => a.eval_with(value) && b.eval_with(value),
            BoolExpr::Xor(a, b) => a.eval_with(value) ^ b.eval_with(value),
            BoolExpr::Or(a, b) => a.eval_with(value) || b.eval_with(value),
        }
    }

    /// Evaluates against an assignment indexed by [`Var::column`].
    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.eval_with(&|v| assignment[v.column()])
    }

    fn precedence(&self) -> u8 {
        match self {
            BoolExpr::Or(..) => 1,
            BoolExpr::Xor(..) => 2,
            BoolExpr::And(..) => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for BoolExpr {
    /// Prints in the accepted grammar. A binary operand is parenthesized
    /// whenever its operator differs from the parent's, so sums of products
    /// read `(a&b)|(c&d)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let operand = |f: &mut fmt::Formatter<'_>, parent: &BoolExpr, child: &BoolExpr| {
            let binary = child.precedence() < 4;
            if binary && child.precedence() != parent.precedence() {
                write!(f, "({child})")
            } else {
                write!(f, "{child}")
            }
        };
        let binary = |f: &mut fmt::Formatter<'_>, a: &BoolExpr, op: char, b: &BoolExpr| {
            operand(f, self, a)?;
            write!(f, "{op}")?;
            if b.precedence() == self.precedence() {
                // Right-nested chains need parentheses to keep the same tree.
                write!(f, "({b})")
            } else {
                operand(f, self, b)
            }
        };
        match self {
            BoolExpr::Const(c) => write!(f, "{}", u8::from(*c)),
            BoolExpr::Var(v) => write!(f, "{v}"),
            BoolExpr::Not(a) => {
                if a.precedence() < 4 {
                    write!(f, "!({a})")
                } else {
                    write!(f, "!{a}")
                }
            }
            BoolExpr::And(a, b) => binary(f, a, '&', b),
            BoolExpr::Xor(a, b) => binary(f, a, '^', b),
            BoolExpr::Or(a, b) => binary(f, a, '|', b),
        }
    }
}

/// Parses `text`, rejecting history variables deeper than `depth`.
pub fn parse_expr(text: &str, depth: usize) -> Result<BoolExpr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        depth,
    };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(Error::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let e = p.or()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<BoolExpr> {
        let mut lhs = self.xor()?;
        while self.eat(b'|') {
            lhs = or(lhs, self.xor()?);
        }
        Ok(lhs)
    }

    fn xor(&mut self) -> Result<BoolExpr> {
        let mut lhs = self.and()?;
        while self.eat(b'^') {
            lhs = xor(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<BoolExpr> {
        let mut lhs = self.not()?;
        while self.eat(b'&') {
            lhs = and(lhs, self.not()?);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<BoolExpr> {
        if self.eat(b'!') {
            return Ok(not(self.not()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<BoolExpr> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Err(self.error("unexpected end of expression"));
        };
        self.pos += 1;
        match c {
            b'0' => Ok(BoolExpr::Const(false)),
            b'1' => Ok(BoolExpr::Const(true)),
            b'(' => {
                let e = self.or()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            b'x' | b'y' | b's' => {
                let digits_start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                    return Err(self.error("unknown identifier"));
                }
                let digits = std::str::from_utf8(&self.src[digits_start..self.pos]).unwrap_or("");
                if digits.is_empty() {
                    return match c {
                        b'x' => Ok(var(Var::X)),
                        b'y' => Ok(var(Var::Y)),
                        _ => Err(Error::Syntax {
                            pos: start,
                            msg: "`s` needs a history index".into(),
                        }),
                    };
                }
                let k: usize = match digits.parse() {
                    Ok(k) if k >= 1 && !digits.starts_with('0') => k,
                    _ => {
                        return Err(Error::Syntax {
                            pos: digits_start,
                            msg: format!("invalid history index `{digits}`"),
                        })
                    }
                };
                let v = match c {
                    b'x' => Var::Xk(k),
                    b'y' => Var::Yk(k),
                    _ => Var::Sk(k),
                };
                if k > self.depth {
                    return Err(Error::Arity {
                        var: v.to_string(),
                        depth: self.depth,
                    });
                }
                Ok(var(v))
            }
            _ => {
                self.pos = start;
                Err(self.error(format!("unexpected `{}`", c as char)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> BoolExpr {
        var(Var::X)
    }
    fn y() -> BoolExpr {
        var(Var::Y)
    }

    #[test]
    fn parses_examples() {
        assert_eq!(parse_expr("x|y", 0).unwrap(), or(x(), y()));
        assert_eq!(parse_expr("x&y", 0).unwrap(), and(x(), y()));
        assert_eq!(
            parse_expr("s1 & !x1 | y", 1).unwrap(),
            or(and(var(Var::Sk(1)), not(var(Var::Xk(1)))), y())
        );
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse_expr("x|y^x&y", 0).unwrap(), or(x(), xor(y(), and(x(), y()))));
        assert_eq!(parse_expr("x^y^1", 0).unwrap(), xor(xor(x(), y()), BoolExpr::Const(true)));
        assert_eq!(parse_expr("!!x", 0).unwrap(), not(not(x())));
        assert_eq!(parse_expr(" ( x | y ) & 0 ", 0).unwrap(), and(or(x(), y()), BoolExpr::Const(false)));
    }

    #[test]
    fn syntax_errors_carry_position() {
        assert_eq!(parse_expr("", 0).unwrap_err(), Error::Syntax { pos: 0, msg: "empty expression".into() });
        assert!(matches!(parse_expr("x|", 0), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(parse_expr("x y", 0), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(parse_expr("(x", 0), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(parse_expr("z", 0), Err(Error::Syntax { pos: 0, .. })));
        assert!(matches!(parse_expr("x0", 1), Err(Error::Syntax { pos: 1, .. })));
        assert!(matches!(parse_expr("s", 1), Err(Error::Syntax { pos: 0, .. })));
        assert!(matches!(parse_expr("xy", 0), Err(Error::Syntax { .. })));
    }

    #[test]
    fn arity_errors() {
        assert_eq!(
            parse_expr("x1", 0).unwrap_err(),
            Error::Arity { var: "x1".into(), depth: 0 }
        );
        assert!(parse_expr("s3|y2", 3).is_ok());
        assert!(matches!(parse_expr("s3|y2", 2), Err(Error::Arity { .. })));
    }

    #[test]
    fn columns_round_trip() {
        for col in 0..14 {
            assert_eq!(Var::from_column(col).column(), col);
        }
        assert_eq!(Var::Xk(1).column(), 2);
        assert_eq!(Var::Sk(1).column(), 4);
        assert_eq!(Var::Sk(4).column(), 13);
    }

    #[test]
    fn rendering() {
        assert_eq!(or(or(and(not(x()), y()), and(x(), not(y()))), and(x(), y())).to_string(), "(!x&y)|(x&!y)|(x&y)");
        assert_eq!(or(x(), or(y(), x())).to_string(), "x|(y|x)");
        assert_eq!(not(and(x(), y())).to_string(), "!(x&y)");
        assert_eq!(parse_expr("s1 & !x1 | y", 1).unwrap().to_string(), "(s1&!x1)|y");
    }
}
