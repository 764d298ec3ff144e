//! Truth tables and canonical normal forms.
//!
//! Rows enumerate assignments of `[x, y, x1, y1, s1, ..., xn, yn, sn]` with
//! `x` as the most significant bit of the row index. The hex form lists the
//! bits row 0 first, four rows per digit, row 0 in the digit's high bit.

use std::fmt;

use super::expr::{and, not, or, var, BoolExpr, Var};
use super::MAX_MEMORY_DEPTH;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    memory_depth: usize,
    bits: Vec<bool>,
}

/// Number of variables at memory depth `n`.
pub fn arity(n: usize) -> usize {
    2 + 3 * n
}

fn check_depth(n: usize) -> Result<()> {
    if n > MAX_MEMORY_DEPTH {
        Err(Error::Capacity(n))
    } else {
        Ok(())
    }
}

impl TruthTable {
    pub fn from_bits(memory_depth: usize, bits: Vec<bool>) -> Result<Self> {
        check_depth(memory_depth)?;
        let len = 1usize << arity(memory_depth);
        if bits.len() != len {
            return Err(Error::Table(format!(
                "depth {memory_depth} needs {len} rows, got {}",
                bits.len()
            )));
        }
        Ok(TruthTable { memory_depth, bits })
    }

    pub fn from_hex(memory_depth: usize, hex: &str) -> Result<Self> {
        check_depth(memory_depth)?;
        let digits = (1usize << arity(memory_depth)) / 4;
        let hex = hex.trim();
        let hex = hex.strip_prefix("0x").unwrap_or(hex);
        if hex.len() != digits {
            return Err(Error::Table(format!(
                "depth {memory_depth} needs {digits} hex digits, got {}",
                hex.len()
            )));
        }
        let mut bits = Vec::with_capacity(digits * 4);
        for (i, c) in hex.chars().enumerate() {
            let d = c
                .to_digit(16)
                .ok_or_else(|| Error::Table(format!("invalid hex digit `{c}` at position {i}")))?;
            bits.extend((0..4).rev().map(|b| (d >> b) & 1 == 1));
        }
        Ok(TruthTable { memory_depth, bits })
    }

    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|c| {
                let d = c.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
                char::from_digit(d, 16).unwrap_or('0')
            })
            .collect()
    }

    pub fn memory_depth(&self) -> usize {
        self.memory_depth
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn arity(&self) -> usize {
        arity(self.memory_depth)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// The assignment of row `row`, indexed by [`Var::column`].
    pub fn assignment(&self, row: usize) -> Vec<bool> {
        row_assignment(self.arity(), row)
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

fn row_assignment(arity: usize, row: usize) -> Vec<bool> {
    (0..arity).map(|c| (row >> (arity - 1 - c)) & 1 == 1).collect()
}

/// Evaluates `e` on every row of the depth-`n` table.
pub fn to_truth_table(e: &BoolExpr, n: usize) -> Result<TruthTable> {
    check_depth(n)?;
    let needed = e.required_depth();
    if needed > n {
        return Err(Error::Arity {
            var: format!("depth {needed}"),
            depth: n,
        });
    }
    let k = arity(n);
    let bits = (0..1usize << k).map(|row| e.eval(&row_assignment(k, row))).collect();
    Ok(TruthTable { memory_depth: n, bits })
}

fn literal(col: usize, positive: bool) -> BoolExpr {
    let v = var(Var::from_column(col));
    if positive {
        v
    } else {
        not(v)
    }
}

fn fold(mut terms: impl Iterator<Item = BoolExpr>, op: fn(BoolExpr, BoolExpr) -> BoolExpr) -> Option<BoolExpr> {
    let first = terms.next()?;
    Some(terms.fold(first, op))
}

/// Minterm expansion, one conjunct per 1-row. The all-zero table gives `0`.
pub fn to_dnf(t: &TruthTable) -> BoolExpr {
    let k = t.arity();
    let terms = t.bits.iter().enumerate().filter(|(_, &b)| b).map(|(row, _)| {
        let a = row_assignment(k, row);
        fold((0..k).map(|c| literal(c, a[c])), and).unwrap_or(BoolExpr::Const(true))
    });
    fold(terms, or).unwrap_or(BoolExpr::Const(false))
}

/// Maxterm expansion, one disjunct per 0-row. The all-one table gives `1`.
pub fn to_cnf(t: &TruthTable) -> BoolExpr {
    let k = t.arity();
    let terms = t.bits.iter().enumerate().filter(|(_, &b)| !b).map(|(row, _)| {
        let a = row_assignment(k, row);
        fold((0..k).map(|c| literal(c, !a[c])), or).unwrap_or(BoolExpr::Const(false))
    });
    fold(terms, and).unwrap_or(BoolExpr::Const(true))
}
