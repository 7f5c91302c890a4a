//! Fixed-format MPS export.
//!
//! Rows are named `R0000001..` and columns `C0000001..`, all constraints are
//! `G` rows, every column is declared free, and the objective row is `COST`
//! with sense `MIN`. Numbers use the shortest decimal that round-trips, so a
//! value can run past the 12-character field; each data line carries a single
//! entry so nothing follows an over-long number.

use std::io::Write;

use super::LpProblem;
use crate::error::Result;

pub const OBJECTIVE_ROW: &str = "COST";

pub fn row_name(i: usize) -> String {
    format!("R{:07}", i + 1)
}

pub fn column_name(j: usize) -> String {
    format!("C{:07}", j + 1)
}

fn number(v: f64) -> String {
    // `{:?}` is the shortest representation that parses back to the same f64
    format!("{v:?}")
}

fn entry(out: &mut impl Write, name: &str, row: &str, value: f64) -> std::io::Result<()> {
    writeln!(out, "    {name:<8}  {row:<8}  {}", number(value))
}

/// Writes `prob` as fixed-format MPS. Exact zeros in the matrix are omitted.
pub fn write_mps(prob: &LpProblem, name: &str, out: &mut impl Write) -> Result<()> {
    let (m, n) = (prob.num_rows(), prob.num_cols());
    writeln!(out, "NAME          {name}")?;
    writeln!(out, "OBJSENSE")?;
    writeln!(out, "    MIN")?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N  {OBJECTIVE_ROW}")?;
    for i in 0..m {
        writeln!(out, " G  {}", row_name(i))?;
    }
    writeln!(out, "COLUMNS")?;
    for j in 0..n {
        let col = column_name(j);
        let c = prob.objective()[j];
        if c != 0.0 {
            entry(out, &col, OBJECTIVE_ROW, c)?;
        }
        for i in 0..m {
            let a = prob.row(i)[j];
            if a != 0.0 {
                entry(out, &col, &row_name(i), a)?;
            }
        }
    }
    writeln!(out, "RHS")?;
    for i in 0..m {
        let b = prob.bound(i);
        if b != 0.0 {
            entry(out, "RHS", &row_name(i), b)?;
        }
    }
    writeln!(out, "BOUNDS")?;
    for j in 0..n {
        writeln!(out, " FR BND       {}", column_name(j))?;
    }
    writeln!(out, "ENDATA")?;
    Ok(())
}

pub fn to_mps_string(prob: &LpProblem, name: &str) -> String {
    let mut buf = Vec::new();
    write_mps(prob, name, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("MPS output is ASCII")
}
