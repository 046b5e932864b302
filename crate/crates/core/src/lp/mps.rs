//! Fixed-format MPS export.
//!
//! Rows are named `R0001..` in the order equality rows, then `>=` rows; columns
//! are `C0001..`. The objective row is `OBJ`. A maximization problem carries an
//! `OBJSENSE MAX` section. All variables have the default bounds `[0, ∞)`, so
//! the `BOUNDS` section is empty.

use std::fmt::Write;

use super::{LinearProgram, Sense};

const OBJ_ROW: &str = "OBJ";

fn row_name(k: usize) -> String {
    format!("R{:04}", k + 1)
}

fn col_name(j: usize) -> String {
    format!("C{:04}", j + 1)
}

/// Formats `v` with 12 significant digits, `%g` style.
pub(crate) fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}E{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn entry_line(out: &mut String, first: &str, second: &str, value: f64) {
    writeln!(
        out,
        "    {:<8}  {:<8}  {:>12}",
        first,
        second,
        format_number(value)
    )
    .expect("string write");
}

/// Renders `lp` as fixed-format MPS text.
pub fn write_mps(lp: &LinearProgram) -> String {
    let mut out = String::new();
    out.push_str("NAME          CONEKIT\n");
    if lp.sense() == Sense::Maximize {
        out.push_str("OBJSENSE\n    MAX\n");
    }
    out.push_str("ROWS\n");
    writeln!(out, " N  {OBJ_ROW}").expect("string write");
    let rows: Vec<(&'static str, &super::SparseRow, f64)> = lp
        .eq_rows()
        .iter()
        .map(|(r, b)| ("E", r, *b))
        .chain(lp.ge_rows().iter().map(|(r, b)| ("G", r, *b)))
        .collect();
    for (k, (kind, _, _)) in rows.iter().enumerate() {
        writeln!(out, " {kind}  {}", row_name(k)).expect("string write");
    }

    // column-major view
    let mut columns: Vec<Vec<(String, f64)>> = vec![Vec::new(); lp.num_vars()];
    for &(j, v) in lp.objective().entries() {
        columns[j].push((OBJ_ROW.to_string(), v));
    }
    for (k, (_, row, _)) in rows.iter().enumerate() {
        for &(j, v) in row.entries() {
            columns[j].push((row_name(k), v));
        }
    }

    out.push_str("COLUMNS\n");
    for (j, entries) in columns.iter().enumerate() {
        let name = col_name(j);
        if entries.is_empty() {
            entry_line(&mut out, &name, OBJ_ROW, 0.0);
        }
        for (row, v) in entries {
            entry_line(&mut out, &name, row, *v);
        }
    }
    out.push_str("RHS\n");
    for (k, (_, _, b)) in rows.iter().enumerate() {
        if *b != 0.0 {
            entry_line(&mut out, "RHS", &row_name(k), *b);
        }
    }
    out.push_str("BOUNDS\n");
    out.push_str("ENDATA\n");
    out
}
