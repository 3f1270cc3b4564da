//! CPLEX-style LP text export.

use std::io::Write;

use super::{LinearProgram, Sense};
use crate::error::Result;

fn var_name(lp: &LinearProgram, j: usize) -> String {
    match &lp.names {
        Some(names) => names[j].clone(),
        None => format!("x{j}"),
    }
}

fn write_terms(out: &mut impl Write, lp: &LinearProgram, terms: &[(usize, f64)]) -> Result<()> {
    let mut first = true;
    for &(j, a) in terms {
        if a == 0.0 {
            continue;
        }
        let sign = if a < 0.0 { " -" } else if first { "" } else { " +" };
        write!(out, "{sign} {:e} {}", a.abs(), var_name(lp, j))?;
        first = false;
    }
    if first {
        write!(out, " 0 {}", var_name(lp, 0))?;
    }
    Ok(())
}

/// Writes `lp` in CPLEX LP format. Variables carry the default bound `≥ 0`.
pub fn write_lp_text(lp: &LinearProgram, out: &mut impl Write) -> Result<()> {
    writeln!(out, "Minimize")?;
    write!(out, " obj:")?;
    let obj: Vec<(usize, f64)> = lp.objective.iter().copied().enumerate().collect();
    write_terms(out, lp, &obj)?;
    writeln!(out)?;
    writeln!(out, "Subject To")?;
    for (i, row) in lp.rows.iter().enumerate() {
        write!(out, " c{i}:")?;
        write_terms(out, lp, &row.coeffs)?;
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
        };
        writeln!(out, " {op} {:e}", row.rhs)?;
    }
    writeln!(out, "End")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, -2.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        let mut buf = Vec::new();
        write_lp_text(&lp, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "Minimize\n obj: 1e0 x0 - 2e0 x1\nSubject To\n c0: 1e0 x0 + 1e0 x1 = 1e0\nEnd\n"
        );
    }
}
