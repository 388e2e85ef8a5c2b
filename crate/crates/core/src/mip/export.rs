//! Text exports (free MPS and CPLEX-style LP) and the solution import that
//! inverts them. Grammars are documented in `docs/formats.md`.

use std::fmt::Write as _;

use crate::error::MipError;

use super::encode::Assignment;
use super::model::{MipModel, Sense, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Mps,
    Lp,
}

impl std::str::FromStr for ExportFormat {
    type Err = MipError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mps" => Ok(ExportFormat::Mps),
            "lp" => Ok(ExportFormat::Lp),
            other => Err(MipError::UnsupportedFormat(other.to_string())),
        }
    }
}

pub fn export_model(model: &MipModel, format: ExportFormat) -> String {
    match format {
        ExportFormat::Mps => export_mps(model),
        ExportFormat::Lp => export_lp(model),
    }
}

fn sense_row_tag(sense: Sense) -> char {
    match sense {
        Sense::Le => 'L',
        Sense::Eq => 'E',
        Sense::Ge => 'G',
    }
}

fn export_mps(model: &MipModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", model.name);
    out.push_str("ROWS\n");
    out.push_str(" N COST\n");
    for c in model.constraints() {
        let _ = writeln!(out, " {} {}", sense_row_tag(c.sense), c.name);
    }

    // Column-major coefficient lists.
    let nvars = model.variables().len();
    let mut columns: Vec<Vec<(String, f64)>> = vec![Vec::new(); nvars];
    for (idx, coef) in model.objective() {
        columns[*idx].push(("COST".to_string(), *coef));
    }
    for c in model.constraints() {
        for (idx, coef) in &c.terms {
            columns[*idx].push((c.name.clone(), *coef));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_integer_block = false;
    let mut marker_count = 0usize;
    for (variable, column) in model.variables().iter().zip(&columns) {
        let integral = matches!(variable.kind, VarKind::Binary | VarKind::Integer);
        if integral != in_integer_block {
            let tag = if integral { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, " MARKER{marker_count} 'MARKER' '{tag}'");
            marker_count += 1;
            in_integer_block = integral;
        }
        if column.is_empty() {
            // Keep the variable visible to parsers.
            let _ = writeln!(out, " {} COST 0", variable.name);
            continue;
        }
        for (row, coef) in column {
            let _ = writeln!(out, " {} {} {}", variable.name, row, fmt_num(*coef));
        }
    }
    if in_integer_block {
        let _ = writeln!(out, " MARKER{marker_count} 'MARKER' 'INTEND'");
    }

    out.push_str("RHS\n");
    for c in model.constraints() {
        if c.rhs != 0.0 {
            let _ = writeln!(out, " RHS {} {}", c.name, fmt_num(c.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for variable in model.variables() {
        match variable.kind {
            VarKind::Binary => {
                let _ = writeln!(out, " BV BND {}", variable.name);
            }
            _ => {
                if variable.lower == f64::NEG_INFINITY && variable.upper == f64::INFINITY {
                    let _ = writeln!(out, " FR BND {}", variable.name);
                    continue;
                }
                if variable.lower != 0.0 && variable.lower != f64::NEG_INFINITY {
                    let _ = writeln!(out, " LO BND {} {}", variable.name, fmt_num(variable.lower));
                } else if variable.lower == f64::NEG_INFINITY {
                    let _ = writeln!(out, " MI BND {}", variable.name);
                }
                if variable.upper != f64::INFINITY {
                    let _ = writeln!(out, " UP BND {} {}", variable.name, fmt_num(variable.upper));
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Signed term like `+ 2.5 x` / `- 1 y`.
fn push_term(out: &mut String, first: bool, coef: f64, name: &str) {
    if coef >= 0.0 {
        if !first {
            out.push_str(" + ");
        }
    } else {
        out.push_str(if first { "- " } else { " - " });
    }
    let _ = write!(out, "{} {}", fmt_num(coef.abs()), name);
}

fn export_lp(model: &MipModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    out.push_str("Minimize\n obj:");
    let names: Vec<&str> = model.variables().iter().map(|v| v.name.as_str()).collect();
    let mut on_line = 0;
    let mut first = true;
    for (idx, coef) in model.objective() {
        if on_line == 8 {
            out.push_str("\n   ");
            on_line = 0;
        }
        out.push(' ');
        push_term(&mut out, first, *coef, names[*idx]);
        first = false;
        on_line += 1;
    }
    out.push_str("\nSubject To\n");
    for c in model.constraints() {
        let _ = write!(out, " {}:", c.name);
        let mut first = true;
        let mut on_line = 0;
        for (idx, coef) in &c.terms {
            if on_line == 8 {
                out.push_str("\n   ");
                on_line = 0;
            }
            out.push(' ');
            push_term(&mut out, first, *coef, names[*idx]);
            first = false;
            on_line += 1;
        }
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {} {}", op, fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for variable in model.variables() {
        if variable.kind == VarKind::Binary {
            continue; // the Binaries section implies [0, 1]
        }
        if variable.lower == f64::NEG_INFINITY && variable.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", variable.name);
        } else if variable.lower == f64::NEG_INFINITY {
            let _ = writeln!(out, " -inf <= {} <= {}", variable.name, fmt_num(variable.upper));
        } else if variable.upper == f64::INFINITY {
            if variable.lower != 0.0 {
                let _ = writeln!(out, " {} >= {}", variable.name, fmt_num(variable.lower));
            }
        } else {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                fmt_num(variable.lower),
                variable.name,
                fmt_num(variable.upper)
            );
        }
    }
    let binaries: Vec<&str> = model
        .variables()
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    let generals: Vec<&str> = model
        .variables()
        .iter()
        .filter(|v| v.kind == VarKind::Integer)
        .map(|v| v.name.as_str())
        .collect();
    if !generals.is_empty() {
        out.push_str("Generals\n");
        for chunk in generals.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

/// Parses a solution file: one `variable value` pair per line, `#` and `\`
/// comments skipped. Variables the file does not mention are taken as zero
/// (solution files routinely omit zeros); unknown names are an error.
pub fn import_solution(model: &MipModel, text: &str) -> Result<Assignment, MipError> {
    let mut assignment = Assignment::default();
    for variable in model.variables() {
        assignment.set(variable.name.clone(), 0.0);
    }
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('\\') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let name = parts.next().unwrap();
        let value_str = parts.next().ok_or(MipError::BadSolutionLine {
            line: line_no,
            message: "expected `variable value`".to_string(),
        })?;
        if model.variable_index(name).is_none() {
            return Err(MipError::UnknownVariable(name.to_string()));
        }
        let value: f64 = value_str.parse().map_err(|_| MipError::BadSolutionLine {
            line: line_no,
            message: format!("bad value `{value_str}`"),
        })?;
        assignment.set(name.to_string(), value);
    }
    Ok(assignment)
}
