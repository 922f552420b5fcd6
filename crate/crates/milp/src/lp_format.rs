//! CPLEX LP text export.
//!
//! Output is a pure function of the model: variables and rows appear in
//! insertion order and numbers use Rust's shortest round-trip formatting.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::model::{MilpModel, Sense, VarId};

const TERMS_PER_LINE: usize = 8;

/// LP-safe names for every variable, in id order.
///
/// Characters outside `[A-Za-z0-9_.]` become `_`; names that would start
/// with a digit, a period or `e`/`E` get a leading `_`; collisions are
/// resolved with a numeric suffix.
pub fn lp_var_names(model: &MilpModel) -> Vec<String> {
    let mut used = HashSet::new();
    model
        .vars()
        .iter()
        .map(|v| unique(sanitize(&v.name), &mut used))
        .collect()
}

fn lp_row_names(model: &MilpModel, used: &mut HashSet<String>) -> Vec<String> {
    model
        .constraints()
        .iter()
        .map(|c| unique(sanitize(&c.name), used))
        .collect()
}

fn sanitize(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    let first = out.chars().next();
    if matches!(first, None | Some('0'..='9' | '.' | 'e' | 'E')) {
        out.insert(0, '_');
    }
    out
}

fn unique(base: String, used: &mut HashSet<String>) -> String {
    if used.insert(base.clone()) {
        return base;
    }
    let mut k = 2;
    loop {
        let candidate = format!("{base}_{k}");
        if used.insert(candidate.clone()) {
            return candidate;
        }
        k += 1;
    }
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+infinity".into()
    } else if v == f64::NEG_INFINITY {
        "-infinity".into()
    } else {
        format!("{v:?}")
    }
}

fn write_terms(out: &mut String, terms: &[(VarId, f64)], names: &[String]) {
    if terms.is_empty() {
        // LP readers want at least one term per expression
        if let Some(first) = names.first() {
            let _ = write!(out, " 0 {first}");
        }
        return;
    }
    for (i, &(var, coef)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if coef < 0.0 { '-' } else { '+' };
        if i == 0 && sign == '+' {
            let _ = write!(out, " {} {}", num(coef), names[var.0]);
        } else {
            let _ = write!(out, " {sign} {} {}", num(coef.abs()), names[var.0]);
        }
    }
}

/// Renders `model` in CPLEX LP format.
pub fn export_lp(model: &MilpModel) -> String {
    let names = lp_var_names(model);
    let mut used: HashSet<String> = names.iter().cloned().collect();
    used.insert("obj".into());
    let row_names = lp_row_names(model, &mut used);

    let mut out = String::new();
    let _ = writeln!(out, "\\ model {}", model.name());
    let _ = writeln!(
        out,
        "\\ {} variables ({} binary), {} constraints",
        model.num_vars(),
        model.num_binaries(),
        model.num_constraints()
    );
    for (pattern, symbol) in model.symbols() {
        let _ = writeln!(out, "\\ {pattern} : {symbol}");
    }
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, model.objective().unwrap_or(&[]), &names);
    out.push_str("\nSubject To\n");
    for (con, name) in model.constraints().iter().zip(&row_names) {
        let _ = write!(out, " {name}:");
        write_terms(&mut out, &con.terms, &names);
        let op = match con.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", num(con.rhs));
    }
    out.push_str("Bounds\n");
    for (var, name) in model.vars().iter().zip(&names) {
        let (lo, hi) = (var.lower, var.upper);
        if var.is_binary() && lo == 0.0 && hi == 1.0 {
            continue;
        }
        if lo == hi {
            let _ = writeln!(out, " {name} = {}", num(lo));
        } else if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else if lo == 0.0 && hi == f64::INFINITY {
            // default bounds
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", num(lo), num(hi));
        }
    }
    let binaries: Vec<&String> = model
        .vars()
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.is_binary())
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            out.push(' ');
            out.push_str(&chunk.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" "));
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}
