//! LP-format text export and the matching parser.
//!
//! The writer emits every variable in the Bounds section in creation order,
//! and the parser registers variables from that section first, so a
//! write/parse round trip reproduces the model exactly — including variable
//! ids, term order, and bit-identical coefficients (floats are printed with
//! the shortest representation that parses back to the same value).

use super::model::{MilpModel, Sense, VarId, VarKind};
use super::MilpError;
use std::collections::HashMap;
use std::fmt::Write as _;

pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    let _ = writeln!(out, "\\ big_m {}", fmt_f(model.big_m));
    out.push_str("Minimize\n obj:");
    let mut first = true;
    for (j, v) in model.vars().iter().enumerate() {
        if v.obj != 0.0 {
            push_term(&mut out, &mut first, v.obj, &model.vars()[j].name);
        }
    }
    out.push('\n');
    out.push_str("Subject To\n");
    for c in model.constraints() {
        let _ = write!(out, " {}:", c.name);
        let mut first = true;
        for &(vid, coef) in &c.terms {
            push_term(&mut out, &mut first, coef, &model.var(vid).name);
        }
        if first {
            out.push_str(" 0");
        }
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {} {}", sense, fmt_f(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in model.vars() {
        match (v.lb.is_finite(), v.ub.is_finite()) {
            (true, true) if v.lb == v.ub => {
                let _ = writeln!(out, " {} = {}", v.name, fmt_f(v.lb));
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {} <= {}", fmt_f(v.lb), v.name, fmt_f(v.ub));
            }
            (true, false) => {
                let _ = writeln!(out, " {} >= {}", v.name, fmt_f(v.lb));
            }
            (false, true) => {
                let _ = writeln!(out, " {} <= {}", v.name, fmt_f(v.ub));
            }
            (false, false) => {
                let _ = writeln!(out, " {} free", v.name);
            }
        }
    }
    let binaries: Vec<&str> = model
        .vars()
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for name in binaries {
            let _ = writeln!(out, " {name}");
        }
    }
    out.push_str("End\n");
    out
}

fn push_term(out: &mut String, first: &mut bool, coef: f64, name: &str) {
    let sign = if coef < 0.0 || (coef == 0.0 && coef.is_sign_negative()) { "-" } else { "+" };
    if *first {
        if sign == "-" {
            let _ = write!(out, " - {} {}", fmt_f(coef.abs()), name);
        } else {
            let _ = write!(out, " {} {}", fmt_f(coef.abs()), name);
        }
        *first = false;
    } else {
        let _ = write!(out, " {} {} {}", sign, fmt_f(coef.abs()), name);
    }
}

fn fmt_f(v: f64) -> String {
    // shortest round-trip formatting; integral values still carry no suffix
    format!("{v}")
}

enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Done,
}

/// Parse LP text produced by [`write_lp`]. Variables are registered in
/// Bounds-section order, which is creation order, so ids match the source
/// model.
pub fn parse_lp(text: &str) -> Result<MilpModel, MilpError> {
    // first pass: variable order from the Bounds section
    let mut model = MilpModel::new("");
    let mut ids: HashMap<String, VarId> = HashMap::new();
    let mut in_bounds = false;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.eq_ignore_ascii_case("bounds") {
            in_bounds = true;
            continue;
        }
        if in_bounds {
            if is_section_header(line) {
                break;
            }
            if line.is_empty() || line.starts_with('\\') {
                continue;
            }
            let (name, lb, ub) = parse_bound_line(line, ln + 1)?;
            if ids.contains_key(&name) {
                return Err(MilpError::LpParse {
                    line: ln + 1,
                    msg: format!("duplicate bound for {name}"),
                });
            }
            let id = model.add_continuous(name.clone(), lb, ub);
            ids.insert(name, id);
        }
    }

    // second pass: metadata, objective, constraints, binaries
    let mut section = Section::Preamble;
    let mut header_comments = 0usize;
    for (ln, raw) in text.lines().enumerate() {
        let lineno = ln + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('\\') {
            let comment = comment.trim();
            if header_comments == 0 {
                model.name = comment.to_string();
            } else if let Some(v) = comment.strip_prefix("big_m ") {
                model.big_m = parse_num(v, lineno)?;
            }
            header_comments += 1;
            continue;
        }
        if line.eq_ignore_ascii_case("minimize") {
            section = Section::Objective;
            continue;
        }
        if line.eq_ignore_ascii_case("subject to") {
            section = Section::Constraints;
            continue;
        }
        if line.eq_ignore_ascii_case("bounds") {
            section = Section::Bounds;
            continue;
        }
        if line.eq_ignore_ascii_case("binaries") {
            section = Section::Binaries;
            continue;
        }
        if line.eq_ignore_ascii_case("end") {
            section = Section::Done;
            continue;
        }
        match section {
            Section::Objective => {
                let (_name, rest) = split_label(line, lineno)?;
                for (vname, coef) in parse_terms(rest, lineno)? {
                    let id = lookup(&ids, &vname, lineno)?;
                    model.add_objective_coef(id, coef);
                }
            }
            Section::Constraints => {
                let (name, rest) = split_label(line, lineno)?;
                let (terms_part, sense, rhs_part) = split_relation(rest, lineno)?;
                let mut terms = Vec::new();
                for (vname, coef) in parse_terms(terms_part, lineno)? {
                    let id = lookup(&ids, &vname, lineno)?;
                    terms.push((id, coef));
                }
                let rhs = parse_num(rhs_part, lineno)?;
                model.add_constraint(name, terms, sense, rhs);
            }
            Section::Bounds => {} // handled in the first pass
            Section::Binaries => {
                for name in line.split_whitespace() {
                    let id = lookup(&ids, name, lineno)?;
                    let v = id.index();
                    // direct kind edit; bounds stay as written
                    let var = &mut model_vars_mut(&mut model)[v];
                    var.kind = VarKind::Binary;
                }
            }
            Section::Preamble | Section::Done => {
                return Err(MilpError::LpParse {
                    line: lineno,
                    msg: format!("unexpected content `{line}`"),
                });
            }
        }
    }
    Ok(model)
}

// narrow internal accessor so the parser can set binary kinds
fn model_vars_mut(model: &mut MilpModel) -> &mut [super::model::Variable] {
    model.vars_mut()
}

fn is_section_header(line: &str) -> bool {
    ["minimize", "subject to", "bounds", "binaries", "end"]
        .iter()
        .any(|s| line.eq_ignore_ascii_case(s))
}

fn lookup(ids: &HashMap<String, VarId>, name: &str, line: usize) -> Result<VarId, MilpError> {
    ids.get(name)
        .copied()
        .ok_or_else(|| MilpError::LpParse { line, msg: format!("unknown variable `{name}`") })
}

fn split_label(line: &str, lineno: usize) -> Result<(String, &str), MilpError> {
    let Some((label, rest)) = line.split_once(':') else {
        return Err(MilpError::LpParse { line: lineno, msg: "missing `name:` label".into() });
    };
    Ok((label.trim().to_string(), rest))
}

fn split_relation(rest: &str, lineno: usize) -> Result<(&str, Sense, &str), MilpError> {
    for (pat, sense) in [("<=", Sense::Le), (">=", Sense::Ge), ("=", Sense::Eq)] {
        if let Some(pos) = rest.find(pat) {
            let (lhs, tail) = rest.split_at(pos);
            return Ok((lhs, sense, &tail[pat.len()..]));
        }
    }
    Err(MilpError::LpParse { line: lineno, msg: "missing relation".into() })
}

/// `+ 1.5 x - 2 y` style term lists. A bare `0` stands for an empty list.
fn parse_terms(text: &str, lineno: usize) -> Result<Vec<(String, f64)>, MilpError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks == ["0"] || toks.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let mut sign = 1.0;
        if toks[i] == "+" {
            i += 1;
        } else if toks[i] == "-" {
            sign = -1.0;
            i += 1;
        }
        if i + 1 >= toks.len() {
            return Err(MilpError::LpParse { line: lineno, msg: "dangling term".into() });
        }
        let coef = sign * parse_num(toks[i], lineno)?;
        let name = toks[i + 1].to_string();
        out.push((name, coef));
        i += 2;
    }
    Ok(out)
}

fn parse_bound_line(line: &str, lineno: usize) -> Result<(String, f64, f64), MilpError> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    match toks.as_slice() {
        [name, "free"] => Ok((name.to_string(), f64::NEG_INFINITY, f64::INFINITY)),
        [name, "=", v] => {
            let val = parse_num(v, lineno)?;
            Ok((name.to_string(), val, val))
        }
        [name, ">=", v] => Ok((name.to_string(), parse_num(v, lineno)?, f64::INFINITY)),
        [name, "<=", v] => Ok((name.to_string(), f64::NEG_INFINITY, parse_num(v, lineno)?)),
        [lo, "<=", name, "<=", hi] => {
            Ok((name.to_string(), parse_num(lo, lineno)?, parse_num(hi, lineno)?))
        }
        _ => Err(MilpError::LpParse { line: lineno, msg: format!("bad bound line `{line}`") }),
    }
}

fn parse_num(tok: &str, lineno: usize) -> Result<f64, MilpError> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| MilpError::LpParse { line: lineno, msg: format!("bad number `{tok}`") })
}
