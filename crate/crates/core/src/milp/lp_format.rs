//! CPLEX-style LP text export/parse and plain `name value` solution files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{
    LinExpr, MilpError, MilpModel, MilpSolution, ObjectiveSense, Sense, SolveStatus, VarId, VarKind,
};

const TERMS_PER_LINE: usize = 8;

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || "_!\"#$%&()/,;?@`'{}|~".contains(c) => {}
        _ => return false,
    }
    name.chars()
        .all(|c| c.is_ascii_alphanumeric() || "_!\"#$%&()/,.;?@`'{}|~".contains(c))
        && !matches!(name.to_ascii_lowercase().as_str(), "free" | "inf" | "infinity" | "st" | "end")
}

fn fmt_num(x: f64) -> String {
    if x == f64::INFINITY {
        "+infinity".into()
    } else if x == f64::NEG_INFINITY {
        "-infinity".into()
    } else {
        format!("{x:?}")
    }
}

fn write_terms(out: &mut String, model: &MilpModel, terms: &[(VarId, f64)]) {
    if terms.is_empty() {
        // A row must mention some variable.
        let _ = write!(out, " 0 {}", model.variables.first().map_or("x", |v| v.name.as_str()));
        return;
    }
    for (k, &(v, c)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", fmt_num(c.abs()), model.variables[v.0].name);
    }
}

/// Renders the model in LP text format.
pub fn to_lp_string(model: &MilpModel) -> Result<String, MilpError> {
    model.validate()?;
    for v in &model.variables {
        if !valid_name(&v.name) {
            return Err(MilpError::MalformedModel(format!("`{}` is not a valid LP name", v.name)));
        }
    }
    let mut out = String::new();
    out.push_str("\\ exported by fairmio\n");
    out.push_str(match model.objective.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    write_terms(&mut out, model, &model.objective.terms);
    if model.objective.constant != 0.0 {
        let c = model.objective.constant;
        let _ = write!(out, " {} {}", if c < 0.0 { '-' } else { '+' }, fmt_num(c.abs()));
    }
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints.iter().enumerate() {
        let tag = if valid_name(&c.tag) { c.tag.clone() } else { format!("r{i}") };
        let _ = write!(out, " {tag}:");
        write_terms(&mut out, model, &c.terms);
        let _ = writeln!(out, " {} {}", c.sense, fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        let default = match v.kind {
            VarKind::Binary => v.lower == 0.0 && v.upper == 1.0,
            VarKind::Continuous => v.lower == 0.0 && v.upper == f64::INFINITY,
        };
        if default {
            continue;
        }
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else if v.lower == v.upper {
            let _ = writeln!(out, " {} = {}", v.name, fmt_num(v.lower));
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_num(v.lower), v.name, fmt_num(v.upper));
        }
    }
    let bins: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for chunk in bins.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    Ok(out)
}

pub fn export_lp(model: &MilpModel, path: impl AsRef<Path>) -> Result<(), MilpError> {
    let text = to_lp_string(model)?;
    fs::write(path, text)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    Num(f64),
    Plus,
    Minus,
    Colon,
    Cmp(Sense),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn section_of(line: &str) -> Option<(Section, Option<ObjectiveSense>)> {
    let l = line.trim().to_ascii_lowercase();
    Some(match l.as_str() {
        "minimize" | "minimise" | "minimum" | "min" => (Section::Objective, Some(ObjectiveSense::Minimize)),
        "maximize" | "maximise" | "maximum" | "max" => (Section::Objective, Some(ObjectiveSense::Maximize)),
        "subject to" | "such that" | "st" | "s.t." | "st." => (Section::Constraints, None),
        "bounds" | "bound" => (Section::Bounds, None),
        "binaries" | "binary" | "bin" => (Section::Binaries, None),
        "end" => (Section::End, None),
        _ => return None,
    })
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Tok>, MilpError> {
    let mut toks = Vec::new();
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == '+' {
            toks.push(Tok::Plus);
            i += 1;
        } else if c == '-' {
            toks.push(Tok::Minus);
            i += 1;
        } else if c == ':' {
            toks.push(Tok::Colon);
            i += 1;
        } else if c == '<' || c == '>' || c == '=' {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'=' || b[j] == b'<' || b[j] == b'>') {
                j += 1;
            }
            let op = &text[i..j];
            toks.push(Tok::Cmp(match op {
                "<" | "<=" | "=<" => Sense::Le,
                ">" | ">=" | "=>" => Sense::Ge,
                "=" => Sense::Eq,
                _ => return Err(MilpError::Parse { line, msg: format!("bad operator `{op}`") }),
            }));
            i = j;
        } else if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            while j < b.len() {
                let d = b[j] as char;
                let exp_sign = (d == '+' || d == '-') && j > i && matches!(b[j - 1], b'e' | b'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    j += 1;
                } else {
                    break;
                }
            }
            let s = &text[i..j];
            let v: f64 = s
                .parse()
                .map_err(|_| MilpError::Parse { line, msg: format!("bad number `{s}`") })?;
            toks.push(Tok::Num(v));
            i = j;
        } else {
            let mut j = i;
            while j < b.len() {
                let d = b[j] as char;
                if d.is_whitespace() || "+-:<>=".contains(d) {
                    break;
                }
                j += 1;
            }
            let name = &text[i..j];
            match name.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => toks.push(Tok::Num(f64::INFINITY)),
                _ => toks.push(Tok::Name(name.to_string())),
            }
            i = j;
        }
    }
    Ok(toks)
}

struct Builder {
    model: MilpModel,
    explicit_bounds: Vec<bool>,
    ids: HashMap<String, VarId>,
}

impl Builder {
    fn var(&mut self, name: &str) -> VarId {
        if let Some(&v) = self.ids.get(name) {
            return v;
        }
        self.explicit_bounds.push(false);
        let v = self.model.add_continuous(name, 0.0, f64::INFINITY);
        self.ids.insert(name.to_string(), v);
        v
    }

    /// Parses `[+|-] [num] [name]` terms; returns the expression and remaining tokens.
    fn expr<'t>(&mut self, toks: &'t [Tok], line: usize) -> Result<(LinExpr, &'t [Tok]), MilpError> {
        let mut e = LinExpr::new();
        let mut rest = toks;
        loop {
            let mut sign = 1.0;
            let mut seen_sign = false;
            while let Some(t) = rest.first() {
                match t {
                    Tok::Plus => seen_sign = true,
                    Tok::Minus => {
                        sign = -sign;
                        seen_sign = true
                    }
                    _ => break,
                }
                rest = &rest[1..];
            }
            match rest.first() {
                Some(Tok::Num(v)) => {
                    let coef = sign * v;
                    rest = &rest[1..];
                    if let Some(Tok::Name(n)) = rest.first() {
                        let id = self.var(n);
                        e.terms.push((id, coef));
                        rest = &rest[1..];
                    } else {
                        e.constant += coef;
                    }
                }
                Some(Tok::Name(n)) => {
                    let id = self.var(n);
                    e.terms.push((id, sign));
                    rest = &rest[1..];
                }
                _ => {
                    if seen_sign {
                        return Err(MilpError::Parse { line, msg: "dangling sign".into() });
                    }
                    return Ok((e, rest));
                }
            }
        }
    }
}

/// Parses LP text in the subset written by [`to_lp_string`] (plus common aliases).
pub fn parse_lp(text: &str) -> Result<MilpModel, MilpError> {
    let mut b = Builder {
        model: MilpModel::new(ObjectiveSense::Minimize),
        explicit_bounds: Vec::new(),
        ids: HashMap::new(),
    };
    let mut section = Section::None;
    let mut stmt = String::new();
    let mut stmt_line = 0;
    let mut binaries: Vec<String> = Vec::new();
    let mut obj_sense = ObjectiveSense::Minimize;
    let mut obj = LinExpr::new();

    let lines: Vec<(usize, String)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('\\').next().unwrap_or("").to_string()))
        .collect();

    // A statement runs until the next labeled row or section header.
    let flush = |b: &mut Builder, section: Section, stmt: &mut String, line: usize, obj: &mut LinExpr| -> Result<(), MilpError> {
        if stmt.trim().is_empty() {
            stmt.clear();
            return Ok(());
        }
        let toks = tokenize(stmt, line)?;
        stmt.clear();
        let (label, body) = match (toks.first(), toks.get(1)) {
            (Some(Tok::Name(n)), Some(Tok::Colon)) => (Some(n.clone()), &toks[2..]),
            _ => (None, &toks[..]),
        };
        match section {
            Section::Objective => {
                let (e, rest) = b.expr(body, line)?;
                if !rest.is_empty() {
                    return Err(MilpError::Parse { line, msg: "trailing tokens in objective".into() });
                }
                *obj = e;
            }
            Section::Constraints => {
                let (e, rest) = b.expr(body, line)?;
                let (sense, rhs_toks) = match rest.first() {
                    Some(Tok::Cmp(s)) => (*s, &rest[1..]),
                    _ => return Err(MilpError::Parse { line, msg: "missing comparison".into() }),
                };
                let (r, tail) = b.expr(rhs_toks, line)?;
                if !tail.is_empty() || !r.terms.is_empty() {
                    return Err(MilpError::Parse { line, msg: "right-hand side must be a constant".into() });
                }
                let tag = label.unwrap_or_else(|| format!("r{}", b.model.constraints.len()));
                b.model.add_constraint(tag, &e, sense, r.constant);
            }
            _ => unreachable!(),
        }
        Ok(())
    };

    for (ln, raw) in &lines {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some((sec, sense)) = section_of(trimmed) {
            flush(&mut b, section, &mut stmt, stmt_line, &mut obj)?;
            section = sec;
            if let Some(s) = sense {
                obj_sense = s;
            }
            continue;
        }
        match section {
            Section::Objective | Section::Constraints => {
                let starts_label = matches!(
                    tokenize(trimmed, *ln)?.as_slice(),
                    [Tok::Name(_), Tok::Colon, ..]
                );
                if starts_label {
                    flush(&mut b, section, &mut stmt, stmt_line, &mut obj)?;
                }
                if stmt.is_empty() {
                    stmt_line = *ln;
                }
                stmt.push(' ');
                stmt.push_str(trimmed);
            }
            Section::Bounds => parse_bound(&mut b, trimmed, *ln)?,
            Section::Binaries => binaries.extend(trimmed.split_whitespace().map(str::to_string)),
            Section::None => return Err(MilpError::Parse { line: *ln, msg: "content before objective".into() }),
            Section::End => break,
        }
    }
    flush(&mut b, section, &mut stmt, stmt_line, &mut obj)?;
    for name in binaries {
        let id = b.var(&name);
        let v = &mut b.model.variables[id.0];
        v.kind = VarKind::Binary;
        if !b.explicit_bounds[id.0] {
            v.lower = 0.0;
            v.upper = 1.0;
        } else {
            v.lower = v.lower.max(0.0);
            v.upper = v.upper.min(1.0);
        }
    }
    b.model.set_objective(obj_sense, &obj);
    b.model.validate()?;
    Ok(b.model)
}

fn parse_bound(b: &mut Builder, line_text: &str, line: usize) -> Result<(), MilpError> {
    let toks = tokenize(line_text, line)?;
    let err = || MilpError::Parse { line, msg: format!("unrecognised bound `{line_text}`") };
    let num = |toks: &[Tok]| -> Option<(f64, usize)> {
        match toks {
            [Tok::Minus, Tok::Num(v), ..] => Some((-v, 2)),
            [Tok::Plus, Tok::Num(v), ..] => Some((*v, 2)),
            [Tok::Num(v), ..] => Some((*v, 1)),
            _ => None,
        }
    };
    if let [Tok::Name(n), Tok::Name(f)] = toks.as_slice() {
        if f.eq_ignore_ascii_case("free") {
            let id = b.var(n);
            b.explicit_bounds[id.0] = true;
            let v = &mut b.model.variables[id.0];
            v.lower = f64::NEG_INFINITY;
            v.upper = f64::INFINITY;
            return Ok(());
        }
    }
    if let Some((lo, k)) = num(&toks) {
        // lo <= x [<= hi]
        let (Some(Tok::Cmp(Sense::Le)), Some(Tok::Name(n))) = (toks.get(k), toks.get(k + 1)) else {
            return Err(err());
        };
        let id = b.var(n);
        b.explicit_bounds[id.0] = true;
        b.model.variables[id.0].lower = lo;
        let rest = &toks[k + 2..];
        if !rest.is_empty() {
            let (Some(Tok::Cmp(Sense::Le)), Some((hi, used))) = (rest.first(), num(&rest[1..])) else {
                return Err(err());
            };
            if used + 1 != rest.len() {
                return Err(err());
            }
            b.model.variables[id.0].upper = hi;
        }
        return Ok(());
    }
    if let [Tok::Name(n), Tok::Cmp(s), rest @ ..] = toks.as_slice() {
        let Some((v, used)) = num(rest) else { return Err(err()) };
        if used != rest.len() {
            return Err(err());
        }
        let id = b.var(n);
        b.explicit_bounds[id.0] = true;
        let var = &mut b.model.variables[id.0];
        match s {
            Sense::Le => var.upper = v,
            Sense::Ge => var.lower = v,
            Sense::Eq => {
                var.lower = v;
                var.upper = v;
            }
        }
        return Ok(());
    }
    Err(err())
}

/// Writes `name value` lines for every variable of an incumbent.
pub fn write_solution(model: &MilpModel, sol: &MilpSolution, path: impl AsRef<Path>) -> Result<(), MilpError> {
    let mut out = String::new();
    if sol.status == SolveStatus::Infeasible {
        out.push_str(super::external::INFEASIBLE_MARKER);
        out.push('\n');
    }
    if let Some(obj) = sol.objective_value {
        let _ = writeln!(out, "# Objective value = {obj:?}");
    }
    for (v, x) in model.variables.iter().zip(&sol.values) {
        let _ = writeln!(out, "{} {x:?}", v.name);
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads an externally produced point and validates it against the model.
/// Variables absent from the file are taken as zero. The result is never
/// reported as optimal since no proof accompanies it.
pub fn import_solution(model: &MilpModel, path: impl AsRef<Path>) -> Result<MilpSolution, MilpError> {
    let text = fs::read_to_string(path)?;
    let index = model.name_index();
    let mut values = vec![0.0; model.variables.len()];
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(MilpError::Parse { line: ln + 1, msg: "expected `name value`".into() });
        };
        let id = *index.get(name).ok_or_else(|| MilpError::UnknownVariable(name.to_string()))?;
        values[id.0] = val
            .parse()
            .map_err(|_| MilpError::Parse { line: ln + 1, msg: format!("bad value `{val}`") })?;
    }
    model.check_point(&values)?;
    for v in model.binaries() {
        values[v.0] = values[v.0].round();
    }
    let obj = model.objective_value(&values);
    let trivial_bound = match model.objective.sense {
        ObjectiveSense::Minimize => f64::NEG_INFINITY,
        ObjectiveSense::Maximize => f64::INFINITY,
    };
    Ok(MilpSolution {
        status: SolveStatus::Feasible,
        values,
        objective_value: Some(obj),
        best_bound: trivial_bound,
        nodes: 0,
        warm_start_objective: None,
    })
}
