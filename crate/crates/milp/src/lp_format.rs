//! CPLEX LP file format.
//!
//! The writer lists every variable in the objective (zero coefficients
//! included) so a reader recovers the original variable order, and prints
//! numbers with Rust's shortest round-trip formatting so a write/read cycle
//! reproduces the model exactly.

use std::fmt::Write as _;

use crate::error::{MilpError, Result};
use crate::model::{Model, ObjectiveSense, Sense, VarId, VarKind};

const WRAP: usize = 200;

fn valid_name(name: &str) -> bool {
    const EXTRA: &str = "!\"#$%&()/,.;?@_`'{}|~";
    let mut chars = name.chars();
    match chars.next() {
        None => return false,
        Some(c) if c.is_ascii_digit() || c == '.' => return false,
        Some(c) if !(c.is_ascii_alphabetic() || EXTRA.contains(c)) => return false,
        _ => {}
    }
    if name.len() > 255 {
        return false;
    }
    // A leading e/E followed by a digit could be misread as an exponent.
    let lower = name.to_ascii_lowercase();
    if lower.starts_with('e') && lower[1..].chars().next().is_some_and(|c| c.is_ascii_digit() || c == '+' || c == '-') {
        return false;
    }
    chars.all(|c| c.is_ascii_alphanumeric() || EXTRA.contains(c))
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

struct LineWriter {
    out: String,
    line_len: usize,
}

impl LineWriter {
    fn push(&mut self, token: &str) {
        if self.line_len + token.len() + 1 > WRAP && self.line_len > 0 {
            self.out.push('\n');
            self.line_len = 0;
        }
        self.out.push(' ');
        self.out.push_str(token);
        self.line_len += token.len() + 1;
    }

    fn end_line(&mut self) {
        self.out.push('\n');
        self.line_len = 0;
    }

    fn term(&mut self, first: bool, coef: f64, name: &str) {
        let sign = if coef.is_sign_negative() {
            "-"
        } else if first {
            ""
        } else {
            "+"
        };
        let mag = fmt_num(coef.abs());
        let tok = if sign.is_empty() { format!("{mag} {name}") } else { format!("{sign} {mag} {name}") };
        self.push(&tok);
    }
}

/// Serializes `model` as a CPLEX LP file.
pub fn write_lp(model: &Model) -> Result<String> {
    for v in model.vars() {
        if !valid_name(&v.name) {
            return Err(MilpError::Parse { line: 0, message: format!("variable name `{}` is not LP-safe", v.name) });
        }
    }
    for r in model.rows() {
        if !valid_name(&r.name) {
            return Err(MilpError::Parse { line: 0, message: format!("row name `{}` is not LP-safe", r.name) });
        }
    }
    let mut w = LineWriter { out: String::new(), line_len: 0 };
    let _ = writeln!(w.out, "\\ Problem name: {}", model.name);
    w.out.push_str(match model.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    w.push("obj:");
    for (j, v) in model.vars().iter().enumerate() {
        w.term(j == 0, v.objective, &v.name);
    }
    w.end_line();
    w.out.push_str("Subject To\n");
    for r in model.rows() {
        w.push(&format!("{}:", r.name));
        if r.terms.is_empty() {
            if let Some(v) = model.vars().first() {
                w.term(true, 0.0, &v.name);
            }
        }
        for (i, &(v, a)) in r.terms.iter().enumerate() {
            w.term(i == 0, a, &model.var(v).name);
        }
        w.push(r.sense.symbol());
        w.push(&fmt_num(r.rhs));
        w.end_line();
    }
    w.out.push_str("Bounds\n");
    for v in model.vars() {
        let default = match v.kind {
            VarKind::Continuous => (0.0, f64::INFINITY),
            VarKind::Binary => (0.0, 1.0),
        };
        if (v.lower, v.upper) == default {
            continue;
        }
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(w.out, " {} free", v.name);
        } else if v.lower == v.upper {
            let _ = writeln!(w.out, " {} = {}", v.name, fmt_num(v.lower));
        } else {
            let _ = writeln!(w.out, " {} <= {} <= {}", fmt_num(v.lower), v.name, fmt_num(v.upper));
        }
    }
    let binaries: Vec<&str> =
        model.vars().iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        w.out.push_str("Binaries\n");
        for name in binaries {
            w.push(name);
        }
        w.end_line();
    }
    w.out.push_str("End\n");
    Ok(w.out)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Sign(f64),
    Cmp(Sense),
    Colon,
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Tok>> {
    let err = |m: String| MilpError::Parse { line, message: m };
    let b = text.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == '+' || c == '-' {
            // "+inf" / "-inf" / "-infinity" are numbers.
            let rest = text[i + 1..].to_ascii_lowercase();
            if rest.starts_with("inf") {
                let len = if rest.starts_with("infinity") { 8 } else { 3 };
                let sign = if c == '-' { -1.0 } else { 1.0 };
                out.push(Tok::Num(sign * f64::INFINITY));
                i += 1 + len;
            } else {
                out.push(Tok::Sign(if c == '-' { -1.0 } else { 1.0 }));
                i += 1;
            }
        } else if c == ':' {
            out.push(Tok::Colon);
            i += 1;
        } else if c == '<' || c == '>' || c == '=' {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'=' || b[j] == b'<' || b[j] == b'>') {
                j += 1;
            }
            let s = &text[i..j];
            let sense = match s {
                "<" | "<=" | "=<" => Sense::Le,
                ">" | ">=" | "=>" => Sense::Ge,
                "=" => Sense::Eq,
                _ => return Err(err(format!("bad comparison `{s}`"))),
            };
            out.push(Tok::Cmp(sense));
            i = j;
        } else if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            while j < b.len() && ((b[j] as char).is_ascii_digit() || b[j] == b'.') {
                j += 1;
            }
            if j < b.len() && (b[j] == b'e' || b[j] == b'E') {
                let mut k = j + 1;
                if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
                    k += 1;
                }
                if k < b.len() && (b[k] as char).is_ascii_digit() {
                    j = k;
                    while j < b.len() && (b[j] as char).is_ascii_digit() {
                        j += 1;
                    }
                }
            }
            let v: f64 = text[i..j].parse().map_err(|_| err(format!("bad number `{}`", &text[i..j])))?;
            out.push(Tok::Num(v));
            i = j;
        } else {
            let mut j = i;
            while j < b.len() {
                let d = b[j] as char;
                if d.is_whitespace() || matches!(d, '+' | '-' | ':' | '<' | '>' | '=') {
                    break;
                }
                j += 1;
            }
            let name = &text[i..j];
            let lower = name.to_ascii_lowercase();
            if lower == "inf" || lower == "infinity" {
                out.push(Tok::Num(f64::INFINITY));
            } else {
                out.push(Tok::Name(name.to_string()));
            }
            i = j;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn section_header(line: &str) -> Option<(Section, Option<ObjectiveSense>)> {
    let l = line.trim().to_ascii_lowercase();
    let l = l.split_whitespace().collect::<Vec<_>>().join(" ");
    match l.as_str() {
        "minimize" | "minimum" | "min" => Some((Section::Objective, Some(ObjectiveSense::Minimize))),
        "maximize" | "maximum" | "max" => Some((Section::Objective, Some(ObjectiveSense::Maximize))),
        "subject to" | "such that" | "st" | "s.t." | "st." => Some((Section::Constraints, None)),
        "bounds" | "bound" => Some((Section::Bounds, None)),
        "binaries" | "binary" | "bin" => Some((Section::Binaries, None)),
        "end" => Some((Section::End, None)),
        "generals" | "general" | "gen" | "integers" | "semi-continuous" | "semis" | "semi" | "sos" => {
            Some((Section::None, None))
        }
        _ => None,
    }
}

struct Builder {
    names: Vec<String>,
    index: std::collections::HashMap<String, usize>,
    obj: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    explicit: Vec<bool>,
    binary: Vec<bool>,
}

impl Builder {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), j);
        self.obj.push(0.0);
        self.lower.push(0.0);
        self.upper.push(f64::INFINITY);
        self.explicit.push(false);
        self.binary.push(false);
        j
    }
}

/// Parses a linear expression `[+|-] [coef] name ...`; returns the terms and
/// the index of the first unconsumed token.
fn parse_expr(toks: &[Tok], b: &mut Builder, line: usize) -> Result<(Vec<(usize, f64)>, usize)> {
    let mut terms = Vec::new();
    let mut i = 0;
    loop {
        let mut sign = 1.0;
        let start = i;
        while let Some(Tok::Sign(s)) = toks.get(i) {
            sign *= s;
            i += 1;
        }
        let mut coef = 1.0;
        if let Some(Tok::Num(v)) = toks.get(i) {
            if let Some(Tok::Name(_)) = toks.get(i + 1) {
                coef = *v;
                i += 1;
            } else {
                return Ok((terms, start));
            }
        }
        match toks.get(i) {
            Some(Tok::Name(n)) => {
                let j = b.var(n);
                terms.push((j, sign * coef));
                i += 1;
            }
            _ if i == start => return Ok((terms, start)),
            _ => return Err(MilpError::Parse { line, message: "expected a variable name".into() }),
        }
    }
}

/// Parses a CPLEX LP file produced by [`write_lp`] or a compatible tool.
pub fn read_lp(text: &str) -> Result<Model> {
    let mut b = Builder {
        names: Vec::new(),
        index: Default::default(),
        obj: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        explicit: Vec::new(),
        binary: Vec::new(),
    };
    let mut name = String::from("lp");
    let mut sense = ObjectiveSense::Minimize;
    let mut section = Section::None;
    let mut rows: Vec<(String, Vec<(usize, f64)>, Sense, f64)> = Vec::new();
    // Statements may span lines; gather (first line, text) per statement.
    let mut pending: Vec<(usize, String)> = Vec::new();

    let flush = |section: Section,
                 stmt: &str,
                 line: usize,
                 b: &mut Builder,
                 rows: &mut Vec<(String, Vec<(usize, f64)>, Sense, f64)>|
     -> Result<()> {
        let toks = tokenize(stmt, line)?;
        if toks.is_empty() {
            return Ok(());
        }
        let err = |m: &str| MilpError::Parse { line, message: m.to_string() };
        match section {
            Section::Objective => {
                let body = match (toks.first(), toks.get(1)) {
                    (Some(Tok::Name(_)), Some(Tok::Colon)) => &toks[2..],
                    _ => &toks[..],
                };
                let (terms, used) = parse_expr(body, b, line)?;
                if used != body.len() {
                    return Err(err("unexpected tokens in objective"));
                }
                for (j, a) in terms {
                    b.obj[j] += a;
                }
            }
            Section::Constraints => {
                let (rname, body) = match (toks.first(), toks.get(1)) {
                    (Some(Tok::Name(n)), Some(Tok::Colon)) => (n.clone(), &toks[2..]),
                    _ => (format!("R{}", rows.len() + 1), &toks[..]),
                };
                let (terms, used) = parse_expr(body, b, line)?;
                let rest = &body[used..];
                let (s, rhs) = match rest {
                    [Tok::Cmp(s), Tok::Num(v)] => (*s, *v),
                    [Tok::Cmp(s), Tok::Sign(g), Tok::Num(v)] => (*s, g * v),
                    _ => return Err(err("expected `<sense> <rhs>` after constraint expression")),
                };
                rows.push((rname, terms, s, rhs));
            }
            Section::Bounds => {
                let num = |t: &[Tok]| -> Option<(f64, usize)> {
                    match t {
                        [Tok::Num(v), ..] => Some((*v, 1)),
                        [Tok::Sign(s), Tok::Num(v), ..] => Some((s * v, 2)),
                        _ => None,
                    }
                };
                match &toks[..] {
                    [Tok::Name(n), Tok::Name(f)] if f.eq_ignore_ascii_case("free") => {
                        let j = b.var(n);
                        b.lower[j] = f64::NEG_INFINITY;
                        b.upper[j] = f64::INFINITY;
                        b.explicit[j] = true;
                    }
                    [Tok::Name(n), Tok::Cmp(s), rest @ ..] => {
                        let (v, used) = num(rest).ok_or_else(|| err("expected bound value"))?;
                        if used != rest.len() {
                            return Err(err("trailing tokens in bound"));
                        }
                        let j = b.var(n);
                        b.explicit[j] = true;
                        match s {
                            Sense::Le => b.upper[j] = v,
                            Sense::Ge => b.lower[j] = v,
                            Sense::Eq => {
                                b.lower[j] = v;
                                b.upper[j] = v;
                            }
                        }
                    }
                    _ => {
                        let (lo, used) = num(&toks).ok_or_else(|| err("malformed bound"))?;
                        let rest = &toks[used..];
                        match rest {
                            [Tok::Cmp(s1), Tok::Name(n), tail @ ..] => {
                                let j = b.var(n);
                                b.explicit[j] = true;
                                match s1 {
                                    Sense::Le => b.lower[j] = lo,
                                    Sense::Ge => b.upper[j] = lo,
                                    Sense::Eq => {
                                        b.lower[j] = lo;
                                        b.upper[j] = lo;
                                    }
                                }
                                if let [Tok::Cmp(s2), t2 @ ..] = tail {
                                    let (hi, u2) = num(t2).ok_or_else(|| err("expected upper bound"))?;
                                    if u2 != t2.len() {
                                        return Err(err("trailing tokens in bound"));
                                    }
                                    match s2 {
                                        Sense::Le => b.upper[j] = hi,
                                        Sense::Ge => b.lower[j] = hi,
                                        Sense::Eq => return Err(err("`=` in double bound")),
                                    }
                                } else if !tail.is_empty() {
                                    return Err(err("trailing tokens in bound"));
                                }
                            }
                            _ => return Err(err("malformed bound")),
                        }
                    }
                }
            }
            Section::Binaries => {
                for t in toks {
                    match t {
                        Tok::Name(n) => {
                            let j = b.var(&n);
                            b.binary[j] = true;
                        }
                        _ => return Err(err("expected variable names in Binaries")),
                    }
                }
            }
            Section::None => return Err(err("general integer and SOS sections are not supported")),
            Section::End => return Err(err("content after End")),
        }
        Ok(())
    };

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let (content, comment) = match raw.find('\\') {
            Some(p) => (&raw[..p], Some(&raw[p + 1..])),
            None => (raw, None),
        };
        if let Some(c) = comment {
            if let Some(n) = c.trim().strip_prefix("Problem name:") {
                name = n.trim().to_string();
            }
        }
        if content.trim().is_empty() {
            continue;
        }
        if let Some((sec, obj_sense)) = section_header(content) {
            for (l, stmt) in pending.drain(..) {
                flush(section, &stmt, l, &mut b, &mut rows)?;
            }
            if sec == Section::None {
                return Err(MilpError::Parse {
                    line: line_no,
                    message: "general integer and SOS sections are not supported".into(),
                });
            }
            section = sec;
            if let Some(s) = obj_sense {
                sense = s;
            }
            continue;
        }
        match section {
            Section::None => {
                return Err(MilpError::Parse { line: line_no, message: "content before objective section".into() })
            }
            Section::End => return Err(MilpError::Parse { line: line_no, message: "content after End".into() }),
            Section::Objective => match pending.last_mut() {
                Some(p) => {
                    p.1.push(' ');
                    p.1.push_str(content);
                }
                None => pending.push((line_no, content.to_string())),
            },
            Section::Constraints => {
                // A new constraint starts with `name:`; otherwise this line
                // continues the previous one unless that one is complete.
                let starts_named = {
                    let t = content.trim_start();
                    t.find(':').is_some_and(|p| valid_name(t[..p].trim()))
                };
                let prev_complete = pending.last().is_some_and(|(_, s)| {
                    let toks = tokenize(s, line_no).unwrap_or_default();
                    let n = toks.len();
                    n >= 2
                        && matches!(toks[n - 1], Tok::Num(_))
                        && (matches!(toks[n - 2], Tok::Cmp(_))
                            || (n >= 3 && matches!(toks[n - 2], Tok::Sign(_)) && matches!(toks[n - 3], Tok::Cmp(_))))
                });
                if pending.is_empty() || starts_named || prev_complete {
                    pending.push((line_no, content.to_string()));
                } else {
                    let p = pending.last_mut().expect("non-empty");
                    p.1.push(' ');
                    p.1.push_str(content);
                }
            }
            Section::Bounds => pending.push((line_no, content.to_string())),
            Section::Binaries => pending.push((line_no, content.to_string())),
        }
    }
    for (l, stmt) in pending.drain(..) {
        flush(section, &stmt, l, &mut b, &mut rows)?;
    }

    let mut model = Model::new(name);
    model.sense = sense;
    for j in 0..b.names.len() {
        let (kind, lo, hi) = if b.binary[j] {
            if b.explicit[j] {
                (VarKind::Binary, b.lower[j].max(0.0), b.upper[j].min(1.0))
            } else {
                (VarKind::Binary, 0.0, 1.0)
            }
        } else {
            (VarKind::Continuous, b.lower[j], b.upper[j])
        };
        model.add_var(b.names[j].clone(), lo, hi, kind, b.obj[j])?;
    }
    for (rname, terms, s, rhs) in rows {
        model.add_row(rname, terms.into_iter().map(|(j, a)| (VarId(j), a)), s, rhs)?;
    }
    Ok(model)
}
