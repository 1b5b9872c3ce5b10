use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::{Error, Result};

const MAX_LINE: usize = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

impl Cmp {
    fn symbol(self) -> &'static str {
        match self {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        }
    }

    fn parse(s: &str) -> Option<Cmp> {
        match s {
            "<=" | "<" | "=<" => Some(Cmp::Le),
            ">=" | ">" | "=>" => Some(Cmp::Ge),
            "=" => Some(Cmp::Eq),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// A minimization LP with named variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpModel {
    pub objective: Vec<(String, f64)>,
    /// Bounds per variable; the LP-format default is `[0, inf)`.
    pub variables: BTreeMap<String, (f64, f64)>,
    pub constraints: Vec<Constraint>,
}

/// Sizes of an emitted model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpCounts {
    pub variables: usize,
    pub constraints: usize,
    pub nonzeros: usize,
}

impl LpModel {
    pub fn declare(&mut self, name: &str, lo: f64, hi: f64) {
        self.variables.insert(name.to_string(), (lo, hi));
    }

    pub fn constrain(&mut self, name: String, terms: Vec<(String, f64)>, cmp: Cmp, rhs: f64) {
        self.constraints.push(Constraint { name, terms, cmp, rhs });
    }

    pub fn counts(&self) -> LpCounts {
        LpCounts {
            variables: self.variables.len(),
            constraints: self.constraints.len(),
            nonzeros: self.constraints.iter().map(|c| c.terms.len()).sum(),
        }
    }

    /// Names used in constraints or the objective but never declared.
    pub fn undeclared(&self) -> Vec<String> {
        let mut missing: Vec<String> = self
            .constraints
            .iter()
            .flat_map(|c| c.terms.iter())
            .chain(self.objective.iter())
            .filter(|(v, _)| !self.variables.contains_key(v))
            .map(|(v, _)| v.clone())
            .collect();
        missing.sort();
        missing.dedup();
        missing
    }

    /// Largest violation of any bound or constraint by `values`; missing
    /// variables count as zero.
    pub fn max_violation(&self, values: &BTreeMap<String, f64>) -> f64 {
        let val = |v: &str| values.get(v).copied().unwrap_or(0.0);
        let mut worst: f64 = 0.0;
        for (name, &(lo, hi)) in &self.variables {
            let x = val(name);
            worst = worst.max(lo - x).max(x - hi);
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(v, a)| a * val(v)).sum();
            let excess = match c.cmp {
                Cmp::Le => lhs - c.rhs,
                Cmp::Ge => c.rhs - lhs,
                Cmp::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(excess);
        }
        worst
    }

    /// The constraint with the largest violation, for diagnostics.
    pub fn worst_constraint(&self, values: &BTreeMap<String, f64>) -> Option<(&Constraint, f64)> {
        let val = |v: &str| values.get(v).copied().unwrap_or(0.0);
        self.constraints
            .iter()
            .map(|c| {
                let lhs: f64 = c.terms.iter().map(|(v, a)| a * val(v)).sum();
                let excess = match c.cmp {
                    Cmp::Le => lhs - c.rhs,
                    Cmp::Ge => c.rhs - lhs,
                    Cmp::Eq => (lhs - c.rhs).abs(),
                };
                (c, excess)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Write in CPLEX LP format. Lines never exceed 255 characters.
    pub fn write_lp<W: Write>(&self, mut w: W, title: &str) -> Result<LpCounts> {
        writeln!(w, "\\ {title}")?;
        writeln!(w, "Minimize")?;
        write_row(&mut w, "obj", &self.objective, None)?;
        writeln!(w, "Subject To")?;
        for c in &self.constraints {
            write_row(&mut w, &c.name, &c.terms, Some((c.cmp, c.rhs)))?;
        }
        writeln!(w, "Bounds")?;
        for (name, &(lo, hi)) in &self.variables {
            match (lo == 0.0, hi.is_infinite()) {
                (true, true) => {}
                (true, false) => writeln!(w, " {name} <= {}", num(hi))?,
                (false, true) if lo.is_infinite() => writeln!(w, " {name} free")?,
                (false, true) => writeln!(w, " {name} >= {}", num(lo))?,
                (false, false) => writeln!(w, " {} <= {name} <= {}", num(lo), num(hi))?,
            }
        }
        // variables with default bounds are declared through this section
        let defaults: Vec<&String> = self
            .variables
            .iter()
            .filter(|(_, &(lo, hi))| lo == 0.0 && hi.is_infinite())
            .map(|(n, _)| n)
            .collect();
        for name in defaults {
            writeln!(w, " {name} >= 0")?;
        }
        writeln!(w, "End")?;
        w.flush()?;
        Ok(self.counts())
    }

    /// Parse the subset of CPLEX LP format produced by [`LpModel::write_lp`].
    pub fn parse_lp(text: &str) -> Result<LpModel> {
        #[derive(PartialEq)]
        enum Section {
            Preamble,
            Objective,
            Constraints,
            Bounds,
            Done,
        }
        let mut model = LpModel::default();
        let mut section = Section::Preamble;
        let mut pending = String::new();
        let mut objective_text = String::new();
        for raw in text.lines() {
            let line = raw.split('\\').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.to_ascii_lowercase().as_str() {
                "minimize" | "minimum" | "min" => {
                    section = Section::Objective;
                    continue;
                }
                "subject to" | "such that" | "st" | "s.t." => {
                    section = Section::Constraints;
                    continue;
                }
                "bounds" => {
                    section = Section::Bounds;
                    continue;
                }
                "end" => {
                    section = Section::Done;
                    continue;
                }
                _ => {}
            }
            match section {
                Section::Objective => {
                    objective_text.push(' ');
                    objective_text.push_str(line);
                }
                Section::Constraints => {
                    pending.push(' ');
                    pending.push_str(line);
                    if let Some(c) = parse_constraint(&pending)? {
                        model.constraints.push(c);
                        pending.clear();
                    }
                }
                Section::Bounds => parse_bound(&mut model, line)?,
                Section::Preamble | Section::Done => {
                    return Err(Error::Parse(format!("unexpected line outside a section: {line}")))
                }
            }
        }
        if !pending.trim().is_empty() {
            return Err(Error::Parse(format!("unterminated constraint: {}", pending.trim())));
        }
        let (_, body) = split_label(&objective_text);
        model.objective = parse_terms(body)?;
        for c in &model.constraints {
            for (v, _) in &c.terms {
                model.variables.entry(v.clone()).or_insert((0.0, f64::INFINITY));
            }
        }
        for (v, _) in &model.objective {
            model.variables.entry(v.clone()).or_insert((0.0, f64::INFINITY));
        }
        Ok(model)
    }
}

fn num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:e}")
    }
}

fn write_row<W: Write>(w: &mut W, name: &str, terms: &[(String, f64)], tail: Option<(Cmp, f64)>) -> Result<()> {
    let mut line = format!(" {name}:");
    for (v, a) in terms {
        let mut piece = String::new();
        let sign = if *a < 0.0 { '-' } else { '+' };
        write!(piece, " {sign} {} {v}", num(a.abs())).expect("string write");
        if line.len() + piece.len() > MAX_LINE - 40 {
            writeln!(w, "{line}")?;
            line.clear();
        }
        line.push_str(&piece);
    }
    if terms.is_empty() {
        line.push_str(" 0");
    }
    if let Some((cmp, rhs)) = tail {
        write!(line, " {} {}", cmp.symbol(), num(rhs)).expect("string write");
    }
    writeln!(w, "{line}")?;
    Ok(())
}

fn split_label(s: &str) -> (Option<&str>, &str) {
    match s.find(':') {
        Some(i) => (Some(s[..i].trim()), &s[i + 1..]),
        None => (None, s),
    }
}

fn parse_number(tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad number {tok:?}")))
}

fn is_number(tok: &str) -> bool {
    tok.parse::<f64>().is_ok()
}

/// `+ 2 x - y + 0.5 z`
fn parse_terms(s: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for tok in s.split_whitespace() {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ if is_number(tok) => coef = Some(parse_number(tok)?),
            _ => {
                out.push((tok.to_string(), sign * coef.unwrap_or(1.0)));
                sign = 1.0;
                coef = None;
            }
        }
    }
    if coef.is_some_and(|c| c != 0.0) {
        return Err(Error::Parse(format!("constant term in expression: {s}")));
    }
    Ok(out)
}

/// A complete constraint, or `None` if `s` has no comparison yet.
fn parse_constraint(s: &str) -> Result<Option<Constraint>> {
    let toks: Vec<&str> = s.split_whitespace().collect();
    let Some(pos) = toks.iter().position(|t| Cmp::parse(t).is_some()) else {
        return Ok(None);
    };
    if pos + 1 >= toks.len() {
        return Ok(None);
    }
    let (label, body) = split_label(s);
    let name = label.ok_or_else(|| Error::Parse(format!("unnamed constraint: {}", s.trim())))?;
    let body_toks: Vec<&str> = body.split_whitespace().collect();
    let op_at = body_toks
        .iter()
        .position(|t| Cmp::parse(t).is_some())
        .expect("comparison present");
    let cmp = Cmp::parse(body_toks[op_at]).expect("comparison present");
    let rhs_toks = &body_toks[op_at + 1..];
    let rhs = match rhs_toks {
        [x] => parse_number(x)?,
        ["-", x] => -parse_number(x)?,
        _ => return Err(Error::Parse(format!("bad right-hand side in {name}"))),
    };
    Ok(Some(Constraint {
        name: name.to_string(),
        terms: parse_terms(&body_toks[..op_at].join(" "))?,
        cmp,
        rhs,
    }))
}

fn parse_bound(model: &mut LpModel, line: &str) -> Result<()> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let bad = || Error::Parse(format!("bad bound: {line}"));
    let entry = |model: &mut LpModel, v: &str| -> (f64, f64) {
        *model.variables.entry(v.to_string()).or_insert((0.0, f64::INFINITY))
    };
    match toks.as_slice() {
        [v, "free"] => {
            model.declare(v, f64::NEG_INFINITY, f64::INFINITY);
        }
        [lo, "<=", v, "<=", hi] => {
            model.declare(v, parse_number(lo)?, parse_number(hi)?);
        }
        [v, op, x] => {
            let (lo, hi) = entry(model, v);
            let x = parse_number(x)?;
            match Cmp::parse(op).ok_or_else(bad)? {
                Cmp::Le => model.declare(v, lo, x),
                Cmp::Ge => model.declare(v, x, hi),
                Cmp::Eq => model.declare(v, x, x),
            }
        }
        _ => return Err(bad()),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = LpModel {
            objective: vec![("th".into(), 1.0)],
            ..Default::default()
        };
        m.declare("th", 0.0, f64::INFINITY);
        m.declare("x", 0.0, 1.0);
        m.declare("y", -2.0, 3.5);
        m.constrain("c0".into(), vec![("x".into(), 1.0), ("y".into(), -0.25)], Cmp::Le, 2.0);
        m.constrain("c1".into(), vec![("th".into(), 3.0)], Cmp::Ge, -1.0);
        let mut buf = Vec::new();
        m.write_lp(&mut buf, "test").unwrap();
        let back = LpModel::parse_lp(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn long_rows_wrap() {
        let mut m = LpModel::default();
        let terms: Vec<(String, f64)> = (0..200).map(|i| (format!("v{i}"), 1.0 / 3.0)).collect();
        for (v, _) in &terms {
            m.declare(v, 0.0, f64::INFINITY);
        }
        m.constrain("big".into(), terms, Cmp::Eq, 1.0);
        let mut buf = Vec::new();
        m.write_lp(&mut buf, "wrap").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().all(|l| l.len() <= MAX_LINE));
        let back = LpModel::parse_lp(&text).unwrap();
        assert_eq!(back.counts(), m.counts());
    }
}
