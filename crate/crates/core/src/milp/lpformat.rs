//! CPLEX-style LP text export, a reader for the same dialect, and a bridge
//! for solutions produced by external solvers.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::model::{
    relative_gap, Constraint, LinExpr, MilpModel, Relation, SolveResult, SolveStatus, VarId, VarKind,
};
use crate::error::{Error, Result};

const WRAP: usize = 200;
const FEAS_TOL: f64 = 1e-6;

fn sanitize(raw: &str) -> String {
    let mut s: String =
        raw.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert(0, '_');
    }
    s
}

fn unique_names<'a>(raw: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    raw.map(|name| {
        let base = sanitize(name);
        let mut candidate = base.clone();
        let mut k = 1;
        while !seen.insert(candidate.clone()) {
            candidate = format!("{base}_{k}");
            k += 1;
        }
        candidate
    })
    .collect()
}

/// Sanitized, unique variable names used in exported text, indexed by [`VarId`].
pub fn lp_names(model: &MilpModel) -> Vec<String> {
    unique_names(model.variables.iter().map(|v| v.name.as_str()))
}

fn push_wrapped(out: &mut String, line: &mut String, piece: &str) {
    if line.len() + piece.len() > WRAP {
        out.push_str(line);
        out.push('\n');
        line.clear();
        line.push_str("   ");
    }
    line.push_str(piece);
}

fn write_expr(out: &mut String, mut line: String, expr: &LinExpr, names: &[String]) -> String {
    let expr = expr.normalized();
    if expr.terms.is_empty() {
        line.push_str(" 0");
        return line;
    }
    for (pos, &(v, c)) in expr.terms.iter().enumerate() {
        let sign = if c < 0.0 { "-" } else { "+" };
        let mag = c.abs();
        let coef = if mag == 1.0 { String::new() } else { format!("{mag} ") };
        let piece = if pos == 0 && sign == "+" {
            format!(" {coef}{}", names[v.0])
        } else {
            format!(" {sign} {coef}{}", names[v.0])
        };
        push_wrapped(out, &mut line, &piece);
    }
    line
}

/// Renders `model` in LP text format (Minimize / Subject To / Bounds / Binaries / End).
pub fn export_lp(model: &MilpModel) -> String {
    let names = lp_names(model);
    let row_names = unique_names(model.constraints.iter().map(|c| c.name.as_str()));
    let mut out = String::new();

    out.push_str("Minimize\n");
    let line = write_expr(&mut out, " obj:".to_string(), &model.objective, &names);
    out.push_str(&line);
    out.push('\n');

    out.push_str("Subject To\n");
    for (c, rname) in model.constraints.iter().zip(&row_names) {
        let mut line = write_expr(&mut out, format!(" {rname}:"), &c.expr, &names);
        push_wrapped(&mut out, &mut line, &format!(" {} {}", c.relation, c.rhs));
        out.push_str(&line);
        out.push('\n');
    }

    out.push_str("Bounds\n");
    for (v, name) in model.variables.iter().zip(&names) {
        if v.kind == VarKind::Binary {
            continue;
        }
        let (l, u) = (v.lower, v.upper);
        let text = match (l.is_finite(), u.is_finite()) {
            (true, true) if l == u => format!(" {name} = {l}"),
            (true, true) => format!(" {l} <= {name} <= {u}"),
            (true, false) if l == 0.0 => continue,
            (true, false) => format!(" {name} >= {l}"),
            (false, true) => format!(" -inf <= {name} <= {u}"),
            (false, false) => format!(" {name} free"),
        };
        out.push_str(&text);
        out.push('\n');
    }

    out.push_str("Binaries\n");
    let mut line = String::new();
    for (v, name) in model.variables.iter().zip(&names) {
        if v.kind == VarKind::Binary {
            push_wrapped(&mut out, &mut line, &format!(" {name}"));
        }
    }
    if !line.is_empty() {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
    End,
}

fn section_keyword(line: &str) -> Option<Section> {
    let lower = line.trim().to_ascii_lowercase();
    match lower.as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." | "st." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "generals" | "general" | "gen" => Some(Section::Generals),
        "end" => Some(Section::End),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Name(String),
    Num(f64),
    Plus,
    Minus,
    Colon,
    Rel(Relation),
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Token>> {
    let err = |msg: String| Error::LpParse { line, msg };
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1
            }
            '-' => {
                out.push(Token::Minus);
                i += 1
            }
            ':' => {
                out.push(Token::Colon);
                i += 1
            }
            '<' | '>' | '=' => {
                let mut j = i + 1;
                if j < chars.len() && matches!(chars[j], '<' | '>' | '=') {
                    j += 1;
                }
                let op: String = chars[i..j].iter().collect();
                let rel = match op.as_str() {
                    "<=" | "=<" | "<" => Relation::Le,
                    ">=" | "=>" | ">" => Relation::Ge,
                    "=" => Relation::Eq,
                    other => return Err(err(format!("unknown operator `{other}`"))),
                };
                out.push(Token::Rel(rel));
                i = j;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let v = s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")))?;
                out.push(Token::Num(v));
                i = j;
            }
            c if c.is_alphanumeric() || "_!\"#$%&()/,;?@'`{}|~[]".contains(c) => {
                let mut j = i;
                while j < chars.len()
                    && !chars[j].is_whitespace()
                    && !matches!(chars[j], '+' | '-' | ':' | '<' | '>' | '=')
                {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let lower = s.to_ascii_lowercase();
                if lower == "inf" || lower == "infinity" {
                    out.push(Token::Num(f64::INFINITY));
                } else {
                    out.push(Token::Name(s));
                }
                i = j;
            }
            other => return Err(err(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    model: MilpModel,
    binaries: HashSet<String>,
    bounds: HashMap<String, (f64, f64)>,
}

impl Parser {
    fn var(&mut self, name: &str) -> VarId {
        match self.model.var_by_name(name) {
            Some(v) => v,
            None => self.model.add_continuous(name, 0.0, f64::INFINITY),
        }
    }

    /// Parses `[+|-] [coef] name ...` terms starting at `*pos`, stopping at a relation or the end.
    fn expr(&mut self, toks: &[Token], pos: &mut usize, line: usize) -> Result<LinExpr> {
        let mut expr = LinExpr::new();
        let mut sign = 1.0;
        let mut coef: Option<f64> = None;
        while *pos < toks.len() {
            match &toks[*pos] {
                Token::Plus => {}
                Token::Minus => sign = -sign,
                Token::Num(v) => {
                    coef = Some(coef.unwrap_or(1.0) * v);
                }
                Token::Name(n) => {
                    let n = n.clone();
                    let id = self.var(&n);
                    expr.add(id, sign * coef.unwrap_or(1.0));
                    sign = 1.0;
                    coef = None;
                }
                Token::Rel(_) => break,
                Token::Colon => {
                    return Err(Error::LpParse { line, msg: "unexpected `:`".into() });
                }
            }
            *pos += 1;
        }
        if let Some(c) = coef {
            // A bare constant in an expression; only `0` is meaningful (empty objective).
            if sign * c != 0.0 {
                return Err(Error::LpParse { line, msg: "constant terms are not supported".into() });
            }
        }
        Ok(expr)
    }

    fn signed_number(toks: &[Token], pos: &mut usize, line: usize) -> Result<f64> {
        let mut sign = 1.0;
        while *pos < toks.len() {
            match toks[*pos] {
                Token::Plus => {}
                Token::Minus => sign = -sign,
                Token::Num(v) => {
                    *pos += 1;
                    return Ok(sign * v);
                }
                _ => break,
            }
            *pos += 1;
        }
        Err(Error::LpParse { line, msg: "expected a number".into() })
    }
}

/// Reads LP text in the dialect written by [`export_lp`].
pub fn parse_lp(text: &str) -> Result<MilpModel> {
    let mut p = Parser { model: MilpModel::new(), binaries: HashSet::new(), bounds: HashMap::new() };
    let mut section = Section::None;
    // Statements may span lines; gather tokens per section and split afterwards.
    let mut objective_toks: Vec<Token> = Vec::new();
    let mut constraint_toks: Vec<(Token, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some(s) = section_keyword(line) {
            section = s;
            continue;
        }
        if line.trim().to_ascii_lowercase().starts_with("maximize") {
            return Err(Error::LpParse { line: line_no, msg: "only minimization is supported".into() });
        }
        let toks = tokenize(line, line_no)?;
        match section {
            Section::None => {
                return Err(Error::LpParse { line: line_no, msg: "content before Minimize".into() })
            }
            Section::Objective => objective_toks.extend(toks),
            Section::Constraints => constraint_toks.extend(toks.into_iter().map(|t| (t, line_no))),
            Section::Bounds => parse_bound(&mut p, &toks, line_no)?,
            Section::Binaries | Section::Generals => {
                for t in toks {
                    match t {
                        Token::Name(n) => {
                            p.var(&n);
                            p.binaries.insert(n);
                        }
                        _ => return Err(Error::LpParse { line: line_no, msg: "expected names".into() }),
                    }
                }
            }
            Section::End => break,
        }
    }

    // Objective (optional label).
    let mut pos = 0;
    if objective_toks.len() >= 2 && matches!(objective_toks[1], Token::Colon) {
        pos = 2;
    }
    let obj = p.expr(&objective_toks, &mut pos, 0)?;
    p.model.set_objective(obj);

    // Constraints: [label:] expr rel rhs, repeated.
    let toks: Vec<Token> = constraint_toks.iter().map(|(t, _)| t.clone()).collect();
    let line_at = |i: usize| constraint_toks.get(i).map_or(0, |(_, l)| *l);
    let mut pos = 0;
    while pos < toks.len() {
        let line = line_at(pos);
        let mut name = None;
        if let (Token::Name(n), Some(Token::Colon)) = (&toks[pos], toks.get(pos + 1)) {
            name = Some(n.clone());
            pos += 2;
        }
        let expr = p.expr(&toks, &mut pos, line)?;
        let rel = match toks.get(pos) {
            Some(Token::Rel(r)) => *r,
            _ => return Err(Error::LpParse { line, msg: "constraint without relation".into() }),
        };
        pos += 1;
        let rhs = Parser::signed_number(&toks, &mut pos, line)?;
        match name {
            Some(n) => p.model.add_named_constraint(n, expr, rel, rhs),
            None => p.model.add_constraint(expr, rel, rhs),
        };
    }

    // Apply kinds and bounds.
    let Parser { mut model, binaries, bounds } = p;
    for v in model.variables.iter_mut() {
        if binaries.contains(&v.name) {
            v.kind = VarKind::Binary;
            v.lower = 0.0;
            v.upper = 1.0;
        } else if let Some(&(l, u)) = bounds.get(&v.name) {
            v.lower = l;
            v.upper = u;
        }
    }
    Ok(model)
}

fn parse_bound(p: &mut Parser, toks: &[Token], line: usize) -> Result<()> {
    let err = |msg: &str| Error::LpParse { line, msg: msg.to_string() };
    let mut pos = 0;
    let number_first = !matches!(toks.first(), Some(Token::Name(_)));
    if number_first {
        // l <= x [<= u]
        let l = Parser::signed_number(toks, &mut pos, line)?;
        if !matches!(toks.get(pos), Some(Token::Rel(Relation::Le))) {
            return Err(err("expected `<=` after lower bound"));
        }
        pos += 1;
        let Some(Token::Name(name)) = toks.get(pos) else {
            return Err(err("expected variable name"));
        };
        let name = name.clone();
        pos += 1;
        p.var(&name);
        let entry = p.bounds.entry(name).or_insert((0.0, f64::INFINITY));
        entry.0 = l;
        if pos < toks.len() {
            if !matches!(toks.get(pos), Some(Token::Rel(Relation::Le))) {
                return Err(err("expected `<=` before upper bound"));
            }
            pos += 1;
            entry.1 = Parser::signed_number(toks, &mut pos, line)?;
        }
        return Ok(());
    }
    let Some(Token::Name(name)) = toks.first() else {
        return Err(err("expected variable name"));
    };
    let name = name.clone();
    p.var(&name);
    if let Some(Token::Name(kw)) = toks.get(1) {
        if kw.eq_ignore_ascii_case("free") {
            p.bounds.insert(name, (f64::NEG_INFINITY, f64::INFINITY));
            return Ok(());
        }
    }
    pos = 1;
    let rel = match toks.get(pos) {
        Some(Token::Rel(r)) => *r,
        _ => return Err(err("expected relation")),
    };
    pos += 1;
    let v = Parser::signed_number(toks, &mut pos, line)?;
    let entry = p.bounds.entry(name).or_insert((0.0, f64::INFINITY));
    match rel {
        Relation::Le => entry.1 = v,
        Relation::Ge => entry.0 = v,
        Relation::Eq => *entry = (v, v),
    }
    Ok(())
}

/// Writes an assignment as `name value` lines using the exported names.
pub fn write_solution(model: &MilpModel, values: &[f64]) -> String {
    let names = lp_names(model);
    let mut out = String::new();
    let _ = writeln!(out, "# objective {}", model.objective_value(values));
    for (name, v) in names.iter().zip(values) {
        let _ = writeln!(out, "{name} {v}");
    }
    out
}

/// Reads `name value` pairs (one per line, `#` starts a comment), checks the
/// assignment against every bound and constraint, and wraps it as a
/// [`SolveResult`] with status `Feasible`. Variables not listed are taken as 0.
pub fn import_solution(model: &MilpModel, text: &str) -> Result<SolveResult> {
    model.validate()?;
    let names = lp_names(model);
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, n) in names.iter().enumerate() {
        index.insert(n.as_str(), i);
    }
    for (i, v) in model.variables.iter().enumerate() {
        index.entry(v.name.as_str()).or_insert(i);
    }

    let mut values = vec![0.0; model.num_vars()];
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::LpParse {
                line: idx + 1,
                msg: format!("expected `name value`, got `{line}`"),
            });
        };
        let &var = index.get(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        values[var] = value
            .parse::<f64>()
            .map_err(|_| Error::LpParse { line: idx + 1, msg: format!("bad value `{value}`") })?;
    }

    for (v, &x) in model.variables.iter().zip(&values) {
        if x < v.lower - FEAS_TOL || x > v.upper + FEAS_TOL {
            return Err(Error::InvalidInput(format!(
                "`{}` = {x} outside [{}, {}]",
                v.name, v.lower, v.upper
            )));
        }
        if v.kind == VarKind::Binary && (x - x.round()).abs() > FEAS_TOL {
            return Err(Error::InvalidInput(format!("binary `{}` = {x} is fractional", v.name)));
        }
    }
    for v in values.iter_mut().zip(&model.variables) {
        if v.1.kind == VarKind::Binary {
            *v.0 = v.0.round();
        }
    }
    if let Some((index, slack)) = model.first_violation(&values, FEAS_TOL) {
        let name = model.constraints[index].name.clone();
        return Err(Error::ConstraintViolated { index, name, slack });
    }
    let objective = model.objective_value(&values);
    Ok(SolveResult {
        status: SolveStatus::Feasible,
        assignment: Some(values),
        objective,
        best_bound: f64::NEG_INFINITY,
        gap: relative_gap(objective, f64::NEG_INFINITY),
        nodes: 0,
        wall_time: 0.0,
    })
}

/// Semantic equality of two models up to variable and row naming order.
pub fn equivalent(a: &MilpModel, b: &MilpModel, tol: f64) -> bool {
    if a.num_vars() != b.num_vars() || a.num_constraints() != b.num_constraints() {
        return false;
    }
    let an = lp_names(a);
    let bn = lp_names(b);
    let bmap: HashMap<&str, usize> = bn.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut perm = vec![0usize; a.num_vars()];
    for (i, name) in an.iter().enumerate() {
        let Some(&j) = bmap.get(name.as_str()) else {
            return false;
        };
        let (va, vb) = (&a.variables[i], &b.variables[j]);
        if va.kind != vb.kind || !same(va.lower, vb.lower, tol) || !same(va.upper, vb.upper, tol) {
            return false;
        }
        perm[i] = j;
    }
    let map_expr = |e: &LinExpr| -> Vec<(usize, f64)> {
        let mut t: Vec<(usize, f64)> = e.normalized().terms.iter().map(|&(v, c)| (perm[v.0], c)).collect();
        t.sort_by_key(|&(v, _)| v);
        t
    };
    let sorted = |e: &LinExpr| -> Vec<(usize, f64)> {
        let mut t: Vec<(usize, f64)> = e.normalized().terms.iter().map(|&(v, c)| (v.0, c)).collect();
        t.sort_by_key(|&(v, _)| v);
        t
    };
    let terms_eq = |x: &[(usize, f64)], y: &[(usize, f64)]| {
        x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.0 == q.0 && same(p.1, q.1, tol))
    };
    if !terms_eq(&map_expr(&a.objective), &sorted(&b.objective)) {
        return false;
    }
    a.constraints.iter().zip(&b.constraints).all(|(ca, cb): (&Constraint, &Constraint)| {
        ca.relation == cb.relation
            && same(ca.rhs, cb.rhs, tol)
            && terms_eq(&map_expr(&ca.expr), &sorted(&cb.expr))
    })
}

fn same(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
