//! Reader and writer for the text LP format.
//!
//! The writer emits every variable in the `Bounds` section, in declaration
//! order, so the reader can restore the ordering exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{valid_name, Expr, Model, ModelError, Result, Sense, VarKind};

const LINE_WIDTH: usize = 120;

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

struct Wrapper<'a> {
    out: &'a mut String,
    line: usize,
}

impl Wrapper<'_> {
    fn push(&mut self, tok: &str) {
        if self.line + tok.len() + 1 > LINE_WIDTH && self.line > 1 {
            self.out.push_str("\n  ");
            self.line = 2;
        } else {
            self.out.push(' ');
            self.line += 1;
        }
        self.out.push_str(tok);
        self.line += tok.len();
    }
}

fn write_expr(w: &mut Wrapper<'_>, model: &Model, e: &Expr) {
    let mut first = true;
    for &(v, c) in &e.linear {
        let sign = if c < 0.0 { "-" } else { "+" };
        let mag = c.abs();
        let name = &model.var(v).name;
        let term = if mag == 1.0 { format!("{sign} {name}") } else { format!("{sign} {} {name}", num(mag)) };
        if first && c >= 0.0 {
            w.push(term.trim_start_matches("+ "));
        } else {
            w.push(&term);
        }
        first = false;
    }
    if e.constant != 0.0 || first {
        let c = e.constant;
        if first {
            w.push(&num(c));
        } else {
            w.push(&format!("{} {}", if c < 0.0 { "-" } else { "+" }, num(c.abs())));
        }
    }
}

/// Writes a linear model. Bilinear models must be linearized first.
pub fn export_lp(model: &Model) -> Result<String> {
    if !model.is_linear() {
        return Err(ModelError::Bilinear);
    }
    let mut s = String::new();
    let _ = writeln!(s, "\\ Model: {}", model.name());
    s.push_str("Minimize\n obj:");
    {
        let mut w = Wrapper { out: &mut s, line: 5 };
        write_expr(&mut w, model, model.objective());
    }
    s.push_str("\nSubject To\n");
    for c in model.constraints() {
        let _ = write!(s, " {}:", c.name);
        let mut w = Wrapper { out: &mut s, line: c.name.len() + 2 };
        let mut e = c.expr.clone();
        e.constant = 0.0;
        if e.linear.is_empty() {
            w.push("0");
        } else {
            write_expr(&mut w, model, &e);
        }
        w.push(&c.sense.to_string());
        w.push(&num(c.rhs));
        s.push('\n');
    }
    s.push_str("Bounds\n");
    for v in model.vars() {
        if v.lb == f64::NEG_INFINITY && v.ub == f64::INFINITY {
            let _ = writeln!(s, " {} free", v.name);
        } else {
            let _ = writeln!(s, " {} <= {} <= {}", num(v.lb), v.name, num(v.ub));
        }
    }
    for (kind, header) in [(VarKind::Integer, "Generals"), (VarKind::Binary, "Binaries")] {
        let names: Vec<&str> = model.vars().iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(s, "{header}");
        let mut w = Wrapper { out: &mut s, line: 0 };
        for n in names {
            w.push(n);
        }
        s.push('\n');
    }
    s.push_str("End\n");
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Num(f64),
    Sign(f64),
    Colon,
    Op(Sense),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn perr(line: usize, col: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Parse { line, col, msg: msg.into() }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_.[]#".contains(c)
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut toks = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let content = match raw.find('\\') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let chars: Vec<(usize, char)> = content.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            let col = pos + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let push = |toks: &mut Vec<Token>, tok| toks.push(Token { tok, line, col });
            match c {
                ':' => {
                    push(&mut toks, Tok::Colon);
                    i += 1;
                }
                '+' | '-' => {
                    let mut j = i + 1;
                    while j < chars.len() && chars[j].1.is_whitespace() {
                        j += 1;
                    }
                    let mut k = j;
                    while k < chars.len() && is_name_char(chars[k].1) {
                        k += 1;
                    }
                    let word: String = chars[j..k].iter().map(|t| t.1).collect::<String>().to_ascii_lowercase();
                    if word == "inf" || word == "infinity" {
                        let v = if c == '-' { f64::NEG_INFINITY } else { f64::INFINITY };
                        push(&mut toks, Tok::Num(v));
                        i = k;
                    } else {
                        push(&mut toks, Tok::Sign(if c == '-' { -1.0 } else { 1.0 }));
                        i += 1;
                    }
                }
                '<' | '>' | '=' => {
                    let mut j = i + 1;
                    while j < chars.len() && matches!(chars[j].1, '<' | '>' | '=') {
                        j += 1;
                    }
                    let op: String = chars[i..j].iter().map(|t| t.1).collect();
                    let sense = match op.as_str() {
                        "<" | "<=" | "=<" => Sense::Le,
                        ">" | ">=" | "=>" => Sense::Ge,
                        "=" => Sense::Eq,
                        _ => return Err(perr(line, col, format!("unknown operator {op:?}"))),
                    };
                    push(&mut toks, Tok::Op(sense));
                    i = j;
                }
                c if c.is_ascii_digit() || c == '.' => {
                    let mut j = i;
                    while j < chars.len() {
                        let d = chars[j].1;
                        let prev = if j > i { chars[j - 1].1 } else { ' ' };
                        if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || ((d == '+' || d == '-') && (prev == 'e' || prev == 'E')) {
                            j += 1;
                        } else {
                            break;
                        }
                    }
                    let s: String = chars[i..j].iter().map(|t| t.1).collect();
                    let v: f64 = s.parse().map_err(|_| perr(line, col, format!("bad number {s:?}")))?;
                    push(&mut toks, Tok::Num(v));
                    i = j;
                }
                c if is_name_char(c) => {
                    let mut j = i;
                    while j < chars.len() && is_name_char(chars[j].1) {
                        j += 1;
                    }
                    let s: String = chars[i..j].iter().map(|t| t.1).collect();
                    push(&mut toks, Tok::Word(s));
                    i = j;
                }
                _ => return Err(perr(line, col, format!("unexpected character {c:?}"))),
            }
        }
    }
    Ok(toks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    End,
}

fn section_of(toks: &[Token], i: usize) -> Option<(Section, usize)> {
    let Tok::Word(w) = &toks[i].tok else { return None };
    let next_is_colon = matches!(toks.get(i + 1).map(|t| &t.tok), Some(Tok::Colon));
    if next_is_colon {
        return None;
    }
    let lw = w.to_ascii_lowercase();
    match lw.as_str() {
        "minimize" | "minimum" | "min" => Some((Section::Objective, 1)),
        "subject" => match toks.get(i + 1).map(|t| &t.tok) {
            Some(Tok::Word(t)) if t.eq_ignore_ascii_case("to") => Some((Section::Constraints, 2)),
            _ => None,
        },
        "st" | "s.t." | "such" => Some((Section::Constraints, if lw == "such" { 2 } else { 1 })),
        "bounds" | "bound" => Some((Section::Bounds, 1)),
        "generals" | "general" | "integers" | "integer" | "gen" => Some((Section::Generals, 1)),
        "binaries" | "binary" | "bin" => Some((Section::Binaries, 1)),
        "end" => Some((Section::End, 1)),
        _ => None,
    }
}

struct RawExpr {
    terms: Vec<(String, f64)>,
    constant: f64,
}

struct RawConstraint {
    name: String,
    expr: RawExpr,
    sense: Sense,
    rhs: f64,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    last: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn at(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|t| (t.line, t.col)).unwrap_or(self.last)
    }

    fn at_section(&self) -> bool {
        self.pos < self.toks.len() && section_of(&self.toks, self.pos).is_some()
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t.map(|t| t.tok)
    }

    fn label(&mut self) -> Option<String> {
        if let (Some(Tok::Word(w)), Some(Tok::Colon)) =
            (self.toks.get(self.pos).map(|t| &t.tok), self.toks.get(self.pos + 1).map(|t| &t.tok))
        {
            let w = w.clone();
            self.pos += 2;
            return Some(w);
        }
        None
    }

    fn starts_statement(&self) -> bool {
        matches!(
            (self.toks.get(self.pos).map(|t| &t.tok), self.toks.get(self.pos + 1).map(|t| &t.tok)),
            (Some(Tok::Word(_)), Some(Tok::Colon))
        )
    }

    /// Parses terms until a sense operator, a label or a section keyword.
    fn expr(&mut self) -> Result<RawExpr> {
        let mut e = RawExpr { terms: Vec::new(), constant: 0.0 };
        loop {
            if self.at_section() || self.starts_statement() {
                break;
            }
            match self.peek() {
                None | Some(Tok::Op(_)) => break,
                _ => {}
            }
            let mut sign = 1.0;
            while let Some(Tok::Sign(s)) = self.peek() {
                sign *= *s;
                self.pos += 1;
            }
            let (line, col) = self.at();
            match self.bump() {
                Some(Tok::Num(c)) => {
                    if let Some(Tok::Word(_)) = self.peek() {
                        if !self.at_section() && !self.starts_statement() {
                            let Some(Tok::Word(name)) = self.bump() else { unreachable!() };
                            e.terms.push((name, sign * c));
                            continue;
                        }
                    }
                    e.constant += sign * c;
                }
                Some(Tok::Word(name)) => e.terms.push((name, sign)),
                _ => return Err(perr(line, col, "expected a term")),
            }
        }
        Ok(e)
    }

    fn number(&mut self) -> Result<f64> {
        let mut sign = 1.0;
        while let Some(Tok::Sign(s)) = self.peek() {
            sign *= *s;
            self.pos += 1;
        }
        let (line, col) = self.at();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(sign * v),
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case("inf") || w.eq_ignore_ascii_case("infinity") => {
                Ok(sign * f64::INFINITY)
            }
            _ => Err(perr(line, col, "expected a number")),
        }
    }
}

/// Parses text written by [`export_lp`]; also accepts common variations
/// (missing coefficients, `x >= 1` bound lines, wrapped statements).
pub fn import_lp(text: &str) -> Result<Model> {
    let name = text
        .lines()
        .find_map(|l| l.trim().strip_prefix("\\ Model:").map(|s| s.trim().to_string()))
        .unwrap_or_default();
    let toks = tokenize(text)?;
    let last = toks.last().map(|t| (t.line, t.col + 1)).unwrap_or((1, 1));
    let mut p = Parser { toks, pos: 0, last };

    let mut objective: Option<RawExpr> = None;
    let mut constraints: Vec<RawConstraint> = Vec::new();
    let mut bounds: Vec<(String, Option<f64>, Option<f64>, bool, usize, usize)> = Vec::new();
    let mut kinds: Vec<(String, VarKind)> = Vec::new();
    let mut section: Option<Section> = None;

    while p.pos < p.toks.len() {
        if let Some((s, width)) = section_of(&p.toks, p.pos) {
            p.pos += width;
            section = Some(s);
            if s == Section::End {
                break;
            }
            continue;
        }
        let (line, col) = p.at();
        match section {
            None => return Err(perr(line, col, "expected a `Minimize` section")),
            Some(Section::Objective) => {
                if objective.is_some() {
                    return Err(perr(line, col, "objective defined twice"));
                }
                let _ = p.label();
                objective = Some(p.expr()?);
            }
            Some(Section::Constraints) => {
                let cname = p.label().unwrap_or_else(|| format!("R{}", constraints.len() + 1));
                let expr = p.expr()?;
                let (line, col) = p.at();
                let Some(Tok::Op(sense)) = p.bump() else {
                    return Err(perr(line, col, "expected <=, = or >="));
                };
                let rhs = p.number()?;
                constraints.push(RawConstraint { name: cname, expr, sense, rhs });
            }
            Some(Section::Bounds) => {
                // forms: `lo <= x <= hi`, `x >= lo`, `x <= hi`, `x = v`, `x free`, `lo <= x`
                let first_is_num = matches!(p.peek(), Some(Tok::Num(_)) | Some(Tok::Sign(_)));
                if first_is_num {
                    let lo = p.number()?;
                    let (l2, c2) = p.at();
                    let Some(Tok::Op(op)) = p.bump() else { return Err(perr(l2, c2, "expected a bound operator")) };
                    let (l3, c3) = p.at();
                    let Some(Tok::Word(v)) = p.bump() else { return Err(perr(l3, c3, "expected a variable name")) };
                    let (mut lb, mut ub) = match op {
                        Sense::Le => (Some(lo), None),
                        Sense::Ge => (None, Some(lo)),
                        Sense::Eq => (Some(lo), Some(lo)),
                    };
                    if let Some(Tok::Op(op2)) = p.peek().cloned() {
                        p.pos += 1;
                        let hi = p.number()?;
                        match op2 {
                            Sense::Le => ub = Some(hi),
                            Sense::Ge => lb = Some(hi),
                            Sense::Eq => return Err(perr(l2, c2, "bad double bound")),
                        }
                    }
                    bounds.push((v, lb, ub, false, line, col));
                } else {
                    let Some(Tok::Word(v)) = p.bump() else { return Err(perr(line, col, "expected a bound")) };
                    match p.peek().cloned() {
                        Some(Tok::Word(w)) if w.eq_ignore_ascii_case("free") => {
                            p.pos += 1;
                            bounds.push((v, Some(f64::NEG_INFINITY), Some(f64::INFINITY), true, line, col));
                        }
                        Some(Tok::Op(op)) => {
                            p.pos += 1;
                            let val = p.number()?;
                            let (lb, ub) = match op {
                                Sense::Le => (None, Some(val)),
                                Sense::Ge => (Some(val), None),
                                Sense::Eq => (Some(val), Some(val)),
                            };
                            bounds.push((v, lb, ub, false, line, col));
                        }
                        _ => {
                            let (l, c) = p.at();
                            return Err(perr(l, c, "expected a bound operator or `free`"));
                        }
                    }
                }
            }
            Some(s @ (Section::Generals | Section::Binaries)) => {
                let Some(Tok::Word(v)) = p.bump() else { return Err(perr(line, col, "expected a variable name")) };
                kinds.push((v, if s == Section::Generals { VarKind::Integer } else { VarKind::Binary }));
            }
            Some(Section::End) => unreachable!(),
        }
    }
    if section != Some(Section::End) {
        let (l, c) = p.last;
        return Err(perr(l, c, "missing `End`"));
    }

    // variable order: bounds section first, then first appearance elsewhere
    let mut order: Vec<String> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut note = |n: &str, order: &mut Vec<String>| {
        if !seen.contains_key(n) {
            seen.insert(n.to_string(), order.len());
            order.push(n.to_string());
        }
    };
    for b in &bounds {
        note(&b.0, &mut order);
    }
    for (n, _) in objective.iter().flat_map(|o| o.terms.iter()) {
        note(n, &mut order);
    }
    for c in &constraints {
        for (n, _) in &c.expr.terms {
            note(n, &mut order);
        }
    }
    for (n, _) in &kinds {
        note(n, &mut order);
    }

    let kind_of: HashMap<&str, VarKind> = kinds.iter().map(|(n, k)| (n.as_str(), *k)).collect();
    let mut lbs: HashMap<&str, f64> = HashMap::new();
    let mut ubs: HashMap<&str, f64> = HashMap::new();
    for (v, lb, ub, _, _, _) in &bounds {
        if let Some(lb) = lb {
            lbs.insert(v, *lb);
        }
        if let Some(ub) = ub {
            ubs.insert(v, *ub);
        }
    }
    let mut model = Model::new(name);
    for n in &order {
        if !valid_name(n) {
            let (line, col) = bounds.iter().find(|b| &b.0 == n).map(|b| (b.4, b.5)).unwrap_or((1, 1));
            return Err(perr(line, col, format!("invalid variable name {n:?}")));
        }
        let kind = kind_of.get(n.as_str()).copied().unwrap_or(VarKind::Continuous);
        let (dlb, dub) = if kind == VarKind::Binary { (0.0, 1.0) } else { (0.0, f64::INFINITY) };
        let lb = lbs.get(n.as_str()).copied().unwrap_or(dlb);
        let ub = ubs.get(n.as_str()).copied().unwrap_or(dub);
        model.add_var(n.clone(), kind, lb, ub)?;
    }
    let to_expr = |raw: &RawExpr, model: &Model| -> Expr {
        let mut e = Expr::new().constant(raw.constant);
        for (n, c) in &raw.terms {
            e.add_term(model.lookup(n).expect("declared"), *c);
        }
        e
    };
    if let Some(o) = &objective {
        let e = to_expr(o, &model);
        model.set_objective(e)?;
    }
    for c in &constraints {
        let e = to_expr(&c.expr, &model);
        model.add_constraint(c.name.clone(), e, c.sense, c.rhs)?;
    }
    Ok(model)
}
