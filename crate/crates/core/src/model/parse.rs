//! Line-oriented parser for `.sfm` model files.

use std::collections::HashSet;

use crate::cas::{RatFunc, Rational, VarKind, VarRegistry};

use super::{ControlModel, ModelError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn lex(text: &str, line: usize, col0: usize) -> Result<Vec<Token>, ModelError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), col });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && (chars[i] == '.' || chars[i] == 'e' || chars[i] == 'E') {
                return Err(ModelError::Syntax {
                    line,
                    col,
                    msg: "decimal literals are not allowed; write exact rationals such as 1/2".into(),
                });
            }
            out.push(Token { tok: Tok::Int(chars[start..i].iter().collect()), col });
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' | '\u{2212}' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '.' => {
                return Err(ModelError::Syntax {
                    line,
                    col,
                    msg: "decimal literals are not allowed; write exact rationals such as 1/2".into(),
                })
            }
            _ => {
                return Err(ModelError::Syntax { line, col, msg: format!("unexpected character `{c}`") })
            }
        };
        out.push(Token { tok, col });
        i += 1;
    }
    Ok(out)
}

/// Recursive-descent expression parser producing normalized rational functions.
struct ExprParser<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
    reg: &'a VarRegistry,
}

impl<'a> ExprParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.col).unwrap_or(self.end_col)
    }

    fn err(&self, msg: impl Into<String>) -> ModelError {
        ModelError::Syntax { line: self.line, col: self.col(), msg: msg.into() }
    }

    fn zero_den(&self, col: usize) -> ModelError {
        ModelError::ZeroDenominator { line: self.line, col }
    }

    fn parse_sum(&mut self) -> Result<RatFunc, ModelError> {
        let mut acc = self.parse_product()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    acc = acc.add(&rhs);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    acc = acc.sub(&rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_product(&mut self) -> Result<RatFunc, ModelError> {
        let mut acc = self.parse_unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    acc = acc.mul(&rhs);
                }
                Some(Tok::Slash) => {
                    let col = self.col();
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    if rhs.is_zero() {
                        return Err(self.zero_den(col));
                    }
                    acc = acc.div(&rhs).map_err(|_| self.zero_den(col))?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<RatFunc, ModelError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.parse_unary()?.neg())
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.parse_unary()
            }
            _ => self.parse_power(),
        }
    }

    fn parse_power(&mut self) -> Result<RatFunc, ModelError> {
        let base = self.parse_primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let col = self.col();
            // Right-associative: the exponent may itself be a power.
            let exp = self.parse_power()?;
            let e = exp
                .is_constant()
                .then(|| exp.num().constant_value())
                .flatten()
                .filter(|r| r.is_integer() && !r.is_negative())
                .ok_or(ModelError::Syntax {
                    line: self.line,
                    col,
                    msg: "exponent must be a nonnegative integer constant".into(),
                })?;
            let e: i32 = e
                .numer()
                .try_into()
                .ok()
                .filter(|&k: &i32| k <= 1000)
                .ok_or(ModelError::Syntax { line: self.line, col, msg: "exponent too large".into() })?;
            return base.pow(e).map_err(|_| self.zero_den(col));
        }
        Ok(base)
    }

    fn parse_primary(&mut self) -> Result<RatFunc, ModelError> {
        let n = self.reg.len();
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Int(s)) => {
                self.pos += 1;
                let r: Rational = s.parse().map_err(|e: String| self.err(e))?;
                Ok(RatFunc::constant(n, r))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match self.reg.lookup(&name) {
                    Some(id) => Ok(RatFunc::var(n, id)),
                    None => Err(ModelError::Undeclared { name, line: self.line, col }),
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.parse_sum()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(t) => Err(self.err(format!("unexpected token {t:?}"))),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

/// Parses a standalone expression over `reg`.
pub fn parse_expr(text: &str, reg: &VarRegistry) -> Result<RatFunc, ModelError> {
    parse_expr_at(text, reg, 1, 1)
}

fn parse_expr_at(text: &str, reg: &VarRegistry, line: usize, col0: usize) -> Result<RatFunc, ModelError> {
    let toks = lex(text, line, col0)?;
    let mut p = ExprParser { toks: &toks, pos: 0, line, end_col: col0 + text.chars().count(), reg };
    let e = p.parse_sum()?;
    if p.pos != toks.len() {
        return Err(p.err("trailing tokens after expression"));
    }
    Ok(e)
}

struct Line<'a> {
    no: usize,
    indent: usize,
    text: &'a str,
}

fn split_ident_list(rest: &str, line: usize, col: usize) -> Result<Vec<String>, ModelError> {
    let mut out = Vec::new();
    let mut offset = 0;
    for part in rest.split(',') {
        let name = part.trim();
        let lead = part.len() - part.trim_start().len();
        let valid = !name.is_empty()
            && name.chars().next().map(|c| c.is_ascii_alphabetic() || c == '_').unwrap_or(false)
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(ModelError::Syntax {
                line,
                col: col + offset + lead,
                msg: format!("invalid identifier `{name}`"),
            });
        }
        out.push(name.to_string());
        offset += part.len() + 1;
    }
    Ok(out)
}

const RESERVED: &[&str] = &["t", "model", "states", "params", "inputs", "deq", "output"];

pub fn parse_model(text: &str) -> Result<ControlModel, ModelError> {
    let mut lines: Vec<Line> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        lines.push(Line { no, indent, text: trimmed });
    }
    let mut it = lines.into_iter();
    let header = it.next().ok_or(ModelError::Syntax { line: 1, col: 1, msg: "empty model file".into() })?;
    let name = {
        let h = header.text;
        let rest = h.strip_prefix("model").ok_or(ModelError::Syntax {
            line: header.no,
            col: header.indent + 1,
            msg: "expected `model <name> {`".into(),
        })?;
        let rest = rest.trim();
        let name = rest.strip_suffix('{').map(str::trim).ok_or(ModelError::Syntax {
            line: header.no,
            col: header.indent + h.len(),
            msg: "expected `{` after model name".into(),
        })?;
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(ModelError::Syntax {
                line: header.no,
                col: header.indent + 7,
                msg: format!("invalid model name `{name}`"),
            });
        }
        name.to_string()
    };

    let mut body: Vec<Line> = Vec::new();
    let mut closed = false;
    for l in it {
        if closed {
            return Err(ModelError::Syntax { line: l.no, col: l.indent + 1, msg: "content after closing `}`".into() });
        }
        if l.text == "}" {
            closed = true;
            continue;
        }
        body.push(l);
    }
    if !closed {
        return Err(ModelError::Syntax { line: text.lines().count().max(1), col: 1, msg: "missing closing `}`".into() });
    }

    // Pass 1: declarations.
    let mut states: Vec<String> = Vec::new();
    let mut params: Vec<String> = Vec::new();
    let mut inputs: Vec<String> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for l in &body {
        let (kw, rest) = split_keyword(l.text);
        let target = match kw {
            "states" => &mut states,
            "params" => &mut params,
            "inputs" => &mut inputs,
            "deq" | "output" => continue,
            _ => {
                return Err(ModelError::Syntax {
                    line: l.no,
                    col: l.indent + 1,
                    msg: format!("unknown statement `{kw}`"),
                })
            }
        };
        let col = l.indent + kw.len() + 2;
        for n in split_ident_list(rest, l.no, col)? {
            if RESERVED.contains(&n.as_str()) {
                return Err(ModelError::Syntax { line: l.no, col, msg: format!("`{n}` is reserved") });
            }
            if !seen.insert(n.clone()) {
                return Err(ModelError::Duplicate { name: n, line: l.no });
            }
            target.push(n);
        }
    }
    if states.is_empty() {
        return Err(ModelError::Syntax { line: header.no, col: 1, msg: "model declares no states".into() });
    }

    let mut reg = VarRegistry::new();
    reg.push("t", VarKind::Time).expect("fresh registry");
    for s in &states {
        reg.push(s, VarKind::State).map_err(|_| ModelError::Duplicate { name: s.clone(), line: 0 })?;
    }
    for u in &inputs {
        reg.push(u, VarKind::Input).map_err(|_| ModelError::Duplicate { name: u.clone(), line: 0 })?;
    }
    for p in &params {
        reg.push(p, VarKind::Parameter).map_err(|_| ModelError::Duplicate { name: p.clone(), line: 0 })?;
    }

    // Pass 2: equations.
    let mut rhs: Vec<Option<RatFunc>> = vec![None; states.len()];
    let mut outputs: Vec<(String, RatFunc)> = Vec::new();
    for l in &body {
        let (kw, rest) = split_keyword(l.text);
        let rest_col = l.indent + kw.len() + 2;
        match kw {
            "deq" => {
                let (lhs, expr) = rest.split_once('=').ok_or(ModelError::Syntax {
                    line: l.no,
                    col: rest_col,
                    msg: "expected `deq <state>' = <expr>`".into(),
                })?;
                let lhs_t = lhs.trim();
                let sname = lhs_t.strip_suffix('\'').map(str::trim).ok_or(ModelError::Syntax {
                    line: l.no,
                    col: rest_col,
                    msg: "expected `'` after state name".into(),
                })?;
                let idx = states.iter().position(|s| s == sname).ok_or_else(|| {
                    if reg.lookup(sname).is_some() {
                        ModelError::Syntax { line: l.no, col: rest_col, msg: format!("`{sname}` is not a state") }
                    } else {
                        ModelError::Undeclared { name: sname.to_string(), line: l.no, col: rest_col }
                    }
                })?;
                if rhs[idx].is_some() {
                    return Err(ModelError::Duplicate { name: format!("{sname}'"), line: l.no });
                }
                let ecol = rest_col + lhs.len() + 1;
                rhs[idx] = Some(parse_expr_at(expr, &reg, l.no, ecol)?);
            }
            "output" => {
                let (lhs, expr) = rest.split_once('=').ok_or(ModelError::Syntax {
                    line: l.no,
                    col: rest_col,
                    msg: "expected `output <name> = <expr>`".into(),
                })?;
                let oname = lhs.trim();
                let ok = !oname.is_empty()
                    && oname.chars().next().map(|c| c.is_ascii_alphabetic() || c == '_').unwrap_or(false)
                    && oname.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                if !ok {
                    return Err(ModelError::Syntax { line: l.no, col: rest_col, msg: format!("invalid output name `{oname}`") });
                }
                if seen.contains(oname) || outputs.iter().any(|(n, _)| n == oname) {
                    return Err(ModelError::Duplicate { name: oname.to_string(), line: l.no });
                }
                let ecol = rest_col + lhs.len() + 1;
                let e = parse_expr_at(expr, &reg, l.no, ecol)?;
                outputs.push((oname.to_string(), e));
            }
            _ => {}
        }
    }
    let mut f = Vec::with_capacity(states.len());
    for (i, r) in rhs.into_iter().enumerate() {
        f.push(r.ok_or_else(|| ModelError::MissingEquation(states[i].clone()))?);
    }
    if outputs.is_empty() {
        return Err(ModelError::Syntax { line: header.no, col: 1, msg: "model declares no outputs".into() });
    }
    Ok(ControlModel::from_parts(name, states, inputs, params, f, outputs))
}

fn split_keyword(s: &str) -> (&str, &str) {
    match s.find(|c: char| c.is_whitespace()) {
        Some(i) => (&s[..i], s[i..].trim_start()),
        None => (s, ""),
    }
}
