//! Problem definition files.
//!
//! One `key = value` per line, `#` starts a comment. Recognized keys:
//!
//! | key                  | value                                        |
//! |----------------------|----------------------------------------------|
//! | `name`               | free text                                    |
//! | `T`                  | constant expression, the horizon             |
//! | `b`                  | expression in `t, x, u`                      |
//! | `sigma`              | expression in `t, x, u`                      |
//! | `g`                  | expression in `tau, t, x, u, y, z`           |
//! | `h`                  | expression in `tau, x`                       |
//! | `controls`           | `[lo, hi]` interval or `{c1, c2, ...}` list  |
//! | `sigma_control_free` | `true` / `false` (default: σ omits `u`)      |
//! | `lipschitz`          | positive constant (default 100)              |
//!
//! `b`, `sigma`, `g`, `h` and `controls` are required.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use super::expr::{Expr, Var};
use super::{ControlSet, ProblemSpec};
use crate::error::{Result, TicError};

pub fn load(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| TicError::io(path, e))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ProblemSpec> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| TicError::Parse {
            line: line_no,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let key = key.trim().to_string();
        if entries.contains_key(&key) {
            return Err(TicError::Parse { line: line_no, message: format!("duplicate key `{key}`") });
        }
        entries.insert(key, (line_no, value.trim().to_string()));
    }

    const KNOWN: [&str; 9] = ["name", "T", "b", "sigma", "g", "h", "controls", "sigma_control_free", "lipschitz"];
    if let Some((key, (line, _))) = entries.iter().find(|(k, _)| !KNOWN.contains(&k.as_str())) {
        return Err(TicError::Parse { line: *line, message: format!("unknown key `{key}`") });
    }

    let expr_for = |key: &str, allowed: &[Var]| -> Result<Expr> {
        let (line, src) = entries
            .get(key)
            .ok_or_else(|| TicError::Parse { line: 0, message: format!("missing required key `{key}`") })?;
        let e = Expr::parse_at(src, *line)?;
        if let Some(v) = e.first_var_outside(allowed) {
            return Err(TicError::Parse {
                line: *line,
                message: format!("`{key}` may not depend on {v:?}"),
            });
        }
        Ok(e)
    };

    let horizon = match entries.get("T") {
        Some(_) => expr_for("T", &[])?.eval(&[0.0; 6]),
        None => 1.0,
    };
    let b = Arc::new(expr_for("b", &[Var::T, Var::X, Var::U])?);
    let sigma = Arc::new(expr_for("sigma", &[Var::T, Var::X, Var::U])?);
    let g = Arc::new(expr_for("g", &[Var::Tau, Var::T, Var::X, Var::U, Var::Y, Var::Z])?);
    let h = Arc::new(expr_for("h", &[Var::Tau, Var::X])?);

    let (cline, csrc) = entries
        .get("controls")
        .ok_or_else(|| TicError::Parse { line: 0, message: "missing required key `controls`".into() })?;
    let controls = parse_controls(csrc, *cline)?;

    let sigma_control_free = match entries.get("sigma_control_free") {
        None => !sigma.references(Var::U),
        Some((line, v)) => match v.as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(TicError::Parse { line: *line, message: format!("expected true/false, found `{other}`") })
            }
        },
    };
    let lipschitz = match entries.get("lipschitz") {
        None => 100.0,
        Some(_) => expr_for("lipschitz", &[])?.eval(&[0.0; 6]),
    };
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(TicError::usage(format!("horizon T must be positive, got {horizon}")));
    }
    if !(lipschitz > 0.0) {
        return Err(TicError::usage(format!("lipschitz must be positive, got {lipschitz}")));
    }

    let name = entries.get("name").map(|(_, v)| v.clone()).unwrap_or_else(|| "problem-file".into());
    Ok(ProblemSpec {
        name,
        drift: Arc::new(move |t, x, u| b.eval(&[0.0, t, x, u, 0.0, 0.0])),
        diffusion: Arc::new(move |t, x, u| sigma.eval(&[0.0, t, x, u, 0.0, 0.0])),
        generator: Arc::new(move |tau, t, x, u, y, z| g.eval(&[tau, t, x, u, y, z])),
        terminal: Arc::new(move |tau, x| h.eval(&[tau, 0.0, x, 0.0, 0.0, 0.0])),
        controls,
        horizon,
        sigma_control_free,
        lipschitz,
    })
}

fn parse_controls(src: &str, line: usize) -> Result<ControlSet> {
    let err = |message: String| TicError::Parse { line, message };
    let (open, close) = match (src.chars().next(), src.chars().last()) {
        (Some(o), Some(c)) => (o, c),
        _ => return Err(err("empty controls".into())),
    };
    let inner = &src[open.len_utf8()..src.len() - close.len_utf8()];
    let values = inner
        .split(',')
        .map(|s| Ok(Expr::parse_at(s.trim(), line)?.eval(&[0.0; 6])))
        .collect::<Result<Vec<f64>>>()?;
    match (open, close) {
        ('[', ']') if values.len() == 2 => {
            ControlSet::interval(values[0], values[1]).map_err(|e| err(e.to_string()))
        }
        ('[', ']') => Err(err("interval controls need exactly two bounds".into())),
        ('{', '}') => ControlSet::finite(values).map_err(|e| err(e.to_string())),
        _ => Err(err(format!("controls must be `[lo, hi]` or `{{a, b, ...}}`, found `{src}`"))),
    }
}
