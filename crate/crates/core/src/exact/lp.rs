//! CPLEX-style LP text export and a reader for the same dialect.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use super::model::{MilpModel, ModelShape, Row, Sense, VarKey, Variable};
use crate::domain::NetworkTopology;
use crate::error::{Error, Result};

const TERMS_PER_LINE: usize = 6;

fn push_terms(out: &mut String, names: impl Iterator<Item = (String, f64)>, constant: Option<f64>) {
    let mut terms: Vec<(f64, Option<String>)> = names.map(|(n, c)| (c, Some(n))).collect();
    if let Some(c) = constant {
        if c != 0.0 || terms.is_empty() {
            terms.push((c, None));
        }
    }
    for (n, (coef, name)) in terms.into_iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        if n == 0 && coef >= 0.0 {
            write!(out, " {coef}").unwrap();
        } else {
            let sign = if coef < 0.0 { "-" } else { "+" };
            write!(out, " {sign} {}", coef.abs()).unwrap();
        }
        if let Some(name) = name {
            write!(out, " {name}").unwrap();
        }
    }
}

fn fmt_bound(v: &Variable) -> String {
    let name = v.key.to_string();
    if v.lower == v.upper {
        format!(" {name} = {}", v.upper)
    } else if v.upper.is_infinite() {
        format!(" {name} >= {}", v.lower)
    } else {
        format!(" {} <= {name} <= {}", v.lower, v.upper)
    }
}

/// Render the model as LP text. Output is a pure function of the model.
pub fn render_lp(model: &MilpModel) -> String {
    let topo = &model.shape.topology;
    let mut out = String::new();
    writeln!(out, "\\ greensplit placement and dispatch model").unwrap();
    writeln!(
        out,
        "\\ shape ecs={} rrhs={} users_per_rrh={} dus_cc={} dus_ec={} urfs={} slots={}",
        topo.ec_count, topo.rrhs_per_ec, topo.users_per_rrh, topo.du_count_cc, topo.du_count_ec,
        model.shape.chain_len, model.shape.slots
    )
    .unwrap();
    writeln!(out, "\\ big_m {}", model.big_m).unwrap();
    out.push_str("Minimize\n obj:");
    push_terms(
        &mut out,
        model.objective.iter().map(|&(j, c)| (model.name(j), c)),
        Some(model.objective_constant),
    );
    out.push_str("\nSubject To\n");
    for row in &model.rows {
        write!(out, " {}:", row.name).unwrap();
        push_terms(&mut out, row.terms.iter().map(|&(j, c)| (model.name(j), c)), None);
        if row.terms.is_empty() {
            out.push_str(" 0");
        }
        writeln!(out, " {} {}", row.sense.symbol(), row.rhs).unwrap();
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        out.push_str(&fmt_bound(v));
        out.push('\n');
    }
    out.push_str("Binaries\n");
    let binaries: Vec<String> = model
        .variables
        .iter()
        .filter(|v| v.key.is_binary())
        .map(|v| v.key.to_string())
        .collect();
    for chunk in binaries.chunks(10) {
        writeln!(out, " {}", chunk.join(" ")).unwrap();
    }
    out.push_str("End\n");
    out
}

pub fn write_lp<W: Write>(model: &MilpModel, mut writer: W) -> std::io::Result<()> {
    writer.write_all(render_lp(model).as_bytes())
}

pub fn export_lp_file(model: &MilpModel, path: &Path) -> Result<()> {
    std::fs::write(path, render_lp(model)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    match line.to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "st" | "s.t." | "such that" => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

/// Linear expression as `(name, coefficient)` pairs plus a constant.
fn parse_expr(text: &str, ctx: &str) -> Result<(Vec<(String, f64)>, f64)> {
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for tok in text.split_whitespace() {
        match tok {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Ok(v) = tok.parse::<f64>() {
                    if let Some(c) = coef.take() {
                        constant += c;
                    }
                    coef = Some(sign * v);
                } else {
                    terms.push((tok.to_string(), coef.take().unwrap_or(sign)));
                }
                sign = 1.0;
            }
        }
    }
    if let Some(c) = coef {
        constant += c;
    }
    if let Some((bad, _)) = terms.iter().find(|(n, _)| VarKey::parse(n).is_none()) {
        return Err(Error::parse(ctx, format!("unknown variable {bad:?}")));
    }
    Ok((terms, constant))
}

fn parse_shape(line: &str) -> Result<ModelShape> {
    let mut kv = HashMap::new();
    for part in line.split_whitespace().skip(1) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::parse("lp shape", format!("bad field {part:?}")))?;
        let v: usize = v.parse().map_err(|_| Error::parse("lp shape", format!("bad number {v:?}")))?;
        kv.insert(k.to_string(), v);
    }
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| Error::parse("lp shape", format!("missing {k}")));
    Ok(ModelShape {
        topology: NetworkTopology {
            ec_count: get("ecs")?,
            rrhs_per_ec: get("rrhs")?,
            users_per_rrh: get("users_per_rrh")?,
            du_count_cc: get("dus_cc")?,
            du_count_ec: get("dus_ec")?,
        },
        chain_len: get("urfs")?,
        slots: get("slots")?,
    })
}

fn parse_bound(line: &str) -> Result<Variable> {
    let ctx = "lp bounds";
    let toks: Vec<&str> = line.split_whitespace().collect();
    let num = |s: &str| -> Result<f64> {
        match s.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            _ => s.parse().map_err(|_| Error::parse(ctx, format!("bad number {s:?}"))),
        }
    };
    let key = |s: &str| VarKey::parse(s).ok_or_else(|| Error::parse(ctx, format!("unknown variable {s:?}")));
    match toks.as_slice() {
        [lo, "<=", name, "<=", hi] => Ok(Variable {
            key: key(name)?,
            lower: num(lo)?,
            upper: num(hi)?,
        }),
        [name, ">=", lo] => Ok(Variable {
            key: key(name)?,
            lower: num(lo)?,
            upper: f64::INFINITY,
        }),
        [name, "<=", hi] => Ok(Variable {
            key: key(name)?,
            lower: 0.0,
            upper: num(hi)?,
        }),
        [name, "=", v] => {
            let v = num(v)?;
            Ok(Variable {
                key: key(name)?,
                lower: v,
                upper: v,
            })
        }
        _ => Err(Error::parse(ctx, format!("unsupported bound {line:?}"))),
    }
}

/// Read a model written by [`write_lp`]. Variables are ordered as listed in
/// the bounds section.
pub fn read_lp<R: BufRead>(reader: R) -> Result<MilpModel> {
    let mut section = Section::Preamble;
    let mut shape = None;
    let mut big_m = None;
    let mut objective_text = String::new();
    let mut rows_text: Vec<String> = Vec::new();
    let mut variables = Vec::new();
    let mut binaries = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::parse("lp", e.to_string()))?;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('\\') {
            let comment = comment.trim();
            if comment.starts_with("shape ") {
                shape = Some(parse_shape(comment)?);
            } else if let Some(v) = comment.strip_prefix("big_m ") {
                big_m = Some(v.trim().parse::<f64>().map_err(|_| Error::parse("lp", "bad big_m"))?);
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        if let Some(s) = section_of(trimmed) {
            section = s;
            continue;
        }
        match section {
            Section::Preamble | Section::End => return Err(Error::parse("lp", format!("unexpected line {trimmed:?}"))),
            Section::Objective => {
                objective_text.push(' ');
                objective_text.push_str(trimmed);
            }
            Section::Constraints => {
                if trimmed.contains(':') || rows_text.is_empty() {
                    rows_text.push(trimmed.to_string());
                } else {
                    let last = rows_text.last_mut().expect("row exists");
                    last.push(' ');
                    last.push_str(trimmed);
                }
            }
            Section::Bounds => variables.push(parse_bound(trimmed)?),
            Section::Binaries => binaries.extend(trimmed.split_whitespace().map(str::to_string)),
        }
    }
    let shape = shape.ok_or_else(|| Error::parse("lp", "missing shape comment"))?;
    let big_m = big_m.ok_or_else(|| Error::parse("lp", "missing big_m comment"))?;
    for name in &binaries {
        let key = VarKey::parse(name).filter(VarKey::is_binary);
        if key.is_none() || !variables.iter().any(|v| Some(v.key) == key) {
            return Err(Error::parse("lp binaries", format!("{name:?} is not a declared binary variable")));
        }
    }
    let index: HashMap<String, usize> = variables.iter().enumerate().map(|(k, v)| (v.key.to_string(), k)).collect();
    let resolve = |terms: Vec<(String, f64)>, ctx: &str| -> Result<Vec<(usize, f64)>> {
        terms
            .into_iter()
            .map(|(n, c)| {
                index
                    .get(&n)
                    .map(|&j| (j, c))
                    .ok_or_else(|| Error::parse(ctx, format!("variable {n:?} has no bound line")))
            })
            .collect()
    };

    let objective_text = objective_text.trim();
    let body = objective_text
        .split_once(':')
        .map_or(objective_text, |(_, rest)| rest);
    let (terms, objective_constant) = parse_expr(body, "lp objective")?;
    let objective = resolve(terms, "lp objective")?;

    let mut rows = Vec::with_capacity(rows_text.len());
    for text in rows_text {
        let (name, body) = text
            .split_once(':')
            .ok_or_else(|| Error::parse("lp rows", format!("unnamed row {text:?}")))?;
        let (sense, at) = ["<=", ">=", "="]
            .iter()
            .find_map(|op| body.find(op).map(|k| (*op, k)))
            .ok_or_else(|| Error::parse("lp rows", format!("row {name} has no sense")))?;
        let sense = match sense {
            "<=" => Sense::Le,
            ">=" => Sense::Ge,
            _ => Sense::Eq,
        };
        let (lhs, rhs) = (&body[..at], &body[at + sense.symbol().len()..]);
        let rhs: f64 = rhs
            .trim()
            .parse()
            .map_err(|_| Error::parse("lp rows", format!("row {name}: bad rhs {rhs:?}")))?;
        let (terms, constant) = parse_expr(lhs, "lp rows")?;
        rows.push(Row {
            name: name.trim().to_string(),
            terms: resolve(terms, "lp rows")?,
            sense,
            rhs: rhs - constant,
        });
    }
    Ok(MilpModel::from_parts(shape, variables, objective, objective_constant, rows, big_m))
}

pub fn read_lp_file(path: &Path) -> Result<MilpModel> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_lp(std::io::BufReader::new(file))
}
