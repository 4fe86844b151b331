//! Plain-text formats: systems, tabular MDPs, `key = value` configs and the
//! comparison CSV.
//!
//! Floats are written with 17 significant digits so every `f64` survives a
//! write/read cycle bit for bit.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::ident::{RunHistory, Suboptimality};
use crate::linalg::Mat;
use crate::lqr::SystemParams;
use crate::tabular::TabularMdp;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_num<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("{what}: cannot parse '{tok}'")))
}

fn parse_row(line: usize, text: &str, width: usize) -> Result<Vec<f64>> {
    let vals = text
        .split_whitespace()
        .map(|t| parse_num::<f64>(line, t, "matrix entry"))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != width {
        return Err(parse_err(line, format!("expected {width} entries, found {}", vals.len())));
    }
    Ok(vals)
}

fn write_matrix(out: &mut String, m: &Mat) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

/// ```text
/// system
/// n 2
/// m 1
/// A
/// <n rows of n numbers>
/// B
/// <n rows of m numbers>
/// ```
pub fn write_system(sys: &SystemParams) -> String {
    let mut out = format!("system\nn {}\nm {}\nA\n", sys.n(), sys.m());
    write_matrix(&mut out, sys.a());
    out.push_str("B\n");
    write_matrix(&mut out, sys.b());
    out
}

pub fn read_system(text: &str) -> Result<SystemParams> {
    let mut lines = content_lines(text);
    let mut next = |what: &str| lines.next().ok_or_else(|| parse_err(0, format!("unexpected end of input, expected {what}")));
    let (l, head) = next("header")?;
    if head != "system" {
        return Err(parse_err(l, "expected 'system' header"));
    }
    let mut dim = |key: &str| -> Result<usize> {
        let (l, line) = next(key)?;
        match line.split_whitespace().collect::<Vec<_>>()[..] {
            [k, v] if k == key => parse_num(l, v, key),
            _ => Err(parse_err(l, format!("expected '{key} <count>'"))),
        }
    };
    let n = dim("n")?;
    let m = dim("m")?;
    let mut block = |name: &str, cols: usize| -> Result<Mat> {
        let (l, line) = next(name)?;
        if line != name {
            return Err(parse_err(l, format!("expected '{name}'")));
        }
        let mut data = Vec::with_capacity(n * cols);
        for _ in 0..n {
            let (l, line) = next("matrix row")?;
            data.extend(parse_row(l, line, cols)?);
        }
        Ok(Mat::from_row_slice(n, cols, &data))
    };
    let a = block("A", n)?;
    let b = block("B", m)?;
    if let Some((l, _)) = lines.next() {
        return Err(parse_err(l, "trailing content after B"));
    }
    SystemParams::new(a, b)
}

/// ```text
/// tabular_mdp
/// states 2
/// actions 1
/// gamma 0.9
/// T <s> <a> <|S| probabilities>
/// R <s> <a> <reward>
/// ```
pub fn write_mdp(mdp: &TabularMdp) -> String {
    let mut out = format!(
        "tabular_mdp\nstates {}\nactions {}\ngamma {}\n",
        mdp.n_states(),
        mdp.n_actions(),
        fmt_f64(mdp.gamma())
    );
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            let row: Vec<String> = mdp.row(s, a).iter().map(|&p| fmt_f64(p)).collect();
            out.push_str(&format!("T {s} {a} {}\n", row.join(" ")));
        }
    }
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            out.push_str(&format!("R {s} {a} {}\n", fmt_f64(mdp.reward(s, a))));
        }
    }
    out
}

pub fn read_mdp(text: &str) -> Result<TabularMdp> {
    let mut lines = content_lines(text);
    let mut header = |key: &str| -> Result<(usize, String)> {
        let (l, line) = lines.next().ok_or_else(|| parse_err(0, format!("unexpected end of input, expected {key}")))?;
        let mut toks = line.split_whitespace();
        if toks.next() != Some(key) {
            return Err(parse_err(l, format!("expected '{key}'")));
        }
        Ok((l, toks.collect::<Vec<_>>().join(" ")))
    };
    header("tabular_mdp")?;
    let (l, v) = header("states")?;
    let ns: usize = parse_num(l, &v, "states")?;
    let (l, v) = header("actions")?;
    let na: usize = parse_num(l, &v, "actions")?;
    let (l, v) = header("gamma")?;
    let gamma: f64 = parse_num(l, &v, "gamma")?;
    if ns == 0 || na == 0 {
        return Err(parse_err(l, "states and actions must be positive"));
    }
    let mut t = vec![f64::NAN; ns * na * ns];
    let mut r = vec![f64::NAN; ns * na];
    for (l, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(parse_err(l, "expected 'T s a ...' or 'R s a r'"));
        }
        let s: usize = parse_num(l, toks[1], "state index")?;
        let a: usize = parse_num(l, toks[2], "action index")?;
        if s >= ns || a >= na {
            return Err(parse_err(l, format!("pair ({s}, {a}) out of range")));
        }
        let rest = toks[3..].join(" ");
        match toks[0] {
            "T" => {
                let row = parse_row(l, &rest, ns)?;
                t[(s * na + a) * ns..(s * na + a + 1) * ns].copy_from_slice(&row);
            }
            "R" => r[s * na + a] = parse_row(l, &rest, 1)?[0],
            other => return Err(parse_err(l, format!("unknown record '{other}'"))),
        }
    }
    if t.iter().chain(&r).any(|x| x.is_nan()) {
        return Err(parse_err(0, "some transition rows or rewards are missing"));
    }
    TabularMdp::new(ns, na, t, r, gamma)
}

/// Parsed `key = value` file; keys keep the line they came from.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (l, line) in content_lines(text) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(l, format!("expected 'key = value', found '{line}'")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(parse_err(l, "empty key"));
            }
            if let Some((first, _)) = entries.insert(k.to_string(), (l, v.to_string())) {
                return Err(parse_err(l, format!("duplicate key '{k}' (first set on line {first})")));
            }
        }
        Ok(Self { entries })
    }

    /// Removes and parses `key` if present.
    pub fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((l, v)) => parse_num(l, &v, key).map(Some),
        }
    }

    pub fn take_raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    /// Fails on the first key nobody asked for.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().min_by_key(|(_, (l, _))| *l) {
            None => Ok(()),
            Some((k, (l, _))) => Err(parse_err(l, format!("unknown key '{k}'"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 7] = ["method", "seed", "iteration", "model_error", "suboptimality", "loss", "stable_flag"];

/// Median of finite final values per method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub runs: usize,
    pub median_final_suboptimality: Option<f64>,
    pub median_final_model_error: Option<f64>,
    pub unstable_final: usize,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) })
}

/// Summaries in the order methods first appear in `runs`.
pub fn summarize(runs: &[RunHistory]) -> Vec<MethodSummary> {
    let mut order: Vec<String> = Vec::new();
    for r in runs {
        let name = r.method.to_string();
        if !order.contains(&name) {
            order.push(name);
        }
    }
    order
        .into_iter()
        .map(|name| {
            let mine: Vec<&RunHistory> = runs.iter().filter(|r| r.method.to_string() == name).collect();
            let finals: Vec<_> = mine.iter().filter_map(|r| r.last()).collect();
            let subs: Vec<f64> = finals.iter().filter_map(|rec| rec.suboptimality.value()).collect();
            let errs: Vec<f64> = finals.iter().map(|rec| rec.model_error).filter(|e| e.is_finite()).collect();
            MethodSummary {
                method: name,
                runs: mine.len(),
                median_final_suboptimality: median(&subs),
                median_final_model_error: median(&errs),
                unstable_final: finals.iter().filter(|rec| !rec.suboptimality.is_stable()).count(),
            }
        })
        .collect()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "none".into())
}

/// CSV with `# key = value` header lines, one row per iteration, and a
/// trailing `# summary` block. Unstable iterates leave `suboptimality` empty
/// and carry `stable_flag = 0`.
pub fn write_comparison_csv<W: Write>(mut out: W, header: &[(String, String)], runs: &[RunHistory]) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidConfig(format!("write failed: {e}"));
    for (k, v) in header {
        writeln!(out, "# {k} = {v}").map_err(io)?;
    }
    {
        let mut w = csv::WriterBuilder::new().from_writer(&mut out);
        let csv_err = |e: csv::Error| Error::InvalidConfig(format!("write failed: {e}"));
        w.write_record(CSV_COLUMNS).map_err(csv_err)?;
        for run in runs {
            for rec in &run.records {
                let (sub, flag) = match rec.suboptimality {
                    Suboptimality::Value(v) => (fmt_f64(v), "1"),
                    Suboptimality::Unstable => (String::new(), "0"),
                };
                w.write_record([
                    run.method.to_string(),
                    run.seed.to_string(),
                    rec.iteration.to_string(),
                    fmt_f64(rec.model_error),
                    sub,
                    fmt_f64(rec.loss),
                    flag.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(io)?;
    }
    for s in summarize(runs) {
        writeln!(
            out,
            "# summary method={} runs={} median_final_suboptimality={} median_final_model_error={} unstable_final={}",
            s.method,
            s.runs,
            fmt_opt(s.median_final_suboptimality),
            fmt_opt(s.median_final_model_error),
            s.unstable_final
        )
        .map_err(io)?;
    }
    Ok(())
}

/// One parsed CSV data row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub method: String,
    pub seed: u64,
    pub iteration: usize,
    pub model_error: f64,
    pub suboptimality: Option<f64>,
    pub loss: f64,
    pub stable: bool,
}

/// Reads back the rows written by [`write_comparison_csv`], skipping comments.
pub fn read_comparison_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| parse_err(0, e.to_string()))?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(parse_err(0, format!("unexpected columns {headers:?}")));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| parse_err(0, e.to_string()))?;
            let l = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let sub = &rec[4];
            Ok(CsvRow {
                method: rec[0].to_string(),
                seed: parse_num(l, &rec[1], "seed")?,
                iteration: parse_num(l, &rec[2], "iteration")?,
                model_error: parse_num(l, &rec[3], "model_error")?,
                suboptimality: if sub.is_empty() { None } else { Some(parse_num(l, sub, "suboptimality")?) },
                loss: parse_num(l, &rec[5], "loss")?,
                stable: &rec[6] == "1",
            })
        })
        .collect()
}
