//! Scenario files: `[meta]`, one payload block (`[oper]`, `[logconn]` or
//! `[global]`) and optional `[params]`. Lines are `key = value`, `#` starts a
//! comment, values are Laurent literals or comma separated lists of them.
//!
//! ```text
//! [meta]
//! rank = 2
//! precision = 24
//!
//! [oper]
//! a = 0, 0
//! gamma = z
//! alpha[1][2] = 1
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use branchop_core::global_p1::{localize_oper, pullback_power_map, standard_sl2_oper, sym_power_global};
use branchop_core::{Error, Laurent, LaurentMat, LogOperCandidate, OperLocalData, Rat, Series};

/// A location-tagged problem with the scenario text. Lines and columns are
/// 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ScenarioError {}

fn err_at(line: usize, column: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError { line, column, message: message.into() }
}

/// A literal together with where it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub text: String,
    pub line: usize,
    pub column: usize,
}

impl Cell {
    fn series(&self, prec: i64) -> Result<Laurent, ScenarioError> {
        Series::parse(&self.text, prec).map_err(|e| match e {
            Error::Parse { column, message } => {
                // The literal parser counts columns with whitespace removed.
                let offset = self
                    .text
                    .char_indices()
                    .filter(|(_, c)| !c.is_whitespace())
                    .nth(column.saturating_sub(1))
                    .map_or(self.text.len(), |(i, _)| i);
                err_at(self.line, self.column + offset, message)
            }
            other => err_at(self.line, self.column, other.to_string()),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GlobalStep {
    Pullback(usize),
    SymPower(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Oper {
        rank: Option<usize>,
        a: BTreeMap<usize, Cell>,
        gamma: BTreeMap<usize, Cell>,
        alpha: BTreeMap<(usize, usize), Cell>,
    },
    LogConn {
        rank: Option<usize>,
        rows: Vec<Vec<Cell>>,
    },
    Global {
        steps: Vec<GlobalStep>,
        point: Option<Rat>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub rank: Option<usize>,
    pub precision: Option<i64>,
    pub point: Option<Rat>,
    pub strict_det: Option<bool>,
    pub payload: Payload,
    /// Line of the payload block header.
    pub payload_line: usize,
}

/// The domain object a scenario describes.
#[derive(Clone, Debug, PartialEq)]
pub enum Built {
    Oper(OperLocalData),
    Log(LogOperCandidate),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    None,
    Meta,
    Oper,
    LogConn,
    Global,
    Params,
}

struct Line<'a> {
    no: usize,
    key: &'a str,
    key_col: usize,
    value: &'a str,
    value_col: usize,
}

fn parse_int<T: FromStr>(l: &Line<'_>, what: &str) -> Result<T, ScenarioError> {
    l.value.parse().map_err(|_| err_at(l.no, l.value_col, format!("{what} must be a non-negative integer")))
}

fn parse_bool(l: &Line<'_>) -> Result<bool, ScenarioError> {
    match l.value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(err_at(l.no, l.value_col, "expected true or false")),
    }
}

fn parse_point(l: &Line<'_>) -> Result<Rat, ScenarioError> {
    Rat::from_str(l.value).map_err(|_| err_at(l.no, l.value_col, "point must be a rational number p or p/q"))
}

/// Splits a comma separated value into cells, validating each literal.
fn cells(l: &Line<'_>) -> Result<Vec<Cell>, ScenarioError> {
    let mut out = Vec::new();
    let mut start = 0;
    for piece in l.value.split(',') {
        let lead = piece.len() - piece.trim_start().len();
        let cell = Cell { text: piece.trim().to_string(), line: l.no, column: l.value_col + start + lead };
        if cell.text.is_empty() {
            return Err(err_at(l.no, l.value_col + start, "empty entry"));
        }
        cell.series(0)?;
        out.push(cell);
        start += piece.len() + 1;
    }
    Ok(out)
}

fn single(l: &Line<'_>) -> Result<Cell, ScenarioError> {
    let mut c = cells(l)?;
    if c.len() != 1 {
        return Err(err_at(l.no, l.value_col, format!("expected one literal, got {}", c.len())));
    }
    Ok(c.remove(0))
}

/// Parses `name`, `name[i]` or `name[i][j]` into the name and its 1-based
/// indices.
fn indexed<'a>(l: &Line<'a>) -> Result<(&'a str, Vec<usize>), ScenarioError> {
    let Some(open) = l.key.find('[') else { return Ok((l.key, vec![])) };
    let name = &l.key[..open];
    let mut rest = &l.key[open..];
    let mut idx = Vec::new();
    while !rest.is_empty() {
        let col = l.key_col + (l.key.len() - rest.len());
        let close = rest.find(']').filter(|_| rest.starts_with('[')).ok_or_else(|| err_at(l.no, col, "malformed index"))?;
        let i: usize = rest[1..close].trim().parse().map_err(|_| err_at(l.no, col + 1, "index must be a positive integer"))?;
        if i == 0 {
            return Err(err_at(l.no, col + 1, "indices start at 1"));
        }
        idx.push(i);
        rest = &rest[close + 1..];
    }
    Ok((name, idx))
}

impl Scenario {
    pub fn parse(src: &str) -> Result<Scenario, ScenarioError> {
        let mut block = Block::None;
        let mut rank = None;
        let mut precision = None;
        let mut point = None;
        let mut strict_det = None;
        let mut payload: Option<(Payload, usize)> = None;
        let mut seen = Vec::new();

        for (i, raw) in src.lines().enumerate() {
            let no = i + 1;
            let text = raw.split('#').next().unwrap();
            let trimmed = text.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = text.len() - text.trim_start().len();
            if trimmed.starts_with('[') && !trimmed.contains('=') {
                let name = trimmed
                    .strip_suffix(']')
                    .map(|s| s[1..].trim())
                    .ok_or_else(|| err_at(no, indent + trimmed.len() + 1, "expected ']'"))?;
                block = match name {
                    "meta" => Block::Meta,
                    "oper" => Block::Oper,
                    "logconn" => Block::LogConn,
                    "global" => Block::Global,
                    "params" => Block::Params,
                    other => return Err(err_at(no, indent + 2, format!("unknown block [{other}]"))),
                };
                if seen.contains(&name.to_string()) {
                    return Err(err_at(no, indent + 1, format!("block [{name}] appears twice")));
                }
                seen.push(name.to_string());
                let fresh = match block {
                    Block::Oper => Some(Payload::Oper {
                        rank: None,
                        a: BTreeMap::new(),
                        gamma: BTreeMap::new(),
                        alpha: BTreeMap::new(),
                    }),
                    Block::LogConn => Some(Payload::LogConn { rank: None, rows: vec![] }),
                    Block::Global => Some(Payload::Global { steps: vec![], point: None }),
                    _ => None,
                };
                if let Some(p) = fresh {
                    if payload.is_some() {
                        return Err(err_at(no, indent + 1, "a scenario has exactly one payload block"));
                    }
                    payload = Some((p, no));
                }
                continue;
            }
            let eq = text.find('=').ok_or_else(|| err_at(no, indent + 1, "expected 'key = value'"))?;
            let (k, v) = (&text[..eq], &text[eq + 1..]);
            let value = v.trim();
            let line = Line {
                no,
                key: k.trim(),
                key_col: indent + 1,
                value,
                value_col: eq + 2 + (v.len() - v.trim_start().len()),
            };
            if line.key.is_empty() {
                return Err(err_at(no, indent + 1, "missing key"));
            }
            if line.value.is_empty() {
                return Err(err_at(no, line.value_col, "missing value"));
            }
            let unknown = || err_at(no, line.key_col, format!("unknown key '{}'", line.key));
            match block {
                Block::None => return Err(err_at(no, indent + 1, "key outside of any block")),
                Block::Meta => match line.key {
                    "rank" => rank = Some(parse_int(&line, "rank")?),
                    "precision" => precision = Some(parse_int(&line, "precision")?),
                    "point" => point = Some(parse_point(&line)?),
                    _ => return Err(unknown()),
                },
                Block::Params => match line.key {
                    "strict_det" => strict_det = Some(parse_bool(&line)?),
                    _ => return Err(unknown()),
                },
                Block::Oper => {
                    let Some((Payload::Oper { rank, a, gamma, alpha }, _)) = payload.as_mut() else { unreachable!() };
                    let (name, idx) = indexed(&line)?;
                    let dup = || err_at(no, line.key_col, format!("'{}' given twice", line.key));
                    match (name, idx.as_slice()) {
                        ("rank", []) => *rank = Some(parse_int(&line, "rank")?),
                        ("a", []) | ("gamma", []) => {
                            let target = if name == "a" { a } else { gamma };
                            if !target.is_empty() {
                                return Err(dup());
                            }
                            target.extend(cells(&line)?.into_iter().enumerate());
                        }
                        ("a", [i]) | ("gamma", [i]) => {
                            let target = if name == "a" { a } else { gamma };
                            if target.insert(i - 1, single(&line)?).is_some() {
                                return Err(dup());
                            }
                        }
                        ("alpha", [i, j]) => {
                            if i >= j {
                                return Err(err_at(no, line.key_col, "alpha[i][j] needs i < j"));
                            }
                            if alpha.insert((i - 1, j - 1), single(&line)?).is_some() {
                                return Err(dup());
                            }
                        }
                        _ => return Err(unknown()),
                    }
                }
                Block::LogConn => {
                    let Some((Payload::LogConn { rank, rows }, _)) = payload.as_mut() else { unreachable!() };
                    match line.key {
                        "rank" => *rank = Some(parse_int(&line, "rank")?),
                        "row" => rows.push(cells(&line)?),
                        _ => return Err(unknown()),
                    }
                }
                Block::Global => {
                    let Some((Payload::Global { steps, point }, _)) = payload.as_mut() else { unreachable!() };
                    match line.key {
                        "base" if line.value == "standard_sl2" => {}
                        "base" => return Err(err_at(no, line.value_col, "the only base is standard_sl2")),
                        "pullback" => steps.push(GlobalStep::Pullback(parse_int(&line, "pullback degree")?)),
                        "sympow" => steps.push(GlobalStep::SymPower(parse_int(&line, "symmetric power")?)),
                        "point" => *point = Some(parse_point(&line)?),
                        _ => return Err(unknown()),
                    }
                }
            }
        }
        let (payload, payload_line) =
            payload.ok_or_else(|| err_at(src.lines().count().max(1), 1, "missing payload block ([oper], [logconn] or [global])"))?;
        Ok(Scenario { rank, precision, point, strict_det, payload, payload_line })
    }

    /// Builds the domain object at precision `prec`.
    pub fn build(&self, prec: i64) -> Result<Built, ScenarioError> {
        let at_header = |m: String| err_at(self.payload_line, 1, m);
        let rank = |own: Option<usize>| -> Result<usize, ScenarioError> {
            match (self.rank, own) {
                (Some(a), Some(b)) if a != b => Err(at_header(format!("rank {b} disagrees with [meta] rank {a}"))),
                (a, b) => a.or(b).ok_or_else(|| at_header("rank is not given".into())),
            }
        };
        match &self.payload {
            Payload::Oper { rank: own, a, gamma, alpha } => {
                let r = rank(*own)?;
                if r < 2 {
                    return Err(at_header(format!("rank must be at least 2, got {r}")));
                }
                let check_len = |m: &BTreeMap<usize, Cell>, n: usize, what: &str| match m.keys().find(|&&i| i >= n) {
                    Some(&i) => {
                        let c = &m[&i];
                        Err(err_at(c.line, c.column, format!("{what}[{}] is out of range for rank {r}", i + 1)))
                    }
                    None => Ok(()),
                };
                check_len(a, r, "a")?;
                check_len(gamma, r - 1, "gamma")?;
                let a = (0..r).map(|i| a.get(&i).map_or(Ok(Series::zero(prec)), |c| c.series(prec))).collect::<Result<_, _>>()?;
                let gamma = (0..r - 1)
                    .map(|i| gamma.get(&i).ok_or_else(|| at_header(format!("gamma[{}] is not given", i + 1)))?.series(prec))
                    .collect::<Result<_, _>>()?;
                let mut al = BTreeMap::new();
                for (&(i, j), c) in alpha {
                    if j >= r {
                        return Err(err_at(c.line, c.column, format!("alpha[{}][{}] is out of range for rank {r}", i + 1, j + 1)));
                    }
                    al.insert((i, j), c.series(prec)?);
                }
                OperLocalData::new(a, gamma, al).map(Built::Oper).map_err(|e| at_header(e.to_string()))
            }
            Payload::LogConn { rank: own, rows } => {
                let r = rank(own.or(Some(rows.len())))?;
                if rows.len() != r {
                    return Err(at_header(format!("rank {r} needs {r} rows, got {}", rows.len())));
                }
                let mut m = Vec::with_capacity(r);
                for row in rows {
                    if row.len() != r {
                        return Err(err_at(row[0].line, 1, format!("row has {} entries, expected {r}", row.len())));
                    }
                    m.push(row.iter().map(|c| c.series(prec)).collect::<Result<Vec<_>, _>>()?);
                }
                LogOperCandidate::from_matrix(LaurentMat::from_rows(m))
                    .map(Built::Log)
                    .map_err(|e| at_header(e.to_string()))
            }
            Payload::Global { steps, point } => {
                let p = match (self.point.as_ref(), point.as_ref()) {
                    (Some(a), Some(b)) if a != b => return Err(at_header("point disagrees with [meta] point".into())),
                    (a, b) => a.or(b).cloned().unwrap_or_default(),
                };
                let mut g = standard_sl2_oper();
                for s in steps {
                    g = match *s {
                        GlobalStep::Pullback(k) => pullback_power_map(&g, k),
                        GlobalStep::SymPower(m) => sym_power_global(&g, m),
                    }
                    .map_err(|e| at_header(e.to_string()))?;
                }
                if let Some(r) = self.rank.filter(|&r| r != g.rank) {
                    return Err(at_header(format!("[meta] rank {r} but the global connection has rank {}", g.rank)));
                }
                localize_oper(&g, &p, prec).map(Built::Oper).map_err(|e| at_header(e.to_string()))
            }
        }
    }
}

/// Scenario text for oper data; `Scenario::parse(..).build(prec)` gives the
/// data back.
pub fn render_oper(data: &OperLocalData, prec: i64) -> String {
    let join = |v: &[Laurent]| v.iter().map(Series::to_literal).collect::<Vec<_>>().join(", ");
    let mut out = format!("[meta]\nrank = {}\nprecision = {prec}\n\n[oper]\n", data.rank());
    out += &format!("a = {}\n", join(data.a()));
    out += &format!("gamma = {}\n", join(data.gamma()));
    for (&(i, j), s) in data.alpha_entries() {
        out += &format!("alpha[{}][{}] = {}\n", i + 1, j + 1, s.to_literal());
    }
    out
}

/// Scenario text for a connection matrix in the `[logconn]` block.
pub fn render_logconn(m: &LaurentMat, prec: i64) -> String {
    let mut out = format!("[meta]\nrank = {}\nprecision = {prec}\n\n[logconn]\n", m.rows());
    for row in m.to_literals() {
        out += &format!("row = {}\n", row.join(", "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use branchop_core::rat;

    fn parse_err(src: &str) -> ScenarioError {
        Scenario::parse(src).and_then(|s| s.build(24)).unwrap_err()
    }

    #[test]
    fn strict_rank_two() {
        let s = Scenario::parse("[meta]\nrank = 2\n\n[oper]\na = 0, 0\ngamma = z # simple zero\n").unwrap();
        let Built::Oper(d) = s.build(24).unwrap() else { panic!() };
        assert!(d.is_strict());
        assert_eq!(d.precision(), 24);
    }

    #[test]
    fn oper_round_trip() {
        let src = "[meta]\nrank = 3\n[oper]\na[1] = 1/2 - z\na[3] = -1/2 + z\ngamma = z, 2*z + z^3\nalpha[1][3] = 1/3*z^2\nalpha[2][3] = 0\n";
        let Built::Oper(d) = Scenario::parse(src).unwrap().build(12).unwrap() else { panic!() };
        let again = Scenario::parse(&render_oper(&d, 12)).unwrap().build(12).unwrap();
        assert_eq!(again, Built::Oper(d));
    }

    #[test]
    fn logconn_round_trip() {
        let src = "[meta]\nprecision = 8\n[logconn]\nrank = 2\nrow = 0, 1/z\nrow = 1, 1/z - 2/3*z\n";
        let s = Scenario::parse(src).unwrap();
        let Built::Log(c) = s.build(8).unwrap() else { panic!() };
        let again = Scenario::parse(&render_logconn(c.conn().matrix(), 8)).unwrap().build(8).unwrap();
        assert_eq!(again, Built::Log(c));
    }

    #[test]
    fn global_pullback() {
        let s = Scenario::parse("[global]\nbase = standard_sl2\npullback = 2\npoint = 0\n").unwrap();
        let Built::Oper(d) = s.build(10).unwrap() else { panic!() };
        assert_eq!(d.gamma()[0], Series::from_terms([(1, rat(2, 1))], 10));
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse_err("[meta]\nrank = 2\n[oper]\ngamma = z^\n");
        assert_eq!((e.line, e.column), (4, 11));
        let e = parse_err("[meta]\nrank = 2\n[oper]\ngamma =  1 + 2 * zz\n");
        assert_eq!((e.line, e.column), (4, 19));
        let e = parse_err("[oper]\ngamma = z\n");
        assert_eq!(e.line, 1);
        assert!(e.message.contains("rank"));
        let e = parse_err("[meta]\nrank = 2\n[oper]\ngamma = z\n[logconn]\n");
        assert_eq!(e.line, 5);
        let e = parse_err("[meta]\nrank = 2\n[oper]\nalpha[2][1] = 1\n");
        assert!(e.message.contains("i < j"));
        let e = parse_err("[meta]\nrank = 2\n[logconn]\nrow = 0, 1/z^2\nrow = 1, 0\n");
        assert!(e.message.contains("pole of order 2"), "{e}");
        let e = parse_err("rank = 2\n");
        assert_eq!((e.line, e.column), (1, 1));
    }
}
