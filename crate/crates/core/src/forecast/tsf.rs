//! Parser and writer for the TSF-like time-series text format.
//!
//! Grammar (see `docs/formats.md`): `#` starts a comment, `@`-lines form the
//! header (`@data` opens the data section), and each data line is
//!
//! ```text
//! name:YYYY-MM-DD HH-MM-SS:v1,v2,...
//! ```
//!
//! with `?` marking a missing value.

use chrono::{NaiveDateTime, Timelike};

use crate::error::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesRole {
    BuildingLoad,
    Solar,
    Price,
    Other,
}

impl SeriesRole {
    /// Roles are carried by naming convention: `Building*`, `Solar*`,
    /// `Price*` (case-insensitive).
    pub fn infer(name: &str) -> Self {
        let lower = name.to_ascii_lowercase();
        if lower.starts_with("building") {
            SeriesRole::BuildingLoad
        } else if lower.starts_with("solar") {
            SeriesRole::Solar
        } else if lower.starts_with("price") {
            SeriesRole::Price
        } else {
            SeriesRole::Other
        }
    }
}

/// One named series on the 15-minute lattice; `None` is a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub start: NaiveDateTime,
    pub values: Vec<Option<f64>>,
    pub role: SeriesRole,
}

impl Series {
    pub fn non_missing(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(|v| *v)
    }
}

/// A parsed TSF-like document.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesSet {
    pub series: Vec<Series>,
    /// Header lines (without the leading `@`), kept for round-tripping.
    pub header: Vec<String>,
}

impl SeriesSet {
    pub fn get(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn with_role(&self, role: SeriesRole) -> impl Iterator<Item = &Series> {
        self.series.iter().filter(move |s| s.role == role)
    }
}

const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H-%M-%S";

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> ForecastError {
    ForecastError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Parses a TSF-like document.
pub fn parse_tsf(text: &str) -> Result<SeriesSet, ForecastError> {
    let mut set = SeriesSet::default();
    let mut in_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        if !in_data && line.starts_with('@') {
            let body = &line[1..];
            if body.trim() == "data" {
                in_data = true;
                continue;
            }
            let mut tokens = body.split_whitespace();
            match tokens.next() {
                Some("attribute") => {
                    if tokens.count() < 2 {
                        return Err(parse_error(
                            line_no,
                            1,
                            "@attribute needs a name and a type",
                        ));
                    }
                }
                Some(_) => {}
                None => return Err(parse_error(line_no, 1, "empty header directive")),
            }
            set.header.push(body.to_string());
            continue;
        }
        in_data = true;
        set.series.push(parse_series_line(line, line_no)?);
    }
    Ok(set)
}

fn parse_series_line(line: &str, line_no: usize) -> Result<Series, ForecastError> {
    let mut parts = line.splitn(3, ':');
    let name = parts
        .next()
        .filter(|n| !n.is_empty())
        .ok_or_else(|| parse_error(line_no, 1, "missing series name"))?;
    let ts_col = name.len() + 2;
    let timestamp = parts
        .next()
        .ok_or_else(|| parse_error(line_no, ts_col, "missing start timestamp"))?;
    let start = NaiveDateTime::parse_from_str(timestamp, TIMESTAMP_FORMAT).map_err(|e| {
        parse_error(
            line_no,
            ts_col,
            format!("bad timestamp `{timestamp}`: {e}"),
        )
    })?;
    if start.minute() % 15 != 0 || start.second() != 0 {
        return Err(parse_error(
            line_no,
            ts_col,
            format!("timestamp `{timestamp}` is off the 15-minute lattice"),
        ));
    }
    let values_str = parts
        .next()
        .ok_or_else(|| parse_error(line_no, ts_col + timestamp.len() + 1, "missing values"))?;
    let mut values = Vec::new();
    let mut column = name.len() + timestamp.len() + 3;
    if !values_str.is_empty() {
        for token in values_str.split(',') {
            let trimmed = token.trim();
            if trimmed == "?" {
                values.push(None);
            } else {
                let v: f64 = trimmed.parse().map_err(|_| {
                    parse_error(line_no, column, format!("non-numeric token `{trimmed}`"))
                })?;
                if !v.is_finite() {
                    return Err(parse_error(
                        line_no,
                        column,
                        format!("non-finite value `{trimmed}`"),
                    ));
                }
                values.push(Some(v));
            }
            column += token.len() + 1;
        }
    }
    Ok(Series {
        name: name.to_string(),
        start,
        values,
        role: SeriesRole::infer(name),
    })
}

/// Writes a series set back into the TSF-like format.
pub fn write_tsf(set: &SeriesSet) -> String {
    let mut out = String::new();
    for h in &set.header {
        out.push('@');
        out.push_str(h);
        out.push('\n');
    }
    out.push_str("@data\n");
    for s in &set.series {
        out.push_str(&s.name);
        out.push(':');
        out.push_str(&s.start.format(TIMESTAMP_FORMAT).to_string());
        out.push(':');
        let mut first = true;
        for v in &s.values {
            if !first {
                out.push(',');
            }
            first = false;
            match v {
                Some(x) => out.push_str(&format!("{x}")),
                None => out.push('?'),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_line_with_missing_value() {
        let set = parse_tsf("Building1:2019-01-01 00-00-00:1.0,?,3.0").unwrap();
        assert_eq!(set.series.len(), 1);
        let s = &set.series[0];
        assert_eq!(s.values, vec![Some(1.0), None, Some(3.0)]);
        assert_eq!(s.role, SeriesRole::BuildingLoad);
    }

    #[test]
    fn empty_data_section_is_empty_set() {
        let set = parse_tsf("@attribute series_name string\n@data\n").unwrap();
        assert!(set.series.is_empty());
    }

    #[test]
    fn non_numeric_token_names_line_and_column() {
        let err = parse_tsf("Solar0:2019-01-01 00-00-00:1.0,abc,3.0").unwrap_err();
        match err {
            ForecastError::Parse { line, column, message } => {
                assert_eq!(line, 1);
                assert_eq!(column, 32);
                assert!(message.contains("abc"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn off_lattice_timestamp_is_rejected() {
        let err = parse_tsf("Solar0:2019-01-01 00-07-00:1.0").unwrap_err();
        assert!(matches!(err, ForecastError::Parse { .. }));
    }

    #[test]
    fn malformed_attribute_is_rejected() {
        let err = parse_tsf("@attribute only_name\n@data\n").unwrap_err();
        assert!(matches!(err, ForecastError::Parse { .. }));
    }

    #[test]
    fn roundtrip_preserves_structure() {
        let text = "@attribute series_name string\n@data\nPrice:2020-10-01 00-00-00:40,41.5,?\n";
        let set = parse_tsf(text).unwrap();
        let out = write_tsf(&set);
        assert_eq!(parse_tsf(&out).unwrap(), set);
    }
}
