//! Dataset CSV format:
//!
//! ```text
//! # n=<n> d=<d> seed=<seed>
//! # labels=present          (optional)
//! x_1,...,x_d[,label]
//! ```
//!
//! Floats are written with the shortest representation that round-trips.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Dataset, Observations};
use crate::error::{Error, Result};

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv(dataset)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_csv(&text)
}

pub(crate) fn to_csv(dataset: &Dataset) -> String {
    let obs = dataset.observations();
    let mut out = String::with_capacity(obs.n() * obs.d() * 20);
    let _ = writeln!(out, "# n={} d={} seed={}", obs.n(), obs.d(), dataset.seed);
    if dataset.labels().is_some() {
        out.push_str("# labels=present\n");
    }
    for (i, row) in obs.rows().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:?}");
        }
        if let Some(labels) = dataset.labels() {
            let _ = write!(out, ",{}", labels[i]);
        }
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn header_field<T: std::str::FromStr>(line: &str, key: &str, lineno: usize) -> Result<T> {
    let prefix = format!("{key}=");
    let (col, tok) = line
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(&prefix).map(|v| (tok, v)))
        .map(|(tok, v)| (line.find(tok).unwrap_or(0) + 1, v))
        .ok_or_else(|| parse_err(lineno, 1, format!("header is missing `{key}=`")))?;
    tok.parse()
        .map_err(|_| parse_err(lineno, col, format!("invalid value {tok:?} for `{key}`")))
}

pub(crate) fn from_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, 1, "empty file"))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| parse_err(1, 1, "first line must be `# n=<n> d=<d> seed=<seed>`"))?;
    let n: usize = header_field(header, "n", 1)?;
    let d: usize = header_field(header, "d", 1)?;
    let seed: u64 = header_field(header, "seed", 1)?;
    if d == 0 {
        return Err(parse_err(1, 1, "d must be at least 1"));
    }

    let mut has_labels = false;
    if let Some(&(lineno, l)) = lines.peek() {
        if let Some(flag) = l.strip_prefix('#') {
            if flag.trim() != "labels=present" {
                return Err(parse_err(lineno, 1, format!("unknown header line {l:?}")));
            }
            has_labels = true;
            lines.next();
        }
    }

    let width = d + usize::from(has_labels);
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::new();
    let mut rows = 0;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut column = 1;
        let mut count = 0;
        for field in line.split(',') {
            count += 1;
            if count > width {
                return Err(parse_err(
                    lineno,
                    column,
                    format!("expected {width} fields, found more"),
                ));
            }
            let tok = field.trim();
            if has_labels && count == width {
                match tok {
                    "1" | "+1" => labels.push(1),
                    "-1" => labels.push(-1),
                    _ => return Err(parse_err(lineno, column, format!("invalid label {tok:?}"))),
                }
            } else {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| parse_err(lineno, column, format!("invalid number {tok:?}")))?;
                if !v.is_finite() {
                    return Err(parse_err(lineno, column, format!("non-finite value {tok:?}")));
                }
                values.push(v);
            }
            column += field.len() + 1;
        }
        if count < width {
            return Err(parse_err(
                lineno,
                column.saturating_sub(1).max(1),
                format!("expected {width} fields, found {count}"),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(parse_err(
            1,
            1,
            format!("header declares n={n} but the file has {rows} rows"),
        ));
    }
    let obs = Observations::new(n, d, values)?;
    Dataset::new(obs, seed, has_labels.then_some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_spec, sample, Placement};

    #[test]
    fn round_trip_is_exact() {
        let spec = make_spec(5, 2, 2.548, Placement::FirstS, 0).unwrap();
        let ds = sample(&spec, 40, 3).unwrap();
        let back = from_csv(&to_csv(&ds)).unwrap();
        assert_eq!(back, ds);
        let unlabeled = Dataset::new(ds.observations().clone(), 3, None).unwrap();
        let back = from_csv(&to_csv(&unlabeled)).unwrap();
        assert_eq!(back, unlabeled);
        assert!(to_csv(&ds).starts_with("# n=40 d=5 seed=3\n# labels=present\n"));
    }

    #[test]
    fn wrong_column_count_is_reported() {
        let err = from_csv("# n=2 d=2 seed=0\n1.0,2.0\n3.0\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let err = from_csv("# n=1 d=2 seed=0\n1.0,2.0,5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 9, .. }), "{err:?}");
    }

    #[test]
    fn bad_values_point_at_the_column() {
        let err = from_csv("# n=1 d=3 seed=0\n1.0,abc,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 5, .. }), "{err:?}");
        let err = from_csv("# n=1 d=2 seed=0\n# labels=present\n1.0,2.0,0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, column: 9, .. }), "{err:?}");
        assert!(from_csv("n=1 d=2 seed=0\n").is_err());
        assert!(from_csv("# n=2 d=1 seed=0\n1.0\n").is_err());
    }
}
