//! Plain-text instance files.
//!
//! ```text
//! # comment lines are ignored
//! advertisers 2
//! impressions 1
//! 3.5 0
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{IoError, ParseError};
use crate::instance::Instance;

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let n = header(lines.next(), "advertisers")?;
    if n.1 == 0 {
        return Err(ParseError::NoAdvertisers { line: n.0 });
    }
    let n = n.1;
    let m = header(lines.next(), "impressions")?.1;

    let mut weights = Vec::with_capacity(n * m);
    let mut rows = 0;
    for (line, l) in lines {
        if rows == m {
            return Err(ParseError::ExtraRow { line, declared: m });
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != n {
            return Err(ParseError::RowLength {
                line,
                expected: n,
                found: toks.len(),
            });
        }
        for tok in toks {
            let value: f64 = tok.parse().map_err(|_| ParseError::NotANumber {
                line,
                token: tok.to_string(),
            })?;
            if !(value.is_finite() && value >= 0.0) {
                return Err(ParseError::NegativeWeight { line, value });
            }
            weights.push(value);
        }
        rows += 1;
    }
    if rows < m {
        return Err(ParseError::MissingRows {
            found: rows,
            declared: m,
        });
    }
    // weights were validated above
    Ok(Instance::new(n, weights).expect("validated weights"))
}

fn header(
    line: Option<(usize, &str)>,
    expected: &'static str,
) -> Result<(usize, usize), ParseError> {
    let (no, l) = line.ok_or(ParseError::Header { line: 0, expected })?;
    let mut it = l.split_whitespace();
    match (it.next(), it.next().map(str::parse::<usize>), it.next()) {
        (Some(k), Some(Ok(v)), None) if k == expected => Ok((no, v)),
        _ => Err(ParseError::Header { line: no, expected }),
    }
}

/// Shortest decimal representation that parses back to the same bits.
pub fn format_instance(instance: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "advertisers {}", instance.num_advertisers());
    let _ = writeln!(s, "impressions {}", instance.num_impressions());
    for row in instance.rows() {
        let cells: Vec<String> = row.iter().map(|w| format!("{w}")).collect();
        let _ = writeln!(s, "{}", cells.join(" "));
    }
    s
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, IoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_instance(&text).map_err(|source| IoError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    std::fs::write(path, format_instance(instance)).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}
