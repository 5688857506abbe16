//! UT1 − UTC tables as plain text: two whitespace-separated columns per
//! line (MJD, seconds), `#` comments and blank lines ignored.
//!
//! IERS `finals` files can be reduced to this layout by keeping the MJD
//! column and the UT1−UTC column.

use std::path::Path;

use eprbound_core::sidereal::Ut1Table;

use crate::error::{Error, Result};

pub fn parse_ut1(text: &str) -> Result<Ut1Table> {
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(line, format!("expected 2 columns, found {}", fields.len())));
        }
        let value = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(line, format!("`{s}` is not a number")))
        };
        rows.push((value(fields[0])?, value(fields[1])?));
        lines.push(line);
    }
    if rows.is_empty() {
        return Err(Error::parse(0, "UT1 table has no rows"));
    }
    Ut1Table::new(rows).map_err(|e| match e {
        // Report the row by its line in the file.
        eprbound_core::Error::TableRow { row, reason } => Error::parse(lines[row - 1], reason),
        other => other.into(),
    })
}

pub fn load_ut1_table(path: &Path) -> Result<Ut1Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ut1(&text)
}
