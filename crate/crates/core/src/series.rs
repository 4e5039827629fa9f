//! Reading a price or return column from a delimited text file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    #[default]
    Prices,
    Returns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub column: String,
    pub dates: Option<Vec<String>>,
    pub values: Vec<f64>,
}

/// `,` or `;`, whichever the header uses. A file that uses both is rejected.
pub fn detect_delimiter(text: &str) -> Result<u8> {
    let header = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::Input("file is empty".into()))?;
    let has_comma = header.contains(',');
    let has_semi = header.contains(';');
    let delim = match (has_comma, has_semi) {
        (true, true) => return Err(Error::Input("header mixes ',' and ';' delimiters".into())),
        (false, true) => ';',
        _ => ',',
    };
    let other = if delim == ',' { ';' } else { ',' };
    if let Some((i, _)) = text.lines().enumerate().find(|(_, l)| l.contains(other)) {
        return Err(Error::Input(format!(
            "line {} uses '{other}' but the header uses '{delim}'",
            i + 1
        )));
    }
    Ok(delim as u8)
}

/// Reads one numeric column (and optionally a date column passed through
/// verbatim). Without an explicit `column` the file must have a single
/// non-date column.
pub fn read_series(path: &Path, column: Option<&str>, date_column: Option<&str>) -> Result<Series> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_series(&text, column, date_column)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

pub fn parse_series(text: &str, column: Option<&str>, date_column: Option<&str>) -> Result<Series> {
    let delim = detect_delimiter(text)?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delim)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Input(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| header.iter().position(|h| h.eq_ignore_ascii_case(name));

    let date_idx = match date_column {
        Some(d) => Some(find(d).ok_or_else(|| Error::Input(format!("no date column '{d}'")))?),
        None => find("date"),
    };
    let value_idx = match column {
        Some(c) => find(c).ok_or_else(|| Error::Input(format!("no column '{c}' in header")))?,
        None => {
            let candidates: Vec<usize> =
                (0..header.len()).filter(|&i| Some(i) != date_idx).collect();
            match candidates.as_slice() {
                [only] => *only,
                _ => {
                    return Err(Error::Input(format!(
                        "several value columns {header:?}; select one explicitly"
                    )))
                }
            }
        }
    };

    let mut values = Vec::new();
    let mut dates = date_idx.map(|_| Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Input(format!("row {row}: {e}")))?;
        let field = rec.get(value_idx).ok_or_else(|| {
            Error::Input(format!("row {row}: missing column '{}'", header[value_idx]))
        })?;
        let v: f64 = field.parse().map_err(|_| {
            Error::Input(format!(
                "row {row}, column '{}': '{field}' is not a number",
                header[value_idx]
            ))
        })?;
        if !v.is_finite() {
            return Err(Error::Input(format!("row {row}: non-finite value")));
        }
        values.push(v);
        if let (Some(d), Some(j)) = (dates.as_mut(), date_idx) {
            d.push(rec.get(j).unwrap_or("").to_string());
        }
    }
    Ok(Series {
        column: header[value_idx].clone(),
        dates,
        values,
    })
}

/// `log p_t − log p_{t−1}`; the first observation (and date) is dropped.
pub fn log_returns(series: &Series) -> Result<Series> {
    if let Some(i) = series.values.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::Input(format!(
            "price {} at observation {} is not positive",
            series.values[i],
            i + 1
        )));
    }
    let values = series
        .values
        .windows(2)
        .map(|w| w[1].ln() - w[0].ln())
        .collect();
    Ok(Series {
        column: series.column.clone(),
        dates: series
            .dates
            .as_ref()
            .map(|d| d.iter().skip(1).cloned().collect()),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comma_and_semicolon_files() {
        let a = parse_series("date,usd\n2000-01-03,1.0\n2000-01-04,1.1\n", None, None).unwrap();
        let b = parse_series("date;usd\n2000-01-03;1.0\n2000-01-04;1.1\n", None, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values, vec![1.0, 1.1]);
        assert_eq!(a.dates.unwrap(), vec!["2000-01-03", "2000-01-04"]);
    }

    #[test]
    fn mixed_delimiters_rejected() {
        let e = parse_series("date,usd\n2000-01-03;1.0\n", None, None).unwrap_err();
        assert!(e.to_string().contains("line 2"));
        assert!(parse_series("a,b;c\n1,2;3\n", None, None).is_err());
    }

    #[test]
    fn non_numeric_row_reports_position() {
        let e = parse_series("date,usd\nd1,1.0\nd2,abc\n", Some("usd"), None).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("row 3") && msg.contains("usd"), "{msg}");
    }

    #[test]
    fn column_selection() {
        let text = "date,usd,jpy\nd1,1.0,100\nd2,1.1,101\n";
        assert!(parse_series(text, None, None).is_err());
        let s = parse_series(text, Some("JPY"), None).unwrap();
        assert_eq!(s.values, vec![100.0, 101.0]);
        assert!(parse_series(text, Some("gbp"), None).is_err());
    }

    #[test]
    fn returns_drop_first_observation() {
        let s = parse_series("date,p\nd1,1.0\nd2,2.0\nd3,1.0\n", None, None).unwrap();
        let r = log_returns(&s).unwrap();
        assert_eq!(r.values.len(), 2);
        assert!((r.values[0] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.dates.unwrap(), vec!["d2", "d3"]);
        let bad = Series {
            values: vec![1.0, 0.0],
            ..s
        };
        assert!(log_returns(&bad).is_err());
    }
}
