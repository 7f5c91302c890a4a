//! Point cloud CSV input: one point per line, one column per coordinate,
//! `#` starts a comment line.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use levelfit::PointCloud;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Open { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Read { line: u64, message: String },
    #[error("no points found")]
    Empty,
    #[error("line {line}: expected {expected} columns, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("line {line}, column {column}: '{field}' is not a number")]
    NotANumber { line: u64, column: usize, field: String },
    #[error("line {line}, column {column}: '{field}' is not finite")]
    NonFinite { line: u64, column: usize, field: String },
    #[error("{0}")]
    Invalid(String),
}

pub fn ingest_points(path: &Path) -> Result<PointCloud, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Open { path: path.display().to_string(), source })?;
    parse_points(file)
}

pub fn parse_points(input: impl Read) -> Result<PointCloud, IngestError> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (k, text) in BufReader::new(input).lines().enumerate() {
        let line = k as u64 + 1;
        let text = text.map_err(|e| IngestError::Read { line, message: e.to_string() })?;
        let text = text.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if let Some(first) = points.first() {
            if fields.len() != first.len() {
                return Err(IngestError::Ragged { line, expected: first.len(), found: fields.len() });
            }
        }
        let point = fields
            .iter()
            .enumerate()
            .map(|(k, field)| {
                let column = k + 1;
                let v: f64 =
                    field.parse().map_err(|_| IngestError::NotANumber { line, column, field: field.to_string() })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(IngestError::NonFinite { line, column, field: field.to_string() })
                }
            })
            .collect::<Result<Vec<f64>, _>>()?;
        points.push(point);
    }
    if points.is_empty() {
        return Err(IngestError::Empty);
    }
    PointCloud::new(points).map_err(|e| IngestError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<PointCloud, IngestError> {
        parse_points(s.as_bytes())
    }

    #[test]
    fn one_dimensional_cloud() {
        let cloud = parse("-0.5\n0\n0.25\n").unwrap();
        assert_eq!(cloud.dimension(), 1);
        assert_eq!(cloud.points(), &[vec![-0.5], vec![0.0], vec![0.25]]);
    }

    #[test]
    fn comments_blank_lines_and_spaces() {
        let cloud = parse("# x, y\n0.1, 0.2\n\n  -1 ,1\n# end\n").unwrap();
        assert_eq!(cloud.points(), &[vec![0.1, 0.2], vec![-1.0, 1.0]]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(parse(""), Err(IngestError::Empty)));
        assert!(matches!(parse("# only a comment\n"), Err(IngestError::Empty)));
        let e = parse("1,2\n3,4\n5\n").unwrap_err();
        assert!(matches!(e, IngestError::Ragged { line: 3, expected: 2, found: 1 }), "{e}");
        let e = parse("1,2\n# c\n3,abc\n").unwrap_err();
        assert!(matches!(e, IngestError::NotANumber { line: 3, column: 2, .. }), "{e}");
        assert_eq!(e.to_string(), "line 3, column 2: 'abc' is not a number");
        assert!(matches!(parse("1,\n"), Err(IngestError::NotANumber { line: 1, column: 2, .. })));
        let e = parse("0\nnan\n").unwrap_err();
        assert!(matches!(e, IngestError::NonFinite { line: 2, column: 1, .. }), "{e}");
    }
}
