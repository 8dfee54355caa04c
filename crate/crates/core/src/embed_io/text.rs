use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::EmbeddingTable;

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut fields = line.split_ascii_whitespace();
    match (fields.next(), fields.next(), fields.next()) {
        (Some(c), Some(d), None) => Some((c.parse().ok()?, d.parse().ok()?)),
        _ => None,
    }
}

/// Parses the text format. A first line consisting of exactly two unsigned
/// integers is taken as a `count dim` header.
pub fn read_text<T: Scalar, R: BufRead>(
    reader: R,
    source: &str,
    limit: Option<usize>,
) -> Result<EmbeddingTable<T>> {
    let err = |line: usize, message: String| Error::TextParse {
        source_name: source.to_string(),
        line,
        message,
    };

    let mut words = Vec::new();
    let mut data: Vec<T> = Vec::new();
    let mut dim: Option<usize> = None;
    let limit = limit.unwrap_or(usize::MAX);

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| err(lineno, e.to_string()))?;
        let line = line.trim_end_matches(['\n', '\r', ' ', '\t']);
        if line.is_empty() {
            continue;
        }
        if idx == 0 {
            if let Some((_, d)) = parse_header(line) {
                if d == 0 {
                    return Err(err(lineno, "header declares dimension 0".into()));
                }
                dim = Some(d);
                continue;
            }
        }
        if words.len() >= limit {
            break;
        }

        let mut fields = line.split(' ');
        let word = fields.next().unwrap_or_default();
        if word.is_empty() {
            return Err(err(lineno, "missing word".into()));
        }
        let start = data.len();
        for field in fields {
            let v: f64 = field
                .parse()
                .map_err(|_| err(lineno, format!("invalid number `{field}`")))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("non-finite value `{field}`")));
            }
            data.push(T::from_f64_lossy(v));
        }
        let n = data.len() - start;
        match dim {
            None if n == 0 => return Err(err(lineno, "no values after word".into())),
            None => dim = Some(n),
            Some(d) if d != n => {
                return Err(err(lineno, format!("expected {d} values, found {n}")));
            }
            Some(_) => {}
        }
        words.push(word.to_string());
    }

    let dim = dim.ok_or_else(|| err(0, "no embedding rows".into()))?;
    if words.is_empty() {
        return Err(err(0, "no embedding rows".into()));
    }
    EmbeddingTable::from_rows(words, data, dim)
}

/// Writes `table` as text with a header line and six decimals per value.
pub fn write_text<T: Scalar, W: Write>(table: &EmbeddingTable<T>, w: &mut W) -> io::Result<()> {
    writeln!(w, "{} {}", table.len(), table.dim())?;
    for (word, row) in table.words().iter().zip(table.rows()) {
        w.write_all(word.as_bytes())?;
        for v in row {
            write!(w, " {:.6}", v.to_f64().unwrap_or(f64::NAN))?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<EmbeddingTable<f32>> {
        read_text(s.as_bytes(), "inline", None)
    }

    #[test]
    fn two_plain_lines() {
        let t = read("a 1 0\nb 0 1\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 2);
        assert_eq!(t.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn header_is_detected() {
        assert_eq!(
            read("2 2\na 1 0\nb 0 1\n").unwrap(),
            read("a 1 0\nb 0 1\n").unwrap()
        );
    }

    #[test]
    fn inconsistent_dimension_names_line() {
        match read("a 1 0\nb 0 1 2\n").unwrap_err() {
            Error::TextParse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn header_dimension_is_enforced() {
        match read("1 3\na 1 0\n").unwrap_err() {
            Error::TextParse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bad_number_and_empty_input() {
        assert!(read("a 1 x\n").is_err());
        assert!(read("").is_err());
        assert!(read("a 1 nan\n").is_err());
    }

    #[test]
    fn limit_and_crlf() {
        let t: EmbeddingTable<f32> =
            read_text("a 1 0\r\nb 0 1\r\n".as_bytes(), "crlf", Some(1)).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.row(0), &[1.0, 0.0]);
    }
}
