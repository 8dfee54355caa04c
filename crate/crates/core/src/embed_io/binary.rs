use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::EmbeddingTable;

struct Reader<'a, R> {
    inner: R,
    offset: u64,
    source: &'a str,
}

impl<R: BufRead> Reader<'_, R> {
    fn error(&self, offset: u64, message: impl Into<String>) -> Error {
        Error::BinaryParse {
            source_name: self.source.to_string(),
            offset,
            message: message.into(),
        }
    }

    fn io_error(&self, e: io::Error) -> Error {
        self.error(self.offset, format!("read failed: {e}"))
    }

    /// Reads up to and excluding `delim`. `None` on clean EOF before any byte.
    fn read_until(&mut self, delim: u8) -> Result<Option<Vec<u8>>> {
        let start = self.offset;
        let mut buf = Vec::new();
        let n = self
            .inner
            .read_until(delim, &mut buf)
            .map_err(|e| self.io_error(e))?;
        self.offset += n as u64;
        if n == 0 {
            return Ok(None);
        }
        if buf.last() != Some(&delim) {
            return Err(self.error(
                start,
                format!("unexpected end of file looking for byte 0x{delim:02x}"),
            ));
        }
        buf.pop();
        Ok(Some(buf))
    }

    fn skip_newlines(&mut self) -> Result<()> {
        loop {
            let (n, exhausted) = match self.inner.fill_buf() {
                Ok(buf) => {
                    let n = buf.iter().take_while(|&&b| b == b'\n').count();
                    (n, n == buf.len())
                }
                Err(e) => return Err(self.io_error(e)),
            };
            self.inner.consume(n);
            self.offset += n as u64;
            if !exhausted || n == 0 {
                return Ok(());
            }
        }
    }

    fn read_exact(&mut self, buf: &mut [u8]) -> Result<()> {
        let start = self.offset;
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == io::ErrorKind::UnexpectedEof {
                self.error(
                    start,
                    format!("truncated: expected {} more bytes", buf.len()),
                )
            } else {
                self.io_error(e)
            }
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }
}

/// Parses a word2vec binary stream. `source` names the input in errors.
pub fn read_binary<T: Scalar, R: BufRead>(
    reader: R,
    source: &str,
    limit: Option<usize>,
) -> Result<EmbeddingTable<T>> {
    let mut r = Reader {
        inner: reader,
        offset: 0,
        source,
    };

    let header = r
        .read_until(b'\n')?
        .ok_or_else(|| r.error(0, "empty file"))?;
    let header = String::from_utf8_lossy(&header);
    let mut fields = header.split_ascii_whitespace();
    let (count, dim) = match (fields.next(), fields.next(), fields.next()) {
        (Some(c), Some(d), None) => match (c.parse::<usize>(), d.parse::<usize>()) {
            (Ok(c), Ok(d)) if d > 0 => (c, d),
            _ => return Err(r.error(0, format!("malformed header `{header}`"))),
        },
        _ => return Err(r.error(0, format!("malformed header `{header}`"))),
    };

    let rows = limit.map_or(count, |l| l.min(count));
    let mut words = Vec::with_capacity(rows);
    let mut data: Vec<T> = Vec::with_capacity(rows * dim);
    let mut payload = vec![0u8; dim * 4];
    for _ in 0..rows {
        r.skip_newlines()?;
        let word_at = r.offset;
        let word = r.read_until(b' ')?.ok_or_else(|| {
            r.error(
                word_at,
                format!("truncated: {} of {count} entries", words.len()),
            )
        })?;
        let payload_at = r.offset;
        r.read_exact(&mut payload)?;
        for (i, chunk) in payload.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            if !v.is_finite() {
                return Err(r.error(payload_at + 4 * i as u64, "non-finite value"));
            }
            data.push(T::from_f64_lossy(v as f64));
        }
        words.push(String::from_utf8_lossy(&word).into_owned());
    }

    EmbeddingTable::from_rows(words, data, dim)
}

/// Writes `table` in word2vec binary layout, one trailing newline per entry.
pub fn write_binary<T: Scalar, W: Write>(table: &EmbeddingTable<T>, w: &mut W) -> io::Result<()> {
    writeln!(w, "{} {}", table.len(), table.dim())?;
    for (word, row) in table.words().iter().zip(table.rows()) {
        w.write_all(word.as_bytes())?;
        w.write_all(b" ")?;
        for v in row {
            w.write_all(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes())?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(newline_after_floats: bool) -> Vec<u8> {
        let mut bytes = b"2 3\n".to_vec();
        for (word, vals) in [("a", [1.0f32, -2.5, 0.125]), ("b", [3.0, 0.0, -1.0e-3])] {
            bytes.extend_from_slice(word.as_bytes());
            bytes.push(b' ');
            for v in vals {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            if newline_after_floats {
                bytes.push(b'\n');
            }
        }
        bytes
    }

    #[test]
    fn reads_known_payload() {
        for nl in [true, false] {
            let t: EmbeddingTable<f32> = read_binary(&fixture(nl)[..], "fixture", None).unwrap();
            assert_eq!(t.words(), &["a".to_string(), "b".to_string()]);
            assert_eq!(t.row(0), &[1.0, -2.5, 0.125]);
            assert_eq!(t.row(1), &[3.0, 0.0, -1.0e-3]);
        }
    }

    #[test]
    fn limit_keeps_first_rows() {
        let t: EmbeddingTable<f32> = read_binary(&fixture(true)[..], "fixture", Some(1)).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.word(0), "a");
    }

    #[test]
    fn empty_file_is_an_error() {
        let err = read_binary::<f32, _>(&b""[..], "empty", None).unwrap_err();
        assert!(matches!(err, Error::BinaryParse { offset: 0, .. }), "{err}");
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let bytes = fixture(true);
        let cut = &bytes[..bytes.len() - 3];
        match read_binary::<f32, _>(cut, "cut", None).unwrap_err() {
            Error::BinaryParse { offset, .. } => assert_eq!(offset, 4 + 2 + 12 + 1 + 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_header() {
        assert!(read_binary::<f32, _>(&b"two 3\n"[..], "bad", None).is_err());
        assert!(read_binary::<f32, _>(&b"2\n"[..], "bad", None).is_err());
        assert!(read_binary::<f32, _>(&b"2 0\n"[..], "bad", None).is_err());
    }

    #[test]
    fn non_finite_value_reports_offset() {
        let mut bytes = b"1 2\nw ".to_vec();
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&f32::INFINITY.to_le_bytes());
        match read_binary::<f32, _>(&bytes[..], "inf", None).unwrap_err() {
            Error::BinaryParse { offset, .. } => assert_eq!(offset, 10),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn write_then_read_is_exact() {
        let t: EmbeddingTable<f32> = read_binary(&fixture(false)[..], "fixture", None).unwrap();
        let mut out = Vec::new();
        write_binary(&t, &mut out).unwrap();
        assert_eq!(out, fixture(true));
    }
}
