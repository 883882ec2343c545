use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::{EmbeddingKind, EmbeddingSet, Provenance};
use crate::error::{HgmnError, Result};

/// Text format: a `N F` header line, then N rows of F numbers.
pub fn save_embeddings(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let m = set.matrix();
    let mut s = String::with_capacity(m.len() * 12);
    let _ = writeln!(s, "{} {}", m.nrows(), m.ncols());
    for row in m.rows() {
        let mut first = true;
        for x in row {
            if !first {
                s.push(' ');
            }
            first = false;
            // `{}` on f64 prints the shortest string that parses back exactly.
            let _ = write!(s, "{x}");
        }
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| HgmnError::io(path, e))
}

pub fn load_embeddings(path: &Path, kind: EmbeddingKind) -> Result<EmbeddingSet> {
    let text = std::fs::read_to_string(path).map_err(|e| HgmnError::io(path, e))?;
    parse_embeddings(&text, path, kind)
}

pub fn parse_embeddings(text: &str, origin: &Path, kind: EmbeddingKind) -> Result<EmbeddingSet> {
    let parse_err = |line: usize, message: String| HgmnError::Parse {
        path: origin.into(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing `N F` header".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(hline, format!("bad header token {t:?}"))))
        .collect::<Result<_>>()?;
    let [n, f] = dims[..] else {
        return Err(parse_err(hline, "header must be `N F`".into()));
    };
    let mut data = Vec::with_capacity(n * f);
    let mut rows = 0;
    for (lineno, line) in lines {
        rows += 1;
        if rows > n {
            continue;
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let x: f64 = tok
                .parse()
                .map_err(|_| parse_err(lineno, format!("non-numeric token {tok:?}")))?;
            data.push(x);
        }
        if data.len() - before != f {
            return Err(parse_err(
                lineno,
                format!("expected {f} values, found {}", data.len() - before),
            ));
        }
    }
    if rows != n {
        return Err(HgmnError::RowCount {
            expected: n,
            actual: rows,
        });
    }
    let matrix = Array2::from_shape_vec((n, f), data).expect("row widths checked");
    EmbeddingSet::new(matrix, kind, Provenance::Loaded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn parse(text: &str) -> Result<EmbeddingSet> {
        parse_embeddings(text, Path::new("emb.txt"), EmbeddingKind::Role)
    }

    #[test]
    fn reads_header_and_rows() {
        let e = parse("3 2\n1 2\n3 4\n5 6\n").unwrap();
        assert_eq!(e.matrix(), &array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        assert_eq!(e.provenance(), Provenance::Loaded);
    }

    #[test]
    fn short_file_names_counts() {
        let err = parse("3 2\n1 2\n3 4\n").unwrap_err();
        assert!(matches!(err, HgmnError::RowCount { expected: 3, actual: 2 }), "{err}");
        assert!(err.to_string().contains("expected 3"));
    }

    #[test]
    fn non_numeric_token() {
        let err = parse("1 2\n1 x\n").unwrap_err();
        assert!(matches!(err, HgmnError::Parse { line: 2, .. }), "{err}");
        assert!(parse("1 2\n1 NaN\n").is_err());
        assert!(parse("1 2\n1 2 3\n").is_err());
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = Array2::from_shape_fn((4, 3), |(i, j)| ((i * 7 + j) as f64).sin() / 3.0);
        let e = EmbeddingSet::new(m, EmbeddingKind::Adjacency, Provenance::Generated).unwrap();
        let p = dir.path().join("e.txt");
        save_embeddings(&e, &p).unwrap();
        let back = load_embeddings(&p, EmbeddingKind::Adjacency).unwrap();
        assert_eq!(back.matrix(), e.matrix());
    }
}
