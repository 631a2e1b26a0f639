//! Matrix Market coordinate files.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use hsira_core::sparse::{Field, Symmetry};
use hsira_core::{SparseMatrix, C64};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MtxError {
    #[error("cannot read {path}: {source}")]
    Open { path: String, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: malformed header: {detail}")]
    Header { line: usize, detail: String },
    #[error("line {line}: dense array format is not supported, expected `coordinate`")]
    ArrayFormat { line: usize },
    #[error("line {line}: malformed size line: {detail}")]
    SizeLine { line: usize, detail: String },
    #[error("line {line}: matrix is {rows}x{cols}, only square matrices are supported")]
    NonSquare { line: usize, rows: usize, cols: usize },
    #[error("line {line}: malformed entry: {detail}")]
    Entry { line: usize, detail: String },
    #[error("line {line}: index ({row}, {col}) outside a {n}x{n} matrix")]
    IndexOutOfRange { line: usize, row: usize, col: usize, n: usize },
    #[error("line {line}: header announced {expected} entries, found {found}")]
    NnzMismatch { line: usize, expected: usize, found: usize },
}

fn parse_field(s: &str) -> Option<Field> {
    match s {
        "real" | "double" => Some(Field::Real),
        "complex" => Some(Field::Complex),
        "integer" => Some(Field::Integer),
        "pattern" => Some(Field::Pattern),
        _ => None,
    }
}

fn parse_symmetry(s: &str) -> Option<Symmetry> {
    match s {
        "general" => Some(Symmetry::General),
        "symmetric" => Some(Symmetry::Symmetric),
        "hermitian" => Some(Symmetry::Hermitian),
        "skew-symmetric" => Some(Symmetry::SkewSymmetric),
        _ => None,
    }
}

fn parse_header(line: &str, lineno: usize) -> Result<(Field, Symmetry), MtxError> {
    let bad = |detail: &str| MtxError::Header {
        line: lineno,
        detail: detail.into(),
    };
    let lower = line.to_ascii_lowercase();
    let tokens: Vec<&str> = lower.split_whitespace().collect();
    if tokens.first() != Some(&"%%matrixmarket") {
        return Err(bad("expected `%%MatrixMarket`"));
    }
    if tokens.len() != 5 {
        return Err(bad("expected `%%MatrixMarket matrix coordinate <field> <symmetry>`"));
    }
    if tokens[1] != "matrix" {
        return Err(bad("object must be `matrix`"));
    }
    match tokens[2] {
        "coordinate" => {}
        "array" => return Err(MtxError::ArrayFormat { line: lineno }),
        other => return Err(bad(&format!("unknown format `{other}`"))),
    }
    let field = parse_field(tokens[3]).ok_or_else(|| bad(&format!("unknown field `{}`", tokens[3])))?;
    let symmetry = parse_symmetry(tokens[4]).ok_or_else(|| bad(&format!("unknown symmetry `{}`", tokens[4])))?;
    if field == Field::Pattern && symmetry == Symmetry::Hermitian {
        return Err(bad("pattern matrices cannot be hermitian"));
    }
    Ok((field, symmetry))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, lineno: usize, what: &str) -> Result<T, MtxError> {
    let tok = tok.ok_or_else(|| MtxError::Entry {
        line: lineno,
        detail: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| MtxError::Entry {
        line: lineno,
        detail: format!("cannot parse {what} `{tok}`"),
    })
}

/// Reads a coordinate-format matrix. Symmetric, Hermitian and
/// skew-symmetric storage is expanded, duplicates are summed and pattern
/// entries get the value 1.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrix, MtxError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (field, symmetry) = match lines.next() {
        Some((no, line)) => parse_header(&line?, no)?,
        None => {
            return Err(MtxError::Header {
                line: 1,
                detail: "empty file".into(),
            })
        }
    };

    let mut size: Option<(usize, usize)> = None;
    let mut entries: Vec<(usize, usize, C64)> = Vec::new();
    let mut last_line = 1;
    for (no, line) in lines {
        let line = line?;
        last_line = no;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut toks = t.split_whitespace();
        let Some((n, nnz)) = size else {
            let nums: Result<Vec<usize>, _> = toks.map(str::parse).collect();
            let nums = nums.map_err(|_| MtxError::SizeLine {
                line: no,
                detail: format!("`{t}`"),
            })?;
            let [rows, cols, nnz] = nums[..] else {
                return Err(MtxError::SizeLine {
                    line: no,
                    detail: "expected `rows cols nnz`".into(),
                });
            };
            if rows != cols {
                return Err(MtxError::NonSquare { line: no, rows, cols });
            }
            size = Some((rows, nnz));
            entries.reserve(nnz);
            continue;
        };
        if entries.len() == nnz {
            return Err(MtxError::NnzMismatch {
                line: no,
                expected: nnz,
                found: nnz + 1,
            });
        }
        let row: usize = parse_num(toks.next(), no, "row index")?;
        let col: usize = parse_num(toks.next(), no, "column index")?;
        if row == 0 || col == 0 || row > n || col > n {
            return Err(MtxError::IndexOutOfRange { line: no, row, col, n });
        }
        let value = match field {
            Field::Pattern => C64::new(1.0, 0.0),
            Field::Real | Field::Integer => C64::new(parse_num(toks.next(), no, "value")?, 0.0),
            Field::Complex => C64::new(
                parse_num(toks.next(), no, "real part")?,
                parse_num(toks.next(), no, "imaginary part")?,
            ),
        };
        if let Some(extra) = toks.next() {
            return Err(MtxError::Entry {
                line: no,
                detail: format!("unexpected trailing token `{extra}`"),
            });
        }
        if symmetry != Symmetry::General && col > row {
            log::debug!("line {no}: upper-triangle entry in {symmetry:?} storage");
        }
        entries.push((row - 1, col - 1, value));
    }
    let Some((n, nnz)) = size else {
        return Err(MtxError::SizeLine {
            line: last_line,
            detail: "missing size line".into(),
        });
    };
    if entries.len() != nnz {
        return Err(MtxError::NnzMismatch {
            line: last_line,
            expected: nnz,
            found: entries.len(),
        });
    }
    SparseMatrix::from_triplets(n, &entries, field, symmetry).map_err(|e| MtxError::Entry {
        line: last_line,
        detail: e.to_string(),
    })
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix, MtxError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| MtxError::Open {
        path: path.display().to_string(),
        source,
    })?;
    read_matrix_market(BufReader::new(file))
}

/// Writes `a` in coordinate format. Matrices that were loaded from symmetric
/// storage are written back as their lower triangle with the same declaration.
pub fn write_matrix_market<W: Write>(mut w: W, a: &SparseMatrix) -> io::Result<()> {
    let triplets: Vec<_> = a.triplets().collect();
    let field = match a.field() {
        Field::Complex => "complex",
        Field::Integer if triplets.iter().all(|t| t.2.im == 0.0 && t.2.re.fract() == 0.0) => "integer",
        Field::Pattern if triplets.iter().all(|t| t.2 == C64::new(1.0, 0.0)) => "pattern",
        _ if triplets.iter().any(|t| t.2.im != 0.0) => "complex",
        _ => "real",
    };
    let symmetry = match a.symmetry() {
        Symmetry::General => "general",
        Symmetry::Symmetric => "symmetric",
        Symmetry::Hermitian => "hermitian",
        Symmetry::SkewSymmetric => "skew-symmetric",
    };
    let kept: Vec<_> = triplets
        .into_iter()
        .filter(|&(i, j, _)| a.symmetry() == Symmetry::General || i >= j)
        .collect();
    writeln!(w, "%%MatrixMarket matrix coordinate {field} {symmetry}")?;
    writeln!(w, "{} {} {}", a.dim(), a.dim(), kept.len())?;
    for (i, j, v) in kept {
        match field {
            "pattern" => writeln!(w, "{} {}", i + 1, j + 1)?,
            "complex" => writeln!(w, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im)?,
            "integer" => writeln!(w, "{} {} {}", i + 1, j + 1, v.re as i64)?,
            _ => writeln!(w, "{} {} {:e}", i + 1, j + 1, v.re)?,
        }
    }
    w.flush()
}

pub fn save_matrix_market(path: impl AsRef<Path>, a: &SparseMatrix) -> io::Result<()> {
    write_matrix_market(BufWriter::new(File::create(path)?), a)
}
