//! Matrix input: comma-separated text or Matrix Market (array or coordinate).

use std::path::Path;

use nalgebra::{Complex, DMatrix};

/// Failure while reading an input file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Syntax { path: String, line: u64, message: String },
}

/// A dense matrix as read from disk, real unless the file says otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex<f64>>),
}

impl ParsedMatrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            ParsedMatrix::Real(m) => m.shape(),
            ParsedMatrix::Complex(m) => m.shape(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, ParsedMatrix::Complex(_))
    }

    pub fn to_complex(&self) -> DMatrix<Complex<f64>> {
        match self {
            ParsedMatrix::Real(m) => m.map(|x| Complex::new(x, 0.0)),
            ParsedMatrix::Complex(m) => m.clone(),
        }
    }
}

/// Reads a matrix. Files whose first line starts with `%%MatrixMarket` are
/// parsed as Matrix Market, anything else as CSV with one row per line.
pub fn parse_matrix_file(path: &Path) -> Result<ParsedMatrix, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_matrix_str(&text, &path.display().to_string())
}

/// Same as [`parse_matrix_file`] on in-memory text; `name` labels errors.
pub fn parse_matrix_str(text: &str, name: &str) -> Result<ParsedMatrix, ParseError> {
    let first = text.lines().next().unwrap_or("").trim_start();
    if first.to_ascii_lowercase().starts_with("%%matrixmarket") {
        MarketReader { name }.parse(text)
    } else {
        parse_csv(text, name)
    }
}

fn syntax(name: &str, line: u64, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        path: name.to_string(),
        line,
        message: message.into(),
    }
}

fn number(name: &str, line: u64, field: &str) -> Result<f64, ParseError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| syntax(name, line, format!("not a number: {:?}", field.trim())))?;
    if !v.is_finite() {
        return Err(syntax(name, line, format!("non-finite entry {:?}", field.trim())));
    }
    Ok(v)
}

fn parse_csv(text: &str, name: &str) -> Result<ParsedMatrix, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            syntax(name, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .map(|f| number(name, line, f))
            .collect::<Result<Vec<_>, _>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(syntax(
                    name,
                    line,
                    format!("row has {} entries, expected {w}", row.len()),
                ))
            }
            _ => {}
        }
        rows.push(row);
    }
    let cols = width.unwrap_or(0);
    Ok(ParsedMatrix::Real(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Field {
    Real,
    Complex,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

struct MarketReader<'a> {
    name: &'a str,
}

impl MarketReader<'_> {
    fn parse(&self, text: &str) -> Result<ParsedMatrix, ParseError> {
        let name = self.name;
        let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l));
        let (_, header) = lines.next().ok_or_else(|| syntax(name, 1, "empty file"))?;
        let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
        if words.len() != 5 || words[1] != "matrix" {
            return Err(syntax(name, 1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
        }
        let coordinate = match words[2].as_str() {
            "array" => false,
            "coordinate" => true,
            other => return Err(syntax(name, 1, format!("unknown format {other:?}"))),
        };
        let field = match words[3].as_str() {
            "real" | "integer" | "double" => Field::Real,
            "complex" => Field::Complex,
            "pattern" if coordinate => Field::Pattern,
            other => return Err(syntax(name, 1, format!("unsupported field {other:?}"))),
        };
        let symmetry = match words[4].as_str() {
            "general" => Symmetry::General,
            "symmetric" => Symmetry::Symmetric,
            "skew-symmetric" => Symmetry::SkewSymmetric,
            "hermitian" if field == Field::Complex => Symmetry::Hermitian,
            other => return Err(syntax(name, 1, format!("unsupported symmetry {other:?}"))),
        };

        let mut body = lines.filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('%')
        });
        let (size_line, size) = body.next().ok_or_else(|| syntax(name, 1, "missing size line"))?;
        let dims = size
            .split_whitespace()
            .map(|w| {
                w.parse::<usize>()
                    .map_err(|_| syntax(name, size_line, format!("bad size entry {w:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let expected = if coordinate { 3 } else { 2 };
        if dims.len() != expected {
            return Err(syntax(name, size_line, format!("size line needs {expected} integers")));
        }
        let (rows, cols) = (dims[0], dims[1]);
        if symmetry != Symmetry::General && rows != cols {
            return Err(syntax(name, size_line, "symmetric storage requires a square matrix"));
        }
        let mut m = DMatrix::<Complex<f64>>::zeros(rows, cols);

        let width = match field {
            Field::Real => 1,
            Field::Complex => 2,
            Field::Pattern => 0,
        };
        let value = |line: u64, fields: &[&str]| -> Result<Complex<f64>, ParseError> {
            Ok(match field {
                Field::Pattern => Complex::new(1.0, 0.0),
                Field::Real => Complex::new(number(name, line, fields[0])?, 0.0),
                Field::Complex => Complex::new(number(name, line, fields[0])?, number(name, line, fields[1])?),
            })
        };

        let mut count = 0usize;
        if coordinate {
            let nnz = dims[2];
            for (line, l) in body.by_ref() {
                let fields: Vec<&str> = l.split_whitespace().collect();
                if fields.len() != 2 + width {
                    return Err(syntax(name, line, format!("expected {} fields", 2 + width)));
                }
                let index = |f: &str, bound: usize| -> Result<usize, ParseError> {
                    match f.parse::<usize>() {
                        Ok(k) if (1..=bound).contains(&k) => Ok(k - 1),
                        _ => Err(syntax(name, line, format!("index {f:?} out of range 1..={bound}"))),
                    }
                };
                let i = index(fields[0], rows)?;
                let j = index(fields[1], cols)?;
                let v = value(line, &fields[2..])?;
                self.place(&mut m, i, j, v, symmetry, line)?;
                count += 1;
            }
            if count != nnz {
                return Err(syntax(name, size_line, format!("declared {nnz} entries, found {count}")));
            }
        } else {
            // Column-major; symmetric variants list the lower triangle only.
            let mut slots = Vec::new();
            for j in 0..cols {
                let first = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::SkewSymmetric => j + 1,
                    _ => j,
                };
                slots.extend((first..rows).map(|i| (i, j)));
            }
            for (line, l) in body.by_ref() {
                let fields: Vec<&str> = l.split_whitespace().collect();
                if fields.len() != width {
                    return Err(syntax(name, line, format!("expected {width} fields")));
                }
                let &(i, j) = slots
                    .get(count)
                    .ok_or_else(|| syntax(name, line, format!("more than {} entries", slots.len())))?;
                let v = value(line, &fields)?;
                self.place(&mut m, i, j, v, symmetry, line)?;
                count += 1;
            }
            if count != slots.len() {
                return Err(syntax(
                    name,
                    size_line,
                    format!("expected {} entries, found {count}", slots.len()),
                ));
            }
        }

        if field == Field::Complex {
            Ok(ParsedMatrix::Complex(m))
        } else {
            Ok(ParsedMatrix::Real(m.map(|z| z.re)))
        }
    }

    fn place(
        &self,
        m: &mut DMatrix<Complex<f64>>,
        i: usize,
        j: usize,
        v: Complex<f64>,
        symmetry: Symmetry,
        line: u64,
    ) -> Result<(), ParseError> {
        if symmetry != Symmetry::General && i < j {
            return Err(syntax(self.name, line, "entry above the diagonal in symmetric storage"));
        }
        m[(i, j)] = v;
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => m[(j, i)] = v,
                Symmetry::SkewSymmetric => m[(j, i)] = -v,
                Symmetry::Hermitian => m[(j, i)] = v.conj(),
            }
        } else if symmetry == Symmetry::SkewSymmetric && v != Complex::new(0.0, 0.0) {
            return Err(syntax(self.name, line, "nonzero diagonal in skew-symmetric storage"));
        }
        Ok(())
    }
}
