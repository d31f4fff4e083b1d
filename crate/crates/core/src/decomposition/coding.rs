use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a coding matrix was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ovr,
    Ovo,
    Custom,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Ovr => "ovr",
            Scheme::Ovo => "ovo",
            Scheme::Custom => "custom",
        })
    }
}

/// Entry of a coding matrix: the class goes to superset 0, superset 1, or is left out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Code {
    Zero,
    One,
    DontCare,
}

impl Code {
    pub fn as_u8(self) -> u8 {
        match self {
            Code::Zero => 0,
            Code::One => 1,
            Code::DontCare => 2,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Code::Zero),
            1 => Ok(Code::One),
            2 => Ok(Code::DontCare),
            other => Err(Error::CodingMatrix(format!("entry {other} is not one of 0, 1, 2"))),
        }
    }
}

/// `K x L` matrix over {0, 1, 2}: one row per class, one column per binary classifier.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingMatrix {
    scheme: Scheme,
    classes: usize,
    columns: usize,
    entries: Vec<Code>,
}

impl CodingMatrix {
    /// One-vs-rest (`L = K`) or one-vs-one (`L = K(K-1)/2`).
    ///
    /// One-vs-one columns are ordered by `(a, b)` with `a < b`, class `a` coded 1
    /// and class `b` coded 0.
    pub fn build(scheme: Scheme, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::CodingMatrix(format!("need at least 2 classes, got {k}")));
        }
        let (columns, entries) = match scheme {
            Scheme::Ovr => {
                let e = (0..k * k).map(|i| if i / k == i % k { Code::One } else { Code::Zero }).collect();
                (k, e)
            }
            Scheme::Ovo => {
                let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
                let l = pairs.len();
                let mut e = vec![Code::DontCare; k * l];
                for (j, &(a, b)) in pairs.iter().enumerate() {
                    e[a * l + j] = Code::One;
                    e[b * l + j] = Code::Zero;
                }
                (l, e)
            }
            Scheme::Custom => {
                return Err(Error::CodingMatrix("custom matrices are loaded, not generated".into()));
            }
        };
        Ok(Self { scheme, classes: k, columns, entries })
    }

    /// Builds and validates a matrix from rows of entries.
    pub fn from_rows(rows: &[Vec<u8>], scheme: Scheme) -> Result<Self> {
        let classes = rows.len();
        let columns = rows.first().map_or(0, Vec::len);
        if classes < 2 || columns == 0 {
            return Err(Error::CodingMatrix(format!("matrix is {classes}x{columns}; need at least 2 rows and 1 column")));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != columns) {
            return Err(Error::CodingMatrix(format!("row {} has {} entries, expected {columns}", i + 1, rows[i].len())));
        }
        let entries = rows.iter().flatten().map(|&v| Code::from_u8(v)).collect::<Result<Vec<_>>>()?;
        let m = Self { scheme, classes, columns, entries };
        m.validate()?;
        Ok(m)
    }

    /// Parses whitespace-separated rows; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<u8>()
                        .map_err(|_| Error::CodingMatrix(format!("line {}: '{t}' is not an entry", n + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows, Scheme::Custom)
    }

    /// Checks every column splits into two non-empty supersets and every pair
    /// of rows differs somewhere both are defined.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for j in 0..self.columns {
            let col: Vec<Code> = (0..self.classes).map(|i| self.get(i, j)).collect();
            if !col.contains(&Code::Zero) || !col.contains(&Code::One) {
                problems.push(format!("column {} lacks a 0 or a 1", j + 1));
            }
        }
        for a in 0..self.classes {
            for b in a + 1..self.classes {
                let separated = (0..self.columns).any(|j| {
                    let (x, y) = (self.get(a, j), self.get(b, j));
                    x != Code::DontCare && y != Code::DontCare && x != y
                });
                if !separated {
                    problems.push(format!("rows {} and {} are not separated by any column", a + 1, b + 1));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::CodingMatrix(problems.join("; ")))
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    /// Entry for zero-based class row `i` and column `j`.
    pub fn get(&self, i: usize, j: usize) -> Code {
        self.entries[i * self.columns + j]
    }

    pub fn row(&self, i: usize) -> &[Code] {
        &self.entries[i * self.columns..(i + 1) * self.columns]
    }

    pub fn rows_u8(&self) -> Vec<Vec<u8>> {
        (0..self.classes).map(|i| self.row(i).iter().map(|c| c.as_u8()).collect()).collect()
    }
}

impl fmt::Display for CodingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows_u8() {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ovr" => Ok(Scheme::Ovr),
            "ovo" => Ok(Scheme::Ovo),
            other => Err(Error::config(format!("unknown scheme '{other}' (expected ovr or ovo)"))),
        }
    }
}
