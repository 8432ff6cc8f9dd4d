//! Recorded MCMC output: an `n × p` matrix whose row `i` is `g(X_i)`.
//!
//! Two on-disk formats are supported:
//!
//! * `csv`: a header row `c1,...,cp` followed by one row per iteration.
//! * `bin`: a 16-byte header holding `n` and `p` as little-endian `u64`,
//!   followed by `n * p` little-endian IEEE-754 doubles in row-major order.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

const BIN_HEADER_LEN: usize = 16;
const PAIRWISE_BLOCK: usize = 128;

/// On-disk chain encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainFormat {
    Csv,
    Bin,
}

impl ChainFormat {
    /// Guess the format from a file extension, defaulting to binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ChainFormat::Csv,
            _ => ChainFormat::Bin,
        }
    }
}

impl FromStr for ChainFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ChainFormat::Csv),
            "bin" | "f64le-bin" => Ok(ChainFormat::Bin),
            other => Err(Error::Format(format!("unknown chain format `{other}`"))),
        }
    }
}

impl fmt::Display for ChainFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainFormat::Csv => "csv",
            ChainFormat::Bin => "bin",
        })
    }
}

/// An immutable, validated chain of `n` draws in `p` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    values: Vec<f64>,
    n: usize,
    p: usize,
}

impl Chain {
    /// Build a chain from row-major values.
    pub fn new(values: Vec<f64>, n: usize, p: usize) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Dimension(format!(
                "chain needs n >= 1 and p >= 1, got n = {n}, p = {p}"
            )));
        }
        let declared = n
            .checked_mul(p)
            .ok_or_else(|| Error::Dimension(format!("n * p overflows for n = {n}, p = {p}")))?;
        if values.len() != declared {
            return Err(Error::ShapeMismatch {
                declared,
                actual: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: idx / p,
                col: idx % p,
                value: values[idx],
            });
        }
        Ok(Chain { values, n, p })
    }

    /// Build a chain from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let p = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != p {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {p}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Chain::new(values, rows.len(), p)
    }

    /// A one-dimensional chain.
    pub fn from_series(series: &[f64]) -> Result<Self> {
        Chain::new(series.to_vec(), series.len(), 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Row-major backing storage.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    /// Copy of column `j` as a univariate series.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Column `j` as a `p = 1` chain.
    pub fn component(&self, j: usize) -> Chain {
        Chain {
            values: self.column(j),
            n: self.n,
            p: 1,
        }
    }

    /// Sample mean `μ_n`, accumulated with pairwise summation.
    pub fn mean(&self) -> Vec<f64> {
        let mut sums = pairwise_column_sums(&self.values, self.p, 0, self.n);
        let inv_n = 1.0 / self.n as f64;
        sums.iter_mut().for_each(|s| *s *= inv_n);
        sums
    }

    /// Row-major values with the sample mean subtracted from every row.
    pub fn centered(&self) -> Vec<f64> {
        let mu = self.mean();
        self.values
            .chunks_exact(self.p)
            .flat_map(|row| row.iter().zip(&mu).map(|(x, m)| x - m))
            .collect()
    }

    /// Apply `f` to every row, producing a chain of dimension `q`.
    pub fn map_rows<F>(&self, q: usize, mut f: F) -> Result<Chain>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut out = vec![0.0; self.n * q];
        for (row, dst) in self.rows().zip(out.chunks_exact_mut(q)) {
            f(row, dst);
        }
        Chain::new(out, self.n, q)
    }

    pub fn load(path: impl AsRef<Path>, format: ChainFormat) -> Result<Self> {
        let path = path.as_ref();
        match format {
            ChainFormat::Csv => load_csv(path),
            ChainFormat::Bin => {
                let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
                decode_bin(&bytes)
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>, format: ChainFormat) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        match format {
            ChainFormat::Csv => self.write_csv(&mut w),
            ChainFormat::Bin => w.write_all(&self.encode_bin()),
        }
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
    }

    /// Encode in the binary layout.
    pub fn encode_bin(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BIN_HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.p as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.p).map(|j| format!("c{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for row in self.rows() {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    w.write_all(b",")?;
                }
                // Debug formatting is the shortest representation that parses back exactly.
                write!(w, "{v:?}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Decode the binary layout.
pub fn decode_bin(bytes: &[u8]) -> Result<Chain> {
    if bytes.len() < BIN_HEADER_LEN {
        return Err(Error::Format(format!(
            "binary chain needs a {BIN_HEADER_LEN}-byte header, file has {} bytes",
            bytes.len()
        )));
    }
    let n = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
    let p = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body = &bytes[BIN_HEADER_LEN..];
    if !body.len().is_multiple_of(8) {
        return Err(Error::Format(format!(
            "binary body length {} is not a multiple of 8",
            body.len()
        )));
    }
    let actual = body.len() / 8;
    let declared = usize::try_from(n)
        .ok()
        .zip(usize::try_from(p).ok())
        .and_then(|(n, p)| n.checked_mul(p))
        .ok_or_else(|| Error::Format(format!("header shape ({n}, {p}) overflows")))?;
    if declared != actual {
        return Err(Error::ShapeMismatch { declared, actual });
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Chain::new(values, n as usize, p as usize)
}

fn load_csv(path: &Path) -> Result<Chain> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Format(format!("{other:?}")),
        })?;
    let header = reader.headers()?.clone();
    let p = header.len();
    for (j, name) in header.iter().enumerate() {
        if name != format!("c{}", j + 1) {
            return Err(Error::Format(format!(
                "header column {} is `{name}`, expected `c{}`",
                j + 1,
                j + 1
            )));
        }
    }
    let mut values = Vec::new();
    let mut n = 0usize;
    for record in reader.records() {
        let record = record?;
        if record.len() != p {
            return Err(Error::ShapeMismatch {
                declared: (n + 1) * p,
                actual: n * p + record.len(),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                Error::Format(format!("row {n}, column {col}: cannot parse `{field}`"))
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite { row: n, col, value });
            }
            values.push(value);
        }
        n += 1;
    }
    Chain::new(values, n, p)
}

fn pairwise_column_sums(values: &[f64], p: usize, lo: usize, hi: usize) -> Vec<f64> {
    if hi - lo <= PAIRWISE_BLOCK {
        let mut sums = vec![0.0; p];
        for row in values[lo * p..hi * p].chunks_exact(p) {
            sums.iter_mut().zip(row).for_each(|(s, x)| *s += x);
        }
        return sums;
    }
    let mid = lo + (hi - lo) / 2;
    let mut left = pairwise_column_sums(values, p, lo, mid);
    let right = pairwise_column_sums(values, p, mid, hi);
    left.iter_mut().zip(right).for_each(|(l, r)| *l += r);
    left
}
