//! Dataset files.
//!
//! Binary layout: the magic `RPTL`, a `u32` format version, `u64` rows and
//! `u64` columns, then row-major little-endian `f64` values. The CSV form has
//! a header `x0,...,x{D-1}` and one point per line.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rptlab_core::Dataset;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"RPTL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a dataset file (bad magic)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("file ends after {got} of {expected} values")]
    Truncated { expected: u64, got: u64 },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("invalid dataset: {0}")]
    Invalid(#[from] rptlab_core::Error),
}

pub fn write_binary<W: Write>(ds: &Dataset, mut w: W) -> Result<(), DataError> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(ds.len() as u64).to_le_bytes())?;
    w.write_all(&(ds.dim() as u64).to_le_bytes())?;
    for x in ds.as_flat() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Dataset, DataError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| DataError::BadMagic)?;
    if &magic != MAGIC {
        return Err(DataError::BadMagic);
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != FORMAT_VERSION {
        return Err(DataError::UnsupportedVersion(version));
    }
    r.read_exact(&mut b8)?;
    let rows = u64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let cols = u64::from_le_bytes(b8);
    let expected = rows.checked_mul(cols).ok_or(DataError::Truncated { expected: u64::MAX, got: 0 })?;
    let mut flat = Vec::with_capacity(expected.min(1 << 28) as usize);
    for got in 0..expected {
        if r.read_exact(&mut b8).is_err() {
            return Err(DataError::Truncated { expected, got });
        }
        flat.push(f64::from_le_bytes(b8));
    }
    if cols == 0 {
        return Err(DataError::Invalid(rptlab_core::Error::InvalidArgument("zero columns".into())));
    }
    Ok(Dataset::from_flat(cols as usize, flat)?)
}

pub fn write_csv<W: Write>(ds: &Dataset, w: W) -> Result<(), DataError> {
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<String> = (0..ds.dim()).map(|i| format!("x{i}")).collect();
    out.write_record(&header).map_err(csv_io)?;
    for row in ds.rows() {
        out.write_record(row.iter().map(|x| x.to_string())).map_err(csv_io)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> DataError {
    DataError::Io(io::Error::other(e))
}

pub fn read_csv<R: Read>(r: R) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(r);
    let header = rdr
        .headers()
        .map_err(|e| DataError::Parse { line: 1, message: e.to_string() })?
        .clone();
    for (i, name) in header.iter().enumerate() {
        if name.trim() != format!("x{i}") {
            return Err(DataError::Parse { line: 1, message: format!("expected column x{i}, found {name:?}") });
        }
    }
    let dim = header.len();
    let mut ds = Dataset::new(dim).map_err(|_| DataError::Parse { line: 1, message: "empty header".into() })?;
    let mut row = Vec::with_capacity(dim);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            DataError::Parse { line, message: e.to_string() }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != dim {
            return Err(DataError::Parse { line, message: format!("expected {dim} fields, found {}", rec.len()) });
        }
        row.clear();
        for field in rec.iter() {
            let x: f64 = field
                .trim()
                .parse()
                .map_err(|_| DataError::Parse { line, message: format!("not a number: {field:?}") })?;
            if !x.is_finite() {
                return Err(DataError::Parse { line, message: format!("non-finite value {field:?}") });
            }
            row.push(x);
        }
        ds.push(&row)?;
    }
    Ok(ds)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads a dataset, choosing the format by the `.csv` extension.
pub fn load(path: &Path) -> Result<Dataset, DataError> {
    let f = BufReader::new(File::open(path)?);
    if is_csv(path) {
        read_csv(f)
    } else {
        read_binary(f)
    }
}

pub fn save(ds: &Dataset, path: &Path) -> Result<(), DataError> {
    let f = BufWriter::new(File::create(path)?);
    if is_csv(path) {
        write_csv(ds, f)
    } else {
        write_binary(ds, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let flat = (0..100 * 10).map(|_| rng.random_range(-1e3..1e3) * rng.random::<f64>()).collect();
        Dataset::from_flat(10, flat).unwrap()
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let ds = sample();
        let mut buf = Vec::new();
        write_binary(&ds, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 + 8 + 8 * 1000);
        let back = read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.dim(), 10);
        assert!(back.as_flat().iter().zip(ds.as_flat()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let ds = sample();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        assert!(buf.starts_with(b"x0,x1,"));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 100);
        assert!(back.as_flat().iter().zip(ds.as_flat()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn binary_errors() {
        assert!(matches!(read_binary(&b"NOPE"[..]), Err(DataError::BadMagic)));
        let mut buf = Vec::new();
        write_binary(&sample(), &mut buf).unwrap();
        buf.truncate(buf.len() - 8);
        assert!(matches!(read_binary(buf.as_slice()), Err(DataError::Truncated { got: 999, .. })));
        buf[4] = 9;
        assert!(matches!(read_binary(buf.as_slice()), Err(DataError::UnsupportedVersion(9))));
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let bad = "x0,x1\n1,2\n3,oops\n";
        match read_csv(bad.as_bytes()) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let ragged = "x0,x1\n1,2\n3,4\n5\n";
        match read_csv(ragged.as_bytes()) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let nan = "x0\n1\nNaN\n";
        assert!(matches!(read_csv(nan.as_bytes()), Err(DataError::Parse { line: 3, .. })));
        assert!(matches!(read_csv("a,b\n1,2\n".as_bytes()), Err(DataError::Parse { line: 1, .. })));
    }

    #[test]
    fn extension_picks_format() {
        let dir = tempfile::tempdir().unwrap();
        let ds = sample();
        for name in ["d.bin", "d.csv"] {
            let p = dir.path().join(name);
            save(&ds, &p).unwrap();
            assert_eq!(load(&p).unwrap().as_flat(), ds.as_flat());
        }
        let text = std::fs::read(dir.path().join("d.csv")).unwrap();
        assert!(text.starts_with(b"x0"));
    }
}
