//! File access for the command-line tools: binary tensors and masks, CSV
//! ingestion and atomic writes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use tempfile::NamedTempFile;
use tensorfill::format::{read_mask, read_tensor, write_mask, write_tensor};
use tensorfill::{Dims, ObservationMask, Tensor3};

use crate::error::{CliError, Result};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })
}

/// Writes through a temporary file in the target directory, then renames it
/// into place.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let io_err = |source| CliError::Io {
        path: path.to_owned(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush().map_err(io_err)?;
    }
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn load_tensor(path: &Path) -> Result<Tensor3> {
    read_tensor(&mut open(path)?).map_err(|source| CliError::File {
        path: path.to_owned(),
        source,
    })
}

pub fn load_mask(path: &Path) -> Result<ObservationMask> {
    read_mask(&mut open(path)?).map_err(|source| CliError::File {
        path: path.to_owned(),
        source,
    })
}

pub fn save_tensor(path: &Path, x: &Tensor3) -> Result<()> {
    write_atomic(path, |mut w| Ok(write_tensor(&mut w, x)?))
}

pub fn save_mask(path: &Path, mask: &ObservationMask) -> Result<()> {
    write_atomic(path, |mut w| Ok(write_mask(&mut w, mask)?))
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|source| CliError::Json {
        path: path.to_owned(),
        source,
    })
}

pub fn save_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|source| CliError::Json {
            path: path.to_owned(),
            source,
        })?;
        writeln!(w).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })
    })
}

/// Reads a location-by-time matrix of `n1` rows and `n2 * n3` columns.
///
/// Column `c` holds time-of-day `c % n2` of day `c / n2`, so the matrix is
/// the mode-1 unfolding of the result. Blank cells are returned as unobserved
/// entries with value 0.
pub fn ingest_csv(path: &Path, dims: Dims) -> Result<(Tensor3, ObservationMask)> {
    let [n1, n2, n3] = dims.0;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut x = Tensor3::zeros(dims);
    let mut mask = ObservationMask::full(dims);
    let parse_err = |row: usize, col: usize, msg: String| CliError::Parse {
        path: path.to_owned(),
        row,
        col,
        msg,
    };
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if r >= n1 {
            return Err(parse_err(row, 1, format!("expected {n1} rows")));
        }
        if record.len() != n2 * n3 {
            return Err(parse_err(
                row,
                record.len().min(n2 * n3) + 1,
                format!("expected {} columns, found {}", n2 * n3, record.len()),
            ));
        }
        for (c, cell) in record.iter().enumerate() {
            let (i2, i3) = (c % n2, c / n2);
            if cell.is_empty() {
                mask.set(r, i2, i3, false);
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(row, c + 1, format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(row, c + 1, format!("non-finite value {cell:?}")));
            }
            x.set(r, i2, i3, v);
        }
        rows += 1;
    }
    if rows != n1 {
        return Err(parse_err(rows + 1, 1, format!("expected {n1} rows, found {rows}")));
    }
    Ok((x, mask))
}
