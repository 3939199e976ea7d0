//! Reading loss files. Every failure here is an input error (exit status 2).

use std::fs::File;
use std::path::Path;

use anyhow::{anyhow, Context, Result};

/// Marks errors caused by unreadable or malformed input files.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_err(msg: String) -> anyhow::Error {
    anyhow!(InputError(msg))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file =
        File::open(path).map_err(|e| input_err(format!("cannot open {}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_cell(path: &Path, line: u64, cell: &str) -> Result<f64> {
    cell.parse::<f64>()
        .map_err(|_| input_err(format!("{}:{line}: not a number: {cell:?}", path.display())))
}

/// One loss per line, optionally under a `loss` header.
pub fn read_losses(path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, record) in reader(path)?.records().enumerate() {
        let record = record.map_err(|e| input_err(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if i == 0 && record.len() == 1 && record[0].eq_ignore_ascii_case("loss") {
            continue;
        }
        if record.len() != 1 {
            return Err(input_err(format!(
                "{}:{line}: expected one value per line, found {}",
                path.display(),
                record.len()
            )));
        }
        out.push(parse_cell(path, line, &record[0])?);
    }
    if out.is_empty() {
        return Err(input_err(format!("{}: no losses found", path.display())));
    }
    Ok(out)
}

/// One hypothesis per line, comma-separated losses, no header.
pub fn read_loss_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader(path)?.records().enumerate() {
        let record = record.map_err(|e| input_err(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let row = record
            .iter()
            .map(|cell| parse_cell(path, line, cell))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(input_err(format!(
                    "{}:{line}: expected {} columns, found {}",
                    path.display(),
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(input_err(format!("{}: no rows found", path.display())));
    }
    Ok(rows)
}

/// Creates the output file up front so an unwritable path fails before any
/// work is done.
pub fn create_output(path: Option<&Path>) -> Result<Option<File>> {
    path.map(|p| {
        File::create(p)
            .with_context(|| format!("cannot create {}", p.display()))
            .map_err(|e| input_err(format!("{e:#}")))
    })
    .transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn losses_with_and_without_header() {
        assert_eq!(
            read_losses(file("loss\n1\n2.5\n").path()).unwrap(),
            vec![1.0, 2.5]
        );
        assert_eq!(read_losses(file("3\n4\n").path()).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn bad_cell_reports_line() {
        let err = read_losses(file("loss\n1\nx\n").path()).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
        assert!(err.downcast_ref::<InputError>().is_some());
    }

    #[test]
    fn ragged_matrix_reports_line() {
        let err = read_loss_matrix(file("1,2\n3,4\n5\n").path()).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(read_losses(file("loss\n").path()).is_err());
        assert!(read_loss_matrix(file("").path()).is_err());
    }
}
