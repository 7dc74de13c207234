//! CSV ingestion: comma-separated, header row, `.` decimals.

use std::fs::File;
use std::path::Path;

use nalgebra::DMatrix;
use zib_core::Dataset;

use crate::args::DataArgs;
use crate::error::CliError;

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CliError::UnknownColumn(name.to_string()))
}

fn parse_outcome(raw: &str, row: u64, column: &str) -> Result<bool, CliError> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(false),
        Ok(v) if v == 1.0 => Ok(true),
        _ => Err(CliError::NonBinary {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

fn parse_covariate(raw: &str, row: u64, column: &str) -> Result<f64, CliError> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::NonNumeric {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

/// Reads the outcome and the requested covariate columns. Rows are numbered
/// from 1, not counting the header.
pub fn load(args: &DataArgs) -> Result<Dataset, CliError> {
    let path: &Path = &args.data;
    let file = File::open(path).map_err(|source| CliError::ReadData {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |e: csv::Error| CliError::Csv {
        path: path.to_path_buf(),
        msg: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(CliError::Data(
            "at least one observation is required".into(),
        ));
    }

    let y_col = column_index(&headers, &args.outcome)?;
    let x_cols = args
        .zi_cols
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<Vec<_>, _>>()?;
    let z_cols = args
        .nzi_cols
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<Vec<_>, _>>()?;

    let mut y = Vec::new();
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = i as u64 + 1;
        y.push(parse_outcome(&record[y_col], row, &args.outcome)?);
        for (&c, name) in x_cols.iter().zip(&args.zi_cols) {
            xs.push(parse_covariate(&record[c], row, name)?);
        }
        for (&c, name) in z_cols.iter().zip(&args.nzi_cols) {
            zs.push(parse_covariate(&record[c], row, name)?);
        }
    }

    let n = y.len();
    if n == 0 {
        return Err(CliError::Data(
            "at least one observation is required".into(),
        ));
    }
    let x = DMatrix::from_row_slice(n, x_cols.len(), &xs);
    let z = DMatrix::from_row_slice(n, z_cols.len(), &zs);
    Dataset::new(y, x, z, args.zi_cols.clone(), args.nzi_cols.clone())
        .map_err(|e| CliError::Data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn args_for(file: &tempfile::NamedTempFile, zi: &[&str]) -> DataArgs {
        DataArgs {
            data: file.path().to_path_buf(),
            outcome: "y".into(),
            zi_cols: zi.iter().map(|s| s.to_string()).collect(),
            nzi_cols: Vec::new(),
        }
    }

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_outcome_and_covariates() {
        let f = csv_file("y,a,b\n1,0.5,x\n0,1.5,y\n1.0,-2,z\n");
        let d = load(&args_for(&f, &["a"])).unwrap();
        assert_eq!(d.y(), &[true, false, true]);
        assert_eq!(d.x().column(0).as_slice(), &[0.5, 1.5, -2.0]);
        assert_eq!(d.x_names(), &["a".to_string()]);
    }

    #[test]
    fn non_binary_outcome_names_row_and_column() {
        let f = csv_file("y\n0\n1\n2\n");
        let err = load(&args_for(&f, &[])).unwrap_err();
        assert_eq!(
            err.to_string(),
            "row 3, column 'y': outcome must be 0 or 1, got '2'"
        );
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn unknown_and_non_numeric_columns() {
        let f = csv_file("y,a\n0,1\n1,abc\n");
        assert!(matches!(load(&args_for(&f, &["b"])), Err(CliError::UnknownColumn(c)) if c == "b"));
        assert!(matches!(
            load(&args_for(&f, &["a"])),
            Err(CliError::NonNumeric { row: 2, .. })
        ));
    }

    #[test]
    fn empty_and_ragged_files() {
        for body in ["", "y\n"] {
            let f = csv_file(body);
            let err = load(&args_for(&f, &[])).unwrap_err();
            assert!(
                err.to_string().contains("at least one observation"),
                "{err}"
            );
        }
        let f = csv_file("y,a\n0,1\n1\n");
        assert!(matches!(
            load(&args_for(&f, &[])),
            Err(CliError::Csv { .. })
        ));
    }
}
