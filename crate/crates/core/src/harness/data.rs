use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, DomainSpec};
use crate::error::{Error, Result};

pub const DEFAULT_DOMAIN_SIZE: i64 = 100_000_000;

/// Where a sweep reads its records from. The range is public knowledge and
/// must be declared, never derived from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub path: String,
    pub column: String,
    pub range: (i64, i64),
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_domain_size")]
    pub domain_size: i64,
}

fn default_delimiter() -> char {
    ','
}

fn default_domain_size() -> i64 {
    DEFAULT_DOMAIN_SIZE
}

impl DataSource {
    pub fn load(&self) -> Result<(Dataset, DomainSpec)> {
        load_dataset(
            Path::new(&self.path),
            &self.column,
            self.range,
            self.domain_size,
            self.delimiter,
        )
    }
}

/// Reads one integer column from a delimited file with a header row and
/// shifts it into `{0..domain_size}` by the declared lower bound.
pub fn load_dataset(
    path: &Path,
    column: &str,
    range: (i64, i64),
    domain_size: i64,
    delimiter: char,
) -> Result<(Dataset, DomainSpec)> {
    let delimiter = u8::try_from(delimiter)
        .map_err(|_| Error::InvalidParameter(format!("delimiter {delimiter:?} is not a single byte")))?;
    let domain = DomainSpec::new(domain_size, range.0, range.1)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;

    let headers = reader.headers()?.clone();
    let index = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| {
            Error::Data(format!(
                "{}: no column named '{column}' (have: {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })?;

    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = row + 2;
        let cell = record
            .get(index)
            .ok_or_else(|| Error::Data(format!("line {line}: missing column '{column}'")))?;
        if cell.is_empty() {
            return Err(Error::Data(format!("line {line}: empty '{column}' cell")));
        }
        let value = parse_integer(cell)
            .ok_or_else(|| Error::Data(format!("line {line}: '{cell}' is not an integer")))?;
        values.push(domain.to_index(value).map_err(|e| e.context(format!("line {line}")))?);
    }
    let data = Dataset::new(values, &domain).map_err(|e| e.context(path.display().to_string()))?;
    Ok((data, domain))
}

fn parse_integer(cell: &str) -> Option<i64> {
    cell.parse::<i64>().ok().or_else(|| {
        let x = cell.parse::<f64>().ok()?;
        (x.is_finite() && x.fract() == 0.0 && x.abs() < 9.0e15).then_some(x as i64)
    })
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
    fn loads_and_shifts() {
        let f = file("id,balance\n1,-8019\n2,448\n3,102127\n");
        let (d, dom) = load_dataset(f.path(), "balance", (-8019, 102127), DEFAULT_DOMAIN_SIZE, ',').unwrap();
        assert_eq!(d.values(), &[0, 8467, 110146]);
        assert_eq!(dom.to_original(d.values()[1]), 448);
    }

    #[test]
    fn single_row_at_lower_bound() {
        let f = file("x\n4\n");
        let (d, _) = load_dataset(f.path(), "x", (4, 396), DEFAULT_DOMAIN_SIZE, ',').unwrap();
        assert_eq!(d.values(), &[0]);
    }

    #[test]
    fn other_delimiters_and_float_integers() {
        let f = file("\"age\";\"balance\"\n30;\"12.0\"\n40;7\n");
        let (d, _) = load_dataset(f.path(), "balance", (0, 100), 1000, ';').unwrap();
        assert_eq!(d.values(), &[7, 12]);
    }

    #[test]
    fn data_errors() {
        let f = file("a,b\n1,2\n");
        assert!(matches!(
            load_dataset(f.path(), "c", (0, 10), 100, ','),
            Err(Error::Data(_))
        ));
        let f = file("a\n1\nx\n");
        assert!(load_dataset(f.path(), "a", (0, 10), 100, ',').unwrap_err().exit_code() == 2);
        let f = file("a\n1\n\n2\n,\n");
        let err = load_dataset(f.path(), "a", (0, 10), 100, ',');
        assert!(err.is_err());
        let f = file("a\n1.5\n");
        assert!(load_dataset(f.path(), "a", (0, 10), 100, ',').is_err());
        let f = file("a\n11\n");
        let err = load_dataset(f.path(), "a", (0, 10), 100, ',').unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let f = file("a\n");
        assert!(load_dataset(f.path(), "a", (0, 10), 100, ',').is_err());
        assert!(load_dataset(Path::new("/nonexistent/file.csv"), "a", (0, 10), 100, ',').is_err());
    }
}
