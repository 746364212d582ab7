use std::path::Path;

use csv::{Terminator, WriterBuilder};

use crate::error::{Error, Result};

/// 17 significant digits, enough for `parse(format(x)) == x`.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `header` and numeric `rows` as comma-separated lines ending in `\n`.
pub fn emit_csv(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    if let Some(bad) = rows.iter().position(|r| r.len() != header.len()) {
        return Err(Error::InvalidArgument(format!(
            "row {bad} has {} values, header has {}",
            rows[bad].len(),
            header.len()
        )));
    }
    let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| format_number(x)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_shape() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let rows = vec![vec![0.1, 1.0 / 3.0, -2.5e-300], vec![f64::MAX, 1e-5, 7.0], vec![0.0, -0.0, 1.0]];
        emit_csv(&p, &["t", "energy", "dissipation"], &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.split_terminator('\n').collect();
        assert_eq!(lines.len(), 4);
        assert!(!text.contains('\r'));
        assert_eq!(lines[0], "t,energy,dissipation");
        for (line, row) in lines[1..].iter().zip(&rows) {
            let parsed: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            for (a, b) in parsed.iter().zip(row) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        emit_csv(&p, &["t"], &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "t\n");
        assert!(emit_csv(&p, &["t"], &[vec![1.0, 2.0]]).is_err());
    }
}
