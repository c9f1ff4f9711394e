use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::run::ResultRow;
use crate::error::{Error, Result};

pub const HEADER: &str =
    "name,detector,constellation,N,T,snr_db,trials,ser,ser_stderr,mean_visited,visited_stderr,mean_restarts,wall_time_s";

/// A real with 9 significant digits.
fn real(x: f64) -> String {
    format!("{x:.8e}")
}

fn check_field(s: &str) -> Result<&str> {
    if s.contains([',', '\n', '\r', '"']) {
        return Err(Error::InvalidConfig(format!("field {s:?} cannot be written to CSV")));
    }
    Ok(s)
}

/// Render rows as CSV text (header plus one line per row, LF endings).
pub fn to_csv(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("no rows to write".into()));
    }
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            check_field(&r.name)?,
            check_field(&r.detector)?,
            check_field(&r.constellation)?,
            r.n_rx,
            r.t_coh,
            real(r.snr_db),
            r.trials,
            real(r.ser),
            real(r.ser_stderr),
            real(r.mean_visited),
            real(r.visited_stderr),
            real(r.mean_restarts),
            real(r.wall_time_s),
        )
        .expect("writing to a String cannot fail");
    }
    Ok(out)
}

pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_csv(rows)?)?;
    Ok(())
}

/// Parse text produced by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(Error::InvalidConfig("unexpected CSV header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 13 {
                return Err(Error::InvalidConfig(format!("expected 13 fields: {line}")));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| Error::InvalidConfig(format!("{s}: {e}")));
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::InvalidConfig(format!("{s}: {e}")));
            Ok(ResultRow {
                name: f[0].to_string(),
                detector: f[1].to_string(),
                constellation: f[2].to_string(),
                n_rx: int(f[3])?,
                t_coh: int(f[4])?,
                snr_db: num(f[5])?,
                trials: int(f[6])?,
                ser: num(f[7])?,
                ser_stderr: num(f[8])?,
                mean_visited: num(f[9])?,
                visited_stderr: num(f[10])?,
                mean_restarts: num(f[11])?,
                wall_time_s: num(f[12])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            name: "fig5".into(),
            detector: "tsa".into(),
            constellation: "qpsk".into(),
            n_rx: 500,
            t_coh: 20,
            snr_db: -4.0,
            trials: 200,
            ser: 0.0123456789123,
            ser_stderr: 1.5e-4,
            mean_visited: 77.125,
            visited_stderr: 0.25,
            mean_restarts: 0.0,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn one_row_two_lines() {
        let text = to_csv(&[row()]).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert_eq!(text.lines().next().unwrap(), HEADER);
        assert!(text.contains(",1.23456789e-2,"));
    }

    #[test]
    fn round_trip() {
        let r = row();
        let back = parse_csv(&to_csv(std::slice::from_ref(&r)).unwrap()).unwrap();
        assert_eq!(back.len(), 1);
        let b = &back[0];
        assert_eq!((b.n_rx, b.t_coh, b.trials), (500, 20, 200));
        assert!((b.ser - r.ser).abs() <= 1e-8 * r.ser);
        assert_eq!(b.mean_visited, r.mean_visited);
        assert_eq!(b.snr_db, -4.0);
    }

    #[test]
    fn rejects_empty_and_commas() {
        assert!(to_csv(&[]).is_err());
        let mut r = row();
        r.name = "a,b".into();
        assert!(to_csv(&[r]).is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        emit_csv(&[row()], &p).unwrap();
        assert_eq!(parse_csv(&std::fs::read_to_string(&p).unwrap()).unwrap().len(), 1);
    }
}
