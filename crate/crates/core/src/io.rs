//! CSV and JSON file formats.
//!
//! All CSV files are UTF-8 with a header row, `.` decimal separators and LF
//! line endings. Written files may start with a `# config_hash: <hex>`
//! comment line; readers skip lines starting with `#`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{LifetimeTrace, ReflectivityPoint};
use crate::hom::CoincidenceHistogram;
use crate::spectral::{DelayPoint, DelayVisibilitySeries};

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, columns: &[&str]) -> Result<Vec<T>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    for col in columns {
        if !headers.iter().any(|h| h == *col) {
            return Err(Error::Config(format!(
                "{}: missing column `{col}` (expected header {})",
                path.display(),
                columns.join(", ")
            )));
        }
    }
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// CSV writer that first emits the provenance comment, if any.
fn writer(path: &Path, config_hash: Option<&str>) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    if let Some(hash) = config_hash {
        writeln!(out, "# config_hash: {hash}").map_err(|e| Error::io(path, e))?;
    }
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out))
}

fn finish(path: &Path, mut w: csv::Writer<BufWriter<File>>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    time_ps: f64,
    counts: f64,
}

/// Reads `time_ps, counts`.
pub fn read_lifetime_trace(path: &Path, background: f64) -> Result<LifetimeTrace> {
    let rows: Vec<TraceRow> = read_rows(path, &["time_ps", "counts"])?;
    LifetimeTrace::new(
        rows.iter().map(|r| r.time_ps).collect(),
        rows.iter().map(|r| r.counts).collect(),
        background,
    )
}

pub fn write_lifetime_trace(path: &Path, trace: &LifetimeTrace, config_hash: Option<&str>) -> Result<()> {
    let mut w = writer(path, config_hash)?;
    for (&time_ps, &counts) in trace.time_ps.iter().zip(&trace.counts) {
        w.serialize(TraceRow { time_ps, counts })?;
    }
    finish(path, w)
}

#[derive(Debug, Serialize, Deserialize)]
struct DelayRow {
    delay_ns: f64,
    visibility: f64,
    sigma_v: f64,
}

/// Reads `delay_ns, visibility, sigma_v`.
pub fn read_delay_series(path: &Path, source_label: &str, filtered: bool) -> Result<DelayVisibilitySeries> {
    let rows: Vec<DelayRow> = read_rows(path, &["delay_ns", "visibility", "sigma_v"])?;
    DelayVisibilitySeries::new(
        rows.into_iter()
            .map(|r| DelayPoint::new(r.delay_ns, r.visibility, r.sigma_v))
            .collect(),
        source_label,
        filtered,
    )
}

pub fn write_delay_series(path: &Path, series: &DelayVisibilitySeries, config_hash: Option<&str>) -> Result<()> {
    let mut w = writer(path, config_hash)?;
    for p in series.entries() {
        w.serialize(DelayRow {
            delay_ns: p.delay_ns,
            visibility: p.visibility,
            sigma_v: p.sigma_v,
        })?;
    }
    finish(path, w)
}

/// Reads `wavelength_nm, reflectivity`.
pub fn read_reflectivity(path: &Path) -> Result<Vec<ReflectivityPoint>> {
    read_rows(path, &["wavelength_nm", "reflectivity"])
}

pub fn write_reflectivity(path: &Path, spectrum: &[ReflectivityPoint], config_hash: Option<&str>) -> Result<()> {
    let mut w = writer(path, config_hash)?;
    for p in spectrum {
        w.serialize(p)?;
    }
    finish(path, w)
}

#[derive(Debug, Serialize)]
struct HistogramRow {
    bin_center_ns: f64,
    counts: u64,
}

/// Writes `bin_center_ns, counts`.
pub fn write_histogram(path: &Path, hist: &CoincidenceHistogram, config_hash: Option<&str>) -> Result<()> {
    let mut w = writer(path, config_hash)?;
    for (&bin_center_ns, &counts) in hist.bin_centers.iter().zip(&hist.counts) {
        w.serialize(HistogramRow { bin_center_ns, counts })?;
    }
    finish(path, w)
}

/// Writes named columns of equal length.
pub fn write_columns(path: &Path, columns: &[(&str, &[f64])], config_hash: Option<&str>) -> Result<()> {
    let len = columns.first().map_or(0, |c| c.1.len());
    if columns.iter().any(|c| c.1.len() != len) {
        return Err(Error::domain("columns differ in length"));
    }
    let mut w = writer(path, config_hash)?;
    w.write_record(columns.iter().map(|c| c.0))?;
    for i in 0..len {
        w.write_record(columns.iter().map(|c| c.1[i].to_string()))?;
    }
    finish(path, w)
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hom::Polarization;

    #[test]
    fn delay_series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let s = DelayVisibilitySeries::new(
            vec![
                DelayPoint::new(12.2, 0.939, 0.002),
                DelayPoint::new(525.0, 0.734, 0.002),
            ],
            "I_A",
            true,
        )
        .unwrap();
        write_delay_series(&path, &s, Some("abc")).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config_hash: abc\ndelay_ns,visibility,sigma_v\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_delay_series(&path, "I_A", true).unwrap(), s);
    }

    #[test]
    fn reader_tolerates_spaces_and_requires_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "time_ps, counts\n0, 10\n4, 9.5\n").unwrap();
        let t = read_lifetime_trace(&path, 0.0).unwrap();
        assert_eq!(t.time_ps, vec![0.0, 4.0]);
        std::fs::write(&path, "0,10\n4,9\n").unwrap();
        assert!(matches!(read_lifetime_trace(&path, 0.0), Err(Error::Config(_))));
        assert!(matches!(
            read_lifetime_trace(&dir.path().join("none.csv"), 0.0),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn histogram_and_columns() {
        let dir = tempfile::tempdir().unwrap();
        let h = CoincidenceHistogram {
            polarization: Polarization::Parallel,
            rep_period_ns: 12.2,
            bin_centers: vec![-0.5, 0.5],
            counts: vec![3, 4],
        };
        let path = dir.path().join("h.csv");
        write_histogram(&path, &h, None).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "bin_center_ns,counts\n-0.5,3\n0.5,4\n"
        );
        let path = dir.path().join("c.csv");
        write_columns(&path, &[("x", &[1.0, 2.0]), ("y", &[0.25, 0.5])], Some("h")).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "# config_hash: h\nx,y\n1,0.25\n2,0.5\n"
        );
        assert!(write_columns(&path, &[("x", &[1.0]), ("y", &[])], None).is_err());
    }
}
