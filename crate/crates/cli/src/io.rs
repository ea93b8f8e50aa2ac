//! On-disk formats: η-sweep and analyzer CSV traces, geodesic path files, and
//! atomic file output.
//!
//! CSV values are written with 17 significant digits so every f64 survives a
//! write/read cycle bit-for-bit.

use std::io::Write;
use std::path::Path;

use mixphase::polarimeter::{
    AnalyzerPoint, CountPoint, CountTrace, IntensityTrace, TracePoint,
};
use mixphase::theory::GeodesicPath;
use mixphase::vec3::{self, Vec3};
use serde::Deserialize;

use crate::error::CliError;

/// Vertex lengths within this distance of 1 are renormalized on load.
pub const PATH_UNIT_TOL: f64 = 1e-9;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(contents)
        .and_then(|_| tmp.flush())
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// `eta,intensity[,counts_up,shots]`. With counts, `intensity` is the exact
/// model value and the counts are the simulated measurement.
pub fn trace_csv(trace: &IntensityTrace, counts: Option<&CountTrace>) -> Result<Vec<u8>, CliError> {
    match counts {
        None => csv_bytes(
            &["eta", "intensity"],
            trace
                .points
                .iter()
                .map(|p| vec![fmt_f64(p.eta), fmt_f64(p.intensity)]),
        ),
        Some(c) => csv_bytes(
            &["eta", "intensity", "counts_up", "shots"],
            trace.points.iter().zip(&c.points).map(|(p, q)| {
                vec![
                    fmt_f64(p.eta),
                    fmt_f64(p.intensity),
                    q.counts_up.to_string(),
                    q.shots.to_string(),
                ]
            }),
        ),
    }
}

/// `theta,nx,ny,nz,intensity[,counts_up,shots]`; θ is the analyzer rotation
/// angle along its great circle.
pub fn analyzer_csv(
    angles: &IntensityTrace,
    points: &[AnalyzerPoint],
    counts: Option<&CountTrace>,
) -> Result<Vec<u8>, CliError> {
    let mut header = vec!["theta", "nx", "ny", "nz", "intensity"];
    if counts.is_some() {
        header.extend(["counts_up", "shots"]);
    }
    let rows = angles.points.iter().zip(points).enumerate().map(|(i, (a, p))| {
        let mut row = vec![
            fmt_f64(a.eta),
            fmt_f64(p.direction[0]),
            fmt_f64(p.direction[1]),
            fmt_f64(p.direction[2]),
            fmt_f64(p.intensity),
        ];
        if let Some(c) = counts {
            row.push(c.points[i].counts_up.to_string());
            row.push(c.points[i].shots.to_string());
        }
        row
    });
    csv_bytes(&header, rows)
}

/// A trace read back from disk: angles with model intensities, plus counts
/// when the file has them.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrace {
    pub trace: IntensityTrace,
    pub counts: Option<CountTrace>,
}

impl LoadedTrace {
    /// What a detector would report: count frequencies when present,
    /// otherwise the intensities.
    pub fn measured(&self) -> Result<IntensityTrace, CliError> {
        match &self.counts {
            Some(c) => c.to_intensity_trace().map_err(CliError::from),
            None => Ok(self.trace.clone()),
        }
    }
}

/// Reads either CSV layout; the angle column is the first one and the
/// intensity column is named `intensity`.
pub fn read_trace(path: &Path) -> Result<LoadedTrace, CliError> {
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let angle_col = match headers.get(0) {
        Some("eta") | Some("theta") => 0,
        _ => return Err(bad("first column must be `eta` or `theta`".into())),
    };
    let intensity_col = col("intensity").ok_or_else(|| bad("missing `intensity` column".into()))?;
    let count_cols = match (col("counts_up"), col("shots")) {
        (Some(c), Some(s)) => Some((c, s)),
        (None, None) => None,
        _ => return Err(bad("`counts_up` and `shots` must appear together".into())),
    };

    let mut points = Vec::new();
    let mut count_points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| -> Result<&str, CliError> {
            rec.get(i)
                .ok_or_else(|| bad(format!("row {}: missing column {i}", line + 2)))
        };
        let num = |i: usize| -> Result<f64, CliError> {
            field(i)?
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}: {e}", line + 2)))
        };
        let eta = num(angle_col)?;
        points.push(TracePoint {
            eta,
            intensity: num(intensity_col)?,
        });
        if let Some((c, s)) = count_cols {
            let int = |i: usize| -> Result<u64, CliError> {
                field(i)?
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| bad(format!("row {}: {e}", line + 2)))
            };
            let (counts_up, shots) = (int(c)?, int(s)?);
            if shots == 0 || counts_up > shots {
                return Err(bad(format!("row {}: need 0 <= counts_up <= shots, shots >= 1", line + 2)));
            }
            count_points.push(CountPoint {
                eta,
                counts_up,
                shots,
            });
        }
    }
    let trace = IntensityTrace::from_points(points)?;
    let counts = count_cols.map(|_| CountTrace {
        points: count_points,
        seed: 0,
    });
    Ok(LoadedTrace { trace, counts })
}

#[derive(Debug, Deserialize)]
struct PathFile {
    vertices: Vec<Vec3>,
}

/// Parses `{"vertices": [[x, y, z], ...]}`.
pub fn parse_path(text: &str) -> Result<GeodesicPath, CliError> {
    let file: PathFile =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("path file: {e}")))?;
    let mut vertices = Vec::with_capacity(file.vertices.len());
    for (i, v) in file.vertices.into_iter().enumerate() {
        let len = vec3::norm(v);
        if !len.is_finite() || (len - 1.0).abs() > PATH_UNIT_TOL {
            return Err(CliError::Usage(format!(
                "path file: vertex {i} has length {len}, expected 1"
            )));
        }
        vertices.push(vec3::scale(v, 1.0 / len));
    }
    GeodesicPath::new(vertices).map_err(CliError::from)
}

pub fn read_path(path: &Path) -> Result<GeodesicPath, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    parse_path(&text)
}
