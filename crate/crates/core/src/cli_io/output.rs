//! CSV time series and comparison tables, and legacy-format VTK snapshots.
//!
//! Floats are written with 17 significant digits so every value reads back
//! bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::discretization::{build_fluid_mesh, NodeGrid, Vec2};
use crate::error::{Error, Result};
use crate::solvers::StepRecord;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const TIMESERIES_HEADER: [&str; 8] =
    ["step", "time", "monitor_pressure", "crack_length", "cmod", "broken_bonds", "new_breaks", "adr_iterations"];

pub fn write_timeseries(records: &[StepRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(TIMESERIES_HEADER).map_err(csv_error)?;
    for r in records {
        w.write_record([
            r.step.to_string(),
            fmt_f64(r.time),
            fmt_f64(r.monitor_pressure),
            fmt_f64(r.crack_length),
            fmt_f64(r.cmod),
            r.broken_bonds.to_string(),
            r.new_breaks.to_string(),
            r.adr_iterations.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// One line of a benchmark comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    /// Which curve the row belongs to, e.g. `pressure t=20`.
    pub series: String,
    pub location: f64,
    pub numeric: f64,
    pub analytic: f64,
    pub rel_error: f64,
}

pub fn write_table(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["series", "location", "numeric", "analytic", "rel_error"]).map_err(csv_error)?;
    for r in rows {
        w.write_record([r.series.clone(), fmt_f64(r.location), fmt_f64(r.numeric), fmt_f64(r.analytic), fmt_f64(r.rel_error)])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Nodal fields at one instant.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub grid: &'a NodeGrid,
    pub time: f64,
    pub u: &'a [Vec2],
    pub p: &'a [f64],
    pub damage: &'a [f64],
    pub aperture: &'a [f64],
}

impl Snapshot<'_> {
    pub fn to_vtk(&self) -> Result<String> {
        let n = self.grid.node_count();
        if [self.u.len(), self.p.len(), self.damage.len(), self.aperture.len()].iter().any(|&l| l != n) {
            return Err(Error::Dimension(format!("snapshot fields do not all have {n} entries")));
        }
        let mesh = build_fluid_mesh(self.grid);
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0");
        let _ = writeln!(s, "porofrac t={}", fmt_f64(self.time));
        let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
        let _ = writeln!(s, "POINTS {n} double");
        for x in &self.grid.positions {
            let _ = writeln!(s, "{} {} 0", fmt_f64(x.x), fmt_f64(x.y));
        }
        let ne = mesh.elements.len();
        let _ = writeln!(s, "CELLS {ne} {}", 5 * ne);
        for e in &mesh.elements {
            let _ = writeln!(s, "4 {} {} {} {}", e[0], e[1], e[2], e[3]);
        }
        let _ = writeln!(s, "CELL_TYPES {ne}");
        for _ in 0..ne {
            let _ = writeln!(s, "9");
        }
        let _ = writeln!(s, "POINT_DATA {n}");
        let _ = writeln!(s, "VECTORS displacement double");
        for u in self.u {
            let _ = writeln!(s, "{} {} 0", fmt_f64(u.x), fmt_f64(u.y));
        }
        for (name, values) in [("pressure", self.p), ("damage", self.damage), ("aperture", self.aperture)] {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in values {
                let _ = writeln!(s, "{}", fmt_f64(*v));
            }
        }
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_vtk()?)?;
        Ok(())
    }
}

/// Contents of a snapshot file read back. Vector fields keep all three
/// components per point.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotData {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub fields: BTreeMap<String, Vec<f64>>,
}

/// Parses the subset of the legacy format that [`Snapshot`] writes.
pub fn read_snapshot(text: &str) -> Result<SnapshotData> {
    let bad = |msg: &str| Error::Config(format!("snapshot: {msg}"));
    let mut tokens = text.lines().skip(2).flat_map(str::split_whitespace);
    let mut next = || tokens.next().ok_or_else(|| bad("unexpected end of file"));
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad(&format!("bad number {t:?}")));
    let int = |t: &str| t.parse::<usize>().map_err(|_| bad(&format!("bad integer {t:?}")));
    let expect = |t: &str, want: &str| if t == want { Ok(()) } else { Err(bad(&format!("expected {want}, found {t}"))) };

    expect(next()?, "ASCII")?;
    expect(next()?, "DATASET")?;
    expect(next()?, "UNSTRUCTURED_GRID")?;
    expect(next()?, "POINTS")?;
    let n = int(next()?)?;
    next()?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push([num(next()?)?, num(next()?)?, num(next()?)?]);
    }
    expect(next()?, "CELLS")?;
    let ne = int(next()?)?;
    next()?;
    let mut cells = Vec::with_capacity(ne);
    for _ in 0..ne {
        let k = int(next()?)?;
        cells.push((0..k).map(|_| next().and_then(int)).collect::<Result<Vec<_>>>()?);
    }
    expect(next()?, "CELL_TYPES")?;
    for _ in 0..int(next()?)? {
        next()?;
    }
    expect(next()?, "POINT_DATA")?;
    if int(next()?)? != n {
        return Err(bad("POINT_DATA count differs from POINTS"));
    }
    let mut fields = BTreeMap::new();
    while let Ok(kind) = next() {
        let name = next()?.to_string();
        next()?;
        let width = match kind {
            "VECTORS" => 3,
            "SCALARS" => {
                let comps = int(next()?)?;
                expect(next()?, "LOOKUP_TABLE")?;
                next()?;
                comps
            }
            other => return Err(bad(&format!("unsupported section {other}"))),
        };
        let values = (0..n * width).map(|_| next().and_then(num)).collect::<Result<Vec<_>>>()?;
        fields.insert(name, values);
    }
    Ok(SnapshotData { points, cells, fields })
}
