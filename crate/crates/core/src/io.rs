//! Plain-text matrix files, linear model manifests, snapshot bundles and
//! report CSVs. Floats are written with 17 significant digits so every
//! `f64` round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::bench::ExperimentReport;
use crate::error::{Error, Result};
use crate::gramian::SnapshotData;
use crate::system::{SystemDims, SystemModel};

pub const SERIES_HEADER: &str = "t,relative_error";
pub const SUMMARY_HEADER: &str =
    "experiment,seed,order,aggregate_error,gramian_seconds,reduction_seconds,simulation_seconds";

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// `{:.16e}`: one leading digit plus sixteen decimals.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header line `rows cols`, then one space-separated row per line.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split_whitespace();
    let r = it.next()?.parse().ok()?;
    let c = it.next()?.parse().ok()?;
    it.next().is_none().then_some((r, c))
}

/// Reads one matrix block from `lines`.
fn parse_block<'a>(lines: &mut impl Iterator<Item = &'a str>) -> std::result::Result<DMatrix<f64>, String> {
    let header = lines.find(|l| !l.trim().is_empty()).ok_or("missing matrix header")?;
    let (r, c) = parse_header(header).ok_or_else(|| format!("bad matrix header `{header}`"))?;
    let mut m = DMatrix::zeros(r, c);
    for i in 0..r {
        let line = lines.next().ok_or_else(|| format!("expected {r} rows, found {i}"))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| format!("row {}: bad number `{t}`", i + 1)))
            .collect::<std::result::Result<_, _>>()?;
        if vals.len() != c {
            return Err(format!("row {} has {} entries, expected {c}", i + 1, vals.len()));
        }
        for (j, v) in vals.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

pub fn parse_matrix(text: &str) -> std::result::Result<DMatrix<f64>, String> {
    let mut lines = text.lines();
    let m = parse_block(&mut lines)?;
    if lines.any(|l| !l.trim().is_empty()) {
        return Err("trailing content after matrix".into());
    }
    Ok(m)
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write(path, &format_matrix(m))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix(&read(path)?).map_err(|e| io_err(path, e))
}

/// `x' = A x + B u + F p`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Nominal parameters (`P×1` in the file).
    pub p: Option<DVector<f64>>,
    /// Parameter map; identity when absent and `p` is given.
    pub f: Option<DMatrix<f64>>,
}

impl LinearModel {
    pub fn dims(&self) -> SystemDims {
        let np = self.p.as_ref().map_or(0, |p| p.len());
        SystemDims::new(self.b.ncols(), self.a.nrows(), self.c.nrows(), np)
    }

    fn check(&self) -> std::result::Result<(), String> {
        let n = self.a.nrows();
        if !self.a.is_square() || n == 0 || self.b.nrows() != n || self.c.ncols() != n {
            return Err(format!(
                "A {:?}, B {:?}, C {:?} are inconsistent",
                self.a.shape(),
                self.b.shape(),
                self.c.shape()
            ));
        }
        match (&self.p, &self.f) {
            (None, Some(_)) => Err("parameter map f given without nominal parameters p".into()),
            (Some(p), None) if p.len() != n => Err(format!("p has {} entries; without f it must have {n}", p.len())),
            (Some(p), Some(f)) if f.shape() != (n, p.len()) => {
                Err(format!("f is {:?}, expected ({n}, {})", f.shape(), p.len()))
            }
            _ => Ok(()),
        }
    }

    pub fn to_system(&self) -> Result<SystemModel> {
        self.check().map_err(Error::InvalidDimension)?;
        let (a, b, c) = (self.a.clone(), self.b.clone(), self.c.clone());
        let p = self.p.clone().unwrap_or_else(|| DVector::zeros(0));
        let f = match (&self.p, &self.f) {
            (Some(_), Some(f)) => Some(f.clone()),
            (Some(p), None) => Some(DMatrix::identity(p.len(), p.len())),
            _ => None,
        };
        SystemModel::new(
            self.dims(),
            p,
            move |x, u, p| {
                let mut dx = &a * x + &b * u;
                if let Some(f) = &f {
                    dx.gemv(1.0, f, p, 1.0);
                }
                dx
            },
            move |x, _, _| &c * x,
        )
    }
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Reads `key=value` lines (`a`, `b`, `c`, optional `p`, `f`); paths are
/// relative to the manifest's directory. `#` starts a comment.
pub fn read_manifest(path: &Path) -> Result<LinearModel> {
    let text = read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = std::collections::BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| io_err(path, format!("line {}: expected key=value", i + 1)))?;
        let k = k.trim().to_ascii_lowercase();
        if !matches!(k.as_str(), "a" | "b" | "c" | "p" | "f") {
            return Err(io_err(path, format!("line {}: unknown key `{k}`", i + 1)));
        }
        entries.insert(k, v.trim().to_string());
    }
    let load = |k: &str| -> Result<Option<DMatrix<f64>>> {
        entries.get(k).map(|v| read_matrix(&resolve(base, v))).transpose()
    };
    let need = |k: &str| -> Result<DMatrix<f64>> {
        load(k)?.ok_or_else(|| io_err(path, format!("missing key `{k}`")))
    };
    let p = match load("p")? {
        Some(m) if m.ncols() == 1 => Some(DVector::from_column_slice(m.as_slice())),
        Some(m) => return Err(io_err(path, format!("p must be a column, got {:?}", m.shape()))),
        None => None,
    };
    let model = LinearModel { a: need("a")?, b: need("b")?, c: need("c")?, p, f: load("f")? };
    model.check().map_err(|e| Error::InvalidDimension(format!("{}: {e}", path.display())))?;
    Ok(model)
}

/// Writes `a.txt`, `b.txt`, `c.txt` (and `p.txt`, `f.txt`) plus
/// `model.manifest` into `dir`; returns the manifest path.
pub fn write_manifest(dir: &Path, model: &LinearModel) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut manifest = String::new();
    let mut put = |key: &str, m: &DMatrix<f64>| -> Result<()> {
        let name = format!("{key}.txt");
        write_matrix(&dir.join(&name), m)?;
        let _ = writeln!(manifest, "{key}={name}");
        Ok(())
    };
    put("a", &model.a)?;
    put("b", &model.b)?;
    put("c", &model.c)?;
    if let Some(p) = &model.p {
        put("p", &DMatrix::from_column_slice(p.len(), 1, p.as_slice()))?;
    }
    if let Some(f) = &model.f {
        put("f", f)?;
    }
    let path = dir.join("model.manifest");
    write(&path, &manifest)?;
    Ok(path)
}

/// Header `snapshots <state runs> <output runs>`, then the matrices in order.
pub fn format_snapshots(data: &SnapshotData) -> String {
    let mut out = format!("snapshots {} {}\n", data.state_runs.len(), data.output_runs.len());
    for m in data.state_runs.iter().chain(&data.output_runs) {
        out.push_str(&format_matrix(m));
    }
    out
}

pub fn parse_snapshots(text: &str) -> std::result::Result<SnapshotData, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty snapshot bundle")?;
    let counts: Vec<&str> = header.split_whitespace().collect();
    let (ns, no) = match counts.as_slice() {
        ["snapshots", a, b] => (a.parse::<usize>().map_err(|e| e.to_string())?, b.parse::<usize>().map_err(|e| e.to_string())?),
        _ => return Err(format!("bad snapshot header `{header}`")),
    };
    let mut data = SnapshotData::default();
    for _ in 0..ns {
        data.state_runs.push(parse_block(&mut lines)?);
    }
    for _ in 0..no {
        data.output_runs.push(parse_block(&mut lines)?);
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err("trailing content after snapshot bundle".into());
    }
    Ok(data)
}

pub fn write_snapshots(path: &Path, data: &SnapshotData) -> Result<()> {
    write(path, &format_snapshots(data))
}

pub fn read_snapshots(path: &Path) -> Result<SnapshotData> {
    parse_snapshots(&read(path)?).map_err(|e| io_err(path, e))
}

pub fn format_error_series(report: &ExperimentReport) -> String {
    let mut out = format!("{SERIES_HEADER}\n");
    for (t, e) in report.times.iter().zip(report.series.iter()) {
        let _ = writeln!(out, "{},{}", fmt_f64(*t), fmt_f64(*e));
    }
    out
}

pub fn summary_line(report: &ExperimentReport) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        report.experiment,
        report.seed,
        report.order,
        fmt_f64(report.aggregate),
        fmt_f64(report.gramian_seconds),
        fmt_f64(report.reduction_seconds),
        fmt_f64(report.simulation_seconds)
    )
}

pub fn format_summary(reports: &[ExperimentReport]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in reports {
        out.push_str(&summary_line(r));
        out.push('\n');
    }
    out
}

pub fn write_error_series(path: &Path, report: &ExperimentReport) -> Result<()> {
    write(path, &format_error_series(report))
}

pub fn write_summary(path: &Path, reports: &[ExperimentReport]) -> Result<()> {
    write(path, &format_summary(reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = DMatrix::from_row_slice(2, 3, &[0.1, -1.0 / 3.0, 1e-300, f64::MAX, -0.0, std::f64::consts::PI]);
        let text = format_matrix(&m);
        assert!(text.starts_with("2 3\n"));
        let back = parse_matrix(&text).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn matrix_parse_errors() {
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("2 2\n1 2\n").is_err());
        assert!(parse_matrix("1 2\n1 x\n").is_err());
        assert!(parse_matrix("1 2\n1 2 3\n").is_err());
        assert!(parse_matrix("1 1\n1\n2\n").is_err());
        assert_eq!(parse_matrix("0 0\n").unwrap().shape(), (0, 0));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let model = LinearModel {
            a: DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.5, -2.0]),
            b: DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            c: DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
            p: Some(DVector::from_vec(vec![0.3])),
            f: Some(DMatrix::from_row_slice(2, 1, &[1.0, 1.0])),
        };
        let path = write_manifest(dir.path(), &model).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back, model);
        let sys = back.to_system().unwrap();
        assert_eq!(sys.dims(), SystemDims::new(1, 2, 1, 1));
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let dx = sys.eval_f(&x, &DVector::from_element(1, 2.0), &DVector::from_element(1, 0.3));
        assert!((dx - DVector::from_vec(vec![1.3, -1.2])).norm() < 1e-15);
    }

    #[test]
    fn manifest_errors() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.manifest");
        fs::write(&m, "a=a.txt\n").unwrap();
        assert!(matches!(read_manifest(&m), Err(Error::Io { .. })));
        fs::write(&m, "z=1\n").unwrap();
        assert!(matches!(read_manifest(&m), Err(Error::Io { .. })));
        write_matrix(&dir.path().join("a.txt"), &DMatrix::identity(2, 2)).unwrap();
        write_matrix(&dir.path().join("b.txt"), &DMatrix::zeros(3, 1)).unwrap();
        fs::write(&m, "a=a.txt\nb=b.txt\nc=a.txt\n").unwrap();
        assert!(matches!(read_manifest(&m), Err(Error::InvalidDimension(_))));
        assert!(matches!(read_manifest(&dir.path().join("none")), Err(Error::Io { .. })));
    }

    #[test]
    fn snapshot_bundle_round_trip() {
        let data = SnapshotData {
            state_runs: vec![DMatrix::from_element(2, 3, 0.25), DMatrix::zeros(2, 3)],
            output_runs: vec![DMatrix::from_element(1, 3, -7.5)],
        };
        assert_eq!(parse_snapshots(&format_snapshots(&data)).unwrap(), data);
        assert!(parse_snapshots("snapshots 1 0\n").is_err());
        assert!(parse_snapshots("snap 1 0\n").is_err());
    }
}
