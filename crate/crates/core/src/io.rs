//! File formats, source wavelets and run configuration.
//!
//! Binary payloads are little-endian `f32`.
//!
//! * Model and image grids: text line `NX NY NZ DX DY DZ`, then
//!   `NX*NY*NZ` values, `x` fastest, then `y`, then `z`.
//! * Traces: text line `NTRACE NSAMP DT`, then one `X Y` line per trace
//!   (meters), then `NTRACE*NSAMP` values trace by trace.
//! * Gather: a `<name>.src` trace file with the source wavelet at the source
//!   position and a `<name>.rcv` trace file with the records.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::extrapolator::{ExtrapolatorConfig, VelocityModel};
use crate::laguerre::LaguerreParams;
use crate::linsolve::{DDMConfig, SolverConfig};
use crate::migration::ShotGather;
use crate::pade::PadeExpansion;
use crate::{Error, Result};

/// `(1 - 2 pi^2 f^2 (t - delay)^2) exp(-pi^2 f^2 (t - delay)^2)` at `t = i dt`.
pub fn ricker(f_dom: f64, delay: f64, n: usize, dt: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let a = (std::f64::consts::PI * f_dom * (i as f64 * dt - delay)).powi(2);
            (1.0 - 2.0 * a) * (-a).exp()
        })
        .collect()
}

/// Splits `bytes` at the first newline into a header line and the rest.
fn split_line<'a>(bytes: &'a [u8], what: &str) -> Result<(&'a str, &'a [u8])> {
    let pos = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::BadHeader {
            what: what.to_string(),
            reason: "missing newline".into(),
        })?;
    let line = std::str::from_utf8(&bytes[..pos]).map_err(|_| Error::BadHeader {
        what: what.to_string(),
        reason: "header is not UTF-8".into(),
    })?;
    Ok((line.trim(), &bytes[pos + 1..]))
}

fn parse_fields<T: std::str::FromStr>(line: &str, count: usize, what: &str) -> Result<Vec<T>> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != count {
        return Err(Error::BadHeader {
            what: what.to_string(),
            reason: format!("expected {count} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse().map_err(|_| Error::BadHeader {
                what: what.to_string(),
                reason: format!("cannot parse {f:?}"),
            })
        })
        .collect()
}

fn read_payload(bytes: &[u8], count: usize, what: &str) -> Result<Vec<f32>> {
    let expected = count * 4;
    if bytes.len() != expected {
        return Err(Error::TruncatedPayload {
            what: what.to_string(),
            expected,
            actual: bytes.len(),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn write_payload(out: &mut Vec<u8>, values: impl Iterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

/// A regular 3D grid of values in the model file layout, without the
/// velocity checks. Images are written in this form.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid3 {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub values: Vec<f64>,
}

pub fn parse_grid(bytes: &[u8], what: &str) -> Result<Grid3> {
    let (line, payload) = split_line(bytes, what)?;
    let f: Vec<f64> = parse_fields(line, 6, what)?;
    let dims: Vec<usize> = parse_fields(
        &line
            .split_whitespace()
            .take(3)
            .collect::<Vec<_>>()
            .join(" "),
        3,
        what,
    )?;
    let (nx, ny, nz) = (dims[0], dims[1], dims[2]);
    let data = read_payload(payload, nx * ny * nz, what)?;
    Ok(Grid3 {
        nx,
        ny,
        nz,
        dx: f[3],
        dy: f[4],
        dz: f[5],
        values: data.into_iter().map(f64::from).collect(),
    })
}

pub fn encode_grid(grid: &Grid3) -> Result<Vec<u8>> {
    if grid.values.len() != grid.nx * grid.ny * grid.nz {
        return Err(Error::shape(format!(
            "grid holds {} values, expected {} x {} x {}",
            grid.values.len(),
            grid.nx,
            grid.ny,
            grid.nz
        )));
    }
    let mut out = format!(
        "{} {} {} {} {} {}\n",
        grid.nx, grid.ny, grid.nz, grid.dx, grid.dy, grid.dz
    )
    .into_bytes();
    write_payload(&mut out, grid.values.iter().copied());
    Ok(out)
}

pub fn load_grid(path: &Path) -> Result<Grid3> {
    parse_grid(&fs::read(path)?, &path.display().to_string())
}

pub fn save_grid(path: &Path, grid: &Grid3) -> Result<()> {
    fs::write(path, encode_grid(grid)?)?;
    Ok(())
}

pub fn parse_model(bytes: &[u8], what: &str) -> Result<VelocityModel> {
    let g = parse_grid(bytes, what)?;
    VelocityModel::new(g.nx, g.ny, g.nz, g.dx, g.dy, g.dz, g.values)
}

pub fn load_model(path: &Path) -> Result<VelocityModel> {
    parse_model(&fs::read(path)?, &path.display().to_string())
}

pub fn encode_model(model: &VelocityModel) -> Vec<u8> {
    let grid = Grid3 {
        nx: model.nx,
        ny: model.ny,
        nz: model.nz,
        dx: model.dx,
        dy: model.dy,
        dz: model.dz,
        values: model.c.clone(),
    };
    encode_grid(&grid).expect("a validated model has a consistent shape")
}

pub fn save_model(path: &Path, model: &VelocityModel) -> Result<()> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

/// Traces with their surface coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub dt: f64,
    pub coords: Vec<(f64, f64)>,
    pub traces: Vec<Vec<f64>>,
}

impl TraceSet {
    pub fn samples(&self) -> usize {
        self.traces.first().map_or(0, Vec::len)
    }
}

pub fn parse_traces(bytes: &[u8], what: &str) -> Result<TraceSet> {
    let (line, mut rest) = split_line(bytes, what)?;
    let counts: Vec<usize> = parse_fields(
        &line
            .split_whitespace()
            .take(2)
            .collect::<Vec<_>>()
            .join(" "),
        2,
        what,
    )?;
    let head: Vec<f64> = parse_fields(line, 3, what)?;
    let (ntrace, nsamp, dt) = (counts[0], counts[1], head[2]);
    if !(dt > 0.0) {
        return Err(Error::BadHeader {
            what: what.to_string(),
            reason: format!("sample interval must be positive, got {dt}"),
        });
    }
    let mut coords = Vec::with_capacity(ntrace);
    for _ in 0..ntrace {
        let (l, r) = split_line(rest, what)?;
        let xy: Vec<f64> = parse_fields(l, 2, what)?;
        coords.push((xy[0], xy[1]));
        rest = r;
    }
    let data = read_payload(rest, ntrace * nsamp, what)?;
    let traces = if nsamp == 0 {
        vec![Vec::new(); ntrace]
    } else {
        data.chunks(nsamp)
            .map(|c| c.iter().map(|&v| f64::from(v)).collect())
            .collect()
    };
    Ok(TraceSet { dt, coords, traces })
}

pub fn load_traces(path: &Path) -> Result<TraceSet> {
    parse_traces(&fs::read(path)?, &path.display().to_string())
}

pub fn encode_traces(set: &TraceSet) -> Result<Vec<u8>> {
    let nsamp = set.samples();
    if set.coords.len() != set.traces.len() || set.traces.iter().any(|t| t.len() != nsamp) {
        return Err(Error::shape("trace lengths or coordinate count disagree"));
    }
    let mut out = format!("{} {} {}\n", set.traces.len(), nsamp, set.dt).into_bytes();
    for (x, y) in &set.coords {
        out.extend_from_slice(format!("{x} {y}\n").as_bytes());
    }
    write_payload(&mut out, set.traces.iter().flatten().copied());
    Ok(out)
}

pub fn save_traces(path: &Path, set: &TraceSet) -> Result<()> {
    fs::write(path, encode_traces(set)?)?;
    Ok(())
}

/// Grid node of a surface coordinate; must sit on a node.
fn node(x: f64, d: f64, what: &str) -> Result<usize> {
    let i = (x / d).round();
    if i < 0.0 || (x - i * d).abs() > 1e-6 * d.max(1.0) {
        return Err(Error::param(format!(
            "{what} coordinate {x} is not on a grid node"
        )));
    }
    Ok(i as usize)
}

/// Reads `<stem>.src` and `<stem>.rcv` into a gather on the model grid.
pub fn load_gather(stem: &Path, model: &VelocityModel) -> Result<ShotGather> {
    let src = load_traces(&stem.with_extension("src"))?;
    let rcv = load_traces(&stem.with_extension("rcv"))?;
    if src.traces.len() != 1 {
        return Err(Error::shape(format!(
            "source file must hold one trace, found {}",
            src.traces.len()
        )));
    }
    if (src.dt - rcv.dt).abs() > 1e-12 * src.dt || src.samples() != rcv.samples() {
        return Err(Error::shape("source and receiver sampling differ"));
    }
    let (sx, sy) = src.coords[0];
    let source = (node(sx, model.dx, "source")?, node(sy, model.dy, "source")?);
    let receivers = rcv
        .coords
        .iter()
        .map(|&(x, y)| {
            Ok((
                node(x, model.dx, "receiver")?,
                node(y, model.dy, "receiver")?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShotGather {
        source,
        wavelet: src.traces[0].clone(),
        receivers,
        traces: rcv.traces,
        window: src.dt * src.samples() as f64,
    })
}

/// Writes a gather as `<stem>.src` and `<stem>.rcv`.
pub fn save_gather(stem: &Path, gather: &ShotGather, dx: f64, dy: f64) -> Result<()> {
    let dt = gather.dt();
    let src = TraceSet {
        dt,
        coords: vec![(gather.source.0 as f64 * dx, gather.source.1 as f64 * dy)],
        traces: vec![gather.wavelet.clone()],
    };
    let rcv = TraceSet {
        dt,
        coords: gather
            .receivers
            .iter()
            .map(|&(x, y)| (x as f64 * dx, y as f64 * dy))
            .collect(),
        traces: gather.traces.clone(),
    };
    save_traces(&stem.with_extension("src"), &src)?;
    save_traces(&stem.with_extension("rcv"), &rcv)
}

/// Gather stems (paths without extension) of every `*.src` file in `dir`,
/// sorted by name.
pub fn gather_stems(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut stems: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "src"))
        .map(|p| p.with_extension(""))
        .collect();
    stems.sort();
    Ok(stems)
}

fn check_plane(plane: &[f64], nx: usize, ny: usize) -> Result<()> {
    if plane.len() != nx * ny || nx == 0 {
        return Err(Error::shape(format!(
            "plane has {} values, expected {nx} x {ny}",
            plane.len()
        )));
    }
    Ok(())
}

/// Comma-separated rows, one per `y` (or per depth for a section).
pub fn snapshot_csv(plane: &[f64], nx: usize, ny: usize) -> Result<String> {
    check_plane(plane, nx, ny)?;
    let mut out = String::new();
    for row in plane.chunks(nx) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Binary 8-bit PGM with symmetric clipping: `0 -> 128`, `+-max -> 255/0`.
pub fn snapshot_pgm(plane: &[f64], nx: usize, ny: usize) -> Result<Vec<u8>> {
    check_plane(plane, nx, ny)?;
    let peak = plane.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    out.extend(plane.iter().map(|&v| {
        let s = if peak > 0.0 { v / peak } else { 0.0 };
        (128.0 + 127.0 * s).round().clamp(0.0, 255.0) as u8
    }));
    Ok(out)
}

pub fn save_snapshot_csv(path: &Path, plane: &[f64], nx: usize, ny: usize) -> Result<()> {
    fs::write(path, snapshot_csv(plane, nx, ny)?)?;
    Ok(())
}

pub fn save_snapshot_pgm(path: &Path, plane: &[f64], nx: usize, ny: usize) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&snapshot_pgm(plane, nx, ny)?)?;
    Ok(())
}

/// Everything a run needs besides the input files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub eta: f64,
    /// Laguerre coefficient count `M`.
    pub laguerre_count: usize,
    /// Fourier sample count `N`.
    pub fourier_count: usize,
    /// Time sample interval; the window is `N * dt`.
    pub dt: f64,
    /// Depth step override; the model spacing otherwise.
    pub dz: Option<f64>,
    pub pade_order: usize,
    /// Fit the rational coefficients by least squares instead of the
    /// closed form.
    pub pade_fit: bool,
    pub filter_count: usize,
    pub ddm: DDMConfig,
    pub taper_width: usize,
    pub cg_eps: f64,
    pub cg_maxiter: usize,
    pub ricker_freq: f64,
    pub force_fd: bool,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eta: 600.0,
            laguerre_count: 2048,
            fourier_count: 1024,
            dt: 0.002,
            dz: None,
            pade_order: 4,
            pade_fit: false,
            filter_count: 2,
            ddm: DDMConfig::default(),
            taper_width: 20,
            cg_eps: 1e-6,
            cg_maxiter: 1000,
            ricker_freq: 20.0,
            force_fd: false,
            output_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn window(&self) -> f64 {
        self.fourier_count as f64 * self.dt
    }

    pub fn laguerre_params(&self) -> Result<LaguerreParams> {
        LaguerreParams::new(self.eta, self.laguerre_count, self.window())
    }

    pub fn pade(&self) -> Result<PadeExpansion> {
        if self.pade_fit {
            PadeExpansion::least_squares(self.pade_order, 0.9)
        } else {
            PadeExpansion::standard(self.pade_order)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || self.laguerre_count == 0 || self.fourier_count == 0 {
            return Err(Error::param("eta, M and N must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::param("dt must be positive"));
        }
        if let Some(dz) = self.dz {
            if !(dz > 0.0) {
                return Err(Error::param("dz override must be positive"));
            }
        }
        if !(self.cg_eps > 0.0) || self.cg_maxiter == 0 {
            return Err(Error::param(
                "CG tolerance and iteration cap must be positive",
            ));
        }
        if self.filter_count > 4 {
            return Err(Error::param("filter velocity count must be 0 to 4"));
        }
        if !(self.ricker_freq > 0.0) {
            return Err(Error::param("Ricker frequency must be positive"));
        }
        Ok(())
    }

    pub fn extrapolator_config(&self) -> Result<ExtrapolatorConfig> {
        self.validate()?;
        Ok(ExtrapolatorConfig {
            pade: self.pade()?,
            solver: SolverConfig {
                eps: self.cg_eps,
                maxiter: self.cg_maxiter,
                ddm: self.ddm,
            },
            filter_count: self.filter_count,
            taper_width: self.taper_width,
            force_fd: self.force_fd,
        })
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "eta           = {}", self.eta)?;
        writeln!(f, "M             = {}", self.laguerre_count)?;
        writeln!(f, "N             = {}", self.fourier_count)?;
        writeln!(f, "dt            = {}", self.dt)?;
        writeln!(f, "window        = {}", self.window())?;
        match self.dz {
            Some(dz) => writeln!(f, "dz            = {dz}")?,
            None => writeln!(f, "dz            = model")?,
        }
        writeln!(
            f,
            "pade          = {} ({})",
            self.pade_order,
            if self.pade_fit {
                "least squares"
            } else {
                "closed form"
            }
        )?;
        writeln!(f, "filter b      = {}", self.filter_count)?;
        writeln!(
            f,
            "ddm           = {}x{} buffer {}",
            self.ddm.px, self.ddm.py, self.ddm.buffer
        )?;
        writeln!(f, "taper         = {}", self.taper_width)?;
        writeln!(f, "cg eps        = {}", self.cg_eps)?;
        writeln!(f, "cg maxiter    = {}", self.cg_maxiter)?;
        writeln!(f, "ricker freq   = {}", self.ricker_freq)?;
        writeln!(f, "force fd      = {}", self.force_fd)?;
        write!(f, "output        = {}", self.output_dir.display())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ricker_peak_at_delay() {
        let w = ricker(20.0, 0.1, 101, 0.001);
        assert_eq!(w[100], 1.0);
        assert!(w.iter().all(|v| *v <= 1.0));
    }

    #[test]
    fn model_round_trip_is_bitwise() {
        let model = VelocityModel::from_fn(3, 2, 4, 10.0, 12.5, 5.0, |x, y, z| {
            (1500.0 + x + 2.0 * y + 3.0 * z) as f32 as f64
        })
        .unwrap();
        let bytes = encode_model(&model);
        let back = parse_model(&bytes, "m").unwrap();
        assert_eq!(back, model);
        assert_eq!(encode_model(&back), bytes);
    }

    #[test]
    fn truncated_model_reports_sizes() {
        let model = VelocityModel::new(2, 1, 1, 1.0, 1.0, 1.0, vec![1.0, 2.0]).unwrap();
        let mut bytes = encode_model(&model);
        bytes.pop();
        match parse_model(&bytes, "m") {
            Err(Error::TruncatedPayload {
                expected, actual, ..
            }) => {
                assert_eq!((expected, actual), (8, 7));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_model(b"2 1 1 1 1\n", "m"),
            Err(Error::BadHeader { .. })
        ));
        assert!(matches!(
            parse_model(b"2 1 1 1 1 1", "m"),
            Err(Error::BadHeader { .. })
        ));
    }

    #[test]
    fn traces_round_trip_is_bitwise() {
        let set = TraceSet {
            dt: 0.004,
            coords: vec![(0.0, 0.0), (10.0, 20.0)],
            traces: vec![vec![1.0, -0.5, 0.25], vec![0.0, 3.0, -2.0]],
        };
        let bytes = encode_traces(&set).unwrap();
        let back = parse_traces(&bytes, "t").unwrap();
        assert_eq!(back, set);
        assert_eq!(encode_traces(&back).unwrap(), bytes);
        let short = &bytes[..bytes.len() - 4];
        assert!(matches!(
            parse_traces(short, "t"),
            Err(Error::TruncatedPayload {
                expected: 24,
                actual: 20,
                ..
            })
        ));
    }

    #[test]
    fn zero_plane_is_mid_gray() {
        let pgm = snapshot_pgm(&[0.0; 6], 3, 2).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert!(pgm[header.len()..].iter().all(|&p| p == 128));
        let pgm = snapshot_pgm(&[-2.0, 0.0, 2.0], 3, 1).unwrap();
        assert_eq!(&pgm[pgm.len() - 3..], &[1, 128, 255]);
        assert!(snapshot_pgm(&[0.0; 5], 3, 2).is_err());
    }

    #[test]
    fn csv_layout() {
        let csv = snapshot_csv(&[1.0, 2.0, 3.0, 4.0], 2, 2).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 2);
    }

    #[test]
    fn default_config_matches_documented_values() {
        let c = RunConfig::default();
        assert_eq!(
            (c.eta, c.laguerre_count, c.fourier_count),
            (600.0, 2048, 1024)
        );
        assert_eq!((c.pade_order, c.filter_count, c.ddm.buffer), (4, 2, 8));
        assert_eq!(c.cg_eps, 1e-6);
        assert!(c.validate().is_ok());
        assert!(c.to_string().contains("eta"));
    }
}
