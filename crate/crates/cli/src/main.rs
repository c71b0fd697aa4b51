//! `lagwave`: impulse responses, shot migration, trace transforms and
//! rational-approximation diagnostics.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lagwave::extrapolator::{impulse_response, Extrapolator, VelocityModel};
use lagwave::io::{self, RunConfig};
use lagwave::laguerre::LaguerreSpectrum;
use lagwave::linsolve::DDMConfig;
use lagwave::migration;
use lagwave::pade::PadeExpansion;

/// Laguerre-in-time one-way wave equation tools.
#[derive(Parser, Debug)]
#[command(name = "lagwave", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Impulse response of a surface point source.
    Impulse(ImpulseArgs),
    /// Prestack depth migration of a directory of shot gathers.
    Migrate(MigrateArgs),
    /// Laguerre coefficients of every trace in a trace file.
    Xform(XformArgs),
    /// Error curve of the rational square-root approximation as CSV.
    Dispersion(DispersionArgs),
}

/// Solver settings shared by `impulse` and `migrate`.
#[derive(Args, Debug)]
struct RunArgs {
    /// Laguerre scale factor eta (1/s).
    #[arg(long, default_value_t = 600.0)]
    eta: f64,
    /// Number of Laguerre coefficients M.
    #[arg(short = 'M', long = "laguerre", default_value_t = 2048)]
    laguerre: usize,
    /// Number of time samples N; the window is N * dt.
    #[arg(short = 'N', long = "fourier", default_value_t = 1024)]
    fourier: usize,
    /// Time sample interval (s).
    #[arg(long, default_value_t = 0.002)]
    dt: f64,
    /// Depth step (m); defaults to the model spacing.
    #[arg(long)]
    dz: Option<f64>,
    /// Number of rational terms n.
    #[arg(long, default_value_t = 4)]
    pade_order: usize,
    /// Fit the rational coefficients by least squares on [0, 0.9].
    #[arg(long)]
    pade_fit: bool,
    /// Filter reference velocities b (0 disables filtering, at most 4).
    #[arg(short = 'b', long = "filters", default_value_t = 2)]
    filters: usize,
    /// Subdomain grid for the layer solves, e.g. 2x2.
    #[arg(long, value_parser = parse_ddm, default_value = "1x1")]
    ddm: (usize, usize),
    /// Buffer width around each subdomain (nodes).
    #[arg(long, default_value_t = 8)]
    buffer: usize,
    /// Taper strip width (nodes).
    #[arg(long, default_value_t = 20)]
    taper: usize,
    /// CG relative residual tolerance.
    #[arg(long, default_value_t = 1e-6)]
    cg_eps: f64,
    /// CG iteration cap.
    #[arg(long, default_value_t = 1000)]
    cg_maxiter: usize,
    /// Ricker dominant frequency (Hz).
    #[arg(long, default_value_t = 20.0)]
    ricker_freq: f64,
    /// Use the finite-difference path on homogeneous layers too.
    #[arg(long)]
    force_fd: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_ddm(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected PXxPY, got {s:?}"))?;
    let px = a
        .trim()
        .parse()
        .map_err(|_| format!("bad subdomain count {a:?}"))?;
    let py = b
        .trim()
        .parse()
        .map_err(|_| format!("bad subdomain count {b:?}"))?;
    if px == 0 || py == 0 {
        return Err("subdomain counts must be positive".into());
    }
    Ok((px, py))
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let cfg = RunConfig {
            eta: self.eta,
            laguerre_count: self.laguerre,
            fourier_count: self.fourier,
            dt: self.dt,
            dz: self.dz,
            pade_order: self.pade_order,
            pade_fit: self.pade_fit,
            filter_count: self.filters,
            ddm: DDMConfig::new(self.ddm.0, self.ddm.1, self.buffer)?,
            taper_width: self.taper,
            cg_eps: self.cg_eps,
            cg_maxiter: self.cg_maxiter,
            ricker_freq: self.ricker_freq,
            force_fd: self.force_fd,
            output_dir: self.out.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct ImpulseArgs {
    /// Velocity model file.
    #[arg(long)]
    model: PathBuf,
    /// Source x coordinate (m); defaults to the model center.
    #[arg(long)]
    source_x: Option<f64>,
    /// Source y coordinate (m); defaults to the model center.
    #[arg(long)]
    source_y: Option<f64>,
    /// Snapshot time (s).
    #[arg(long, default_value_t = 0.25)]
    time: f64,
    /// Source delay (s); defaults to 1.5 / ricker frequency.
    #[arg(long)]
    delay: Option<f64>,
    /// Depth indices to write as snapshot planes, comma separated.
    #[arg(long, value_delimiter = ',')]
    depths: Vec<usize>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct MigrateArgs {
    /// Velocity model file.
    #[arg(long)]
    model: PathBuf,
    /// Directory holding `<name>.src` / `<name>.rcv` gathers.
    #[arg(long)]
    gathers: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct XformArgs {
    /// Trace file.
    #[arg(long)]
    input: PathBuf,
    /// Laguerre scale factor eta (1/s).
    #[arg(long, default_value_t = 600.0)]
    eta: f64,
    /// Number of Laguerre coefficients M.
    #[arg(short = 'M', long = "laguerre", default_value_t = 2048)]
    laguerre: usize,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DispersionArgs {
    /// Number of rational terms.
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Use least-squares coefficients fitted on [0, 0.9].
    #[arg(long)]
    fit: bool,
    /// Grid points on [0, 1).
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn node(coord: Option<f64>, spacing: f64, n: usize, what: &str) -> Result<usize> {
    let Some(x) = coord else { return Ok(n / 2) };
    let i = (x / spacing).round();
    if i < 0.0 || i as usize >= n {
        bail!("{what} coordinate {x} lies outside the model");
    }
    Ok(i as usize)
}

fn stepper_for(model: &VelocityModel, cfg: &RunConfig) -> Result<(Extrapolator, VelocityModel)> {
    let mut model = model.clone();
    if let Some(dz) = cfg.dz {
        model.dz = dz;
    }
    let stepper = Extrapolator::new(
        model.layout()?,
        cfg.laguerre_params()?,
        cfg.fourier_count,
        cfg.extrapolator_config()?,
    )?;
    Ok((stepper, model))
}

fn run_impulse(args: &ImpulseArgs) -> Result<()> {
    let cfg = args.run.config()?;
    eprintln!("{cfg}");
    let model =
        io::load_model(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let (stepper, model) = stepper_for(&model, &cfg)?;
    let sx = node(args.source_x, model.dx, model.nx, "source x")?;
    let sy = node(args.source_y, model.dy, model.ny, "source y")?;
    let delay = args.delay.unwrap_or(1.5 / cfg.ricker_freq);
    let wavelet = io::ricker(cfg.ricker_freq, delay, cfg.fourier_count, cfg.dt);
    let coeffs = stepper.bridge().expand(&wavelet)?;
    let resp = impulse_response(&model, &stepper, (sx, sy), &coeffs, args.time)?;

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let mut energy = String::from("depth_index,depth_m,energy,coeff_norm\n");
    for (iz, (e, n)) in resp.energy.iter().zip(&resp.norms).enumerate() {
        energy.push_str(&format!("{iz},{},{e:e},{n:e}\n", iz as f64 * model.dz));
    }
    fs::write(dir.join("energy.csv"), energy)?;

    // x-z section through the source row
    let mut section = Vec::with_capacity(resp.snapshots.len() * model.nx);
    for plane in &resp.snapshots {
        section.extend_from_slice(&plane[sy * model.nx..(sy + 1) * model.nx]);
    }
    let rows = resp.snapshots.len();
    io::save_snapshot_csv(&dir.join("section.csv"), &section, model.nx, rows)?;
    io::save_snapshot_pgm(&dir.join("section.pgm"), &section, model.nx, rows)?;
    for &iz in &args.depths {
        let Some(plane) = resp.snapshots.get(iz) else {
            bail!(
                "requested depth index {iz} beyond {} levels",
                resp.snapshots.len()
            );
        };
        io::save_snapshot_csv(
            &dir.join(format!("snapshot_z{iz}.csv")),
            plane,
            model.nx,
            model.ny,
        )?;
        io::save_snapshot_pgm(
            &dir.join(format!("snapshot_z{iz}.pgm")),
            plane,
            model.nx,
            model.ny,
        )?;
    }
    eprintln!("wrote impulse response to {}", dir.display());
    Ok(())
}

fn run_migrate(args: &MigrateArgs) -> Result<()> {
    let cfg = args.run.config()?;
    eprintln!("{cfg}");
    let model =
        io::load_model(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let (stepper, model) = stepper_for(&model, &cfg)?;
    let stems = io::gather_stems(&args.gathers)?;
    if stems.is_empty() {
        bail!("no *.src gathers in {}", args.gathers.display());
    }
    let gathers = stems
        .iter()
        .map(|s| {
            io::load_gather(s, &model).with_context(|| format!("reading gather {}", s.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let image = migration::migrate(&gathers, &model, &stepper)?;

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    for (name, data) in [("ic", &image.ic), ("id", &image.id)] {
        let grid = io::Grid3 {
            nx: model.nx,
            ny: model.ny,
            nz: model.nz,
            dx: model.dx,
            dy: model.dy,
            dz: model.dz,
            values: data.clone(),
        };
        io::save_grid(&dir.join(format!("{name}.img")), &grid)?;
        let mid = model.ny / 2;
        let mut section = Vec::with_capacity(model.nx * model.nz);
        for iz in 0..model.nz {
            let base = (iz * model.ny + mid) * model.nx;
            section.extend_from_slice(&data[base..base + model.nx]);
        }
        io::save_snapshot_pgm(
            &dir.join(format!("{name}.pgm")),
            &section,
            model.nx,
            model.nz,
        )?;
    }
    eprintln!("migrated {} shots into {}", gathers.len(), dir.display());
    Ok(())
}

fn run_xform(args: &XformArgs) -> Result<()> {
    let set = io::load_traces(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let n = set.samples();
    if n == 0 {
        bail!("trace file holds no samples");
    }
    let params =
        lagwave::laguerre::LaguerreParams::new(args.eta, args.laguerre, n as f64 * set.dt)?;
    eprintln!(
        "eta = {}, M = {}, N = {n}, window = {}",
        params.eta, params.count, params.window
    );
    let bridge = lagwave::bridge::Bridge::new(params, n)?;
    let times: Vec<f64> = (0..n).map(|i| i as f64 * set.dt).collect();
    let mut csv = String::from("trace,m,coefficient\n");
    for (t, trace) in set.traces.iter().enumerate() {
        let coeffs = bridge.expand(trace)?;
        let back = LaguerreSpectrum::new(params, coeffs.clone())?.synthesize(&times)?;
        let peak = trace.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let err = back
            .iter()
            .zip(trace)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        eprintln!(
            "trace {t}: max round-trip error {:.3e} of peak",
            if peak > 0.0 { err / peak } else { err }
        );
        for (m, c) in coeffs.iter().enumerate() {
            csv.push_str(&format!("{t},{m},{c:e}\n"));
        }
    }
    write_output(&args.out, &csv)
}

fn run_dispersion(args: &DispersionArgs) -> Result<()> {
    let pade = if args.fit {
        PadeExpansion::least_squares(args.n, 0.9)?
    } else {
        PadeExpansion::standard(args.n)?
    };
    if args.points < 2 {
        bail!("need at least 2 grid points");
    }
    eprintln!("n = {}, poles at X = {:?}", pade.order(), pade.poles());
    let grid: Vec<f64> = (0..args.points)
        .map(|i| i as f64 / args.points as f64)
        .collect();
    let err = pade.dispersion_error(&grid)?;
    let mut csv = String::from("x,exact,approx,error\n");
    for (x, e) in grid.iter().zip(&err) {
        csv.push_str(&format!(
            "{x},{},{},{e:e}\n",
            (1.0 - x).sqrt(),
            pade.approximate(*x)
        ));
    }
    write_output(&args.out, &csv)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("LAGWAVE_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("LAGWAVE_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Impulse(a) => run_impulse(a),
        Command::Migrate(a) => run_migrate(a),
        Command::Xform(a) => run_xform(a),
        Command::Dispersion(a) => run_dispersion(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lagwave: {e:#}");
            ExitCode::FAILURE
        }
    }
}
