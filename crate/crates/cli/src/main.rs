//! `gho`: batch experiments on time-dependent quadratic oscillators.
//!
//! Exit status is 0 when everything ran (and, for `verify`, every check
//! passed or was skipped), 1 when a check failed or a computation broke
//! down, and 2 when the input could not be used.

mod args;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use gho_core::classical::{trajectory_rows, Oscillator};
use gho_core::error::GhoError;
use gho_core::export::{write_kernel_scan_csv, write_packet_csv, write_row, write_trajectory_csv, KernelSample};
use gho_core::grid::{GridSpec, WavePacket};
use gho_core::oracle::{evolve_tdse, EvolverConfig};
use gho_core::params::Scenario;
use gho_core::propagator::{kernel, propagate, KernelQuery};
use gho_core::states::{build_generalized_coherent_state, eigenmode_packet, invariant_expectation};
use gho_core::verify::{default_grid, run_verify, VerifyConfig};

use args::{Cli, Command, Common, Method};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<GhoError>() {
        Some(GhoError::IntegrationFailure(_) | GhoError::LinearSolveFailure(_)) => 1,
        _ => 2,
    }
}

/// Loaded scenario with the command-line overrides applied.
struct Setup {
    scenario: Scenario,
    osc: Oscillator,
    grid: GridSpec,
    times: Option<Vec<f64>>,
    modes: (usize, usize),
}

/// Reads the scenario file and applies `--basis` and `--xp`.
fn load(c: &Common) -> Result<Scenario> {
    let text = fs::read_to_string(&c.scenario).with_context(|| format!("reading {}", c.scenario.display()))?;
    let mut scenario = Scenario::from_toml(&text).with_context(|| c.scenario.display().to_string())?;
    if let Some(b) = args::basis(&c.basis)? {
        scenario.basis = Some(b);
    }
    if let Some(xp) = &c.xp {
        scenario.particular = Some(args::particular(xp)?);
    }
    Ok(scenario)
}

fn setup(c: &Common) -> Result<Setup> {
    let scenario = load(c)?;
    let osc = Oscillator::solve(&scenario)?;
    let grid = match &c.grid {
        Some(g) => args::grid(g)?,
        None => default_grid(&osc)?,
    };
    let times = c.times.as_deref().map(|t| args::floats(t, "--times")).transpose()?;
    for &t in times.iter().flatten() {
        scenario.ensure_contains(t)?;
    }
    Ok(Setup {
        scenario,
        osc,
        grid,
        times,
        modes: args::modes(&c.modes)?,
    })
}

fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64).collect()
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Verify(c) => verify(&c),
        Command::KernelScan(c) => kernel_scan(&c).map(|_| true),
        Command::Evolve { common, method, packet, dt } => evolve(&common, method, &packet, dt).map(|_| true),
        Command::Modes(c) => modes(&c).map(|_| true),
        Command::Invariant { common, method, packet, dt } => invariant(&common, method, &packet, dt).map(|_| true),
        Command::Coherent(c) => coherent(&c).map(|_| true),
        Command::Trajectory { common, samples } => trajectory(&common, samples).map(|_| true),
    }
}

fn verify(c: &Common) -> Result<bool> {
    let scenario = load(c)?;
    let mut cfg = VerifyConfig::default();
    cfg.grid = c.grid.as_deref().map(args::grid).transpose()?;
    cfg.times = c.times.as_deref().map(|t| args::floats(t, "--times")).transpose()?;
    for t in &c.tol {
        let (name, value) = args::tolerance(t)?;
        cfg.set_tolerance(&name, value)?;
    }
    let report = run_verify(&scenario, &cfg)?;
    let mut stdout = std::io::stdout().lock();
    write!(stdout, "{report}")?;
    stdout.flush()?;
    Ok(report.all_passed())
}

fn kernel_scan(c: &Common) -> Result<()> {
    let s = setup(c)?;
    let (t_a, t_b) = match s.times.as_deref() {
        Some([a, b]) => (*a, *b),
        Some(_) => bail!("kernel-scan needs --times t_a,t_b"),
        None => (s.scenario.t0(), s.scenario.t0() + (s.scenario.t1() - s.scenario.t0()).min(1.0)),
    };
    let grid = match &c.grid {
        Some(_) => s.grid,
        None => GridSpec::new(-5.0, 5.0, 21)?,
    };
    let xs = grid.points();
    let mut rows = Vec::with_capacity(xs.len() * xs.len());
    for &x_a in &xs {
        for &x_b in &xs {
            let value = kernel(&s.osc, &KernelQuery::scalar(t_a, x_a, t_b, x_b))?;
            rows.push(KernelSample { t_a, x_a, t_b, x_b, value });
        }
    }
    let mut out = create(&c.out, "kernel_scan.csv")?;
    write_kernel_scan_csv(&mut out, &rows)?;
    out.flush()?;
    Ok(())
}

fn initial_packet(s: &Setup, text: &str) -> Result<WavePacket> {
    let [centre, k, sigma] = args::packet(text)?;
    Ok(WavePacket::gaussian(s.grid, s.scenario.t0(), centre, k, sigma))
}

/// The packet at each of `times` (non-decreasing, starting at or after `t0`).
fn evolved(s: &Setup, method: Method, packet: &WavePacket, times: &[f64], dt: f64) -> Result<Vec<WavePacket>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < packet.t) {
        bail!("evolution times must be non-decreasing and not before t0");
    }
    let cfg = EvolverConfig::new(dt, s.grid)?;
    let mut current = packet.clone();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let next = if t == packet.t {
            packet.clone()
        } else {
            match method {
                Method::Kernel => propagate(&s.osc, packet, t)?,
                Method::Tdse => evolve_tdse(&s.scenario, &current, t, &cfg)?,
            }
        };
        current = next.clone();
        out.push(next);
    }
    Ok(out)
}

fn evolve(c: &Common, method: Method, packet: &str, dt: f64) -> Result<()> {
    let s = setup(c)?;
    let t0 = s.scenario.t0();
    let times = s.times.clone().unwrap_or_else(|| uniform_times(t0, t0 + (s.scenario.t1() - t0).min(1.0), 5));
    let psi = initial_packet(&s, packet)?;
    let hash = s.scenario.fingerprint();
    for (k, p) in evolved(&s, method, &psi, &times, dt)?.iter().enumerate() {
        let mut out = create(&c.out, &format!("packet_{k:03}.csv"))?;
        write_packet_csv(&mut out, p, &hash)?;
        out.flush()?;
    }
    Ok(())
}

fn modes(c: &Common) -> Result<()> {
    let s = setup(c)?;
    let times = s.times.clone().unwrap_or_else(|| vec![s.scenario.t0()]);
    let hash = s.scenario.fingerprint();
    for (k, &t) in times.iter().enumerate() {
        for n in s.modes.0..=s.modes.1 {
            let psi = eigenmode_packet(&s.osc, n, t, s.grid)?;
            let mut out = create(&c.out, &format!("mode_n{n}_t{k:03}.csv"))?;
            write_packet_csv(&mut out, &psi, &hash)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn invariant(c: &Common, method: Method, packet: &str, dt: f64) -> Result<()> {
    let s = setup(c)?;
    let t0 = s.scenario.t0();
    let times = s.times.clone().unwrap_or_else(|| uniform_times(t0, t0 + (s.scenario.t1() - t0).min(5.0), 51));
    let psi = initial_packet(&s, packet)?;
    let mut out = create(&c.out, "invariant.csv")?;
    writeln!(out, "t,invariant,imaginary")?;
    for p in evolved(&s, method, &psi, &times, dt)? {
        let inv = invariant_expectation(&p, &s.osc)?;
        write_row(&mut out, &[p.t, inv.value, inv.imaginary])?;
    }
    out.flush()?;
    Ok(())
}

fn coherent(c: &Common) -> Result<()> {
    let s = setup(c)?;
    let times = s.times.clone().unwrap_or_else(|| uniform_times(s.scenario.t0(), s.scenario.t1(), 61));
    let omega = s.osc.basis.omega();
    let hbar = s.scenario.hbar;
    for n in s.modes.0..=s.modes.1 {
        let mut out = create(&c.out, &format!("coherent_n{n}.csv"))?;
        writeln!(out, "t,mean_x,x_p,var_x,var_expected")?;
        for &t in &times {
            let psi = build_generalized_coherent_state(&s.osc, n, t, s.grid)?;
            let rho = s.osc.rho(t)?.rho;
            let expected = (2 * n + 1) as f64 * hbar * rho * rho / (2.0 * omega);
            let x_p = s.osc.particular.at(t)?.x;
            write_row(&mut out, &[t, psi.mean_x(), x_p, psi.variance_x(), expected])?;
        }
        out.flush()?;
    }
    Ok(())
}

fn trajectory(c: &Common, samples: usize) -> Result<()> {
    let s = setup(c)?;
    let times = match s.times.clone() {
        Some(t) => t,
        None if samples >= 2 => uniform_times(s.scenario.t0(), s.scenario.t1(), samples),
        None => bail!("--samples must be at least 2"),
    };
    let rows = trajectory_rows(&s.osc, &times)?;
    let mut out = create(&c.out, "trajectory.csv")?;
    write_trajectory_csv(&mut out, &rows)?;
    out.flush()?;
    Ok(())
}
