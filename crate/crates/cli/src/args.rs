use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gho_core::grid::GridSpec;
use gho_core::params::{BasisInit, ParticularInit};

#[derive(Debug, Parser)]
#[command(name = "gho", version, about = "Propagators, modes and invariants of time-dependent oscillators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the property-check suite and print one CHECK line per property.
    Verify(Common),
    /// Tabulate K(t_b, x_b; t_a, x_a) over grid x grid endpoints.
    KernelScan(Common),
    /// Evolve a Gaussian packet and write it at each requested time.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Method::Kernel)]
        method: Method,
        /// `centre,k,sigma`
        #[arg(long, allow_hyphen_values = true, default_value = "0.5,0.3,0.7071067811865476")]
        packet: String,
        /// Crank-Nicolson step.
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
    /// Write eigenmodes psi_n at each requested time.
    Modes(Common),
    /// Track the invariant expectation along an evolved packet.
    Invariant {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Method::Tdse)]
        method: Method,
        #[arg(long, allow_hyphen_values = true, default_value = "0.5,0.3,0.7071067811865476")]
        packet: String,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
    /// Build coherent/squeezed states and tabulate their first two moments.
    Coherent(Common),
    /// Tabulate the classical basis, particular solution and rho.
    Trajectory {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Kernel,
    Tdse,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory for CSV files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// `xmin,xmax,n`
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// `t0,t1,...`
    #[arg(long, allow_hyphen_values = true)]
    pub times: Option<String>,
    /// `n0..n1`, inclusive.
    #[arg(long, default_value = "0..0")]
    pub modes: String,
    /// `default` or `custom:u0,udot0,v0,vdot0`
    #[arg(long, allow_hyphen_values = true, default_value = "default")]
    pub basis: String,
    /// `x0,xdot0`
    #[arg(long, allow_hyphen_values = true)]
    pub xp: Option<String>,
    /// `name=value`, repeatable.
    #[arg(long = "tol")]
    pub tol: Vec<String>,
}

pub fn floats(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number {s:?} in {what}")))
        .collect()
}

fn exactly<const N: usize>(text: &str, what: &str) -> Result<[f64; N]> {
    let v = floats(text, what)?;
    match <[f64; N]>::try_from(v.as_slice()) {
        Ok(a) => Ok(a),
        Err(_) => bail!("{what} needs {N} comma-separated numbers, got {text:?}"),
    }
}

pub fn grid(text: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        bail!("--grid needs xmin,xmax,n, got {text:?}");
    }
    let [lo, hi] = exactly::<2>(&parts[..2].join(","), "--grid")?;
    let n = parts[2].trim().parse::<usize>().with_context(|| format!("bad point count {:?}", parts[2]))?;
    Ok(GridSpec::new(lo, hi, n)?)
}

pub fn modes(text: &str) -> Result<(usize, usize)> {
    let (a, b) = text.split_once("..").unwrap_or((text, text));
    let n0 = a.trim().parse::<usize>().with_context(|| format!("bad mode range {text:?}"))?;
    let n1 = b.trim().parse::<usize>().with_context(|| format!("bad mode range {text:?}"))?;
    if n1 < n0 {
        bail!("empty mode range {text:?}");
    }
    Ok((n0, n1))
}

pub fn basis(text: &str) -> Result<Option<BasisInit>> {
    if text == "default" {
        return Ok(None);
    }
    let Some(rest) = text.strip_prefix("custom:") else {
        bail!("--basis must be default or custom:u0,udot0,v0,vdot0, got {text:?}");
    };
    let [u0, ud, v0, vd] = exactly::<4>(rest, "--basis")?;
    Ok(Some(BasisInit::new(u0, ud, v0, vd)))
}

pub fn particular(text: &str) -> Result<ParticularInit> {
    let [x0, xd] = exactly::<2>(text, "--xp")?;
    Ok(ParticularInit::new(x0, xd))
}

pub fn packet(text: &str) -> Result<[f64; 3]> {
    let p = exactly::<3>(text, "--packet")?;
    if p[2].is_nan() || p[2] <= 0.0 {
        bail!("packet width must be positive, got {}", p[2]);
    }
    Ok(p)
}

pub fn tolerance(text: &str) -> Result<(String, f64)> {
    let Some((name, value)) = text.split_once('=') else {
        bail!("--tol needs name=value, got {text:?}");
    };
    let value = value.trim().parse::<f64>().with_context(|| format!("bad tolerance value in {text:?}"))?;
    Ok((name.trim().to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let g = grid("-5,5,101").unwrap();
        assert_eq!((g.x_min, g.x_max, g.n_points), (-5.0, 5.0, 101));
        assert!(grid("-5,5").is_err());
        assert_eq!(modes("0..3").unwrap(), (0, 3));
        assert_eq!(modes("4").unwrap(), (4, 4));
        assert!(modes("3..1").is_err());
        assert_eq!(basis("default").unwrap(), None);
        assert_eq!(basis("custom:1,0,0,2").unwrap(), Some(BasisInit::new(1.0, 0.0, 0.0, 2.0)));
        assert!(basis("custom:1,0").is_err());
        assert_eq!(tolerance("path_integral=1e-4").unwrap(), ("path_integral".to_string(), 1e-4));
        assert!(packet("0,0,-1").is_err());
    }
}
