//! CSV writers. Numbers are written in Rust's shortest round-trip form, so
//! identical inputs give identical bytes.

use std::fmt;
use std::io::Write;

use crate::classical::TrajectoryRow;
use crate::error::Result;
use crate::grid::WavePacket;
use crate::propagator::ComplexAmplitude;

/// Shortest round-trip decimal, in exponent form when very small or large.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

/// Writes `values` as one comma-separated line.
pub fn write_row(out: &mut impl Write, values: &[f64]) -> Result<()> {
    let mut first = true;
    for &v in values {
        if !first {
            out.write_all(b",")?;
        }
        write!(out, "{}", Num(v))?;
        first = false;
    }
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_trajectory_csv(out: &mut impl Write, rows: &[TrajectoryRow]) -> Result<()> {
    writeln!(out, "t,u,u_dot,v,v_dot,x_p,x_p_dot,xi,rho,rho_dot,tau")?;
    for r in rows {
        write_row(out, &[r.t, r.u, r.u_dot, r.v, r.v_dot, r.x_p, r.x_p_dot, r.xi, r.rho, r.rho_dot, r.tau])?;
    }
    Ok(())
}

/// One kernel value with its arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub t_a: f64,
    pub x_a: f64,
    pub t_b: f64,
    pub x_b: f64,
    pub value: ComplexAmplitude,
}

pub fn write_kernel_scan_csv(out: &mut impl Write, samples: &[KernelSample]) -> Result<()> {
    writeln!(out, "t_a,x_a,t_b,x_b,re,im,modulus,phase")?;
    for s in samples {
        let z = s.value;
        write_row(out, &[s.t_a, s.x_a, s.t_b, s.x_b, z.re, z.im, z.norm(), z.arg()])?;
    }
    Ok(())
}

/// Packet table with `#`-prefixed header lines for time, grid and scenario.
pub fn write_packet_csv(out: &mut impl Write, packet: &WavePacket, scenario_hash: &str) -> Result<()> {
    let g = &packet.grid;
    writeln!(out, "# t={}", Num(packet.t))?;
    writeln!(out, "# grid={},{},{}", Num(g.x_min), Num(g.x_max), g.n_points)?;
    writeln!(out, "# scenario={scenario_hash}")?;
    writeln!(out, "x,re,im,modulus2")?;
    for (x, z) in packet.points().iter().zip(&packet.samples) {
        write_row(out, &[*x, z.re, z.im, z.norm_sqr()])?;
    }
    Ok(())
}

pub fn write_residual_csv(out: &mut impl Write, rows: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "x,residual")?;
    for &(x, r) in rows {
        write_row(out, &[x, r])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use num_complex::Complex64;

    #[test]
    fn packet_layout() {
        let grid = GridSpec::new(-1.0, 1.0, 16).unwrap();
        let p = WavePacket::from_fn(grid, 0.5, |x| Complex64::new(x, 1.0));
        let mut buf = Vec::new();
        write_packet_csv(&mut buf, &p, "abcd").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# t=0.5");
        assert_eq!(lines[1], "# grid=-1,1,16");
        assert_eq!(lines[2], "# scenario=abcd");
        assert_eq!(lines[3], "x,re,im,modulus2");
        assert_eq!(lines[4], "-1,-1,1,2");
        assert_eq!(lines.len(), 4 + 16);
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.0, -2.5, 1e-18, -3.25e-7, 1.2345678901234567e20, 1e-4, 0.1 + 0.2] {
            let text = Num(v).to_string();
            assert_eq!(text.parse::<f64>().unwrap(), v, "{text}");
        }
        assert_eq!(Num(1.0183804503147643e-18).to_string(), "1.0183804503147643e-18");
        assert_eq!(Num(0.5).to_string(), "0.5");
    }

    #[test]
    fn kernel_rows() {
        let mut buf = Vec::new();
        let s = KernelSample {
            t_a: 0.0,
            x_a: 1.0,
            t_b: 2.0,
            x_b: -1.0,
            value: Complex64::new(0.0, 2.0),
        };
        write_kernel_scan_csv(&mut buf, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("t_a,x_a,t_b,x_b,re,im,modulus,phase\n0,1,2,-1,0,2,2,{}\n", std::f64::consts::FRAC_PI_2));
    }
}
