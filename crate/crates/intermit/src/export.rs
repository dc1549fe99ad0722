//! CSV exports of simulated paths and samples.
//!
//! | command           | columns                                   |
//! |-------------------|-------------------------------------------|
//! | `simulate-map`    | `t, s_a1..s_ad, s_y, g_y, d_y`            |
//! | `excursions`      | `k, phi, ray, steps`                      |
//! | `simulate-bessel` | `t, modulus, ray, L`                      |
//! | `sample-limits`   | `z1..zd, l, g, d, zg1..zgd`               |
//!
//! Rays are numbered from 1. Empty cells mean "undefined": a censored `d_y`,
//! an immediate return, or the modulus at or below the threshold.

use std::io::{self, Write};

use intermit_core::bessel::DiffusionPath;
use intermit_core::limits::LimitSample;
use intermit_core::occupation::OccupationRecord;
use intermit_core::return_map::ExcursionTrace;

fn numbered(prefix: &str, d: usize) -> String {
    (1..=d).map(|j| format!("{prefix}{j}")).collect::<Vec<_>>().join(",")
}

pub fn map_header(d: usize) -> String {
    format!("t,{},s_y,g_y,d_y", numbered("s_a", d))
}

pub fn write_map_path<W: Write>(mut w: W, rec: &OccupationRecord) -> io::Result<()> {
    writeln!(w, "{}", map_header(rec.d))?;
    for i in 0..rec.times.len() {
        write!(w, "{}", rec.times[i])?;
        for c in &rec.s_a[i] {
            write!(w, ",{c}")?;
        }
        let d_y = rec.d_y[i].value().map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, ",{},{},{d_y}", rec.s_y[i], rec.g_y[i])?;
    }
    Ok(())
}

pub const EXCURSION_HEADER: &str = "k,phi,ray,steps";

pub fn write_excursions<W: Write>(mut w: W, trace: &ExcursionTrace) -> io::Result<()> {
    writeln!(w, "{EXCURSION_HEADER}")?;
    for (k, rec) in trace.records().iter().enumerate() {
        let ray = rec.ray.map(|j| (j + 1).to_string()).unwrap_or_default();
        writeln!(w, "{k},{},{ray},{}", rec.phi(), rec.steps)?;
    }
    Ok(())
}

pub const BESSEL_HEADER: &str = "t,modulus,ray,L";

pub fn write_bessel_path<W: Write>(mut w: W, path: &DiffusionPath) -> io::Result<()> {
    writeln!(w, "{BESSEL_HEADER}")?;
    let local = path.local_time();
    for (k, (&r, &l)) in path.values.iter().zip(&local).enumerate() {
        let ray = path.ray_at(k).map(|j| (j + 1).to_string()).unwrap_or_default();
        writeln!(w, "{},{r},{ray},{l}", k as f64 * path.dt)?;
    }
    Ok(())
}

pub fn limits_header(d: usize) -> String {
    format!("{},l,g,d,{}", numbered("z", d), numbered("zg", d))
}

pub fn write_limit_samples<W: Write>(mut w: W, d: usize, samples: &[LimitSample]) -> io::Result<()> {
    writeln!(w, "{}", limits_header(d))?;
    for s in samples {
        for z in &s.z {
            write!(w, "{z},")?;
        }
        write!(w, "{},{},{}", s.l, s.g, s.dv)?;
        for z in &s.zg {
            write!(w, ",{z}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
