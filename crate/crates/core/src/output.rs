//! CSV writers and the raw per-trajectory dump reader.

use std::io::{BufRead, Write};

use crate::analysis::SqueezingCurve;
use crate::couplings::{SpinCouplings, TimeScale};
use crate::dtwa::{CollectiveSample, EnsembleMoments, Group, Trajectory};
use crate::{Error, Result};

pub const CURVE_HEADER: &str = "t,Sx_mean,Sx_err,var_min,var_max,theta_min,xi2,xi2_err";
pub const RAW_HEADER: &str = "traj,step,t,n_a,n_b,ax,ay,az,bx,by,bz";

/// Squeezing curve; spin length and variances are normalized to the
/// coherent-state values.
pub fn write_curve<W: Write>(curve: &SqueezingCurve, mut w: W) -> Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for p in &curve.points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            p.t, p.spin_length, p.spin_length_err, p.var_min, p.var_max, p.theta_min, p.xi2, p.xi2_err
        )?;
    }
    Ok(())
}

/// Parses a curve file written by [`write_curve`] into rows of numbers.
pub fn read_curve<R: BufRead>(r: R) -> Result<Vec<[f64; 8]>> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != CURVE_HEADER {
                return Err(Error::config("unexpected curve header"));
            }
            continue;
        }
        let mut row = [0.0; 8];
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::config(format!("curve line {}: expected 8 fields", i + 1)));
        }
        for (slot, f) in row.iter_mut().zip(fields) {
            *slot = f
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("curve line {}: bad number '{f}'", i + 1)))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Per-time moments of every group (unnormalized).
pub fn write_moments<W: Write>(m: &EnsembleMoments, mut w: W) -> Result<()> {
    writeln!(w, "t,group,mean_x,mean_y,mean_z,var_y,var_z,cov_yz,se_x,se_y,se_z")?;
    for (ti, &t) in m.times.iter().enumerate() {
        let s = m.summary(ti);
        for (name, g) in [("full", Group::Full), ("a", Group::A), ("b", Group::B), ("diff", Group::Diff)] {
            let mean = s.mean(g);
            let (vyy, vzz, cyz) = s.yz(g);
            writeln!(
                w,
                "{t},{name},{},{},{},{vyy},{vzz},{cyz},{},{},{}",
                mean[0],
                mean[1],
                mean[2],
                s.std_error(g, 0),
                s.std_error(g, 1),
                s.std_error(g, 2)
            )?;
        }
    }
    Ok(())
}

/// Raw dump; the first line records the lattice size.
pub fn write_raw<W: Write>(trajectories: &[Trajectory], times: &[f64], n_sites: usize, mut w: W) -> Result<()> {
    writeln!(w, "# n_sites={n_sites}")?;
    writeln!(w, "{RAW_HEADER}")?;
    for tr in trajectories {
        for (step, (s, t)) in tr.samples.iter().zip(times).enumerate() {
            writeln!(
                w,
                "{},{step},{t},{},{},{},{},{},{},{},{}",
                tr.index, s.n_a, s.n_b, s.a[0], s.a[1], s.a[2], s.b[0], s.b[1], s.b[2]
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RawDump {
    pub n_sites: usize,
    pub times: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
}

impl RawDump {
    pub fn n_atoms(&self) -> usize {
        self.trajectories
            .first()
            .and_then(|t| t.samples.first())
            .map(|s| (s.n_a + s.n_b) as usize)
            .unwrap_or(0)
    }
}

pub fn read_raw<R: BufRead>(r: R) -> Result<RawDump> {
    let bad = |line: usize, what: &str| Error::config(format!("raw dump line {line}: {what}"));
    let mut lines = r.lines().enumerate();
    let n_sites = match lines.next() {
        Some((_, l)) => l?
            .trim()
            .strip_prefix("# n_sites=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(1, "missing '# n_sites=' preamble"))?,
        None => return Err(Error::config("empty raw dump")),
    };
    let header = match lines.next() {
        Some((_, l)) => l?,
        None => String::new(),
    };
    if header.trim() != RAW_HEADER {
        return Err(bad(2, "unexpected header"));
    }
    let mut trajectories: Vec<Trajectory> = Vec::new();
    let mut times = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(bad(i + 1, "expected 11 fields"));
        }
        let num = |k: usize| -> Result<f64> { f[k].trim().parse().map_err(|_| bad(i + 1, "bad number")) };
        let int = |k: usize| -> Result<u64> { f[k].trim().parse().map_err(|_| bad(i + 1, "bad integer")) };
        let (traj, step) = (int(0)?, int(1)? as usize);
        let sample = CollectiveSample {
            a: [num(5)?, num(6)?, num(7)?],
            b: [num(8)?, num(9)?, num(10)?],
            n_a: int(3)? as u32,
            n_b: int(4)? as u32,
        };
        if step == 0 {
            trajectories.push(Trajectory {
                index: traj,
                samples: Vec::new(),
            });
        }
        if trajectories.len() == 1 {
            times.push(num(2)?);
        }
        let cur = trajectories.last_mut().ok_or_else(|| bad(i + 1, "trajectory must start at step 0"))?;
        if cur.index != traj || cur.samples.len() != step {
            return Err(bad(i + 1, "rows out of order"));
        }
        cur.samples.push(sample);
    }
    Ok(RawDump {
        n_sites,
        times,
        trajectories,
    })
}

/// One-record coupling summary.
pub fn write_params<W: Write>(sim: &SpinCouplings, raw: Option<&SpinCouplings>, scale: Option<&TimeScale>, mut w: W) -> Result<()> {
    writeln!(w, "J_hz,Jz_hz,hz_hz,delta,hz_over_j,t_over_j,time_unit_s")?;
    let (j, jz, hz) = raw.map(|r| (r.j, r.jz, r.hz)).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    let unit = scale.map(|s| s.seconds_per_unit).unwrap_or(f64::NAN);
    writeln!(
        w,
        "{j},{jz},{hz},{},{},{},{unit}",
        sim.delta, sim.hz_over_j, sim.t_over_j
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::SqueezingPoint;

    #[test]
    fn raw_round_trip() {
        let s = |k: f64| CollectiveSample {
            a: [k, 0.5, -0.25],
            b: [0.125, k, 1e-17],
            n_a: 5,
            n_b: 4,
        };
        let trs = vec![
            Trajectory {
                index: 0,
                samples: vec![s(1.0), s(2.0)],
            },
            Trajectory {
                index: 1,
                samples: vec![s(3.0), s(0.1)],
            },
        ];
        let mut buf = Vec::new();
        write_raw(&trs, &[0.0, 0.1], 10, &mut buf).unwrap();
        let d = read_raw(buf.as_slice()).unwrap();
        assert_eq!(d.n_sites, 10);
        assert_eq!(d.times, vec![0.0, 0.1]);
        assert_eq!(d.trajectories, trs);
        assert_eq!(d.n_atoms(), 9);
        assert!(read_raw(&b"traj\n"[..]).is_err());
    }

    #[test]
    fn curve_round_trip() {
        let p = SqueezingPoint {
            t: 0.5,
            spin_length: 0.9,
            spin_length_err: 0.01,
            var_min: 0.5,
            var_min_err: 0.02,
            var_max: 3.0,
            theta_min: 0.1,
            xi2: 0.6,
            xi2_err: f64::NAN,
        };
        let mut buf = Vec::new();
        write_curve(&SqueezingCurve { points: vec![p] }, &mut buf).unwrap();
        let rows = read_curve(buf.as_slice()).unwrap();
        assert_eq!(rows[0][..7], [0.5, 0.9, 0.01, 0.5, 3.0, 0.1, 0.6]);
        assert!(rows[0][7].is_nan());
    }
}
