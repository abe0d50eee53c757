//! Scenario execution behind the command line tool.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{
    curve_from_moments, inject_phase_noise, theta_grid, CurveOptions, SpinShot, SqueezingCurve, ThetaMode,
};
use crate::config::{CouplingSource, RunConfig, Scenario};
use crate::couplings::{derive_couplings, to_sim_units};
use crate::dtwa::{run_ensemble, run_trajectory, CollectiveSample, EnsembleMoments, Trajectory};
use crate::ed::oracle_curves;
use crate::imaging::pipeline::{residual_check, run_end_to_end, ImagingSetup};
use crate::imaging::{render_frame, write_raster};
use crate::output;
use crate::rng::auxiliary;
use crate::{Error, Result};

/// Stream tag for analysis-time noise injection.
const NOISE_TAG: u64 = 7 << 40;

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    Ok((path.clone(), BufWriter::new(File::create(path)?)))
}

fn curve_options(cfg: &RunConfig) -> CurveOptions {
    CurveOptions {
        source: cfg.analyze.source,
        frame: cfg.analyze.frame,
        theta: match cfg.analyze.theta_grid {
            0 => ThetaMode::ClosedForm,
            n => ThetaMode::Grid(theta_grid(n)),
        },
    }
}

fn strip_errors(mut curve: SqueezingCurve) -> SqueezingCurve {
    for p in &mut curve.points {
        p.var_min_err = f64::NAN;
        p.xi2_err = f64::NAN;
    }
    curve
}

/// Runs the configured scenario and returns the files written.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::numeric(format!("thread pool: {e}")))?;
        pool.install(|| run_inner(cfg))
    } else {
        run_inner(cfg)
    }
}

fn run_inner(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out_dir)?;
    let dir = cfg.out_dir.as_path();
    let mut files = Vec::new();
    match cfg.scenario {
        Scenario::Params => {
            let (path, mut w) = create(dir, "params.csv")?;
            match cfg.coupling_source {
                CouplingSource::Hubbard => {
                    let raw = derive_couplings(&cfg.hubbard)?;
                    let (sim, scale) = to_sim_units(&raw, raw.j.abs())?;
                    output::write_params(&sim, Some(&raw), Some(&scale), &mut w)?;
                }
                CouplingSource::Sim => output::write_params(&cfg.couplings()?, None, None, &mut w)?,
            }
            w.flush()?;
            files.push(path);
        }
        Scenario::Oracle => {
            let times: Vec<f64> = (0..=cfg.engine.n_steps).map(|k| k as f64 * cfg.engine.dt).collect();
            let curve = oracle_curves(&cfg.geometry()?, &cfg.couplings()?, &times, &curve_options(cfg).theta)?;
            let (path, mut w) = create(dir, "oracle_curve.csv")?;
            output::write_curve(&curve, &mut w)?;
            w.flush()?;
            files.push(path);
        }
        Scenario::Dtwa => {
            let geom = cfg.geometry()?;
            let couplings = cfg.couplings()?;
            let engine = cfg.engine_config()?;
            let moments = if cfg.raw_dump {
                let trajectories: Vec<Trajectory> = (0..cfg.trajectories as u64)
                    .into_par_iter()
                    .map(|i| run_trajectory(&geom, &couplings, &engine, i))
                    .collect();
                let times: Vec<f64> = (0..=engine.n_steps).map(|k| k as f64 * engine.dt).collect();
                let (path, mut w) = create(dir, "dtwa_raw.csv")?;
                output::write_raw(&trajectories, &times, geom.n_sites(), &mut w)?;
                w.flush()?;
                files.push(path);
                let n_atoms = trajectories[0].samples[0].n_a + trajectories[0].samples[0].n_b;
                EnsembleMoments::from_trajectories(&trajectories, times, geom.n_sites(), n_atoms as usize)?
            } else {
                run_ensemble(&geom, &couplings, &engine, cfg.trajectories)?
            };
            files.extend(write_curve_files(cfg, &moments, "dtwa")?);
        }
        Scenario::Analyze => {
            let input = cfg.analyze.input.as_ref().expect("validated");
            let dump = output::read_raw(BufReader::new(File::open(input)?))?;
            let mut trajectories = dump.trajectories.clone();
            if let Some(mode) = cfg.analyze.noise {
                trajectories.par_iter_mut().for_each(|tr| {
                    let mut rng = auxiliary(cfg.seed, NOISE_TAG | tr.index);
                    let shots: Vec<SpinShot> = tr
                        .samples
                        .iter()
                        .zip(&dump.times)
                        .map(|(s, &t)| SpinShot::from_sample(t, s))
                        .collect();
                    let noisy = inject_phase_noise(&shots, cfg.analyze.noise_rms, mode, cfg.analyze.echo, &mut rng)
                        .expect("rms validated");
                    for (s, n) in tr.samples.iter_mut().zip(noisy) {
                        *s = CollectiveSample {
                            a: n.a,
                            b: n.b,
                            ..*s
                        };
                    }
                });
            }
            let moments = EnsembleMoments::from_trajectories(&trajectories, dump.times.clone(), dump.n_sites, dump.n_atoms())?;
            files.extend(write_curve_files(cfg, &moments, "analyze")?);
        }
        Scenario::ImagingDemo => {
            let geom = cfg.geometry()?;
            let couplings = cfg.couplings()?;
            let engine = cfg.engine_config()?;
            let setup = ImagingSetup::build(&cfg.imaging, cfg.seed)?;
            let residual = residual_check(&setup, &setup.fringe, 20, cfg.seed)?;
            let (report, rows) = run_end_to_end(&geom, &couplings, &engine, &setup)?;

            let (path, mut w) = create(dir, "imaging_summary.csv")?;
            writeln!(w, "quantity,value")?;
            for (k, v) in [
                ("pca_components", setup.basis.components.len() as f64),
                ("residual_rms_outside", residual.outside_rel_rms),
                ("residual_rms_inside", residual.inside_rel_rms),
                ("shot_noise_floor", residual.shot_noise_floor),
                ("shots", report.shots as f64),
                ("n_true", report.n_true),
                ("n_est", report.n_est),
                ("injected", report.injected),
                ("injected_err", report.injected_err),
                ("recovered", report.recovered),
                ("recovered_err", report.recovered_err),
                ("difference_err", report.diff_err),
                ("photon_noise_sql", report.photon_noise),
            ] {
                writeln!(w, "{k},{v}")?;
            }
            w.flush()?;
            files.push(path);

            let (path, mut w) = create(dir, "imaging_shots.csv")?;
            writeln!(w, "shot,true_a,true_b,atoms_a,atoms_b,empty_a,empty_b")?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    r.index, r.truth.s_a, r.truth.s_b, r.atoms.s_a, r.atoms.s_b, r.empty.s_a, r.empty.s_b
                )?;
            }
            w.flush()?;
            files.push(path);

            let example = render_frame(
                &setup.empty_cloud(),
                &setup.fringe,
                cfg.imaging.photons,
                cfg.imaging.blur_fwhm,
                &mut auxiliary(cfg.seed, 8 << 40),
            )?;
            let (path, mut w) = create(dir, "frame_example.bin")?;
            write_raster(&example, &mut w)?;
            w.flush()?;
            files.push(path);
        }
    }
    Ok(files)
}

fn write_curve_files(cfg: &RunConfig, moments: &EnsembleMoments, stem: &str) -> Result<Vec<PathBuf>> {
    let dir = cfg.out_dir.as_path();
    let mut curve = curve_from_moments(moments, &curve_options(cfg));
    if !cfg.analyze.jackknife {
        curve = strip_errors(curve);
    }
    let (cpath, mut w) = create(dir, &format!("{stem}_curve.csv"))?;
    output::write_curve(&curve, &mut w)?;
    w.flush()?;
    let (mpath, mut w) = create(dir, &format!("{stem}_moments.csv"))?;
    output::write_moments(moments, &mut w)?;
    w.flush()?;
    Ok(vec![cpath, mpath])
}
