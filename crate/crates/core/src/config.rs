//! Run configuration: a strict `key = value` format, environment overrides
//! and the named presets.
//!
//! Lines are `key = value`; `#` starts a comment. Every key below is
//! optional and unknown keys are rejected. Environment variables named
//! `XXZSQ_<KEY>` (key upper-cased, dots replaced by underscores) override the
//! file, e.g. `XXZSQ_ENGINE_DT=0.01`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::analysis::{MeasurementFrame, NoiseMode, VarianceSource};
use crate::couplings::{derive_couplings, HubbardParams, SpinCouplings};
use crate::dtwa::{EngineConfig, Preparation, RotateTarget};
use crate::lattice::LatticeGeometry;
use crate::{Error, Result};

pub const ENV_PREFIX: &str = "XXZSQ_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Params,
    Oracle,
    Dtwa,
    Analyze,
    ImagingDemo,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Params => "params",
            Scenario::Oracle => "oracle",
            Scenario::Dtwa => "dtwa",
            Scenario::Analyze => "analyze",
            Scenario::ImagingDemo => "imaging-demo",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "params" => Scenario::Params,
            "oracle" => Scenario::Oracle,
            "dtwa" => Scenario::Dtwa,
            "analyze" => Scenario::Analyze,
            "imaging-demo" => Scenario::ImagingDemo,
            _ => return Err(Error::config(format!("unknown scenario '{s}'"))),
        })
    }
}

/// Where the spin couplings come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingSource {
    /// `couplings.*` given directly in units of `J`.
    Sim,
    /// Derived from `hubbard.*` through the superexchange map.
    Hubbard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeSpec {
    pub input: Option<PathBuf>,
    /// Number of θ grid points; 0 selects the closed-form extrema.
    pub theta_grid: usize,
    pub jackknife: bool,
    pub source: VarianceSource,
    pub frame: MeasurementFrame,
    pub noise: Option<NoiseMode>,
    pub noise_rms: f64,
    pub echo: bool,
}

impl Default for AnalyzeSpec {
    fn default() -> Self {
        AnalyzeSpec {
            input: None,
            theta_grid: 0,
            jackknife: true,
            source: VarianceSource::Full,
            frame: MeasurementFrame::MeanSpin,
            noise: None,
            noise_rms: 0.1,
            echo: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagingSpec {
    pub size: usize,
    pub photons: f64,
    pub fringe_modes: usize,
    pub fringe_amplitude: f64,
    pub fringe_drift: f64,
    pub intensity_jitter: f64,
    pub pool: usize,
    pub components: usize,
    /// Gaussian blur FWHM in pixels; 0 disables blur.
    pub blur_fwhm: f64,
    pub roi_radius: f64,
    pub gap: f64,
    pub detuning: f64,
    pub cross_section: f64,
    pub shots: usize,
    /// Pixels per lattice site along each image axis.
    pub site_pixels: usize,
    /// Readout rotation angle.
    pub theta: f64,
}

impl Default for ImagingSpec {
    fn default() -> Self {
        ImagingSpec {
            size: 64,
            photons: 5000.0,
            fringe_modes: 20,
            fringe_amplitude: 0.03,
            fringe_drift: 0.3,
            intensity_jitter: 0.02,
            pool: 400,
            components: 300,
            blur_fwhm: 5.0,
            roi_radius: 14.0,
            gap: 2.0,
            detuning: 1.0,
            cross_section: 0.125,
            shots: 500,
            site_pixels: 2,
            theta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default. Never affects results.
    pub threads: usize,
    pub dims: Vec<usize>,
    pub periodic: bool,
    pub coupling_source: CouplingSource,
    pub delta: f64,
    pub hz_over_j: f64,
    pub t_over_j: f64,
    pub hubbard: HubbardParams,
    pub engine: EngineConfig,
    pub trajectories: usize,
    pub out_dir: PathBuf,
    pub raw_dump: bool,
    pub analyze: AnalyzeSpec,
    pub imaging: ImagingSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: Scenario::Dtwa,
            seed: 1,
            threads: 0,
            dims: vec![10],
            periodic: false,
            coupling_source: CouplingSource::Sim,
            delta: -0.18,
            hz_over_j: -1.1,
            t_over_j: 0.0,
            hubbard: HubbardParams {
                t_tunnel: 1.0,
                u_uu: 1.0,
                u_dd: 1.0,
                u_ud: 1.0,
            },
            engine: EngineConfig::default(),
            trajectories: 1000,
            out_dir: PathBuf::from("out"),
            raw_dump: false,
            analyze: AnalyzeSpec::default(),
            imaging: ImagingSpec::default(),
        }
    }
}

/// All recognised keys in serialization order.
pub const KEYS: &[&str] = &[
    "scenario",
    "seed",
    "threads",
    "lattice.dims",
    "lattice.periodic",
    "couplings.source",
    "couplings.delta",
    "couplings.hz",
    "couplings.t_over_j",
    "hubbard.t",
    "hubbard.u_uu",
    "hubbard.u_dd",
    "hubbard.u_ud",
    "engine.dt",
    "engine.steps",
    "engine.hole_density",
    "engine.hopping",
    "engine.double_hop",
    "engine.hz_field",
    "engine.spin_flip",
    "engine.echo",
    "engine.alpha",
    "engine.double_hop_rate",
    "engine.rotate_target",
    "engine.preparation",
    "ensemble.trajectories",
    "output.dir",
    "output.raw",
    "analyze.input",
    "analyze.theta_grid",
    "analyze.jackknife",
    "analyze.source",
    "analyze.frame",
    "analyze.noise",
    "analyze.noise_rms",
    "analyze.echo",
    "imaging.size",
    "imaging.photons",
    "imaging.fringe_modes",
    "imaging.fringe_amplitude",
    "imaging.fringe_drift",
    "imaging.intensity_jitter",
    "imaging.pool",
    "imaging.components",
    "imaging.blur_fwhm",
    "imaging.roi_radius",
    "imaging.gap",
    "imaging.detuning",
    "imaging.cross_section",
    "imaging.shots",
    "imaging.site_pixels",
    "imaging.theta",
];

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(format!("invalid value '{v}' for {key}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(Error::config(format!("invalid boolean '{v}' for {key}"))),
    }
}

fn fmt_bool(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_uppercase().replace('.', "_"))
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "scenario" => self.scenario = v.parse()?,
            "seed" => self.seed = parse_num(key, v)?,
            "threads" => self.threads = parse_num(key, v)?,
            "lattice.dims" => {
                self.dims = v
                    .split(',')
                    .map(|d| parse_num(key, d.trim()))
                    .collect::<Result<_>>()?
            }
            "lattice.periodic" => self.periodic = parse_bool(key, v)?,
            "couplings.source" => {
                self.coupling_source = match v {
                    "sim" => CouplingSource::Sim,
                    "hubbard" => CouplingSource::Hubbard,
                    _ => return Err(Error::config(format!("invalid value '{v}' for {key}"))),
                }
            }
            "couplings.delta" => self.delta = parse_num(key, v)?,
            "couplings.hz" => self.hz_over_j = parse_num(key, v)?,
            "couplings.t_over_j" => self.t_over_j = parse_num(key, v)?,
            "hubbard.t" => self.hubbard.t_tunnel = parse_num(key, v)?,
            "hubbard.u_uu" => self.hubbard.u_uu = parse_num(key, v)?,
            "hubbard.u_dd" => self.hubbard.u_dd = parse_num(key, v)?,
            "hubbard.u_ud" => self.hubbard.u_ud = parse_num(key, v)?,
            "engine.dt" => self.engine.dt = parse_num(key, v)?,
            "engine.steps" => self.engine.n_steps = parse_num(key, v)?,
            "engine.hole_density" => self.engine.hole_density = parse_num(key, v)?,
            "engine.hopping" => self.engine.enable_hopping = parse_bool(key, v)?,
            "engine.double_hop" => self.engine.enable_double_hop = parse_bool(key, v)?,
            "engine.hz_field" => self.engine.enable_hz_field = parse_bool(key, v)?,
            "engine.spin_flip" => self.engine.enable_spin_flip = parse_bool(key, v)?,
            "engine.echo" => self.engine.echo = parse_bool(key, v)?,
            "engine.alpha" => self.engine.alpha = parse_num(key, v)?,
            "engine.double_hop_rate" => {
                self.engine.double_hop_rate = match v {
                    "auto" => None,
                    _ => Some(parse_num(key, v)?),
                }
            }
            "engine.rotate_target" => {
                self.engine.rotate_target = match v {
                    "moved" => RotateTarget::MovedSpin,
                    "intermediate" => RotateTarget::IntermediateSite,
                    _ => return Err(Error::config(format!("invalid value '{v}' for {key}"))),
                }
            }
            "engine.preparation" => {
                self.engine.preparation = match v {
                    "direct" => Preparation::DirectX,
                    "pulse" => Preparation::PulseFromZ,
                    _ => return Err(Error::config(format!("invalid value '{v}' for {key}"))),
                }
            }
            "ensemble.trajectories" => self.trajectories = parse_num(key, v)?,
            "output.dir" => self.out_dir = PathBuf::from(v),
            "output.raw" => self.raw_dump = parse_bool(key, v)?,
            "analyze.input" => {
                self.analyze.input = if v.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            "analyze.theta_grid" => self.analyze.theta_grid = parse_num(key, v)?,
            "analyze.jackknife" => self.analyze.jackknife = parse_bool(key, v)?,
            "analyze.source" => {
                self.analyze.source = match v {
                    "full" => VarianceSource::Full,
                    "diff" => VarianceSource::Difference,
                    _ => return Err(Error::config(format!("invalid value '{v}' for {key}"))),
                }
            }
            "analyze.frame" => {
                self.analyze.frame = match v {
                    "lab" => MeasurementFrame::Lab,
                    "mean-spin" => MeasurementFrame::MeanSpin,
                    _ => return Err(Error::config(format!("invalid value '{v}' for {key}"))),
                }
            }
            "analyze.noise" => {
                self.analyze.noise = match v {
                    "none" => None,
                    "quasi-static" => Some(NoiseMode::QuasiStatic),
                    "fast" => Some(NoiseMode::Fast),
                    _ => return Err(Error::config(format!("invalid value '{v}' for {key}"))),
                }
            }
            "analyze.noise_rms" => self.analyze.noise_rms = parse_num(key, v)?,
            "analyze.echo" => self.analyze.echo = parse_bool(key, v)?,
            "imaging.size" => self.imaging.size = parse_num(key, v)?,
            "imaging.photons" => self.imaging.photons = parse_num(key, v)?,
            "imaging.fringe_modes" => self.imaging.fringe_modes = parse_num(key, v)?,
            "imaging.fringe_amplitude" => self.imaging.fringe_amplitude = parse_num(key, v)?,
            "imaging.fringe_drift" => self.imaging.fringe_drift = parse_num(key, v)?,
            "imaging.intensity_jitter" => self.imaging.intensity_jitter = parse_num(key, v)?,
            "imaging.pool" => self.imaging.pool = parse_num(key, v)?,
            "imaging.components" => self.imaging.components = parse_num(key, v)?,
            "imaging.blur_fwhm" => self.imaging.blur_fwhm = parse_num(key, v)?,
            "imaging.roi_radius" => self.imaging.roi_radius = parse_num(key, v)?,
            "imaging.gap" => self.imaging.gap = parse_num(key, v)?,
            "imaging.detuning" => self.imaging.detuning = parse_num(key, v)?,
            "imaging.cross_section" => self.imaging.cross_section = parse_num(key, v)?,
            "imaging.shots" => self.imaging.shots = parse_num(key, v)?,
            "imaging.site_pixels" => self.imaging.site_pixels = parse_num(key, v)?,
            "imaging.theta" => self.imaging.theta = parse_num(key, v)?,
            _ => return Err(Error::config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        let e = &self.engine;
        let im = &self.imaging;
        match key {
            "scenario" => self.scenario.name().into(),
            "seed" => self.seed.to_string(),
            "threads" => self.threads.to_string(),
            "lattice.dims" => self
                .dims
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(","),
            "lattice.periodic" => fmt_bool(self.periodic).into(),
            "couplings.source" => match self.coupling_source {
                CouplingSource::Sim => "sim".into(),
                CouplingSource::Hubbard => "hubbard".into(),
            },
            "couplings.delta" => self.delta.to_string(),
            "couplings.hz" => self.hz_over_j.to_string(),
            "couplings.t_over_j" => self.t_over_j.to_string(),
            "hubbard.t" => self.hubbard.t_tunnel.to_string(),
            "hubbard.u_uu" => self.hubbard.u_uu.to_string(),
            "hubbard.u_dd" => self.hubbard.u_dd.to_string(),
            "hubbard.u_ud" => self.hubbard.u_ud.to_string(),
            "engine.dt" => e.dt.to_string(),
            "engine.steps" => e.n_steps.to_string(),
            "engine.hole_density" => e.hole_density.to_string(),
            "engine.hopping" => fmt_bool(e.enable_hopping).into(),
            "engine.double_hop" => fmt_bool(e.enable_double_hop).into(),
            "engine.hz_field" => fmt_bool(e.enable_hz_field).into(),
            "engine.spin_flip" => fmt_bool(e.enable_spin_flip).into(),
            "engine.echo" => fmt_bool(e.echo).into(),
            "engine.alpha" => e.alpha.to_string(),
            "engine.double_hop_rate" => match e.double_hop_rate {
                None => "auto".into(),
                Some(r) => r.to_string(),
            },
            "engine.rotate_target" => match e.rotate_target {
                RotateTarget::MovedSpin => "moved".into(),
                RotateTarget::IntermediateSite => "intermediate".into(),
            },
            "engine.preparation" => match e.preparation {
                Preparation::DirectX => "direct".into(),
                Preparation::PulseFromZ => "pulse".into(),
            },
            "ensemble.trajectories" => self.trajectories.to_string(),
            "output.dir" => self.out_dir.display().to_string(),
            "output.raw" => fmt_bool(self.raw_dump).into(),
            "analyze.input" => self
                .analyze
                .input
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "analyze.theta_grid" => self.analyze.theta_grid.to_string(),
            "analyze.jackknife" => fmt_bool(self.analyze.jackknife).into(),
            "analyze.source" => match self.analyze.source {
                VarianceSource::Full => "full".into(),
                VarianceSource::Difference => "diff".into(),
            },
            "analyze.frame" => match self.analyze.frame {
                MeasurementFrame::Lab => "lab".into(),
                MeasurementFrame::MeanSpin => "mean-spin".into(),
            },
            "analyze.noise" => match self.analyze.noise {
                None => "none".into(),
                Some(NoiseMode::QuasiStatic) => "quasi-static".into(),
                Some(NoiseMode::Fast) => "fast".into(),
            },
            "analyze.noise_rms" => self.analyze.noise_rms.to_string(),
            "analyze.echo" => fmt_bool(self.analyze.echo).into(),
            "imaging.size" => im.size.to_string(),
            "imaging.photons" => im.photons.to_string(),
            "imaging.fringe_modes" => im.fringe_modes.to_string(),
            "imaging.fringe_amplitude" => im.fringe_amplitude.to_string(),
            "imaging.fringe_drift" => im.fringe_drift.to_string(),
            "imaging.intensity_jitter" => im.intensity_jitter.to_string(),
            "imaging.pool" => im.pool.to_string(),
            "imaging.components" => im.components.to_string(),
            "imaging.blur_fwhm" => im.blur_fwhm.to_string(),
            "imaging.roi_radius" => im.roi_radius.to_string(),
            "imaging.gap" => im.gap.to_string(),
            "imaging.detuning" => im.detuning.to_string(),
            "imaging.cross_section" => im.cross_section.to_string(),
            "imaging.shots" => im.shots.to_string(),
            "imaging.site_pixels" => im.site_pixels.to_string(),
            "imaging.theta" => im.theta.to_string(),
            _ => unreachable!("unlisted key {key}"),
        }
    }

    /// Parses a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Applies assignments from `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let k = k.trim();
            if seen.insert(k.to_string(), ()).is_some() {
                return Err(Error::config(format!("line {}: duplicate key '{k}'", lineno + 1)));
            }
            self.set(k, v)
                .map_err(|e| Error::config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Applies `XXZSQ_*` overrides found through `lookup`.
    pub fn apply_env<F: Fn(&str) -> Option<String>>(&mut self, lookup: F) -> Result<()> {
        for key in KEYS {
            if let Some(v) = lookup(&env_name(key)) {
                self.set(key, &v)
                    .map_err(|e| Error::config(format!("{}: {e}", env_name(key))))?;
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key));
        }
        out
    }

    pub fn dims3(&self) -> Result<[usize; 3]> {
        if self.dims.is_empty() || self.dims.len() > 3 {
            return Err(Error::config("lattice.dims needs one to three extents"));
        }
        let mut d = [1; 3];
        d[..self.dims.len()].copy_from_slice(&self.dims);
        Ok(d)
    }

    pub fn geometry(&self) -> Result<LatticeGeometry> {
        LatticeGeometry::build(self.dims3()?, self.periodic)
    }

    /// Couplings in simulation units (`J = 1`).
    pub fn couplings(&self) -> Result<SpinCouplings> {
        match self.coupling_source {
            CouplingSource::Sim => Ok(SpinCouplings::sim(self.delta, self.hz_over_j, self.t_over_j)),
            CouplingSource::Hubbard => {
                let raw = derive_couplings(&self.hubbard)?;
                let (sim, _) = crate::couplings::to_sim_units(&raw, raw.j.abs())?;
                Ok(sim)
            }
        }
    }

    /// Engine configuration with the seed and hop rate filled in.
    pub fn engine_config(&self) -> Result<EngineConfig> {
        let mut e = self.engine.clone();
        e.seed = self.seed;
        e.hop_rate = self.couplings()?.t_over_j;
        Ok(e)
    }

    /// Checks cross-field preconditions without running anything.
    pub fn validate(&self) -> Result<()> {
        match self.scenario {
            Scenario::Params => {
                self.hubbard.validate()?;
            }
            Scenario::Oracle => {
                let g = self.geometry()?;
                if g.n_sites() > crate::ed::MAX_SITES {
                    return Err(Error::domain(format!(
                        "oracle supports at most {} sites",
                        crate::ed::MAX_SITES
                    )));
                }
                self.couplings()?;
                if !(self.engine.dt > 0.0) {
                    return Err(Error::domain("dt must be positive"));
                }
            }
            Scenario::Dtwa => {
                let g = self.geometry()?;
                self.engine_config()?.validate(&g)?;
                if self.trajectories < 2 {
                    return Err(Error::domain("need at least two trajectories"));
                }
            }
            Scenario::Analyze => {
                match &self.analyze.input {
                    None => return Err(Error::config("analyze.input is required")),
                    Some(p) if !p.is_file() => {
                        return Err(Error::config(format!("analyze.input {} does not exist", p.display())))
                    }
                    Some(_) => {}
                }
                if !(self.analyze.noise_rms >= 0.0) {
                    return Err(Error::domain("noise rms must be non-negative"));
                }
            }
            Scenario::ImagingDemo => {
                let g = self.geometry()?;
                self.engine_config()?.validate(&g)?;
                let im = &self.imaging;
                if im.pool < im.components {
                    return Err(Error::domain("PCA pool smaller than the component count"));
                }
                if im.shots < 3 {
                    return Err(Error::domain("imaging demo needs at least 3 shots"));
                }
                if !(im.photons > 0.0) {
                    return Err(Error::domain("photons per pixel must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Hole tunneling `t/J` used by the 3D presets (`t = 160 Hz`, `J = 27 Hz`).
pub const T_OVER_J_3D: f64 = 160.0 / 27.0;

fn paper_1d() -> RunConfig {
    RunConfig {
        scenario: Scenario::Dtwa,
        dims: vec![32],
        t_over_j: 4.2,
        engine: EngineConfig {
            dt: 0.0172,
            n_steps: 200,
            ..EngineConfig::default()
        },
        trajectories: 3000,
        ..RunConfig::default()
    }
}

fn paper_3d() -> RunConfig {
    RunConfig {
        scenario: Scenario::Dtwa,
        dims: vec![22, 22, 22],
        t_over_j: T_OVER_J_3D,
        engine: EngineConfig {
            dt: 0.0176,
            n_steps: 200,
            ..EngineConfig::default()
        },
        trajectories: 3000,
        ..RunConfig::default()
    }
}

fn with_holes(mut c: RunConfig, rho: f64, hz: bool, flip: bool) -> RunConfig {
    c.engine.hole_density = rho;
    c.engine.enable_hopping = true;
    c.engine.enable_double_hop = true;
    c.engine.enable_hz_field = hz;
    c.engine.enable_spin_flip = flip;
    c
}

fn hubbard_params(t: f64, u_ud: f64, ratio_uu: f64, ratio_dd: f64) -> RunConfig {
    RunConfig {
        scenario: Scenario::Params,
        coupling_source: CouplingSource::Hubbard,
        hubbard: HubbardParams {
            t_tunnel: t,
            u_uu: u_ud / ratio_uu,
            u_dd: u_ud / ratio_dd,
            u_ud,
        },
        ..RunConfig::default()
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "paper-1d-ideal",
    "paper-1d-holes",
    "paper-3d-ideal",
    "paper-3d-holes",
    "shuffle-only",
    "hz-only",
    "flip-only",
    "oracle-chain-10",
    "symmetric-u",
    "paper-params-1d",
    "imaging-demo",
];

/// Named scenario presets.
pub fn preset(name: &str) -> Result<RunConfig> {
    Ok(match name {
        "paper-1d-ideal" => paper_1d(),
        "paper-1d-holes" => with_holes(paper_1d(), 0.05, true, true),
        "paper-3d-ideal" => paper_3d(),
        "paper-3d-holes" => with_holes(paper_3d(), 0.11, true, true),
        "shuffle-only" => with_holes(paper_3d(), 0.11, false, false),
        "hz-only" => with_holes(paper_3d(), 0.11, true, false),
        "flip-only" => with_holes(paper_3d(), 0.11, false, true),
        "oracle-chain-10" => RunConfig {
            scenario: Scenario::Oracle,
            dims: vec![10],
            engine: EngineConfig {
                dt: 0.02,
                n_steps: 100,
                ..EngineConfig::default()
            },
            ..RunConfig::default()
        },
        "symmetric-u" => hubbard_params(1.0, 10.0, 1.0, 1.0),
        // t = 160 Hz with U ratios 0.96 and -0.14 relative to U_ud, giving J = -38 Hz.
        "paper-params-1d" => hubbard_params(160.0, 4.0 * 160.0 * 160.0 / 38.0, 0.96, -0.14),
        "imaging-demo" => RunConfig {
            scenario: Scenario::ImagingDemo,
            dims: vec![10, 10, 10],
            engine: EngineConfig {
                dt: 0.02,
                n_steps: 15,
                ..EngineConfig::default()
            },
            imaging: ImagingSpec {
                blur_fwhm: 0.0,
                gap: 0.0,
                ..ImagingSpec::default()
            },
            ..RunConfig::default()
        },
        _ => {
            return Err(Error::config(format!(
                "unknown preset '{name}' (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn presets_round_trip() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            let text = c.serialize();
            let back = RunConfig::parse(&text).unwrap();
            assert_eq!(back, c, "{name}");
            assert_eq!(back.serialize(), text, "{name}");
        }
    }

    #[test]
    fn preset_catalog_values() {
        let c = preset("paper-1d-ideal").unwrap();
        assert_eq!(c.dims, vec![32]);
        assert_eq!(c.engine.hole_density, 0.0);
        assert_eq!(c.delta, -0.18);
        let h = preset("paper-3d-holes").unwrap();
        assert_eq!(h.dims, vec![22, 22, 22]);
        assert_eq!(h.engine.hole_density, 0.11);
        assert_eq!(h.hz_over_j, -1.1);
        assert_eq!(h.trajectories, 3000);
        assert!(h.engine.enable_hopping && h.engine.enable_double_hop);
        assert!(h.engine.enable_hz_field && h.engine.enable_spin_flip);
        let s = preset("shuffle-only").unwrap();
        assert!(!s.engine.enable_hz_field && !s.engine.enable_spin_flip);
        let i = preset("paper-3d-ideal").unwrap();
        assert_eq!((i.engine.dt, i.engine.n_steps), (0.0176, 200));
    }

    #[test]
    fn symmetric_u_maps_to_heisenberg() {
        let k = preset("symmetric-u").unwrap().couplings().unwrap();
        assert!((k.delta - 1.0).abs() < 1e-12);
        assert_eq!(k.hz_over_j, 0.0);
    }

    #[test]
    fn paper_params_map_to_operating_point() {
        let k = preset("paper-params-1d").unwrap().couplings().unwrap();
        assert!((k.delta + 0.18).abs() < 1e-9, "{}", k.delta);
        assert!((k.hz_over_j + 1.1).abs() < 1e-9, "{}", k.hz_over_j);
        assert!((k.t_over_j - 160.0 / 38.0).abs() < 1e-9);
    }

    #[test]
    fn strictness() {
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(RunConfig::parse("seed").is_err());
        assert!(RunConfig::parse("engine.echo = maybe").is_err());
        assert!(RunConfig::parse("scenario = nope").is_err());
        let c = RunConfig::parse("# comment\n\nseed = 9 # trailing\nlattice.dims = 4, 4").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.dims, vec![4, 4]);
    }

    #[test]
    fn env_overrides() {
        let mut c = RunConfig::default();
        c.apply_env(|k| match k {
            "XXZSQ_ENGINE_DT" => Some("0.01".into()),
            "XXZSQ_ENSEMBLE_TRAJECTORIES" => Some("12".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(c.engine.dt, 0.01);
        assert_eq!(c.trajectories, 12);
        assert!(c
            .apply_env(|k| (k == "XXZSQ_SEED").then(|| "x".to_string()))
            .is_err());
    }

    #[test]
    fn every_key_is_settable() {
        let c = RunConfig::default();
        for key in KEYS {
            let mut d = c.clone();
            d.set(key, &c.get(key)).unwrap();
            assert_eq!(d, c, "{key}");
        }
    }

    proptest! {
        #[test]
        fn numeric_fields_round_trip(
            dt in 1e-6f64..1.0, rho in 0.0f64..0.9, delta in -5.0f64..5.0,
            seed in any::<u64>(), m in 2usize..100_000,
        ) {
            let mut c = RunConfig::default();
            c.engine.dt = dt;
            c.engine.hole_density = rho;
            c.delta = delta;
            c.seed = seed;
            c.trajectories = m;
            let back = RunConfig::parse(&c.serialize()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
