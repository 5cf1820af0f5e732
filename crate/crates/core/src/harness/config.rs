//! Run configuration: flat `key = value` text with `#` comments and comma-separated lists.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::stokes_green::{ContourFamily, ContourSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: String,
    pub nu: Vec<f64>,
    pub beta: f64,
    pub modes: usize,
    pub grid: GridSpecEcho,
    pub t_final: f64,
    pub output_times: Vec<f64>,
    pub contour: ContourEcho,
    pub data: String,
    pub amplitude: f64,
    pub seed: u64,
    pub dt: f64,
    pub snapshots: usize,
    pub picard_tol: f64,
    pub mol_dt: f64,
    pub slope_band: f64,
    pub fit_margin: f64,
    pub rho0: f64,
    pub gamma: f64,
    /// Viscosity of the surrogate Euler reference for non-shear data.
    pub euler_nu: f64,
    pub cache_dir: Option<PathBuf>,
    pub out: PathBuf,
}

/// Grid parameters as configured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpecEcho {
    pub length: f64,
    pub growth: f64,
    pub core_spacing: f64,
    pub far_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourEcho {
    pub family: &'static str,
    pub vertex: f64,
    pub radius: f64,
    pub b_max: f64,
    pub n_nodes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        let c = ContourSpec::production();
        Self {
            experiment: "kernel-check".into(),
            nu: vec![1e-3],
            beta: 1.0,
            modes: 8,
            grid: GridSpecEcho {
                length: g.length,
                growth: g.growth,
                core_spacing: g.core_spacing,
                far_scale: g.far_scale,
            },
            t_final: 1.0,
            output_times: vec![0.1, 0.5, 1.0],
            contour: ContourEcho {
                family: c.family.name(),
                vertex: c.vertex,
                radius: c.radius,
                b_max: c.b_max,
                n_nodes: c.n_nodes,
            },
            data: "gaussian".into(),
            amplitude: 0.05,
            seed: 7,
            dt: 0.025,
            snapshots: 4,
            picard_tol: 1e-10,
            mol_dt: 1e-3,
            slope_band: 0.15,
            fit_margin: 1.25,
            rho0: 0.5,
            gamma: 0.1,
            euler_nu: 1e-6,
            cache_dir: None,
            out: PathBuf::from("out"),
        }
    }
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|e| Error::Config(format!("{key}: cannot parse {v:?} as a number ({e})")))
}

fn int(key: &str, v: &str) -> Result<u64> {
    v.parse::<u64>()
        .map_err(|e| Error::Config(format!("{key}: cannot parse {v:?} as an integer ({e})")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s.trim())).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Parses config text on top of the defaults. Unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            c.set(key.trim(), value.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = v.to_string(),
            "nu" => self.nu = list(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "modes" => self.modes = int(key, v)? as usize,
            "grid_length" => self.grid.length = num(key, v)?,
            "grid_growth" => self.grid.growth = num(key, v)?,
            "grid_core_spacing" => self.grid.core_spacing = num(key, v)?,
            "grid_far_scale" => self.grid.far_scale = num(key, v)?,
            "t_final" => self.t_final = num(key, v)?,
            "output_times" => self.output_times = list(key, v)?,
            "contour" => self.contour.family = ContourFamily::parse(v)?.name(),
            "contour_vertex" => self.contour.vertex = num(key, v)?,
            "contour_radius" => self.contour.radius = num(key, v)?,
            "contour_b_max" => self.contour.b_max = num(key, v)?,
            "contour_nodes" => self.contour.n_nodes = int(key, v)? as usize,
            "data" => self.data = v.to_string(),
            "amplitude" => self.amplitude = num(key, v)?,
            "seed" => self.seed = int(key, v)?,
            "dt" => self.dt = num(key, v)?,
            "snapshots" => self.snapshots = int(key, v)? as usize,
            "picard_tol" => self.picard_tol = num(key, v)?,
            "mol_dt" => self.mol_dt = num(key, v)?,
            "slope_band" => self.slope_band = num(key, v)?,
            "fit_margin" => self.fit_margin = num(key, v)?,
            "rho0" => self.rho0 = num(key, v)?,
            "gamma" => self.gamma = num(key, v)?,
            "euler_nu" => self.euler_nu = num(key, v)?,
            "cache_dir" => self.cache_dir = (!v.is_empty()).then(|| PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.nu.is_empty() || self.nu.iter().any(|n| !(*n > 0.0)) {
            return bad(format!("nu must be a nonempty list of positive values, got {:?}", self.nu));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta = {} outside [0, 1]", self.beta));
        }
        if !(self.t_final > 0.0) || !(self.dt > 0.0) || !(self.mol_dt > 0.0) {
            return bad("t_final, dt and mol_dt must be positive".into());
        }
        if self.output_times.is_empty() || self.output_times.iter().any(|t| !(*t >= 0.0)) {
            return bad("output_times must be a nonempty list of non-negative times".into());
        }
        if self.output_times.windows(2).any(|w| w[1] <= w[0]) {
            return bad("output_times must be increasing".into());
        }
        if !(self.euler_nu > 0.0) {
            return bad("euler_nu must be positive".into());
        }
        if self.snapshots == 0 {
            return bad("snapshots must be at least 1".into());
        }
        if !(self.fit_margin >= 1.0) || !(self.slope_band > 0.0) {
            return bad("fit_margin must be >= 1 and slope_band > 0".into());
        }
        Ok(())
    }

    /// Canonical text; `parse(to_text())` reproduces the config bit for bit.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("experiment", self.experiment.clone());
        kv("nu", join(&self.nu));
        kv("beta", self.beta.to_string());
        kv("modes", self.modes.to_string());
        kv("grid_length", self.grid.length.to_string());
        kv("grid_growth", self.grid.growth.to_string());
        kv("grid_core_spacing", self.grid.core_spacing.to_string());
        kv("grid_far_scale", self.grid.far_scale.to_string());
        kv("t_final", self.t_final.to_string());
        kv("output_times", join(&self.output_times));
        kv("contour", self.contour.family.to_string());
        kv("contour_vertex", self.contour.vertex.to_string());
        kv("contour_radius", self.contour.radius.to_string());
        kv("contour_b_max", self.contour.b_max.to_string());
        kv("contour_nodes", self.contour.n_nodes.to_string());
        kv("data", self.data.clone());
        kv("amplitude", self.amplitude.to_string());
        kv("seed", self.seed.to_string());
        kv("dt", self.dt.to_string());
        kv("snapshots", self.snapshots.to_string());
        kv("picard_tol", self.picard_tol.to_string());
        kv("mol_dt", self.mol_dt.to_string());
        kv("slope_band", self.slope_band.to_string());
        kv("fit_margin", self.fit_margin.to_string());
        kv("rho0", self.rho0.to_string());
        kv("gamma", self.gamma.to_string());
        kv("euler_nu", self.euler_nu.to_string());
        kv(
            "cache_dir",
            self.cache_dir.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        kv("out", self.out.display().to_string());
        s
    }

    /// SHA-256 of the canonical text, hex, first 16 digits.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let d = Sha256::digest(self.to_text().as_bytes());
        d[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            length: self.grid.length,
            growth: self.grid.growth,
            core_spacing: self.grid.core_spacing,
            far_scale: self.grid.far_scale,
        }
    }

    pub fn contour_spec(&self) -> Result<ContourSpec> {
        Ok(ContourSpec {
            family: ContourFamily::parse(self.contour.family)?,
            vertex: self.contour.vertex,
            radius: self.contour.radius,
            b_max: self.contour.b_max,
            n_nodes: self.contour.n_nodes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_comments_lists_and_unknown_keys() {
        let c = RunConfig::parse("# sweep\nnu = 1e-3, 1e-4 # two\nbeta = 0.5\n\nmodes=4\n").unwrap();
        assert_eq!(c.nu, vec![1e-3, 1e-4]);
        assert_eq!(c.beta, 0.5);
        assert_eq!(c.modes, 4);
        assert!(matches!(RunConfig::parse("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("nu = abc"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("beta = 2"), Err(Error::Config(_))));
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut c = RunConfig::default();
        c.nu = vec![0.1 + 0.2, 1e-5, 3.0e-7];
        c.amplitude = std::f64::consts::PI;
        c.cache_dir = Some(PathBuf::from("/tmp/k"));
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }
}
