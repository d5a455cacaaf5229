//! Scenario configuration files (TOML).
//!
//! ```toml
//! label = "scenario2"
//! epochs = 1000
//! seed = 2023
//!
//! [ranging]
//! sigma_r = 0.9        # LOS noise standard deviation, m
//! d_max = 100.0        # maximum range, m
//! p_out = 0.07         # outlier probability
//! nlos = true          # multipath branch on/off
//! mp_mean = 0.8        # lognormal log-space mean
//! mp_sigma = 1.07      # lognormal log-space standard deviation
//!
//! [grid]
//! cell = 0.25          # 2-D cell size, m
//! line_cell = 0.01     # cell size of the 1-D filter for node 1, m
//! margin = 5.0         # added around the constellation bounding box, m
//! sigma_pred = 0.0     # diffusion between epochs, m (default: one cell)
//! carry_beliefs = true
//! # x_min/x_max/y_min/y_max override the derived extent
//!
//! [output]
//! dir = "out/scenario2"
//! dump_measurements = false
//! dump_beliefs = false
//!
//! [constellation]      # optional; defaults to the 13-node parking lot
//! positions = [[0.0, 0.0], [7.8, 0.6], [0.9, 9.6]]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cgp::{CgpConfig, GridDomain};
use crate::error::{Error, Result};
use crate::eval::gauge_frame;
use crate::network::{Constellation, NodePosition};
use crate::simulator::{RangingModelParams, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub label: String,
    pub epochs: usize,
    pub seed: u64,
    pub ranging: RangingSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constellation: Option<ConstellationSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangingSection {
    pub sigma_r: f64,
    pub d_max: f64,
    pub p_out: f64,
    #[serde(default = "default_true")]
    pub nlos: bool,
    #[serde(default = "default_mp_mean")]
    pub mp_mean: f64,
    #[serde(default = "default_mp_sigma")]
    pub mp_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_cell")]
    pub cell: f64,
    #[serde(default = "default_line_cell")]
    pub line_cell: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_pred: Option<f64>,
    #[serde(default)]
    pub carry_beliefs: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            cell: default_cell(),
            line_cell: default_line_cell(),
            margin: default_margin(),
            sigma_pred: None,
            carry_beliefs: false,
            x_min: None,
            x_max: None,
            y_min: None,
            y_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub dump_measurements: bool,
    #[serde(default)]
    pub dump_beliefs: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out_dir(), dump_measurements: false, dump_beliefs: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSection {
    pub positions: Vec<[f64; 2]>,
}

fn default_true() -> bool {
    true
}
fn default_mp_mean() -> f64 {
    0.8
}
fn default_mp_sigma() -> f64 {
    1.07
}
fn default_cell() -> f64 {
    0.1
}
fn default_line_cell() -> f64 {
    0.01
}
fn default_margin() -> f64 {
    5.0
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line overrides; `Some` and `true` values replace the file's values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub epochs: Option<usize>,
    pub cell: Option<f64>,
    pub seed: Option<u64>,
    pub carry_beliefs: Option<bool>,
    pub dump_measurements: bool,
    pub dump_beliefs: bool,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Overrides::default()
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| text[s].trim().to_owned()).unwrap_or_default();
            Error::config(field, e.message().to_owned())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(e) = o.epochs {
            self.epochs = e;
        }
        if let Some(c) = o.cell {
            self.grid.cell = c;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(c) = o.carry_beliefs {
            self.grid.carry_beliefs = c;
        }
        self.output.dump_measurements |= o.dump_measurements;
        self.output.dump_beliefs |= o.dump_beliefs;
        if let Some(d) = &o.out_dir {
            self.output.dir = d.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.label.trim().is_empty() {
            return Err(Error::config("label", "must not be empty"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        self.ranging_params()
            .validate()
            .map_err(|e| match e {
                Error::InvalidParameter { field, reason } => Error::config(format!("ranging.{field}"), reason),
                other => other,
            })?;
        let g = &self.grid;
        for (name, v) in [("grid.cell", g.cell), ("grid.line_cell", g.line_cell)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be positive"));
            }
        }
        if !(g.margin >= 0.0) {
            return Err(Error::config("grid.margin", "must be non-negative"));
        }
        if let Some(s) = g.sigma_pred {
            if !(s >= 0.0) {
                return Err(Error::config("grid.sigma_pred", "must be non-negative"));
            }
        }
        self.constellation()?;
        self.cgp_config()?;
        Ok(())
    }

    pub fn ranging_params(&self) -> RangingModelParams {
        let r = &self.ranging;
        RangingModelParams {
            sigma_r: r.sigma_r,
            d_max: r.d_max,
            p_out: r.p_out,
            nlos: r.nlos,
            mp_mean: r.mp_mean,
            mp_sigma: r.mp_sigma,
            seed: self.seed,
        }
    }

    pub fn constellation(&self) -> Result<Constellation> {
        match &self.constellation {
            None => Ok(Constellation::default_parking_lot()),
            Some(c) => Constellation::new(c.positions.iter().map(|p| NodePosition::new(p[0], p[1])).collect())
                .map_err(|e| Error::config("constellation.positions", e.to_string())),
        }
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        Ok(ScenarioConfig {
            constellation: self.constellation()?,
            params: self.ranging_params(),
            epochs: self.epochs,
            label: self.label.clone(),
        })
    }

    /// Grid extent: explicit bounds where given, otherwise the constellation
    /// bounding box in the estimator gauge plus the margin.
    pub fn grid_domain(&self) -> Result<GridDomain> {
        let g = &self.grid;
        let gauge = gauge_frame(self.constellation()?.positions());
        let fold = |f: fn(&NodePosition) -> f64, init: f64, pick: fn(f64, f64) -> f64| gauge.iter().map(f).fold(init, pick);
        let x_min = g.x_min.unwrap_or_else(|| fold(|p| p.x, f64::INFINITY, f64::min) - g.margin);
        let x_max = g.x_max.unwrap_or_else(|| fold(|p| p.x, f64::NEG_INFINITY, f64::max) + g.margin);
        let y_min = g.y_min.unwrap_or_else(|| fold(|p| p.y, f64::INFINITY, f64::min) - g.margin);
        let y_max = g.y_max.unwrap_or_else(|| fold(|p| p.y, f64::NEG_INFINITY, f64::max) + g.margin);
        if !(y_max > 0.0) || !(x_max > 0.0) {
            return Err(Error::config("grid", "extent must reach into x > 0 and y > 0"));
        }
        GridDomain::new(x_min, x_max, y_min, y_max, g.cell).map_err(|e| Error::config("grid", e.to_string()))
    }

    pub fn cgp_config(&self) -> Result<CgpConfig> {
        Ok(CgpConfig {
            domain: self.grid_domain()?,
            line_cell: self.grid.line_cell,
            sigma_r: self.ranging.sigma_r,
            sigma_pred: self.grid.sigma_pred.unwrap_or(self.grid.cell),
            carry_beliefs: self.grid.carry_beliefs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
label = "s"
epochs = 10
seed = 1
[ranging]
sigma_r = 0.9
d_max = 100.0
p_out = 0.07
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert!(c.ranging.nlos);
        assert_eq!(c.grid.cell, 0.1);
        assert_eq!(c.constellation().unwrap().len(), 13);
        let cgp = c.cgp_config().unwrap();
        assert_eq!(cgp.sigma_pred, 0.1);
        assert!(!cgp.carry_beliefs);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("p_out = 0.07", "p_out = 1.5");
        match RunConfig::from_toml_str(&bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "ranging.p_out"),
            other => panic!("unexpected {other:?}"),
        }
        let unknown = format!("{MINIMAL}\nbogus = 3\n");
        assert!(matches!(RunConfig::from_toml_str(&unknown), Err(Error::Config { .. })));
        let missing = MINIMAL.replace("d_max = 100.0\n", "");
        match RunConfig::from_toml_str(&missing) {
            Err(Error::Config { reason, .. }) => assert!(reason.contains("d_max"), "{reason}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut c = RunConfig::from_toml_str(MINIMAL).unwrap();
        c.apply(&Overrides { epochs: Some(3), cell: Some(0.25), carry_beliefs: Some(true), ..Default::default() });
        assert_eq!((c.epochs, c.grid.cell, c.grid.carry_beliefs), (3, 0.25, true));
    }

    #[test]
    fn round_trips_through_toml() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(RunConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }

    #[test]
    fn grid_covers_gauge_frame() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        let d = c.grid_domain().unwrap();
        let gauge = gauge_frame(c.constellation().unwrap().positions());
        assert!(gauge.iter().all(|p| d.cell_of(*p).is_some()));
    }
}
