//! Run configuration: a TOML file with nested blocks, plus dotted-path
//! command-line overrides.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::section::{compute_spectrum, CrossSection, SectionKind};

/// Default truncation level K when a config leaves it out.
pub const DEFAULT_MODES: usize = 32;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub task: TaskConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub chambers: Vec<ChamberConfig>,
    /// Per-junction placements of the narrow section inside the wide one;
    /// missing entries center the embedding.
    #[serde(default)]
    pub junctions: Vec<JunctionConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChamberConfig {
    pub kind: String,
    #[serde(default)]
    pub length: Option<f64>,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub height: Option<f64>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub nx: Option<usize>,
    #[serde(default)]
    pub ny: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionConfig {
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    /// Retained modes K per section.
    #[serde(default = "default_modes")]
    pub modes: usize,
    /// Oracle grid spacing h.
    #[serde(default = "default_spacing")]
    pub oracle_h: f64,
    /// Oracle truncation half-length X of the end chambers.
    #[serde(default = "default_half_length")]
    pub oracle_half_length: f64,
    /// Axial spans of interior chain chambers for the oracle run.
    #[serde(default)]
    pub middle_spans: Vec<f64>,
    /// Memory cap for one oracle solve, in MiB.
    #[serde(default = "default_memory_cap")]
    pub oracle_memory_cap_mib: usize,
}

fn default_modes() -> usize {
    DEFAULT_MODES
}
fn default_spacing() -> f64 {
    1.0 / 64.0
}
fn default_half_length() -> f64 {
    8.0
}
fn default_memory_cap() -> usize {
    2048
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            modes: default_modes(),
            oracle_h: default_spacing(),
            oracle_half_length: default_half_length(),
            middle_spans: Vec::new(),
            oracle_memory_cap_mib: default_memory_cap(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    /// Canonical source mode on the wide chamber.
    #[serde(default = "default_source_mode")]
    pub source_mode: usize,
    /// Frequency window for limit extraction.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    /// Limit extraction tolerance.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Classification threshold mode on the right section (absent means
    /// finite energy there).
    #[serde(default)]
    pub threshold_right_mode: Option<usize>,
    /// Classification threshold mode on the left section.
    #[serde(default)]
    pub threshold_left_mode: Option<usize>,
    /// Number of basis members to construct.
    #[serde(default)]
    pub k_max: Option<usize>,
    /// Sample resolution per axis for field exports and positivity grids.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_source_mode() -> usize {
    1
}
fn default_tolerance() -> f64 {
    1e-3
}
fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub directory: Option<String>,
}

impl RunConfig {
    /// Parse and validate a config file, applying `--set key=value`
    /// overrides onto the TOML tree before deserialization.
    pub fn load(path: &Path, overrides: &[String]) -> Result<(RunConfig, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<(RunConfig, String)> {
        let mut value: toml::Value = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Validation(format!("config parse error: {e}")))?;
        for entry in overrides {
            apply_override(&mut value, entry)?;
        }
        let effective = toml::to_string(&value)
            .map_err(|e| Error::Validation(format!("cannot render effective config: {e}")))?;
        let config: RunConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| Error::Validation(format!("config error: {e}")))?;
        config.validate()?;
        Ok((config, effective))
    }

    fn validate(&self) -> Result<()> {
        if self.geometry.chambers.is_empty() {
            return Err(Error::Validation("geometry.chambers must not be empty".into()));
        }
        if self.truncation.modes == 0 {
            return Err(Error::Validation("truncation.modes must be at least 1".into()));
        }
        if !(self.truncation.oracle_h > 0.0) {
            return Err(Error::Validation("truncation.oracle_h must be positive".into()));
        }
        if !self.geometry.junctions.is_empty()
            && self.geometry.junctions.len() != self.geometry.chambers.len() - 1
        {
            return Err(Error::Validation(format!(
                "{} chambers need {} junction entries (or none for centered defaults), got {}",
                self.geometry.chambers.len(),
                self.geometry.chambers.len() - 1,
                self.geometry.junctions.len()
            )));
        }
        for chamber in &self.geometry.chambers {
            chamber.kind()?;
        }
        Ok(())
    }

    /// Compute the spectra of all configured chambers at truncation K.
    pub fn sections(&self) -> Result<Vec<Arc<CrossSection>>> {
        self.geometry
            .chambers
            .iter()
            .map(|c| Ok(Arc::new(compute_spectrum(c.kind()?, self.truncation.modes)?)))
            .collect()
    }

    /// Junction offsets, defaulting to centered placements.
    pub fn offsets(&self, sections: &[Arc<CrossSection>]) -> Result<Vec<Vec<f64>>> {
        if !self.geometry.junctions.is_empty() {
            return Ok(self
                .geometry
                .junctions
                .iter()
                .map(|j| j.offset.clone())
                .collect());
        }
        sections
            .windows(2)
            .map(|pair| {
                Ok(pair[0]
                    .extents()
                    .iter()
                    .zip(pair[1].extents())
                    .map(|(l, r)| 0.5 * (r - l))
                    .collect())
            })
            .collect()
    }
}

impl ChamberConfig {
    pub fn kind(&self) -> Result<SectionKind> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                Error::Validation(format!("chamber kind {} needs field `{name}`", self.kind))
            })
        };
        let need_n = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| {
                Error::Validation(format!("chamber kind {} needs field `{name}`", self.kind))
            })
        };
        match self.kind.as_str() {
            "interval" => Ok(SectionKind::Interval {
                length: need(self.length, "length")?,
            }),
            "rectangle" => Ok(SectionKind::Rectangle {
                width: need(self.width, "width")?,
                height: need(self.height, "height")?,
            }),
            "grid1d" => Ok(SectionKind::Grid1d {
                length: need(self.length, "length")?,
                n: need_n(self.n, "n")?,
            }),
            "grid2d" => Ok(SectionKind::Grid2d {
                width: need(self.width, "width")?,
                height: need(self.height, "height")?,
                nx: need_n(self.nx, "nx")?,
                ny: need_n(self.ny, "ny")?,
            }),
            other => Err(Error::Validation(format!(
                "unknown chamber kind `{other}` (expected interval, rectangle, grid1d or grid2d)"
            ))),
        }
    }
}

/// Apply one `path.to.key=value` override to a parsed TOML tree.
fn apply_override(root: &mut toml::Value, entry: &str) -> Result<()> {
    let (path, raw) = entry.split_once('=').ok_or_else(|| {
        Error::Validation(format!("override `{entry}` must look like key.path=value"))
    })?;
    let parsed: toml::Value = match raw.parse::<i64>() {
        Ok(i) => toml::Value::Integer(i),
        Err(_) => match raw.parse::<f64>() {
            Ok(f) => toml::Value::Float(f),
            Err(_) => match raw {
                "true" => toml::Value::Boolean(true),
                "false" => toml::Value::Boolean(false),
                other => toml::Value::String(other.to_string()),
            },
        },
    };
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        if last {
            let table = node.as_table_mut().ok_or_else(|| {
                Error::Validation(format!("override path `{path}` does not address a table"))
            })?;
            table.insert(segment.to_string(), parsed);
            return Ok(());
        }
        let table = node.as_table_mut().ok_or_else(|| {
            Error::Validation(format!("override path `{path}` does not address a table"))
        })?;
        node = table
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    unreachable!("split produces at least one segment")
}
