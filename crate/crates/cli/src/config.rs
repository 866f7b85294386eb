//! Run configuration. A TOML file supplies defaults; command-line flags
//! override individual keys.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use mcvc_core::combine::{CombineMethod, CombineParams};
use mcvc_core::dedup::DEFAULT_BLACK_THRESHOLD;
use mcvc_core::frameselect::{SelectionMode, SelectionParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombineSection {
    pub method: CombineMethod,
    /// Softmax temperature; the method's default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub radius: usize,
}

impl Default for CombineSection {
    fn default() -> Self {
        Self {
            method: CombineMethod::Average,
            tau: None,
            radius: 1,
        }
    }
}

impl CombineSection {
    pub fn params(&self) -> CombineParams {
        let mut p = CombineParams::new(self.method);
        if let Some(tau) = self.tau {
            p.tau = tau;
        }
        p.radius = self.radius;
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub store: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub mode: SelectionMode,
    pub black_threshold: f64,
    pub cal: f64,
    /// When non-empty the pipeline sweeps these values and keeps the one
    /// with the best composite score.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<f64>,
    pub selection: SelectionParams,
    pub combine: CombineSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            store: None,
            out: None,
            seed: 0,
            mode: SelectionMode::Static,
            black_threshold: DEFAULT_BLACK_THRESHOLD,
            cal: 0.7,
            sweep: Vec::new(),
            selection: SelectionParams::default(),
            combine: CombineSection::default(),
        }
    }
}

pub fn check_cal(cal: f64) -> anyhow::Result<()> {
    if !(cal > 0.0 && cal < 1.0) {
        bail!("cal must lie strictly between 0 and 1, got {cal}");
    }
    Ok(())
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        check_cal(self.cal)?;
        for &c in &self.sweep {
            check_cal(c)?;
        }
        self.selection.validate()?;
        self.combine.params().validate()?;
        Ok(())
    }
}

/// Parses `0.1,0.2,0.5` or an inclusive range `start:stop:step`.
pub fn parse_cal_list(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}"));
    if parts.len() == 3 {
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(format!("bad range {s:?}"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // rounding to 1e-9 keeps 0.1 + 2·0.1 printing as 0.3
        return Ok((0..count)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect());
    }
    s.split(',').map(num).collect()
}
