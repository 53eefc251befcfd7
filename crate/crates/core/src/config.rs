//! Pipeline configuration.
//!
//! Loaded from TOML. Regex keys live at the top level so venue overrides stay
//! short:
//!
//! ```toml
//! caption_figure = '^(Figure|Fig\.?)\s*(\d+)\s*[:.]'
//! caption_table = '^Table\s*(\d+)\s*[:.]'
//!
//! [domain_markers]
//! references = '(?i)^(References|Bibliography)\b'
//!
//! [zones]
//! include_appendix = true
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::SvmHyperparams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    #[serde(flatten)]
    pub rules: RuleConfig,
    pub reading_order: ReadingOrderConfig,
    pub encoder: EncoderConfig,
    pub zones: ZoneConfig,
    pub evaluation: EvaluationConfig,
    pub svm: SvmHyperparams,
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        crate::rules::RuleSet::compile(&self.rules)?;
        let ro = &self.reading_order;
        if !(0.0..=1.0).contains(&ro.single_column_share) || !(0.0..=1.0).contains(&ro.wide_block_ratio) {
            return Err(Error::Config("reading_order ratios must lie in [0, 1]".into()));
        }
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.zones.gap_factor) || !positive(self.zones.fallback_gap) {
            return Err(Error::Config("zones.gap_factor and zones.fallback_gap must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.evaluation.iou_threshold) {
            return Err(Error::Config("evaluation.iou_threshold must lie in [0, 1]".into()));
        }
        self.svm.validate()
    }
}

/// Regex sources. Caption patterns must capture the number, either in a group
/// named `number` or as the last all-digit group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub caption_figure: String,
    pub caption_table: String,
    pub section_main: String,
    pub section_sub: String,
    pub domain_markers: DomainMarkers,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            caption_figure: r"^(Figure|Fig\.?)\s*(\d+)\s*[:.]".into(),
            caption_table: r"^Table\s*(\d+)\s*[:.]".into(),
            section_main: r"^(\d+)\s+\S".into(),
            section_sub: r"^(\d+\.\d+(\.\d+)?)\s+\S".into(),
            domain_markers: DomainMarkers::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainMarkers {
    #[serde(rename = "abstract")]
    pub abstract_: String,
    pub references: String,
    pub appendix: String,
}

impl Default for DomainMarkers {
    fn default() -> Self {
        Self {
            abstract_: r"(?i)^Abstract\b".into(),
            references: r"(?i)^References\b".into(),
            appendix: r"(?i)^(Appendix|A\s)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReadingOrderConfig {
    /// Share of total text-block width carried by wide blocks above which a page is single-column.
    pub single_column_share: f64,
    /// A block is wide when its width exceeds this fraction of the page width.
    pub wide_block_ratio: f64,
}

impl Default for ReadingOrderConfig {
    fn default() -> Self {
        Self {
            single_column_share: 0.8,
            wide_block_ratio: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateBoundaryPolicy {
    /// Normalize that coordinate by the page width/height instead.
    PageFallback,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub degenerate_boundary: DegenerateBoundaryPolicy,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            degenerate_boundary: DegenerateBoundaryPolicy::PageFallback,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZoneConfig {
    /// Run gap threshold as a multiple of the median body-text gap.
    pub gap_factor: f64,
    /// Gap threshold (points) on pages without measurable body-text gaps.
    pub fallback_gap: f64,
    pub include_appendix: bool,
}

impl Default for ZoneConfig {
    fn default() -> Self {
        Self {
            gap_factor: 1.5,
            fallback_gap: 18.0,
            include_appendix: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub iou_threshold: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { iou_threshold: 0.8 }
    }
}
