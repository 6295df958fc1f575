//! Run configuration: defaults, a flat `key = value` file format and the
//! hash that identifies an analysis.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::granger::Correction;
use crate::panel::{Frequency, Panel};
use crate::varx::Criterion;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionChoice {
    Aic,
    Bic,
    /// Report both, select by BIC.
    Both,
}

impl CriterionChoice {
    pub fn selecting(self) -> Criterion {
        match self {
            CriterionChoice::Aic => Criterion::Aic,
            CriterionChoice::Bic | CriterionChoice::Both => Criterion::Bic,
        }
    }
}

impl FromStr for CriterionChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aic" => Ok(CriterionChoice::Aic),
            "bic" => Ok(CriterionChoice::Bic),
            "both" => Ok(CriterionChoice::Both),
            other => Err(Error::InvalidArgument(format!("unknown criterion {other:?} (aic, bic, both)"))),
        }
    }
}

impl fmt::Display for CriterionChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriterionChoice::Aic => "aic",
            CriterionChoice::Bic => "bic",
            CriterionChoice::Both => "both",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExportFormat {
    Csv,
    Dot,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown export format {other:?} (csv, dot, json)"))),
        }
    }
}

pub fn parse_formats(s: &str) -> Result<BTreeSet<ExportFormat>> {
    s.split(',').filter(|f| !f.trim().is_empty()).map(str::parse).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub gdp_csv: Option<PathBuf>,
    pub cpi_csv: Option<PathBuf>,
    pub cpi_frequency: Frequency,
    /// Quarter (1..=4) that carries an annual observation.
    pub anchor: u8,
    pub p: Option<usize>,
    pub p_max: Option<usize>,
    pub criterion: CriterionChoice,
    pub alpha: f64,
    pub correction: Correction,
    pub output_dir: PathBuf,
    pub formats: BTreeSet<ExportFormat>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gdp_csv: None,
            cpi_csv: None,
            cpi_frequency: Frequency::Annual,
            anchor: 4,
            p: None,
            p_max: None,
            criterion: CriterionChoice::Bic,
            alpha: 0.05,
            correction: Correction::None,
            output_dir: PathBuf::from("out"),
            formats: [ExportFormat::Csv, ExportFormat::Dot, ExportFormat::Json].into_iter().collect(),
        }
    }
}

impl RunConfig {
    /// Applies one `key = value` setting. Relative paths resolve against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<()> {
        let path = |v: &str| match base {
            Some(b) if Path::new(v).is_relative() => b.join(v),
            _ => PathBuf::from(v),
        };
        let num = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("{key} must be a non-negative integer, got {v:?}")))
        };
        match key {
            "gdp_csv" => self.gdp_csv = Some(path(value)),
            "cpi_csv" => self.cpi_csv = Some(path(value)),
            "cpi_frequency" => self.cpi_frequency = value.parse()?,
            "anchor" => {
                self.anchor = value
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("anchor must be 1..4, got {value:?}")))?
            }
            "p" => self.p = Some(num(value)?),
            "p_max" => self.p_max = Some(num(value)?),
            "criterion" => self.criterion = value.parse()?,
            "alpha" => {
                self.alpha = value
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("alpha must be a number, got {value:?}")))?
            }
            "correction" => self.correction = value.parse()?,
            "output_dir" => self.output_dir = path(value),
            "formats" => self.formats = parse_formats(value)?,
            other => return Err(Error::InvalidArgument(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected key = value", no + 1)))?;
            cfg.set(k.trim(), v.trim(), base)
                .map_err(|e| Error::InvalidArgument(format!("config line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.anchor) {
            return Err(Error::InvalidArgument(format!("anchor must be 1..4, got {}", self.anchor)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.p == Some(0) || self.p_max == Some(0) {
            return Err(Error::InvalidArgument("lag orders start at 1".into()));
        }
        Ok(())
    }

    /// Exactly one of `p` and `p_max` must be set before fitting.
    pub fn lag_request(&self) -> Result<LagRequest> {
        match (self.p, self.p_max) {
            (Some(p), None) => Ok(LagRequest::Fixed(p)),
            (None, Some(p_max)) => Ok(LagRequest::Select(p_max)),
            (Some(_), Some(_)) => Err(Error::InvalidArgument("give either p or p_max, not both".into())),
            (None, None) => Err(Error::InvalidArgument("a lag order is required: set p or p_max".into())),
        }
    }

    pub fn wants(&self, format: ExportFormat) -> bool {
        self.formats.contains(&format)
    }

    /// Canonical analysis settings, one `key=value` per line. Paths and
    /// export formats are left out since they do not change any result.
    pub fn canonical(&self) -> String {
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |x| x.to_string());
        format!(
            "cpi_frequency={}\nanchor={}\np={}\np_max={}\ncriterion={}\nalpha={}\ncorrection={}\n",
            self.cpi_frequency,
            self.anchor,
            opt(self.p),
            opt(self.p_max),
            self.criterion,
            self.alpha,
            self.correction
        )
    }

    /// SHA-256 over the canonical settings and the aligned panel.
    pub fn hash_with(&self, panel: &Panel) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        h.update(b"--\n");
        h.update(panel.to_csv_string().as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LagRequest {
    Fixed(usize),
    Select(usize),
}
