//! Flat `key = value` run configuration with `#` comments. Command-line
//! flags override file values.

use crate::CliError;
use gbs_core::input::{InputModel, SigmaOrdering, StateFamily};
use gbs_core::network::{load_matrix, TransmissionMatrix};
use gbs_core::observables::BinningSpec;
use gbs_core::simulate::SampleSizes;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum SubsetSpec {
    EqualSplit,
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub r: Vec<f64>,
    pub family: StateFamily,
    pub epsilon: f64,
    pub t: f64,
    pub sigma: SigmaOrdering,
    pub matrix_path: Option<PathBuf>,
    pub n_s: Option<usize>,
    pub n_r: Option<usize>,
    pub e_s: Option<usize>,
    pub seed: u64,
    pub d: usize,
    pub subsets: SubsetSpec,
    pub out: PathBuf,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            r: Vec::new(),
            family: StateFamily::PureSqueezed,
            epsilon: 0.0,
            t: 1.0,
            sigma: SigmaOrdering::Normal,
            matrix_path: None,
            n_s: None,
            n_r: None,
            e_s: None,
            seed: 0,
            d: 1,
            subsets: SubsetSpec::EqualSplit,
            out: PathBuf::from("."),
            threads: 0,
        }
    }
}

fn bad(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("config line {line}: {msg}"))
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64, CliError> {
    v.parse()
        .map_err(|_| bad(line, format!("{key} expects a number, got {v:?}")))
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize, CliError> {
    v.parse()
        .map_err(|_| bad(line, format!("{key} expects an integer, got {v:?}")))
}

/// `a-b` inclusive ranges and single indices, groups separated by `;`.
fn parse_subsets(line: usize, v: &str) -> Result<SubsetSpec, CliError> {
    if v.trim() == "equal-split" {
        return Ok(SubsetSpec::EqualSplit);
    }
    let mut groups = Vec::new();
    for group in v.split(';') {
        let mut modes = Vec::new();
        for item in group.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            if let Some((a, b)) = item.split_once('-') {
                let lo = parse_usize(line, "subsets", a.trim())?;
                let hi = parse_usize(line, "subsets", b.trim())?;
                if hi < lo {
                    return Err(bad(line, format!("descending range {item:?}")));
                }
                modes.extend(lo..=hi);
            } else {
                modes.push(parse_usize(line, "subsets", item)?);
            }
        }
        if !modes.is_empty() {
            groups.push(modes);
        }
    }
    if groups.is_empty() {
        return Err(bad(line, "subsets is empty"));
    }
    Ok(SubsetSpec::Explicit(groups))
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(lineno, format!("expected `key = value`, got {line:?}")))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "r" => {
                    cfg.r = value
                        .split(',')
                        .map(|s| parse_f64(lineno, "r", s.trim()))
                        .collect::<Result<_, _>>()?;
                }
                "r_file" => {
                    let path = base_dir.join(value);
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                    cfg.r = text
                        .split_whitespace()
                        .map(|s| parse_f64(lineno, "r_file", s))
                        .collect::<Result<_, _>>()?;
                }
                "family" => {
                    cfg.family = match value {
                        "pure" => StateFamily::PureSqueezed,
                        "thermalized" => StateFamily::ThermalizedSqueezed,
                        "thermal" => StateFamily::Thermal,
                        "squashed" => StateFamily::Squashed,
                        other => return Err(bad(
                            lineno,
                            format!(
                                "family must be pure|thermalized|thermal|squashed, got {other:?}"
                            ),
                        )),
                    };
                }
                "epsilon" => cfg.epsilon = parse_f64(lineno, "epsilon", value)?,
                "t" => cfg.t = parse_f64(lineno, "t", value)?,
                "sigma" => {
                    let v = parse_f64(lineno, "sigma", value)?;
                    cfg.sigma = SigmaOrdering::from_value(v)
                        .ok_or_else(|| bad(lineno, "sigma must be 0, 0.5 or 1"))?;
                }
                "matrix" => cfg.matrix_path = Some(base_dir.join(value)),
                "n_s" => cfg.n_s = Some(parse_usize(lineno, "n_s", value)?),
                "n_r" => cfg.n_r = Some(parse_usize(lineno, "n_r", value)?),
                "e_s" => cfg.e_s = Some(parse_usize(lineno, "e_s", value)?),
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| bad(lineno, format!("seed expects a u64, got {value:?}")))?;
                }
                "d" => cfg.d = parse_usize(lineno, "d", value)?,
                "subsets" => cfg.subsets = parse_subsets(lineno, value)?,
                "out" => cfg.out = base_dir.join(value),
                "threads" => cfg.threads = parse_usize(lineno, "threads", value)?,
                other => return Err(bad(lineno, format!("unknown key {other:?}"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn model(&self) -> Result<InputModel, CliError> {
        if self.r.is_empty() {
            return Err(CliError::Config(
                "config defines no input modes (set r)".into(),
            ));
        }
        // thermal is the epsilon = 1 limit by definition; squashed ignores
        // epsilon entirely (coherence equals photon number). Pure passes the
        // configured value through so a stray nonzero epsilon is rejected.
        let epsilon = match self.family {
            StateFamily::Thermal => 1.0,
            StateFamily::Squashed => 0.0,
            StateFamily::PureSqueezed | StateFamily::ThermalizedSqueezed => self.epsilon,
        };
        InputModel::new(self.family, self.r.clone(), epsilon, self.t, self.sigma)
            .map_err(CliError::from)
    }

    pub fn matrix(&self) -> Result<TransmissionMatrix, CliError> {
        match &self.matrix_path {
            Some(path) => load_matrix(path).map_err(CliError::from),
            None if self.r.len() == 1 => Ok(TransmissionMatrix::identity(1)),
            None => Err(CliError::Config(
                "matrix path is required for more than one input mode".into(),
            )),
        }
    }

    pub fn sizes(&self) -> Result<SampleSizes, CliError> {
        match (self.n_s, self.n_r, self.e_s) {
            (Some(n_s), Some(n_r), e_s) => {
                let sizes = SampleSizes::new(n_s, n_r);
                if let Some(e) = e_s {
                    if sizes.total() != e {
                        return Err(CliError::Config(format!(
                            "e_s = {e} contradicts n_s * n_r = {}",
                            sizes.total()
                        )));
                    }
                }
                Ok(sizes)
            }
            (None, n_r, Some(e_s)) => {
                let n_r = n_r.unwrap_or(16).max(1);
                Ok(SampleSizes::new(e_s.div_ceil(n_r), n_r))
            }
            (Some(_), None, _) => Err(CliError::Config(
                "n_s given without n_r (or use e_s alone)".into(),
            )),
            (None, _, None) => Ok(SampleSizes::from_total(100_000)),
        }
    }

    pub fn binning(&self, n_outputs: usize) -> Result<BinningSpec, CliError> {
        match &self.subsets {
            SubsetSpec::Explicit(groups) => {
                BinningSpec::new(groups.clone()).map_err(CliError::from)
            }
            SubsetSpec::EqualSplit => {
                BinningSpec::equal_split(n_outputs, self.d).map_err(CliError::from)
            }
        }
    }

    /// Provenance echo for output headers.
    pub fn describe_model(&self) -> String {
        format!(
            "family={} r=[{}] epsilon={} t={} sigma={}",
            self.family_name(),
            self.r
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
            self.epsilon,
            self.t,
            self.sigma.offset()
        )
    }

    fn family_name(&self) -> &'static str {
        match self.family {
            StateFamily::PureSqueezed => "pure",
            StateFamily::ThermalizedSqueezed => "thermalized",
            StateFamily::Thermal => "thermal",
            StateFamily::Squashed => "squashed",
        }
    }
}
