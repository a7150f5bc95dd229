//! Run configuration: JSON schema and construction of the core objects.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::Deserialize;

use padr_core::approx::Profile;
use padr_core::dynamics::{IntegratorConfig, Method};
use padr_core::grid::{GridIndex, GridParams};
use padr_core::kernel::RadialKernel;
use padr_core::reaction::{Polynomial, Reaction};
use padr_core::state::State;
use padr_core::stationary::PatternSet;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub kernel: KernelConfig,
    pub reaction: ReactionConfig,
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub integrator: Option<IntegratorSection>,
    #[serde(default)]
    pub stationary: StationarySection,
    #[serde(default)]
    pub converge: Option<ConvergeSection>,
    #[serde(default)]
    pub outputs: OutputSection,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub p: u32,
    pub n: u32,
    #[serde(alias = "N")]
    pub resolution: u32,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    /// Level table `radius exponent -> J(p^r)`; JSON keys are the exponents
    /// as strings.
    Table {
        levels: BTreeMap<String, f64>,
        #[serde(default)]
        tail_tol: Option<f64>,
    },
    UniformBall {
        radius_exp: i32,
        #[serde(default)]
        tail_tol: Option<f64>,
    },
    ExpLandscape {
        gamma: f64,
        #[serde(default)]
        tail_tol: Option<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum PolynomialConfig {
    Named(String),
    Coeffs { coeffs: Vec<f64> },
}

fn default_alpha_plus() -> f64 {
    0.75
}
fn default_alpha_minus() -> f64 {
    -0.75
}
fn default_delta() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionConfig {
    pub f: PolynomialConfig,
    pub lambda: f64,
    #[serde(default = "default_alpha_minus")]
    pub alpha_minus: f64,
    #[serde(default = "default_alpha_plus")]
    pub alpha_plus: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// With `banded = false` only the structural zero/slope hypotheses are
    /// enforced and the band machinery (stationary solver, envelopes) is
    /// unavailable; allows `lambda = 0`.
    #[serde(default = "default_true")]
    pub banded: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub pattern: Option<Vec<PatternEntry>>,
    #[serde(default)]
    pub profile: Option<ProfileConfig>,
    #[serde(default)]
    pub snapshot: Option<PathBuf>,
}

/// A pattern member: a canonical ordinal or a digit string (`2N` base-p
/// digits per coordinate from position `-N` upward, coordinates separated
/// by commas).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum PatternEntry {
    Ordinal(u64),
    Digits(String),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant {
        value: f64,
    },
    /// `inside` on the ball of radius `p^radius_exp` at the origin,
    /// `outside` elsewhere.
    NormStep {
        radius_exp: i32,
        inside: f64,
        outside: f64,
    },
    /// Step table of the distance to the origin.
    NormTable {
        thresholds: Vec<(i32, f64)>,
        #[serde(default)]
        far: f64,
    },
    /// Values over the grid at resolution `scale`, canonical order.
    Digit {
        scale: u32,
        values: Vec<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub method: MethodConfig,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default)]
    pub contractive: bool,
}

fn default_record_every() -> usize {
    1
}
fn default_picard_tol() -> f64 {
    1e-12
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    ExplicitEuler,
    Rk4,
    PicardMild,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySection {
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_h() -> f64 {
    0.0625
}
fn default_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    1_000_000
}

impl Default for StationarySection {
    fn default() -> Self {
        StationarySection {
            h: default_h(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    pub n_list: Vec<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_outdir")]
    pub directory: PathBuf,
}

fn default_outdir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: default_outdir(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn grid_params(&self) -> anyhow::Result<GridParams> {
        Ok(GridParams::new(
            self.grid.p,
            self.grid.n,
            self.grid.resolution,
        )?)
    }

    /// Normalized kernel per the config.
    pub fn kernel(&self, params: &GridParams) -> anyhow::Result<RadialKernel> {
        let (raw, tail_tol) = match &self.kernel {
            KernelConfig::Table { levels, tail_tol } => {
                let mut parsed = BTreeMap::new();
                for (key, &value) in levels {
                    let r: i32 = key
                        .parse()
                        .map_err(|_| anyhow!("kernel level key {key:?} is not an integer"))?;
                    parsed.insert(r, value);
                }
                (RadialKernel::table(parsed)?, *tail_tol)
            }
            KernelConfig::UniformBall {
                radius_exp,
                tail_tol,
            } => (RadialKernel::uniform_ball(*radius_exp), *tail_tol),
            KernelConfig::ExpLandscape { gamma, tail_tol } => {
                (RadialKernel::exp_landscape(*gamma), *tail_tol)
            }
        };
        let raw = match tail_tol {
            Some(tol) => raw.with_tail_tol(tol),
            None => raw,
        };
        Ok(raw.normalize(params)?)
    }

    pub fn polynomial(&self) -> anyhow::Result<Polynomial> {
        match &self.reaction.f {
            PolynomialConfig::Named(name) if name == "cubic" => Ok(Polynomial::cubic()),
            PolynomialConfig::Named(other) => bail!("unknown reaction name {other:?}"),
            PolynomialConfig::Coeffs { coeffs } => Ok(Polynomial::new(coeffs.clone())),
        }
    }

    pub fn reaction(&self) -> anyhow::Result<Reaction> {
        let f = self.polynomial()?;
        let rx = if self.reaction.banded {
            Reaction::new(
                f,
                self.reaction.lambda,
                self.reaction.alpha_minus,
                self.reaction.alpha_plus,
                self.reaction.delta,
            )?
        } else {
            Reaction::unbanded(f, self.reaction.lambda)?
        };
        Ok(rx)
    }

    pub fn integrator(&self) -> anyhow::Result<IntegratorConfig> {
        let section = self
            .integrator
            .as_ref()
            .ok_or_else(|| anyhow!("config is missing the \"integrator\" section"))?;
        let method = match section.method {
            MethodConfig::ExplicitEuler => Method::ExplicitEuler,
            MethodConfig::Rk4 => Method::Rk4,
            MethodConfig::PicardMild => Method::PicardMild,
        };
        let mut cfg = IntegratorConfig::new(method, section.dt, section.t_end)
            .with_record_every(section.record_every)
            .with_picard_tol(section.picard_tol);
        if section.contractive {
            cfg = cfg.contractive();
        }
        Ok(cfg)
    }

    pub fn pattern(&self, params: GridParams) -> anyhow::Result<PatternSet> {
        let entries = self
            .initial
            .as_ref()
            .and_then(|i| i.pattern.as_ref())
            .ok_or_else(|| anyhow!("config is missing \"initial.pattern\""))?;
        let mut ordinals = Vec::with_capacity(entries.len());
        for entry in entries {
            match entry {
                PatternEntry::Ordinal(o) => ordinals.push(*o),
                PatternEntry::Digits(s) => ordinals.push(parse_digit_string(s, params)?),
            }
        }
        Ok(PatternSet::new(params, ordinals)?)
    }

    pub fn profile(&self, params: GridParams) -> anyhow::Result<Profile> {
        let section = self
            .initial
            .as_ref()
            .and_then(|i| i.profile.as_ref())
            .ok_or_else(|| anyhow!("config is missing \"initial.profile\""))?;
        Ok(match section {
            ProfileConfig::Constant { value } => Profile::Constant(*value),
            ProfileConfig::NormStep {
                radius_exp,
                inside,
                outside,
            } => Profile::norm_step(params, *radius_exp, *inside, *outside),
            ProfileConfig::NormTable { thresholds, far } => Profile::NormRule {
                center: GridIndex::zero(params),
                thresholds: thresholds.clone(),
                far_value: *far,
            },
            ProfileConfig::Digit { scale, values } => Profile::DigitRule {
                scale: *scale,
                values: values.clone(),
            },
        })
    }

    /// Initial state for a simulation: a pattern two-level profile, a
    /// sampled profile rule, or a snapshot file.
    pub fn initial_state(&self, params: GridParams, rx: &Reaction) -> anyhow::Result<State> {
        let initial = self
            .initial
            .as_ref()
            .ok_or_else(|| anyhow!("config is missing the \"initial\" section"))?;
        let given = [
            initial.pattern.is_some(),
            initial.profile.is_some(),
            initial.snapshot.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if given != 1 {
            bail!("\"initial\" must give exactly one of pattern, profile, snapshot");
        }
        if initial.pattern.is_some() {
            let pattern = self.pattern(params)?;
            return Ok(padr_core::stationary::two_level_profile(&pattern, rx)?);
        }
        if initial.profile.is_some() {
            let profile = self.profile(params)?;
            return Ok(padr_core::approx::project(&profile, params)?);
        }
        let path = initial.snapshot.as_ref().expect("checked above");
        let (stored_params, state) = padr_core::io::read_snapshot(path)?;
        if stored_params != params {
            bail!("snapshot grid {stored_params:?} does not match configured grid {params:?}");
        }
        Ok(state)
    }
}

/// Digit-string pattern entry: `2N` base-p digits per coordinate from
/// position `-N` upward, coordinates separated by commas.
fn parse_digit_string(s: &str, params: GridParams) -> anyhow::Result<u64> {
    let coords: Vec<&str> = s.split(',').collect();
    if coords.len() != params.n as usize {
        bail!(
            "digit string {s:?} has {} coordinates, grid has {}",
            coords.len(),
            params.n
        );
    }
    let slots = params.digits_per_coord() as usize;
    let mut digit_vecs = Vec::with_capacity(coords.len());
    for part in coords {
        if part.len() != slots {
            bail!("digit string {part:?} must have exactly {slots} digits");
        }
        let mut digits = Vec::with_capacity(slots);
        for ch in part.chars() {
            let d = ch
                .to_digit(10)
                .ok_or_else(|| anyhow!("non-digit character in {part:?}"))?;
            if d >= params.p {
                bail!("digit {d} out of range for p = {}", params.p);
            }
            digits.push(d);
        }
        digit_vecs.push(digits);
    }
    Ok(GridIndex::from_digits(params, &digit_vecs)?.ordinal())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_config() {
        let text = r#"{
            "grid": {"p": 2, "n": 1, "resolution": 1},
            "kernel": {"family": "table", "levels": {"0": 1.0, "1": 0.5}},
            "reaction": {"f": "cubic", "lambda": 6.0}
        }"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        let params = cfg.grid_params().unwrap();
        assert_eq!(params.num_points(), 4);
        let kernel = cfg.kernel(&params).unwrap();
        assert!((kernel.total_mass(&params).unwrap() - 1.0).abs() < 1e-12);
        let rx = cfg.reaction().unwrap();
        assert!(rx.bands().is_some());
    }

    #[test]
    fn digit_string_patterns() {
        let params = GridParams::new(2, 1, 1).unwrap();
        // "00" = 0, "01" = 1 (digit at position 0), "10" = 1/2
        assert_eq!(parse_digit_string("00", params).unwrap(), 0);
        assert_eq!(parse_digit_string("01", params).unwrap(), 2);
        assert_eq!(parse_digit_string("10", params).unwrap(), 1);
        assert!(parse_digit_string("2", params).is_err());
        assert!(parse_digit_string("21", params).is_err());
    }
}
