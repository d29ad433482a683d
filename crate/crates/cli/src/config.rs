use anyhow::{bail, Context, Result};
use hypbq_core::duhamel::{Duhamel, ForcingSet, Profile};
use hypbq_core::geometry::{build_grid_with, curl_adjoint, Grid, ScalarField, State};
use hypbq_core::periodic::PeriodicConfig;
use hypbq_core::picard::{ProblemData, SolverConfig};
use hypbq_core::semigroup::{SemigroupConfig, VerifyOptions};
use hypbq_core::Exec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManifoldSection {
    pub d: usize,
    pub tau_max: f64,
    pub n_tau: usize,
    /// 32 in 2-d, 1 (radial) in 3-d
    pub n_omega: Option<usize>,
    pub exec: Exec,
}

impl Default for ManifoldSection {
    fn default() -> Self {
        ManifoldSection { d: 2, tau_max: 6.0, n_tau: 64, n_omega: None, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemigroupSection {
    #[serde(rename = "C")]
    pub c: f64,
    /// (d-1)²/4 when absent
    pub delta_d: Option<f64>,
    pub cn_steps_per_unit_time: f64,
    pub theta_scheme: f64,
}

impl Default for SemigroupSection {
    fn default() -> Self {
        SemigroupSection { c: 1.0, delta_d: None, cn_steps_per_unit_time: 64.0, theta_scheme: 0.5 }
    }
}

/// Initial temperature and stream function (velocity = curl* ψ), evaluated
/// at t = 0.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub theta: Vec<Profile>,
    pub stream: Vec<Profile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection { seed: 1, output_dir: PathBuf::from("hypbq-out") }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsSource {
    Theory,
    Fitted,
}

/// Constants used by the smallness checks of `stability` and `periodic`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmallnessSection {
    pub constants: ConstantsSource,
    pub fit_samples: usize,
}

impl Default for SmallnessSection {
    fn default() -> Self {
        SmallnessSection { constants: ConstantsSource::Theory, fit_samples: 4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    /// sup amplitude of the random perturbation
    pub perturbation_amplitude: f64,
    /// also run the half-size perturbation
    pub halving: bool,
}

impl Default for StabilitySection {
    fn default() -> Self {
        StabilitySection { perturbation_amplitude: 1e-3, halving: true }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub manifold: ManifoldSection,
    pub semigroup: SemigroupSection,
    pub solver: SolverConfig,
    pub forcing: ForcingSet,
    pub initial: InitialSection,
    pub experiment: ExperimentSection,
    pub smallness: SmallnessSection,
    pub stability: StabilitySection,
    pub periodic: PeriodicConfig,
    pub verify: VerifyOptions,
}

/// Parses `key=value`; the value is read as a TOML literal, else as a string.
fn parse_override(s: &str) -> Result<(Vec<String>, toml::Value)> {
    let (k, v) = s.split_once('=').with_context(|| format!("override `{s}` is not key=value"))?;
    let path: Vec<String> = k.trim().split('.').map(str::to_owned).collect();
    if path.iter().any(String::is_empty) {
        bail!("override `{s}` has an empty key segment");
    }
    let v = v.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {v}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(v.to_owned()));
    Ok((path, value))
}

pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (path, value) = parse_override(o)?;
        let (last, parents) = path.split_last().unwrap();
        let mut cur = &mut *table;
        for seg in parents {
            let next = cur.entry(seg.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cur = match next {
                toml::Value::Table(t) => t,
                _ => bail!("override `{o}`: `{seg}` is not a section"),
            };
        }
        cur.insert(last.clone(), value);
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_table(table: toml::Table) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| anyhow::anyhow!("invalid config: {e}"))?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str::<toml::Table>(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        apply_overrides(&mut table, overrides)?;
        Self::from_table(table)
    }

    fn resolve(&mut self) {
        let d = self.manifold.d;
        self.manifold.n_omega.get_or_insert(if d == 3 { 1 } else { 32 });
        let dm1 = d as f64 - 1.0;
        self.semigroup.delta_d.get_or_insert(0.25 * dm1 * dm1);
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.semigroup_config().validate().context("semigroup")?;
        self.solver.validate(self.manifold.d).context("solver")?;
        self.forcing.validate().context("forcing")?;
        if !(self.stability.perturbation_amplitude >= 0.0) {
            bail!("stability.perturbation_amplitude must be >= 0");
        }
        if self.smallness.fit_samples == 0 {
            bail!("smallness.fit_samples must be >= 1");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let m = &self.manifold;
        build_grid_with(m.d, m.tau_max, m.n_tau, m.n_omega.unwrap_or(1), m.exec).context("manifold")
    }

    pub fn semigroup_config(&self) -> SemigroupConfig {
        let s = &self.semigroup;
        SemigroupConfig {
            c: s.c,
            delta_d: s.delta_d.unwrap_or(0.25),
            cn_steps_per_unit_time: s.cn_steps_per_unit_time,
            theta_scheme: s.theta_scheme,
        }
    }

    pub fn duhamel(&self, g: &Grid) -> Result<Duhamel> {
        Ok(Duhamel::new(g, self.semigroup_config(), self.solver.dt)?)
    }

    pub fn initial_state(&self, g: &Grid) -> State {
        let eval = |ps: &[Profile]| ScalarField::from_fn(g, |t, p| ps.iter().map(|q| q.value(t, p, 0.0)).sum());
        let theta = eval(&self.initial.theta);
        let u = curl_adjoint(&eval(&self.initial.stream));
        State { u, theta, t: 0.0 }
    }

    pub fn problem(&self, g: &Grid) -> ProblemData {
        ProblemData { x0: self.initial_state(g), forcing: self.forcing.clone() }
    }

    pub fn output_dir(&self, out: Option<&Path>) -> PathBuf {
        out.map(Path::to_path_buf).unwrap_or_else(|| self.experiment.output_dir.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_literals() {
        let mut t = toml::Table::new();
        apply_overrides(
            &mut t,
            &["solver.rho=0.05".into(), "manifold.exec=sequential".into(), "a.b.c = [1, 2]".into()],
        )
        .unwrap();
        assert_eq!(t["solver"]["rho"].as_float(), Some(0.05));
        assert_eq!(t["manifold"]["exec"].as_str(), Some("sequential"));
        assert_eq!(t["a"]["b"]["c"].as_array().unwrap().len(), 2);
        assert!(apply_overrides(&mut t, &["nokey".into()]).is_err());
        assert!(apply_overrides(&mut t, &["solver.rho.x=1".into()]).is_err());
    }

    #[test]
    fn unknown_keys_are_named() {
        let mut t = toml::Table::new();
        apply_overrides(&mut t, &["solver.rhoo=0.1".into()]).unwrap();
        let e = ExperimentConfig::from_table(t).unwrap_err().to_string();
        assert!(e.contains("rhoo"), "{e}");
    }

    #[test]
    fn defaults_resolve_per_dimension() {
        let mut t = toml::Table::new();
        apply_overrides(&mut t, &["manifold.d=3".into(), "solver.p=4.0".into()]).unwrap();
        let c = ExperimentConfig::from_table(t).unwrap();
        assert_eq!(c.manifold.n_omega, Some(1));
        assert_eq!(c.semigroup.delta_d, Some(1.0));
        let c = ExperimentConfig::from_table(toml::Table::new()).unwrap();
        assert_eq!(c.manifold.n_omega, Some(32));
        assert_eq!(c.semigroup.delta_d, Some(0.25));
    }
}
