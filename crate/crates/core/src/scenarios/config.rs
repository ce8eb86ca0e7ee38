use serde::{Deserialize, Serialize};

use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::hilbert::{DickeSpace, FockSpace};
use crate::models::{
    h_eff_modcav, modcav_eff_driven, modcav_lab_driven, Atoms, DickeKerrModel, DickeKerrParams,
    DrivenHamiltonian, ModCavityParams,
};
use crate::hilbert::Operator;
use crate::perturbation::{modcav_resonance_pt, PerturbativeInputs, ResonanceVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Qubits coupled to the cavity with a static Kerr term.
    DickeKerr,
    /// The same with a harmonic oscillator in place of the qubits.
    HoLimit,
    /// Modulated cavity, lab frame.
    ModcavLab,
    /// Modulated cavity, effective frame.
    ModcavEff,
}

impl ModelKind {
    pub fn is_modcav(self) -> bool {
        matches!(self, ModelKind::ModcavLab | ModelKind::ModcavEff)
    }
}

/// A modulation frequency given as a number or by a closed-form rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Value(f64),
    Rule(EtaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaRule {
    /// `2|zeta| [1 - 2 (chi/zeta)^2 - 2 (chi/zeta)^4]`.
    Resonance,
    /// `2|zeta| [1 + 4 (chi/zeta)^2]`.
    ResonanceShifted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub g: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub n_qubits: Option<usize>,
    pub k: u32,
    pub eps: f64,
    #[serde(default)]
    pub eta: Option<EtaSpec>,
    #[serde(default)]
    pub omega0: Option<f64>,
    #[serde(default)]
    pub omega1: Option<f64>,
    #[serde(default)]
    pub eps_w: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub n_max: Option<usize>,
    /// Highest collective atomic excitation kept.
    pub k_max: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub sample_stride: Option<usize>,
    pub renorm_tolerance: Option<f64>,
    /// Bound on `P_{n_max} + P_{n_max-1}` for an accepted run.
    pub tail_tolerance: Option<f64>,
    pub max_escalations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceBlock {
    pub bracket: Option<[f64; 2]>,
    pub probe_horizon: Option<f64>,
    pub coarse_points: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOutput {
    #[default]
    Spectrum,
    Dynamics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub output: SweepOutput,
    /// Number of ladder ratios `r_1..r_L` and gaps `eta_0..eta_L` reported.
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_levels() -> usize {
    4
}

impl SweepBlock {
    pub fn grid(&self) -> Result<Vec<f64>> {
        let grid = match (&self.values, self.start, self.stop, self.step) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(h)) => {
                if !(h > 0.0) || !(b >= a) {
                    return Err(Error::Config(format!("sweep range {a}..{b} step {h} is empty")));
                }
                let n = ((b - a) / h + 1e-9).floor() as usize + 1;
                (0..n).map(|i| a + h * i as f64).collect()
            }
            _ => return Err(Error::Config("sweep needs either `values` or `start`/`stop`/`step`".into())),
        };
        if grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelKind,
    pub physics: Physics,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub resonance: Option<ResonanceBlock>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
}

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_ESCALATIONS: usize = 3;
pub const ESCALATION_STEP: usize = 8;
const TARGET_SAMPLES: usize = 5000;

/// Physical model resolved from a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Dicke(DickeKerrParams),
    Modcav(ModCavityParams),
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Checks the physics against the model's preconditions.
    pub fn validate(&self) -> Result<()> {
        self.model_params()?;
        let n = &self.numerics;
        if let Some(n_max) = n.n_max {
            FockSpace::new(n_max)?;
        }
        if matches!(n.dt, Some(dt) if !(dt > 0.0)) {
            return Err(Error::invalid("numerics.dt", "must be positive"));
        }
        if matches!(n.t_end, Some(t) if !(t > 0.0)) {
            return Err(Error::invalid("numerics.t_end", "must be positive"));
        }
        if let Some(s) = &self.sweep {
            s.grid()?;
            let mut probe = self.clone();
            probe.sweep = None;
            probe.set_parameter(&s.parameter, s.grid()?[0])?;
        }
        Ok(())
    }

    fn require(v: Option<f64>, field: &'static str) -> Result<f64> {
        v.ok_or_else(|| Error::invalid(field, "required for this model"))
    }

    pub fn default_n_max(&self) -> usize {
        if self.model.is_modcav() { 40 } else { 24 }
    }

    pub fn n_max(&self) -> usize {
        self.numerics.n_max.unwrap_or_else(|| self.default_n_max())
    }

    fn modcav_base(&self, eta: f64) -> Result<ModCavityParams> {
        let p = &self.physics;
        Ok(ModCavityParams {
            omega0: Self::require(p.omega0, "physics.omega0")?,
            omega1: Self::require(p.omega1, "physics.omega1")?,
            eps_w: Self::require(p.eps_w, "physics.eps_w")?,
            k: p.k,
            eps: p.eps,
            eta,
        })
    }

    /// Modulation frequency in use, with rules evaluated.
    pub fn eta(&self) -> Result<f64> {
        match self.physics.eta {
            Some(EtaSpec::Value(v)) => Ok(v),
            Some(EtaSpec::Rule(rule)) => {
                if !self.model.is_modcav() {
                    return Err(Error::invalid("physics.eta", "frequency rules apply to modulated-cavity models"));
                }
                let base = self.modcav_base(1.0)?;
                let variant = match rule {
                    EtaRule::Resonance => ResonanceVariant::Standard,
                    EtaRule::ResonanceShifted => ResonanceVariant::Shifted,
                };
                modcav_resonance_pt(&PerturbativeInputs::from_modcav(&base, self.n_max()), variant)
            }
            None => Err(Error::invalid("physics.eta", "required")),
        }
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        self.model_params_at(self.eta()?)
    }

    pub fn model_params_at(&self, eta: f64) -> Result<ModelParams> {
        let p = &self.physics;
        let out = match self.model {
            ModelKind::DickeKerr | ModelKind::HoLimit => {
                let atoms = if self.model == ModelKind::HoLimit {
                    if p.n_qubits.is_some() {
                        return Err(Error::invalid("physics.n_qubits", "not used by the oscillator model"));
                    }
                    Atoms::Oscillator
                } else {
                    Atoms::Qubits(p.n_qubits.unwrap_or(1))
                };
                let d = DickeKerrParams {
                    omega: p.omega,
                    nu: Self::require(p.nu, "physics.nu")?,
                    g: Self::require(p.g, "physics.g")?,
                    alpha: p.alpha.unwrap_or(0.0),
                    atoms,
                    k: p.k,
                    eps: p.eps,
                    eta,
                };
                d.validate()?;
                ModelParams::Dicke(d)
            }
            ModelKind::ModcavLab | ModelKind::ModcavEff => {
                if p.nu.is_some() || p.g.is_some() || p.alpha.is_some() || p.n_qubits.is_some() {
                    return Err(Error::invalid("physics", "nu, g, alpha and n_qubits do not apply to a bare cavity"));
                }
                let m = self.modcav_base(eta)?;
                m.validate()?;
                ModelParams::Modcav(m)
            }
        };
        Ok(out)
    }

    fn dicke_space(&self, atoms: Atoms) -> Result<DickeSpace> {
        Ok(match atoms {
            Atoms::Qubits(n) => DickeSpace::qubits(n, self.numerics.k_max.unwrap_or(n.min(4)))?,
            Atoms::Oscillator => DickeSpace::oscillator(self.numerics.k_max.unwrap_or(4)),
        })
    }

    /// Driven Hamiltonian at the configured truncation and frequency `eta`.
    pub fn driven_at(&self, eta: f64, n_max: usize) -> Result<DrivenHamiltonian> {
        let fock = FockSpace::new(n_max)?;
        match self.model_params_at(eta)? {
            ModelParams::Dicke(d) => Ok(DickeKerrModel::new(d, fock, self.dicke_space(d.atoms)?)?.driven()),
            ModelParams::Modcav(m) => match self.model {
                ModelKind::ModcavLab => modcav_lab_driven(&m, &fock),
                _ => modcav_eff_driven(&m, &fock),
            },
        }
    }

    /// Static Hamiltonian whose eigenstates define the dressed basis (the
    /// effective one for a modulated cavity).
    pub fn static_hamiltonian(&self, n_max: usize) -> Result<Operator> {
        let fock = FockSpace::new(n_max)?;
        match self.model_params()? {
            ModelParams::Dicke(d) => Ok(DickeKerrModel::new(d, fock, self.dicke_space(d.atoms)?)?.h0().clone()),
            ModelParams::Modcav(m) => h_eff_modcav(&m, &fock),
        }
    }

    /// Integrator settings for a Hamiltonian with the given fast frequency.
    pub fn integrator(&self, fast_frequency: f64) -> Result<IntegratorConfig> {
        let t_end = self.numerics.t_end.ok_or_else(|| Error::invalid("numerics.t_end", "required for a run"))?;
        let dt = self.numerics.dt.unwrap_or_else(|| IntegratorConfig::max_dt(fast_frequency));
        let mut cfg = IntegratorConfig::new(dt, t_end);
        let steps = cfg.steps();
        cfg.sample_stride = self.numerics.sample_stride.unwrap_or((steps / TARGET_SAMPLES).max(1));
        if let Some(tol) = self.numerics.renorm_tolerance {
            cfg.renorm_tolerance = tol;
        }
        cfg.validate(fast_frequency)?;
        Ok(cfg)
    }

    /// Sets a physics field by name; used by sweeps.
    pub fn set_parameter(&mut self, name: &str, value: f64) -> Result<()> {
        let p = &mut self.physics;
        match name {
            "nu" => p.nu = Some(value),
            "g" => p.g = Some(value),
            "alpha" => p.alpha = Some(value),
            "eps" => p.eps = value,
            "eta" => p.eta = Some(EtaSpec::Value(value)),
            "omega1" => p.omega1 = Some(value),
            "eps_w" => p.eps_w = Some(value),
            _ => return Err(Error::Config(format!("unknown sweep parameter `{name}`"))),
        }
        Ok(())
    }

    /// Copy with every default filled in, as recorded next to the outputs.
    pub fn resolved(&self, n_max: usize) -> Result<ScenarioConfig> {
        let mut out = self.clone();
        let eta = self.eta()?;
        out.physics.eta = Some(EtaSpec::Value(eta));
        let h = self.driven_at(eta, n_max)?;
        let n = &mut out.numerics;
        n.n_max = Some(n_max);
        if !self.model.is_modcav() {
            n.k_max = Some(h.basis().dicke().map(|d| d.k_max()).unwrap_or(0));
        }
        if self.numerics.t_end.is_some() {
            let integ = self.integrator(h.fast_frequency())?;
            n.dt = Some(integ.dt);
            n.sample_stride = Some(integ.sample_stride);
            n.renorm_tolerance = Some(integ.renorm_tolerance);
        }
        n.tail_tolerance = Some(self.numerics.tail_tolerance.unwrap_or(DEFAULT_TAIL_TOLERANCE));
        n.max_escalations = Some(self.numerics.max_escalations.unwrap_or(DEFAULT_ESCALATIONS));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
model = "dicke_kerr"
[physics]
nu = 0.21
g = 0.07
alpha = 1e-5
k = 2
eps = 1e-2
eta = 2.0043
[numerics]
t_end = 100.0
"#;

    #[test]
    fn parses_and_fills_defaults() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.n_max(), 24);
        let r = cfg.resolved(24).unwrap();
        let dt = r.numerics.dt.unwrap();
        assert!((dt - IntegratorConfig::max_dt(2.0 + 2.0043)).abs() < 1e-15);
        let again = ScenarioConfig::from_toml(&r.to_toml()).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        let typo = MINIMAL.replace("alpha =", "alhpa =");
        assert!(matches!(ScenarioConfig::from_toml(&typo), Err(Error::Config(_))));
        let neg = MINIMAL.replace("eta = 2.0043", "eta = -1.0");
        assert!(matches!(ScenarioConfig::from_toml(&neg), Err(Error::InvalidParameter { field: "eta", .. })));
        let rule = MINIMAL.replace("eta = 2.0043", "eta = \"resonance\"");
        assert!(ScenarioConfig::from_toml(&rule).is_err());
    }

    #[test]
    fn step_limit_checked_at_startup() {
        let big = MINIMAL.replace("t_end = 100.0", "t_end = 100.0\ndt = 0.5");
        let cfg = ScenarioConfig::from_toml(&big).unwrap();
        let h = cfg.driven_at(cfg.eta().unwrap(), 6).unwrap();
        assert!(matches!(cfg.integrator(h.fast_frequency()), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn frequency_rule_for_modulated_cavity() {
        let text = r#"
name = "m"
model = "modcav_eff"
[physics]
omega0 = 1.0
omega1 = 5.0
eps_w = 1e-2
k = 2
eps = 1e-3
eta = "resonance"
"#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        assert!((cfg.eta().unwrap() - 2.999896).abs() < 1e-6);
        assert_eq!(cfg.n_max(), 40);
    }

    #[test]
    fn sweep_grid() {
        let s = SweepBlock { parameter: "nu".into(), values: None, start: Some(0.05), stop: Some(0.95), step: Some(0.01), output: SweepOutput::Spectrum, levels: 4 };
        let g = s.grid().unwrap();
        assert_eq!(g.len(), 91);
        assert!((g[90] - 0.95).abs() < 1e-12);
        let bad = SweepBlock { values: Some(vec![]), start: None, stop: None, step: None, ..s };
        assert!(bad.grid().is_err());
    }
}
