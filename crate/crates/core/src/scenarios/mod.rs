//! Named experiment configurations, truncation control, sweeps and export.
//!
//! Configurations are TOML documents with `[physics]`, `[numerics]`,
//! `[resonance]` and `[sweep]` tables. The builtin set ships as data files in
//! the crate's `scenarios/` directory.

mod config;
mod runner;

pub use config::{
    EtaRule, EtaSpec, ModelKind, ModelParams, Numerics, Physics, ResonanceBlock, ScenarioConfig, SweepBlock,
    SweepOutput, DEFAULT_ESCALATIONS, DEFAULT_TAIL_TOLERANCE, ESCALATION_STEP,
};
pub use runner::{
    dressed_spectrum, export, resonance_scan, run, spectrum, sweep, trajectory_header, write_spectrum_csv,
    write_trajectory_csv, RunOutcome, SpectrumRow, SweepRow, SweepTable, VERSION,
};

use crate::error::{Error, Result};

const BUILTINS: &[(&str, &str)] = &[
    ("fig1a", include_str!("../../scenarios/fig1a.toml")),
    ("fig1b", include_str!("../../scenarios/fig1b.toml")),
    ("fig2", include_str!("../../scenarios/fig2.toml")),
    ("fig3a", include_str!("../../scenarios/fig3a.toml")),
    ("fig3b", include_str!("../../scenarios/fig3b.toml")),
    ("fig4", include_str!("../../scenarios/fig4.toml")),
    ("fig5a", include_str!("../../scenarios/fig5a.toml")),
    ("fig5b", include_str!("../../scenarios/fig5b.toml")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let src = builtin_source(name).ok_or_else(|| {
        let known: Vec<_> = builtin_names().collect();
        Error::Config(format!("unknown builtin `{name}` (known: {})", known.join(", ")))
    })?;
    ScenarioConfig::from_toml(src)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_validate() {
        for name in builtin_names() {
            let cfg = builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.name, name);
            cfg.resolved(cfg.n_max()).unwrap();
        }
        assert!(builtin("fig9").is_err());
    }

    #[test]
    fn builtin_frequencies() {
        assert_eq!(builtin("fig2").unwrap().eta().unwrap(), 2.0043);
        assert_eq!(builtin("fig4").unwrap().eta().unwrap(), 2.0067);
        let b = builtin("fig5b").unwrap();
        let (zeta, chi) = (0.65, 1e-2 * 0.7 / 8.0);
        let expected = 2.0 * zeta * (1.0 + 4.0 * (chi / zeta) * (chi / zeta));
        assert!((b.eta().unwrap() - expected).abs() < 1e-14);
    }
}
