//! Step-width and decay flags, resolved to concrete values.

use std::fmt;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use npgrover_core::analytics::{critical_step_width, decay_from_rho};
use npgrover_core::instances::DEFAULT_ENUMERATION_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GammaRuleArg {
    Fixed,
    /// `2^(−k)`
    PowerK,
    /// `γ_c`
    Crit,
}

/// Oracle flags of one simulation. After [`validate_config`] both `gamma` and
/// `r` are set; `rho` keeps whatever the user gave (infinite = no decay).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n: usize,
    pub k: u32,
    pub gamma_rule: Option<GammaRuleArg>,
    pub gamma: Option<f64>,
    #[serde(with = "rho_serde")]
    pub rho: Option<f64>,
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlagError(pub String);

impl fmt::Display for FlagError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for FlagError {}

fn flag_err<T>(msg: impl Into<String>) -> Result<T, FlagError> {
    Err(FlagError(msg.into()))
}

pub fn validate_config(c: &OracleConfig) -> Result<OracleConfig, FlagError> {
    if c.n == 0 {
        return flag_err("--n must be at least 1");
    }
    if c.n > DEFAULT_ENUMERATION_CAP {
        return flag_err(format!("n = {} exceeds the simulation cap of {DEFAULT_ENUMERATION_CAP} qubits", c.n));
    }
    if c.k == 0 {
        return flag_err("--k must be at least 1");
    }
    let rule = match (c.gamma_rule, c.gamma) {
        (Some(rule), _) => rule,
        (None, Some(_)) => GammaRuleArg::Fixed,
        (None, None) => return flag_err("one of --gamma or --gamma-rule is required"),
    };
    let resolved = match rule {
        GammaRuleArg::Fixed => None,
        GammaRuleArg::PowerK => Some((-(c.k as f64)).exp2()),
        GammaRuleArg::Crit => Some(critical_step_width(c.n, c.k)),
    };
    let gamma = match (resolved, c.gamma) {
        (None, Some(g)) => g,
        (None, None) => return flag_err("--gamma-rule fixed needs --gamma"),
        (Some(v), None) => v,
        (Some(v), Some(g)) if g == v => g,
        (Some(v), Some(g)) => {
            return flag_err(format!("--gamma {g} contradicts --gamma-rule {} (which gives {v})", rule_name(rule)))
        }
    };
    if !(gamma > 0.0 && gamma.is_finite()) {
        return flag_err(format!("--gamma must be positive and finite, got {gamma}"));
    }
    if let Some(rho) = c.rho {
        if !(rho > 0.0) {
            return flag_err(format!("--rho must be positive (or inf), got {rho}"));
        }
    }
    let implied = c.rho.map(|rho| if rho.is_infinite() { 0.0 } else { decay_from_rho(rho, gamma) });
    let r = match (c.r, implied) {
        (Some(r), Some(v)) => {
            if (r - v).abs() > 1e-9 * r.abs().max(v.abs()) {
                return flag_err(format!(
                    "--r {r} contradicts --rho {} at gamma {gamma}, which implies r = {v}",
                    fmt_rho(c.rho)
                ));
            }
            r
        }
        (Some(r), None) => r,
        (None, Some(v)) => v,
        (None, None) => 0.0,
    };
    if !(r >= 0.0 && r.is_finite()) {
        return flag_err(format!("--r must be non-negative and finite, got {r}"));
    }
    Ok(OracleConfig { n: c.n, k: c.k, gamma_rule: Some(rule), gamma: Some(gamma), rho: c.rho, r: Some(r) })
}

fn rule_name(rule: GammaRuleArg) -> &'static str {
    match rule {
        GammaRuleArg::Fixed => "fixed",
        GammaRuleArg::PowerK => "power-k",
        GammaRuleArg::Crit => "crit",
    }
}

pub fn fmt_rho(rho: Option<f64>) -> String {
    match rho {
        Some(v) if v.is_infinite() => "inf".into(),
        Some(v) => v.to_string(),
        None => "none".into(),
    }
}

/// Accepts a positive number or `inf`.
pub fn parse_rho(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "Inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|e| format!("{s:?}: {e}")),
    }
}

/// JSON has no infinity, so an infinite `ρ` is written as the string `"inf"`.
mod rho_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_infinite() => Some(Repr::Str("inf".into())).serialize(s),
            Some(x) => Some(Repr::Num(*x)).serialize(s),
            None => None::<Repr>.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Num(x)) => Ok(Some(x)),
            Some(Repr::Str(s)) => super::parse_rho(&s).map(Some).map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(n: usize, k: u32) -> OracleConfig {
        OracleConfig { n, k, gamma_rule: None, gamma: None, rho: None, r: None }
    }

    #[test]
    fn critical_rule_resolves() {
        let c = validate_config(&OracleConfig { gamma_rule: Some(GammaRuleArg::Crit), ..base(8, 12) }).unwrap();
        let log2 = c.gamma.unwrap().log2();
        assert!((log2 + 6.966_733_099).abs() < 1e-6, "{log2}");
        let c = validate_config(&OracleConfig { gamma_rule: Some(GammaRuleArg::PowerK), ..base(8, 5) }).unwrap();
        assert_eq!(c.gamma, Some(1.0 / 32.0));
    }

    #[test]
    fn rho_sets_decay() {
        let c = validate_config(&OracleConfig { gamma: Some(0.01), rho: Some(1000.0), ..base(8, 8) }).unwrap();
        assert!((c.r.unwrap() - 0.1).abs() < 1e-15);
        let c = validate_config(&OracleConfig { gamma: Some(0.01), rho: Some(f64::INFINITY), ..base(8, 8) }).unwrap();
        assert_eq!(c.r, Some(0.0));
    }

    #[test]
    fn contradictions_name_both_flags() {
        let e = validate_config(&OracleConfig { gamma: Some(0.01), rho: Some(1000.0), r: Some(0.2), ..base(8, 8) })
            .unwrap_err();
        assert!(e.0.contains("--r") && e.0.contains("--rho"), "{e}");
        let e =
            validate_config(&OracleConfig { gamma_rule: Some(GammaRuleArg::PowerK), gamma: Some(0.5), ..base(8, 8) })
                .unwrap_err();
        assert!(e.0.contains("--gamma") && e.0.contains("--gamma-rule"), "{e}");
        assert!(validate_config(&OracleConfig { gamma: Some(0.01), ..base(21, 8) }).is_err());
        assert!(validate_config(&base(8, 8)).is_err());
    }

    #[test]
    fn normalization_is_idempotent() {
        let cases = [
            OracleConfig { gamma_rule: Some(GammaRuleArg::Crit), rho: Some(300.0), ..base(10, 14) },
            OracleConfig { gamma: Some(2e-3), rho: Some(f64::INFINITY), ..base(8, 8) },
            OracleConfig { gamma_rule: Some(GammaRuleArg::PowerK), r: Some(0.05), ..base(6, 9) },
            OracleConfig { gamma: Some(0.01), rho: Some(1000.0), r: Some(0.1), ..base(8, 8) },
        ];
        for c in cases {
            let once = validate_config(&c).unwrap();
            assert_eq!(validate_config(&once).unwrap(), once);
            let json = serde_json::to_string(&once).unwrap();
            let back: OracleConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(back, once);
        }
    }
}
