//! Scenario documents: one JSON object describing setup, pump, crystal,
//! window, subspace dimension, quadrature and output settings.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplitude::{OamWindow, QuadratureConfig};
use crate::entanglement::check_dimension;
use crate::mode_math::PumpSpec;
use crate::phase_matching::{CrystalSpec, SetupParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetupConfig {
    /// Experimental parameters: 405 nm, `n_p = 1.84`, 25/33 µm waists, 15 mm crystal.
    Reference,
    /// Same pump and crystal with `k_p = L/w_p^2` and `w_s = w_i = √2 w_p`.
    ReferenceIdealized,
    Custom(SetupParams),
}

impl SetupConfig {
    pub fn resolve(&self) -> Result<SetupParams> {
        let s = match self {
            SetupConfig::Reference => SetupParams::reference(),
            SetupConfig::ReferenceIdealized => SetupParams::reference_idealized(),
            SetupConfig::Custom(p) => *p,
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpTerm {
    pub l: i32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpConfig {
    Gaussian,
    Superposition {
        terms: Vec<PumpTerm>,
        /// Defaults to the setup's pump waist.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w_p: Option<f64>,
    },
}

impl PumpConfig {
    pub fn from_spec(pump: &PumpSpec) -> Self {
        PumpConfig::Superposition {
            terms: pump
                .terms()
                .iter()
                .map(|(&l, a)| PumpTerm { l, re: a.re, im: a.im })
                .collect(),
            w_p: Some(pump.w_p()),
        }
    }

    pub fn resolve(&self, setup: &SetupParams) -> Result<PumpSpec> {
        match self {
            PumpConfig::Gaussian => PumpSpec::gaussian(setup.w_p),
            PumpConfig::Superposition { terms, w_p } => PumpSpec::new(
                terms.iter().map(|t| (t.l, Complex64::new(t.re, t.im))),
                w_p.unwrap_or(setup.w_p),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrystalConfig {
    Periodic,
    Cosine {
        c: Vec<f64>,
        /// Defaults to `L/4`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    Poling {
        signs: Vec<i8>,
        domain_width: f64,
    },
}

impl CrystalConfig {
    pub fn resolve(&self, setup: &SetupParams) -> Result<CrystalSpec> {
        let l = setup.length;
        match self {
            CrystalConfig::Periodic => CrystalSpec::periodic(l),
            CrystalConfig::Cosine { c, sigma } => CrystalSpec::cosine_with_sigma(l, c.clone(), sigma.unwrap_or(l / 4.0)),
            CrystalConfig::Poling { signs, domain_width } => CrystalSpec::poling(l, signs.clone(), *domain_width),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            format: OutputFormat::Csv,
        }
    }
}

fn default_d() -> usize {
    3
}

fn default_window() -> OamWindow {
    OamWindow::symmetric(3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "reference_setup")]
    pub setup: SetupConfig,
    #[serde(default = "gaussian_pump")]
    pub pump: PumpConfig,
    #[serde(default = "periodic_crystal")]
    pub crystal: CrystalConfig,
    #[serde(default = "default_window")]
    pub window: OamWindow,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn reference_setup() -> SetupConfig {
    SetupConfig::Reference
}

fn gaussian_pump() -> PumpConfig {
    PumpConfig::Gaussian
}

fn periodic_crystal() -> CrystalConfig {
    CrystalConfig::Periodic
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            setup: reference_setup(),
            pump: gaussian_pump(),
            crystal: periodic_crystal(),
            window: default_window(),
            d: default_d(),
            quadrature: QuadratureConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub setup: SetupParams,
    pub pump: PumpSpec,
    pub crystal: CrystalSpec,
    pub window: OamWindow,
    pub d: usize,
    pub quadrature: QuadratureConfig,
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let setup = self.setup.resolve()?;
        let pump = self.pump.resolve(&setup)?;
        let crystal = self.crystal.resolve(&setup)?;
        let window = OamWindow::new(self.window.min, self.window.max)?;
        check_dimension(self.d)?;
        let h = ((self.d - 1) / 2) as i32;
        if !(window.contains(-h) && window.contains(h)) {
            return Err(Error::invalid(
                "window",
                format!("[{}, {}] does not cover the {}x{} subspace", window.min, window.max, self.d, self.d),
            ));
        }
        self.quadrature.validate()?;
        if self.output.dir.is_empty() {
            return Err(Error::invalid("output.dir", "must not be empty"));
        }
        Ok(Scenario {
            setup,
            pump,
            crystal,
            window,
            d: self.d,
            quadrature: self.quadrature,
            output: self.output.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_matching::CrystalProfile;

    #[test]
    fn defaults_describe_reference_setup() {
        let s = ScenarioConfig::from_json("{}").unwrap().resolve().unwrap();
        assert_eq!(s.setup, SetupParams::reference());
        assert_eq!(s.pump, PumpSpec::gaussian(s.setup.w_p).unwrap());
        assert_eq!(s.crystal.profile, CrystalProfile::PeriodicSinc);
        assert_eq!(s.d, 3);
    }

    #[test]
    fn full_document_round_trips() {
        let cfg = ScenarioConfig {
            setup: SetupConfig::Custom(SetupParams::reference_idealized()),
            pump: PumpConfig::Superposition {
                terms: vec![
                    PumpTerm { l: -2, re: 2.46, im: 0.0 },
                    PumpTerm { l: 0, re: 1.73, im: 0.1 },
                ],
                w_p: None,
            },
            crystal: CrystalConfig::Cosine {
                c: vec![1.0, -0.828],
                sigma: Some(3.75e-3),
            },
            window: OamWindow::symmetric(2),
            d: 5,
            quadrature: QuadratureConfig::default(),
            output: OutputConfig {
                dir: "results".into(),
                format: OutputFormat::Json,
            },
        };
        let text = cfg.to_json().unwrap();
        let back = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.resolve().unwrap(), cfg.resolve().unwrap());
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn preset_and_tagged_forms_parse() {
        let cfg = ScenarioConfig::from_json(
            r#"{"setup":"reference_idealized","pump":{"superposition":{"terms":[{"l":1,"re":1}]}},
                "crystal":{"poling":{"signs":[1,-1,1,-1],"domain_width":3.75e-3}}}"#,
        )
        .unwrap();
        let s = cfg.resolve().unwrap();
        assert_eq!(s.pump.support().collect::<Vec<_>>(), vec![1]);
        assert!(matches!(s.crystal.profile, CrystalProfile::DiscretePoling { .. }));
    }

    fn field_of(text: &str) -> String {
        match ScenarioConfig::from_json(text).and_then(|c| c.resolve()) {
            Err(Error::InvalidParameter { field, .. }) => field,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_names_the_field() {
        let mut setup = serde_json::to_value(SetupParams::reference()).unwrap();
        setup["w_p"] = serde_json::json!(-1e-6);
        let text = serde_json::json!({ "setup": { "custom": setup } }).to_string();
        assert_eq!(field_of(&text), "setup.w_p");
        assert_eq!(field_of(r#"{"pump":{"superposition":{"terms":[]}}}"#), "pump.terms");
        assert_eq!(field_of(r#"{"crystal":{"cosine":{"c":[]}}}"#), "crystal.c");
        assert_eq!(field_of(r#"{"d":4}"#), "d");
        assert_eq!(field_of(r#"{"d":5,"window":{"min":-1,"max":1}}"#), "window");
        assert_eq!(
            field_of(r#"{"quadrature":{"radial_nodes":64,"azimuthal_nodes":256,"q_max_factor":8,"rel_tol":0.1}}"#),
            "quadrature.rel_tol"
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ScenarioConfig::from_json("{\n  \"windw\": {}\n}").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("windw") && msg.contains("line 2"), "{msg}");
        assert!(ScenarioConfig::from_json(r#"{"output":{"dir":"x","format":"csv","extra":1}}"#).is_err());
    }
}
