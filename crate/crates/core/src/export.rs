//! Plot-ready output: CSV tables and JSON reports with fixed field order and
//! floats at 12 significant digits.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::amplitude::{AmplitudeMatrix, Normalization, OamWindow};
use crate::engineering::{EngineeredSource, Infeasibility};
use crate::entanglement::MesReport;
use crate::mode_math::{PumpProfile, PumpSpec};
use crate::phase_matching::{CrystalProfile, PmfSample};
use crate::Result;

/// `x` in scientific notation with 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

/// `x` rounded to 12 significant digits, for JSON output.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        fmt_float(x).parse().unwrap_or(x)
    } else {
        x
    }
}

fn round_all(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(round12).collect()
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn spectrum_csv(m: &AmplitudeMatrix) -> String {
    let probs = m.probabilities();
    let mut s = String::from("ell_s,ell_i,re,im,prob\n");
    for ((ls, li, c), p) in m.iter().zip(probs) {
        let _ = writeln!(s, "{ls},{li},{},{},{}", fmt_float(c.re), fmt_float(c.im), fmt_float(p));
    }
    s
}

#[derive(Serialize)]
struct SpectrumEntry {
    ell_s: i32,
    ell_i: i32,
    re: f64,
    im: f64,
    prob: f64,
}

#[derive(Serialize)]
struct SpectrumDoc {
    window: OamWindow,
    normalization: Normalization,
    entries: Vec<SpectrumEntry>,
}

pub fn spectrum_json(m: &AmplitudeMatrix) -> Result<String> {
    let probs = m.probabilities();
    let entries = m
        .iter()
        .zip(probs)
        .map(|((ell_s, ell_i, c), p)| SpectrumEntry {
            ell_s,
            ell_i,
            re: round12(c.re),
            im: round12(c.im),
            prob: round12(p),
        })
        .collect();
    to_json(&SpectrumDoc {
        window: m.window(),
        normalization: m.normalization(),
        entries,
    })
}

#[derive(Serialize)]
struct SchmidtDoc {
    lambdas: Vec<f64>,
    #[serde(rename = "K")]
    k: f64,
    r: usize,
    is_mes: bool,
    deviations: Vec<f64>,
}

impl From<&MesReport> for SchmidtDoc {
    fn from(r: &MesReport) -> Self {
        SchmidtDoc {
            lambdas: round_all(&r.lambdas),
            k: round12(r.k),
            r: r.r,
            is_mes: r.is_mes,
            deviations: round_all(&r.deviations),
        }
    }
}

pub fn schmidt_json(r: &MesReport) -> Result<String> {
    to_json(&SchmidtDoc::from(r))
}

pub fn pmf_csv(samples: &[PmfSample]) -> String {
    let mut s = String::from("dk_halfL,re,im,abs\n");
    for p in samples {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_float(p.dk_half_l),
            fmt_float(p.value.re),
            fmt_float(p.value.im),
            fmt_float(p.value.norm())
        );
    }
    s
}

pub fn pump_profile_csv(p: &PumpProfile) -> String {
    let n = p.coords.len();
    let mut s = String::from("x,y,re,im,intensity,phase\n");
    for iy in 0..n {
        for ix in 0..n {
            let k = iy * n + ix;
            let f = p.field[k];
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                fmt_float(p.coords[ix]),
                fmt_float(p.coords[iy]),
                fmt_float(f.re),
                fmt_float(f.im),
                fmt_float(p.intensity[k]),
                fmt_float(p.phase[k])
            );
        }
    }
    s
}

#[derive(Serialize)]
struct PumpTermDoc {
    l: i32,
    re: f64,
    im: f64,
    abs: f64,
    phase: f64,
}

fn pump_terms(p: &PumpSpec) -> Vec<PumpTermDoc> {
    p.terms()
        .iter()
        .map(|(&l, a)| PumpTermDoc {
            l,
            re: round12(a.re),
            im: round12(a.im),
            abs: round12(a.norm()),
            phase: round12(a.arg()),
        })
        .collect()
}

#[derive(Serialize)]
struct ModeDoc {
    ell_s: i32,
    ell_i: i32,
    target_re: f64,
    target_im: f64,
    re: f64,
    im: f64,
    prob: f64,
    residual: f64,
}

#[derive(Serialize)]
struct EngineerDoc {
    feasible: bool,
    d: usize,
    a: Vec<PumpTermDoc>,
    w_p: f64,
    c: Vec<f64>,
    sigma: f64,
    crystal_residual: f64,
    #[serde(rename = "K")]
    k: f64,
    is_mes: bool,
    fidelity: f64,
    schmidt: SchmidtDoc,
    modes: Vec<ModeDoc>,
}

fn complex_parts(c: Complex64) -> (f64, f64) {
    (round12(c.re), round12(c.im))
}

pub fn engineer_report_json(src: &EngineeredSource) -> Result<String> {
    let modes = src
        .diagnostics
        .iter()
        .map(|m| {
            let (target_re, target_im) = complex_parts(m.target);
            let (re, im) = complex_parts(m.achieved);
            ModeDoc {
                ell_s: m.ell_s,
                ell_i: m.ell_i,
                target_re,
                target_im,
                re,
                im,
                prob: round12(m.probability),
                residual: round12(m.residual()),
            }
        })
        .collect();
    to_json(&EngineerDoc {
        feasible: true,
        d: src.target.d(),
        a: pump_terms(&src.pump),
        w_p: round12(src.pump.w_p()),
        c: round_all(&src.crystal_solution.coeffs),
        sigma: round12(match &src.crystal.profile {
            CrystalProfile::CosineSeries { sigma, .. } => *sigma,
            _ => src.crystal.length / 4.0,
        }),
        crystal_residual: round12(src.crystal_solution.residual),
        k: round12(src.schmidt.k),
        is_mes: src.schmidt.is_mes,
        fidelity: round12(src.fidelity),
        schmidt: SchmidtDoc::from(&src.schmidt),
        modes,
    })
}

#[derive(Serialize)]
struct InfeasibleDoc {
    feasible: bool,
    reason: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    clashes: Vec<crate::engineering::Clash>,
}

pub fn infeasible_report_json(reason: &Infeasibility) -> Result<String> {
    let clashes = match reason {
        Infeasibility::RmnClash(c) => c.clone(),
        _ => Vec::new(),
    };
    to_json(&InfeasibleDoc {
        feasible: false,
        reason: reason.to_string(),
        clashes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_twelve_significant_digits() {
        assert_eq!(fmt_float(1.0), "1.00000000000e0");
        assert_eq!(fmt_float(-0.0123456789012345), "-1.23456789012e-2");
        assert_eq!(round12(0.1 + 0.2), 0.3);
        assert!(round12(f64::NAN).is_nan());
    }

    #[test]
    fn spectrum_tables_have_fixed_layout() {
        let w = OamWindow::symmetric(1);
        let mut e = vec![Complex64::new(0.0, 0.0); 9];
        e[2] = Complex64::new(0.6, 0.0);
        e[6] = Complex64::new(0.0, 0.8);
        let m = AmplitudeMatrix::from_entries(w, e, Normalization::UnitTotal).unwrap();
        let csv = spectrum_csv(&m);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "ell_s,ell_i,re,im,prob");
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[3], "-1,1,6.00000000000e-1,0.00000000000e0,3.60000000000e-1");
        let json: serde_json::Value = serde_json::from_str(&spectrum_json(&m).unwrap()).unwrap();
        assert_eq!(json["window"]["min"], -1);
        assert_eq!(json["entries"][6]["prob"], 0.64);
        assert_eq!(spectrum_json(&m).unwrap(), spectrum_json(&m).unwrap());
    }

    #[test]
    fn schmidt_report_field_order() {
        let r = MesReport {
            lambdas: vec![0.6, 0.8],
            k: 1.8,
            r: 2,
            is_mes: false,
            deviations: vec![0.1, -0.1],
        };
        let s = schmidt_json(&r).unwrap();
        let keys: Vec<usize> = ["lambdas", "\"K\"", "\"r\"", "is_mes", "deviations"]
            .iter()
            .map(|k| s.find(k).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }
}
