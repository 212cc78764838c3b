//! Longitudinal phase mismatch and phase-matching functions.
//!
//! The constant mismatch `k_p - k_s - k_i` is taken as compensated by the
//! quasi-phase-matching carrier, so `Δk_z` carries only the transverse
//! (paraxial) terms and every nonlinearity profile here is the slow envelope
//! on top of that carrier.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the wavenumbers and collection waists of a [`SetupParams`] were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetupMode {
    /// `k_p = L / w_p^2`, `k_s = k_i = k_p / 2`, `w_s = w_i = sqrt2 w_p`:
    /// equal Rayleigh ranges for all three beams.
    Idealized,
    /// All values taken as given.
    Experimental,
}

/// Physical scenario: wavelengths, wavenumbers inside the crystal, beam
/// waists and crystal length. Lengths in meters, wavenumbers in rad/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupParams {
    pub mode: SetupMode,
    pub lambda_p: f64,
    pub k_p: f64,
    pub k_s: f64,
    pub k_i: f64,
    pub w_p: f64,
    pub w_s: f64,
    pub w_i: f64,
    #[serde(rename = "L")]
    pub length: f64,
}

const IDEALIZED_RTOL: f64 = 1e-12;

impl SetupParams {
    /// Idealized degenerate setup derived from the pump waist and crystal length.
    pub fn idealized(lambda_p: f64, w_p: f64, length: f64) -> Result<Self> {
        let k_p = length / (w_p * w_p);
        let s = Self {
            mode: SetupMode::Idealized,
            lambda_p,
            k_p,
            k_s: k_p / 2.0,
            k_i: k_p / 2.0,
            w_p,
            w_s: SQRT_2 * w_p,
            w_i: SQRT_2 * w_p,
            length,
        };
        s.validate()?;
        Ok(s)
    }

    /// Degenerate experimental setup, `k_p = 2 pi n_p / lambda_p`, `k_s = k_i = k_p / 2`,
    /// both photons collected with waist `w_c`.
    pub fn degenerate(lambda_p: f64, n_p: f64, w_p: f64, w_c: f64, length: f64) -> Result<Self> {
        if !(n_p.is_finite() && n_p > 0.0) {
            return Err(Error::invalid("setup.n_p", format!("refractive index must be > 0, got {n_p}")));
        }
        let k_p = 2.0 * PI * n_p / lambda_p;
        let s = Self {
            mode: SetupMode::Experimental,
            lambda_p,
            k_p,
            k_s: k_p / 2.0,
            k_i: k_p / 2.0,
            w_p,
            w_s: w_c,
            w_i: w_c,
            length,
        };
        s.validate()?;
        Ok(s)
    }

    /// 405 nm pump with 25 µm waist in a 15 mm KTP crystal (`n_p = 1.84`),
    /// photons collected in 33 µm modes.
    pub fn reference() -> Self {
        Self::degenerate(405e-9, 1.84, 25e-6, 33e-6, 15e-3).expect("reference setup is valid")
    }

    /// Idealized counterpart of [`SetupParams::reference`].
    pub fn reference_idealized() -> Self {
        Self::idealized(405e-9, 25e-6, 15e-3).expect("reference setup is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("setup.lambda_p", self.lambda_p),
            ("setup.k_p", self.k_p),
            ("setup.k_s", self.k_s),
            ("setup.k_i", self.k_i),
            ("setup.w_p", self.w_p),
            ("setup.w_s", self.w_s),
            ("setup.w_i", self.w_i),
            ("setup.L", self.length),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be a positive finite number, got {v}")));
            }
        }
        if self.mode == SetupMode::Idealized {
            let close = |a: f64, b: f64| (a - b).abs() <= IDEALIZED_RTOL * b.abs();
            if !close(self.k_p, self.length / (self.w_p * self.w_p)) {
                return Err(Error::invalid("setup.k_p", "idealized mode requires k_p = L / w_p^2"));
            }
            if !close(self.k_s, self.k_p / 2.0) || !close(self.k_i, self.k_p / 2.0) {
                return Err(Error::invalid("setup.k_s", "idealized mode requires k_s = k_i = k_p / 2"));
            }
            if !close(self.w_s, SQRT_2 * self.w_p) || !close(self.w_i, SQRT_2 * self.w_p) {
                return Err(Error::invalid("setup.w_s", "idealized mode requires w_s = w_i = sqrt(2) w_p"));
            }
        }
        Ok(())
    }

    /// `k_s = k_i` and `w_s = w_i`: signal and idler are interchangeable.
    pub fn is_degenerate(&self) -> bool {
        self.k_s == self.k_i && self.w_s == self.w_i
    }
}

/// Residual longitudinal mismatch for transverse momenta `q_s`, `q_i`:
/// `-|q_s+q_i|^2 / 2k_p + |q_s|^2 / 2k_s + |q_i|^2 / 2k_i`.
pub fn delta_kz(q_s: [f64; 2], q_i: [f64; 2], setup: &SetupParams) -> f64 {
    let sum2 = (q_s[0] + q_i[0]).powi(2) + (q_s[1] + q_i[1]).powi(2);
    let s2 = q_s[0] * q_s[0] + q_s[1] * q_s[1];
    let i2 = q_i[0] * q_i[0] + q_i[1] * q_i[1];
    delta_kz_radial(sum2, s2, i2, setup)
}

#[inline]
pub(crate) fn delta_kz_radial(sum2: f64, s2: f64, i2: f64, setup: &SetupParams) -> f64 {
    -sum2 / (2.0 * setup.k_p) + s2 / (2.0 * setup.k_s) + i2 / (2.0 * setup.k_i)
}

/// Unnormalized `sin(x) / x`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrystalProfile {
    /// Uniform envelope of a periodically poled crystal.
    PeriodicSinc,
    /// `χ(z) = Σ c_n cos(n z / σ)`.
    CosineSeries { coeffs: Vec<f64>, sigma: f64 },
    /// Domains of equal width with orientation `signs[j]`, starting at `-L/2`.
    DiscretePoling { signs: Vec<i8>, domain_width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalSpec {
    #[serde(rename = "L")]
    pub length: f64,
    pub profile: CrystalProfile,
}

impl CrystalSpec {
    pub fn periodic(length: f64) -> Result<Self> {
        let s = Self {
            length,
            profile: CrystalProfile::PeriodicSinc,
        };
        s.validate()?;
        Ok(s)
    }

    /// Cosine series with the default scale `σ = L/4`.
    pub fn cosine(length: f64, coeffs: Vec<f64>) -> Result<Self> {
        Self::cosine_with_sigma(length, coeffs, length / 4.0)
    }

    pub fn cosine_with_sigma(length: f64, coeffs: Vec<f64>, sigma: f64) -> Result<Self> {
        let s = Self {
            length,
            profile: CrystalProfile::CosineSeries { coeffs, sigma },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn poling(length: f64, signs: Vec<i8>, domain_width: f64) -> Result<Self> {
        let s = Self {
            length,
            profile: CrystalProfile::DiscretePoling { signs, domain_width },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::invalid("crystal.L", format!("must be > 0, got {}", self.length)));
        }
        match &self.profile {
            CrystalProfile::PeriodicSinc => Ok(()),
            CrystalProfile::CosineSeries { coeffs, sigma } => {
                if coeffs.is_empty() {
                    return Err(Error::invalid("crystal.c", "at least one coefficient is required"));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("crystal.c", "coefficients must be finite"));
                }
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::invalid("crystal.sigma", format!("must be > 0, got {sigma}")));
                }
                Ok(())
            }
            CrystalProfile::DiscretePoling { signs, domain_width } => {
                if signs.is_empty() {
                    return Err(Error::invalid("crystal.signs", "pattern is empty"));
                }
                if signs.iter().any(|&s| s != 1 && s != -1) {
                    return Err(Error::invalid("crystal.signs", "every domain sign must be +1 or -1"));
                }
                if !(domain_width.is_finite() && *domain_width > 0.0) {
                    return Err(Error::invalid("crystal.domain_width", format!("must be > 0, got {domain_width}")));
                }
                let covered = signs.len() as f64 * domain_width;
                if (covered - self.length).abs() > 1e-9 * self.length {
                    return Err(Error::invalid(
                        "crystal.domain_width",
                        format!("{} domains of {domain_width} m cover {covered} m, not L = {}", signs.len(), self.length),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Nonlinearity envelope at position `z` (meters from the crystal center).
pub fn chi_profile(z: f64, spec: &CrystalSpec) -> Result<f64> {
    let half = spec.length / 2.0;
    if !(z.abs() <= half * (1.0 + 1e-12)) {
        return Err(Error::invalid("z", format!("{z} m lies outside the crystal [-{half}, {half}]")));
    }
    Ok(match &spec.profile {
        CrystalProfile::PeriodicSinc => 1.0,
        CrystalProfile::CosineSeries { coeffs, sigma } => coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * (n as f64 * z / sigma).cos())
            .sum(),
        CrystalProfile::DiscretePoling { signs, domain_width } => {
            let j = (((z + half) / domain_width).floor() as usize).min(signs.len() - 1);
            signs[j] as f64
        }
    })
}

/// Phase-matching function `∫_{-L/2}^{L/2} χ(z) exp(i Δk z) dz`.
pub fn pmf(dk: f64, spec: &CrystalSpec) -> Complex64 {
    let l = spec.length;
    match &spec.profile {
        CrystalProfile::PeriodicSinc => Complex64::new(l * sinc(dk * l / 2.0), 0.0),
        CrystalProfile::CosineSeries { coeffs, sigma } => Complex64::new(cosine_pmf(dk, coeffs, *sigma, l), 0.0),
        CrystalProfile::DiscretePoling { signs, domain_width } => {
            let w = *domain_width;
            let per_domain = w * sinc(dk * w / 2.0);
            let step = Complex64::from_polar(1.0, dk * w);
            let mut phase = Complex64::from_polar(1.0, dk * (-l / 2.0 + w / 2.0));
            let mut acc = Complex64::new(0.0, 0.0);
            for &s in signs {
                if s > 0 {
                    acc += phase;
                } else {
                    acc -= phase;
                }
                phase *= step;
            }
            acc * per_domain
        }
    }
}

/// `(L/2) Σ c_n [sinc(ΔkL/2 + nL/2σ) + sinc(ΔkL/2 - nL/2σ)]`; with `σ = L/4`
/// the shifts are `±2n`. Real because the envelope is even in `z`.
#[inline]
pub(crate) fn cosine_pmf(dk: f64, coeffs: &[f64], sigma: f64, length: f64) -> f64 {
    let x = dk * length / 2.0;
    let shift = length / (2.0 * sigma);
    let mut acc = 0.0;
    for (n, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let s = n as f64 * shift;
        acc += c * (sinc(x + s) + sinc(x - s));
    }
    acc * length / 2.0
}

/// One PMF sample for export; `dk_half_l` is the dimensionless `Δk L / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PmfSample {
    pub dk_half_l: f64,
    pub value: Complex64,
}

/// Samples the PMF on `points` equally spaced values of `Δk L / 2` in `[lo, hi]`.
pub fn pmf_samples(spec: &CrystalSpec, lo: f64, hi: f64, points: usize) -> Vec<PmfSample> {
    let step = if points > 1 { (hi - lo) / (points - 1) as f64 } else { 0.0 };
    (0..points)
        .map(|j| {
            let x = lo + j as f64 * step;
            PmfSample {
                dk_half_l: x,
                value: pmf(2.0 * x / spec.length, spec),
            }
        })
        .collect()
}
