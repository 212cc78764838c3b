//! Laguerre-Gaussian modes in momentum and position space.
//!
//! Angular spectra are evaluated at the focal plane `z = 0`:
//!
//! ```text
//! LG_p^l(q, w) = sqrt(w^2 p! / (2 pi (p+|l|)!)) (-1)^p i^l (|q| w / sqrt2)^|l|
//!                exp(-|q|^2 w^2 / 4) L_p^|l|(|q|^2 w^2 / 2) exp(i l Arg q)
//! ```
//!
//! normalized so that `∫ |LG|^2 d^2q = 1`. The factor `i^l` fixes a phase
//! convention for odd `l`; it never changes a probability.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Generalized Laguerre polynomial `L_p^alpha(x)`.
pub fn laguerre(p: i32, alpha: f64, x: f64) -> Result<f64> {
    if p < 0 {
        return Err(Error::invalid("p", format!("radial index must be >= 0, got {p}")));
    }
    Ok(laguerre_unchecked(p as u32, alpha, x))
}

/// Upward three-term recurrence
/// `(k+1) L_{k+1} = (2k+1+alpha-x) L_k - (k+alpha) L_{k-1}`.
pub(crate) fn laguerre_unchecked(p: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if p == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..p {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `p! / (p + m)!` as a float.
fn factorial_ratio(p: u32, m: u32) -> f64 {
    (p + 1..=p + m).fold(1.0, |acc, k| acc / k as f64)
}

/// `i^n` for any integer `n`.
pub(crate) fn i_pow(n: i32) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Radial index, OAM index and waist of a single LG mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgIndex {
    pub p: u32,
    pub ell: i32,
    /// Beam waist in meters.
    pub w: f64,
}

impl LgIndex {
    pub fn new(p: u32, ell: i32, w: f64) -> Result<Self> {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::invalid("w", format!("beam waist must be > 0, got {w}")));
        }
        Ok(Self { p, ell, w })
    }
}

/// Real radial part of the angular spectrum, including `(-1)^p` but not the
/// azimuthal phase or the `i^l` convention factor.
pub(crate) fn lg_radial(p: u32, ell: i32, w: f64, rho: f64) -> f64 {
    let m = ell.unsigned_abs();
    let norm = (w * w * factorial_ratio(p, m) / (2.0 * PI)).sqrt();
    let sign = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    let u = rho * w * FRAC_1_SQRT_2;
    let x = u * u;
    norm * sign * u.powi(m as i32) * (-0.5 * x).exp() * laguerre_unchecked(p, m as f64, x)
}

/// Angular spectrum `LG_p^l(q, w)` at transverse momentum `q = (qx, qy)` in rad/m.
pub fn lg_angular_spectrum(idx: &LgIndex, q: [f64; 2]) -> Complex64 {
    let rho = q[0].hypot(q[1]);
    let radial = lg_radial(idx.p, idx.ell, idx.w, rho);
    if radial == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let phase = if rho > 0.0 {
        Complex64::from_polar(1.0, idx.ell as f64 * q[1].atan2(q[0]))
    } else {
        Complex64::new(1.0, 0.0)
    };
    i_pow(idx.ell) * phase * radial
}

/// Pump as a superposition of `LG_0^{l_p}` modes sharing one waist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PumpSpecRepr", into = "PumpSpecRepr")]
pub struct PumpSpec {
    terms: BTreeMap<i32, Complex64>,
    w_p: f64,
}

impl PumpSpec {
    pub fn new(terms: impl IntoIterator<Item = (i32, Complex64)>, w_p: f64) -> Result<Self> {
        if !(w_p.is_finite() && w_p > 0.0) {
            return Err(Error::invalid("pump.w_p", format!("pump waist must be > 0, got {w_p}")));
        }
        let mut map = BTreeMap::new();
        for (ell, a) in terms {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::invalid("pump.terms", format!("coefficient for l_p = {ell} is not finite")));
            }
            if map.insert(ell, a).is_some() {
                return Err(Error::invalid("pump.terms", format!("duplicate l_p = {ell}")));
            }
        }
        map.retain(|_, a| a.norm() > 0.0);
        if map.is_empty() {
            return Err(Error::invalid("pump.terms", "at least one nonzero coefficient is required"));
        }
        Ok(Self { terms: map, w_p })
    }

    /// Fundamental Gaussian pump, `a_0 = 1`.
    pub fn gaussian(w_p: f64) -> Result<Self> {
        Self::new([(0, Complex64::new(1.0, 0.0))], w_p)
    }

    pub fn w_p(&self) -> f64 {
        self.w_p
    }

    /// Nonzero coefficients keyed by `l_p`.
    pub fn terms(&self) -> &BTreeMap<i32, Complex64> {
        &self.terms
    }

    pub fn coefficient(&self, ell_p: i32) -> Complex64 {
        self.terms.get(&ell_p).copied().unwrap_or_default()
    }

    pub fn support(&self) -> impl Iterator<Item = i32> + '_ {
        self.terms.keys().copied()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PumpTermRepr {
    l: i32,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PumpSpecRepr {
    w_p: f64,
    terms: Vec<PumpTermRepr>,
}

impl TryFrom<PumpSpecRepr> for PumpSpec {
    type Error = Error;

    fn try_from(r: PumpSpecRepr) -> Result<Self> {
        PumpSpec::new(r.terms.into_iter().map(|t| (t.l, Complex64::new(t.re, t.im))), r.w_p)
    }
}

impl From<PumpSpec> for PumpSpecRepr {
    fn from(p: PumpSpec) -> Self {
        PumpSpecRepr {
            w_p: p.w_p,
            terms: p
                .terms
                .iter()
                .map(|(&l, a)| PumpTermRepr { l, re: a.re, im: a.im })
                .collect(),
        }
    }
}

/// `Σ a_lp LG_0^{lp}(q, w_p)`.
pub fn pump_angular_spectrum(pump: &PumpSpec, q: [f64; 2]) -> Complex64 {
    pump.terms
        .iter()
        .map(|(&ell, &a)| a * lg_angular_spectrum(&LgIndex { p: 0, ell, w: pump.w_p }, q))
        .sum()
}

/// Position-space field at `z = 0` of the mode whose angular spectrum is
/// [`lg_angular_spectrum`], i.e. its inverse 2D Fourier transform with kernel
/// `exp(i q·r) / 2pi`. This is the textbook LG field times `(-1)^max(l, 0)`.
pub fn lg_position_field(idx: &LgIndex, r: [f64; 2]) -> Complex64 {
    let m = idx.ell.unsigned_abs();
    let rho = r[0].hypot(r[1]);
    let norm = (2.0 * factorial_ratio(idx.p, m) / PI).sqrt() / idx.w;
    let u = SQRT_2 * rho / idx.w;
    let x = u * u;
    let radial = norm * u.powi(m as i32) * (-0.5 * x).exp() * laguerre_unchecked(idx.p, m as f64, x);
    if radial == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let sign = if idx.ell > 0 && idx.ell % 2 != 0 { -1.0 } else { 1.0 };
    let phase = if rho > 0.0 {
        Complex64::from_polar(1.0, idx.ell as f64 * r[1].atan2(r[0]))
    } else {
        Complex64::new(1.0, 0.0)
    };
    phase * (sign * radial)
}

/// Square sampling grid `x_j = -half_extent + j * 2 half_extent / samples`,
/// `j = 0..samples`, identical along both axes. The layout matches a centered
/// DFT grid, so `x = 0` is sampled when `samples` is even.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileGrid {
    /// Half side length in meters.
    pub half_extent: f64,
    pub samples: usize,
}

impl ProfileGrid {
    pub fn new(half_extent: f64, samples: usize) -> Result<Self> {
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::invalid("grid.extent", format!("must be > 0, got {half_extent}")));
        }
        if samples < 16 {
            return Err(Error::invalid("grid.samples", format!("need at least 16 samples per side, got {samples}")));
        }
        Ok(Self { half_extent, samples })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.samples as f64
    }

    pub fn coordinates(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.samples).map(|j| -self.half_extent + j as f64 * h).collect()
    }
}

/// Sampled pump field. Arrays are row-major with `y` as the row index.
#[derive(Debug, Clone)]
pub struct PumpProfile {
    pub grid: ProfileGrid,
    pub coords: Vec<f64>,
    pub field: Vec<Complex64>,
    pub intensity: Vec<f64>,
    pub phase: Vec<f64>,
}

impl PumpProfile {
    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.field[iy * self.grid.samples + ix]
    }
}

pub fn render_pump_profile(pump: &PumpSpec, grid: &ProfileGrid) -> Result<PumpProfile> {
    let grid = ProfileGrid::new(grid.half_extent, grid.samples)?;
    let coords = grid.coordinates();
    let mut field = Vec::with_capacity(grid.samples * grid.samples);
    for &y in &coords {
        for &x in &coords {
            let v: Complex64 = pump
                .terms
                .iter()
                .map(|(&ell, &a)| a * lg_position_field(&LgIndex { p: 0, ell, w: pump.w_p }, [x, y]))
                .sum();
            field.push(v);
        }
    }
    let intensity = field.iter().map(|v| v.norm_sqr()).collect();
    let phase = field.iter().map(|v| v.arg()).collect();
    Ok(PumpProfile {
        grid,
        coords,
        field,
        intensity,
        phase,
    })
}
