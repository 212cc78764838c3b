//! Biphoton expansion amplitudes in the LG basis.
//!
//! The overlap of the pump spectrum, the phase-matching function and the
//! conjugated signal/idler modes is a 4D integral over `(q_s, q_i)`. Writing
//! `q_s = ρ_s e^{iφ_s}`, `q_i = ρ_i e^{iφ_i}` and `φ = φ_s - φ_i`, the integrand
//! depends on `φ_i` only through `exp(i (l_p - l_s - l_i) φ_i)`, so that
//! integral is done analytically: it is `2π` when `l_p = l_s + l_i` and zero
//! otherwise. What remains is
//!
//! ```text
//! C = 2π ∫∫ ρ_s ρ_i dρ_s dρ_i ∫ dφ  a_lp LG_0^lp(Z) Φ(Δk) R_s(ρ_s) R_i(ρ_i) e^{-i l_s φ}
//! Z = ρ_s e^{iφ} + ρ_i
//! ```
//!
//! integrated with Gauss-Legendre on both radial axes and the trapezoid rule on
//! the periodic `φ` axis.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mode_math::{i_pow, lg_radial, PumpSpec};
use crate::phase_matching::{cosine_pmf, delta_kz_radial, pmf, CrystalProfile, CrystalSpec, SetupMode, SetupParams};
use crate::quadrature::{gauss_legendre_on, integrate_adaptive};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss-Legendre nodes on each of the two radial axes.
    pub radial_nodes: usize,
    /// Trapezoid nodes on the relative azimuth.
    pub azimuthal_nodes: usize,
    /// Radial cutoff as a multiple of `1 / min(w_p, w_s, w_i)`.
    pub q_max_factor: f64,
    /// Accepted error estimate relative to `∫|integrand|`.
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            radial_nodes: 64,
            azimuthal_nodes: 256,
            q_max_factor: 8.0,
            rel_tol: 1e-6,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radial_nodes < 8 {
            return Err(Error::invalid("quadrature.radial_nodes", format!("need at least 8, got {}", self.radial_nodes)));
        }
        if self.azimuthal_nodes < 8 {
            return Err(Error::invalid(
                "quadrature.azimuthal_nodes",
                format!("need at least 8, got {}", self.azimuthal_nodes),
            ));
        }
        if !(self.q_max_factor.is_finite() && self.q_max_factor > 0.0) {
            return Err(Error::invalid("quadrature.q_max_factor", format!("must be > 0, got {}", self.q_max_factor)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-6) {
            return Err(Error::invalid("quadrature.rel_tol", format!("must lie in (0, 1e-6], got {}", self.rel_tol)));
        }
        Ok(())
    }

    /// Same configuration with every node count doubled.
    pub fn doubled(&self) -> Self {
        Self {
            radial_nodes: 2 * self.radial_nodes,
            azimuthal_nodes: 2 * self.azimuthal_nodes,
            ..*self
        }
    }
}

/// Inclusive OAM index window `[min, max]` shared by signal and idler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OamWindow {
    pub min: i32,
    pub max: i32,
}

impl OamWindow {
    pub fn new(min: i32, max: i32) -> Result<Self> {
        if min > max {
            return Err(Error::invalid("window", format!("min {min} exceeds max {max}")));
        }
        Ok(Self { min, max })
    }

    /// `[-half, half]`.
    pub fn symmetric(half: i32) -> Self {
        Self { min: -half, max: half }
    }

    pub fn len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, ell: i32) -> bool {
        (self.min..=self.max).contains(&ell)
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i32> {
        self.min..=self.max
    }

    /// All `(l_s, l_i)` pairs, row-major in `l_s`.
    pub fn pairs(&self) -> Vec<(i32, i32)> {
        self.indices().flat_map(|s| self.indices().map(move |i| (s, i))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    /// `Σ |C|^2 = 1` over the window.
    UnitTotal,
}

/// Expansion amplitudes `C^{ls,li}` over a window, row index `l_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeMatrix {
    window: OamWindow,
    entries: Vec<Complex64>,
    normalization: Normalization,
}

impl AmplitudeMatrix {
    pub fn from_entries(window: OamWindow, entries: Vec<Complex64>, normalization: Normalization) -> Result<Self> {
        if entries.len() != window.len() * window.len() {
            return Err(Error::invalid(
                "entries",
                format!("expected {} entries for the window, got {}", window.len() * window.len(), entries.len()),
            ));
        }
        Ok(Self {
            window,
            entries,
            normalization,
        })
    }

    pub fn window(&self) -> OamWindow {
        self.window
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    fn offset(&self, ell_s: i32, ell_i: i32) -> Option<usize> {
        if self.window.contains(ell_s) && self.window.contains(ell_i) {
            Some((ell_s - self.window.min) as usize * self.window.len() + (ell_i - self.window.min) as usize)
        } else {
            None
        }
    }

    /// Amplitude at `(l_s, l_i)`; zero outside the window.
    pub fn get(&self, ell_s: i32, ell_i: i32) -> Complex64 {
        self.offset(ell_s, ell_i).map(|k| self.entries[k]).unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, i32, Complex64)> + '_ {
        self.window.pairs().into_iter().zip(self.entries.iter()).map(|((s, i), &c)| (s, i, c))
    }

    pub fn total_power(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let total = self.total_power();
        if !(total > 0.0) {
            return Err(Error::ZeroMatrix);
        }
        let s = total.sqrt().recip();
        Ok(Self {
            window: self.window,
            entries: self.entries.iter().map(|c| c * s).collect(),
            normalization: Normalization::UnitTotal,
        })
    }

    /// `P = |C|^2 / Σ|C|^2`, row-major like [`AmplitudeMatrix::entries`].
    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total_power();
        if total > 0.0 {
            self.entries.iter().map(|c| c.norm_sqr() / total).collect()
        } else {
            vec![0.0; self.entries.len()]
        }
    }
}

struct RadialGrid {
    rho: Vec<f64>,
    weight: Vec<f64>,
}

struct AzimuthGrid {
    cos: Vec<f64>,
    sin: Vec<f64>,
    weight: f64,
}

struct Grid {
    radial: RadialGrid,
    azimuth: AzimuthGrid,
}

impl Grid {
    fn new(radial_nodes: usize, azimuthal_nodes: usize, q_max: f64) -> Self {
        let (rho, weight) = gauss_legendre_on(radial_nodes, 0.0, q_max);
        let step = 2.0 * PI / azimuthal_nodes as f64;
        let (sin, cos) = (0..azimuthal_nodes).map(|k| (k as f64 * step).sin_cos()).unzip();
        Self {
            radial: RadialGrid { rho, weight },
            azimuth: AzimuthGrid { cos, sin, weight: step },
        }
    }
}

/// Phase-matching function specialised for the inner loop.
enum PmfKernel<'a> {
    Sinc(f64),
    Cosine { coeffs: &'a [f64], sigma: f64, length: f64 },
    General(&'a CrystalSpec),
}

impl<'a> PmfKernel<'a> {
    fn new(crystal: &'a CrystalSpec) -> Self {
        match &crystal.profile {
            CrystalProfile::PeriodicSinc => PmfKernel::Sinc(crystal.length),
            CrystalProfile::CosineSeries { coeffs, sigma } => PmfKernel::Cosine {
                coeffs,
                sigma: *sigma,
                length: crystal.length,
            },
            CrystalProfile::DiscretePoling { .. } => PmfKernel::General(crystal),
        }
    }

    #[inline]
    fn eval(&self, dk: f64) -> Complex64 {
        match self {
            PmfKernel::Sinc(l) => Complex64::new(l * crate::phase_matching::sinc(dk * l / 2.0), 0.0),
            PmfKernel::Cosine { coeffs, sigma, length } => Complex64::new(cosine_pmf(dk, coeffs, *sigma, *length), 0.0),
            PmfKernel::General(spec) => pmf(dk, spec),
        }
    }
}

/// Value of the overlap integral with unit pump coefficient, and the integral of
/// the integrand's modulus (the scale against which errors are judged).
#[derive(Debug, Clone, Copy)]
struct Overlap {
    value: Complex64,
    magnitude: f64,
}

/// Evaluates amplitudes for one setup and quadrature configuration.
pub struct AmplitudeEngine {
    setup: SetupParams,
    quad: QuadratureConfig,
    fine: Grid,
    coarse: Grid,
}

impl AmplitudeEngine {
    pub fn new(setup: &SetupParams, quad: &QuadratureConfig) -> Result<Self> {
        setup.validate()?;
        quad.validate()?;
        let q_max = quad.q_max_factor / setup.w_p.min(setup.w_s).min(setup.w_i);
        Ok(Self {
            setup: *setup,
            quad: *quad,
            fine: Grid::new(quad.radial_nodes, quad.azimuthal_nodes, q_max),
            coarse: Grid::new(quad.radial_nodes / 2, quad.azimuthal_nodes / 2, q_max),
        })
    }

    pub fn setup(&self) -> &SetupParams {
        &self.setup
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    fn check_crystal(&self, crystal: &CrystalSpec) -> Result<()> {
        crystal.validate()?;
        if (crystal.length - self.setup.length).abs() > 1e-12 * self.setup.length {
            return Err(Error::invalid(
                "crystal.L",
                format!("crystal length {} differs from setup length {}", crystal.length, self.setup.length),
            ));
        }
        Ok(())
    }

    fn overlap_on(
        &self,
        grid: &Grid,
        (ell_s, ell_i): (i32, i32),
        (p_s, p_i): (u32, u32),
        w_p: f64,
        kernel: &PmfKernel,
    ) -> Overlap {
        let s = &self.setup;
        let ell_p = ell_s + ell_i;
        let m_p = ell_p.unsigned_abs();
        let pump_norm = (w_p * w_p / (2.0 * PI)).sqrt()
            * (1..=m_p).fold(1.0, |acc, k| acc / (k as f64).sqrt())
            * (w_p * FRAC_1_SQRT_2).powi(m_p as i32);
        let gauss_p = w_p * w_p / 4.0;
        let convention = i_pow(ell_p) * i_pow(-ell_s) * i_pow(-ell_i);

        let rho = &grid.radial.rho;
        let rw = &grid.radial.weight;
        let signal: Vec<f64> = rho
            .iter()
            .zip(rw)
            .map(|(&r, &w)| w * r * lg_radial(p_s, ell_s, s.w_s, r))
            .collect();
        let idler: Vec<f64> = rho
            .iter()
            .zip(rw)
            .map(|(&r, &w)| w * r * lg_radial(p_i, ell_i, s.w_i, r))
            .collect();
        let az = &grid.azimuth;
        let phase_s: Vec<Complex64> = az
            .cos
            .iter()
            .zip(&az.sin)
            .map(|(&c, &sn)| {
                let e = Complex64::new(c, -sn);
                e.powi(ell_s)
            })
            .collect();

        let mut value = Complex64::new(0.0, 0.0);
        let mut magnitude = 0.0;
        for (a, &rs) in rho.iter().enumerate() {
            if signal[a] == 0.0 {
                continue;
            }
            for (b, &ri) in rho.iter().enumerate() {
                let radial = signal[a] * idler[b];
                if radial == 0.0 {
                    continue;
                }
                let base_dk = rs * rs / (2.0 * s.k_s) + ri * ri / (2.0 * s.k_i);
                let mut inner = Complex64::new(0.0, 0.0);
                let mut inner_abs = 0.0;
                for ((&cos, &sin), &ph) in az.cos.iter().zip(&az.sin).zip(&phase_s) {
                    let zx = rs * cos + ri;
                    let zy = rs * sin;
                    let z2 = zx * zx + zy * zy;
                    let z = if ell_p >= 0 { Complex64::new(zx, zy) } else { Complex64::new(zx, -zy) };
                    let pump = z.powu(m_p) * (-gauss_p * z2).exp();
                    let dk = delta_kz_radial(z2, 0.0, 0.0, s) + base_dk;
                    let term = pump * kernel.eval(dk) * ph;
                    inner += term;
                    inner_abs += term.norm();
                }
                value += inner * radial;
                magnitude += inner_abs * radial.abs();
            }
        }
        let scale = 2.0 * PI * az.weight * pump_norm;
        Overlap {
            value: value * convention * scale,
            magnitude: magnitude * scale.abs(),
        }
    }

    fn overlap(
        &self,
        modes: (i32, i32),
        radial: (u32, u32),
        w_p: f64,
        crystal: &CrystalSpec,
    ) -> Result<Overlap> {
        let kernel = PmfKernel::new(crystal);
        let fine = self.overlap_on(&self.fine, modes, radial, w_p, &kernel);
        let coarse = self.overlap_on(&self.coarse, modes, radial, w_p, &kernel);
        let estimate = (fine.value - coarse.value).norm();
        let tolerance = self.quad.rel_tol * fine.magnitude;
        if estimate > tolerance {
            return Err(Error::QuadratureNotConverged {
                context: format!("C^({},{}) with p = ({},{})", modes.0, modes.1, radial.0, radial.1),
                estimate,
                tolerance,
            });
        }
        Ok(fine)
    }

    /// `C^{ls,li}_{ps,pi}` for the given pump and crystal. Exactly zero when
    /// `l_s + l_i` is not in the pump's support.
    pub fn amplitude(
        &self,
        ell_s: i32,
        ell_i: i32,
        p_s: u32,
        p_i: u32,
        pump: &PumpSpec,
        crystal: &CrystalSpec,
    ) -> Result<Complex64> {
        self.check_crystal(crystal)?;
        let a = pump.coefficient(ell_s + ell_i);
        if a.norm() == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(a * self.overlap((ell_s, ell_i), (p_s, p_i), pump.w_p(), crystal)?.value)
    }

    /// Amplitude with unit pump coefficient on `l_p = l_s + l_i`, together
    /// with `∫|integrand|`. Used to detect vanishing baselines.
    pub(crate) fn unit_amplitude_with_scale(
        &self,
        ell_s: i32,
        ell_i: i32,
        crystal: &CrystalSpec,
    ) -> Result<(Complex64, f64)> {
        self.check_crystal(crystal)?;
        let o = self.overlap((ell_s, ell_i), (0, 0), self.setup.w_p, crystal)?;
        Ok((o.value, o.magnitude))
    }

    /// All `p = 0` amplitudes in the window, normalized to unit total power.
    pub fn spectrum(&self, window: OamWindow, pump: &PumpSpec, crystal: &CrystalSpec) -> Result<AmplitudeMatrix> {
        self.raw_spectrum(window, pump, crystal)?.normalized()
    }

    pub fn raw_spectrum(&self, window: OamWindow, pump: &PumpSpec, crystal: &CrystalSpec) -> Result<AmplitudeMatrix> {
        self.check_crystal(crystal)?;
        let entries = window
            .pairs()
            .par_iter()
            .map(|&(s, i)| self.amplitude(s, i, 0, 0, pump, crystal))
            .collect::<Result<Vec<_>>>()?;
        AmplitudeMatrix::from_entries(window, entries, Normalization::Raw)
    }

    /// Per-coefficient amplitudes `M[mode][n]`: the amplitude with the cosine
    /// series `c = e_n`, for `n = 0..=n_max`, with the pump's own coefficients.
    pub fn basis_entries(
        &self,
        modes: &[(i32, i32)],
        pump: &PumpSpec,
        sigma: f64,
        n_max: usize,
    ) -> Result<Vec<Vec<Complex64>>> {
        let crystals = (0..=n_max)
            .map(|n| {
                let mut c = vec![0.0; n + 1];
                c[n] = 1.0;
                CrystalSpec::cosine_with_sigma(self.setup.length, c, sigma)
            })
            .collect::<Result<Vec<_>>>()?;
        let tasks: Vec<(usize, usize)> = (0..modes.len()).flat_map(|m| (0..=n_max).map(move |n| (m, n))).collect();
        let values = tasks
            .par_iter()
            .map(|&(m, n)| {
                let (s, i) = modes[m];
                self.amplitude(s, i, 0, 0, pump, &crystals[n])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(values.chunks(n_max + 1).map(|c| c.to_vec()).collect())
    }

    pub fn basis_matrix(&self, window: OamWindow, pump: &PumpSpec, sigma: f64, n_max: usize) -> Result<BasisTensor> {
        let modes = window.pairs();
        let entries = self.basis_entries(&modes, pump, sigma, n_max)?;
        Ok(BasisTensor {
            window,
            n_max,
            sigma,
            entries,
        })
    }
}

/// `M[(l_s, l_i)][n]`, linear map from cosine coefficients to amplitudes.
#[derive(Debug, Clone)]
pub struct BasisTensor {
    pub window: OamWindow,
    pub n_max: usize,
    pub sigma: f64,
    entries: Vec<Vec<Complex64>>,
}

impl BasisTensor {
    pub fn column(&self, ell_s: i32, ell_i: i32) -> &[Complex64] {
        let w = self.window;
        let k = (ell_s - w.min) as usize * w.len() + (ell_i - w.min) as usize;
        &self.entries[k]
    }

    /// `C(c) = Σ_n c_n M[·][n]` (raw normalization).
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<AmplitudeMatrix> {
        if coeffs.len() > self.n_max + 1 {
            return Err(Error::invalid("c", format!("{} coefficients exceed n_max = {}", coeffs.len(), self.n_max)));
        }
        let entries = self
            .entries
            .iter()
            .map(|m| m.iter().zip(coeffs).map(|(v, c)| v * c).sum())
            .collect();
        AmplitudeMatrix::from_entries(self.window, entries, Normalization::Raw)
    }
}

/// `C^{ls,li}_{ps,pi}` for one configuration. Builds a fresh engine; reuse an
/// [`AmplitudeEngine`] when evaluating many amplitudes.
#[allow(clippy::too_many_arguments)]
pub fn amplitude(
    ell_s: i32,
    ell_i: i32,
    p_s: u32,
    p_i: u32,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    setup: &SetupParams,
    quad: &QuadratureConfig,
) -> Result<Complex64> {
    AmplitudeEngine::new(setup, quad)?.amplitude(ell_s, ell_i, p_s, p_i, pump, crystal)
}

pub fn spectrum(
    window: OamWindow,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    setup: &SetupParams,
    quad: &QuadratureConfig,
) -> Result<AmplitudeMatrix> {
    AmplitudeEngine::new(setup, quad)?.spectrum(window, pump, crystal)
}

pub fn basis_matrix(
    window: OamWindow,
    pump: &PumpSpec,
    setup: &SetupParams,
    sigma: f64,
    n_max: usize,
    quad: &QuadratureConfig,
) -> Result<BasisTensor> {
    AmplitudeEngine::new(setup, quad)?.basis_matrix(window, pump, sigma, n_max)
}

/// `ξ(N_R, z) = (A + 2iz)^{N_R} / (A - 2iz)^{N_R + 1}` with `A = k_p w_p^2`.
pub fn xi(n_r: i32, z: f64, a: f64) -> Complex64 {
    let plus = Complex64::new(a, 2.0 * z);
    let minus = Complex64::new(a, -2.0 * z);
    plus.powi(n_r) / minus.powi(n_r + 1)
}

/// `∫ Σ c_n cos(n z / σ) ξ(N_R, z) dz` over the crystal. Valid in the idealized
/// setup only, where amplitudes of modes sharing `N_R` are proportional to it.
pub fn reduced_amplitude(n_r: i32, coeffs: &[f64], setup: &SetupParams, sigma: f64) -> Result<Complex64> {
    if n_r > 0 || n_r % 2 != 0 {
        return Err(Error::invalid("N_R", format!("relative mode number must be even and <= 0, got {n_r}")));
    }
    if setup.mode != SetupMode::Idealized {
        return Err(Error::invalid("setup.mode", "the reduced integral requires the idealized setup"));
    }
    setup.validate()?;
    if coeffs.is_empty() {
        return Err(Error::invalid("c", "at least one coefficient is required"));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid("sigma", format!("must be > 0, got {sigma}")));
    }
    let a = setup.k_p * setup.w_p * setup.w_p;
    let half = setup.length / 2.0;
    let f = |z: f64| {
        let chi: f64 = coeffs.iter().enumerate().map(|(n, c)| c * (n as f64 * z / sigma).cos()).sum();
        xi(n_r, z, a) * chi
    };
    let scale = coeffs.iter().map(|c| c.abs()).sum::<f64>() * setup.length / a;
    Ok(integrate_adaptive(f, -half, half, 1e-12, 1e-15 * scale, 4000)?.value)
}
