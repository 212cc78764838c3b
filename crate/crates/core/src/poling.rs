//! Compiling a cosine-series nonlinearity envelope into a ±1 domain pattern.
//!
//! Signs modulate the slow envelope only; the quasi-phase-matching carrier is
//! implicit, as in the phase-matching module.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::phase_matching::{pmf, CrystalSpec};
use crate::{Error, Result};

pub const MIN_DOMAINS: usize = 64;

/// Equal-width domains covering `[-L/2, L/2]`, left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct PolingPattern {
    signs: Vec<i8>,
    domain_width: f64,
    length: f64,
}

impl PolingPattern {
    pub fn new(signs: Vec<i8>, length: f64) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::invalid("pattern", "pattern has no domains"));
        }
        let domain_width = length / signs.len() as f64;
        let p = Self {
            signs,
            domain_width,
            length,
        };
        p.crystal()?;
        Ok(p)
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn domain_width(&self) -> f64 {
        self.domain_width
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn crystal(&self) -> Result<CrystalSpec> {
        CrystalSpec::poling(self.length, self.signs.clone(), self.domain_width)
    }

    /// Text form: two header lines, then one sign per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# domain_width {:.11e}", self.domain_width);
        let _ = writeln!(s, "# L {:.11e}", self.length);
        for &sign in &self.signs {
            s.push_str(if sign > 0 { "+1\n" } else { "-1\n" });
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut width = None;
        let mut length = None;
        let mut signs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let mut parts = header.split_whitespace();
                let key = parts.next();
                let value = parts.next().map(str::parse::<f64>);
                match (key, value) {
                    (Some("domain_width"), Some(Ok(v))) => width = Some(v),
                    (Some("L"), Some(Ok(v))) => length = Some(v),
                    _ => return Err(Error::invalid("pattern", format!("line {}: unrecognized header", n + 1))),
                }
                continue;
            }
            signs.push(match line {
                "+1" | "1" => 1,
                "-1" => -1,
                other => return Err(Error::invalid("pattern", format!("line {}: expected +1 or -1, got {other:?}", n + 1))),
            });
        }
        let length = length.ok_or_else(|| Error::invalid("pattern", "missing `# L` header"))?;
        let p = Self::new(signs, length)?;
        if let Some(w) = width {
            if (w - p.domain_width).abs() > 1e-9 * p.domain_width {
                return Err(Error::invalid(
                    "pattern",
                    format!("domain_width {w} disagrees with L / domains = {}", p.domain_width),
                ));
            }
        }
        Ok(p)
    }
}

fn envelope(coeffs: &[f64], sigma: f64, z: f64) -> f64 {
    coeffs.iter().enumerate().map(|(n, c)| c * (n as f64 * z / sigma).cos()).sum()
}

/// `∫_{-L/2}^{z} χ(z') dz'`.
fn cumulative(coeffs: &[f64], sigma: f64, length: f64, z: f64) -> f64 {
    let half = length / 2.0;
    coeffs
        .iter()
        .enumerate()
        .map(|(n, &c)| {
            if n == 0 {
                c * (z + half)
            } else {
                let k = n as f64 / sigma;
                c / k * ((k * z).sin() + (k * half).sin())
            }
        })
        .sum()
}

/// Greedy left-to-right synthesis: each domain sign is chosen to keep the
/// running integral of the pattern closest to that of `χ(z) / max|χ|`. Ties
/// go to `+1`.
pub fn synthesize(coeffs: &[f64], sigma: f64, length: f64, n_domains: usize) -> Result<PolingPattern> {
    if n_domains < MIN_DOMAINS {
        return Err(Error::invalid(
            "n_domains",
            format!("need at least {MIN_DOMAINS} domains, got {n_domains}"),
        ));
    }
    CrystalSpec::cosine_with_sigma(length, coeffs.to_vec(), sigma)?;
    let half = length / 2.0;
    let samples = 8 * n_domains;
    let peak = (0..=samples)
        .map(|k| envelope(coeffs, sigma, -half + length * k as f64 / samples as f64).abs())
        .fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::invalid("c", "envelope vanishes everywhere"));
    }
    let width = length / n_domains as f64;
    let mut signs = Vec::with_capacity(n_domains);
    let mut running = 0.0;
    for j in 0..n_domains {
        let z = -half + (j + 1) as f64 * width;
        let goal = cumulative(coeffs, sigma, length, z) / peak;
        let up = (running + width - goal).abs();
        let down = (running - width - goal).abs();
        if up <= down {
            signs.push(1);
            running += width;
        } else {
            signs.push(-1);
            running -= width;
        }
    }
    PolingPattern::new(signs, length)
}

/// `Δk` values spanning `ΔkL/2 ∈ [-20, 20]` with 401 points.
pub fn default_dk_grid(length: f64) -> Vec<f64> {
    (0..401).map(|k| 2.0 * (-20.0 + 0.1 * k as f64) / length).collect()
}

/// Relative L2 distance between the pattern's PMF and the cosine-series PMF
/// over `dk_grid`, after the optimal complex global scaling of the former.
pub fn pmf_error(pattern: &PolingPattern, coeffs: &[f64], sigma: f64, dk_grid: &[f64]) -> Result<f64> {
    if dk_grid.is_empty() {
        return Err(Error::invalid("dk_grid", "grid is empty"));
    }
    let poled = pattern.crystal()?;
    let target = CrystalSpec::cosine_with_sigma(pattern.length, coeffs.to_vec(), sigma)?;
    let p: Vec<Complex64> = dk_grid.iter().map(|&dk| pmf(dk, &poled)).collect();
    let t: Vec<Complex64> = dk_grid.iter().map(|&dk| pmf(dk, &target)).collect();
    let pp: f64 = p.iter().map(|v| v.norm_sqr()).sum();
    let tt: f64 = t.iter().map(|v| v.norm_sqr()).sum();
    if !(tt > 0.0) {
        return Err(Error::invalid("c", "target PMF vanishes on the grid"));
    }
    if !(pp > 0.0) {
        return Ok(1.0);
    }
    let pt: Complex64 = p.iter().zip(&t).map(|(a, b)| a.conj() * b).sum();
    let alpha = pt / pp;
    let err: f64 = p.iter().zip(&t).map(|(a, b)| (a * alpha - b).norm_sqr()).sum();
    Ok((err / tt).sqrt())
}
