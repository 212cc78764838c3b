#![allow(dead_code)]

use oam_mes::mode_math::{lg_angular_spectrum, pump_angular_spectrum, LgIndex, PumpSpec};
use oam_mes::phase_matching::{delta_kz, pmf, CrystalSpec, SetupParams};
use oam_mes::Complex64;
use rand::{rngs::StdRng, Rng, SeedableRng};

/// Brute-force midpoint rule over the full 4D `(q_s, q_i)` space on a
/// Cartesian grid of `n` points per axis covering `[-q_max, q_max]`, with
/// `q_max = extent / min(w)`. Shares nothing with the engine's azimuthal
/// reduction.
pub fn cartesian_amplitude(
    ell_s: i32,
    ell_i: i32,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    setup: &SetupParams,
    n: usize,
    extent: f64,
) -> Complex64 {
    let q_max = extent / setup.w_p.min(setup.w_s).min(setup.w_i);
    let h = 2.0 * q_max / n as f64;
    let axis: Vec<f64> = (0..n).map(|k| -q_max + (k as f64 + 0.5) * h).collect();
    let grid = |idx: &LgIndex| -> Vec<Complex64> {
        let mut v = Vec::with_capacity(n * n);
        for &y in &axis {
            for &x in &axis {
                v.push(lg_angular_spectrum(idx, [x, y]).conj());
            }
        }
        v
    };
    let signal = grid(&LgIndex::new(0, ell_s, setup.w_s).unwrap());
    let idler = grid(&LgIndex::new(0, ell_i, setup.w_i).unwrap());

    // q_s + q_i falls on the grid -2 q_max + (k + 1) h, k = 0 ..= 2n - 2
    let m = 2 * n - 1;
    let sum_axis: Vec<f64> = (0..m).map(|k| -2.0 * q_max + (k as f64 + 1.0) * h).collect();
    let mut pump_grid = Vec::with_capacity(m * m);
    for &y in &sum_axis {
        for &x in &sum_axis {
            pump_grid.push(pump_angular_spectrum(pump, [x, y]));
        }
    }

    let mut total = Complex64::new(0.0, 0.0);
    for sy in 0..n {
        for sx in 0..n {
            let a = signal[sy * n + sx];
            if a.norm() < 1e-300 {
                continue;
            }
            let qs = [axis[sx], axis[sy]];
            let mut row = Complex64::new(0.0, 0.0);
            for iy in 0..n {
                for ix in 0..n {
                    let b = idler[iy * n + ix];
                    let p = pump_grid[(sy + iy) * m + (sx + ix)];
                    let dk = delta_kz(qs, [axis[ix], axis[iy]], setup);
                    row += p * b * pmf(dk, crystal);
                }
            }
            total += a * row;
        }
    }
    total * h.powi(4)
}

/// Seeded random cosine coefficients in `[-1, 1]` with `c_0 = 1`.
pub fn random_coeffs(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut c: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    c[0] = 1.0;
    c
}

pub fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}
