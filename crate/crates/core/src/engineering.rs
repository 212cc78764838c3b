//! Target states, relative mode numbers, feasibility and the two-stage inverse
//! solve: crystal cosine coefficients on the single constrained pump diagonal,
//! then one pump coefficient per populated diagonal.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplitude::{AmplitudeEngine, AmplitudeMatrix, OamWindow, QuadratureConfig};
use crate::entanglement::{check_dimension, is_mes, restrict, MesReport};
use crate::linalg::{lstsq, CMatrix};
use crate::mode_math::PumpSpec;
use crate::phase_matching::{CrystalSpec, SetupParams};
use crate::{Error, Result};

/// Relative mode number `|l_s + l_i| - |l_s| - |l_i|`; always even and `<= 0`.
pub fn rmn(ell_s: i32, ell_i: i32) -> i32 {
    (ell_s + ell_i).abs() - ell_s.abs() - ell_i.abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetTerm {
    pub ell_s: i32,
    pub ell_i: i32,
    pub weight: Complex64,
}

/// Bipartite target state in `S_{d x d}` with unit-norm weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TargetRepr", into = "TargetRepr")]
pub struct TargetState {
    d: usize,
    terms: Vec<TargetTerm>,
}

impl TargetState {
    /// Validates and normalizes; terms are stored sorted by `(l_s, l_i)`.
    pub fn new(d: usize, terms: impl IntoIterator<Item = (i32, i32, Complex64)>) -> Result<Self> {
        check_dimension(d)?;
        let h = ((d - 1) / 2) as i32;
        let mut map = BTreeMap::new();
        for (s, i, w) in terms {
            if s.abs() > h || i.abs() > h {
                return Err(Error::invalid("target.terms", format!("mode |{s},{i}> lies outside S_{d}x{d}")));
            }
            if !(w.re.is_finite() && w.im.is_finite()) {
                return Err(Error::invalid("target.terms", format!("weight of |{s},{i}> is not finite")));
            }
            if map.insert((s, i), w).is_some() {
                return Err(Error::invalid("target.terms", format!("duplicate mode |{s},{i}>")));
            }
        }
        map.retain(|_, w| w.norm() > 0.0);
        let norm = map.values().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::invalid("target.terms", "at least one nonzero weight is required"));
        }
        let terms = map
            .into_iter()
            .map(|((ell_s, ell_i), w)| TargetTerm {
                ell_s,
                ell_i,
                weight: w / norm,
            })
            .collect();
        Ok(Self { d, terms })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn half(&self) -> i32 {
        ((self.d - 1) / 2) as i32
    }

    pub fn terms(&self) -> &[TargetTerm] {
        &self.terms
    }

    pub fn weight(&self, ell_s: i32, ell_i: i32) -> Option<Complex64> {
        self.terms
            .iter()
            .find(|t| t.ell_s == ell_s && t.ell_i == ell_i)
            .map(|t| t.weight)
    }

    /// Pump diagonals `l_p = l_s + l_i` carrying at least one target mode.
    pub fn diagonals(&self) -> Vec<i32> {
        let mut v: Vec<i32> = self.terms.iter().map(|t| t.ell_s + t.ell_i).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Named presets `psi1` ... `psi4`.
    pub fn preset(name: &str) -> Option<Self> {
        let one = Complex64::new(1.0, 0.0);
        let (d, modes): (usize, &[(i32, i32)]) = match name {
            "psi1" => (3, &[(-1, -1), (0, 0), (1, 1)]),
            "psi2" => (3, &[(-1, 0), (0, 1), (1, -1)]),
            "psi3" => (5, &[(-2, -1), (-1, -2), (0, 0), (1, 2), (2, 1)]),
            "psi4" => (3, &[(-1, 1), (0, 0), (1, -1)]),
            _ => return None,
        };
        Some(Self::new(d, modes.iter().map(|&(s, i)| (s, i, one))).expect("presets are valid"))
    }

    /// The state as a unit-norm `d x d` matrix, rows indexed by `l_s`.
    pub fn matrix(&self) -> CMatrix {
        let h = self.half();
        let mut m = CMatrix::zeros(self.d, self.d);
        for t in &self.terms {
            m[((t.ell_s + h) as usize, (t.ell_i + h) as usize)] = t.weight;
        }
        m
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetTermRepr {
    ls: i32,
    li: i32,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetRepr {
    d: usize,
    terms: Vec<TargetTermRepr>,
}

impl TryFrom<TargetRepr> for TargetState {
    type Error = Error;

    fn try_from(r: TargetRepr) -> Result<Self> {
        TargetState::new(r.d, r.terms.into_iter().map(|t| (t.ls, t.li, Complex64::new(t.re, t.im))))
    }
}

impl From<TargetState> for TargetRepr {
    fn from(t: TargetState) -> Self {
        TargetRepr {
            d: t.d,
            terms: t
                .terms
                .iter()
                .map(|t| TargetTermRepr {
                    ls: t.ell_s,
                    li: t.ell_i,
                    re: t.weight.re,
                    im: t.weight.im,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeInfo {
    pub ell_s: i32,
    pub ell_i: i32,
    pub rmn: i32,
    /// `Some(weight)` for target modes, `None` for unintended ones.
    pub target: Option<Complex64>,
}

/// All in-subspace modes on one pump diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonal {
    pub ell_p: i32,
    pub modes: Vec<ModeInfo>,
}

impl Diagonal {
    pub fn targets(&self) -> impl Iterator<Item = &ModeInfo> {
        self.modes.iter().filter(|m| m.target.is_some())
    }

    pub fn unintended(&self) -> impl Iterator<Item = &ModeInfo> {
        self.modes.iter().filter(|m| m.target.is_none())
    }

    /// Target modes grouped by relative mode number, ascending.
    fn target_classes(&self) -> BTreeMap<i32, Vec<&ModeInfo>> {
        let mut classes: BTreeMap<i32, Vec<&ModeInfo>> = BTreeMap::new();
        for m in self.targets() {
            classes.entry(m.rmn).or_default().push(m);
        }
        classes
    }

    fn needs_crystal(&self) -> bool {
        self.unintended().next().is_some() || self.target_classes().len() > 1
    }
}

/// Per pump diagonal: targets, unintended modes and their relative mode numbers.
pub fn classify(target: &TargetState) -> Vec<Diagonal> {
    let h = target.half();
    target
        .diagonals()
        .into_iter()
        .map(|ell_p| {
            let modes = (-h..=h)
                .map(|s| (s, ell_p - s))
                .filter(|&(_, i)| i.abs() <= h)
                .map(|(s, i)| ModeInfo {
                    ell_s: s,
                    ell_i: i,
                    rmn: rmn(s, i),
                    target: target.weight(s, i),
                })
                .collect();
            Diagonal { ell_p, modes }
        })
        .collect()
}

/// An unintended mode whose relative mode number equals that of a target mode,
/// so any crystal suppressing one also suppresses the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Clash {
    pub unintended: (i32, i32),
    pub target: (i32, i32),
    pub rmn: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Infeasibility {
    /// Sorted by unintended mode, then target mode.
    RmnClash(Vec<Clash>),
    /// Targets sharing a relative mode number on one diagonal must be a single
    /// mode or an equal-weight exchange pair.
    UnequalClass { ell_p: i32, rmn: i32, modes: Vec<(i32, i32)> },
    MultipleConstrainedDiagonals(Vec<i32>),
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::RmnClash(clashes) => {
                for (k, c) in clashes.iter().enumerate() {
                    if k > 0 {
                        write!(f, "; ")?;
                    }
                    write!(
                        f,
                        "unintended mode |{},{}> and target mode |{},{}> share N_R = {}",
                        c.unintended.0, c.unintended.1, c.target.0, c.target.1, c.rmn
                    )?;
                }
                Ok(())
            }
            Infeasibility::UnequalClass { ell_p, rmn, modes } => {
                write!(f, "target modes ")?;
                for (k, (s, i)) in modes.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "|{s},{i}>")?;
                }
                write!(
                    f,
                    " on l_p = {ell_p} share N_R = {rmn} but are not an equal-weight exchange pair"
                )
            }
            Infeasibility::MultipleConstrainedDiagonals(d) => {
                write!(f, "pump diagonals {d:?} all need crystal constraints; at most one is allowed")
            }
        }
    }
}

/// One row of the crystal system: the amplitude of `representative` with unit
/// pump on the constrained diagonal must equal `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanRow {
    pub rmn: i32,
    pub representative: (i32, i32),
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub diagonals: Vec<Diagonal>,
    /// Diagonal needing per-class crystal constraints, if any.
    pub constrained: Option<i32>,
    pub rows: Vec<PlanRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(Plan),
    Infeasible(Infeasibility),
}

impl Feasibility {
    pub fn into_result(self) -> Result<Plan> {
        match self {
            Feasibility::Feasible(p) => Ok(p),
            Feasibility::Infeasible(r) => Err(Error::Infeasible(r)),
        }
    }
}

const WEIGHT_TOL: f64 = 1e-9;

pub fn feasibility(target: &TargetState) -> Feasibility {
    let diagonals = classify(target);

    let mut clashes: Vec<Clash> = diagonals
        .iter()
        .flat_map(|d| d.unintended())
        .flat_map(|u| {
            target
                .terms()
                .iter()
                .filter(move |t| rmn(t.ell_s, t.ell_i) == u.rmn)
                .map(move |t| Clash {
                    unintended: (u.ell_s, u.ell_i),
                    target: (t.ell_s, t.ell_i),
                    rmn: u.rmn,
                })
        })
        .collect();
    if !clashes.is_empty() {
        clashes.sort();
        return Feasibility::Infeasible(Infeasibility::RmnClash(clashes));
    }

    for d in &diagonals {
        for (n_r, group) in d.target_classes() {
            let ok = match group.as_slice() {
                [_] => true,
                [a, b] => {
                    (a.ell_s, a.ell_i) == (b.ell_i, b.ell_s)
                        && (a.target.unwrap() - b.target.unwrap()).norm() <= WEIGHT_TOL
                }
                _ => false,
            };
            if !ok {
                return Feasibility::Infeasible(Infeasibility::UnequalClass {
                    ell_p: d.ell_p,
                    rmn: n_r,
                    modes: group.iter().map(|m| (m.ell_s, m.ell_i)).collect(),
                });
            }
        }
    }

    let constrained: Vec<i32> = diagonals.iter().filter(|d| d.needs_crystal()).map(|d| d.ell_p).collect();
    if constrained.len() > 1 {
        return Feasibility::Infeasible(Infeasibility::MultipleConstrainedDiagonals(constrained));
    }
    let constrained = constrained.first().copied();

    let mut rows = Vec::new();
    if let Some(ell_p) = constrained {
        let diag = diagonals.iter().find(|d| d.ell_p == ell_p).expect("constrained diagonal exists");
        let classes = diag.target_classes();
        let first = classes.values().next().and_then(|g| g[0].target).expect("diagonal has a target");
        let reference_phase = first / first.norm();
        let mut by_class: BTreeMap<i32, PlanRow> = BTreeMap::new();
        for m in diag.modes.iter() {
            by_class.entry(m.rmn).or_insert(PlanRow {
                rmn: m.rmn,
                representative: (m.ell_s, m.ell_i),
                value: m.target.map(|w| w / reference_phase).unwrap_or_default(),
            });
        }
        rows = by_class.into_values().rev().collect();
    }
    Feasibility::Feasible(Plan {
        diagonals,
        constrained,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSolution {
    /// Cosine coefficients with `c_0 = 1`, or the first nonzero one equal to 1 when `c_0` vanishes.
    pub coeffs: Vec<f64>,
    /// `||M c - t|| / ||t||` before normalization.
    pub residual: f64,
    pub rank: usize,
}

/// Accepted relative residual of the crystal system.
pub const RESIDUAL_THRESHOLD: f64 = 1e-3;

/// Crystal stage on a prepared engine. `n_max + 1` cosine terms with `σ = L/4`.
pub fn solve_crystal_with(engine: &AmplitudeEngine, target: &TargetState, n_max: usize) -> Result<CrystalSolution> {
    let plan = feasibility(target).into_result()?;
    let Some(ell_p) = plan.constrained else {
        let mut coeffs = vec![0.0; n_max + 1];
        coeffs[0] = 1.0;
        return Ok(CrystalSolution {
            coeffs,
            residual: 0.0,
            rank: 0,
        });
    };
    let setup = engine.setup();
    let pump = PumpSpec::new([(ell_p, Complex64::new(1.0, 0.0))], setup.w_p)?;
    let modes: Vec<(i32, i32)> = plan.rows.iter().map(|r| r.representative).collect();
    let basis = engine.basis_entries(&modes, &pump, setup.length / 4.0, n_max)?;

    // c is real: stack real and imaginary parts into one real system
    let n_rows = plan.rows.len();
    let a = CMatrix::from_fn(2 * n_rows, n_max + 1, |r, n| {
        let v = basis[r % n_rows][n];
        Complex64::new(if r < n_rows { v.re } else { v.im }, 0.0)
    });
    let b: Vec<Complex64> = (0..2 * n_rows)
        .map(|r| {
            let v = plan.rows[r % n_rows].value;
            Complex64::new(if r < n_rows { v.re } else { v.im }, 0.0)
        })
        .collect();
    let sol = lstsq(&a, &b, 1e-10)?;
    let needed = n_rows.min(n_max + 1);
    if sol.rank < needed {
        return Err(Error::RankDeficient { rank: sol.rank, needed });
    }
    let b_norm = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let residual = sol.residual / b_norm;
    if residual > RESIDUAL_THRESHOLD {
        return Err(Error::ResidualTooLarge {
            residual,
            threshold: RESIDUAL_THRESHOLD,
        });
    }
    let c: Vec<f64> = sol.x.iter().map(|v| v.re).collect();
    let max = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pivot = if c[0].abs() > 1e-12 * max {
        c[0]
    } else {
        *c.iter().find(|v| v.abs() > 1e-12 * max).ok_or(Error::ZeroMatrix)?
    };
    Ok(CrystalSolution {
        coeffs: c.iter().map(|v| v / pivot).collect(),
        residual,
        rank: sol.rank,
    })
}

pub fn solve_crystal(
    target: &TargetState,
    setup: &SetupParams,
    n_max: usize,
    quad: &QuadratureConfig,
) -> Result<CrystalSolution> {
    solve_crystal_with(&AmplitudeEngine::new(setup, quad)?, target, n_max)
}

/// Baseline amplitudes below this fraction of `∫|integrand|` count as vanishing.
const BASELINE_FLOOR: f64 = 1e-8;

/// Pump stage: `a_lp = w / C_baseline` on every target diagonal, where the
/// baseline uses unit pump on `l_p` and the given crystal. Rescaled so the term
/// with the smallest `|l_p|` has modulus `√d` and phase zero.
pub fn solve_pump_with(engine: &AmplitudeEngine, target: &TargetState, crystal: &CrystalSpec) -> Result<PumpSpec> {
    let mut raw: BTreeMap<i32, Complex64> = BTreeMap::new();
    for t in target.terms() {
        let ell_p = t.ell_s + t.ell_i;
        if raw.contains_key(&ell_p) {
            continue;
        }
        let (baseline, scale) = engine.unit_amplitude_with_scale(t.ell_s, t.ell_i, crystal)?;
        if !(baseline.norm() > BASELINE_FLOOR * scale) {
            return Err(Error::BaselineVanishes {
                ell_p,
                magnitude: baseline.norm(),
            });
        }
        raw.insert(ell_p, t.weight / baseline);
    }
    let reference = *raw
        .keys()
        .min_by_key(|&&l| (l.abs(), l < 0))
        .expect("target has at least one term");
    let a_ref = raw[&reference];
    let factor = (target.d() as f64).sqrt() / a_ref;
    PumpSpec::new(raw.into_iter().map(|(l, a)| (l, a * factor)), engine.setup().w_p)
}

pub fn solve_pump(
    target: &TargetState,
    crystal: &CrystalSpec,
    setup: &SetupParams,
    quad: &QuadratureConfig,
) -> Result<PumpSpec> {
    solve_pump_with(&AmplitudeEngine::new(setup, quad)?, target, crystal)
}

/// Achieved versus requested amplitude of one in-subspace mode, both in the
/// unit-norm subspace state after removing the global phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeDiagnostic {
    pub ell_s: i32,
    pub ell_i: i32,
    pub target: Complex64,
    pub achieved: Complex64,
    pub probability: f64,
}

impl ModeDiagnostic {
    pub fn residual(&self) -> f64 {
        (self.achieved - self.target).norm()
    }
}

#[derive(Debug, Clone)]
pub struct EngineeredSource {
    pub target: TargetState,
    pub pump: PumpSpec,
    pub crystal: CrystalSpec,
    pub crystal_solution: CrystalSolution,
    /// Unit-total spectrum over the computed window.
    pub achieved: AmplitudeMatrix,
    pub schmidt: MesReport,
    /// `|<target|achieved>|^2` within the subspace.
    pub fidelity: f64,
    pub diagnostics: Vec<ModeDiagnostic>,
}

/// Tolerance on `|λ_k - 1/√d|` for the MES verdict in reports.
pub const MES_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineOptions {
    /// Highest cosine order; defaults to `(d - 1) / 2`.
    pub n_max: Option<usize>,
    /// Spectrum window; defaults to the subspace itself.
    pub window: Option<OamWindow>,
}

pub fn pipeline_with(
    engine: &AmplitudeEngine,
    target: &TargetState,
    options: &PipelineOptions,
) -> Result<EngineeredSource> {
    let d = target.d();
    let h = target.half();
    let n_max = options.n_max.unwrap_or((d - 1) / 2);
    let window = options.window.unwrap_or(OamWindow::symmetric(h));
    if !(window.contains(-h) && window.contains(h)) {
        return Err(Error::WindowTooSmall {
            d,
            min: window.min,
            max: window.max,
        });
    }
    let setup = engine.setup();
    let crystal_solution = solve_crystal_with(engine, target, n_max)?;
    let crystal = CrystalSpec::cosine(setup.length, crystal_solution.coeffs.clone())?;
    let pump = solve_pump_with(engine, target, &crystal)?;
    let achieved = engine.spectrum(window, &pump, &crystal)?;
    let sub = restrict(&achieved, d)?;
    let schmidt = is_mes(&sub, MES_TOL)?;
    let (fidelity, diagnostics) = compare(target, &sub);
    Ok(EngineeredSource {
        target: target.clone(),
        pump,
        crystal,
        crystal_solution,
        achieved,
        schmidt,
        fidelity,
        diagnostics,
    })
}

/// feasibility, crystal solve, pump solve, spectrum and Schmidt analysis.
pub fn pipeline(target: &TargetState, setup: &SetupParams, quad: &QuadratureConfig) -> Result<EngineeredSource> {
    pipeline_with(&AmplitudeEngine::new(setup, quad)?, target, &PipelineOptions::default())
}

fn compare(target: &TargetState, sub: &CMatrix) -> (f64, Vec<ModeDiagnostic>) {
    let t = target.matrix();
    let d = target.d();
    let overlap: Complex64 = t.as_slice().iter().zip(sub.as_slice()).map(|(a, b)| a.conj() * b).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let h = target.half();
    let mut diagnostics = Vec::new();
    for r in 0..d {
        for c in 0..d {
            let (want, got) = (t[(r, c)], sub[(r, c)] / phase);
            if want.norm() > 0.0 || got.norm() > 0.0 {
                diagnostics.push(ModeDiagnostic {
                    ell_s: r as i32 - h,
                    ell_i: c as i32 - h,
                    target: want,
                    achieved: got,
                    probability: got.norm_sqr(),
                });
            }
        }
    }
    (overlap.norm_sqr(), diagnostics)
}
