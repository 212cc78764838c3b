//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if anything fails other than the known-unattainable Ψ₃
//! crystal ratios.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{cartesian_amplitude, random_coeffs, rel};
use oam_mes::amplitude::{reduced_amplitude, AmplitudeEngine, OamWindow, QuadratureConfig};
use oam_mes::engineering::{
    pipeline_with, solve_crystal_with, solve_pump_with, Clash, EngineeredSource, Infeasibility, PipelineOptions,
    TargetState,
};
use oam_mes::entanglement::{restrict, schmidt, DEFAULT_RANK_TOL};
use oam_mes::linalg::{svd, CMatrix};
use oam_mes::mode_math::PumpSpec;
use oam_mes::phase_matching::{CrystalSpec, SetupParams};
use oam_mes::poling::{default_dk_grid, pmf_error, synthesize};
use oam_mes::{Complex64, Error};
use rand::{rngs::StdRng, Rng, SeedableRng};

struct Check {
    parts: Vec<(String, bool)>,
}

impl Check {
    fn new() -> Self {
        Self { parts: Vec::new() }
    }

    fn part(&mut self, label: impl Into<String>, ok: bool) -> &mut Self {
        self.parts.push((label.into(), ok));
        self
    }

    fn ok(&self) -> bool {
        self.parts.iter().all(|p| p.1)
    }

    fn summary(&self) -> String {
        self.parts
            .iter()
            .map(|(l, ok)| format!("{l}{}", if *ok { "" } else { " [x]" }))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[derive(Default)]
struct Run {
    unexpected: Vec<String>,
}

impl Run {
    fn report(&mut self, id: &str, title: &str, check: &Check, known_gap: Option<&str>) {
        let verdict = if check.ok() { "PASS" } else { "FAIL" };
        println!("{verdict} {id} {title}: {}", check.summary());
        if !check.ok() {
            // a known gap only excuses the parts it names
            let excused = known_gap.is_some_and(|gap| check.parts.iter().all(|(l, ok)| *ok || l.starts_with(gap)));
            if excused {
                println!("     known gap: {} ratios are unattainable in this model", known_gap.unwrap());
            } else {
                self.unexpected.push(id.to_string());
            }
        }
    }

    fn error(&mut self, id: &str, title: &str, e: Error) {
        println!("FAIL {id} {title}: {e}");
        self.unexpected.push(id.to_string());
    }
}

fn within(x: f64, want: f64, frac: f64) -> bool {
    ((x - want) / want).abs() <= frac
}

fn ratio(a: Complex64, b: Complex64) -> f64 {
    a.norm() / b.norm()
}

fn k_of(engine: &AmplitudeEngine, pump: &PumpSpec, crystal: &CrystalSpec, d: usize) -> Result<f64, Error> {
    let h = ((d - 1) / 2) as i32;
    let m = engine.spectrum(OamWindow::symmetric(h), pump, crystal)?;
    Ok(schmidt(&restrict(&m, d)?, DEFAULT_RANK_TOL)?.k)
}

fn engineer(engine: &AmplitudeEngine, name: &str) -> Result<EngineeredSource, Error> {
    pipeline_with(engine, &TargetState::preset(name).unwrap(), &PipelineOptions::default())
}

fn baseline(run: &mut Run, experimental: &AmplitudeEngine, idealized: &AmplitudeEngine) {
    let title = "Gaussian pump, periodic crystal, K(3x3) = 1.14 +- 0.05";
    let go = || -> Result<(f64, f64), Error> {
        let setup = experimental.setup();
        let crystal = CrystalSpec::periodic(setup.length)?;
        let k = k_of(experimental, &PumpSpec::gaussian(setup.w_p)?, &crystal, 3)?;
        let s = idealized.setup();
        let ki = k_of(idealized, &PumpSpec::gaussian(s.w_p)?, &CrystalSpec::periodic(s.length)?, 3)?;
        Ok((k, ki))
    };
    match go() {
        Ok((k, ki)) => {
            let mut c = Check::new();
            c.part(format!("K = {k:.4}"), (k - 1.14).abs() <= 0.05);
            run.report("1", title, &c, None);
            println!("     info: idealized waists/k_p give K = {ki:.4}");
        }
        Err(e) => run.error("1", title, e),
    }
}

fn pump_only(run: &mut Run, engine: &AmplitudeEngine) {
    let title = "pump-only Psi1, K(3x3) = 2.76 +- 0.10";
    let go = || -> Result<f64, Error> {
        let target = TargetState::preset("psi1").unwrap();
        let crystal = CrystalSpec::periodic(engine.setup().length)?;
        let pump = solve_pump_with(engine, &target, &crystal)?;
        k_of(engine, &pump, &crystal, 3)
    };
    match go() {
        Ok(k) => {
            let mut c = Check::new();
            c.part(format!("K = {k:.4}"), (k - 2.76).abs() <= 0.10);
            run.report("2", title, &c, None);
        }
        Err(e) => run.error("2", title, e),
    }
}

fn combined_psi1(run: &mut Run, engine: &AmplitudeEngine) -> Option<Vec<f64>> {
    let title = "pump + crystal Psi1";
    match engineer(engine, "psi1") {
        Ok(src) => {
            let c = &src.crystal_solution.coeffs;
            let (k, mes) = (src.schmidt.k, src.schmidt.is_mes);
            let c1 = c[1] / c[0];
            let a2 = ratio(src.pump.coefficient(2), src.pump.coefficient(0));
            let mut check = Check::new();
            check
                .part(format!("K = {k:.5} (>= 2.99)"), k >= 2.99)
                .part(format!("is_mes = {mes}"), mes)
                .part(format!("c1/c0 = {c1:.4} (-0.828 +- 5%)"), within(c1, -0.828, 0.05))
                .part(format!("|a2/a0| = {a2:.4} (1.422 +- 5%)"), within(a2, 1.422, 0.05));
            run.report("3", title, &check, None);
            Some(c.clone())
        }
        Err(e) => {
            run.error("3", title, e);
            None
        }
    }
}

fn psi3(run: &mut Run, engine: &AmplitudeEngine) {
    let title = "Psi3 in 5x5";
    match engineer(engine, "psi3") {
        Ok(src) => {
            let c = &src.crystal_solution.coeffs;
            let k = src.schmidt.k;
            let (c1, c2) = (c[1] / c[0], c[2] / c[0]);
            let a3 = ratio(src.pump.coefficient(3), src.pump.coefficient(0));
            let mut check = Check::new();
            check
                .part(format!("K = {k:.5} (>= 4.98)"), k >= 4.98)
                .part(format!("crystal c1/c0 = {c1:.4} (-1.038 +- 5%)"), within(c1, -1.038, 0.05))
                .part(format!("crystal c2/c0 = {c2:.4} (0.569 +- 5%)"), within(c2, 0.569, 0.05))
                .part(format!("|a3/a0| = {a3:.4} (1.643 +- 5%)"), within(a3, 1.643, 0.05));
            run.report("4", title, &check, Some("crystal c"));
        }
        Err(e) => run.error("4", title, e),
    }
}

fn psi4(run: &mut Run, engine: &AmplitudeEngine) {
    let title = "crystal-only Psi4 with Gaussian pump";
    match engineer(engine, "psi4") {
        Ok(src) => {
            let c = &src.crystal_solution.coeffs;
            let k = src.schmidt.k;
            let c1 = c[1] / c[0];
            let support: Vec<i32> = src.pump.support().collect();
            let mut check = Check::new();
            check
                .part(format!("K = {k:.5} (>= 2.99)"), k >= 2.99)
                .part(format!("pump charges {support:?}"), support == [0])
                .part(format!("c1/c0 = {c1:.4} (-1.549 +- 5%)"), within(c1, -1.549, 0.05));
            run.report("5", title, &check, None);
        }
        Err(e) => run.error("5", title, e),
    }
}

fn psi2(run: &mut Run, engine: &AmplitudeEngine) {
    let title = "Psi2 rejected for the (0,0)/(0,1) clash at N_R = 0";
    let want = Clash {
        unintended: (0, 0),
        target: (0, 1),
        rmn: 0,
    };
    let mut check = Check::new();
    match engineer(engine, "psi2") {
        Err(Error::Infeasible(Infeasibility::RmnClash(clashes))) => {
            check.part(format!("{} clashes reported, includes (0,0)/(0,1)", clashes.len()), clashes.contains(&want));
        }
        Err(e) => {
            check.part(format!("wrong error: {e}"), false);
        }
        Ok(_) => {
            check.part("accepted", false);
        }
    }
    run.report("6", title, &check, None);
}

fn max_rel_dev(values: &[Complex64]) -> f64 {
    values.iter().map(|v| rel(*v, values[0])).fold(0.0, f64::max)
}

fn properties(run: &mut Run, experimental: &AmplitudeEngine, idealized: &AmplitudeEngine) {
    let title = "property suite";
    let go = || -> Result<Check, Error> {
        let mut check = Check::new();
        let setup = *experimental.setup();
        let l = setup.length;

        // OAM conservation: only the pumped anti-diagonals survive
        let pump = PumpSpec::new([(0, Complex64::new(1.0, 0.0)), (2, Complex64::new(0.5, 0.5))], setup.w_p)?;
        let crystal = CrystalSpec::cosine(l, vec![1.0, -0.6, 0.2])?;
        let m = experimental.raw_spectrum(OamWindow::symmetric(3), &pump, &crystal)?;
        let max = m.entries().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let stray = m
            .iter()
            .filter(|(s, i, _)| s + i != 0 && s + i != 2)
            .map(|(_, _, v)| v.norm() / max)
            .fold(0.0, f64::max);
        check.part(format!("OAM zeros {stray:.1e}"), stray < 1e-12);

        // exchange symmetry
        let p = m.probabilities();
        let pmax = p.iter().cloned().fold(0.0, f64::max);
        let mut asym: f64 = 0.0;
        for (s, i, _) in m.iter() {
            let a = p[m.window().pairs().iter().position(|&q| q == (s, i)).unwrap()];
            let b = p[m.window().pairs().iter().position(|&q| q == (i, s)).unwrap()];
            asym = asym.max((a - b).abs() / pmax);
        }
        check.part(format!("exchange asymmetry {asym:.1e}"), asym < 1e-6);

        // independent 4D oracle
        let oracle_pump = PumpSpec::new([(1, Complex64::new(1.0, 0.0)), (-2, Complex64::new(0.4, -0.3))], setup.w_p)?;
        let oracle_crystal = CrystalSpec::cosine(l, vec![1.0, -0.7, 0.3])?;
        let modes = [(0, 1), (2, -1), (-1, -1), (1, -3), (-2, 0), (3, -2)];
        let slow: Vec<Complex64> = std::thread::scope(|sc| {
            let handles: Vec<_> = modes
                .iter()
                .map(|&(s, i)| {
                    let (p, c) = (&oracle_pump, &oracle_crystal);
                    sc.spawn(move || cartesian_amplitude(s, i, p, c, &setup, 40, 7.0))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut worst: f64 = 0.0;
        for (&(s, i), want) in modes.iter().zip(&slow) {
            let got = experimental.amplitude(s, i, 0, 0, &oracle_pump, &oracle_crystal)?;
            worst = worst.max(rel(got, *want));
        }
        check.part(format!("oracle on {} modes {worst:.1e}", modes.len()), worst < 1e-4);

        // SVD reconstruction
        let mut rng = StdRng::seed_from_u64(9);
        let a = CMatrix::from_fn(9, 9, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let back = svd(&a).reconstruct();
        let err = a.as_slice().iter().zip(back.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        check.part(format!("SVD 9x9 {err:.1e}"), err < 1e-10);

        // equal relative mode numbers stay proportional under any crystal
        let s = idealized.setup();
        let sigma = s.length / 4.0;
        let rmn_pump = PumpSpec::new(
            [(0, Complex64::new(1.0, 0.0)), (2, Complex64::new(1.0, 0.0)), (3, Complex64::new(1.0, 0.0))],
            s.w_p,
        )?;
        let (mut p0, mut p1, mut red) = (Vec::new(), Vec::new(), Vec::new());
        for seed in 0..10 {
            let coeffs = random_coeffs(seed, 3);
            let cr = CrystalSpec::cosine(s.length, coeffs.clone())?;
            let amp = |ls, li| idealized.amplitude(ls, li, 0, 0, &rmn_pump, &cr);
            p0.push(amp(1, 1)? / amp(0, 2)?);
            p1.push(amp(1, 2)? / amp(0, 3)?);
            let r = reduced_amplitude(-2, &coeffs, s, sigma)? / reduced_amplitude(0, &coeffs, s, sigma)?;
            red.push(amp(1, -1)? / amp(0, 0)? / r);
        }
        let spread = max_rel_dev(&p0).max(max_rel_dev(&p1)).max(max_rel_dev(&red));
        check.part(format!("RMN proportionality over 10 crystals {spread:.1e}"), spread < 1e-3);

        // doubling every node count
        let finer = AmplitudeEngine::new(&setup, &experimental.quadrature().doubled())?;
        let dp = PumpSpec::new([(-2, Complex64::new(2.46, 0.0)), (0, Complex64::new(1.73, 0.0))], setup.w_p)?;
        let dc = CrystalSpec::cosine(l, vec![1.0, -0.828])?;
        let x = experimental.raw_spectrum(OamWindow::symmetric(1), &dp, &dc)?;
        let y = finer.raw_spectrum(OamWindow::symmetric(1), &dp, &dc)?;
        let drift = x
            .iter()
            .zip(y.iter())
            .filter(|(_, b)| b.2.norm() > 0.0)
            .map(|(a, b)| rel(a.2, b.2))
            .fold(0.0, f64::max);
        check.part(format!("doubling drift {drift:.1e}"), drift < 1e-6);
        Ok(check)
    };
    match go() {
        Ok(check) => run.report("7", title, &check, None),
        Err(e) => run.error("7", title, e),
    }
}

fn poling(run: &mut Run, engine: &AmplitudeEngine, coeffs: Option<Vec<f64>>) {
    let title = "poling synthesis of the Psi1 crystal";
    let go = || -> Result<Check, Error> {
        let l = engine.setup().length;
        let coeffs = match coeffs {
            Some(c) => c,
            None => solve_crystal_with(engine, &TargetState::preset("psi1").unwrap(), 1)?.coeffs,
        };
        let grid = default_dk_grid(l);
        let err = |n| pmf_error(&synthesize(&coeffs, l / 4.0, l, n)?, &coeffs, l / 4.0, &grid);
        let at2000 = err(2000)?;
        let ladder = [256, 512, 1024, 2048].map(err);
        let ladder: Vec<f64> = ladder.into_iter().collect::<Result<_, _>>()?;
        let monotone = ladder.windows(2).all(|w| w[1] <= w[0]);
        let mut check = Check::new();
        check
            .part(format!("error at 2000 domains {:.2}%", 100.0 * at2000), at2000 < 0.05)
            .part(
                format!(
                    "256/512/1024/2048 -> {}",
                    ladder.iter().map(|e| format!("{:.2}%", 100.0 * e)).collect::<Vec<_>>().join(" ")
                ),
                monotone,
            );
        Ok(check)
    };
    match go() {
        Ok(check) => run.report("8", title, &check, None),
        Err(e) => run.error("8", title, e),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let quad = QuadratureConfig::default();
    let experimental = AmplitudeEngine::new(&SetupParams::reference(), &quad).unwrap();
    let idealized = AmplitudeEngine::new(&SetupParams::reference_idealized(), &quad).unwrap();
    let mut run = Run::default();

    baseline(&mut run, &experimental, &idealized);
    pump_only(&mut run, &experimental);
    let psi1_c = combined_psi1(&mut run, &experimental);
    psi3(&mut run, &experimental);
    psi4(&mut run, &experimental);
    psi2(&mut run, &experimental);
    properties(&mut run, &experimental, &idealized);
    poling(&mut run, &experimental, psi1_c);

    println!("acceptance finished in {:.1} s", started.elapsed().as_secs_f64());
    if run.unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", run.unexpected.join(", "));
        ExitCode::FAILURE
    }
}
