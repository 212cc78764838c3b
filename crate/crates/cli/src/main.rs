use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oam_mes::amplitude::AmplitudeEngine;
use oam_mes::engineering::{pipeline_with, EngineeredSource, PipelineOptions, TargetState};
use oam_mes::entanglement::{is_mes, restrict};
use oam_mes::export;
use oam_mes::mode_math::{render_pump_profile, ProfileGrid, PumpSpec};
use oam_mes::phase_matching::{pmf_samples, CrystalSpec};
use oam_mes::poling::{default_dk_grid, pmf_error, synthesize, PolingPattern};
use oam_mes::scenario::{CrystalConfig, OutputFormat, PumpConfig, Scenario, ScenarioConfig, SetupConfig};
use oam_mes::Error;
use serde::{Deserialize, Serialize};

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;
/// Output could not be written.
const EXIT_IO: u8 = 1;

/// SPDC biphoton OAM spectra and engineering of maximally entangled sources.
#[derive(Parser)]
#[command(name = "oam-mes", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Biphoton OAM spectrum and Schmidt analysis of the configured source.
    Spectrum(Common),
    /// Solve pump and crystal for a target state and export the result.
    Engineer {
        #[command(flatten)]
        common: Common,
        /// Target state file, or one of psi1, psi2, psi3, psi4.
        #[arg(long)]
        target: String,
    },
    /// Binary poling pattern approximating a cosine-series crystal.
    Poling {
        #[command(flatten)]
        common: Common,
        /// JSON file with the coefficients, either `[c0, c1, ...]` or `{"c": [...], "sigma": ...}`.
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long, default_value_t = 2000)]
        domains: usize,
    },
    /// Phase-matching function of the configured crystal.
    Pmf(Common),
    /// Transverse field of the configured pump.
    PumpProfile {
        #[command(flatten)]
        common: Common,
        /// Samples per side.
        #[arg(long, default_value_t = 128)]
        samples: usize,
        /// Half side length in units of the pump waist.
        #[arg(long, default_value_t = 3.0)]
        extent: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file, or `reference` / `reference-idealized`. Defaults to `reference`.
    #[arg(long)]
    config: Option<String>,
    /// Output directory; overrides the scenario's `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format of spectrum tables; overrides the scenario's `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            e if e.is_numerical() => EXIT_NUMERICAL,
            Error::Io(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Resolved scenario plus where and how to write.
struct Context {
    config: ScenarioConfig,
    scenario: Scenario,
    out: PathBuf,
    format: OutputFormat,
}

impl Context {
    fn load(common: &Common) -> CliResult<Self> {
        let config = match common.config.as_deref() {
            None | Some("reference") => ScenarioConfig::default(),
            Some("reference-idealized") => ScenarioConfig {
                setup: SetupConfig::ReferenceIdealized,
                ..Default::default()
            },
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("reading config `{path}`: {e}")))?;
                ScenarioConfig::from_json(&text).map_err(|e| Failure::config(format!("config `{path}`: {e}")))?
            }
        };
        let scenario = config.resolve()?;
        let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&scenario.output.dir));
        let format = match common.format {
            Some(Format::Csv) => OutputFormat::Csv,
            Some(Format::Json) => OutputFormat::Json,
            None => scenario.output.format,
        };
        Ok(Self {
            config,
            scenario,
            out,
            format,
        })
    }

    fn engine(&self) -> CliResult<AmplitudeEngine> {
        Ok(AmplitudeEngine::new(&self.scenario.setup, &self.scenario.quadrature)?)
    }

    fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.out).map_err(|e| io_failure(&self.out, e))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| io_failure(&path, e))?;
        Ok(path)
    }

    fn write_spectrum(&self, m: &oam_mes::amplitude::AmplitudeMatrix) -> CliResult<PathBuf> {
        match self.format {
            OutputFormat::Csv => self.write("spectrum.csv", &export::spectrum_csv(m)),
            OutputFormat::Json => self.write("spectrum.json", &export::spectrum_json(m)?),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("writing `{}`: {e}", path.display()),
    }
}

fn announce(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn spectrum(common: &Common) -> CliResult<()> {
    let ctx = Context::load(common)?;
    let s = &ctx.scenario;
    let m = ctx.engine()?.spectrum(s.window, &s.pump, &s.crystal)?;
    let report = is_mes(&restrict(&m, s.d)?, oam_mes::engineering::MES_TOL)?;
    let paths = [
        ctx.write_spectrum(&m)?,
        ctx.write("schmidt.json", &export::schmidt_json(&report)?)?,
    ];
    announce(&paths);
    println!("K({d}x{d}) = {:.6}, MES: {}", report.k, report.is_mes, d = s.d);
    Ok(())
}

fn load_target(spec: &str) -> CliResult<TargetState> {
    if let Some(t) = TargetState::preset(spec) {
        return Ok(t);
    }
    let text = fs::read_to_string(spec).map_err(|e| Failure::config(format!("reading target `{spec}`: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("target `{spec}`: {e}")))
}

/// Coefficient file written by `engineer` and read by `poling`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoeffFile {
    Bare(Vec<f64>),
    Full {
        c: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
}

fn engineer(common: &Common, target: &str) -> CliResult<()> {
    let ctx = Context::load(common)?;
    let target = load_target(target)?;
    let engine = ctx.engine()?;
    let opts = PipelineOptions {
        window: Some(ctx.scenario.window),
        ..Default::default()
    };
    let src = match pipeline_with(&engine, &target, &opts) {
        Ok(src) => src,
        Err(Error::Infeasible(reason)) => {
            let path = ctx.write("engineer.json", &export::infeasible_report_json(&reason)?)?;
            announce(&[path]);
            return Err(Error::Infeasible(reason).into());
        }
        Err(e) => return Err(e.into()),
    };
    let paths = write_engineered(&ctx, &src)?;
    announce(&paths);
    let c = &src.crystal_solution.coeffs;
    println!(
        "K({d}x{d}) = {:.6}, MES: {}, fidelity {:.6}",
        src.schmidt.k,
        src.schmidt.is_mes,
        src.fidelity,
        d = target.d()
    );
    println!("c = {c:?}");
    for (l, a) in src.pump.terms() {
        println!("a[{l}] = {:.6} exp({:.6} i)", a.norm(), a.arg());
    }
    Ok(())
}

fn write_engineered(ctx: &Context, src: &EngineeredSource) -> CliResult<Vec<PathBuf>> {
    let l = src.crystal.length;
    let grid = ProfileGrid::new(3.0 * src.pump.w_p(), 128)?;
    let scenario = ScenarioConfig {
        pump: PumpConfig::from_spec(&src.pump),
        crystal: CrystalConfig::Cosine {
            c: src.crystal_solution.coeffs.clone(),
            sigma: None,
        },
        d: src.target.d(),
        ..ctx.config.clone()
    };
    let coeffs = CoeffFile::Full {
        c: src.crystal_solution.coeffs.clone(),
        sigma: Some(l / 4.0),
    };
    Ok(vec![
        ctx.write("engineer.json", &export::engineer_report_json(src)?)?,
        ctx.write_spectrum(&src.achieved)?,
        ctx.write("schmidt.json", &export::schmidt_json(&src.schmidt)?)?,
        ctx.write("pmf.csv", &export::pmf_csv(&pmf_samples(&src.crystal, -20.0, 20.0, 401)))?,
        ctx.write("pump_profile.csv", &export::pump_profile_csv(&render_pump_profile(&src.pump, &grid)?))?,
        ctx.write("crystal.json", &export::to_json(&coeffs)?)?,
        ctx.write("scenario.json", &scenario.to_json()?)?,
    ])
}

#[derive(Serialize)]
struct PolingSummary {
    n_domains: usize,
    domain_width: f64,
    #[serde(rename = "L")]
    length: f64,
    sigma: f64,
    c: Vec<f64>,
    pmf_error: f64,
    grid_points: usize,
}

fn poling(common: &Common, coeffs: &Path, domains: usize) -> CliResult<()> {
    let ctx = Context::load(common)?;
    let text = fs::read_to_string(coeffs)
        .map_err(|e| Failure::config(format!("reading coefficients `{}`: {e}", coeffs.display())))?;
    let parsed: CoeffFile = serde_json::from_str(&text)
        .map_err(|e| Failure::config(format!("coefficients `{}`: {e}", coeffs.display())))?;
    let l = ctx.scenario.setup.length;
    let (c, sigma) = match parsed {
        CoeffFile::Bare(c) => (c, l / 4.0),
        CoeffFile::Full { c, sigma } => (c, sigma.unwrap_or(l / 4.0)),
    };
    let pattern: PolingPattern = synthesize(&c, sigma, l, domains)?;
    let grid = default_dk_grid(l);
    let error = pmf_error(&pattern, &c, sigma, &grid)?;
    let summary = PolingSummary {
        n_domains: domains,
        domain_width: export::round12(pattern.domain_width()),
        length: export::round12(l),
        sigma: export::round12(sigma),
        c: c.iter().copied().map(export::round12).collect(),
        pmf_error: export::round12(error),
        grid_points: grid.len(),
    };
    let poled: CrystalSpec = pattern.crystal()?;
    let paths = [
        ctx.write("poling.txt", &pattern.to_text())?,
        ctx.write("poling_error.json", &export::to_json(&summary)?)?,
        ctx.write("poling_pmf.csv", &export::pmf_csv(&pmf_samples(&poled, -20.0, 20.0, 401)))?,
    ];
    announce(&paths);
    println!("{domains} domains, relative PMF error {:.3}%", 100.0 * error);
    Ok(())
}

fn pmf(common: &Common) -> CliResult<()> {
    let ctx = Context::load(common)?;
    let path = ctx.write("pmf.csv", &export::pmf_csv(&pmf_samples(&ctx.scenario.crystal, -20.0, 20.0, 401)))?;
    announce(&[path]);
    Ok(())
}

fn pump_profile(common: &Common, samples: usize, extent: f64) -> CliResult<()> {
    let ctx = Context::load(common)?;
    let pump: &PumpSpec = &ctx.scenario.pump;
    let grid = ProfileGrid::new(extent * pump.w_p(), samples)?;
    let path = ctx.write("pump_profile.csv", &export::pump_profile_csv(&render_pump_profile(pump, &grid)?))?;
    announce(&[path]);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(common) => spectrum(common),
        Command::Engineer { common, target } => engineer(common, target),
        Command::Poling { common, coeffs, domains } => poling(common, coeffs, *domains),
        Command::Pmf(common) => pmf(common),
        Command::PumpProfile { common, samples, extent } => pump_profile(common, *samples, *extent),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
