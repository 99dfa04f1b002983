//! The `thermo` command line: JSON documents in, deterministic JSON reports out.
//!
//! Exit codes: 0 on success, 2 for malformed input or invalid arguments,
//! 3 when a depth or size cap is exceeded, 1 for numerical failures.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::detect::{
    c2_certificate, compensation_verdict, fit_h, Candidate, CandidateDoc, VerdictOptions,
};
use crate::error::{Error, Result};
use crate::factor::{FactorDoc, OneBlockFactor};
use crate::gibbs::{pushforward_sandwich, transfer_pressure, weak_gibbs_constants, MarkovMeasure, MarkovMeasureDoc, Pressure};
use crate::par;
use crate::potential::{LocallyConstantPotential, PotentialDoc};
use crate::seq::{
    additive_table, build_g_table_with, check_d2, check_subadditive, defect_profile, pressure_estimate, NumericMode,
    SeqTable, TableDoc,
};
use crate::shift::{Sft, SftDoc};
use crate::trend::DEFAULT_SLOPE_THRESHOLD;

#[derive(Debug, Parser)]
#[command(name = "thermo", version, about = "Relative pressure, Gibbs data and compensation tests on shifts of finite type")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partition sums and pressure estimates of the fiber-sum table.
    Pressure(PressureArgs),
    /// Fit a finite-range h and run the compensation verdict on it.
    FitH(FitArgs),
    /// Compensation verdict for a given (or fitted) candidate h.
    Verdict(VerdictArgs),
    /// Weak-Gibbs constants of a measure and the pushforward sandwich.
    WeakGibbs(WeakGibbsArgs),
    /// The almost-additivity defect profile log C_{n,m}.
    ProfileCnm(ProfileArgs),
    /// Periodic lower-bound certificate for an image word.
    Certificate(CertificateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Auto,
    Exact,
    Float,
}

impl From<Mode> for NumericMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Auto => NumericMode::Auto,
            Mode::Exact => NumericMode::Exact,
            Mode::Float => NumericMode::Float,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Largest word length tabulated.
    #[arg(long, default_value_t = 12)]
    pub depth: usize,
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    pub mode: Mode,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Source {
    /// Shift of finite type (identity factor).
    #[arg(long, conflicts_with_all = ["factor", "table"])]
    pub sft: Option<PathBuf>,
    /// One-block factor: domain shift and symbol map.
    #[arg(long, conflicts_with = "table")]
    pub factor: Option<PathBuf>,
    /// Potential on the domain; zero when omitted.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Precomputed sequence table.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PressureArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
}

#[derive(Debug, Args)]
pub struct Orbits {
    /// Largest period of the periodic orbits checked.
    #[arg(long, default_value_t = 6)]
    pub pmax: usize,
    /// Cap on the multiples j of each period.
    #[arg(long)]
    pub multiples: Option<usize>,
    /// Slope above which log C_{n,m} counts as linear growth.
    #[arg(long, default_value_t = DEFAULT_SLOPE_THRESHOLD)]
    pub slope: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub orbits: Orbits,
    #[arg(long, default_value_t = 1)]
    pub range: usize,
    /// Fitting depth; defaults to the deepest one available.
    #[arg(long)]
    pub n_fit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerdictArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub orbits: Orbits,
    /// Candidate h on the image; fitted with --range when omitted.
    #[arg(long)]
    pub h: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub range: usize,
}

#[derive(Debug, Args)]
pub struct WeakGibbsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    /// Markov measure on the domain; the equilibrium state of the potential
    /// when omitted.
    #[arg(long)]
    pub measure: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    /// Also check bridged splittings with gaps up to this length.
    #[arg(long)]
    pub gap: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SLOPE_THRESHOLD)]
    pub slope: f64,
    /// Emit `n,m,logC,D` rows instead of JSON.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct CertificateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    /// Source word on the image alphabet.
    #[arg(long)]
    pub word: String,
    /// Longest bridge; defaults to the weak specification number.
    #[arg(long)]
    pub gap: Option<usize>,
    #[arg(long)]
    pub multiples: Option<usize>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

struct Loaded {
    factor: Option<OneBlockFactor>,
    potential: Option<LocallyConstantPotential>,
    table: SeqTable,
    origin: &'static str,
}

fn load_system(src: &Source) -> Result<(OneBlockFactor, LocallyConstantPotential, &'static str)> {
    let (pi, origin) = match (&src.sft, &src.factor) {
        (Some(p), None) => (OneBlockFactor::identity(Sft::from_doc(&read_json::<SftDoc>(p)?)?), "sft"),
        (None, Some(p)) => (OneBlockFactor::from_doc(&read_json::<FactorDoc>(p)?)?, "factor"),
        _ => return Err(Error::InvalidArgument("give exactly one of --sft, --factor or --table".into())),
    };
    let f = match &src.potential {
        Some(p) => LocallyConstantPotential::from_doc(&read_json::<PotentialDoc>(p)?, pi.domain())?,
        None => LocallyConstantPotential::zero(pi.domain()),
    };
    Ok((pi, f, origin))
}

fn load(src: &Source, common: &Common) -> Result<Loaded> {
    if common.depth == 0 {
        return Err(Error::InvalidArgument("--depth must be positive".into()));
    }
    if let Some(p) = &src.table {
        if src.potential.is_some() {
            return Err(Error::InvalidArgument("--potential does not apply to --table".into()));
        }
        let t = SeqTable::from_doc(&read_json::<TableDoc>(p)?)?;
        if common.depth > t.depth_max() {
            return Err(Error::DepthUnavailable {
                requested: common.depth,
                available: t.depth_max(),
            });
        }
        return Ok(Loaded {
            factor: None,
            potential: None,
            table: t.truncated(common.depth),
            origin: "table",
        });
    }
    let (pi, f, origin) = load_system(src)?;
    let table = build_g_table_with(&pi, &f, common.depth, common.mode.into())?;
    Ok(Loaded {
        factor: Some(pi),
        potential: Some(f),
        table,
        origin,
    })
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    command: &'static str,
    source: &'static str,
    depth: usize,
    exact: bool,
    result: T,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn report<T: Serialize>(command: &'static str, loaded: &Loaded, common: &Common, result: T) -> Result<()> {
    let env = Envelope {
        command,
        source: loaded.origin,
        depth: loaded.table.depth_max(),
        exact: loaded.table.is_exact(),
        result,
    };
    let mut text = serde_json::to_string_pretty(&env)?;
    text.push('\n');
    emit(common.out.as_deref(), &text)
}

fn verdict_options(o: &Orbits) -> VerdictOptions {
    VerdictOptions {
        p_max: o.pmax,
        multiples: o.multiples,
        slope_threshold: o.slope,
    }
}

fn cmd_pressure(a: &PressureArgs) -> Result<()> {
    let loaded = load(&a.source, &a.common)?;
    #[derive(Serialize)]
    struct Out {
        estimate: crate::seq::PressureEstimate,
        subadditivity: crate::seq::SubadditivityReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        transfer: Option<crate::gibbs::GibbsSummary>,
    }
    let transfer = match (&loaded.factor, &loaded.potential) {
        (Some(pi), Some(f)) if pi.domain().is_irreducible() => Some(transfer_pressure(pi.domain(), f)?.summary()),
        _ => None,
    };
    let out = Out {
        estimate: pressure_estimate(&loaded.table)?,
        subadditivity: check_subadditive(&loaded.table)?,
        transfer,
    };
    report("pressure", &loaded, &a.common, out)
}

fn cmd_fit_h(a: &FitArgs) -> Result<()> {
    let loaded = load(&a.source, &a.common)?;
    let depth = loaded.table.depth_max();
    let n_fit = a.n_fit.unwrap_or((depth + 1).saturating_sub(a.range));
    let fit = fit_h(&loaded.table, a.range, n_fit)?;
    let verdict = compensation_verdict(
        &loaded.table,
        loaded.factor.as_ref(),
        &fit.candidate,
        &verdict_options(&a.orbits),
    )?;
    #[derive(Serialize)]
    struct Out {
        fit: crate::detect::FitResult,
        verdict: crate::detect::VerdictReport,
    }
    report("fit-h", &loaded, &a.common, Out { fit, verdict })
}

fn cmd_verdict(a: &VerdictArgs) -> Result<()> {
    let loaded = load(&a.source, &a.common)?;
    let candidate = match &a.h {
        Some(p) => Candidate::from_doc(&read_json::<CandidateDoc>(p)?, loaded.table.alphabet())?,
        None => {
            let depth = loaded.table.depth_max();
            fit_h(&loaded.table, a.range, (depth + 1).saturating_sub(a.range))?.candidate
        }
    };
    let rep = compensation_verdict(
        &loaded.table,
        loaded.factor.as_ref(),
        &candidate,
        &verdict_options(&a.orbits),
    )?;
    report("verdict", &loaded, &a.common, rep)
}

fn cmd_weak_gibbs(a: &WeakGibbsArgs) -> Result<()> {
    if a.source.table.is_some() {
        return Err(Error::InvalidArgument("weak-gibbs needs --sft or --factor".into()));
    }
    let (pi, f, origin) = load_system(&a.source)?;
    let depth = a.common.depth;
    let domain = pi.domain();
    let gibbs = transfer_pressure(domain, &f)?;
    let mu = match &a.measure {
        Some(p) => MarkovMeasure::from_doc(&read_json::<MarkovMeasureDoc>(p)?, domain.alphabet())?,
        None => gibbs.measure.clone(),
    };
    mu.check_support(domain)?;
    let x_table = additive_table(domain, &f, depth)?;
    let est = pressure_estimate(&x_table)?;
    let pressure = match est.exact_base {
        Some(_) => Pressure::from_estimate(&est),
        None => Pressure::Transfer { value: gibbs.pressure },
    };
    let weak = weak_gibbs_constants(&mu, &x_table, &pressure, depth)?;
    let sandwich = pushforward_sandwich(&mu, &pi, &f, depth)?;
    #[derive(Serialize)]
    struct Out {
        transfer: crate::gibbs::GibbsSummary,
        measure_exact: bool,
        weak_gibbs: crate::gibbs::WeakGibbsReport,
        sandwich: crate::gibbs::SandwichReport,
    }
    let loaded = Loaded {
        factor: None,
        potential: None,
        table: x_table,
        origin,
    };
    let out = Out {
        transfer: gibbs.summary(),
        measure_exact: mu.is_exact(),
        weak_gibbs: weak,
        sandwich,
    };
    report("weak-gibbs", &loaded, &a.common, out)
}

fn cmd_profile(a: &ProfileArgs) -> Result<()> {
    let loaded = load(&a.source, &a.common)?;
    let mut profile = defect_profile(&loaded.table, a.slope)?;
    if let Some(gap) = a.gap {
        profile.d2 = Some(check_d2(&loaded.table, gap)?);
    }
    if a.csv {
        return emit(a.common.out.as_deref(), &profile.to_csv());
    }
    report("profile-cnm", &loaded, &a.common, profile)
}

fn cmd_certificate(a: &CertificateArgs) -> Result<()> {
    if a.source.table.is_some() {
        return Err(Error::InvalidArgument("certificate needs --sft or --factor".into()));
    }
    let loaded = load(&a.source, &a.common)?;
    let pi = loaded.factor.as_ref().expect("built from a factor");
    let f = loaded.potential.as_ref().expect("built from a factor");
    let u = loaded.table.parse_word(&a.word)?;
    let gap = match a.gap {
        Some(g) => g,
        None => pi.domain().weak_spec_number().ok_or(Error::NotIrreducible)?,
    };
    let multiples = a
        .multiples
        .unwrap_or_else(|| (loaded.table.depth_max() / (u.len() + gap).max(1)).max(1));
    let cert = c2_certificate(&loaded.table, pi, f, &u, gap, multiples)?;
    report("certificate", &loaded, &a.common, cert)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CapExceeded(_) | Error::DepthUnavailable { .. } => 3,
        Error::Numerical(_) => 1,
        _ => 2,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Pressure(a) => cmd_pressure(a),
        Command::FitH(a) => cmd_fit_h(a),
        Command::Verdict(a) => cmd_verdict(a),
        Command::WeakGibbs(a) => cmd_weak_gibbs(a),
        Command::ProfileCnm(a) => cmd_profile(a),
        Command::Certificate(a) => cmd_certificate(a),
    }
}

/// Entry point for the binary: parses `args`, honours `THERMO_THREADS`,
/// and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Ok(v) = std::env::var("THERMO_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => par::init_threads(n),
            _ => {
                eprintln!("error: THERMO_THREADS must be a positive integer, got `{v}`");
                return 2;
            }
        }
    }
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
