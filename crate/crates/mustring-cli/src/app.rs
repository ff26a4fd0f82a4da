use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use mustring::bogoliubov::{self, Embedding, EndCondition};
use mustring::dynamics::{self, presets, CauchyData, Evolution, Field};
use mustring::fock::{self, OneParticleVector};
use mustring::model::{derive_constants, load_config, StringParams};
use mustring::mu_space::MuFunction;
use mustring::param_mech::{self as pm, Lapse, ObservableKind, PMState, Potential};
use mustring::quadrature::Quadrature;
use mustring::spectrum::{self, find_modes};
use mustring::C64;
use serde::Serialize;

use crate::output::{self, Cell, RunManifest, Table, SCHEMA_VERSION};
use crate::verify;

const DEFAULT_SEED: u64 = 20_240_917;
pub const THREADS_ENV: &str = "MUSTRING_THREADS";

#[derive(Debug, Parser)]
#[command(name = "mustring", version, about = "Spectra, dynamics and quantization of a string with endpoint masses")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Parameter file (keys rho, gamma, ell, m0, ml, k0, kl, eps0, epsl).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted. Tables are written as JSON when the name ends in .json.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Numerical tolerance (quadrature or Fock truncation, per subcommand).
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
    #[arg(long, global = true, value_name = "S", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Report errors on stderr as JSON.
    #[arg(long, global = true)]
    json_errors: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normal modes: m, omega, gm, Xhat(0), Xhat(ell), residual.
    Modes {
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Mode-sum evolution of named initial data.
    Evolve {
        /// gaussian[:center:width:amp], single-mode:M or two-mode:M1:M2.
        #[arg(long, default_value = "gaussian")]
        preset: String,
        /// Number of modes kept.
        #[arg(long, default_value_t = 40)]
        cutoff: usize,
        /// Number of time samples.
        #[arg(long, default_value_t = 101)]
        count: usize,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
    },
    /// Fock-space diagnostics.
    Fock {
        /// factorization, or trace[:M1[:M2]] for the boundary-trace rate.
        #[arg(long, default_value = "factorization")]
        preset: String,
        /// Number of modes.
        #[arg(long)]
        cutoff: Option<usize>,
        /// Fock truncation for the coherent-state norm; chosen from --tol when omitted.
        #[arg(long)]
        nmax: Option<u32>,
        /// Number of time samples for the trace series.
        #[arg(long, default_value_t = 101)]
        count: usize,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
    },
    /// Bogoliubov coefficients and unitarity classification between two embeddings.
    Bogoliubov {
        /// Final embedding: flat[:t0], tilted:S or bump:A.
        #[arg(long, default_value = "tilted:0.3")]
        preset: String,
        /// Initial embedding, same syntax.
        #[arg(long, default_value = "flat")]
        initial: String,
        /// Largest mode number N; partial sums are reported at N/8, N/4, N/2, N.
        #[arg(long, visible_alias = "n", default_value_t = 40)]
        cutoff: usize,
        /// dirichlet, neumann or robin:R0:RL.
        #[arg(long, default_value = "dirichlet")]
        ends: String,
        /// Also write |beta_lm| as CSV.
        #[arg(long, value_name = "PATH")]
        beta_csv: Option<PathBuf>,
    },
    /// Parametrized mechanics orbit and observables.
    Pmech {
        /// Potential: free, harmonic[:K] or quartic[:LAMBDA].
        #[arg(long, default_value = "harmonic:1")]
        preset: String,
        /// Lapse: one, const:C or sin:A (N = 1 + A sin s).
        #[arg(long, default_value = "one")]
        lapse: String,
        #[arg(long, default_value_t = 1.0)]
        q0: f64,
        #[arg(long, default_value_t = 0.0)]
        p0: f64,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 10.0)]
        s_end: f64,
        /// Number of RK4 steps.
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        /// Gauge-fixing times for the observables.
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        tau: Vec<f64>,
        /// Write observables as JSON here; the trajectory goes to --out.
        #[arg(long, value_name = "PATH")]
        observables: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Smaller sizes for the two slowest criteria.
        #[arg(long)]
        quick: bool,
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] mustring::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{failed} of {total} acceptance criteria failed")]
    Criteria { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        if self.exit_code() == 1 {
            "validation"
        } else {
            "numerical"
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Serialize)]
struct ErrorReport<'a> {
    schema_version: u32,
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    exit_code: i32,
    message: String,
}

fn report(json: bool, e: &CliError) {
    if json {
        let r = ErrorReport {
            schema_version: SCHEMA_VERSION,
            error: ErrorBody { kind: e.kind(), exit_code: e.exit_code(), message: e.to_string() },
        };
        eprintln!("{}", output::to_json_compact(&r));
    } else {
        eprintln!("error: {e}");
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json = args.iter().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim_end().to_string());
            report(json, &err);
            return err.exit_code();
        }
    };
    match configure_threads().and_then(|_| execute(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            report(cli.json_errors, &e);
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    #[cfg(feature = "parallel")]
    {
        // a pool that already exists (repeated in-process runs) is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if n == 1 {
        mustring::par::force_sequential(true);
    }
    Ok(())
}

fn params(cli: &Cli) -> Result<StringParams> {
    Ok(match &cli.config {
        Some(p) => load_config(p)?,
        None => verify::measure_params(),
    })
}

fn manifest(cli: &Cli, name: &str, p: &StringParams) -> RunManifest {
    RunManifest {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        subcommand: name.into(),
        config: *p,
        config_path: cli.config.as_ref().map(|p| p.display().to_string()),
        count: None,
        cutoff: None,
        nmax: None,
        preset: None,
        tol: cli.tol,
        seed: cli.seed,
        out: cli.out.as_ref().map(|p| p.display().to_string()),
        extra: Vec::new(),
    }
}

fn write(path: Option<&Path>, text: &str) -> Result<()> {
    output::emit(path, text).map_err(|source| CliError::Io {
        path: path.map_or("stdout".into(), |p| p.display().to_string()),
        source,
    })
}

fn is_json(path: Option<&Path>) -> bool {
    path.and_then(|p| p.extension()).is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[derive(Serialize)]
struct JsonTable<'a> {
    columns: &'a [&'static str],
    rows: Vec<Vec<serde_json::Value>>,
}

/// Table as CSV, or as a JSON document when `--out` ends in `.json`.
fn write_table(cli: &Cli, m: &RunManifest, t: &Table) -> Result<()> {
    let path = cli.out.as_deref();
    if is_json(path) {
        let rows = t
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| match c {
                        Cell::Int(i) => serde_json::Value::from(*i),
                        Cell::Float(x) => serde_json::Value::from(*x),
                        Cell::Text(s) => serde_json::Value::from(s.as_str()),
                    })
                    .collect()
            })
            .collect();
        write(path, &output::json_document(m, &JsonTable { columns: &t.header, rows }))
    } else {
        write(path, &t.render(m))
    }
}

fn positive_tol(cli: &Cli, default: f64) -> Result<f64> {
    match cli.tol {
        None => Ok(default),
        Some(t) if t > 0.0 && t.is_finite() => Ok(t),
        Some(t) => Err(CliError::Usage(format!("--tol must be positive, got {t}"))),
    }
}

fn require_coupled(p: &StringParams) -> Result<()> {
    if p.eps0 != 1.0 || p.epsl != 1.0 {
        return Err(CliError::Usage(
            "eps0 = 0 or epsl = 0 (decoupled Dirichlet ends) is only supported by the constraint chain".into(),
        ));
    }
    Ok(())
}

fn positive(name: &str, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(CliError::Usage(format!("{name} must be at least 1")));
    }
    Ok(n)
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Modes { count } => modes(cli, *count),
        Command::Evolve { preset, cutoff, count, t_end } => evolve(cli, preset, *cutoff, *count, *t_end),
        Command::Fock { preset, cutoff, nmax, count, t_end } => fock_cmd(cli, preset, *cutoff, *nmax, *count, *t_end),
        Command::Bogoliubov { preset, initial, cutoff, ends, beta_csv } => {
            bogoliubov_cmd(cli, preset, initial, *cutoff, ends, beta_csv.as_deref())
        }
        Command::Pmech { preset, lapse, q0, p0, mass, s_end, count, tau, observables } => {
            pmech(cli, preset, lapse, PMState::new(*q0, 0.0, *p0), *mass, *s_end, *count, tau, observables.as_deref())
        }
        Command::Verify { quick, only } => verify_cmd(cli, *quick, only),
    }
}

fn modes(cli: &Cli, count: usize) -> Result<()> {
    let p = params(cli)?;
    p.require_spring()?;
    require_coupled(&p)?;
    let r = p.ratios();
    let table = find_modes(&r, positive("--count", count)?)?;
    let mut m = manifest(cli, "modes", &p);
    m.count = Some(count);
    let mut t = Table::new(vec!["m", "omega", "gm", "Xhat(0)", "Xhat(ell)", "residual"]);
    for mode in &table.modes {
        t.push(vec![
            mode.index.into(),
            mode.omega.into(),
            mode.gm.into(),
            mode.trace[0].into(),
            mode.trace[1].into(),
            spectrum::root_residual(mode.omega, &r).into(),
        ]);
    }
    write_table(cli, &m, &t)
}

enum InitialData {
    Gaussian { center: f64, width: f64, amp: f64 },
    Modes(Vec<usize>),
}

fn parse_numbers(spec: &str, args: &str) -> Result<Vec<f64>> {
    args.split(':')
        .map(|a| {
            a.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("bad number '{a}' in preset '{spec}'")))
        })
        .collect()
}

fn parse_initial(spec: &str, ell: f64) -> Result<InitialData> {
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let nums = if args.is_empty() { Vec::new() } else { parse_numbers(spec, args)? };
    let index = |x: f64| -> Result<usize> {
        if x >= 1.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(CliError::Usage(format!("mode numbers start at 1, got {x} in '{spec}'")))
        }
    };
    match (name, nums.as_slice()) {
        ("gaussian", []) => Ok(InitialData::Gaussian { center: 0.5 * ell, width: 0.15 * ell, amp: 1.0 }),
        ("gaussian", [c, w, a]) if *w > 0.0 => Ok(InitialData::Gaussian { center: *c, width: *w, amp: *a }),
        ("single-mode", [m]) => Ok(InitialData::Modes(vec![index(*m)?])),
        ("two-mode", [a, b]) if a != b => Ok(InitialData::Modes(vec![index(*a)?, index(*b)?])),
        _ => Err(CliError::Usage(format!(
            "unknown initial data '{spec}' (gaussian[:center:width:amp], single-mode:M, two-mode:M1:M2)"
        ))),
    }
}

fn evolve(cli: &Cli, preset: &str, cutoff: usize, count: usize, t_end: f64) -> Result<()> {
    let p = params(cli)?;
    p.require_spring()?;
    require_coupled(&p)?;
    let d = derive_constants(&p)?;
    let table = find_modes(&d.ratios, positive("--cutoff", cutoff)?)?;
    let tol = positive_tol(cli, 1e-12)?;
    let q = Quadrature::with_tol(tol);
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(CliError::Usage(format!("--t-end must be non-negative, got {t_end}")));
    }
    let ev = match parse_initial(preset, p.ell)? {
        InitialData::Gaussian { center, width, amp } => {
            let data = CauchyData::from_physical(
                presets::gaussian(center, width, amp, p.ell),
                MuFunction::zero(p.ell),
                &d,
            );
            Evolution::project(&data, &table, &p, &d, &q)?
        }
        InitialData::Modes(ms) => {
            let (t0, v0) = match ms.as_slice() {
                [m] => presets::single_mode(cutoff, *m, 1.0),
                [a, b] => presets::two_mode(cutoff, *a, *b, 1.0),
                _ => unreachable!("parse_initial yields one or two modes"),
            };
            if ms.iter().any(|&m| m > cutoff) {
                return Err(CliError::Usage(format!("mode numbers {ms:?} exceed --cutoff {cutoff}")));
            }
            Evolution::from_coefficients(&table, &p, &d, t0, v0)?
        }
    };
    if let Some(w) = &ev.warning {
        eprintln!(
            "warning: {cutoff} modes discard a fraction {:.3e} of the initial energy",
            w.discarded_fraction
        );
    }
    let qq = q.for_frequency(table.modes[table.len() - 1].omega, 0.0, p.ell);
    let n = positive("--count", count)?;
    let times: Vec<f64> = (0..n)
        .map(|i| if n == 1 { 0.0 } else { t_end * i as f64 / (n - 1) as f64 })
        .collect();
    let energies = mustring::par::map_slice(&times, |&t| dynamics::energy(&ev.at(t), &p, &d, &qq))
        .into_iter()
        .collect::<mustring::Result<Vec<_>>>()?;
    let mut m = manifest(cli, "evolve", &p);
    m.preset = Some(preset.into());
    m.cutoff = Some(cutoff);
    m.count = Some(count);
    m.extra.push(("t_end".into(), output::fmt_f64(t_end)));
    let probes = [0.0, 0.25, 0.5, 0.75, 1.0].map(|f| f * p.ell);
    let mut t = Table::new(vec!["t", "energy", "q(0)", "q(ell/4)", "q(ell/2)", "q(3ell/4)", "q(ell)"]);
    for (time, e) in times.iter().zip(energies) {
        let mut row: Vec<Cell> = vec![(*time).into(), e.into()];
        row.extend(probes.iter().map(|&x| Cell::from(ev.value(*time, x, 0, 0))));
        t.push(row);
    }
    write_table(cli, &m, &t)
}

fn fock_cmd(cli: &Cli, preset: &str, cutoff: Option<usize>, nmax: Option<u32>, count: usize, t_end: f64) -> Result<()> {
    let p = params(cli)?;
    p.require_spring()?;
    require_coupled(&p)?;
    let d = derive_constants(&p)?;
    let mut m = manifest(cli, "fock", &p);
    m.preset = Some(preset.into());
    let (name, args) = preset.split_once(':').unwrap_or((preset, ""));
    match name {
        "factorization" if args.is_empty() => {
            let n = positive("--cutoff", cutoff.unwrap_or(2000))?;
            let table = find_modes(&d.ratios, n)?;
            let rep = fock::factorization_diagnostic(&table, &d, n)?;
            m.cutoff = Some(n);
            m.extra.push(("K".into(), output::fmt_f64(rep.k)));
            let mut t = Table::new(vec!["n", "omega", "coeff", "partial", "n_coeff2_over_K", "S_over_K_lnN"]);
            for i in 1..=n {
                t.push(vec![
                    i.into(),
                    table.modes[i - 1].omega.into(),
                    rep.coeffs[i - 1].into(),
                    rep.partial[i - 1].into(),
                    rep.leading_ratio(i).into(),
                    rep.log_ratio(i).into(),
                ]);
            }
            write_table(cli, &m, &t)
        }
        "trace" => {
            let labels: Vec<usize> = if args.is_empty() {
                vec![1, 2]
            } else {
                parse_numbers(preset, args)?
                    .into_iter()
                    .map(|x| {
                        if x >= 1.0 && x.fract() == 0.0 {
                            Ok(x as usize)
                        } else {
                            Err(CliError::Usage(format!("mode numbers start at 1, got {x}")))
                        }
                    })
                    .collect::<Result<_>>()?
            };
            let top = labels.iter().copied().max().unwrap_or(1);
            let n = cutoff.unwrap_or(top);
            if n < top {
                return Err(CliError::Usage(format!("--cutoff {n} is below mode {top}")));
            }
            let table = find_modes(&d.ratios, n)?;
            let mut v = OneParticleVector::zero(n);
            for &l in &labels {
                v.0[l - 1] += C64::new(1.0, 0.0);
            }
            let tol = positive_tol(cli, 1e-12)?;
            let samples = positive("--count", count)?;
            let times: Vec<f64> = (0..samples)
                .map(|i| if samples == 1 { 0.0 } else { t_end * i as f64 / (samples - 1) as f64 })
                .collect();
            let rates = times
                .iter()
                .map(|&t| fock::trace_nonunitarity_rate(&v, t, &table))
                .collect::<mustring::Result<Vec<_>>>()?;
            let peak = rates.iter().fold(0.0f64, |a, r| a.max(r.trace.norm_sqr()));
            let nmax = nmax.unwrap_or_else(|| fock::nmax_for(peak, tol));
            m.cutoff = Some(n);
            m.nmax = Some(nmax);
            m.count = Some(samples);
            let mut t = Table::new(vec!["t", "trace_re", "trace_im", "omega0_re", "omega0_im", "rate", "fock_norm"]);
            for (time, r) in times.iter().zip(&rates) {
                let norm = fock::coherent_state(&OneParticleVector(vec![r.trace]), nmax, tol)?.norm_sq();
                t.push(vec![
                    (*time).into(),
                    r.trace.re.into(),
                    r.trace.im.into(),
                    r.omega0.re.into(),
                    r.omega0.im.into(),
                    r.rate.into(),
                    norm.into(),
                ]);
            }
            write_table(cli, &m, &t)
        }
        _ => Err(CliError::Usage(format!("unknown fock preset '{preset}' (factorization, trace[:M1[:M2]])"))),
    }
}

fn parse_ends(spec: &str) -> Result<[EndCondition; 2]> {
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    match (name, args) {
        ("dirichlet", "") => Ok([EndCondition::Dirichlet; 2]),
        ("neumann", "") => Ok([EndCondition::Robin(0.0); 2]),
        ("robin", a) if !a.is_empty() => match parse_numbers(spec, a)?.as_slice() {
            [r0, rl] => Ok([EndCondition::Robin(*r0), EndCondition::Robin(*rl)]),
            _ => Err(CliError::Usage(format!("robin ends need two parameters, got '{spec}'"))),
        },
        _ => Err(CliError::Usage(format!("unknown ends '{spec}' (dirichlet, neumann, robin:R0:RL)"))),
    }
}

#[derive(Serialize)]
struct BogoliubovReport {
    decision: bogoliubov::Decision,
    initial: String,
    r#final: String,
    ends: [EndCondition; 2],
    slopes_initial: [f64; 2],
    slopes_final: [f64; 2],
    partial_sums: Vec<PartialSum>,
    increments: Vec<f64>,
    floor: f64,
    increments_bounded_below: bool,
    increments_non_increasing: bool,
    evidence_agrees: bool,
}

#[derive(Serialize)]
struct PartialSum {
    n: usize,
    s: f64,
}

fn bogoliubov_cmd(cli: &Cli, preset: &str, initial: &str, cutoff: usize, ends: &str, beta_csv: Option<&Path>) -> Result<()> {
    let ell = match &cli.config {
        Some(path) => load_config(path)?.ell,
        None => 1.0,
    };
    let p = StringParams { ell, ..verify::measure_params() };
    let ends = parse_ends(ends)?;
    let xi = Embedding::preset(initial, ell)?;
    let xf = Embedding::preset(preset, ell)?;
    let n = positive("--cutoff", cutoff)?;
    let mut ns: Vec<usize> = [n / 8, n / 4, n / 2, n].into_iter().filter(|&k| k > 0).collect();
    ns.dedup();
    let ms = bogoliubov::exp_modes(ends, n, ell)?;
    let q = Quadrature::with_tol(positive_tol(cli, 1e-10)?);
    let c = bogoliubov::unitarity_classification(&xi, &xf, &ms, &ns, &q)?;
    let mut m = manifest(cli, "bogoliubov", &p);
    m.config_path = cli.config.as_ref().map(|p| p.display().to_string());
    m.preset = Some(preset.into());
    m.cutoff = Some(n);
    m.extra.push(("initial".into(), initial.into()));
    let report = BogoliubovReport {
        decision: c.decision,
        initial: xi.name.clone(),
        r#final: xf.name.clone(),
        ends,
        slopes_initial: c.slopes_i,
        slopes_final: c.slopes_f,
        partial_sums: c.ns.iter().zip(&c.sums).map(|(&n, &s)| PartialSum { n, s }).collect(),
        increments: c.increments.clone(),
        floor: c.floor,
        increments_bounded_below: c.increments_bounded_below(),
        increments_non_increasing: c.increments_non_increasing(),
        evidence_agrees: c.evidence_agrees(),
    };
    write(cli.out.as_deref(), &output::json_document(&m, &report))?;
    if let Some(path) = beta_csv {
        let b = bogoliubov::beta_matrix(&ms, &xi, &xf, n, &q)?;
        let labels = ms.labels(n);
        let mut t = Table::new(vec!["l", "m", "abs_beta"]);
        for (i, row) in b.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                t.push(vec![labels[i].into(), labels[j].into(), z.norm().into()]);
            }
        }
        write(Some(path), &t.render(&m))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PmechObservables {
    potential: Potential,
    lapse: String,
    sign_definite: bool,
    t_range: [f64; 2],
    slices: Vec<Slice>,
    max_zero_energy: f64,
    max_y_pi: f64,
}

#[derive(Serialize)]
struct Slice {
    tau: f64,
    q: f64,
    p: f64,
    energy: f64,
    projection: f64,
}

#[allow(clippy::too_many_arguments)]
fn pmech(
    cli: &Cli,
    preset: &str,
    lapse: &str,
    x0: PMState,
    mass: f64,
    s_end: f64,
    steps: usize,
    taus: &[f64],
    observables: Option<&Path>,
) -> Result<()> {
    let w = Potential::preset(preset)?;
    let n = Lapse::preset(lapse)?;
    let tr = pm::integrate_orbit(x0, &n, &w, mass, (0.0, s_end), positive("--count", steps)?)?;
    let slices = taus
        .iter()
        .map(|&tau| {
            let (q, p) = pm::gauge_fix(&tr, tau)?;
            Ok(Slice {
                tau,
                q,
                p,
                energy: pm::observable((q, p), ObservableKind::Energy, &w, mass),
                projection: pm::observable((q, p), ObservableKind::Projection, &w, mass),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let idx = 0..tr.s.len();
    let max_zero_energy = if n.sign_definite {
        idx.clone().fold(0.0f64, |a, i| a.max(pm::zero_energy(&tr, i).abs()))
    } else {
        f64::NAN
    };
    let max_y_pi = idx.fold(0.0f64, |a, i| a.max(pm::y_pi(&tr, i).abs()));
    let (lo, hi) = tr.t_range();

    let mut m = manifest(cli, "pmech", &StringParams::default());
    m.config_path = None;
    m.preset = Some(preset.into());
    m.count = Some(steps);
    m.extra = vec![
        ("lapse".into(), lapse.into()),
        ("q0".into(), output::fmt_f64(x0.q)),
        ("p0".into(), output::fmt_f64(x0.p)),
        ("mass".into(), output::fmt_f64(mass)),
        ("s_end".into(), output::fmt_f64(s_end)),
    ];
    let mut t = Table::new(vec!["s", "q", "t", "p"]);
    for (s, x) in tr.s.iter().zip(&tr.states) {
        t.push(vec![(*s).into(), x.q.into(), x.t.into(), x.p.into()]);
    }
    write_table(cli, &m, &t)?;
    if let Some(path) = observables {
        let obs = PmechObservables {
            potential: w,
            lapse: n.name.clone(),
            sign_definite: n.sign_definite,
            t_range: [lo, hi],
            slices,
            max_zero_energy,
            max_y_pi,
        };
        write(Some(path), &output::json_document(&m, &obs))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    quick: bool,
    passed: usize,
    total: usize,
    criteria: &'a [verify::CriterionResult],
}

fn verify_cmd(cli: &Cli, quick: bool, only: &[u8]) -> Result<()> {
    let opts = verify::Options { quick, seed: cli.seed };
    let results: Vec<_> = if only.is_empty() {
        verify::run_all(&opts)
    } else {
        only.iter()
            .map(|&id| {
                verify::run_criterion(id, &opts).ok_or_else(|| CliError::Usage(format!("no acceptance criterion {id}")))
            })
            .collect::<Result<_>>()?
    };
    for r in &results {
        println!("{}", r.line());
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed{}", results.len(), if quick { " (quick)" } else { "" });
    if let Some(path) = &cli.out {
        let mut m = manifest(cli, "verify", &verify::measure_params());
        m.out = Some(path.display().to_string());
        let rep = VerifyReport { quick, passed, total: results.len(), criteria: &results };
        write(Some(path), &output::json_document(&m, &rep))?;
    }
    if passed == results.len() {
        Ok(())
    } else {
        Err(CliError::Criteria { failed: results.len() - passed, total: results.len() })
    }
}
