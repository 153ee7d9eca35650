//! Experiment driver behind the CLI: seeded trials of the full
//! placement -> delivery -> reception -> decoding pipeline, parameter sweeps,
//! and report serialization.

use std::io::Write;

use num_rational::Rational64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{
    decode_all, draw_channel, receive, ChannelMatrix, DecodeResult, ReceptionLog,
};
use crate::content::{place_caches, CacheContent, DemandVector, Library, LibraryConfig, Regime};
use crate::delivery::{build_schedule, render_delivery_table, DeliverySchedule};
use crate::error::{Error, Result};
use crate::field::{ComplexField, Field, FieldMode, PrimeField, DEFAULT_PRIME};
use crate::metrics::{
    achievable_time, assemble_report, converse_bound, ratio_string, uncoded_baseline,
    MetricsReport, RunTag, CSV_HEADER,
};

/// How demands are chosen per trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DemandSpec {
    /// Fresh seeded permutation each trial.
    Random,
    /// 1-based file index per user, as typed on the command line.
    Explicit(Vec<usize>),
}

impl std::str::FromStr for DemandSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("random") {
            return Ok(DemandSpec::Random);
        }
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| Error::InvalidConfig(format!("bad demand entry {t:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(DemandSpec::Explicit)
    }
}

impl DemandSpec {
    pub fn resolve(&self, users: usize, seed: u64) -> Result<DemandVector> {
        match self {
            DemandSpec::Random => Ok(DemandVector::random(users, &mut stream(seed, 2))),
            DemandSpec::Explicit(d) => {
                if d.len() != users {
                    return Err(Error::InvalidConfig(format!(
                        "{} demands given for {users} users",
                        d.len()
                    )));
                }
                DemandVector::new(d.iter().map(|v| v - 1).collect(), users)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub files: usize,
    pub users: Option<usize>,
    pub servers: Option<usize>,
    pub mode: FieldMode,
    pub prime: u64,
    /// Symbols per minifile; `F = N * L * scale`.
    pub scale: usize,
    pub seed: u64,
    pub trials: usize,
    pub demand: DemandSpec,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            files: 4,
            users: None,
            servers: None,
            mode: FieldMode::Gf,
            prime: DEFAULT_PRIME,
            scale: 1,
            seed: 0,
            trials: 10,
            demand: DemandSpec::Random,
            format: OutputFormat::Csv,
        }
    }
}

impl RunConfig {
    pub fn servers(&self) -> usize {
        self.servers.unwrap_or(self.files.saturating_sub(1))
    }

    /// The library config of a single-instance run, rejected with a
    /// regime-specific message when outside the supported parameters.
    pub fn library_config(&self) -> Result<LibraryConfig> {
        if let Some(k) = self.users {
            if k != self.files {
                return Err(Error::InvalidConfig(format!(
                    "K={k} must equal N={}",
                    self.files
                )));
            }
        }
        if self.scale == 0 {
            return Err(Error::InvalidConfig("scale must be at least 1".into()));
        }
        let cfg = LibraryConfig::new(self.files, self.servers(), self.scale);
        cfg.validate_for_delivery()?;
        Ok(cfg)
    }

    fn tag(&self, seed: u64) -> RunTag {
        RunTag {
            mode: self.mode,
            prime: (self.mode == FieldMode::Gf).then_some(self.prime),
            seed,
        }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent RNG stream `id` of a trial seed.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(id)))
}

fn channel_seed(seed: u64) -> u64 {
    splitmix(seed ^ splitmix(0))
}

/// Everything produced by one trial.
#[derive(Debug, Clone)]
pub struct Simulation<E> {
    pub config: LibraryConfig,
    pub library: Library<E>,
    pub caches: Vec<CacheContent<E>>,
    pub demand: DemandVector,
    pub channel: ChannelMatrix<E>,
    pub schedule: DeliverySchedule<E>,
    pub log: ReceptionLog<E>,
    pub results: Vec<DecodeResult<E>>,
    pub report: MetricsReport,
}

/// Runs placement, delivery, reception, and decoding for one seeded
/// instance with an already-chosen demand.
pub fn simulate_with_demand<F: Field>(
    field: &F,
    cfg: &LibraryConfig,
    demand: DemandVector,
    tag: RunTag,
) -> Result<Simulation<F::Elem>> {
    let seed = tag.seed;
    let library = Library::random(field, cfg.files, cfg.file_len, &mut stream(seed, 1))?;
    let caches = place_caches(field, &library, cfg)?;
    let channel = draw_channel(field, cfg.users, cfg.servers, channel_seed(seed))?;
    let schedule = build_schedule(field, &demand, channel.matrix(), &library, cfg)?;
    let log = receive(field, &channel, &schedule)?;
    let results = decode_all(field, &demand, &caches, &log, &channel, &schedule, &library)?;
    let report = assemble_report(cfg, &schedule, &results, tag)?;
    Ok(Simulation {
        config: *cfg,
        library,
        caches,
        demand,
        channel,
        schedule,
        log,
        results,
        report,
    })
}

pub fn simulate<F: Field>(
    field: &F,
    cfg: &LibraryConfig,
    demand: &DemandSpec,
    tag: RunTag,
) -> Result<Simulation<F::Elem>> {
    let d = demand.resolve(cfg.users, tag.seed)?;
    simulate_with_demand(field, cfg, d, tag)
}

/// Per-trial invariants: every user decodes, and the achieved time equals
/// both the closed form and the converse bound.
pub fn check_report(cfg: &LibraryConfig, report: &MetricsReport) -> Result<()> {
    if !report.decode_ok {
        return Err(Error::InconsistentInputs(format!(
            "decode failed for users {:?} (seed {})",
            report
                .failed_users
                .iter()
                .map(|u| u + 1)
                .collect::<Vec<_>>(),
            report.seed
        )));
    }
    let expected = achievable_time(cfg)?;
    if report.achieved != expected {
        return Err(Error::InconsistentInputs(format!(
            "achieved T {} differs from closed form {} (seed {})",
            ratio_string(report.achieved),
            ratio_string(expected),
            report.seed
        )));
    }
    if report.achieved != report.converse {
        return Err(Error::InconsistentInputs(format!(
            "achieved T {} does not meet converse {} (seed {})",
            ratio_string(report.achieved),
            ratio_string(report.converse),
            report.seed
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub reports: Vec<MetricsReport>,
    /// First failing invariant, by trial order.
    pub failure: Option<String>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_add(trial as u64)
}

fn run_trials<F: Field>(
    field: &F,
    cfg: &LibraryConfig,
    run: &RunConfig,
) -> Vec<Result<MetricsReport>> {
    (0..run.trials)
        .into_par_iter()
        .map(|t| {
            let tag = run.tag(trial_seed(run.seed, t));
            simulate(field, cfg, &run.demand, tag).map(|s| s.report)
        })
        .collect()
}

/// `trials` seeded runs (seeds `seed, seed+1, ...`); reports are ordered by
/// trial index.
pub fn cmd_verify(run: &RunConfig) -> Result<VerifyOutcome> {
    let cfg = run.library_config()?;
    let results = match run.mode {
        FieldMode::Gf => run_trials(&PrimeField::new(run.prime)?, &cfg, run),
        FieldMode::Complex => run_trials(&ComplexField::default(), &cfg, run),
    };
    let mut reports = Vec::with_capacity(results.len());
    let mut failure = None;
    for (t, r) in results.into_iter().enumerate() {
        let checked = match r {
            Ok(rep) => {
                let check = check_report(&cfg, &rep);
                reports.push(rep);
                check
            }
            Err(e) => Err(e),
        };
        if let (Err(e), None) = (checked, &failure) {
            failure = Some(format!("trial {t}: {e}"));
        }
    }
    Ok(VerifyOutcome { reports, failure })
}

/// One `(N, L)` entry of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub files: usize,
    pub servers: usize,
    pub converse: Rational64,
    pub uncoded: Rational64,
    /// `None` for unsupported regimes.
    pub achieved: Option<Rational64>,
    /// `None` for unsupported regimes.
    pub decode_ok: Option<bool>,
    pub seed: u64,
}

impl SweepRow {
    pub fn csv_record(&self) -> Vec<String> {
        let cache = Rational64::new(1, self.files as i64);
        let (a_num, a_den) = self.achieved.map_or((String::new(), String::new()), |a| {
            (a.numer().to_string(), a.denom().to_string())
        });
        vec![
            self.files.to_string(),
            self.files.to_string(),
            self.servers.to_string(),
            cache.numer().to_string(),
            cache.denom().to_string(),
            a_num,
            a_den,
            self.converse.numer().to_string(),
            self.converse.denom().to_string(),
            self.uncoded.numer().to_string(),
            self.uncoded.denom().to_string(),
            self.decode_ok
                .map_or("unsupported-regime".to_string(), |ok| ok.to_string()),
            self.seed.to_string(),
        ]
    }
}

#[derive(Serialize)]
struct SweepRowJson {
    #[serde(rename = "K")]
    users: usize,
    #[serde(rename = "N")]
    files: usize,
    #[serde(rename = "L")]
    servers: usize,
    #[serde(rename = "M")]
    cache: String,
    #[serde(rename = "achieved_T")]
    achieved: Option<String>,
    #[serde(rename = "converse_T")]
    converse: String,
    #[serde(rename = "uncoded_T")]
    uncoded: String,
    status: String,
    seed: u64,
}

impl From<&SweepRow> for SweepRowJson {
    fn from(r: &SweepRow) -> Self {
        Self {
            users: r.files,
            files: r.files,
            servers: r.servers,
            cache: ratio_string(Rational64::new(1, r.files as i64)),
            achieved: r.achieved.map(ratio_string),
            converse: ratio_string(r.converse),
            uncoded: ratio_string(r.uncoded),
            status: r.decode_ok.map_or("unsupported-regime".to_string(), |ok| {
                if ok { "ok" } else { "decode-failed" }.to_string()
            }),
            seed: r.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRange {
    pub min_files: usize,
    pub max_files: usize,
    /// Only this server count; all `1..N` when `None`.
    pub servers: Option<usize>,
}

/// Tabulates every `(N, L)` in the range. Supported pairs are simulated for
/// `run.trials` seeds (at least one); unsupported pairs still report the
/// bounds.
pub fn cmd_sweep(run: &RunConfig, range: &SweepRange) -> Result<Vec<SweepRow>> {
    let mut pairs = Vec::new();
    for n in range.min_files.max(2)..=range.max_files {
        match range.servers {
            Some(l) => pairs.push((n, l)),
            None => pairs.extend((1..n).map(|l| (n, l))),
        }
    }
    pairs
        .into_iter()
        .map(|(n, l)| {
            let cache = Rational64::new(1, n as i64);
            let converse = converse_bound(n, n, cache, l.max(1));
            let uncoded = uncoded_baseline(n, n, cache, l.max(1));
            if l == 0 || !Regime::is_supported(n, l) {
                return Ok(SweepRow {
                    files: n,
                    servers: l,
                    converse,
                    uncoded,
                    achieved: None,
                    decode_ok: None,
                    seed: run.seed,
                });
            }
            let sub = RunConfig {
                files: n,
                users: None,
                servers: Some(l),
                trials: run.trials.max(1),
                demand: DemandSpec::Random,
                ..run.clone()
            };
            let outcome = cmd_verify(&sub)?;
            Ok(SweepRow {
                files: n,
                servers: l,
                converse,
                uncoded,
                achieved: Some(achievable_time(&sub.library_config()?)?),
                decode_ok: Some(outcome.passed()),
                seed: run.seed,
            })
        })
        .collect()
}

/// Delivery table of a single instance. Random demands use `run.seed`.
pub fn cmd_table(run: &RunConfig) -> Result<String> {
    let cfg = run.library_config()?;
    let demand = run.demand.resolve(cfg.users, run.seed)?;
    render_delivery_table(&cfg, &demand)
}

/// The three delivery times for the configured parameters, without
/// simulating.
pub fn cmd_bounds(run: &RunConfig) -> Result<String> {
    let n = run.files;
    let k = run.users.unwrap_or(n);
    let l = run.servers();
    if n == 0 || k == 0 || k > n || l == 0 {
        return Err(Error::InvalidConfig(format!(
            "bounds need 1 <= K <= N and L >= 1, got K={k}, N={n}, L={l}"
        )));
    }
    let cache = Rational64::new(1, n as i64);
    let achieved = if k == n {
        achievable_time(&LibraryConfig::new(n, l, 1))
            .map(ratio_string)
            .unwrap_or_else(|_| "unsupported-regime".into())
    } else {
        "unsupported-regime".into()
    };
    Ok(format!(
        "K={k} N={n} L={l} M={}\nconverse_T={}\nachievable_T={achieved}\nuncoded_T={}\n",
        ratio_string(cache),
        ratio_string(converse_bound(k, n, cache, l)),
        ratio_string(uncoded_baseline(k, n, cache, l)),
    ))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

pub fn write_reports<W: Write>(
    out: W,
    reports: &[MetricsReport],
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER).map_err(csv_error)?;
            for r in reports {
                w.write_record(r.csv_record()).map_err(csv_error)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, reports)
                .map_err(|e| Error::Format(e.to_string()))?;
            writeln!(out)?;
        }
        OutputFormat::Table => {
            let mut out = out;
            writeln!(
                out,
                "{:>6} {:>3} {:>3} {:>10} {:>10} {:>10} {:>9}",
                "seed", "N", "L", "achieved", "converse", "uncoded", "decode_ok"
            )?;
            for r in reports {
                writeln!(
                    out,
                    "{:>6} {:>3} {:>3} {:>10} {:>10} {:>10} {:>9}",
                    r.seed,
                    r.files,
                    r.servers,
                    ratio_string(r.achieved),
                    ratio_string(r.converse),
                    ratio_string(r.uncoded),
                    r.decode_ok
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow], format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER).map_err(csv_error)?;
            for r in rows {
                w.write_record(r.csv_record()).map_err(csv_error)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            let json: Vec<SweepRowJson> = rows.iter().map(SweepRowJson::from).collect();
            serde_json::to_writer_pretty(&mut out, &json)
                .map_err(|e| Error::Format(e.to_string()))?;
            writeln!(out)?;
        }
        OutputFormat::Table => {
            let mut out = out;
            writeln!(
                out,
                "{:>3} {:>3} {:>10} {:>10} {:>10} {:>18}",
                "N", "L", "achieved", "converse", "uncoded", "status"
            )?;
            for r in rows {
                let json = SweepRowJson::from(r);
                writeln!(
                    out,
                    "{:>3} {:>3} {:>10} {:>10} {:>10} {:>18}",
                    r.files,
                    r.servers,
                    json.achieved.unwrap_or_else(|| "-".into()),
                    json.converse,
                    json.uncoded,
                    json.status
                )?;
            }
        }
    }
    Ok(())
}
