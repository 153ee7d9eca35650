//! Delivery-time accounting: achieved time, the converse lower bound, and
//! the uncoded zero-forcing baseline. All values are exact rationals.

use num_rational::Rational64;
use serde::{Serialize, Serializer};

use crate::channel::DecodeResult;
use crate::content::{LibraryConfig, Regime};
use crate::delivery::DeliverySchedule;
use crate::error::{Error, Result};
use crate::field::FieldMode;

pub fn ratio_string(r: Rational64) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn serialize_ratio<S: Serializer>(r: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&ratio_string(*r))
}

/// `max_{s=1..K} (s - s M / floor(N/s)) / min(s, L)`.
pub fn converse_bound(users: usize, files: usize, cache: Rational64, servers: usize) -> Rational64 {
    assert!(servers >= 1 && users >= 1 && users <= files);
    (1..=users)
        .map(|s| {
            let s_r = Rational64::from_integer(s as i64);
            let groups = Rational64::from_integer((files / s) as i64);
            let denom = Rational64::from_integer(s.min(servers) as i64);
            (s_r - s_r * cache / groups) / denom
        })
        .max()
        .expect("at least one term")
}

/// `K (1 - M/N) / L`.
pub fn uncoded_baseline(
    users: usize,
    files: usize,
    cache: Rational64,
    servers: usize,
) -> Rational64 {
    assert!(servers >= 1 && files >= 1);
    let n = Rational64::from_integer(files as i64);
    Rational64::from_integer(users as i64) * (Rational64::from_integer(1) - cache / n)
        / Rational64::from_integer(servers as i64)
}

/// `1` for `L = N - 1`, `(N - 1) / L` for the reduced regime.
pub fn achievable_time(cfg: &LibraryConfig) -> Result<Rational64> {
    match Regime::classify(cfg.files, cfg.servers)? {
        Regime::FullAntenna => Ok(Rational64::from_integer(1)),
        Regime::Reduced => Ok(Rational64::new(cfg.files as i64 - 1, cfg.servers as i64)),
    }
}

pub const CSV_HEADER: [&str; 13] = [
    "K",
    "N",
    "L",
    "M_num",
    "M_den",
    "achieved_num",
    "achieved_den",
    "converse_num",
    "converse_den",
    "uncoded_num",
    "uncoded_den",
    "decode_ok",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "N")]
    pub files: usize,
    #[serde(rename = "L")]
    pub servers: usize,
    #[serde(rename = "M", serialize_with = "serialize_ratio")]
    pub cache_size: Rational64,
    pub field: FieldMode,
    pub prime: Option<u64>,
    pub seed: u64,
    #[serde(rename = "achieved_T", serialize_with = "serialize_ratio")]
    pub achieved: Rational64,
    #[serde(rename = "converse_T", serialize_with = "serialize_ratio")]
    pub converse: Rational64,
    #[serde(rename = "uncoded_T", serialize_with = "serialize_ratio")]
    pub uncoded: Rational64,
    pub decode_ok: bool,
    pub failed_users: Vec<usize>,
}

impl MetricsReport {
    /// Achieved time meets the converse bound and every user decoded.
    pub fn is_optimal_and_correct(&self) -> bool {
        self.decode_ok && self.achieved == self.converse
    }

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.users.to_string(),
            self.files.to_string(),
            self.servers.to_string(),
            self.cache_size.numer().to_string(),
            self.cache_size.denom().to_string(),
            self.achieved.numer().to_string(),
            self.achieved.denom().to_string(),
            self.converse.numer().to_string(),
            self.converse.denom().to_string(),
            self.uncoded.numer().to_string(),
            self.uncoded.denom().to_string(),
            self.decode_ok.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Which field a run used, echoed into the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunTag {
    pub mode: FieldMode,
    pub prime: Option<u64>,
    pub seed: u64,
}

pub fn assemble_report<E>(
    cfg: &LibraryConfig,
    schedule: &DeliverySchedule<E>,
    results: &[DecodeResult<E>],
    tag: RunTag,
) -> Result<MetricsReport> {
    if schedule.config != *cfg {
        return Err(Error::InconsistentInputs(
            "schedule was built for a different configuration".into(),
        ));
    }
    if results.len() != cfg.users {
        return Err(Error::InconsistentInputs(format!(
            "{} decode results for {} users",
            results.len(),
            cfg.users
        )));
    }
    let cache = cfg.cache_size();
    let converse = converse_bound(cfg.users, cfg.files, cache, cfg.servers);
    let uncoded = uncoded_baseline(cfg.users, cfg.files, cache, cfg.servers);
    let failed_users: Vec<usize> = results
        .iter()
        .filter(|r| !r.success)
        .map(|r| r.user)
        .collect();
    let decode_ok = failed_users.is_empty();
    let achieved = schedule.total_time;
    if decode_ok && !(converse <= achieved && achieved <= uncoded) {
        return Err(Error::InconsistentInputs(format!(
            "bound chain violated: converse {} <= achieved {} <= uncoded {}",
            ratio_string(converse),
            ratio_string(achieved),
            ratio_string(uncoded)
        )));
    }
    Ok(MetricsReport {
        users: cfg.users,
        files: cfg.files,
        servers: cfg.servers,
        cache_size: cache,
        field: tag.mode,
        prime: tag.prime,
        seed: tag.seed,
        achieved,
        converse,
        uncoded,
        decode_ok,
        failed_users,
    })
}
