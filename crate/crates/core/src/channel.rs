//! Noiseless linear network `y_k = h_k^H x` and per-user decoding.
//!
//! Receivers are assumed to know the channel, the demand vector and the
//! beam/plan metadata of every block.

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::content::{CacheContent, DemandVector, Library, Regime};
use crate::delivery::DeliverySchedule;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::{inverse, rank, Matrix};

/// Rejection-sampling budget of [`draw_channel`].
pub const DEFAULT_DRAW_ATTEMPTS: usize = 1000;

/// Max-abs deviation tolerated by complex-mode decoding.
pub const COMPLEX_DECODE_TOLERANCE: f64 = 1e-6;

/// `K x L` channel; row `k` is `h_k^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix<E> {
    h: Matrix<E>,
}

impl<E: Copy> ChannelMatrix<E> {
    /// Wraps `h` after checking that every set of `min(K, L)` rows is
    /// linearly independent.
    pub fn new<F: Field<Elem = E>>(field: &F, h: Matrix<E>) -> Result<Self> {
        if !is_generic(field, &h) {
            return Err(Error::DegenerateChannel(
                "some set of min(K, L) channel rows is linearly dependent".into(),
            ));
        }
        Ok(Self { h })
    }

    /// Wraps `h` without the genericity check.
    pub fn unchecked(h: Matrix<E>) -> Self {
        Self { h }
    }

    pub fn matrix(&self) -> &Matrix<E> {
        &self.h
    }

    pub fn users(&self) -> usize {
        self.h.rows()
    }

    pub fn servers(&self) -> usize {
        self.h.cols()
    }

    pub fn row(&self, k: usize) -> &[E] {
        self.h.row(k)
    }
}

/// Every `min(K, L)`-subset of rows has full rank.
pub fn is_generic<F: Field>(field: &F, h: &Matrix<F::Elem>) -> bool {
    let size = h.rows().min(h.cols());
    (0..h.rows())
        .combinations(size)
        .all(|rows| rank(field, &h.select_rows(&rows)) == size)
}

/// Seeded channel with i.i.d. nonzero entries, redrawn until generic.
pub fn draw_channel<F: Field>(
    field: &F,
    users: usize,
    servers: usize,
    seed: u64,
) -> Result<ChannelMatrix<F::Elem>> {
    draw_channel_with_budget(field, users, servers, seed, DEFAULT_DRAW_ATTEMPTS)
}

pub fn draw_channel_with_budget<F: Field>(
    field: &F,
    users: usize,
    servers: usize,
    seed: u64,
    attempts: usize,
) -> Result<ChannelMatrix<F::Elem>> {
    if users == 0 || servers == 0 {
        return Err(Error::InvalidConfig("K and L must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        let data = (0..users * servers)
            .map(|_| field.random_nonzero(&mut rng))
            .collect();
        let h = Matrix::from_vec(users, servers, data)?;
        if is_generic(field, &h) {
            return Ok(ChannelMatrix { h });
        }
    }
    Err(Error::ResamplingExhausted { attempts })
}

/// Received symbols, per user, per block (in schedule order).
#[derive(Debug, Clone, PartialEq)]
pub struct ReceptionLog<E> {
    per_user: Vec<Vec<Vec<E>>>,
}

impl<E> ReceptionLog<E> {
    pub fn users(&self) -> usize {
        self.per_user.len()
    }

    pub fn blocks(&self) -> usize {
        self.per_user.first().map_or(0, Vec::len)
    }

    /// What user `k` heard during block `block`.
    pub fn get(&self, k: usize, block: usize) -> &[E] {
        &self.per_user[k][block]
    }

    pub fn of_user(&self, k: usize) -> &[Vec<E>] {
        &self.per_user[k]
    }
}

/// `y_k = h_k^H X` for every user and block.
pub fn receive<F: Field>(
    field: &F,
    channel: &ChannelMatrix<F::Elem>,
    schedule: &DeliverySchedule<F::Elem>,
) -> Result<ReceptionLog<F::Elem>> {
    if let Some(b) = schedule
        .blocks
        .iter()
        .find(|b| b.signal.rows() != channel.servers())
    {
        return Err(Error::DimensionMismatch(format!(
            "block with {} antenna rows on a channel with {} columns",
            b.signal.rows(),
            channel.servers()
        )));
    }
    let per_user = (0..channel.users())
        .map(|k| {
            schedule
                .blocks
                .iter()
                .map(|b| hear(field, channel.row(k), &b.signal))
                .collect()
        })
        .collect();
    Ok(ReceptionLog { per_user })
}

/// Row vector times block signal.
pub fn hear<F: Field>(field: &F, h: &[F::Elem], signal: &Matrix<F::Elem>) -> Vec<F::Elem> {
    let mut y = vec![field.zero(); signal.cols()];
    for (a, &ha) in h.iter().enumerate() {
        for (s, &x) in signal.row(a).iter().enumerate() {
            y[s] = field.add(y[s], field.mul(ha, x));
        }
    }
    y
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult<E> {
    pub user: usize,
    pub file: usize,
    pub reconstructed: Vec<E>,
    pub success: bool,
}

impl<E: Copy> DecodeResult<E> {
    /// Compares `reconstructed` with the requested file: exact in exact
    /// fields, within [`COMPLEX_DECODE_TOLERANCE`] otherwise.
    pub fn grade<F: Field<Elem = E>>(
        field: &F,
        user: usize,
        file: usize,
        reconstructed: Vec<E>,
        library: &Library<E>,
    ) -> Self {
        let truth = library.file(file);
        let success = reconstructed.len() == truth.len()
            && reconstructed
                .iter()
                .zip(truth)
                .all(|(&a, &b)| field.close(a, b, COMPLEX_DECODE_TOLERANCE));
        Self {
            user,
            file,
            reconstructed,
            success,
        }
    }
}

fn divide<F: Field>(field: &F, y: &[F::Elem], gain: F::Elem, what: &str) -> Result<Vec<F::Elem>> {
    let inv = field
        .inv(gain)
        .ok_or_else(|| Error::DegenerateChannel(format!("zero effective gain for {what}")))?;
    Ok(y.iter().map(|&x| field.mul(x, inv)).collect())
}

/// Reconstructs the file requested by user `k` from its receptions and cache.
pub fn decode_user<F: Field>(
    field: &F,
    k: usize,
    demand: &DemandVector,
    cache: &CacheContent<F::Elem>,
    log: &ReceptionLog<F::Elem>,
    channel: &ChannelMatrix<F::Elem>,
    schedule: &DeliverySchedule<F::Elem>,
) -> Result<Vec<F::Elem>> {
    let cfg = &schedule.config;
    let mismatch = |msg: String| Err(Error::InconsistentInputs(msg));
    if &schedule.demand != demand {
        return mismatch("schedule was built for a different demand vector".into());
    }
    if k >= cfg.users || cache.user != k {
        return mismatch(format!(
            "cache of user {} used to decode user {k}",
            cache.user
        ));
    }
    if cache.payload.len() != cfg.subfile_len() {
        return mismatch(format!(
            "cache holds {} symbols, expected {}",
            cache.payload.len(),
            cfg.subfile_len()
        ));
    }
    if channel.users() != cfg.users || channel.servers() != cfg.servers {
        return mismatch("channel dimensions differ from the schedule".into());
    }
    if log.users() != cfg.users || log.blocks() != schedule.blocks.len() {
        return mismatch("reception log does not match the schedule".into());
    }

    let h_k = channel.row(k);
    let mut file = Vec::with_capacity(cfg.file_len);
    for row in 0..cfg.users {
        let part = if row == k {
            let sum = owner_sum(field, k, log, schedule)?;
            if sum.len() != cache.payload.len() {
                return mismatch("row sum length differs from cache length".into());
            }
            cache
                .payload
                .iter()
                .zip(&sum)
                .map(|(&z, &s)| field.sub(z, s))
                .collect()
        } else {
            let mut hits: Vec<(Vec<i64>, Vec<F::Elem>)> = Vec::new();
            for (idx, block) in schedule.blocks_of_row(row) {
                if let Some(stream) = block.streams.iter().find(|s| s.user == k) {
                    let gain = field.dot(h_k, &stream.beam);
                    let y = divide(field, log.get(k, idx), gain, "served stream")?;
                    hits.push((stream.coefficients.clone(), y));
                }
            }
            solve_minifiles(field, &hits, row, k)?
        };
        file.extend(part);
    }
    Ok(file)
}

/// Inverts the stacked coefficient system of one user in one row. For
/// full-antenna rows this is the single `1 x 1` system `[1]`.
fn solve_minifiles<F: Field>(
    field: &F,
    hits: &[(Vec<i64>, Vec<F::Elem>)],
    row: usize,
    k: usize,
) -> Result<Vec<F::Elem>> {
    let pieces = hits.first().map_or(0, |(c, _)| c.len());
    if pieces == 0 || hits.len() != pieces {
        return Err(Error::InconsistentInputs(format!(
            "user {k} is served {} times in row {row}, needs {pieces}",
            hits.len()
        )));
    }
    let rows: Vec<Vec<F::Elem>> = hits
        .iter()
        .map(|(c, _)| c.iter().map(|&x| field.from_i64(x)).collect())
        .collect();
    let c = Matrix::from_rows(&rows)?;
    let c_inv = inverse(field, &c)?.ok_or_else(|| {
        Error::InconsistentInputs(format!(
            "singular coefficient system for user {k} in row {row}"
        ))
    })?;
    let tau = hits[0].1.len();
    let mut part = Vec::with_capacity(pieces * tau);
    for j in 0..pieces {
        for s in 0..tau {
            part.push(field.sum((0..pieces).map(|r| field.mul(c_inv[(j, r)], hits[r].1[s]))));
        }
    }
    Ok(part)
}

/// The sum of the other users' subfiles for the row owned by `k`.
fn owner_sum<F: Field>(
    field: &F,
    k: usize,
    log: &ReceptionLog<F::Elem>,
    schedule: &DeliverySchedule<F::Elem>,
) -> Result<Vec<F::Elem>> {
    let blocks: Vec<(usize, usize)> = schedule
        .blocks_of_row(k)
        .map(|(idx, b)| (idx, b.transmission))
        .collect();
    match schedule.regime {
        Regime::FullAntenna => match blocks.as_slice() {
            [(idx, _)] => Ok(log.get(k, *idx).to_vec()),
            _ => Err(Error::InconsistentInputs(format!(
                "row {k} has {} blocks, expected 1",
                blocks.len()
            ))),
        },
        Regime::Reduced => {
            let plan = schedule.plan.as_ref().ok_or_else(|| {
                Error::InconsistentInputs("reduced schedule without a row plan".into())
            })?;
            if blocks.len() != plan.transmissions().len() {
                return Err(Error::InconsistentInputs(format!(
                    "row {k} has {} blocks, plan has {}",
                    blocks.len(),
                    plan.transmissions().len()
                )));
            }
            let tau = log.get(k, blocks[0].0).len();
            let mut out = Vec::with_capacity(plan.servers() * tau);
            for a_row in plan.combine() {
                for s in 0..tau {
                    out.push(field.sum(
                        blocks.iter().map(|&(idx, t)| {
                            field.mul(field.from_i64(a_row[t]), log.get(k, idx)[s])
                        }),
                    ));
                }
            }
            Ok(out)
        }
    }
}

/// Decodes and grades every user, in parallel.
pub fn decode_all<F: Field>(
    field: &F,
    demand: &DemandVector,
    caches: &[CacheContent<F::Elem>],
    log: &ReceptionLog<F::Elem>,
    channel: &ChannelMatrix<F::Elem>,
    schedule: &DeliverySchedule<F::Elem>,
    library: &Library<F::Elem>,
) -> Result<Vec<DecodeResult<F::Elem>>> {
    if caches.len() != demand.len() {
        return Err(Error::InconsistentInputs(format!(
            "{} caches for {} users",
            caches.len(),
            demand.len()
        )));
    }
    caches
        .par_iter()
        .map(|cache| {
            let k = cache.user;
            let data = decode_user(field, k, demand, cache, log, channel, schedule)?;
            Ok(DecodeResult::grade(
                field,
                k,
                demand.file_of(k),
                data,
                library,
            ))
        })
        .collect()
}
