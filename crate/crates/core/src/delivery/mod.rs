//! Delivery-phase transmit schedule.
//!
//! Row `i` of the delivery table hands subfile `W_{d_k}^i` to every user
//! `k != i` and the sum of those subfiles to user `i`, who completes
//! `W_{d_i}^i` from its cache. With `L = N - 1` servers a row is one
//! zero-forced block; with fewer servers it is the `N - 1` minifile
//! transmissions of a [`RowCodePlan`].
//!
//! Every beam is nulled at the other streams of its block and normalized at
//! the row owner (`h_i^H w = 1`), so the owner hears the plain field sum of
//! the payloads.

mod plan;
mod table;

pub use plan::{build_row_plan_reduced, row_members, PlannedTransmission, RowCodePlan};
pub use table::render_delivery_table;

use num_rational::Rational64;
use rayon::prelude::*;

use crate::content::{split_subfile, DemandVector, Library, LibraryConfig, Regime};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::{zero_forcing_vector, Matrix};

/// One zero-forced stream inside a block: user `user` gets a linear
/// combination (`coefficients`, one per minifile) of subfile
/// `W_file^part`, sent on beam `beam`.
#[derive(Debug, Clone, PartialEq)]
pub struct ServedStream<E> {
    pub user: usize,
    pub file: usize,
    pub part: usize,
    pub coefficients: Vec<i64>,
    pub beam: Vec<E>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmitBlock<E> {
    /// Delivery-table row (the user who receives the sum).
    pub owner: usize,
    /// Transmission index within the row; always 0 for full-antenna rows.
    pub transmission: usize,
    pub streams: Vec<ServedStream<E>>,
    /// `L x tau` symbols.
    pub signal: Matrix<E>,
    /// Fraction of one file-transmission time, `tau / F`.
    pub duration: Rational64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliverySchedule<E> {
    pub regime: Regime,
    pub config: LibraryConfig,
    pub demand: DemandVector,
    pub plan: Option<RowCodePlan>,
    pub blocks: Vec<TransmitBlock<E>>,
    pub total_time: Rational64,
}

impl<E> DeliverySchedule<E> {
    pub fn blocks_of_row(&self, owner: usize) -> impl Iterator<Item = (usize, &TransmitBlock<E>)> {
        self.blocks
            .iter()
            .enumerate()
            .filter(move |(_, b)| b.owner == owner)
    }
}

fn check_channel<E: Copy>(channel: &Matrix<E>, users: usize, servers: usize) -> Result<()> {
    if channel.rows() != users || channel.cols() != servers {
        return Err(Error::DimensionMismatch(format!(
            "channel is {}x{}, expected {users}x{servers}",
            channel.rows(),
            channel.cols()
        )));
    }
    Ok(())
}

/// Beam for `user` nulled at the rest of `group` and scaled so the row owner
/// sees gain 1.
fn owner_normalized_beam<F: Field>(
    field: &F,
    channel: &Matrix<F::Elem>,
    user: usize,
    group: &[usize],
    owner: usize,
) -> Result<Vec<F::Elem>> {
    let w = zero_forcing_vector(field, channel, user, group)?;
    let at_owner = field.dot(channel.row(owner), &w);
    let scale = field.inv(at_owner).filter(|_| {
        let w_mag = w.iter().map(|&x| field.magnitude(x)).fold(0.0, f64::max);
        let h_mag = channel
            .row(owner)
            .iter()
            .map(|&x| field.magnitude(x))
            .fold(0.0, f64::max);
        !field.is_negligible(at_owner, w_mag * h_mag)
    });
    let scale = scale.ok_or_else(|| {
        Error::DegenerateChannel(format!(
            "beam of user {user} is orthogonal to owner {owner}"
        ))
    })?;
    Ok(w.into_iter().map(|x| field.mul(x, scale)).collect())
}

/// `(beam, payload)` of one stream.
type BeamPayload<E> = (Vec<E>, Vec<E>);

fn superpose<F: Field>(
    field: &F,
    servers: usize,
    tau: usize,
    streams: &[BeamPayload<F::Elem>],
) -> Matrix<F::Elem> {
    let mut signal = Matrix::zeros(field, servers, tau);
    for (beam, payload) in streams {
        for (a, &wa) in beam.iter().enumerate() {
            for (s, &x) in payload.iter().enumerate() {
                signal[(a, s)] = field.add(signal[(a, s)], field.mul(wa, x));
            }
        }
    }
    signal
}

/// Row `row` of the full-antenna scheme:
/// `X_i = sum_{k != i} W_{d_k}^i w_k / (h_i^H w_k)`, with `w_k` nulled at
/// every user other than `i` and `k`.
pub fn build_block_full_antennas<F: Field>(
    field: &F,
    row: usize,
    demand: &DemandVector,
    channel: &Matrix<F::Elem>,
    library: &Library<F::Elem>,
) -> Result<TransmitBlock<F::Elem>> {
    let files = library.file_count();
    let users = demand.len();
    if users != files {
        return Err(Error::InconsistentInputs(format!(
            "{users} demands for {files} files"
        )));
    }
    let servers = channel.cols();
    if servers + 1 != files {
        return Err(Error::WrongRegime(format!(
            "full-antenna delivery needs L = N-1, got N={files}, L={servers}"
        )));
    }
    check_channel(channel, users, servers)?;
    if row >= users {
        return Err(Error::InconsistentInputs(format!("row {row} out of range")));
    }
    let group = row_members(users, row);
    let mut payloads = Vec::with_capacity(group.len());
    let mut streams = Vec::with_capacity(group.len());
    for &k in &group {
        let beam = owner_normalized_beam(field, channel, k, &group, row)?;
        let file = demand.file_of(k);
        payloads.push((beam.clone(), library.subfile(file, row)?.to_vec()));
        streams.push(ServedStream {
            user: k,
            file,
            part: row,
            coefficients: vec![1],
            beam,
        });
    }
    let tau = library.file_len() / files;
    Ok(TransmitBlock {
        owner: row,
        transmission: 0,
        streams,
        signal: superpose(field, servers, tau, &payloads),
        duration: Rational64::new(1, files as i64),
    })
}

/// Transmission `t` of row `row` under `plan`: each served user's minifile
/// combination on a beam nulled at the other served users of `t`.
pub fn build_block_from_plan<F: Field>(
    field: &F,
    plan: &RowCodePlan,
    t: usize,
    row: usize,
    demand: &DemandVector,
    channel: &Matrix<F::Elem>,
    library: &Library<F::Elem>,
) -> Result<TransmitBlock<F::Elem>> {
    let files = library.file_count();
    let users = demand.len();
    let servers = plan.servers();
    if users != files || plan.users() + 1 != users {
        return Err(Error::InconsistentInputs(format!(
            "plan for {} users, {users} demands, {files} files",
            plan.users() + 1
        )));
    }
    check_channel(channel, users, servers)?;
    let tx = plan
        .transmissions()
        .get(t)
        .ok_or_else(|| Error::InconsistentInputs(format!("plan has no transmission {t}")))?;
    if row >= users {
        return Err(Error::InconsistentInputs(format!("row {row} out of range")));
    }
    let members = row_members(users, row);
    let group: Vec<usize> = tx.positions().map(|p| members[p]).collect();
    let tau = library.file_len() / (files * servers);
    let mut payloads = Vec::with_capacity(group.len());
    let mut streams = Vec::with_capacity(group.len());
    for (&u, (_, coeffs)) in group.iter().zip(&tx.served) {
        let beam = owner_normalized_beam(field, channel, u, &group, row)?;
        let file = demand.file_of(u);
        let minis = split_subfile(library, file, row, servers)?;
        let mut payload = vec![field.zero(); tau];
        for (view, &c) in minis.iter().zip(coeffs) {
            if c == 0 {
                continue;
            }
            let c = field.from_i64(c);
            for (acc, &x) in payload.iter_mut().zip(view.resolve(library)) {
                *acc = field.add(*acc, field.mul(c, x));
            }
        }
        payloads.push((beam.clone(), payload));
        streams.push(ServedStream {
            user: u,
            file,
            part: row,
            coefficients: coeffs.clone(),
            beam,
        });
    }
    Ok(TransmitBlock {
        owner: row,
        transmission: t,
        streams,
        signal: superpose(field, servers, tau, &payloads),
        duration: Rational64::new(1, (files * servers) as i64),
    })
}

/// Full delivery schedule, rows in ascending order and transmissions in plan
/// order within each row.
pub fn build_schedule<F: Field>(
    field: &F,
    demand: &DemandVector,
    channel: &Matrix<F::Elem>,
    library: &Library<F::Elem>,
    cfg: &LibraryConfig,
) -> Result<DeliverySchedule<F::Elem>> {
    let regime = cfg.validate_for_delivery()?;
    if library.file_count() != cfg.files || library.file_len() != cfg.file_len {
        return Err(Error::InconsistentInputs(
            "library shape differs from config".into(),
        ));
    }
    if demand.len() != cfg.users {
        return Err(Error::InconsistentInputs(format!(
            "{} demands for {} users",
            demand.len(),
            cfg.users
        )));
    }
    check_channel(channel, cfg.users, cfg.servers)?;

    let plan = match regime {
        Regime::FullAntenna => None,
        Regime::Reduced => Some(build_row_plan_reduced(cfg.files, cfg.servers)?),
    };
    let rows: Vec<Vec<TransmitBlock<F::Elem>>> = (0..cfg.users)
        .into_par_iter()
        .map(|row| match &plan {
            None => Ok(vec![build_block_full_antennas(
                field, row, demand, channel, library,
            )?]),
            Some(plan) => (0..plan.transmissions().len())
                .map(|t| build_block_from_plan(field, plan, t, row, demand, channel, library))
                .collect(),
        })
        .collect::<Result<_>>()?;
    let blocks: Vec<TransmitBlock<F::Elem>> = rows.into_iter().flatten().collect();
    let total_time = blocks
        .iter()
        .fold(Rational64::from_integer(0), |acc, b| acc + b.duration);
    Ok(DeliverySchedule {
        regime,
        config: *cfg,
        demand: demand.clone(),
        plan,
        blocks,
        total_time,
    })
}
