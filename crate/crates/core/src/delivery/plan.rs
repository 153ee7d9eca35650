//! Row code plans for the reduced-server regime.
//!
//! One row of the delivery table must hand an independent message `M_u` to
//! each of the `N - 1` non-owner users and the sum `sum_u M_u` to the owner.
//! With only `L < N - 1` servers, every message is cut into `L` minifiles and
//! the row is sent as `N - 1` transmissions of `L` zero-forced streams each.
//!
//! A plan is fully determined by:
//!
//! - which `L` users each transmission serves, and
//! - the owner's combination matrix `A` (`L x (N-1)`, entries in `{-1, 0, 1}`):
//!   row `j` of `A` says which receptions the owner adds (or subtracts) to get
//!   `sum_u M_u^j`.
//!
//! Given those, user `u`'s coefficients are forced: if `A_u` is `A` restricted
//! to the `L` transmissions serving `u`, the owner's requirement reads
//! `A_u C_u = I`, so `C_u = A_u^{-1}`. Both generators below pick `A` so that
//! every `A_u` is unimodular, which keeps `C_u` integral.
//!
//! Plans are field-independent; all checks run over exact rationals.

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::field::{Field, RationalField};
use crate::linalg::{inverse, rank, Matrix};

/// One transmission of a row: each served user position and the integer
/// coefficients applied to its `L` minifiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedTransmission {
    pub served: Vec<(usize, Vec<i64>)>,
}

impl PlannedTransmission {
    pub fn coefficients_of(&self, position: usize) -> Option<&[i64]> {
        self.served
            .iter()
            .find(|(p, _)| *p == position)
            .map(|(_, c)| c.as_slice())
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.served.iter().map(|(p, _)| *p)
    }
}

/// Code plan for one delivery-table row.
///
/// Users are addressed by *position* `0..N-1` among the row's non-owner
/// users in ascending order; see [`row_members`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowCodePlan {
    users: usize,
    servers: usize,
    transmissions: Vec<PlannedTransmission>,
    combine: Vec<Vec<i64>>,
}

impl RowCodePlan {
    /// Assembles a plan after shape checks only. Call [`RowCodePlan::verify`]
    /// before trusting it for decoding.
    pub fn new(
        users: usize,
        servers: usize,
        transmissions: Vec<PlannedTransmission>,
        combine: Vec<Vec<i64>>,
    ) -> Result<Self> {
        if users == 0 || servers == 0 {
            return Err(Error::PlanVerification("empty plan".into()));
        }
        if combine.len() != servers || combine.iter().any(|r| r.len() != transmissions.len()) {
            return Err(Error::PlanVerification(format!(
                "combination matrix must be {servers}x{}",
                transmissions.len()
            )));
        }
        for (t, tx) in transmissions.iter().enumerate() {
            if tx.served.len() > servers {
                return Err(Error::PlanVerification(format!(
                    "transmission {t} serves {} users with {servers} servers",
                    tx.served.len()
                )));
            }
            let mut seen = vec![false; users];
            for (p, coeffs) in &tx.served {
                if *p >= users || std::mem::replace(&mut seen[*p], true) {
                    return Err(Error::PlanVerification(format!(
                        "transmission {t} has invalid or repeated position {p}"
                    )));
                }
                if coeffs.len() != servers {
                    return Err(Error::PlanVerification(format!(
                        "transmission {t} position {p} has {} coefficients, expected {servers}",
                        coeffs.len()
                    )));
                }
            }
        }
        Ok(Self {
            users,
            servers,
            transmissions,
            combine,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn transmissions(&self) -> &[PlannedTransmission] {
        &self.transmissions
    }

    pub fn combine(&self) -> &[Vec<i64>] {
        &self.combine
    }

    /// Transmission indices serving `position`, ascending.
    pub fn schedule_of(&self, position: usize) -> Vec<usize> {
        self.transmissions
            .iter()
            .enumerate()
            .filter(|(_, tx)| tx.coefficients_of(position).is_some())
            .map(|(t, _)| t)
            .collect()
    }

    /// Stacked coefficient rows of `position`, one per serving transmission.
    pub fn coefficient_rows(&self, position: usize) -> Vec<Vec<i64>> {
        self.transmissions
            .iter()
            .filter_map(|tx| tx.coefficients_of(position).map(<[i64]>::to_vec))
            .collect()
    }

    /// Checks every invariant by exact rational linear algebra:
    ///
    /// 1. `A` has entries in `{-1, 0, 1}`;
    /// 2. each user is served by exactly `L` transmissions and its `L x L`
    ///    coefficient matrix is invertible;
    /// 3. row `j` of `A` applied to the owner's reception functionals equals
    ///    the functional `sum_u M_u^j`.
    pub fn verify(&self) -> Result<()> {
        let q = RationalField;
        if self
            .combine
            .iter()
            .flatten()
            .any(|&a| !(-1..=1).contains(&a))
        {
            return Err(Error::PlanVerification(
                "combination entries must be -1, 0 or 1".into(),
            ));
        }
        for u in 0..self.users {
            let rows = self.coefficient_rows(u);
            if rows.len() != self.servers {
                return Err(Error::PlanVerification(format!(
                    "position {u} is served {} times, expected {}",
                    rows.len(),
                    self.servers
                )));
            }
            let c = to_rational(&rows)?;
            if rank(&q, &c) != self.servers {
                return Err(Error::PlanVerification(format!(
                    "coefficient system of position {u} is singular"
                )));
            }
        }
        // Owner reception t as a functional over (position, minifile) coordinates.
        let width = self.users * self.servers;
        let receptions: Vec<Vec<Rational64>> = self
            .transmissions
            .iter()
            .map(|tx| {
                let mut r = vec![q.zero(); width];
                for (p, coeffs) in &tx.served {
                    for (m, &c) in coeffs.iter().enumerate() {
                        r[p * self.servers + m] = q.from_i64(c);
                    }
                }
                r
            })
            .collect();
        for (j, a_row) in self.combine.iter().enumerate() {
            let mut combined = vec![q.zero(); width];
            for (&a, r) in a_row.iter().zip(&receptions) {
                for (acc, &x) in combined.iter_mut().zip(r) {
                    *acc = q.add(*acc, q.mul(q.from_i64(a), x));
                }
            }
            let target: Vec<Rational64> = (0..width)
                .map(|idx| {
                    if idx % self.servers == j {
                        q.one()
                    } else {
                        q.zero()
                    }
                })
                .collect();
            if combined != target {
                return Err(Error::PlanVerification(format!(
                    "combination row {j} does not yield the minifile-{} sum",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

fn to_rational(rows: &[Vec<i64>]) -> Result<Matrix<Rational64>> {
    let q = RationalField;
    let converted: Vec<Vec<Rational64>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| q.from_i64(x)).collect())
        .collect();
    Matrix::from_rows(&converted).map_err(|e| Error::PlanVerification(e.to_string()))
}

/// Non-owner users of row `owner`, ascending. Plan position `p` refers to
/// the `p`-th entry.
pub fn row_members(users: usize, owner: usize) -> Vec<usize> {
    (0..users).filter(|&u| u != owner).collect()
}

/// Deterministic, verified plan for `files = N` and `servers = L`.
///
/// - `L = N - 2`: transmission `t` serves everyone except position
///   `N - 2 - t`; `A` pairs consecutive receptions, `R_j + R_{j+1}`.
/// - `L | N - 1`: positions form `(N - 1) / L` groups of `L`, each served by
///   `L` consecutive transmissions; within a group `A` is `I + S` (`S` the
///   superdiagonal shift), which gives the alternating partial-sum
///   coefficients `M^j - M^{j+1} + M^{j+2} - ...`.
pub fn build_row_plan_reduced(files: usize, servers: usize) -> Result<RowCodePlan> {
    if files < 3 || servers == 0 || servers >= files - 1 {
        return Err(Error::WrongRegime(format!(
            "reduced plans need 1 <= L < N-1, got N={files}, L={servers}"
        )));
    }
    let n = files - 1;
    let (serving, combine): (Vec<Vec<usize>>, Vec<Vec<i64>>) = if servers + 1 == n {
        let serving = (0..n)
            .map(|t| (0..n).filter(|&p| p != n - 1 - t).collect())
            .collect();
        let combine = (0..servers)
            .map(|j| (0..n).map(|t| i64::from(t == j || t == j + 1)).collect())
            .collect();
        (serving, combine)
    } else if n.is_multiple_of(servers) {
        let serving = (0..n)
            .map(|t| {
                let g = t / servers;
                (g * servers..(g + 1) * servers).collect()
            })
            .collect();
        let combine = (0..servers)
            .map(|j| {
                (0..n)
                    .map(|t| {
                        let r = t % servers;
                        i64::from(r == j || r == j + 1)
                    })
                    .collect()
            })
            .collect();
        (serving, combine)
    } else {
        return Err(Error::WrongRegime(format!(
            "L={servers} neither divides N-1={n} nor equals N-2"
        )));
    };

    let mut transmissions: Vec<PlannedTransmission> = serving
        .iter()
        .map(|_| PlannedTransmission { served: Vec::new() })
        .collect();
    let q = RationalField;
    for p in 0..n {
        let ts: Vec<usize> = (0..n).filter(|&t| serving[t].contains(&p)).collect();
        let a_cols: Vec<Vec<i64>> = combine
            .iter()
            .map(|row| ts.iter().map(|&t| row[t]).collect())
            .collect();
        let inv = inverse(&q, &to_rational(&a_cols)?)?.ok_or_else(|| {
            Error::PlanVerification(format!("combination block of position {p} is singular"))
        })?;
        for (r, &t) in ts.iter().enumerate() {
            let coeffs = inv
                .row(r)
                .iter()
                .map(|x| {
                    x.is_integer().then(|| x.to_integer()).ok_or_else(|| {
                        Error::PlanVerification(format!("non-integral coefficient {x}"))
                    })
                })
                .collect::<Result<Vec<i64>>>()?;
            transmissions[t].served.push((p, coeffs));
        }
    }
    for tx in &mut transmissions {
        tx.served.sort_by_key(|(p, _)| *p);
    }
    let plan = RowCodePlan::new(n, servers, transmissions, combine)?;
    plan.verify()?;
    Ok(plan)
}
