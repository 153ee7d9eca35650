#![allow(dead_code)]

use num_rational::Rational64;

use coded_caching::channel::{receive, ChannelMatrix};
use coded_caching::content::{place_caches, DemandVector, Library, LibraryConfig, Regime};
use coded_caching::delivery::{
    build_block_from_plan, DeliverySchedule, PlannedTransmission, RowCodePlan,
};
use coded_caching::field::{Field, PrimeField};
use coded_caching::linalg::{rank, Matrix};
use coded_caching::Result;

/// A hand-written N = 4, L = 2 row plan,
/// in 0-based positions among the three non-owner users:
///
/// | t | served positions | coefficients |
/// |---|------------------|--------------|
/// | 0 | 0, 1             | M_0^1 ; M_1^1 + M_1^2 |
/// | 1 | 1, 2             | M_1^2 ; -M_2^1 |
/// | 2 | 0, 2             | M_0^2 ; M_2^1 + M_2^2 |
///
/// The owner combines `R0 - R1` and `R1 + R2`.
pub fn literal_four_two_plan() -> RowCodePlan {
    let tx = |served: Vec<(usize, Vec<i64>)>| PlannedTransmission { served };
    RowCodePlan::new(
        3,
        2,
        vec![
            tx(vec![(0, vec![1, 0]), (1, vec![1, 1])]),
            tx(vec![(1, vec![0, 1]), (2, vec![-1, 0])]),
            tx(vec![(0, vec![0, 1]), (2, vec![1, 1])]),
        ],
        vec![vec![1, -1, 0], vec![0, 1, 1]],
    )
    .unwrap()
}

/// A reduced-regime schedule driven by an explicit plan instead of the
/// generated one.
pub fn schedule_with_plan<F: Field>(
    field: &F,
    plan: &RowCodePlan,
    demand: &DemandVector,
    channel: &Matrix<F::Elem>,
    library: &Library<F::Elem>,
    cfg: &LibraryConfig,
) -> Result<DeliverySchedule<F::Elem>> {
    let mut blocks = Vec::new();
    for row in 0..cfg.users {
        for t in 0..plan.transmissions().len() {
            blocks.push(build_block_from_plan(
                field, plan, t, row, demand, channel, library,
            )?);
        }
    }
    let total_time = blocks
        .iter()
        .fold(Rational64::from_integer(0), |acc, b| acc + b.duration);
    Ok(DeliverySchedule {
        regime: Regime::Reduced,
        config: *cfg,
        demand: demand.clone(),
        plan: Some(plan.clone()),
        blocks,
        total_time,
    })
}

/// Library whose only nonzero symbol is a one at flat coordinate `j`
/// (`file * F + offset`).
pub fn basis_library(field: &PrimeField, cfg: &LibraryConfig, j: usize) -> Library<u64> {
    let mut files = vec![vec![field.zero(); cfg.file_len]; cfg.files];
    files[j / cfg.file_len][j % cfg.file_len] = field.one();
    Library::new(files).unwrap()
}

/// Per user, every observed symbol (receptions, then cache) written as a
/// linear functional of the `N * F` library coordinates.
///
/// Found by probing the pipeline with each basis library; the beams depend on
/// the channel and demand only, so the map is linear in the library.
pub fn observation_functionals(
    field: &PrimeField,
    cfg: &LibraryConfig,
    build: impl Fn(&Library<u64>) -> DeliverySchedule<u64>,
    channel: &ChannelMatrix<u64>,
) -> Vec<Matrix<u64>> {
    let dim = cfg.files * cfg.file_len;
    let mut columns: Vec<Vec<Vec<u64>>> = vec![Vec::with_capacity(dim); cfg.users];
    for j in 0..dim {
        let lib = basis_library(field, cfg, j);
        let schedule = build(&lib);
        let log = receive(field, channel, &schedule).unwrap();
        let caches = place_caches(field, &lib, cfg).unwrap();
        for (k, col) in columns.iter_mut().enumerate() {
            let mut obs: Vec<u64> = log.of_user(k).iter().flatten().copied().collect();
            obs.extend(&caches[k].payload);
            col.push(obs);
        }
    }
    columns
        .into_iter()
        .map(|cols| Matrix::from_rows(&cols).unwrap().transpose())
        .collect()
}

/// Drops the trailing cache rows of a functional matrix.
pub fn without_cache(g: &Matrix<u64>, cfg: &LibraryConfig) -> Matrix<u64> {
    let keep: Vec<usize> = (0..g.rows() - cfg.subfile_len()).collect();
    g.select_rows(&keep)
}

/// Whether every coordinate of `file` lies in the row span of `g`.
pub fn span_contains_file(
    field: &PrimeField,
    g: &Matrix<u64>,
    cfg: &LibraryConfig,
    file: usize,
) -> bool {
    let mut rows = g.to_rows();
    let base = rank(field, g);
    for s in 0..cfg.file_len {
        let mut e = vec![field.zero(); g.cols()];
        e[file * cfg.file_len + s] = field.one();
        rows.push(e);
    }
    rank(field, &Matrix::from_rows(&rows).unwrap()) == base
}

/// Coordinates of `file` that are *not* individually recoverable from `g`.
pub fn unrecoverable_coordinates(
    field: &PrimeField,
    g: &Matrix<u64>,
    cfg: &LibraryConfig,
    file: usize,
) -> Vec<usize> {
    let base = rank(field, g);
    let mut rows = g.to_rows();
    (0..cfg.file_len)
        .filter(|&s| {
            let mut e = vec![field.zero(); g.cols()];
            e[file * cfg.file_len + s] = field.one();
            rows.push(e);
            let r = rank(field, &Matrix::from_rows(&rows).unwrap());
            rows.pop();
            r != base
        })
        .collect()
}

/// Every supported `(N, L)` with `N` in the given range.
pub fn supported_pairs(max_files: usize) -> Vec<(usize, usize)> {
    (2..=max_files)
        .flat_map(|n| (1..n).map(move |l| (n, l)))
        .filter(|&(n, l)| Regime::is_supported(n, l))
        .collect()
}
