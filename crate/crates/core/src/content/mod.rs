//! File library, its subfile/minifile decomposition, demands, and the coded
//! cache placement `Z_k = W_1^k + ... + W_N^k`.
//!
//! Indices are 0-based throughout the API; renderers add 1 for display.

mod io;

pub use io::{read_library, write_library, LibraryHeader, SymbolCodec};

use std::fmt;

use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;

/// Which delivery scheme a `(N, L)` pair falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `L = N - 1`: one zero-forced block per table row.
    FullAntenna,
    /// `L < N - 1` with either `L | N - 1` or `L = N - 2`: each row is
    /// split into `N - 1` minifile transmissions.
    Reduced,
}

impl Regime {
    pub fn classify(files: usize, servers: usize) -> Result<Regime> {
        if files < 2 {
            return Err(Error::WrongRegime(format!(
                "need at least 2 files, got N={files}"
            )));
        }
        let others = files - 1;
        if servers == 0 {
            return Err(Error::WrongRegime("L must be at least 1".into()));
        }
        if servers > others {
            return Err(Error::WrongRegime(format!(
                "L={servers} exceeds N-1={others}"
            )));
        }
        if servers == others {
            return Ok(Regime::FullAntenna);
        }
        if others.is_multiple_of(servers) || servers + 1 == others {
            Ok(Regime::Reduced)
        } else {
            Err(Error::WrongRegime(format!(
                "L={servers} neither divides N-1={others} nor equals N-2"
            )))
        }
    }

    pub fn is_supported(files: usize, servers: usize) -> bool {
        Self::classify(files, servers).is_ok()
    }
}

/// Problem dimensions. Cache size is fixed at `M = 1/N` and users equal files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryConfig {
    pub files: usize,
    pub users: usize,
    pub servers: usize,
    /// File length `F` in field symbols.
    pub file_len: usize,
}

impl LibraryConfig {
    /// Config with the smallest file length the regime allows times `scale`:
    /// `F = N * L * scale`, i.e. `scale` symbols per minifile.
    pub fn new(files: usize, servers: usize, scale: usize) -> Self {
        Self {
            files,
            users: files,
            servers,
            file_len: files * servers * scale,
        }
    }

    pub fn cache_size(&self) -> Rational64 {
        Rational64::new(1, self.files as i64)
    }

    pub fn subfile_len(&self) -> usize {
        self.file_len / self.files
    }

    /// Checks the placement-level invariants.
    pub fn validate(&self) -> Result<()> {
        if self.files == 0 {
            return Err(Error::InvalidConfig("N must be positive".into()));
        }
        if self.users != self.files {
            return Err(Error::InvalidConfig(format!(
                "K={} must equal N={}",
                self.users, self.files
            )));
        }
        if self.file_len == 0 {
            return Err(Error::InvalidConfig("F must be positive".into()));
        }
        if !self.file_len.is_multiple_of(self.files) {
            return Err(Error::IndivisibleFile {
                len: self.file_len,
                parts: self.files,
            });
        }
        Ok(())
    }

    /// Checks placement invariants plus the delivery regime and minifile
    /// granularity.
    pub fn validate_for_delivery(&self) -> Result<Regime> {
        self.validate()?;
        let regime = Regime::classify(self.files, self.servers)?;
        if regime == Regime::Reduced && !self.file_len.is_multiple_of(self.files * self.servers) {
            return Err(Error::IndivisibleFile {
                len: self.file_len,
                parts: self.files * self.servers,
            });
        }
        Ok(regime)
    }
}

/// The `N` files, each `F` symbols long.
#[derive(Debug, Clone, PartialEq)]
pub struct Library<E> {
    files: Vec<Vec<E>>,
}

impl<E: Copy> Library<E> {
    pub fn new(files: Vec<Vec<E>>) -> Result<Self> {
        let len = files
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidConfig("library needs at least one file".into()))?;
        if len == 0 || files.iter().any(|f| f.len() != len) {
            return Err(Error::InvalidConfig(
                "all files must be non-empty and of identical length".into(),
            ));
        }
        Ok(Self { files })
    }

    pub fn random<F: Field<Elem = E>, R: Rng + ?Sized>(
        field: &F,
        files: usize,
        file_len: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Self::new(
            (0..files)
                .map(|_| (0..file_len).map(|_| field.random(rng)).collect())
                .collect(),
        )
    }

    pub fn file_count(&self) -> usize {
        self.files.len()
    }

    pub fn file_len(&self) -> usize {
        self.files[0].len()
    }

    pub fn file(&self, n: usize) -> &[E] {
        &self.files[n]
    }

    pub fn files(&self) -> &[Vec<E>] {
        &self.files
    }

    /// Subfile `W_n^i` as a slice; requires `F` divisible by `N`.
    pub fn subfile(&self, n: usize, i: usize) -> Result<&[E]> {
        let views = split_file(self, n)?;
        Ok(views[i].resolve(self))
    }

    /// Minifile `j` (of `parts_per_subfile`) of subfile `W_n^i`.
    pub fn minifile(&self, n: usize, i: usize, j: usize, parts_per_subfile: usize) -> Result<&[E]> {
        let views = split_subfile(self, n, i, parts_per_subfile)?;
        Ok(views[j].resolve(self))
    }
}

/// The `part`-th contiguous `F/N` slice of file `file`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubfileView {
    pub file: usize,
    pub part: usize,
    start: usize,
    len: usize,
}

impl SubfileView {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }

    pub fn resolve<'a, E: Copy>(&self, library: &'a Library<E>) -> &'a [E] {
        &library.file(self.file)[self.range()]
    }
}

/// The `mini`-th contiguous slice of subfile `(file, part)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinifileView {
    pub file: usize,
    pub part: usize,
    pub mini: usize,
    start: usize,
    len: usize,
}

impl MinifileView {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }

    pub fn resolve<'a, E: Copy>(&self, library: &'a Library<E>) -> &'a [E] {
        &library.file(self.file)[self.range()]
    }
}

pub fn split_file<E: Copy>(library: &Library<E>, n: usize) -> Result<Vec<SubfileView>> {
    let parts = library.file_count();
    let f = library.file_len();
    if !f.is_multiple_of(parts) {
        return Err(Error::IndivisibleFile { len: f, parts });
    }
    if n >= parts {
        return Err(Error::InconsistentInputs(format!(
            "file {n} outside library of {parts}"
        )));
    }
    let len = f / parts;
    Ok((0..parts)
        .map(|part| SubfileView {
            file: n,
            part,
            start: part * len,
            len,
        })
        .collect())
}

pub fn split_subfile<E: Copy>(
    library: &Library<E>,
    n: usize,
    part: usize,
    pieces: usize,
) -> Result<Vec<MinifileView>> {
    let sub = split_file(library, n)?[part];
    if pieces == 0 || sub.len % pieces != 0 {
        return Err(Error::IndivisibleFile {
            len: sub.len,
            parts: pieces,
        });
    }
    let len = sub.len / pieces;
    Ok((0..pieces)
        .map(|mini| MinifileView {
            file: n,
            part,
            mini,
            start: sub.start + mini * len,
            len,
        })
        .collect())
}

/// Cache of user `user`: the symbol-wise sum of subfile `user` across all files.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheContent<E> {
    pub user: usize,
    pub payload: Vec<E>,
}

/// Fills every cache with `Z_k = sum_n W_n^k`. Demand-oblivious by signature.
pub fn place_caches<F: Field>(
    field: &F,
    library: &Library<F::Elem>,
    cfg: &LibraryConfig,
) -> Result<Vec<CacheContent<F::Elem>>> {
    cfg.validate()?;
    if library.file_count() != cfg.files || library.file_len() != cfg.file_len {
        return Err(Error::InconsistentInputs(format!(
            "library is {}x{}, config expects {}x{}",
            library.file_count(),
            library.file_len(),
            cfg.files,
            cfg.file_len
        )));
    }
    let views: Vec<Vec<SubfileView>> = (0..cfg.files)
        .map(|n| split_file(library, n))
        .collect::<Result<_>>()?;
    let sub_len = cfg.subfile_len();
    Ok((0..cfg.users)
        .map(|k| {
            let mut payload = vec![field.zero(); sub_len];
            for file_views in &views {
                for (acc, &s) in payload.iter_mut().zip(file_views[k].resolve(library)) {
                    *acc = field.add(*acc, s);
                }
            }
            CacheContent { user: k, payload }
        })
        .collect())
}

/// Requested file per user; pairwise distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DemandVector(Vec<usize>);

impl DemandVector {
    pub fn new(demands: Vec<usize>, files: usize) -> Result<Self> {
        let mut seen = vec![false; files];
        for &d in &demands {
            if d >= files {
                return Err(Error::InvalidConfig(format!(
                    "demand for file {} outside library of {files}",
                    d + 1
                )));
            }
            if std::mem::replace(&mut seen[d], true) {
                return Err(Error::InvalidConfig(format!(
                    "file {} requested twice; demands must be distinct",
                    d + 1
                )));
            }
        }
        Ok(Self(demands))
    }

    /// User `k` requests file `k`.
    pub fn identity(users: usize) -> Self {
        Self((0..users).collect())
    }

    pub fn random<R: Rng + ?Sized>(users: usize, rng: &mut R) -> Self {
        let mut d: Vec<usize> = (0..users).collect();
        d.shuffle(rng);
        Self(d)
    }

    pub fn file_of(&self, user: usize) -> usize {
        self.0[user]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for DemandVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_based: Vec<String> = self.0.iter().map(|d| (d + 1).to_string()).collect();
        write!(f, "{}", one_based.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;
    use proptest::prelude::*;

    fn counting_library(files: usize, len: usize) -> Library<u64> {
        Library::new(
            (0..files)
                .map(|n| (0..len).map(|s| (n * 100 + s + 1) as u64).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_four_ways() {
        let lib = counting_library(4, 8);
        let views = split_file(&lib, 0).unwrap();
        let slices: Vec<&[u64]> = views.iter().map(|v| v.resolve(&lib)).collect();
        assert_eq!(slices, vec![&[1, 2][..], &[3, 4], &[5, 6], &[7, 8]]);
    }

    #[test]
    fn split_two_single_symbols() {
        let lib = counting_library(2, 2);
        let views = split_file(&lib, 1).unwrap();
        assert_eq!(views.len(), 2);
        assert_eq!(views[0].resolve(&lib), &[101]);
        assert_eq!(views[1].resolve(&lib), &[102]);
    }

    #[test]
    fn split_indivisible() {
        let lib = counting_library(5, 7);
        assert!(matches!(
            split_file(&lib, 0),
            Err(Error::IndivisibleFile { len: 7, parts: 5 })
        ));
    }

    #[test]
    fn placement_single_file() {
        let f = PrimeField::default();
        let lib = counting_library(1, 3);
        let cfg = LibraryConfig {
            files: 1,
            users: 1,
            servers: 1,
            file_len: 3,
        };
        let caches = place_caches(&f, &lib, &cfg).unwrap();
        assert_eq!(caches.len(), 1);
        assert_eq!(caches[0].payload, lib.file(0));
    }

    #[test]
    fn placement_constant_files_gf7() {
        let f = PrimeField::new(7).unwrap();
        let lib = Library::new(vec![vec![1u64; 10]; 5]).unwrap();
        let cfg = LibraryConfig {
            files: 5,
            users: 5,
            servers: 4,
            file_len: 10,
        };
        for z in place_caches(&f, &lib, &cfg).unwrap() {
            assert_eq!(z.payload, vec![5; 2]);
        }
    }

    #[test]
    fn demand_must_be_distinct() {
        assert!(DemandVector::new(vec![0, 1, 1], 3).is_err());
        assert!(DemandVector::new(vec![0, 3], 3).is_err());
        assert!(DemandVector::new(vec![2, 0, 1], 3).is_ok());
    }

    #[test]
    fn regimes() {
        assert_eq!(Regime::classify(4, 3).unwrap(), Regime::FullAntenna);
        assert_eq!(Regime::classify(4, 2).unwrap(), Regime::Reduced);
        assert_eq!(Regime::classify(9, 2).unwrap(), Regime::Reduced);
        assert_eq!(Regime::classify(7, 5).unwrap(), Regime::Reduced);
        assert!(Regime::classify(4, 4).is_err());
        assert!(Regime::classify(9, 3).is_err());
        assert!(Regime::classify(1, 1).is_err());
    }

    #[test]
    fn reduced_regime_needs_minifile_granularity() {
        let cfg = LibraryConfig {
            files: 4,
            users: 4,
            servers: 2,
            file_len: 4,
        };
        assert!(matches!(
            cfg.validate_for_delivery(),
            Err(Error::IndivisibleFile { len: 4, parts: 8 })
        ));
    }

    proptest! {
        #[test]
        fn subfiles_and_minifiles_tile_the_file(
            files in 1usize..6,
            pieces in 1usize..4,
            scale in 1usize..4,
        ) {
            let len = files * pieces * scale;
            let lib = counting_library(files, len);
            for n in 0..files {
                let views = split_file(&lib, n).unwrap();
                let joined: Vec<u64> = views.iter().flat_map(|v| v.resolve(&lib).to_vec()).collect();
                prop_assert_eq!(&joined[..], lib.file(n));
                for v in &views {
                    let minis = split_subfile(&lib, n, v.part, pieces).unwrap();
                    let joined: Vec<u64> = minis.iter().flat_map(|m| m.resolve(&lib).to_vec()).collect();
                    prop_assert_eq!(&joined[..], v.resolve(&lib));
                }
            }
        }

        #[test]
        fn cache_is_exactly_one_subfile_long(files in 1usize..7, scale in 1usize..4, seed in any::<u64>()) {
            use rand::SeedableRng;
            let f = PrimeField::default();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cfg = LibraryConfig { files, users: files, servers: 1, file_len: files * scale };
            let lib = Library::random(&f, files, cfg.file_len, &mut rng).unwrap();
            for z in place_caches(&f, &lib, &cfg).unwrap() {
                prop_assert_eq!(z.payload.len(), scale);
                let expect: Vec<u64> = (0..scale)
                    .map(|s| f.sum((0..files).map(|n| lib.subfile(n, z.user).unwrap()[s])))
                    .collect();
                prop_assert_eq!(z.payload, expect);
            }
        }
    }
}
