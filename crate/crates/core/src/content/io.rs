//! Binary library dump for reproducible fixtures.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic  "CCLB"            4 bytes
//! version u32 = 1
//! N, K, L u32 each
//! F      u64
//! p      u64               0 for complex mode
//! mode   u8                0 = gf, 1 = complex
//! symbols                  N * F entries, file-major
//!                          gf: u64; complex: f64 re, f64 im
//! ```

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{Library, LibraryConfig};
use crate::error::{Error, Result};
use crate::field::{ComplexField, Field, FieldMode, PrimeField};

const MAGIC: &[u8; 4] = b"CCLB";
const VERSION: u32 = 1;

/// Fields whose symbols can be dumped to bytes.
pub trait SymbolCodec: Field {
    const MODE: FieldMode;
    const SYMBOL_BYTES: usize;

    /// Prime modulus, or 0 for non-prime fields.
    fn modulus(&self) -> u64;
    fn encode(&self, e: Self::Elem, out: &mut Vec<u8>);
    fn decode(&self, bytes: &[u8]) -> Result<Self::Elem>;
}

impl SymbolCodec for PrimeField {
    const MODE: FieldMode = FieldMode::Gf;
    const SYMBOL_BYTES: usize = 8;

    fn modulus(&self) -> u64 {
        PrimeField::modulus(self)
    }

    fn encode(&self, e: u64, out: &mut Vec<u8>) {
        out.extend_from_slice(&e.to_le_bytes());
    }

    fn decode(&self, bytes: &[u8]) -> Result<u64> {
        let v = u64::from_le_bytes(bytes.try_into().expect("8-byte symbol"));
        if v >= self.modulus() {
            return Err(Error::Format(format!(
                "symbol {v} out of range for GF({})",
                self.modulus()
            )));
        }
        Ok(v)
    }
}

impl SymbolCodec for ComplexField {
    const MODE: FieldMode = FieldMode::Complex;
    const SYMBOL_BYTES: usize = 16;

    fn modulus(&self) -> u64 {
        0
    }

    fn encode(&self, e: Complex64, out: &mut Vec<u8>) {
        out.extend_from_slice(&e.re.to_le_bytes());
        out.extend_from_slice(&e.im.to_le_bytes());
    }

    fn decode(&self, bytes: &[u8]) -> Result<Complex64> {
        let re = f64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(bytes[8..].try_into().expect("8 bytes"));
        let z = Complex64::new(re, im);
        if !z.is_finite() {
            return Err(Error::Format("non-finite complex symbol".into()));
        }
        Ok(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LibraryHeader {
    pub config: LibraryConfig,
    pub prime: u64,
    pub mode: FieldMode,
}

pub fn write_library<F: SymbolCodec, W: Write>(
    field: &F,
    cfg: &LibraryConfig,
    library: &Library<F::Elem>,
    mut out: W,
) -> Result<()> {
    if library.file_count() != cfg.files || library.file_len() != cfg.file_len {
        return Err(Error::InconsistentInputs(
            "library shape differs from config".into(),
        ));
    }
    let to_u32 =
        |v: usize| u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")));
    let mut buf = Vec::with_capacity(37 + cfg.files * cfg.file_len * F::SYMBOL_BYTES);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&to_u32(cfg.files)?.to_le_bytes());
    buf.extend_from_slice(&to_u32(cfg.users)?.to_le_bytes());
    buf.extend_from_slice(&to_u32(cfg.servers)?.to_le_bytes());
    buf.extend_from_slice(&(cfg.file_len as u64).to_le_bytes());
    buf.extend_from_slice(&field.modulus().to_le_bytes());
    buf.push(match F::MODE {
        FieldMode::Gf => 0,
        FieldMode::Complex => 1,
    });
    for file in library.files() {
        for &s in file {
            field.encode(s, &mut buf);
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_library<F: SymbolCodec, R: Read>(
    field: &F,
    mut input: R,
) -> Result<(LibraryHeader, Library<F::Elem>)> {
    let mut head = [0u8; 37];
    input
        .read_exact(&mut head)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &head[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(head[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let config = LibraryConfig {
        files: u32_at(8) as usize,
        users: u32_at(12) as usize,
        servers: u32_at(16) as usize,
        file_len: u64_at(20) as usize,
    };
    let prime = u64_at(28);
    let mode = match head[36] {
        0 => FieldMode::Gf,
        1 => FieldMode::Complex,
        m => return Err(Error::Format(format!("unknown mode {m}"))),
    };
    if mode != F::MODE || prime != field.modulus() {
        return Err(Error::Format(format!(
            "file holds {mode} symbols (p={prime}), reader expects {} (p={})",
            F::MODE,
            field.modulus()
        )));
    }
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    let expected = config
        .files
        .checked_mul(config.file_len)
        .and_then(|n| n.checked_mul(F::SYMBOL_BYTES))
        .ok_or_else(|| Error::Format("size overflow".into()))?;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} payload bytes, found {}",
            body.len()
        )));
    }
    let symbols: Vec<F::Elem> = body
        .chunks_exact(F::SYMBOL_BYTES)
        .map(|c| field.decode(c))
        .collect::<Result<_>>()?;
    let files = if config.file_len == 0 {
        Vec::new()
    } else {
        symbols.chunks(config.file_len).map(<[_]>::to_vec).collect()
    };
    let library = Library::new(files)?;
    Ok((
        LibraryHeader {
            config,
            prime,
            mode,
        },
        library,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn gf_library_round_trips(files in 1usize..6, servers in 1usize..4, seed in any::<u64>()) {
            let f = PrimeField::default();
            let cfg = LibraryConfig::new(files, servers, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lib = Library::random(&f, files, cfg.file_len, &mut rng).unwrap();
            let mut buf = Vec::new();
            write_library(&f, &cfg, &lib, &mut buf).unwrap();
            let (header, back) = read_library(&f, buf.as_slice()).unwrap();
            prop_assert_eq!(header.config, cfg);
            prop_assert_eq!(header.prime, 65_537);
            prop_assert_eq!(back, lib);
        }
    }

    #[test]
    fn complex_library_round_trips() {
        let f = ComplexField::default();
        let cfg = LibraryConfig::new(3, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lib = Library::random(&f, 3, cfg.file_len, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_library(&f, &cfg, &lib, &mut buf).unwrap();
        let (header, back) = read_library(&f, buf.as_slice()).unwrap();
        assert_eq!(header.mode, FieldMode::Complex);
        assert_eq!(back, lib);
    }

    #[test]
    fn rejects_mode_mismatch_and_truncation() {
        let f = PrimeField::default();
        let cfg = LibraryConfig::new(2, 1, 1);
        let lib = Library::new(vec![vec![1, 2], vec![3, 4]]).unwrap();
        let mut buf = Vec::new();
        write_library(&f, &cfg, &lib, &mut buf).unwrap();
        assert!(read_library(&PrimeField::new(7).unwrap(), buf.as_slice()).is_err());
        assert!(read_library(&ComplexField::default(), buf.as_slice()).is_err());
        buf.pop();
        assert!(read_library(&f, buf.as_slice()).is_err());
    }
}
