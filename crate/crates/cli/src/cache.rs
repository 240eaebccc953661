//! On-disk eigendecomposition cache.
//!
//! File layout (little endian): `b"CHWF"`, `u32` format version, `u64` dim,
//! `dim` energies, the `dim × dim` eigenvector matrix column by column, and
//! a `u64` checksum (leading bytes of the SHA-256 of everything before it).
//! Only real eigenvector matrices are cached.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use chaoscorr::faer::Mat;
use chaoscorr::tensorops::{hermitian_eigendecomposition, Dense, Operator, SpectralDecomposition};
use sha2::{Digest, Sha256};

use crate::error::CliError;

const MAGIC: &[u8; 4] = b"CHWF";
const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 8;

fn checksum(bytes: &[u8]) -> u64 {
    let d = Sha256::digest(bytes);
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

pub fn encode(d: &SpectralDecomposition) -> Option<Vec<u8>> {
    let Dense::Real(v) = d.vectors() else { return None };
    let n = d.dim();
    let mut out = Vec::with_capacity(HEADER + 8 * (n + n * n) + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for e in d.energies() {
        out.extend_from_slice(&e.to_le_bytes());
    }
    for j in 0..n {
        for i in 0..n {
            out.extend_from_slice(&v[(i, j)].to_le_bytes());
        }
    }
    let c = checksum(&out);
    out.extend_from_slice(&c.to_le_bytes());
    Some(out)
}

pub fn decode(bytes: &[u8], expected_dim: usize) -> Result<SpectralDecomposition, CliError> {
    let corrupt = |m: &str| CliError::Validation(format!("corrupt eigendecomposition cache: {m}"));
    if bytes.len() < HEADER + 8 || &bytes[..4] != MAGIC {
        return Err(corrupt("bad magic or truncated header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(corrupt(&format!("unsupported format version {version}")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if n != expected_dim {
        return Err(corrupt(&format!("dimension {n}, expected {expected_dim}")));
    }
    let body_end = HEADER + 8 * (n + n * n);
    if bytes.len() != body_end + 8 {
        return Err(corrupt("length does not match the dimension"));
    }
    let stored = u64::from_le_bytes(bytes[body_end..].try_into().unwrap());
    if stored != checksum(&bytes[..body_end]) {
        return Err(corrupt("checksum mismatch"));
    }
    let f = |k: usize| f64::from_le_bytes(bytes[HEADER + 8 * k..HEADER + 8 * k + 8].try_into().unwrap());
    let energies = (0..n).map(f).collect();
    let v = Mat::from_fn(n, n, |i, j| f(n + j * n + i));
    SpectralDecomposition::from_parts(energies, Dense::Real(v)).map_err(|e| corrupt(&e.to_string()))
}

#[derive(Clone, Debug)]
pub struct EigenCache {
    dir: Option<PathBuf>,
}

impl EigenCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        EigenCache { dir }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.chwf")))
    }

    /// Reads the decomposition for `key`, or computes and stores it. An
    /// exclusive lock on a side file keeps concurrent runs from racing on the
    /// same entry.
    pub fn get_or_compute(&self, key: &str, op: &Operator) -> Result<SpectralDecomposition, CliError> {
        let (Some(dir), Some(path)) = (&self.dir, self.path(key)) else {
            return Ok(hermitian_eigendecomposition(op)?);
        };
        std::fs::create_dir_all(dir)?;
        let lock = File::create(dir.join(format!("{key}.lock")))?;
        lock.lock()?;
        if path.exists() {
            log::info!("cache hit {}", path.display());
            return decode(&std::fs::read(&path)?, op.dim());
        }
        let d = hermitian_eigendecomposition(op)?;
        match encode(&d) {
            Some(bytes) => write_atomic(&path, &bytes)?,
            None => log::info!("complex eigenvectors are not cached"),
        }
        Ok(d)
    }
}

/// Writes through a temporary file in the same directory and renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chaoscorr::tensorops::{embed_site_operator, pauli_x, pauli_y, pauli_z};

    fn small() -> Operator {
        &embed_site_operator(&pauli_x(), 1, 3).unwrap() + &embed_site_operator(&pauli_z(), 2, 3).unwrap().scale(0.3)
    }

    #[test]
    fn round_trip() {
        let d = hermitian_eigendecomposition(&small()).unwrap();
        let bytes = encode(&d).unwrap();
        assert_eq!(&bytes[..4], b"CHWF");
        assert_eq!(bytes.len(), 16 + 8 * (8 + 64) + 8);
        let back = decode(&bytes, 8).unwrap();
        assert_eq!(back.energies(), d.energies());
        assert_eq!(back.vectors(), d.vectors());
    }

    #[test]
    fn corruption_is_detected() {
        let d = hermitian_eigendecomposition(&small()).unwrap();
        let mut bytes = encode(&d).unwrap();
        assert!(decode(&bytes, 4).is_err());
        bytes[40] ^= 1;
        let e = decode(&bytes, 8).unwrap_err();
        assert!(matches!(e, CliError::Validation(_)) && e.to_string().contains("checksum"), "{e}");
        assert!(decode(&bytes[..20], 8).is_err());
    }

    #[test]
    fn cold_and_warm_agree() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EigenCache::new(Some(dir.path().to_path_buf()));
        let h = small();
        let cold = cache.get_or_compute("k", &h).unwrap();
        assert!(dir.path().join("k.chwf").exists());
        let warm = cache.get_or_compute("k", &h).unwrap();
        assert_eq!(cold.energies(), warm.energies());
        assert_eq!(cold.vectors(), warm.vectors());
        // complex problems are solved but not stored
        let y = embed_site_operator(&pauli_y(), 1, 2).unwrap();
        cache.get_or_compute("y", &y).unwrap();
        assert!(!dir.path().join("y.chwf").exists());
    }
}
