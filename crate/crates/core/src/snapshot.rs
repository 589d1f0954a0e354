//! Binary snapshot container for trained association tensors.
//!
//! Layout (little endian):
//!
//! ```text
//! magic        8 bytes   "LFTENSOR"
//! version      u32
//! header_len   u32
//! header       header_len bytes of JSON (grid, vocabulary, counters, shape)
//! values       n_units * n_stim * n_stim f64, (τ*, β, α) row-major
//! checksum     32 bytes, SHA-256 of everything above
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::association::AssociativeTensor;
use crate::error::{Error, Result};
use crate::grid::{GridParams, TaustarGrid};
use crate::vocab::StimulusVocabulary;

pub const MAGIC: &[u8; 8] = b"LFTENSOR";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub format_version: u32,
    pub grid: GridParams,
    pub k: usize,
    pub vocab: Vec<String>,
    pub episodes_seen: u64,
    pub presentations: Vec<u64>,
    pub shape: [usize; 3],
}

pub fn to_bytes(tensor: &AssociativeTensor) -> Vec<u8> {
    let grid = tensor.grid();
    let vocab = tensor.vocab();
    let header = SnapshotHeader {
        format_version: FORMAT_VERSION,
        grid: grid.params(),
        k: grid.k(),
        vocab: vocab.names().to_vec(),
        episodes_seen: tensor.episodes_seen(),
        presentations: tensor.presentations().to_vec(),
        shape: [grid.n_units(), vocab.len(), vocab.len()],
    };
    let header = serde_json::to_vec(&header).expect("header serialises");

    let mut out = Vec::with_capacity(16 + header.len() + 8 * tensor.values().len() + CHECKSUM_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for v in tensor.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::CorruptSnapshot(format!("truncated while reading {what}")));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

pub fn from_bytes(bytes: &[u8]) -> Result<AssociativeTensor> {
    if bytes.len() < MAGIC.len() + 8 + CHECKSUM_LEN {
        return Err(Error::CorruptSnapshot("file too short".into()));
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::CorruptSnapshot("bad magic".into()));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    let mut rest = &body[MAGIC.len()..];
    let version = u32::from_le_bytes(take(&mut rest, 4, "version")?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::SnapshotVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if Sha256::digest(body).as_slice() != checksum {
        return Err(Error::CorruptSnapshot("checksum mismatch".into()));
    }
    let header_len = u32::from_le_bytes(take(&mut rest, 4, "header length")?.try_into().unwrap());
    let header: SnapshotHeader = serde_json::from_slice(take(&mut rest, header_len as usize, "header")?)
        .map_err(|e| Error::CorruptSnapshot(format!("header: {e}")))?;
    if header.format_version != version || header.k != header.grid.k {
        return Err(Error::CorruptSnapshot("inconsistent header".into()));
    }

    let grid = Arc::new(TaustarGrid::new(header.grid)?);
    let vocab = Arc::new(StimulusVocabulary::new(header.vocab)?);
    let shape = [grid.n_units(), vocab.len(), vocab.len()];
    if header.shape != shape {
        return Err(Error::CorruptSnapshot(format!(
            "declared shape {:?} does not match grid and vocabulary {shape:?}",
            header.shape
        )));
    }
    let n = shape.iter().product::<usize>();
    if rest.len() != 8 * n {
        return Err(Error::CorruptSnapshot(format!(
            "expected {n} values, found {} bytes",
            rest.len()
        )));
    }
    let values = rest
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    AssociativeTensor::from_parts(grid, vocab, values, header.episodes_seen, header.presentations)
}

/// Writes the snapshot atomically (temporary file in the same directory,
/// then rename).
pub fn save(tensor: &AssociativeTensor, path: &Path) -> Result<()> {
    write_atomic(path, &to_bytes(tensor))
}

pub fn load(path: &Path) -> Result<AssociativeTensor> {
    from_bytes(&fs::read(path)?)
}

/// Loads a snapshot and checks it against the running grid and vocabulary.
pub fn load_checked(
    path: &Path,
    grid: &TaustarGrid,
    vocab: &StimulusVocabulary,
) -> Result<AssociativeTensor> {
    let tensor = load(path)?;
    if tensor.grid().params() != grid.params() {
        return Err(Error::SnapshotMismatch(format!(
            "snapshot grid {:?} differs from configured grid {:?}",
            tensor.grid().params(),
            grid.params()
        )));
    }
    if tensor.vocab().as_ref() != vocab {
        return Err(Error::SnapshotMismatch(format!(
            "snapshot vocabulary {:?} differs from {:?}",
            tensor.vocab().names(),
            vocab.names()
        )));
    }
    Ok(tensor)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
