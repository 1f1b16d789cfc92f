//! Single-file persistent index of a [`TerminologyStore`].
//!
//! Layout (all integers little endian):
//!
//! ```text
//! offset  size  field
//!      0     8  magic "SCTIDX01"
//!      8     4  format version
//!     12     4  reserved, zero
//!     16     8  payload length
//!     24     4  CRC-32 of the payload
//!     28     4  reserved, zero
//!     32     -  payload
//! ```
//!
//! The payload holds the is-a type id, the three row tables, the description,
//! outbound and inbound adjacency tables, and the search haystack, in that
//! order. Identical stores encode to identical bytes.

use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::id::SctId;
use crate::model::{Concept, Csr, Description, DescriptionKind, Relationship, TerminologyStore};
use crate::term_index::TermIndex;

pub const MAGIC: [u8; 8] = *b"SCTIDX01";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("index checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("index file is truncated")]
    TruncatedFile,
    #[error("index payload is malformed: {0}")]
    Malformed(String),
    #[error("index I/O on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn malformed(what: impl Into<String>) -> IndexError {
    IndexError::Malformed(what.into())
}

#[derive(Default)]
struct Encoder(Vec<u8>);

impl Encoder {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn id(&mut self, v: SctId) {
        self.u64(v.get());
    }
    fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }
    fn bytes(&mut self, b: &[u8]) {
        self.len(b.len());
        self.0.extend_from_slice(b);
    }
    fn u32s(&mut self, v: &[u32]) {
        self.len(v.len());
        self.0.reserve(v.len() * 4);
        for &x in v {
            self.u32(x);
        }
    }
    fn csr(&mut self, c: &Csr) {
        self.u32s(&c.offsets);
        self.u32s(&c.items);
    }
}

struct Decoder<'a> {
    buf: &'a [u8],
}

impl<'a> Decoder<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        if self.buf.len() < n {
            return Err(malformed("payload ends early"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8, IndexError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn id(&mut self) -> Result<SctId, IndexError> {
        SctId::new(self.u64()?).map_err(|e| malformed(e.to_string()))
    }
    fn flag(&mut self) -> Result<bool, IndexError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(malformed(format!("bad flag byte {v}"))),
        }
    }
    /// A count of items of at least `item_size` bytes each.
    fn len(&mut self, item_size: usize) -> Result<usize, IndexError> {
        let n = self.u64()?;
        if n > (self.buf.len() / item_size.max(1)) as u64 {
            return Err(malformed("length exceeds payload"));
        }
        Ok(n as usize)
    }
    fn bytes(&mut self) -> Result<&'a [u8], IndexError> {
        let n = self.len(1)?;
        self.take(n)
    }
    fn u32s(&mut self) -> Result<Vec<u32>, IndexError> {
        let n = self.len(4)?;
        Ok(self
            .take(n * 4)?
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
    fn csr(&mut self) -> Result<Csr, IndexError> {
        Ok(Csr { offsets: self.u32s()?, items: self.u32s()? })
    }
}

fn encode_payload(store: &TerminologyStore) -> Vec<u8> {
    let mut e = Encoder::default();
    e.id(store.isa_type_id);
    e.len(store.concepts.len());
    for c in &store.concepts {
        e.id(c.id);
        e.u8(c.active.into());
    }
    e.len(store.descriptions.len());
    for d in &store.descriptions {
        e.id(d.id);
        e.id(d.concept_id);
        e.u8(match d.kind {
            DescriptionKind::Fsn => 0,
            DescriptionKind::Syn => 1,
        });
        e.u8(d.active.into());
        e.bytes(d.term.as_bytes());
    }
    e.len(store.relationships.len());
    for r in &store.relationships {
        e.id(r.id);
        e.id(r.source_id);
        e.id(r.type_id);
        e.id(r.destination_id);
        e.u32(r.group);
        e.u8(r.active.into());
    }
    e.csr(&store.by_concept);
    e.csr(&store.out_index);
    e.csr(&store.in_index);
    e.bytes(&store.terms.haystack);
    e.u32s(&store.terms.starts);
    e.u32s(&store.terms.descriptions);
    e.0
}

/// Encodes `store` into the complete file image.
pub fn encode(store: &TerminologyStore) -> Vec<u8> {
    let payload = encode_payload(store);
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

/// Decodes a complete file image, checking header, checksum and structure.
pub fn decode(bytes: &[u8]) -> Result<TerminologyStore, IndexError> {
    let magic_len = bytes.len().min(MAGIC.len());
    if bytes[..magic_len] != MAGIC[..magic_len] {
        return Err(IndexError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(IndexError::TruncatedFile);
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(8);
    if version != FORMAT_VERSION {
        return Err(IndexError::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    if word(12) != 0 || word(28) != 0 {
        return Err(malformed("reserved header bytes are not zero"));
    }
    let payload_len = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let available = (bytes.len() - HEADER_LEN) as u64;
    if payload_len > available {
        return Err(IndexError::TruncatedFile);
    }
    if payload_len < available {
        return Err(malformed("trailing bytes after payload"));
    }
    let payload = &bytes[HEADER_LEN..];
    let stored = word(24);
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(IndexError::ChecksumMismatch { stored, computed });
    }
    decode_payload(payload)
}

fn decode_payload(payload: &[u8]) -> Result<TerminologyStore, IndexError> {
    let mut d = Decoder { buf: payload };
    let isa_type_id = d.id()?;

    let n = d.len(9)?;
    let mut concepts = Vec::with_capacity(n);
    for _ in 0..n {
        concepts.push(Concept { id: d.id()?, active: d.flag()? });
    }
    if !concepts.windows(2).all(|w| w[0].id < w[1].id) {
        return Err(malformed("concepts are not strictly ascending"));
    }
    let position = |id: SctId| {
        concepts
            .binary_search_by_key(&id, |c| c.id)
            .map_err(|_| malformed(format!("unresolved concept {id}")))
    };
    position(isa_type_id)?;

    let m = d.len(22)?;
    let mut descriptions = Vec::with_capacity(m);
    let mut desc_pos = Vec::with_capacity(m);
    for _ in 0..m {
        let id = d.id()?;
        let concept_id = d.id()?;
        let kind = match d.u8()? {
            0 => DescriptionKind::Fsn,
            1 => DescriptionKind::Syn,
            v => return Err(malformed(format!("bad description kind {v}"))),
        };
        let active = d.flag()?;
        let term = std::str::from_utf8(d.bytes()?)
            .map_err(|_| malformed("term is not UTF-8"))?
            .to_owned();
        desc_pos.push(position(concept_id)?);
        descriptions.push(Description { id, concept_id, term, kind, active });
    }

    let k = d.len(37)?;
    let mut relationships = Vec::with_capacity(k);
    let mut ends = Vec::with_capacity(k);
    let mut visible = Vec::with_capacity(k);
    for _ in 0..k {
        let r = Relationship {
            id: d.id()?,
            source_id: d.id()?,
            type_id: d.id()?,
            destination_id: d.id()?,
            group: d.u32()?,
            active: d.flag()?,
        };
        let (src, dst) = (position(r.source_id)?, position(r.destination_id)?);
        position(r.type_id)?;
        visible.push(r.active && concepts[src].active && concepts[dst].active);
        ends.push((src, dst));
        relationships.push(r);
    }
    if !relationships.windows(2).all(|w| w[0].id < w[1].id) {
        return Err(malformed("relationships are not strictly ascending"));
    }

    let by_concept = d.csr()?;
    let out_index = d.csr()?;
    let in_index = d.csr()?;
    check_partition(&by_concept, n, m, |i| desc_pos[i], "description table")?;
    check_partition(&out_index, n, k, |i| ends[i].0, "outbound index")?;
    check_partition(&in_index, n, k, |i| ends[i].1, "inbound index")?;

    let terms = TermIndex {
        haystack: d.bytes()?.to_vec(),
        starts: d.u32s()?,
        descriptions: d.u32s()?,
    };
    if !terms.well_formed(m) {
        return Err(malformed("term index"));
    }
    if !d.buf.is_empty() {
        return Err(malformed("unread payload bytes"));
    }

    Ok(TerminologyStore {
        isa_type_id,
        concepts,
        descriptions,
        relationships,
        by_concept,
        out_index,
        in_index,
        visible,
        terms,
    })
}

/// Every item in `0..items` appears exactly once, in the row `row_of` names.
fn check_partition(
    csr: &Csr,
    rows: usize,
    items: usize,
    row_of: impl Fn(usize) -> usize,
    what: &str,
) -> Result<(), IndexError> {
    if !csr.well_formed(rows, items) || csr.items.len() != items {
        return Err(malformed(what));
    }
    let mut seen = vec![false; items];
    for row in 0..rows {
        for &it in &csr.items[csr.offsets[row] as usize..csr.offsets[row + 1] as usize] {
            let it = it as usize;
            if seen[it] || row_of(it) != row {
                return Err(malformed(what));
            }
            seen[it] = true;
        }
    }
    Ok(())
}

/// Writes the index atomically: a temporary file in the target directory is
/// renamed over `path` once fully written and synced.
pub fn save_index(store: &TerminologyStore, path: &Path) -> Result<(), IndexError> {
    let io = |source| IndexError::Io { path: path.display().to_string(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".sctidx-")
        .tempfile_in(dir)
        .map_err(io)?;
    tmp.write_all(&encode(store)).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<TerminologyStore, IndexError> {
    let bytes = std::fs::read(path).map_err(|source| IndexError::Io { path: path.display().to_string(), source })?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_store;

    fn minimal() -> TerminologyStore {
        let isa = SctId::new(116680003).unwrap();
        build_store(vec![Concept { id: isa, active: true }], vec![], vec![], isa).unwrap()
    }

    #[test]
    fn minimal_store_round_trips() {
        let store = minimal();
        let bytes = encode(&store);
        assert!(bytes.len() >= HEADER_LEN);
        assert_eq!(&bytes[..8], b"SCTIDX01");
        assert_eq!(decode(&bytes).unwrap(), store);
    }

    #[test]
    fn header_failures() {
        assert!(matches!(decode(&[]), Err(IndexError::TruncatedFile)));
        assert!(matches!(decode(b"SCTI"), Err(IndexError::TruncatedFile)));
        assert!(matches!(decode(b"NOPE"), Err(IndexError::BadMagic)));

        let bytes = encode(&minimal());
        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(matches!(
            decode(&v2),
            Err(IndexError::VersionMismatch { found: 2, expected: 1 })
        ));
        assert!(matches!(decode(&bytes[..bytes.len() - 1]), Err(IndexError::TruncatedFile)));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(decode(&longer), Err(IndexError::Malformed(_))));
    }

    #[test]
    fn every_single_byte_flip_is_rejected() {
        let bytes = encode(&minimal());
        for i in 0..bytes.len() {
            let mut m = bytes.clone();
            m[i] ^= 0x01;
            assert!(decode(&m).is_err(), "flip at byte {i} accepted");
        }
    }
}
