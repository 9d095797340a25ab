use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{atomic_write, write_f32s, ByteReader};

pub const STORE_MAGIC: [u8; 4] = *b"PSV1";
pub const STORE_VERSION: u32 = 1;

/// Whether a vector was L2-normalized at creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum NormFlag {
    Raw = 0,
    Unit = 1,
}

impl NormFlag {
    fn from_byte(b: u8, offset: u64) -> Result<Self> {
        match b {
            0 => Ok(NormFlag::Raw),
            1 => Ok(NormFlag::Unit),
            other => Err(Error::Format { offset, message: format!("unknown norm flag {other}") }),
        }
    }
}

/// The signature vector of one patent.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentVector {
    pub id: String,
    pub values: Vec<f32>,
    pub norm: NormFlag,
}

impl DocumentVector {
    /// The all-zero raw vector stored for documents without usable terms.
    /// It is similar to nothing.
    pub fn zero_sentinel(id: impl Into<String>, dim: usize) -> Self {
        DocumentVector { id: id.into(), values: vec![0.0; dim], norm: NormFlag::Raw }
    }

    pub fn is_sentinel(&self) -> bool {
        is_zero(&self.values)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

pub(crate) fn is_zero(v: &[f32]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

/// Dense id-tagged vectors in one contiguous block.
///
/// On disk (little-endian): `PSV1`, u32 version, u32 dim, u64 count, then per
/// record a u16 id length, the UTF-8 id, a u8 norm flag and `dim` f32 values.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dim: usize,
    ids: Vec<String>,
    flags: Vec<NormFlag>,
    data: Vec<f32>,
    positions: HashMap<String, usize>,
}

impl VectorStore {
    pub fn new(dim: usize) -> Self {
        VectorStore { dim, ids: Vec::new(), flags: Vec::new(), data: Vec::new(), positions: HashMap::new() }
    }

    pub fn from_vectors(dim: usize, vectors: impl IntoIterator<Item = DocumentVector>) -> Result<Self> {
        let mut store = VectorStore::new(dim);
        for v in vectors {
            store.push(v)?;
        }
        Ok(store)
    }

    pub fn push(&mut self, v: DocumentVector) -> Result<()> {
        self.push_slice(v.id, v.norm, &v.values)
    }

    pub fn push_slice(&mut self, id: String, norm: NormFlag, values: &[f32]) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: values.len() });
        }
        if id.len() > u16::MAX as usize {
            return Err(Error::Config(format!("id longer than {} bytes", u16::MAX)));
        }
        if self.positions.contains_key(&id) {
            return Err(Error::Config(format!("duplicate id {id:?} in vector store")));
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::Config(format!("non-finite value {x} for {id:?}")));
        }
        self.positions.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.flags.push(norm);
        self.data.extend_from_slice(values);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn flag(&self, i: usize) -> NormFlag {
        self.flags[i]
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    pub fn is_sentinel(&self, i: usize) -> bool {
        is_zero(self.vector(i))
    }

    pub fn get(&self, i: usize) -> DocumentVector {
        DocumentVector { id: self.ids[i].clone(), values: self.vector(i).to_vec(), norm: self.flags[i] }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids.iter().map(String::as_str).zip(self.data.chunks_exact(self.dim.max(1)))
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(&STORE_MAGIC)?;
        out.write_all(&STORE_VERSION.to_le_bytes())?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        for i in 0..self.len() {
            let id = self.ids[i].as_bytes();
            out.write_all(&(id.len() as u16).to_le_bytes())?;
            out.write_all(id)?;
            out.write_all(&[self.flags[i] as u8])?;
            write_f32s(out, self.vector(i))?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(20 + self.len() * (self.dim * 4 + 16));
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let magic = r.array::<4>("magic")?;
        if magic != STORE_MAGIC {
            return Err(Error::BadMagic { expected: STORE_MAGIC, found: magic });
        }
        let version = r.u32("version")?;
        if version != STORE_VERSION {
            return Err(Error::Version { found: version, supported: STORE_VERSION });
        }
        let dim = r.u32("dim")? as usize;
        let count = r.u64("count")?;
        let count = r.check_count(count, 3 + 4 * dim as u64, "records")?;
        let mut store = VectorStore::new(dim);
        for _ in 0..count {
            let at = r.offset();
            let len = r.u16("id length")? as usize;
            let id = r.utf8(len, "id")?;
            let flag_at = r.offset();
            let flag = NormFlag::from_byte(r.u8("norm flag")?, flag_at)?;
            let values = r.f32_vec(dim, "vector")?;
            store.push_slice(id, flag, &values).map_err(|e| match e {
                Error::Config(message) => Error::Format { offset: at, message },
                other => other,
            })?;
        }
        if r.remaining() != 0 {
            return Err(Error::Format { offset: r.offset(), message: format!("{} trailing bytes", r.remaining()) });
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, |w| self.write_to(w))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
