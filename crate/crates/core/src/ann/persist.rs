//! `RPF1` index files.
//!
//! Layout (little-endian): magic, u32 version, u32 dim, u32 n_trees,
//! u32 leaf_capacity, u64 item count, u64 build seed, the id table (a u16
//! length and the UTF-8 bytes per item), the item vector block, then per tree a u32 node
//! count followed by its nodes. A node is a tag byte and either
//! `dim` f32 normal, an f32 offset and two u32 children (tag 0), or a u32 length
//! and that many u32 item indices (tag 1). A CRC32 of every preceding byte
//! closes the file.

use std::io::Write;
use std::path::Path;

use super::forest::{ForestParams, Node, RpForest, RpTree};
use crate::error::{Error, Result};
use crate::io::{atomic_write, write_f32s, ByteReader};

pub const INDEX_MAGIC: [u8; 4] = *b"RPF1";
pub const INDEX_VERSION: u32 = 1;

const TAG_SPLIT: u8 = 0;
const TAG_LEAF: u8 = 1;

impl RpForest {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_body(&mut out).expect("writing to a Vec cannot fail");
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    fn write_body(&self, out: &mut Vec<u8>) -> std::io::Result<()> {
        out.write_all(&INDEX_MAGIC)?;
        out.write_all(&INDEX_VERSION.to_le_bytes())?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&(self.trees.len() as u32).to_le_bytes())?;
        out.write_all(&(self.params.leaf_capacity as u32).to_le_bytes())?;
        out.write_all(&(self.ids.len() as u64).to_le_bytes())?;
        out.write_all(&self.params.seed.to_le_bytes())?;
        for id in &self.ids {
            out.write_all(&(id.len() as u16).to_le_bytes())?;
            out.write_all(id.as_bytes())?;
        }
        write_f32s(out, &self.data)?;
        for tree in &self.trees {
            out.write_all(&(tree.nodes.len() as u32).to_le_bytes())?;
            for node in &tree.nodes {
                match node {
                    Node::Split { normal, offset, left, right } => {
                        out.write_all(&[TAG_SPLIT])?;
                        write_f32s(out, normal)?;
                        out.write_all(&offset.to_le_bytes())?;
                        out.write_all(&left.to_le_bytes())?;
                        out.write_all(&right.to_le_bytes())?;
                    }
                    Node::Leaf(items) => {
                        out.write_all(&[TAG_LEAF])?;
                        out.write_all(&(items.len() as u32).to_le_bytes())?;
                        for it in items {
                            out.write_all(&it.to_le_bytes())?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// CRC32 stored at the end of the serialized index.
    pub fn checksum(&self) -> u32 {
        let mut body = Vec::new();
        self.write_body(&mut body).expect("writing to a Vec cannot fail");
        crc32fast::hash(&body)
    }

    /// Parses an index. Structural truncation is reported before the
    /// checksum is verified, so a short file yields [`Error::Truncated`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let magic = r.array::<4>("magic")?;
        if magic != INDEX_MAGIC {
            return Err(Error::BadMagic { expected: INDEX_MAGIC, found: magic });
        }
        let version = r.u32("version")?;
        if version != INDEX_VERSION {
            return Err(Error::Version { found: version, supported: INDEX_VERSION });
        }
        let dim = r.u32("dim")? as usize;
        let n_trees = r.u32("n_trees")? as usize;
        let leaf_capacity = r.u32("leaf_capacity")? as usize;
        let count = r.u64("item count")?;
        let seed = r.u64("seed")?;
        let count = r.check_count(count, 2 + 4 * dim as u64, "id table")?;

        let mut ids = Vec::with_capacity(count);
        for _ in 0..count {
            let len = r.u16("id length")? as usize;
            ids.push(r.utf8(len, "id")?);
        }
        let data = r.f32_vec(count * dim, "vector block")?;

        let mut trees = Vec::with_capacity(n_trees.min(r.remaining()));
        for _ in 0..n_trees {
            let node_count = r.u32("node count")? as u64;
            let node_count = r.check_count(node_count, 5, "tree nodes")?;
            let mut nodes = Vec::with_capacity(node_count);
            for i in 0..node_count {
                let at = r.offset();
                let node = match r.u8("node tag")? {
                    TAG_SPLIT => {
                        let normal = r.f32_vec(dim, "split normal")?;
                        let offset = r.f32("split offset")?;
                        let left = r.u32("left child")?;
                        let right = r.u32("right child")?;
                        let valid = |c: u32| (c as usize) > i && (c as usize) < node_count;
                        if !valid(left) || !valid(right) || left == right {
                            return Err(Error::Format { offset: at, message: "invalid child index".into() });
                        }
                        Node::Split { normal, offset, left, right }
                    }
                    TAG_LEAF => {
                        let len = r.u32("leaf length")? as u64;
                        let len = r.check_count(len, 4, "leaf items")?;
                        let mut items = Vec::with_capacity(len);
                        for _ in 0..len {
                            let it = r.u32("leaf item")?;
                            if it as usize >= count {
                                return Err(Error::Format {
                                    offset: at,
                                    message: format!("leaf item {it} out of range"),
                                });
                            }
                            items.push(it);
                        }
                        Node::Leaf(items)
                    }
                    tag => return Err(Error::Format { offset: at, message: format!("unknown node tag {tag}") }),
                };
                nodes.push(node);
            }
            if nodes.is_empty() {
                return Err(Error::Format { offset: r.offset(), message: "empty tree".into() });
            }
            trees.push(RpTree { nodes });
        }

        let body_len = r.offset() as usize;
        let stored = r.u32("checksum")?;
        if r.remaining() != 0 {
            return Err(Error::Format { offset: r.offset(), message: format!("{} trailing bytes", r.remaining()) });
        }
        let computed = crc32fast::hash(&bytes[..body_len]);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }

        let mut positions = std::collections::HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if positions.insert(id.clone(), i as u32).is_some() {
                return Err(Error::Format { offset: 0, message: format!("duplicate id {id:?}") });
            }
        }
        Ok(RpForest {
            dim,
            params: ForestParams { n_trees, leaf_capacity, seed, dim: Some(dim) },
            ids,
            positions,
            data,
            trees,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes();
        atomic_write(path, |w| Ok(w.write_all(&bytes)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
