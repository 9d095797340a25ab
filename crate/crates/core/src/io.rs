//! Little-endian binary helpers and atomic file output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Bounds-checked cursor over a byte slice. Every failed read reports the
/// byte offset where the data ran out.
pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn bytes(&mut self, n: usize, context: &'static str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated { offset: self.buf.len() as u64, context });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self, context: &'static str) -> Result<[u8; N]> {
        let b = self.bytes(N, context)?;
        Ok(b.try_into().expect("length checked"))
    }

    pub fn u8(&mut self, context: &'static str) -> Result<u8> {
        Ok(self.array::<1>(context)?[0])
    }

    pub fn u16(&mut self, context: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array(context)?))
    }

    pub fn u32(&mut self, context: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(context)?))
    }

    pub fn u64(&mut self, context: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array(context)?))
    }

    pub fn f32(&mut self, context: &'static str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array(context)?))
    }

    pub fn f32_vec(&mut self, n: usize, context: &'static str) -> Result<Vec<f32>> {
        let raw =
            self.bytes(n.checked_mul(4).ok_or(Error::Truncated { offset: self.pos as u64, context })?, context)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn utf8(&mut self, n: usize, context: &'static str) -> Result<String> {
        let at = self.offset();
        let b = self.bytes(n, context)?;
        String::from_utf8(b.to_vec())
            .map_err(|e| Error::Format { offset: at, message: format!("invalid UTF-8 in {context}: {e}") })
    }

    /// Rejects an oversized count before anything is allocated for it.
    pub fn check_count(&self, count: u64, min_bytes_each: u64, context: &'static str) -> Result<usize> {
        if count.saturating_mul(min_bytes_each) > self.remaining() as u64 {
            return Err(Error::Truncated { offset: self.buf.len() as u64, context });
        }
        Ok(count as usize)
    }
}

pub fn write_f32s<W: Write>(out: &mut W, values: &[f32]) -> std::io::Result<()> {
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Writes a file through a temporary sibling that is renamed into place only
/// after `fill` succeeds, so readers never observe a partial artifact.
pub fn atomic_write<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::Builder::new().prefix(".patsig-").suffix(".partial").tempfile_in(dir)?;
    // temp files are created owner-only; artifacts get ordinary permissions
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    let mut writer = BufWriter::new(tmp.reopen()?);
    fill(&mut writer)?;
    writer.flush()?;
    writer.get_ref().sync_all()?;
    drop(writer);
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn file_crc32(path: &Path) -> Result<u32> {
    Ok(crc32fast::hash(&std::fs::read(path)?))
}
