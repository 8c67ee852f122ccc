//! Binary named-tensor container used for checkpoints and morphable models.
//!
//! Layout: magic `SPTS`, u32 LE format version, u64 LE manifest length +
//! manifest text (`key=value` lines), u64 LE tensor count, then per tensor:
//! u64 LE name length + name bytes, u64 LE rank, rank × u64 LE dims, and
//! `product(dims)` little-endian f32 values. Saving is a pure function of
//! the container, so save → load → save is byte-identical.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const CONTAINER_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"SPTS";

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let count: usize = dims.iter().product();
        if count != data.len() {
            return Err(Error::shape(
                "named_tensor",
                format!("dims {:?} need {} values, got {}", dims, count, data.len()),
            ));
        }
        Ok(NamedTensor {
            name: name.into(),
            dims,
            data,
        })
    }
}

/// Ordered manifest plus ordered tensor records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Container {
    manifest: Vec<(String, String)>,
    tensors: Vec<NamedTensor>,
}

impl Container {
    pub fn new() -> Self {
        Container::default()
    }

    /// Set or replace a manifest entry, preserving first-insertion order.
    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        let value = value.to_string();
        if key.is_empty() || key.contains('=') || key.contains('\n') {
            return Err(Error::invalid("manifest", format!("bad key '{}'", key)));
        }
        if value.contains('\n') {
            return Err(Error::invalid("manifest", format!("value for '{}' contains newline", key)));
        }
        match self.manifest.iter_mut().find(|(k, _)| k == key) {
            Some((_, v)) => *v = value,
            None => self.manifest.push((key.to_string(), value)),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.manifest
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Manifest value parsed to a type, with a uniform error message.
    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::CorruptManifest(format!("missing key '{}'", key)))?;
        raw.parse()
            .map_err(|_| Error::CorruptManifest(format!("key '{}' has bad value '{}'", key, raw)))
    }

    pub fn manifest_entries(&self) -> &[(String, String)] {
        &self.manifest
    }

    pub fn push_tensor(&mut self, tensor: NamedTensor) {
        self.tensors.push(tensor);
    }

    pub fn tensor(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn tensors(&self) -> &[NamedTensor] {
        &self.tensors
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut manifest_text = String::new();
        for (k, v) in &self.manifest {
            manifest_text.push_str(k);
            manifest_text.push('=');
            manifest_text.push_str(v);
            manifest_text.push('\n');
        }
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        out.extend_from_slice(&(manifest_text.len() as u64).to_le_bytes());
        out.extend_from_slice(manifest_text.as_bytes());
        out.extend_from_slice(&(self.tensors.len() as u64).to_le_bytes());
        for t in &self.tensors {
            out.extend_from_slice(&(t.name.len() as u64).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.extend_from_slice(&(t.dims.len() as u64).to_le_bytes());
            for &d in &t.dims {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = u32::from_le_bytes(r.take(4, "version")?.try_into().unwrap());
        if version != CONTAINER_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                expected: CONTAINER_VERSION,
            });
        }
        let manifest_len = r.u64("manifest length")? as usize;
        let manifest_bytes = r
            .take(manifest_len, "manifest")
            .map_err(|_| Error::CorruptManifest("manifest shorter than declared".into()))?;
        let manifest_text = std::str::from_utf8(manifest_bytes)
            .map_err(|_| Error::CorruptManifest("manifest is not UTF-8".into()))?;
        let mut manifest = Vec::new();
        for line in manifest_text.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::CorruptManifest(format!("line without '=': '{}'", line)))?;
            manifest.push((k.to_string(), v.to_string()));
        }

        let count = r.u64("tensor count")? as usize;
        let mut tensors = Vec::with_capacity(count.min(4096));
        for i in 0..count {
            let ctx = |what: &str| format!("tensor {}: {}", i, what);
            let name_len = r.u64(&ctx("name length"))? as usize;
            let name = std::str::from_utf8(r.take(name_len, &ctx("name"))?)
                .map_err(|_| Error::TruncatedTensors(ctx("name is not UTF-8")))?
                .to_string();
            let rank = r.u64(&ctx("rank"))? as usize;
            if rank > 8 {
                return Err(Error::TruncatedTensors(ctx(&format!("implausible rank {}", rank))));
            }
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(r.u64(&ctx("dim"))? as usize);
            }
            let n = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .and_then(|n| n.checked_mul(4))
                .ok_or_else(|| Error::TruncatedTensors(ctx("dims overflow")))?;
            let raw = r.take(n, &ctx("data"))?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(NamedTensor { name, dims, data });
        }
        if r.pos != bytes.len() {
            return Err(Error::TruncatedTensors(format!(
                "{} trailing bytes after last tensor",
                bytes.len() - r.pos
            )));
        }
        Ok(Container { manifest, tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if n > self.bytes.len() - self.pos {
            return Err(Error::TruncatedTensors(format!(
                "unexpected end of file reading {}",
                what
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Container {
        let mut c = Container::new();
        c.set("kind", "checkpoint").unwrap();
        c.set("m", 16).unwrap();
        c.set("seed", 42).unwrap();
        c.push_tensor(NamedTensor::new("w1", vec![2, 3], vec![1.0, -2.5, 0.0, 4.25, 1e-30, 9.0]).unwrap());
        c.push_tensor(NamedTensor::new("b1", vec![3], vec![0.5, 0.25, -0.125]).unwrap());
        c
    }

    #[test]
    fn roundtrip_bitwise() {
        let c = sample();
        let bytes = c.to_bytes();
        let back = Container::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.spts");
        let p2 = dir.path().join("b.spts");
        let c = sample();
        c.save(&p1).unwrap();
        let loaded = Container::load(&p1).unwrap();
        loaded.save(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn distinct_errors_for_each_corruption() {
        let good = sample().to_bytes();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(Container::from_bytes(&bad_magic), Err(Error::BadMagic)));

        let mut bad_version = good.clone();
        bad_version[4] = 99;
        assert!(matches!(
            Container::from_bytes(&bad_version),
            Err(Error::UnsupportedVersion { found: 99, expected: 1 })
        ));

        // manifest length pointing past the end
        let mut bad_manifest = good.clone();
        bad_manifest[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(
            Container::from_bytes(&bad_manifest),
            Err(Error::CorruptManifest(_))
        ));

        let mut truncated = good.clone();
        truncated.truncate(good.len() - 5);
        assert!(matches!(
            Container::from_bytes(&truncated),
            Err(Error::TruncatedTensors(_))
        ));

        let mut trailing = good.clone();
        trailing.push(0);
        assert!(matches!(
            Container::from_bytes(&trailing),
            Err(Error::TruncatedTensors(_))
        ));
    }

    #[test]
    fn manifest_access_and_validation() {
        let mut c = sample();
        assert_eq!(c.get("m"), Some("16"));
        assert_eq!(c.get_parsed::<usize>("m").unwrap(), 16);
        assert!(c.get_parsed::<usize>("kind").is_err());
        assert!(c.get_parsed::<usize>("absent").is_err());
        c.set("m", 99).unwrap();
        assert_eq!(c.get_parsed::<usize>("m").unwrap(), 99);
        assert!(c.set("bad=key", 0).is_err());
        assert!(c.set("key", "two\nlines").is_err());
        assert!(c.tensor("w1").is_some());
        assert!(c.tensor("nope").is_none());
    }

    #[test]
    fn tensor_shape_validated() {
        assert!(NamedTensor::new("t", vec![2, 2], vec![0.0; 3]).is_err());
    }
}
