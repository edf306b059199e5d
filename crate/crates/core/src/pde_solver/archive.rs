//! Binary snapshot files and the manifest that lists them.
//!
//! Layout: b"KPPW", u32 version, f64 dz, f64 z_lo, f64 t, u64 n, then n f64
//! values of w, all little-endian.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{KppError, Result};
use crate::model::TiltedField;

const MAGIC: &[u8; 4] = b"KPPW";
const VERSION: u32 = 1;

/// Immutable copy of the field at a scheduled time, with its front position.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub field: Arc<TiltedField>,
    pub mu: f64,
}

pub fn write_snapshot(path: &Path, field: &TiltedField) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    f.write_all(MAGIC)?;
    f.write_all(&VERSION.to_le_bytes())?;
    f.write_all(&field.dz.to_le_bytes())?;
    f.write_all(&field.z_lo.to_le_bytes())?;
    f.write_all(&field.t.to_le_bytes())?;
    f.write_all(&(field.w.len() as u64).to_le_bytes())?;
    for v in &field.w {
        f.write_all(&v.to_le_bytes())?;
    }
    f.flush()?;
    Ok(())
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_snapshot(path: &Path) -> Result<TiltedField> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(KppError::Archive(format!("{}: bad magic", path.display())));
    }
    let mut vb = [0u8; 4];
    r.read_exact(&mut vb)?;
    let version = u32::from_le_bytes(vb);
    if version != VERSION {
        return Err(KppError::Archive(format!("{}: unsupported version {version}", path.display())));
    }
    let dz = read_f64(&mut r)?;
    let z_lo = read_f64(&mut r)?;
    let t = read_f64(&mut r)?;
    let mut nb = [0u8; 8];
    r.read_exact(&mut nb)?;
    let n = u64::from_le_bytes(nb) as usize;
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    let w = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(TiltedField {
        t,
        z_lo,
        dz,
        w,
        z_hi_target: f64::NAN,
    })
}

/// One manifest line: snapshot time, front position, file name.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub t: f64,
    pub mu: f64,
    pub file: String,
}

pub fn write_manifest(dir: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(dir.join("manifest.txt"))?);
    writeln!(f, "# t mu file")?;
    for e in entries {
        writeln!(f, "{:.17e} {:.17e} {}", e.t, e.mu, e.file)?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let f = BufReader::new(fs::File::open(dir.join("manifest.txt"))?);
    let mut out = Vec::new();
    for line in f.lines() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(KppError::Archive(format!("bad manifest line: {line}")));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| KppError::Archive(format!("bad number {s}: {e}")))
        };
        out.push(ManifestEntry {
            t: parse(parts[0])?,
            mu: parse(parts[1])?,
            file: parts[2].to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let field = TiltedField {
            t: 1.25,
            z_lo: -40.0,
            dz: 0.02,
            w: vec![0.1, 2.5, 1e-300, 0.0],
            z_hi_target: 0.0,
        };
        let p = dir.path().join("s.bin");
        write_snapshot(&p, &field).unwrap();
        let back = read_snapshot(&p).unwrap();
        assert_eq!(back.w, field.w);
        assert_eq!(back.t, field.t);
        assert_eq!(back.dz, field.dz);
        let entries = vec![ManifestEntry {
            t: 1.25,
            mu: 0.1 + 0.2,
            file: "s.bin".into(),
        }];
        write_manifest(dir.path(), &entries).unwrap();
        assert_eq!(read_manifest(dir.path()).unwrap(), entries);
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        std::fs::write(&p, b"NOPE0000").unwrap();
        assert!(read_snapshot(&p).is_err());
    }
}
