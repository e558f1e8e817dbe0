//! Binary containers.
//!
//! ADAT (one tensor), little-endian:
//!
//! ```text
//! b"ADAT" | u32 version = 1 | u32 rank | u32 extent × rank | f32 × Π extents
//! ```
//!
//! ADCK (named tensors):
//!
//! ```text
//! b"ADCK" | u32 version = 1 | (u32 name_len | name (UTF-8) | ADAT)* until end of file
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use ada_core::Tensor;

pub const ADAT_MAGIC: &[u8; 4] = b"ADAT";
pub const ADCK_MAGIC: &[u8; 4] = b"ADCK";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {found:?}, expected {expected:?}")]
    Magic { found: [u8; 4], expected: [u8; 4] },
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("{0}")]
    Invalid(String),
}

fn read_u32(r: &mut impl Read) -> Result<u32, FormatError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<(), FormatError> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(FormatError::Magic {
            found: m,
            expected: *magic,
        });
    }
    match read_u32(r)? {
        VERSION => Ok(()),
        v => Err(FormatError::Version(v)),
    }
}

pub fn write_tensor(w: &mut impl Write, t: &Tensor) -> io::Result<()> {
    w.write_all(ADAT_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(t.rank() as u32).to_le_bytes())?;
    for &e in t.shape() {
        w.write_all(&(e as u32).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(t.len() * 4);
    for v in t.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read_tensor(r: &mut impl Read) -> Result<Tensor, FormatError> {
    read_header(r, ADAT_MAGIC)?;
    let rank = read_u32(r)? as usize;
    if rank > 8 {
        return Err(FormatError::Invalid(format!("rank {} too large", rank)));
    }
    let shape = (0..rank)
        .map(|_| read_u32(r).map(|v| v as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let n = shape
        .iter()
        .try_fold(1usize, |a, &b| a.checked_mul(b))
        .ok_or_else(|| FormatError::Invalid(format!("extents {:?} overflow", shape)))?;
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Tensor::new(shape, data).map_err(|e| FormatError::Invalid(e.to_string()))
}

/// Like `read_exact`, but a clean end of input before the first byte is `Ok(0)`.
fn read_full(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}

pub fn write_records(w: &mut impl Write, records: &[(String, Tensor)]) -> io::Result<()> {
    w.write_all(ADCK_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for (name, t) in records {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        write_tensor(w, t)?;
    }
    Ok(())
}

pub fn read_records(r: &mut impl Read) -> Result<Vec<(String, Tensor)>, FormatError> {
    read_header(r, ADCK_MAGIC)?;
    let mut out = Vec::new();
    loop {
        let mut lb = [0u8; 4];
        let got = read_full(r, &mut lb)?;
        if got == 0 {
            break;
        }
        if got < 4 {
            return Err(FormatError::Invalid("truncated record header".into()));
        }
        let len = u32::from_le_bytes(lb) as usize;
        if len > 1 << 16 {
            return Err(FormatError::Invalid(format!("record name of {} bytes", len)));
        }
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| FormatError::Invalid("record name is not UTF-8".into()))?;
        out.push((name, read_tensor(r)?));
    }
    Ok(out)
}

pub fn save_tensor(path: &Path, t: &Tensor) -> io::Result<()> {
    let mut buf = Vec::new();
    write_tensor(&mut buf, t)?;
    fs::write(path, buf)
}

pub fn load_tensor(path: &Path) -> Result<Tensor, FormatError> {
    read_tensor(&mut io::Cursor::new(fs::read(path)?))
}

pub fn save_records(path: &Path, records: &[(String, Tensor)]) -> io::Result<()> {
    let mut buf = Vec::new();
    write_records(&mut buf, records)?;
    fs::write(path, buf)
}

pub fn load_records(path: &Path) -> Result<Vec<(String, Tensor)>, FormatError> {
    read_records(&mut io::Cursor::new(fs::read(path)?))
}

/// A u64 as four 16-bit chunks, each exact in f32.
pub fn u64_tensor(v: u64) -> Tensor {
    let d = (0..4).map(|i| ((v >> (16 * i)) & 0xffff) as f32).collect();
    Tensor::new(vec![4], d).expect("four chunks")
}

pub fn tensor_u64(t: &Tensor) -> Result<u64, FormatError> {
    if t.shape() != [4] {
        return Err(FormatError::Invalid(format!("u64 record has shape {:?}", t.shape())));
    }
    let mut v = 0u64;
    for (i, &c) in t.data().iter().enumerate() {
        if !(0.0..=65535.0).contains(&c) || c.fract() != 0.0 {
            return Err(FormatError::Invalid(format!("u64 chunk {} out of range", c)));
        }
        v |= (c as u64) << (16 * i);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_layout() {
        let t = Tensor::new(vec![2], vec![1.0, -2.5]).unwrap();
        let mut b = Vec::new();
        write_tensor(&mut b, &t).unwrap();
        assert_eq!(&b[..4], b"ADAT");
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &1u32.to_le_bytes());
        assert_eq!(&b[12..16], &2u32.to_le_bytes());
        assert_eq!(&b[16..20], &1.0f32.to_le_bytes());
        assert_eq!(b.len(), 24);
        assert_eq!(read_tensor(&mut b.as_slice()).unwrap(), t);
    }

    #[test]
    fn rejects_wrong_magic_and_version() {
        let mut b = Vec::new();
        write_tensor(&mut b, &Tensor::scalar(1.0)).unwrap();
        assert!(matches!(read_records(&mut b.as_slice()), Err(FormatError::Magic { .. })));
        b[4] = 2;
        assert!(matches!(read_tensor(&mut b.as_slice()), Err(FormatError::Version(2))));
    }

    #[test]
    fn truncated_is_error() {
        let mut b = Vec::new();
        write_tensor(&mut b, &Tensor::zeros(&[3, 3])).unwrap();
        b.truncate(b.len() - 1);
        assert!(read_tensor(&mut b.as_slice()).is_err());
    }

    #[test]
    fn u64_chunks() {
        for v in [0, 1, u64::MAX, 0xdead_beef_0123_4567] {
            assert_eq!(tensor_u64(&u64_tensor(v)).unwrap(), v);
        }
    }
}
