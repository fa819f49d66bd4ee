//! Little-endian binary envelope shared by the on-disk index formats.
//!
//! Every file starts with the magic `FFWD`, a `u32` format version and a
//! `u8` section tag identifying the payload.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"FFWD";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum SectionTag {
    Forward = 1,
    Sparse = 2,
}

impl SectionTag {
    fn from_u8(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(SectionTag::Forward),
            2 => Some(SectionTag::Sparse),
            _ => None,
        }
    }
}

pub(crate) fn write_header<W: Write>(w: &mut W, tag: SectionTag) -> io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[tag as u8])
}

pub(crate) fn read_header<R: Read>(r: &mut R, expected: SectionTag) -> Result<()> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic)?;
    if magic != MAGIC {
        return Err(Error::format("bad magic bytes"));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::format(format!("unsupported format version {version}")));
    }
    let tag = read_u8(r)?;
    match SectionTag::from_u8(tag) {
        Some(t) if t == expected => Ok(()),
        Some(t) => Err(Error::format(format!(
            "section tag {t:?} where {expected:?} was expected"
        ))),
        None => Err(Error::format(format!("unknown section tag {tag}"))),
    }
}

pub(crate) const HEADER_LEN: u64 = 4 + 4 + 1;

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::format("truncated file"),
        _ => Error::Io(e),
    })
}

pub(crate) fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact(r, &mut b)?;
    Ok(b[0])
}

macro_rules! read_le {
    ($name:ident, $ty:ty) => {
        pub(crate) fn $name<R: Read>(r: &mut R) -> Result<$ty> {
            let mut b = [0u8; std::mem::size_of::<$ty>()];
            read_exact(r, &mut b)?;
            Ok(<$ty>::from_le_bytes(b))
        }
    };
}

read_le!(read_u16, u16);
read_le!(read_u32, u32);
read_le!(read_u64, u64);
read_le!(read_f64, f64);

pub(crate) fn read_f32s<R: Read>(r: &mut R, out: &mut Vec<f32>, n: usize) -> Result<()> {
    let mut buf = vec![0u8; n * 4];
    read_exact(r, &mut buf)?;
    out.extend(
        buf.chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
    );
    Ok(())
}

/// Reads a `u16`-length-prefixed UTF-8 string.
pub(crate) fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = read_u16(r)? as usize;
    let mut buf = vec![0u8; len];
    read_exact(r, &mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::format("identifier is not valid UTF-8"))
}

pub(crate) fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    let len =
        u16::try_from(s.len()).map_err(|_| Error::format(format!("identifier longer than {} bytes", u16::MAX)))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

/// Counts bytes written through it, for offset bookkeeping.
pub(crate) struct CountingWriter<W> {
    inner: W,
    pub(crate) written: u64,
}

impl<W: Write> CountingWriter<W> {
    pub(crate) fn new(inner: W) -> Self {
        Self { inner, written: 0 }
    }

    pub(crate) fn into_inner(self) -> W {
        self.inner
    }
}

impl<W: Write> Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}
