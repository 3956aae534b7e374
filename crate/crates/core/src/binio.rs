//! Little-endian primitives shared by the embedding and model file formats.

use std::io::{self, Read, Write};

pub(crate) fn read_exact_or_eof<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<bool> {
    match r.read_exact(buf) {
        Ok(()) => Ok(true),
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Ok(false),
        Err(e) => Err(e),
    }
}

/// Reader that reports `None` on a short read instead of an error, so
/// callers can attach their own truncation context.
pub(crate) struct LeReader<R> {
    inner: R,
}

macro_rules! read_le {
    ($name:ident, $t:ty) => {
        pub(crate) fn $name(&mut self) -> io::Result<Option<$t>> {
            let mut b = [0u8; std::mem::size_of::<$t>()];
            Ok(read_exact_or_eof(&mut self.inner, &mut b)?.then(|| <$t>::from_le_bytes(b)))
        }
    };
}

impl<R: Read> LeReader<R> {
    pub(crate) fn new(inner: R) -> Self {
        Self { inner }
    }

    read_le!(u16, u16);
    read_le!(u32, u32);
    read_le!(u64, u64);
    read_le!(f64, f64);

    pub(crate) fn bytes(&mut self, n: usize) -> io::Result<Option<Vec<u8>>> {
        let mut buf = vec![0u8; n];
        Ok(read_exact_or_eof(&mut self.inner, &mut buf)?.then_some(buf))
    }

    /// Like [`Self::bytes`] but grows the buffer as data arrives, so a
    /// corrupted length field cannot force a huge allocation.
    pub(crate) fn bytes_bounded(&mut self, n: u64) -> io::Result<Option<Vec<u8>>> {
        let mut out = Vec::new();
        let copied = (&mut self.inner).take(n).read_to_end(&mut out)?;
        Ok((copied as u64 == n).then_some(out))
    }

    /// Appends `n` f32 values to `out`.
    pub(crate) fn f32s(&mut self, n: usize, out: &mut Vec<f32>) -> io::Result<bool> {
        let mut buf = vec![0u8; n * 4];
        if !read_exact_or_eof(&mut self.inner, &mut buf)? {
            return Ok(false);
        }
        out.extend(
            buf.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
        );
        Ok(true)
    }

    /// Discards `n` bytes.
    pub(crate) fn skip(&mut self, n: u64) -> io::Result<bool> {
        let copied = io::copy(&mut (&mut self.inner).take(n), &mut io::sink())?;
        Ok(copied == n)
    }

    /// True when no bytes remain.
    pub(crate) fn at_eof(&mut self) -> io::Result<bool> {
        let mut b = [0u8; 1];
        Ok(!read_exact_or_eof(&mut self.inner, &mut b)?)
    }
}

pub(crate) fn write_f32s<W: Write>(w: &mut W, values: &[f32]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}
