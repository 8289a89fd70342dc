//! Little-endian binary reading and writing for archives and checkpoints.

use crate::error::Error;

/// Bounds-checked reader; every failure is a `Corrupted` error naming the
/// file kind.
pub struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    pub fn new(bytes: &'a [u8], what: &'static str) -> Self {
        Self { bytes, pos: 0, what }
    }

    pub fn corrupted(&self, message: impl Into<String>) -> Error {
        Error::Corrupted {
            what: self.what,
            message: format!("{} (at byte {})", message.into(), self.pos),
        }
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn is_done(&self) -> bool {
        self.pos == self.bytes.len()
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], Error> {
        if n > self.remaining() {
            return Err(self.corrupted(format!("needs {n} bytes, {} left", self.remaining())));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u32(&mut self) -> Result<u32, Error> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64, Error> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// A `u64` count that must fit in memory; anything larger than the
    /// remaining byte count cannot be valid.
    pub fn len_u64(&mut self) -> Result<usize, Error> {
        let v = self.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&n| n <= self.remaining())
            .ok_or_else(|| self.corrupted(format!("length {v} exceeds file size")))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>, Error> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| self.corrupted("size overflow"))?;
        let raw = self.take(bytes)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub fn string(&mut self) -> Result<String, Error> {
        let n = self.u32()? as usize;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| self.corrupted("invalid UTF-8"))
    }
}

pub fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn put_string(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut out = Vec::new();
        put_u32(&mut out, 7);
        put_u64(&mut out, 2);
        put_f64s(&mut out, &[1.5, -0.0]);
        put_string(&mut out, "héllo");
        let mut cur = Cursor::new(&out, "test");
        assert_eq!(cur.u32().unwrap(), 7);
        let n = cur.len_u64().unwrap();
        let vals = cur.f64s(n).unwrap();
        assert_eq!(vals[0], 1.5);
        assert!(vals[1].is_sign_negative());
        assert_eq!(cur.string().unwrap(), "héllo");
        assert!(cur.is_done());
    }

    #[test]
    fn short_reads_are_errors() {
        let mut cur = Cursor::new(&[1, 2, 3], "test");
        assert!(matches!(cur.u32(), Err(Error::Corrupted { .. })));
        let mut out = Vec::new();
        put_u64(&mut out, u64::MAX);
        let mut cur = Cursor::new(&out, "test");
        assert!(cur.len_u64().is_err());
        let mut cur = Cursor::new(&[0u8; 16], "test");
        assert!(cur.f64s(usize::MAX).is_err());
    }
}
