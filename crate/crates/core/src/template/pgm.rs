//! Binary PGM (P5) reading and writing.

use super::GrayImage;
use std::io::{self, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("unsupported PGM variant {0:?}; only binary P5 is read")]
    UnsupportedFormat(String),
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("truncated PGM payload: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("PGM maxval {0} exceeds 255")]
    MaxvalTooLarge(u32),
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> &[u8] {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
            self.pos += 1;
        }
        &self.bytes[start..self.pos]
    }

    fn number(&mut self, what: &str) -> Result<u32, PgmError> {
        let tok = self.token();
        std::str::from_utf8(tok)
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| PgmError::MalformedHeader(format!("bad {what} {:?}", String::from_utf8_lossy(tok))))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    let mut h = Header { bytes, pos: 0 };
    let magic = h.token().to_vec();
    match magic.as_slice() {
        b"P5" => {}
        b"P1" | b"P2" | b"P3" | b"P4" | b"P6" => {
            return Err(PgmError::UnsupportedFormat(String::from_utf8_lossy(&magic).into_owned()))
        }
        _ => return Err(PgmError::MalformedHeader("missing P5 magic".into())),
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader(format!("empty image {width}x{height}")));
    }
    if maxval == 0 {
        return Err(PgmError::MalformedHeader("maxval 0".into()));
    }
    if maxval > 255 {
        return Err(PgmError::MaxvalTooLarge(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(PgmError::MalformedHeader("no whitespace after maxval".into())),
    }
    let expected = width as usize * height as usize;
    let raster = &bytes[h.pos..];
    if raster.len() < expected {
        return Err(PgmError::Truncated { expected, got: raster.len() });
    }
    Ok(GrayImage::new(width, height, raster[..expected].to_vec()).expect("raster length checked"))
}

pub fn encode_pgm<W: Write>(img: &GrayImage, mut out: W) -> io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    out.write_all(img.pixels())
}

pub fn load_pgm(path: &Path) -> Result<GrayImage, PgmError> {
    decode_pgm(&std::fs::read(path)?)
}

pub fn save_pgm(img: &GrayImage, path: &Path) -> Result<(), PgmError> {
    let mut buf = Vec::with_capacity(img.pixels().len() + 32);
    encode_pgm(img, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let img = decode_pgm(b"P5\n2 2\n255\n\x00\x40\x80\xff").unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0, 64, 128, 255]);
    }

    #[test]
    fn comments_and_whitespace() {
        let img = decode_pgm(b"P5 # magic\n# size next\n 3\t1 # w h\n200\r\x01\x02\x03").unwrap();
        assert_eq!(img.pixels(), &[1, 2, 3]);
    }

    #[test]
    fn errors_are_distinct() {
        assert!(matches!(decode_pgm(b"P2\n1 1\n255\n0"), Err(PgmError::UnsupportedFormat(m)) if m == "P2"));
        assert!(matches!(decode_pgm(b"GIF89a"), Err(PgmError::MalformedHeader(_))));
        assert!(matches!(decode_pgm(b"P5\nx 1\n255\n0"), Err(PgmError::MalformedHeader(_))));
        assert!(matches!(decode_pgm(b"P5\n2 2\n65535\n"), Err(PgmError::MaxvalTooLarge(65535))));
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n255\n\x01"),
            Err(PgmError::Truncated { expected: 4, got: 1 })
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let img = GrayImage::new(3, 2, vec![0, 1, 2, 253, 254, 255]).unwrap();
        save_pgm(&img, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(load_pgm(&path).unwrap(), img);
        let path2 = dir.path().join("b.pgm");
        save_pgm(&load_pgm(&path).unwrap(), &path2).unwrap();
        assert_eq!(std::fs::read(&path2).unwrap(), bytes);
    }
}
