//! 8-bit grayscale images and the on-disk formats: binary PGM (P5), raw pixel
//! dumps, and the ciphertext container.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// An `M x N` matrix of bytes, stored row-major. Indices are 0-based in code;
/// the cipher's 1-based conventions are applied where formulas need them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    m: usize,
    n: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(m: usize, n: usize, pixels: Vec<u8>) -> Result<Self> {
        if m < 2 || n < 2 {
            return Err(Error::BadDimensions { m, n, reason: "each dimension must be at least 2" });
        }
        if (m * n) % 2 != 0 {
            return Err(Error::BadDimensions { m, n, reason: "pixel count must be even" });
        }
        if pixels.len() != m * n {
            return Err(Error::BadDimensions { m, n, reason: "pixel buffer length mismatch" });
        }
        Ok(Image { m, n, pixels })
    }

    pub fn filled(m: usize, n: usize, value: u8) -> Result<Self> {
        Image::new(m, n, vec![value; m * n])
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.pixels[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u8) {
        self.pixels[i * self.n + j] = v;
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn same_dims(&self, other: &Image) -> Result<()> {
        if self.m != other.m || self.n != other.n {
            return Err(Error::DimensionMismatch(self.m, self.n, other.m, other.n));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// PGM (P5, maxval 255)
// ---------------------------------------------------------------------------

pub fn write_pgm<W: Write>(w: &mut W, img: &Image) -> Result<()> {
    write!(w, "P5\n{} {}\n255\n", img.cols(), img.rows())?;
    w.write_all(img.pixels())?;
    Ok(())
}

pub fn read_pgm<R: Read>(r: &mut R) -> Result<Image> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let bad = |detail: &str| Error::Malformed { what: "PGM", detail: detail.to_string() };
    if !data.starts_with(b"P5") {
        return Err(bad("missing P5 magic"));
    }
    // header tokens: width, height, maxval; comments start with '#'
    let mut pos = 2;
    let mut tokens = Vec::new();
    while tokens.len() < 3 && pos < data.len() {
        match data[pos] {
            b'#' => {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => pos += 1,
            _ => {
                let start = pos;
                while pos < data.len() && !data[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                tokens.push(std::str::from_utf8(&data[start..pos]).map_err(|_| bad("non-ascii header"))?.to_string());
            }
        }
    }
    if tokens.len() < 3 {
        return Err(bad("truncated header"));
    }
    let w: usize = tokens[0].parse().map_err(|_| bad("bad width"))?;
    let h: usize = tokens[1].parse().map_err(|_| bad("bad height"))?;
    let maxval: usize = tokens[2].parse().map_err(|_| bad("bad maxval"))?;
    if maxval != 255 {
        return Err(bad("only maxval 255 supported"));
    }
    pos += 1; // single whitespace after maxval
    if data.len() < pos + w * h {
        return Err(bad("truncated pixel data"));
    }
    Image::new(h, w, data[pos..pos + w * h].to_vec())
}

// ---------------------------------------------------------------------------
// Ciphertext container
// ---------------------------------------------------------------------------

pub const CONTAINER_MAGIC: &[u8; 4] = b"IEAI";
pub const CONTAINER_VERSION: u8 = 1;

/// Ciphertext plus everything decryption needs: dimensions, round count and
/// the plain-image entropy `s` as an exact 64-bit float bit pattern. Shipping
/// `s` is required for decryption at all, and it is itself a leak of a
/// plain-image statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub rounds: u32,
    pub s: f64,
    pub image: Image,
}

pub fn write_container<W: Write>(w: &mut W, c: &Container) -> Result<()> {
    w.write_all(CONTAINER_MAGIC)?;
    w.write_all(&[CONTAINER_VERSION])?;
    w.write_all(&(c.image.rows() as u32).to_le_bytes())?;
    w.write_all(&(c.image.cols() as u32).to_le_bytes())?;
    w.write_all(&c.rounds.to_le_bytes())?;
    w.write_all(&c.s.to_bits().to_le_bytes())?;
    w.write_all(c.image.pixels())?;
    Ok(())
}

pub fn read_container<R: Read>(r: &mut R) -> Result<Container> {
    let bad = |detail: &str| Error::Malformed { what: "container", detail: detail.to_string() };
    let mut header = [0u8; 25];
    r.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
    if &header[0..4] != CONTAINER_MAGIC {
        return Err(bad("bad magic"));
    }
    if header[4] != CONTAINER_VERSION {
        return Err(bad("unsupported version"));
    }
    let m = u32::from_le_bytes(header[5..9].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(header[9..13].try_into().unwrap()) as usize;
    let rounds = u32::from_le_bytes(header[13..17].try_into().unwrap());
    let s = f64::from_bits(u64::from_le_bytes(header[17..25].try_into().unwrap()));
    if rounds == 0 {
        return Err(bad("round count must be at least 1"));
    }
    if !s.is_finite() {
        return Err(bad("non-finite entropy field"));
    }
    let mut pixels = vec![0u8; m.checked_mul(n).ok_or_else(|| bad("dimension overflow"))?];
    r.read_exact(&mut pixels).map_err(|_| bad("truncated pixel data"))?;
    Ok(Container { rounds, s, image: Image::new(m, n, pixels)? })
}

// ---------------------------------------------------------------------------
// Key file
// ---------------------------------------------------------------------------

use crate::lasm::SecretKey;

/// Parse a key file: one line of five decimal fields `x0 y0 x0p y0p mu`,
/// optionally followed by a line of five 16-digit hex words holding the exact
/// double bit patterns. The hex form wins when both are present.
pub fn parse_key(text: &str) -> Result<SecretKey> {
    let bad = |detail: String| Error::Malformed { what: "key file", detail };
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let dec_line = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let dec: Vec<f64> = dec_line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| bad(format!("bad decimal field {t:?}: {e}"))))
        .collect::<Result<_>>()?;
    if dec.len() != 5 {
        return Err(bad(format!("expected 5 decimal fields, got {}", dec.len())));
    }
    let vals = if let Some(hex_line) = lines.next() {
        let hex: Vec<f64> = hex_line
            .split_whitespace()
            .map(|t| {
                u64::from_str_radix(t.trim_start_matches("0x"), 16)
                    .map(f64::from_bits)
                    .map_err(|e| bad(format!("bad hex field {t:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if hex.len() != 5 {
            return Err(bad(format!("expected 5 hex fields, got {}", hex.len())));
        }
        hex
    } else {
        dec
    };
    SecretKey::new(vals[0], vals[1], vals[2], vals[3], vals[4])
}

pub fn format_key(key: &SecretKey) -> String {
    let mu = key.mu.get();
    format!(
        "{} {} {} {} {}\n{:016x} {:016x} {:016x} {:016x} {:016x}\n",
        key.x0,
        key.y0,
        key.x0p,
        key.y0p,
        mu,
        key.x0.to_bits(),
        key.y0.to_bits(),
        key.x0p.to_bits(),
        key.y0p.to_bits(),
        mu.to_bits(),
    )
}
