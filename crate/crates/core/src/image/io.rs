//! Binary PPM/PGM (maxval 255) and the raw `FDGT` float tensor format.
//!
//! `FDGT` layout: the magic bytes `FDGT`, a little-endian `u32` rank, `rank`
//! little-endian `u32` dimensions, then the `f32` payload in row-major order.
//! Images are stored with dimensions `[height, width, channels]`.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{ImageF32, ImageU8};
use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"FDGT";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::Truncated {
                expected,
                found: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(TENSOR_MAGIC);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != TENSOR_MAGIC {
            return Err(Error::MalformedHeader("missing FDGT magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let rank = word(4);
        let header = 8 + 4 * rank;
        if bytes.len() < header {
            return Err(Error::Truncated {
                expected: header,
                found: bytes.len(),
            });
        }
        let dims: Vec<usize> = (0..rank).map(|i| word(8 + 4 * i)).collect();
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::MalformedHeader("tensor size overflows".into()))?;
        let expected = header + 4 * count;
        if bytes.len() != expected {
            return Err(Error::Truncated {
                expected,
                found: bytes.len(),
            });
        }
        let data = bytes[header..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { dims, data })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

impl From<&ImageF32> for Tensor {
    fn from(img: &ImageF32) -> Self {
        Tensor {
            dims: vec![img.height, img.width, img.channels],
            data: img.data.clone(),
        }
    }
}

impl TryFrom<Tensor> for ImageF32 {
    type Error = Error;

    fn try_from(t: Tensor) -> Result<Self> {
        let (h, w, c) = match t.dims[..] {
            [h, w] => (h, w, 1),
            [h, w, c] => (h, w, c),
            _ => {
                return Err(Error::MalformedHeader(format!(
                    "expected an [H, W] or [H, W, C] tensor, got {:?}",
                    t.dims
                )))
            }
        };
        ImageF32::new(w, h, c, t.data)
    }
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<ImageF32> {
    Tensor::load(path)?.try_into()
}

pub fn save_tensor(img: &ImageF32, path: impl AsRef<Path>) -> Result<()> {
    Tensor::from(img).save(path)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("bad {what}")))
    }
}

/// Decodes a binary P5 (gray) or P6 (RGB) image.
pub fn read_ppm(bytes: &[u8]) -> Result<ImageU8> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(Error::MalformedHeader("expected P5 or P6 magic".into())),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::MalformedHeader("missing raster separator".into())),
    }
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader("zero dimension".into()));
    }
    let expected = width * height * channels;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: payload.len(),
        });
    }
    ImageU8::new(width, height, channels, payload[..expected].to_vec())
}

pub fn write_ppm(img: &ImageU8) -> Result<Vec<u8>> {
    let magic = match img.channels {
        1 => "P5",
        3 => "P6",
        n => {
            return Err(Error::InvalidChannels {
                expected: "1 or 3",
                actual: n,
            })
        }
    };
    let mut out = Vec::with_capacity(img.data.len() + 20);
    write!(out, "{magic}\n{} {}\n255\n", img.width, img.height)?;
    out.extend_from_slice(&img.data);
    Ok(out)
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<ImageU8> {
    read_ppm(&fs::read(path)?)
}

pub fn save_ppm(img: &ImageU8, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_ppm(img)?)?;
    Ok(())
}
