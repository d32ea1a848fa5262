use super::dct::{Block8, BLOCK_AREA};
use super::zigzag::ZIGZAG_TO_NATURAL;
use crate::error::{Error, Result};

/// ITU-T T.81 Annex K.1 luminance table, natural order.
const BASE_LUMA: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Annex K.2 chrominance table, natural order.
const BASE_CHROMA: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Luma,
    Chroma,
}

/// 64 quantizer steps in zigzag order, each in `1..=255`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantTable([u16; 64]);

impl QuantTable {
    pub fn from_zigzag(entries: [u16; 64]) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|&&q| q == 0 || q > 255) {
            return Err(Error::param(format!(
                "quantizer step {bad} outside 1..=255"
            )));
        }
        Ok(Self(entries))
    }

    pub fn from_natural(entries: [u16; 64]) -> Result<Self> {
        let mut zz = [0u16; 64];
        for (nu, slot) in zz.iter_mut().enumerate() {
            *slot = entries[ZIGZAG_TO_NATURAL[nu]];
        }
        Self::from_zigzag(zz)
    }

    /// Step for zigzag index ν.
    #[inline]
    pub fn step(&self, nu: usize) -> u16 {
        self.0[nu]
    }

    /// Step for natural (row-major) index.
    #[inline]
    pub fn step_natural(&self, idx: usize) -> u16 {
        self.0[super::zigzag::NATURAL_TO_ZIGZAG[idx]]
    }

    pub fn zigzag(&self) -> &[u16; 64] {
        &self.0
    }
}

/// Quantized coefficients in natural row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoeffBlock(pub [i32; 64]);

impl Default for CoeffBlock {
    fn default() -> Self {
        CoeffBlock([0; 64])
    }
}

impl CoeffBlock {
    #[inline]
    pub fn zigzag(&self, nu: usize) -> i32 {
        self.0[ZIGZAG_TO_NATURAL[nu]]
    }
}

/// Rounding used by [`quantize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// `⌊x + ½⌋` taken literally: −2.5 rounds to −2.
    #[default]
    Floor,
    /// Round half away from zero, as production codecs do: −2.5 → −3.
    Symmetric,
}

impl Rounding {
    #[inline]
    pub fn apply(self, x: f64) -> i32 {
        match self {
            Rounding::Floor => (x + 0.5).floor() as i32,
            Rounding::Symmetric => x.round() as i32,
        }
    }
}

pub fn quant_table_for_qf(qf: u8, kind: TableKind) -> Result<QuantTable> {
    if !(1..=100).contains(&qf) {
        return Err(Error::param(format!("quality factor {qf} outside 1..=100")));
    }
    let qf = qf as u32;
    let scale = if qf < 50 { 5000 / qf } else { 200 - 2 * qf };
    let base = match kind {
        TableKind::Luma => &BASE_LUMA,
        TableKind::Chroma => &BASE_CHROMA,
    };
    let mut natural = [0u16; 64];
    for (dst, &b) in natural.iter_mut().zip(base) {
        *dst = ((b as u32 * scale + 50) / 100).clamp(1, 255) as u16;
    }
    QuantTable::from_natural(natural)
}

pub fn quantize(f: &Block8, q: &QuantTable, rounding: Rounding) -> CoeffBlock {
    let mut out = CoeffBlock::default();
    for i in 0..BLOCK_AREA {
        out.0[i] = rounding.apply(f.0[i] / q.step_natural(i) as f64);
    }
    out
}

pub fn dequantize(c: &CoeffBlock, q: &QuantTable) -> Block8 {
    let mut out = Block8::default();
    for i in 0..BLOCK_AREA {
        out.0[i] = c.0[i] as f64 * q.step_natural(i) as f64;
    }
    out
}
