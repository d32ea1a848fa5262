//! Haze attenuation of AC coefficients and quantizer annihilation counts
//! on 8×8 luma block corpora.
//!
//! Blocks are on the 0..255 scale without the JPEG level shift; the shift
//! only moves the DC term, which is excluded from every statistic here.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::{ImageF32, ImageU8};
use crate::jpeg::{
    dct2d, quant_table_for_qf, Block8, QuantTable, TableKind, BLOCK, ZIGZAG_TO_NATURAL,
};

/// Luma airlight used when a caller does not supply one. Only the DC band
/// depends on it.
pub const DEFAULT_AIRLIGHT_Y: f64 = 220.0;

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::param(format!("transmission {t} outside (0, 1]")));
    }
    Ok(())
}

/// DCT of the hazy block t·y + a_y(1−t) and the largest AC deviation from
/// t times the clear coefficients.
pub fn ac_attenuation(block: &Block8, t: f64, a_y: f64) -> Result<(Block8, f64)> {
    check_t(t)?;
    let clear = dct2d(block);
    let hazy = dct2d(&haze_block(block, t, a_y));
    let residual = (1..64)
        .map(|i| (hazy.0[i] - t * clear.0[i]).abs())
        .fold(0.0, f64::max);
    Ok((hazy, residual))
}

fn haze_block(block: &Block8, t: f64, a_y: f64) -> Block8 {
    Block8(block.0.map(|y| t * y + a_y * (1.0 - t)))
}

/// Non-overlapping full 8×8 blocks of the luma channel, 0..255 scale.
/// Partial blocks at the right and bottom edges are dropped.
pub fn luma_blocks(img: &ImageU8) -> Result<Vec<Block8>> {
    let luma = img.to_f32().luma()?;
    Ok(plane_blocks(&luma))
}

fn plane_blocks(luma: &ImageF32) -> Vec<Block8> {
    let (bw, bh) = (luma.width / BLOCK, luma.height / BLOCK);
    let mut out = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let mut b = Block8::default();
            for r in 0..BLOCK {
                for c in 0..BLOCK {
                    b.0[r * BLOCK + c] = luma.get(bx * BLOCK + c, by * BLOCK + r, 0) as f64 * 255.0;
                }
            }
            out.push(b);
        }
    }
    out
}

/// Identifies a corpus so reports computed on different block sets can be
/// told apart.
pub fn corpus_fingerprint(corpus: &[Block8]) -> String {
    let mut h = Sha256::new();
    for b in corpus {
        for v in b.0 {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandStat {
    /// Zigzag index, 1..=63.
    pub nu: usize,
    pub count: u64,
    pub annihilated: u64,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnihilationReport {
    pub qf: u8,
    pub t: f64,
    pub blocks: usize,
    /// Constant blocks. Their AC energy is zero, so they annihilate
    /// trivially.
    pub zero_ac_blocks: usize,
    pub bands: Vec<BandStat>,
    pub aggregate: f64,
    pub corpus: String,
    /// Per block, bit ν set when band ν was annihilated.
    #[serde(skip)]
    pub masks: Vec<u64>,
}

impl AnnihilationReport {
    pub fn frequencies(&self) -> Vec<f64> {
        self.bands.iter().map(|b| b.frequency).collect()
    }
}

/// Annihilation bitmask of one coefficient block: bit ν set when
/// |f(ν)| < q(ν)/2.
pub fn annihilation_mask(coeffs: &Block8, q: &QuantTable) -> u64 {
    let mut mask = 0u64;
    for nu in 1..64 {
        let f = coeffs.0[ZIGZAG_TO_NATURAL[nu]];
        if f.abs() < q.step(nu) as f64 / 2.0 {
            mask |= 1 << nu;
        }
    }
    mask
}

/// Same test carried out on the clear coefficients with the threshold
/// widened to q(ν)/(2t).
pub fn clear_threshold_mask(coeffs: &Block8, q: &QuantTable, t: f64) -> u64 {
    let mut mask = 0u64;
    for nu in 1..64 {
        let f = coeffs.0[ZIGZAG_TO_NATURAL[nu]];
        if (t * f).abs() < q.step(nu) as f64 / 2.0 {
            mask |= 1 << nu;
        }
    }
    mask
}

pub fn annihilation_stats(corpus: &[Block8], t: f64, qf: u8) -> Result<AnnihilationReport> {
    annihilation_stats_with(corpus, t, qf, DEFAULT_AIRLIGHT_Y)
}

pub fn annihilation_stats_with(
    corpus: &[Block8],
    t: f64,
    qf: u8,
    a_y: f64,
) -> Result<AnnihilationReport> {
    if corpus.is_empty() {
        return Err(Error::Empty("block corpus"));
    }
    check_t(t)?;
    let q = quant_table_for_qf(qf, TableKind::Luma)?;
    let masks: Vec<u64> = corpus
        .par_iter()
        .map(|b| annihilation_mask(&dct2d(&haze_block(b, t, a_y)), &q))
        .collect();
    let zero_ac_blocks = corpus
        .par_iter()
        .filter(|b| b.0.iter().all(|&v| v == b.0[0]))
        .count();
    let n = corpus.len() as u64;
    let bands: Vec<BandStat> = (1..64)
        .map(|nu| {
            let annihilated = masks.iter().filter(|&&m| m >> nu & 1 == 1).count() as u64;
            BandStat {
                nu,
                count: n,
                annihilated,
                frequency: annihilated as f64 / n as f64,
            }
        })
        .collect();
    let total: u64 = bands.iter().map(|b| b.annihilated).sum();
    let samples: u64 = bands.iter().map(|b| b.count).sum();
    Ok(AnnihilationReport {
        qf,
        t,
        blocks: corpus.len(),
        zero_ac_blocks,
        bands,
        aggregate: total as f64 / samples as f64,
        corpus: corpus_fingerprint(corpus),
        masks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandVerdict {
    pub nu: usize,
    pub clear: f64,
    pub hazy: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityVerdict {
    pub pass: bool,
    pub t_hazy: f64,
    pub t_clear: f64,
    pub aggregate_hazy: f64,
    pub aggregate_clear: f64,
    /// Strict aggregate growth is demanded only when the hazy report has
    /// the lower transmission and the clear aggregate lies strictly inside
    /// (0, 1).
    pub strict_required: bool,
    pub bands: Vec<BandVerdict>,
}

/// Checks that haze never lowers annihilation in a band that is not
/// already fully annihilated, and strictly raises it on aggregate.
pub fn verify_inequality(
    hazy: &AnnihilationReport,
    clear: &AnnihilationReport,
) -> Result<InequalityVerdict> {
    if hazy.corpus != clear.corpus || hazy.blocks != clear.blocks {
        return Err(Error::param(format!(
            "reports come from different corpora ({} vs {})",
            hazy.corpus, clear.corpus
        )));
    }
    if hazy.qf != clear.qf {
        return Err(Error::param(format!(
            "quality factors differ ({} vs {})",
            hazy.qf, clear.qf
        )));
    }
    let bands: Vec<BandVerdict> = hazy
        .bands
        .iter()
        .zip(&clear.bands)
        .map(|(h, c)| BandVerdict {
            nu: h.nu,
            clear: c.frequency,
            hazy: h.frequency,
            pass: c.frequency >= 1.0 || h.frequency >= c.frequency,
        })
        .collect();
    let strict_required = hazy.t < clear.t && clear.aggregate > 0.0 && clear.aggregate < 1.0;
    let strict_ok = !strict_required || hazy.aggregate > clear.aggregate;
    Ok(InequalityVerdict {
        pass: bands.iter().all(|b| b.pass) && strict_ok,
        t_hazy: hazy.t,
        t_clear: clear.t,
        aggregate_hazy: hazy.aggregate,
        aggregate_clear: clear.aggregate,
        strict_required,
        bands,
    })
}

/// Number of (block, band) pairs annihilated at the higher transmission
/// but not at the lower one. Zero whenever haze acts as a pure scaling.
pub fn inclusion_violations(
    higher_t: &AnnihilationReport,
    lower_t: &AnnihilationReport,
) -> Result<usize> {
    if higher_t.masks.len() != lower_t.masks.len() || higher_t.corpus != lower_t.corpus {
        return Err(Error::param("reports come from different corpora"));
    }
    Ok(higher_t
        .masks
        .iter()
        .zip(&lower_t.masks)
        .map(|(&hi, &lo)| (hi & !lo).count_ones() as usize)
        .sum())
}
