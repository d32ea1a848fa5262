//! Baseline sequential JFIF reading and writing.
//!
//! Only 8-bit SOF0 frames without chroma subsampling are accepted, which is
//! exactly what [`crate::jpeg::simulate_jpeg`] produces. Parsing accepts any
//! valid Huffman tables and restart intervals; writing always uses the
//! Annex K tables and never emits restart markers.

mod huffman;
mod markers;
mod scan;
mod writer;

use std::collections::BTreeMap;

use thiserror::Error;

pub use huffman::{build_huffman, std_tables, HuffmanCodebook, HuffmanTable, TableClass};
pub use markers::{marker, parse_dht, parse_dqt, parse_markers, MarkerSegment};
pub use scan::{decode_scan, ScanComponent, ScanHeader};
pub use writer::write_jfif;

use crate::jpeg::{CoeffGrid, JpegCoefficients, QuantTable};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum JfifError {
    #[error("stream does not start with SOI (FF D8)")]
    MissingSoi,
    #[error("stream ends without EOI (FF D9)")]
    MissingEoi,
    #[error("truncated segment at offset {0}")]
    TruncatedSegment(usize),
    #[error("expected a marker at offset {0}")]
    ExpectedMarker(usize),
    #[error("unexpected segment: wanted marker {expected:#06x}, got {actual:#06x}")]
    WrongMarker { expected: u16, actual: u16 },
    #[error("quantization table precision {0} is not supported (8-bit only)")]
    BadPrecision(u8),
    #[error("segment payload too short")]
    ShortPayload,
    #[error("invalid quantization table {0}: zero step")]
    InvalidQuantTable(u8),
    #[error("unsupported frame type {0:#06x} (baseline SOF0 only)")]
    UnsupportedFrame(u16),
    #[error("unsupported sample precision {0}")]
    UnsupportedPrecision(u8),
    #[error("chroma subsampling is not supported")]
    UnsupportedSampling,
    #[error("unsupported scan: {0}")]
    UnsupportedScan(String),
    #[error("huffman table has {0} symbols (max 256) or counts disagree with symbols")]
    BadHuffmanTable(usize),
    #[error("huffman code space over-full at length {0}")]
    HuffmanOverfull(usize),
    #[error("invalid huffman code in scan data")]
    InvalidCode,
    #[error("symbol {0:#04x} has no code in the table")]
    MissingSymbol(u8),
    #[error("missing {class:?} huffman table {id}")]
    MissingHuffmanTable { class: TableClass, id: u8 },
    #[error("component references missing quantization table {0}")]
    MissingQuantTable(u8),
    #[error("no frame header before scan")]
    MissingFrame,
    #[error("no scan data")]
    MissingScan,
    #[error("marker {0:#06x} inside entropy-coded data")]
    MarkerInScan(u16),
    #[error("coefficient overflow in block {0}")]
    CoefficientOverflow(usize),
    #[error("entropy-coded data ended early")]
    TruncatedScan,
    #[error("dimensions {0}x{1} are outside 1..=65535")]
    BadDimensions(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameComponent {
    pub id: u8,
    pub h_sampling: u8,
    pub v_sampling: u8,
    pub quant_id: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameHeader {
    pub width: usize,
    pub height: usize,
    pub components: Vec<FrameComponent>,
}

impl FrameHeader {
    pub fn blocks_wide(&self) -> usize {
        self.width.div_ceil(8)
    }

    pub fn blocks_high(&self) -> usize {
        self.height.div_ceil(8)
    }
}

/// Tables and quantized coefficients recovered from (or destined for) a
/// baseline JPEG stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedJpeg {
    pub frame: FrameHeader,
    pub quant_tables: BTreeMap<u8, QuantTable>,
    pub huffman_tables: Vec<HuffmanTable>,
    pub restart_interval: u16,
    /// One grid per frame component, in frame order. `CoeffGrid::table`
    /// holds the component's quantization table id.
    pub coeff_blocks: Vec<CoeffGrid>,
}

impl ParsedJpeg {
    /// Wraps simulated coefficients in a frame description: component ids
    /// 1..=n, table ids equal to the simulation's table indices.
    pub fn from_coefficients(c: &JpegCoefficients) -> Self {
        let components = c
            .components
            .iter()
            .enumerate()
            .map(|(i, g)| FrameComponent {
                id: i as u8 + 1,
                h_sampling: 1,
                v_sampling: 1,
                quant_id: g.table as u8,
            })
            .collect();
        Self {
            frame: FrameHeader {
                width: c.width,
                height: c.height,
                components,
            },
            quant_tables: c
                .quant_tables
                .iter()
                .enumerate()
                .map(|(i, q)| (i as u8, *q))
                .collect(),
            huffman_tables: Vec::new(),
            restart_interval: 0,
            coeff_blocks: c.components.clone(),
        }
    }

    /// Re-indexes tables densely so the result can be fed to
    /// [`crate::jpeg::reconstruct`].
    pub fn to_coefficients(&self) -> Result<JpegCoefficients, JfifError> {
        let ids: Vec<u8> = self.quant_tables.keys().copied().collect();
        let components = self
            .coeff_blocks
            .iter()
            .map(|g| {
                let idx = ids
                    .iter()
                    .position(|&id| id as usize == g.table)
                    .ok_or(JfifError::MissingQuantTable(g.table as u8))?;
                Ok(CoeffGrid {
                    table: idx,
                    ..g.clone()
                })
            })
            .collect::<Result<_, JfifError>>()?;
        Ok(JpegCoefficients {
            width: self.frame.width,
            height: self.frame.height,
            quant_tables: self.quant_tables.values().copied().collect(),
            components,
        })
    }
}

fn parse_sof0(seg: &MarkerSegment) -> Result<FrameHeader, JfifError> {
    let p = &seg.payload;
    if p.len() < 6 {
        return Err(JfifError::ShortPayload);
    }
    if p[0] != 8 {
        return Err(JfifError::UnsupportedPrecision(p[0]));
    }
    let height = u16::from_be_bytes([p[1], p[2]]) as usize;
    let width = u16::from_be_bytes([p[3], p[4]]) as usize;
    if width == 0 || height == 0 {
        // DNL-defined heights are not supported
        return Err(JfifError::BadDimensions(width, height));
    }
    let n = p[5] as usize;
    if p.len() < 6 + 3 * n {
        return Err(JfifError::ShortPayload);
    }
    let components: Vec<FrameComponent> = p[6..6 + 3 * n]
        .chunks_exact(3)
        .map(|c| FrameComponent {
            id: c[0],
            h_sampling: c[1] >> 4,
            v_sampling: c[1] & 0x0f,
            quant_id: c[2],
        })
        .collect();
    if n == 0 {
        return Err(JfifError::ShortPayload);
    }
    if n > 1
        && components.iter().any(|c| {
            c.h_sampling != components[0].h_sampling || c.v_sampling != components[0].v_sampling
        })
    {
        return Err(JfifError::UnsupportedSampling);
    }
    Ok(FrameHeader {
        width,
        height,
        components,
    })
}

/// Parses a complete baseline stream down to quantized coefficients.
pub fn parse_jpeg(bytes: &[u8]) -> Result<ParsedJpeg, JfifError> {
    let segments = parse_markers(bytes)?;
    let mut quant_tables = BTreeMap::new();
    let mut huffman_tables: Vec<HuffmanTable> = Vec::new();
    let mut frame: Option<FrameHeader> = None;
    let mut restart_interval = 0u16;
    let mut grids: Vec<Option<CoeffGrid>> = Vec::new();

    for seg in &segments {
        match seg.marker {
            marker::DQT => {
                for (id, t) in parse_dqt(seg)? {
                    quant_tables.insert(id, t);
                }
            }
            marker::DHT => {
                for t in parse_dht(seg)? {
                    huffman_tables.retain(|h| !(h.class == t.class && h.id == t.id));
                    huffman_tables.push(t);
                }
            }
            marker::DRI => {
                if seg.payload.len() < 2 {
                    return Err(JfifError::ShortPayload);
                }
                restart_interval = u16::from_be_bytes([seg.payload[0], seg.payload[1]]);
            }
            marker::SOF0 => {
                let f = parse_sof0(seg)?;
                grids = vec![None; f.components.len()];
                frame = Some(f);
            }
            m @ (0xFFC1..=0xFFC3 | 0xFFC5..=0xFFC7 | 0xFFC9..=0xFFCB | 0xFFCD..=0xFFCF) => {
                return Err(JfifError::UnsupportedFrame(m));
            }
            marker::SOS => {
                let f = frame.as_ref().ok_or(JfifError::MissingFrame)?;
                for c in &f.components {
                    if !quant_tables.contains_key(&c.quant_id) {
                        return Err(JfifError::MissingQuantTable(c.quant_id));
                    }
                }
                let header = ScanHeader::parse(&seg.payload, f)?;
                let data = seg.scan_data.as_deref().unwrap_or(&[]);
                let decoded = decode_scan(f, &header, &huffman_tables, restart_interval, data)?;
                for (sc, grid) in header.components.iter().zip(decoded) {
                    grids[sc.frame_index] = Some(grid);
                }
            }
            _ => {}
        }
    }
    let frame = frame.ok_or(JfifError::MissingFrame)?;
    let coeff_blocks = grids
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or(JfifError::MissingScan)?;
    Ok(ParsedJpeg {
        frame,
        quant_tables,
        huffman_tables,
        restart_interval,
        coeff_blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ImageU8;
    use crate::jpeg::{simulate_jpeg, JpegOptions};

    fn scene(w: usize, h: usize, seed: usize) -> ImageU8 {
        let mut data = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                let v = ((x * 7 + y * 13 + seed * 31) % 97) as f64 / 97.0;
                let s = ((x as f64 * 0.3 + seed as f64).sin() + 1.0) * 0.5;
                data.push((255.0 * v) as u8);
                data.push((255.0 * s) as u8);
                data.push((255.0 * (1.0 - v * s)) as u8);
            }
        }
        ImageU8::new(w, h, 3, data).unwrap()
    }

    #[test]
    fn segment_sequence_of_written_file() {
        let sim = simulate_jpeg(&scene(20, 12, 1), JpegOptions::new(80)).unwrap();
        let bytes = write_jfif(&ParsedJpeg::from_coefficients(&sim.coefficients)).unwrap();
        let order: Vec<u16> = parse_markers(&bytes)
            .unwrap()
            .iter()
            .map(|s| s.marker)
            .collect();
        use marker::*;
        assert_eq!(
            order,
            vec![SOI, DQT, DQT, SOF0, DHT, DHT, DHT, DHT, SOS, EOI]
        );
        assert_eq!(&bytes[..2], &[0xFF, 0xD8]);
        assert_eq!(&bytes[bytes.len() - 2..], &[0xFF, 0xD9]);
    }

    #[test]
    fn coefficient_exact_round_trip() {
        for (w, h, qf) in [(20, 12, 80u8), (8, 8, 10), (33, 17, 95), (16, 24, 100)] {
            let sim = simulate_jpeg(&scene(w, h, w + h), JpegOptions::new(qf)).unwrap();
            let original = ParsedJpeg::from_coefficients(&sim.coefficients);
            let parsed = parse_jpeg(&write_jfif(&original).unwrap()).unwrap();
            assert_eq!(parsed.frame, original.frame);
            assert_eq!(parsed.quant_tables, original.quant_tables);
            assert_eq!(parsed.coeff_blocks, original.coeff_blocks);
            assert_eq!(parsed.to_coefficients().unwrap(), sim.coefficients);
        }
    }

    #[test]
    fn gray_single_block() {
        let img = ImageU8::filled(8, 8, 1, 77).unwrap();
        let sim = simulate_jpeg(&img, JpegOptions::new(80)).unwrap();
        let bytes = write_jfif(&ParsedJpeg::from_coefficients(&sim.coefficients)).unwrap();
        let parsed = parse_jpeg(&bytes).unwrap();
        assert_eq!(parsed.coeff_blocks.len(), 1);
        let block = &parsed.coeff_blocks[0].blocks;
        assert_eq!(block.len(), 1);
        assert_ne!(block[0].0[0], 0);
        assert!(block[0].0[1..].iter().all(|&c| c == 0));
    }

    #[test]
    fn progressive_frames_rejected() {
        let mut bytes = vec![
            0xFF, 0xD8, 0xFF, 0xC2, 0x00, 0x0B, 8, 0, 8, 0, 8, 1, 1, 0x11, 0,
        ];
        bytes.extend([0xFF, 0xD9]);
        assert_eq!(parse_jpeg(&bytes), Err(JfifError::UnsupportedFrame(0xFFC2)));
    }

    #[test]
    fn subsampled_frames_rejected() {
        let mut bytes = vec![0xFF, 0xD8, 0xFF, 0xC0, 0x00, 0x11, 8, 0, 8, 0, 8, 3];
        bytes.extend([1, 0x22, 0, 2, 0x11, 1, 3, 0x11, 1]);
        bytes.extend([0xFF, 0xD9]);
        assert_eq!(parse_jpeg(&bytes), Err(JfifError::UnsupportedSampling));
    }

    #[test]
    fn scan_without_frame() {
        let bytes = [
            0xFF, 0xD8, 0xFF, 0xDA, 0x00, 0x08, 1, 1, 0, 0, 63, 0, 0xFF, 0xD9,
        ];
        assert_eq!(parse_jpeg(&bytes), Err(JfifError::MissingFrame));
    }
}
