//! Baseline sequential entropy decoding.

use super::huffman::{build_huffman, HuffmanCodebook, HuffmanTable, TableClass};
use super::{FrameHeader, JfifError};
use crate::jpeg::{CoeffBlock, CoeffGrid, ZIGZAG_TO_NATURAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanComponent {
    pub selector: u8,
    /// Position of the component in the frame header.
    pub frame_index: usize,
    pub dc_table: u8,
    pub ac_table: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanHeader {
    pub components: Vec<ScanComponent>,
}

impl ScanHeader {
    pub fn parse(payload: &[u8], frame: &FrameHeader) -> Result<Self, JfifError> {
        let n = *payload.first().ok_or(JfifError::ShortPayload)? as usize;
        if n == 0 || payload.len() < 1 + 2 * n + 3 {
            return Err(JfifError::ShortPayload);
        }
        let mut components = Vec::with_capacity(n);
        for c in payload[1..1 + 2 * n].chunks_exact(2) {
            let frame_index = frame
                .components
                .iter()
                .position(|fc| fc.id == c[0])
                .ok_or_else(|| {
                    JfifError::UnsupportedScan(format!("unknown component selector {}", c[0]))
                })?;
            components.push(ScanComponent {
                selector: c[0],
                frame_index,
                dc_table: c[1] >> 4,
                ac_table: c[1] & 0x0f,
            });
        }
        let tail = &payload[1 + 2 * n..];
        if tail[0] != 0 || tail[1] != 63 || tail[2] != 0 {
            return Err(JfifError::UnsupportedScan(format!(
                "spectral selection {}..={} with approximation {:#04x}",
                tail[0], tail[1], tail[2]
            )));
        }
        Ok(Self { components })
    }
}

/// MSB-first reader over byte-stuffed entropy-coded data.
struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    byte: u8,
    bits_left: u8,
}

impl<'a> BitReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self {
            data,
            pos: 0,
            byte: 0,
            bits_left: 0,
        }
    }

    fn bit(&mut self) -> Result<u32, JfifError> {
        if self.bits_left == 0 {
            let b = *self.data.get(self.pos).ok_or(JfifError::TruncatedScan)?;
            self.pos += 1;
            if b == 0xFF {
                match self.data.get(self.pos) {
                    Some(0x00) => self.pos += 1,
                    Some(&m) => return Err(JfifError::MarkerInScan(0xFF00 | m as u16)),
                    None => return Err(JfifError::TruncatedScan),
                }
            }
            self.byte = b;
            self.bits_left = 8;
        }
        self.bits_left -= 1;
        Ok(((self.byte >> self.bits_left) & 1) as u32)
    }

    fn bits(&mut self, n: u8) -> Result<u32, JfifError> {
        let mut v = 0;
        for _ in 0..n {
            v = (v << 1) | self.bit()?;
        }
        Ok(v)
    }

    /// Drops partial-byte padding and consumes the expected RSTn marker.
    fn restart(&mut self, expected: u8) -> Result<(), JfifError> {
        self.bits_left = 0;
        match self.data.get(self.pos..self.pos + 2) {
            Some(&[0xFF, m]) if m == 0xD0 + expected => {
                self.pos += 2;
                Ok(())
            }
            Some(&[0xFF, m]) => Err(JfifError::MarkerInScan(0xFF00 | m as u16)),
            _ => Err(JfifError::TruncatedScan),
        }
    }
}

/// Sign-extends an `s`-bit magnitude category value.
#[inline]
fn extend(v: u32, s: u8) -> i32 {
    if s == 0 {
        return 0;
    }
    let v = v as i32;
    if v < (1 << (s - 1)) {
        v - (1 << s) + 1
    } else {
        v
    }
}

fn find_table(
    tables: &[(TableClass, u8, HuffmanCodebook)],
    class: TableClass,
    id: u8,
) -> Result<&HuffmanCodebook, JfifError> {
    tables
        .iter()
        .find(|(c, i, _)| *c == class && *i == id)
        .map(|(_, _, b)| b)
        .ok_or(JfifError::MissingHuffmanTable { class, id })
}

fn decode_block(
    reader: &mut BitReader,
    dc: &HuffmanCodebook,
    ac: &HuffmanCodebook,
    pred: &mut i32,
    index: usize,
) -> Result<CoeffBlock, JfifError> {
    let mut block = CoeffBlock::default();
    let s = dc.decode(|| reader.bit())?;
    if s > 11 {
        return Err(JfifError::CoefficientOverflow(index));
    }
    let diff = extend(reader.bits(s)?, s);
    *pred += diff;
    block.0[0] = *pred;

    let mut k = 1;
    while k < 64 {
        let rs = ac.decode(|| reader.bit())?;
        let run = (rs >> 4) as usize;
        let size = rs & 0x0f;
        if size == 0 {
            if run == 15 {
                k += 16;
                if k > 64 {
                    return Err(JfifError::CoefficientOverflow(index));
                }
                continue;
            }
            break; // EOB
        }
        k += run;
        if k > 63 || size > 10 {
            return Err(JfifError::CoefficientOverflow(index));
        }
        block.0[ZIGZAG_TO_NATURAL[k]] = extend(reader.bits(size)?, size);
        k += 1;
    }
    Ok(block)
}

/// Decodes one scan into a coefficient grid per scan component. DC
/// prediction is undone and restart markers reset it.
pub fn decode_scan(
    frame: &FrameHeader,
    header: &ScanHeader,
    huffman: &[HuffmanTable],
    restart_interval: u16,
    data: &[u8],
) -> Result<Vec<CoeffGrid>, JfifError> {
    let books = huffman
        .iter()
        .map(|t| Ok((t.class, t.id, build_huffman(t)?)))
        .collect::<Result<Vec<_>, JfifError>>()?;
    let mut tables = Vec::with_capacity(header.components.len());
    for sc in &header.components {
        tables.push((
            find_table(&books, TableClass::Dc, sc.dc_table)?,
            find_table(&books, TableClass::Ac, sc.ac_table)?,
        ));
    }

    let (bw, bh) = (frame.blocks_wide(), frame.blocks_high());
    let mut grids: Vec<CoeffGrid> = header
        .components
        .iter()
        .map(|sc| CoeffGrid {
            table: frame.components[sc.frame_index].quant_id as usize,
            blocks_wide: bw,
            blocks_high: bh,
            blocks: Vec::with_capacity(bw * bh),
        })
        .collect();
    let mut preds = vec![0i32; header.components.len()];
    let mut reader = BitReader::new(data);
    let units = bw * bh;
    let mut next_rst = 0u8;
    for unit in 0..units {
        if restart_interval > 0 && unit > 0 && unit % restart_interval as usize == 0 {
            reader.restart(next_rst)?;
            next_rst = (next_rst + 1) % 8;
            preds.iter_mut().for_each(|p| *p = 0);
        }
        for (ci, (dc, ac)) in tables.iter().enumerate() {
            let block = decode_block(&mut reader, dc, ac, &mut preds[ci], unit)?;
            grids[ci].blocks.push(block);
        }
    }
    Ok(grids)
}
