use super::huffman::{HuffmanTable, TableClass};
use super::JfifError;
use crate::jpeg::QuantTable;

pub mod marker {
    pub const SOI: u16 = 0xFFD8;
    pub const EOI: u16 = 0xFFD9;
    pub const SOF0: u16 = 0xFFC0;
    pub const DHT: u16 = 0xFFC4;
    pub const DQT: u16 = 0xFFDB;
    pub const DRI: u16 = 0xFFDD;
    pub const SOS: u16 = 0xFFDA;
    pub const RST0: u16 = 0xFFD0;
    pub const APP0: u16 = 0xFFE0;
}

/// One marker and its payload. For SOS the entropy-coded bytes that follow
/// the header are kept, still byte-stuffed, in `scan_data`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerSegment {
    pub marker: u16,
    pub offset: usize,
    pub payload: Vec<u8>,
    pub scan_data: Option<Vec<u8>>,
}

fn is_standalone(code: u8) -> bool {
    matches!(code, 0x01 | 0xD0..=0xD7 | 0xD8 | 0xD9)
}

/// Splits a stream into segments from SOI through EOI.
pub fn parse_markers(bytes: &[u8]) -> Result<Vec<MarkerSegment>, JfifError> {
    if bytes.len() < 2 || bytes[0] != 0xFF || bytes[1] != 0xD8 {
        return Err(JfifError::MissingSoi);
    }
    let mut segments = vec![MarkerSegment {
        marker: marker::SOI,
        offset: 0,
        payload: Vec::new(),
        scan_data: None,
    }];
    let mut pos = 2;
    loop {
        if pos >= bytes.len() {
            return Err(JfifError::MissingEoi);
        }
        if bytes[pos] != 0xFF {
            return Err(JfifError::ExpectedMarker(pos));
        }
        let offset = pos;
        // fill bytes
        while pos < bytes.len() && bytes[pos] == 0xFF {
            pos += 1;
        }
        let Some(&code) = bytes.get(pos) else {
            return Err(JfifError::MissingEoi);
        };
        pos += 1;
        let code16 = 0xFF00 | code as u16;
        if code16 == marker::EOI {
            segments.push(MarkerSegment {
                marker: code16,
                offset,
                payload: Vec::new(),
                scan_data: None,
            });
            return Ok(segments);
        }
        if is_standalone(code) {
            segments.push(MarkerSegment {
                marker: code16,
                offset,
                payload: Vec::new(),
                scan_data: None,
            });
            continue;
        }
        if pos + 2 > bytes.len() {
            return Err(JfifError::TruncatedSegment(offset));
        }
        let len = u16::from_be_bytes([bytes[pos], bytes[pos + 1]]) as usize;
        if len < 2 || pos + len > bytes.len() {
            return Err(JfifError::TruncatedSegment(offset));
        }
        let payload = bytes[pos + 2..pos + len].to_vec();
        pos += len;

        let scan_data = if code16 == marker::SOS {
            let start = pos;
            loop {
                if pos + 1 >= bytes.len() {
                    return Err(JfifError::MissingEoi);
                }
                if bytes[pos] == 0xFF {
                    match bytes[pos + 1] {
                        0x00 | 0xD0..=0xD7 => pos += 2,
                        0xFF => pos += 1,
                        _ => break,
                    }
                } else {
                    pos += 1;
                }
            }
            Some(bytes[start..pos].to_vec())
        } else {
            None
        };
        segments.push(MarkerSegment {
            marker: code16,
            offset,
            payload,
            scan_data,
        });
    }
}

fn expect(seg: &MarkerSegment, code: u16) -> Result<(), JfifError> {
    if seg.marker != code {
        return Err(JfifError::WrongMarker {
            expected: code,
            actual: seg.marker,
        });
    }
    Ok(())
}

/// Quantization tables in one DQT segment, as (id, zigzag table) pairs.
pub fn parse_dqt(seg: &MarkerSegment) -> Result<Vec<(u8, QuantTable)>, JfifError> {
    expect(seg, marker::DQT)?;
    let p = &seg.payload;
    let mut out = Vec::new();
    let mut i = 0;
    while i < p.len() {
        let precision = p[i] >> 4;
        let id = p[i] & 0x0f;
        if precision != 0 {
            return Err(JfifError::BadPrecision(precision));
        }
        if i + 65 > p.len() {
            return Err(JfifError::ShortPayload);
        }
        let mut entries = [0u16; 64];
        for (e, &b) in entries.iter_mut().zip(&p[i + 1..i + 65]) {
            *e = b as u16;
        }
        let table =
            QuantTable::from_zigzag(entries).map_err(|_| JfifError::InvalidQuantTable(id))?;
        out.push((id, table));
        i += 65;
    }
    if out.is_empty() {
        return Err(JfifError::ShortPayload);
    }
    Ok(out)
}

pub fn parse_dht(seg: &MarkerSegment) -> Result<Vec<HuffmanTable>, JfifError> {
    expect(seg, marker::DHT)?;
    let p = &seg.payload;
    let mut out = Vec::new();
    let mut i = 0;
    while i < p.len() {
        if i + 17 > p.len() {
            return Err(JfifError::ShortPayload);
        }
        let class = match p[i] >> 4 {
            0 => TableClass::Dc,
            1 => TableClass::Ac,
            other => {
                return Err(JfifError::UnsupportedScan(format!(
                    "huffman table class {other}"
                )))
            }
        };
        let id = p[i] & 0x0f;
        let mut counts = [0u8; 16];
        counts.copy_from_slice(&p[i + 1..i + 17]);
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        if i + 17 + total > p.len() {
            return Err(JfifError::ShortPayload);
        }
        let symbols = p[i + 17..i + 17 + total].to_vec();
        out.push(HuffmanTable::new(class, id, counts, symbols)?);
        i += 17 + total;
    }
    Ok(out)
}
