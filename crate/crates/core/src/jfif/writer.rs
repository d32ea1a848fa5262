use super::huffman::{build_huffman, std_tables, HuffmanCodebook, HuffmanTable, TableClass};
use super::markers::marker;
use super::{JfifError, ParsedJpeg};
use crate::jpeg::{CoeffBlock, ZIGZAG_TO_NATURAL};

struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    nbits: u32,
}

impl BitWriter {
    fn new() -> Self {
        Self {
            out: Vec::new(),
            acc: 0,
            nbits: 0,
        }
    }

    fn put(&mut self, value: u32, len: u32) {
        debug_assert!(len <= 16);
        self.acc = (self.acc << len) | (value & ((1 << len) - 1));
        self.nbits += len;
        while self.nbits >= 8 {
            self.nbits -= 8;
            let byte = (self.acc >> self.nbits) as u8;
            self.out.push(byte);
            if byte == 0xFF {
                self.out.push(0x00);
            }
        }
        self.acc &= (1 << self.nbits) - 1;
    }

    /// Pads the final partial byte with 1-bits.
    fn flush(&mut self) {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.put((1 << pad) - 1, pad);
        }
    }
}

/// Magnitude category and its value bits.
fn category(v: i32) -> (u32, u32) {
    let mag = v.unsigned_abs();
    let size = 32 - mag.leading_zeros();
    let bits = if v < 0 { (v - 1) as u32 } else { v as u32 };
    (size, bits & ((1u32 << size) - 1))
}

fn encode_block(
    w: &mut BitWriter,
    block: &CoeffBlock,
    pred: &mut i32,
    dc: &HuffmanCodebook,
    ac: &HuffmanCodebook,
    index: usize,
) -> Result<(), JfifError> {
    let diff = block.0[0] - *pred;
    *pred = block.0[0];
    let (size, bits) = category(diff);
    if size > 11 {
        return Err(JfifError::CoefficientOverflow(index));
    }
    let (code, len) = dc.code(size as u8)?;
    w.put(code as u32, len as u32);
    w.put(bits, size);

    let mut run = 0u32;
    for &nat in &ZIGZAG_TO_NATURAL[1..] {
        let v = block.0[nat];
        if v == 0 {
            run += 1;
            continue;
        }
        while run >= 16 {
            let (code, len) = ac.code(0xF0)?;
            w.put(code as u32, len as u32);
            run -= 16;
        }
        let (size, bits) = category(v);
        if size > 10 {
            return Err(JfifError::CoefficientOverflow(index));
        }
        let (code, len) = ac.code(((run << 4) | size) as u8)?;
        w.put(code as u32, len as u32);
        w.put(bits, size);
        run = 0;
    }
    if run > 0 {
        let (code, len) = ac.code(0x00)?;
        w.put(code as u32, len as u32);
    }
    Ok(())
}

fn segment(out: &mut Vec<u8>, code: u16, payload: &[u8]) {
    out.extend_from_slice(&code.to_be_bytes());
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
}

fn table_ids(component: usize) -> u8 {
    u8::from(component > 0)
}

/// Entropy-codes all components interleaved, one block each per unit.
/// A non-zero `restart_interval` inserts RSTn markers (used by tests; the
/// public writer never emits them).
pub(crate) fn encode_scan(
    parsed: &ParsedJpeg,
    tables: &[HuffmanTable; 4],
    restart_interval: u16,
) -> Result<Vec<u8>, JfifError> {
    let books = tables
        .iter()
        .map(build_huffman)
        .collect::<Result<Vec<_>, _>>()?;
    let units = parsed.frame.blocks_wide() * parsed.frame.blocks_high();
    for g in &parsed.coeff_blocks {
        if g.blocks.len() != units {
            return Err(JfifError::UnsupportedScan(format!(
                "component has {} blocks, frame needs {units}",
                g.blocks.len()
            )));
        }
    }
    let mut w = BitWriter::new();
    let mut preds = vec![0i32; parsed.coeff_blocks.len()];
    let mut rst = 0u8;
    for unit in 0..units {
        if restart_interval > 0 && unit > 0 && unit % restart_interval as usize == 0 {
            w.flush();
            w.out.extend_from_slice(&[0xFF, 0xD0 + rst]);
            rst = (rst + 1) % 8;
            preds.iter_mut().for_each(|p| *p = 0);
        }
        for (ci, grid) in parsed.coeff_blocks.iter().enumerate() {
            let t = table_ids(ci) as usize * 2;
            encode_block(
                &mut w,
                &grid.blocks[unit],
                &mut preds[ci],
                &books[t],
                &books[t + 1],
                unit,
            )?;
        }
    }
    w.flush();
    Ok(w.out)
}

pub(crate) fn write_with_restarts(
    parsed: &ParsedJpeg,
    restart_interval: u16,
) -> Result<Vec<u8>, JfifError> {
    let f = &parsed.frame;
    if !(1..=65535).contains(&f.width) || !(1..=65535).contains(&f.height) {
        return Err(JfifError::BadDimensions(f.width, f.height));
    }
    if f.components.len() != parsed.coeff_blocks.len()
        || !(f.components.len() == 1 || f.components.len() == 3)
    {
        return Err(JfifError::UnsupportedScan(format!(
            "{} components",
            f.components.len()
        )));
    }
    for c in &f.components {
        if !parsed.quant_tables.contains_key(&c.quant_id) {
            return Err(JfifError::MissingQuantTable(c.quant_id));
        }
    }
    let tables = std_tables::all();
    let mut out = vec![0xFF, 0xD8];

    for (&id, table) in &parsed.quant_tables {
        let mut p = Vec::with_capacity(65);
        p.push(id & 0x0f);
        p.extend(table.zigzag().iter().map(|&q| q as u8));
        segment(&mut out, marker::DQT, &p);
    }

    let mut sof = vec![8];
    sof.extend_from_slice(&(f.height as u16).to_be_bytes());
    sof.extend_from_slice(&(f.width as u16).to_be_bytes());
    sof.push(f.components.len() as u8);
    for c in &f.components {
        sof.extend([c.id, 0x11, c.quant_id]);
    }
    segment(&mut out, marker::SOF0, &sof);

    let used = if f.components.len() == 1 { 2 } else { 4 };
    for t in &tables[..used] {
        let mut p = vec![(u8::from(t.class == TableClass::Ac) << 4) | t.id];
        p.extend_from_slice(&t.counts);
        p.extend_from_slice(&t.symbols);
        segment(&mut out, marker::DHT, &p);
    }

    if restart_interval > 0 {
        segment(&mut out, marker::DRI, &restart_interval.to_be_bytes());
    }

    let mut sos = vec![f.components.len() as u8];
    for (i, c) in f.components.iter().enumerate() {
        let t = table_ids(i);
        sos.extend([c.id, (t << 4) | t]);
    }
    sos.extend([0, 63, 0]);
    segment(&mut out, marker::SOS, &sos);
    out.extend(encode_scan(parsed, &tables, restart_interval)?);
    out.extend_from_slice(&[0xFF, 0xD9]);
    Ok(out)
}

/// Serializes coefficients as a baseline JFIF stream using the standard
/// Annex K Huffman tables.
pub fn write_jfif(parsed: &ParsedJpeg) -> Result<Vec<u8>, JfifError> {
    write_with_restarts(parsed, 0)
}
