use super::JfifError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableClass {
    Dc,
    Ac,
}

/// A DHT table as stored in the stream: code counts per length 1..=16 and
/// the symbols in code order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTable {
    pub class: TableClass,
    pub id: u8,
    pub counts: [u8; 16],
    pub symbols: Vec<u8>,
}

impl HuffmanTable {
    pub fn new(
        class: TableClass,
        id: u8,
        counts: [u8; 16],
        symbols: Vec<u8>,
    ) -> Result<Self, JfifError> {
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        if total != symbols.len() || total > 256 {
            return Err(JfifError::BadHuffmanTable(total));
        }
        Ok(Self {
            class,
            id,
            counts,
            symbols,
        })
    }
}

/// Canonical code assignment for one table, usable in both directions.
#[derive(Debug, Clone)]
pub struct HuffmanCodebook {
    // per length 1..=16 (index 0 unused): largest code, or -1 when empty
    max_code: [i32; 17],
    min_code: [i32; 17],
    val_ptr: [usize; 17],
    symbols: Vec<u8>,
    // (code, length) per symbol value; length 0 means absent
    encode: [(u16, u8); 256],
}

/// Assigns canonical codes: codes of one length are consecutive, and the
/// first code of length L+1 is (last code of length L + 1) << 1.
pub fn build_huffman(table: &HuffmanTable) -> Result<HuffmanCodebook, JfifError> {
    let mut max_code = [-1i32; 17];
    let mut min_code = [0i32; 17];
    let mut val_ptr = [0usize; 17];
    let mut encode = [(0u16, 0u8); 256];
    let mut code: u32 = 0;
    let mut k = 0usize;
    for len in 1..=16 {
        let n = table.counts[len - 1] as usize;
        if n > 0 {
            val_ptr[len] = k;
            min_code[len] = code as i32;
            for _ in 0..n {
                let sym = table.symbols[k];
                encode[sym as usize] = (code as u16, len as u8);
                code += 1;
                k += 1;
            }
            max_code[len] = code as i32 - 1;
        }
        if code > (1u32 << len) {
            return Err(JfifError::HuffmanOverfull(len));
        }
        code <<= 1;
    }
    Ok(HuffmanCodebook {
        max_code,
        min_code,
        val_ptr,
        symbols: table.symbols.clone(),
        encode,
    })
}

impl HuffmanCodebook {
    /// Decodes one symbol, pulling bits MSB-first from `next_bit`.
    pub fn decode<E>(&self, mut next_bit: impl FnMut() -> Result<u32, E>) -> Result<u8, E>
    where
        E: From<JfifError>,
    {
        let mut code: i32 = 0;
        for len in 1..=16 {
            code = (code << 1) | next_bit()? as i32;
            if code <= self.max_code[len] {
                let idx = self.val_ptr[len] + (code - self.min_code[len]) as usize;
                return Ok(self.symbols[idx]);
            }
        }
        Err(JfifError::InvalidCode.into())
    }

    /// (code, length) for a symbol.
    pub fn code(&self, symbol: u8) -> Result<(u16, u8), JfifError> {
        match self.encode[symbol as usize] {
            (_, 0) => Err(JfifError::MissingSymbol(symbol)),
            c => Ok(c),
        }
    }
}

/// ITU-T T.81 Annex K.3 typical tables.
pub mod std_tables {
    pub const DC_LUMA_COUNTS: [u8; 16] = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
    pub const DC_CHROMA_COUNTS: [u8; 16] = [0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
    pub const DC_SYMBOLS: [u8; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

    pub const AC_LUMA_COUNTS: [u8; 16] = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d];
    pub const AC_LUMA_SYMBOLS: [u8; 162] = [
        0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61,
        0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08, 0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52,
        0xd1, 0xf0, 0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25,
        0x26, 0x27, 0x28, 0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45,
        0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64,
        0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x83,
        0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99,
        0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6,
        0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3,
        0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8,
        0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa,
    ];

    pub const AC_CHROMA_COUNTS: [u8; 16] = [0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77];
    pub const AC_CHROMA_SYMBOLS: [u8; 162] = [
        0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61,
        0x71, 0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33,
        0x52, 0xf0, 0x15, 0x62, 0x72, 0xd1, 0x0a, 0x16, 0x24, 0x34, 0xe1, 0x25, 0xf1, 0x17, 0x18,
        0x19, 0x1a, 0x26, 0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44,
        0x45, 0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63,
        0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a,
        0x82, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97,
        0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4,
        0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca,
        0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7,
        0xe8, 0xe9, 0xea, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa,
    ];

    use super::{HuffmanTable, TableClass};

    /// The four tables in emission order: DC0, AC0, DC1, AC1.
    pub fn all() -> [HuffmanTable; 4] {
        let t = |class, id, counts: [u8; 16], symbols: &[u8]| HuffmanTable {
            class,
            id,
            counts,
            symbols: symbols.to_vec(),
        };
        [
            t(TableClass::Dc, 0, DC_LUMA_COUNTS, &DC_SYMBOLS),
            t(TableClass::Ac, 0, AC_LUMA_COUNTS, &AC_LUMA_SYMBOLS),
            t(TableClass::Dc, 1, DC_CHROMA_COUNTS, &DC_SYMBOLS),
            t(TableClass::Ac, 1, AC_CHROMA_COUNTS, &AC_CHROMA_SYMBOLS),
        ]
    }
}
