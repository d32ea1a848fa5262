//! JPEG zigzag scan. `(u, v)` is (row, column) of the natural 8×8 layout.

use crate::error::{Error, Result};

/// Natural (row-major) index of the ν-th zigzag coefficient.
pub const ZIGZAG_TO_NATURAL: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20,
    13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59,
    52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

pub(crate) const NATURAL_TO_ZIGZAG: [usize; 64] = {
    let mut inv = [0usize; 64];
    let mut i = 0;
    while i < 64 {
        inv[ZIGZAG_TO_NATURAL[i]] = i;
        i += 1;
    }
    inv
};

pub fn zigzag_to_uv(nu: usize) -> Result<(usize, usize)> {
    let natural = *ZIGZAG_TO_NATURAL
        .get(nu)
        .ok_or_else(|| Error::param(format!("zigzag index {nu} out of range")))?;
    Ok((natural / 8, natural % 8))
}

pub fn uv_to_zigzag(u: usize, v: usize) -> Result<usize> {
    if u >= 8 || v >= 8 {
        return Err(Error::param(format!("frequency ({u}, {v}) out of range")));
    }
    Ok(NATURAL_TO_ZIGZAG[u * 8 + v])
}
