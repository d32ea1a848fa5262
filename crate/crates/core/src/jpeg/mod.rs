//! The forward JPEG transform chain: blockwise DCT, zigzag scan,
//! quality-factor quantization tables, and a full lossy round-trip
//! simulation used by the analysis and decomposition stages.

mod codec;
mod dct;
mod quant;
mod zigzag;

pub use codec::{
    loss_map, reconstruct, simulate_jpeg, CoeffGrid, JpegCoefficients, JpegOptions, LossMap,
    SimulatedJpeg,
};
pub use dct::{dct2d, dct2d_n, idct2d, idct2d_n, Block8, DctKernel, BLOCK, BLOCK_AREA};
pub use quant::{
    dequantize, quant_table_for_qf, quantize, CoeffBlock, QuantTable, Rounding, TableKind,
};
pub use zigzag::{uv_to_zigzag, zigzag_to_uv, ZIGZAG_TO_NATURAL};
