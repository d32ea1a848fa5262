//! Independent decoding paths used to cross-check the JPEG writer.

use fdg_core::image::ImageU8;
use fdg_core::jpeg::{dequantize, idct2d, JpegCoefficients};
use fdg_core::synth::scene;

/// Ten colour scenes of assorted sizes plus one grayscale image.
pub fn corpus() -> Vec<ImageU8> {
    let sizes = [
        (64, 64),
        (96, 72),
        (33, 47),
        (128, 80),
        (17, 9),
        (40, 40),
        (81, 64),
        (64, 100),
        (8, 8),
        (120, 56),
    ];
    let mut out: Vec<ImageU8> = sizes
        .iter()
        .enumerate()
        .map(|(i, &(w, h))| scene(w, h, 100 + i as u64).clear.to_u8())
        .collect();
    let gray = scene(56, 40, 7).clear.luma().unwrap().to_u8();
    out.push(gray);
    out
}

/// Raw component samples, re-interleaved: without a colour transform the
/// decoder emits each row as consecutive per-component runs.
pub fn decode_components(bytes: &[u8], width: usize, n: usize) -> Vec<u8> {
    let mut d = jpeg_decoder::Decoder::new(bytes);
    d.set_color_transform(jpeg_decoder::ColorTransform::None);
    let rows = d.decode().expect("reference decoder accepts the stream");
    let mut out = vec![0u8; rows.len()];
    for (y, row) in rows.chunks_exact(width * n).enumerate() {
        for c in 0..n {
            for x in 0..width {
                out[(y * width + x) * n + c] = row[c * width + x];
            }
        }
    }
    out
}

/// Interleaved component samples: dequantize, inverse DCT, undo the level
/// shift, round and clamp.
pub fn component_planes(c: &JpegCoefficients) -> Vec<u8> {
    let n = c.components.len();
    let mut out = vec![0u8; c.width * c.height * n];
    for (ci, g) in c.components.iter().enumerate() {
        let q = &c.quant_tables[g.table];
        for by in 0..g.blocks_high {
            for bx in 0..g.blocks_wide {
                let px = idct2d(&dequantize(g.block(bx, by), q));
                for r in 0..8 {
                    for col in 0..8 {
                        let (x, y) = (bx * 8 + col, by * 8 + r);
                        if x < c.width && y < c.height {
                            let v = (px.0[r * 8 + col] + 128.0).round().clamp(0.0, 255.0);
                            out[(y * c.width + x) * n + ci] = v as u8;
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn max_deviation(a: &[u8], b: &[u8]) -> i32 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as i32 - y as i32).abs())
        .max()
        .unwrap()
}
