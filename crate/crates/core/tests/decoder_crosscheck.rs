//! Streams written by the JFIF writer are parsed back bit-exactly and
//! decoded by an independent decoder to within one level of our own
//! reconstruction.
//!
//! Colour streams are compared on the decoded component planes: the
//! reference decoder rounds and clamps Y, Cb and Cr to 8 bits before its
//! fixed-point colour conversion, which alone moves saturated RGB pixels
//! by several levels.

mod common;

use common::jpeg_ref::{component_planes, corpus, decode_components, max_deviation};
use fdg_core::jfif::{parse_jpeg, write_jfif, ParsedJpeg};
use fdg_core::jpeg::{reconstruct, simulate_jpeg, JpegOptions};
use fdg_core::synth::scene;

#[test]
fn parse_write_round_trip_is_exact() {
    for (i, img) in corpus().iter().enumerate() {
        for qf in [50, 80, 95] {
            let sim = simulate_jpeg(img, JpegOptions::new(qf)).unwrap();
            let written = ParsedJpeg::from_coefficients(&sim.coefficients);
            let back = parse_jpeg(&write_jfif(&written).unwrap()).unwrap();
            assert_eq!(back.quant_tables, written.quant_tables, "image {i} qf {qf}");
            assert_eq!(back.coeff_blocks, written.coeff_blocks, "image {i} qf {qf}");
            assert_eq!(back.to_coefficients().unwrap(), sim.coefficients);
        }
    }
}

#[test]
fn reference_decoder_agrees_within_one_level() {
    for (i, img) in corpus().iter().enumerate() {
        let sim = simulate_jpeg(img, JpegOptions::new(80)).unwrap();
        let bytes = write_jfif(&ParsedJpeg::from_coefficients(&sim.coefficients)).unwrap();
        let worst = max_deviation(
            &decode_components(&bytes, img.width, img.channels),
            &component_planes(&sim.coefficients),
        );
        assert!(worst <= 1, "image {i}: max deviation {worst}");
    }
}

#[test]
fn grayscale_pixels_agree_within_one_level() {
    let img = scene(72, 48, 3).clear.luma().unwrap().to_u8();
    let sim = simulate_jpeg(&img, JpegOptions::new(80)).unwrap();
    let bytes = write_jfif(&ParsedJpeg::from_coefficients(&sim.coefficients)).unwrap();
    let theirs = jpeg_decoder::Decoder::new(&bytes[..]).decode().unwrap();
    assert!(max_deviation(&theirs, &reconstruct(&sim.coefficients).unwrap().data) <= 1);
}
