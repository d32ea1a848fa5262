#![allow(dead_code)]

pub mod hfcm_ref;
pub mod jpeg_ref;
