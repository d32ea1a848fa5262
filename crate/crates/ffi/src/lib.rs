//! C interface to `fdg-core`.
//!
//! Images cross the boundary as opaque `FdgImage` handles holding
//! interleaved `f32` samples in [0, 1]. Every fallible call returns an
//! `FdgStatus`; on failure `fdg_last_error` describes the problem. Handles
//! returned through out-parameters are owned by the caller and released
//! with `fdg_image_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fdg_core::cli::{build_decomposer, build_denoiser, CliError, RunConfig};
use fdg_core::diffusion::restore;
use fdg_core::image::{load_ppm, psnr, save_ppm, ssim};
use fdg_core::jfif::{write_jfif, ParsedJpeg};
use fdg_core::jpeg::{simulate_jpeg, JpegOptions};
use fdg_core::{Error, ImageF32};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    DimensionMismatch = 5,
    ImageTooSmall = 6,
    Runtime = 7,
    Panic = 8,
}

/// Opaque image handle.
pub struct FdgImage(ImageF32);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FdgStatus {
    match e {
        Error::InvalidParameter(_)
        | Error::InvalidChannels { .. }
        | Error::Empty(_)
        | Error::NegativeSample(_) => FdgStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => FdgStatus::DimensionMismatch,
        Error::ImageTooSmall { .. } => FdgStatus::ImageTooSmall,
        Error::Io(_) => FdgStatus::Io,
        Error::MalformedHeader(_)
        | Error::Truncated { .. }
        | Error::UnsupportedMaxval(_)
        | Error::Jfif(_)
        | Error::Json(_) => FdgStatus::Format,
        _ => FdgStatus::Runtime,
    }
}

struct Failure(FdgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        match e {
            CliError::Usage(m) => Failure(FdgStatus::InvalidArgument, m),
            CliError::Run(e) => e.into(),
        }
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FdgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FdgStatus::Ok
        }
        Ok(Err(Failure(s, m))) => {
            set_error(&m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            FdgStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FdgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn image<'a>(p: *const FdgImage, what: &str) -> Result<&'a ImageF32, Failure> {
    p.as_ref().map(|i| &i.0).ok_or_else(|| null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FdgStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn emit(out: *mut *mut FdgImage, img: ImageF32) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(FdgImage(img)));
    Ok(())
}

/// Message for the last failed call on this thread; empty after a
/// success. Valid until the next call into the library from the same
/// thread.
#[no_mangle]
pub extern "C" fn fdg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates an image from `width*height*channels` samples, or zeros when
/// `data` is null. `channels` must be 1 or 3.
///
/// # Safety
/// `data` must be null or point to the stated number of floats; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_image_new(
    width: usize,
    height: usize,
    channels: usize,
    data: *const f32,
    out: *mut *mut FdgImage,
) -> FdgStatus {
    guard(|| {
        let n = width
            .checked_mul(height)
            .and_then(|v| v.checked_mul(channels))
            .ok_or_else(|| Failure(FdgStatus::InvalidArgument, "image size overflows".into()))?;
        let samples = if data.is_null() {
            vec![0.0; n]
        } else {
            std::slice::from_raw_parts(data, n).to_vec()
        };
        emit(out, ImageF32::new(width, height, channels, samples)?)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `img` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fdg_image_free(img: *mut FdgImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// # Safety
/// `img` must be a live handle; the out pointers must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn fdg_image_dims(
    img: *const FdgImage,
    width: *mut usize,
    height: *mut usize,
    channels: *mut usize,
) -> FdgStatus {
    guard(|| {
        let i = image(img, "img")?;
        for (p, v) in [(width, i.width), (height, i.height), (channels, i.channels)] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Borrowed pointer to the interleaved samples, valid while the handle
/// lives. Null for a null handle.
///
/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fdg_image_data(img: *const FdgImage) -> *const f32 {
    img.as_ref().map_or(ptr::null(), |i| i.0.data.as_ptr())
}

/// Reads a binary PPM (P6) or PGM (P5) with maxval 255.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_image_load_ppm(
    path: *const c_char,
    out: *mut *mut FdgImage,
) -> FdgStatus {
    guard(|| {
        let p = string(path, "path")?;
        emit(out, load_ppm(p)?.to_f32())
    })
}

/// Writes the image rounded to 8 bits.
///
/// # Safety
/// `img` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fdg_image_save_ppm(
    img: *const FdgImage,
    path: *const c_char,
) -> FdgStatus {
    guard(|| {
        let i = image(img, "img")?;
        let p = string(path, "path")?;
        Ok(save_ppm(&i.to_u8(), p)?)
    })
}

/// PSNR in dB with a peak of 1; +infinity for identical images.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_psnr(
    a: *const FdgImage,
    b: *const FdgImage,
    out: *mut f64,
) -> FdgStatus {
    guard(|| {
        let v = psnr(image(a, "a")?, image(b, "b")?)?;
        *out.as_mut().ok_or_else(|| null("out"))? = v;
        Ok(())
    })
}

/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_ssim(
    a: *const FdgImage,
    b: *const FdgImage,
    out: *mut f64,
) -> FdgStatus {
    guard(|| {
        let v = ssim(image(a, "a")?, image(b, "b")?)?;
        *out.as_mut().ok_or_else(|| null("out"))? = v;
        Ok(())
    })
}

fn check_qf(qf: u8) -> Result<(), Failure> {
    if !(1..=100).contains(&qf) {
        return Err(Failure(
            FdgStatus::InvalidArgument,
            format!("qf {qf} outside 1..=100"),
        ));
    }
    Ok(())
}

/// JPEG round trip at quality `qf`; the result is the decoded image.
///
/// # Safety
/// `img` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_simulate_jpeg(
    img: *const FdgImage,
    qf: u8,
    out: *mut *mut FdgImage,
) -> FdgStatus {
    guard(|| {
        check_qf(qf)?;
        let sim = simulate_jpeg(&image(img, "img")?.to_u8(), JpegOptions::new(qf))?;
        emit(out, sim.image.to_f32())
    })
}

/// Encodes a baseline JFIF stream. Release the buffer with
/// `fdg_bytes_free`.
///
/// # Safety
/// `img` must be a live handle; `out` and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_encode_jpeg(
    img: *const FdgImage,
    qf: u8,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> FdgStatus {
    guard(|| {
        check_qf(qf)?;
        if out.is_null() || out_len.is_null() {
            return Err(null("out"));
        }
        let sim = simulate_jpeg(&image(img, "img")?.to_u8(), JpegOptions::new(qf))?;
        let bytes =
            write_jfif(&ParsedJpeg::from_coefficients(&sim.coefficients)).map_err(Error::from)?;
        let boxed = bytes.into_boxed_slice();
        *out_len = boxed.len();
        *out = Box::into_raw(boxed) as *mut u8;
        Ok(())
    })
}

/// # Safety
/// `bytes` and `len` must come from one `fdg_encode_jpeg` call, or
/// `bytes` is null.
#[no_mangle]
pub unsafe extern "C" fn fdg_bytes_free(bytes: *mut u8, len: usize) {
    if !bytes.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(bytes, len)));
    }
}

/// Runs the patch diffusion sampler. `config_json` follows the CLI run
/// configuration schema and may be null for defaults. The oracle
/// decomposer is unavailable here since it needs a reference image.
///
/// # Safety
/// `img` must be a live handle, `config_json` null or NUL-terminated, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_restore(
    img: *const FdgImage,
    config_json: *const c_char,
    out: *mut *mut FdgImage,
) -> FdgStatus {
    guard(|| {
        let input = image(img, "img")?;
        let mut cfg: RunConfig = if config_json.is_null() {
            RunConfig::default()
        } else {
            serde_json::from_str(string(config_json, "config_json")?)
                .map_err(|e| Failure(FdgStatus::InvalidArgument, format!("config: {e}")))?
        };
        cfg.apply(&Default::default());
        cfg.validate()?;
        let work = std::env::temp_dir().join(format!("fdg-ffi-{}", std::process::id()));
        let decomposer = build_decomposer(&cfg, None, &work)?;
        let denoiser = build_denoiser(&cfg, &work)?;
        let predictor = cfg
            .sampler
            .predictor
            .build(cfg.sampler.kappa, cfg.sampler.max_offset);
        let r = restore(
            input,
            decomposer.as_ref(),
            denoiser.as_ref(),
            predictor.as_ref(),
            &cfg.sampler,
        )?;
        emit(out, r.image)
    })
}
