//! C ABI for `qimg`.
//!
//! Every fallible function returns a [`QimgStatus`]; on failure the message is
//! available from [`qimg_last_error`] on the same thread. Objects are opaque
//! handles released with their matching `_free` function. Strings returned by
//! the library are released with [`qimg_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qimg::bec::bec_compress;
use qimg::costmod::{analytic_costs, measured_r_j, min_n};
use qimg::gqir::text::to_text;
use qimg::gqir::{prepare_uncompressed, Circuit, GqirLayout};
use qimg::jpeg::psnr;
use qimg::pixmap::load_pgm;
use qimg::qjpeg::{run_pipeline, TraceDetail};
use qimg::{Error, PixelImage, QuantMatrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QimgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Pgm = 4,
    InvalidImage = 5,
    Domain = 6,
    Overflow = 7,
    Circuit = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QimgScheme {
    Plain = 0,
    Bec = 1,
    Qjpeg = 2,
}

/// Opaque image handle.
pub struct QimgImage(PixelImage);

/// Opaque circuit handle.
pub struct QimgCircuit(Circuit);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QimgTally {
    pub hadamard: u64,
    pub mcx: u64,
    pub muler: u64,
    pub adder: u64,
    pub adder_reversed: u64,
    /// Multipliers and adders at their formula cost, every other gate as one.
    pub elementary_cost: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QimgCostReport {
    pub n: u32,
    pub q: u32,
    pub r_j: f64,
    pub c: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub total: f64,
    pub a: f64,
    pub b: f64,
    pub m: f64,
    pub r: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QimgStatus {
    match e {
        Error::Io(_) => QimgStatus::Io,
        Error::Pgm(_) => QimgStatus::Pgm,
        Error::InvalidImage(_) => QimgStatus::InvalidImage,
        Error::Domain(_) => QimgStatus::Domain,
        Error::Overflow(_) => QimgStatus::Overflow,
        Error::Circuit(_) | Error::CircuitParse { .. } => QimgStatus::Circuit,
    }
}

struct Fail(QimgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QimgStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QimgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QimgStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            QimgStatus::Panic
        }
    }
}

unsafe fn image_ref<'a>(img: *const QimgImage) -> Result<&'a PixelImage, Fail> {
    img.as_ref().map(|i| &i.0).ok_or_else(|| null("image"))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qimg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a PGM file, zero-padding it to a power-of-two square.
#[no_mangle]
pub unsafe extern "C" fn qimg_image_load_pgm(path: *const c_char, out: *mut *mut QimgImage) -> QimgStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(QimgStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let img = load_pgm(path)?.image;
        put(out, Box::into_raw(Box::new(QimgImage(img))))
    })
}

/// Builds a `2^n × 2^n` image of `q`-bit pixels from `len` row-major values.
#[no_mangle]
pub unsafe extern "C" fn qimg_image_from_pixels(
    n: u32,
    q: u32,
    pixels: *const u32,
    len: usize,
    out: *mut *mut QimgImage,
) -> QimgStatus {
    guard(|| {
        if pixels.is_null() {
            return Err(null("pixels"));
        }
        let data = std::slice::from_raw_parts(pixels, len).to_vec();
        let img = PixelImage::new(n, q, data)?;
        put(out, Box::into_raw(Box::new(QimgImage(img))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn qimg_image_free(img: *mut QimgImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Side length in pixels, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn qimg_image_side(img: *const QimgImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.side())
}

/// Colour depth in bits, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn qimg_image_depth(img: *const QimgImage) -> u32 {
    img.as_ref().map_or(0, |i| i.0.q())
}

/// Copies the pixels into `buf`, which must hold `side²` values.
#[no_mangle]
pub unsafe extern "C" fn qimg_image_pixels(img: *const QimgImage, buf: *mut u32, len: usize) -> QimgStatus {
    guard(|| {
        let img = image_ref(img)?;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let px = img.pixels();
        if len < px.len() {
            return Err(Fail(
                QimgStatus::InvalidArgument,
                format!("buffer holds {len} pixels, image has {}", px.len()),
            ));
        }
        ptr::copy_nonoverlapping(px.as_ptr(), buf, px.len());
        Ok(())
    })
}

/// Synthesizes a preparation circuit. For [`QimgScheme::Qjpeg`] this is the
/// whole four-stage pipeline circuit.
#[no_mangle]
pub unsafe extern "C" fn qimg_prepare(
    img: *const QimgImage,
    scheme: QimgScheme,
    out: *mut *mut QimgCircuit,
) -> QimgStatus {
    guard(|| {
        let img = image_ref(img)?;
        let c = match scheme {
            QimgScheme::Plain => prepare_uncompressed(img),
            QimgScheme::Bec => bec_compress(&prepare_uncompressed(img), GqirLayout::for_image(img))?.0,
            QimgScheme::Qjpeg => {
                let qm = QuantMatrix::standard();
                let coeffs = qimg::qjpeg::CoeffRegisterImage::from_image(img, &qm)?;
                let table = qimg::qjpeg::CosTable::new(img.q())?;
                qimg::qjpeg::PipelineCircuits::synthesize(&coeffs, &qm, &table)?.full()
            }
        };
        put(out, Box::into_raw(Box::new(QimgCircuit(c))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn qimg_circuit_free(c: *mut QimgCircuit) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

#[no_mangle]
pub unsafe extern "C" fn qimg_circuit_tally(c: *const QimgCircuit, out: *mut QimgTally) -> QimgStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("circuit"))?;
        let t = c.0.tally();
        put(
            out,
            QimgTally {
                hadamard: t.hadamard,
                mcx: t.mcx_total(),
                muler: t.muler_total(),
                adder: t.adder.values().sum(),
                adder_reversed: t.adder_reversed.values().sum(),
                elementary_cost: t.elementary_cost(),
            },
        )
    })
}

/// Circuit in the line-oriented text format; free with [`qimg_string_free`].
#[no_mangle]
pub unsafe extern "C" fn qimg_circuit_to_text(c: *const QimgCircuit, out: *mut *mut c_char) -> QimgStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("circuit"))?;
        let s = CString::new(to_text(&c.0)).expect("circuit text has no nul bytes");
        put(out, s.into_raw())
    })
}

#[no_mangle]
pub unsafe extern "C" fn qimg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs the JPEG pipeline and returns the recovered image and its PSNR
/// against the input. Either output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn qimg_run_pipeline(
    img: *const QimgImage,
    recovered: *mut *mut QimgImage,
    psnr_db: *mut f64,
) -> QimgStatus {
    guard(|| {
        let img = image_ref(img)?;
        let out = run_pipeline(img, &QuantMatrix::standard(), TraceDetail::Summary)?;
        if !psnr_db.is_null() {
            psnr_db.write(psnr(img, &out.recovered)?);
        }
        if !recovered.is_null() {
            recovered.write(Box::into_raw(Box::new(QimgImage(out.recovered))));
        }
        Ok(())
    })
}

/// PSNR in dB; infinite for identical images.
#[no_mangle]
pub unsafe extern "C" fn qimg_psnr(a: *const QimgImage, b: *const QimgImage, out: *mut f64) -> QimgStatus {
    guard(|| {
        let v = psnr(image_ref(a)?, image_ref(b)?)?;
        put(out, v)
    })
}

#[no_mangle]
pub unsafe extern "C" fn qimg_analytic_costs(
    n: u32,
    q: u32,
    r_j: f64,
    out: *mut QimgCostReport,
) -> QimgStatus {
    guard(|| {
        let c = analytic_costs(n, q, r_j)?;
        put(
            out,
            QimgCostReport {
                n: c.n,
                q: c.q,
                r_j: c.r_j,
                c: c.c,
                c2: c.c2,
                c3: c.c3,
                c4: c.c4,
                c5: c.c5,
                total: c.total,
                a: c.a,
                b: c.b,
                m: c.m,
                r: c.r,
            },
        )
    })
}

/// Smallest size exponent at which the JPEG scheme beats plain preparation.
#[no_mangle]
pub unsafe extern "C" fn qimg_min_n(q: u32, out: *mut u32) -> QimgStatus {
    guard(|| put(out, min_n(q)?))
}

/// Measured JPEG bit ratio. `defined` is set to false, and `out` left
/// untouched, for an image with no set pixel bits.
#[no_mangle]
pub unsafe extern "C" fn qimg_measured_rj(
    img: *const QimgImage,
    out: *mut f64,
    defined: *mut bool,
) -> QimgStatus {
    guard(|| {
        let r = measured_r_j(image_ref(img)?, &QuantMatrix::standard())?;
        if let Some(v) = r {
            put(out, v)?;
        }
        put(defined, r.is_some())
    })
}
