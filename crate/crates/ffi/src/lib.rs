//! C ABI over the `cdiffmr` library.
//!
//! Objects are opaque heap handles created by `cdm_*_new`/`load`/`build`
//! functions and released with the matching `cdm_*_free`. Every fallible
//! function returns a [`CdmStatus`]; on failure the message is available
//! from [`cdm_last_error`] on the same thread until the next failing call.
//! Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cdiffmr::mask::{gen_task_mask, ColumnMask, MaskFamily};
use cdiffmr::numerics::{Complex64, ComplexImage};
use cdiffmr::phantom::{gen_phantom, PhantomSpec};
use cdiffmr::restorer::{ModelCheckpoint, OracleRestorer, Restorer, ZeroFillRestorer};
use cdiffmr::sampler::{reconstruct, ReverseRunConfig};
use cdiffmr::schedule::{ScheduleKind, ScheduleSpec};
use cdiffmr::{degradation::measure, io, metrics, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    ShapeMismatch = 3,
    IndexOutOfRange = 4,
    UnsupportedRate = 5,
    Config = 6,
    Format = 7,
    Io = 8,
    Diverged = 9,
    Internal = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdmScheduleKind {
    Linear = 0,
    Log = 1,
}

impl From<CdmScheduleKind> for ScheduleKind {
    fn from(k: CdmScheduleKind) -> Self {
        match k {
            CdmScheduleKind::Linear => ScheduleKind::Linear,
            CdmScheduleKind::Log => ScheduleKind::Log,
        }
    }
}

/// Sampler switches. `start_override` 0 means "use the located start".
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CdmReconOptions {
    pub use_spc: bool,
    pub use_dcc: bool,
    pub terminal_dc: bool,
    pub start_override: u32,
}

pub struct CdmImage(ComplexImage);
pub struct CdmMask(ColumnMask);
pub struct CdmFamily(MaskFamily);
pub struct CdmRestorer(Box<dyn Restorer>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CdmStatus {
    match e {
        Error::InvalidInput(_) | Error::DegenerateReference | Error::State(_) => CdmStatus::InvalidInput,
        Error::Shape { .. } => CdmStatus::ShapeMismatch,
        Error::Index { .. } => CdmStatus::IndexOutOfRange,
        Error::UnsupportedRate { .. } => CdmStatus::UnsupportedRate,
        Error::Config(_) => CdmStatus::Config,
        Error::Format { .. } => CdmStatus::Format,
        Error::Io { .. } => CdmStatus::Io,
        Error::Diverged { .. } => CdmStatus::Diverged,
    }
}

struct Fail(CdmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CdmStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CdmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdmStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CdmStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    put(out, Box::into_raw(Box::new(value)), "output handle")
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(String::from)
        .map_err(|_| Fail(CdmStatus::InvalidInput, "path is not UTF-8".into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cdm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cdm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn cdm_recon_options_default() -> CdmReconOptions {
    CdmReconOptions {
        use_spc: true,
        use_dcc: true,
        terminal_dc: true,
        start_override: 0,
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_sampling_rate(kind: CdmScheduleKind, steps: u32, sr_min: f64, t: u32, out: *mut f64) -> CdmStatus {
    guard(|| {
        let spec = ScheduleSpec::new(kind.into(), steps as usize, sr_min)?;
        put(out, spec.sampling_rate(t as usize)?, "out")
    })
}

/// Smallest step whose sampling rate does not exceed `task_sr`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_locate_start_step(
    kind: CdmScheduleKind,
    steps: u32,
    sr_min: f64,
    task_sr: f64,
    out: *mut u32,
) -> CdmStatus {
    guard(|| {
        let spec = ScheduleSpec::new(kind.into(), steps as usize, sr_min)?;
        put(out, spec.locate_start_step(task_sr)? as u32, "out")
    })
}

/// Image from `height * width` interleaved (re, im) pairs, row-major.
///
/// # Safety
/// `data` must point to `2 * height * width` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_image_new(height: u32, width: u32, data: *const f64, out: *mut *mut CdmImage) -> CdmStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let n = (height as usize)
            .checked_mul(width as usize)
            .ok_or_else(|| Fail(CdmStatus::InvalidInput, "image too large".into()))?;
        let raw = std::slice::from_raw_parts(data, 2 * n);
        let pixels = raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        let img = ComplexImage::from_vec(height as usize, width as usize, pixels)?;
        put_box(out, CdmImage(img))
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_phantom(size: u32, n_ellipses: u32, seed: u64, phase_order: u32, out: *mut *mut CdmImage) -> CdmStatus {
    guard(|| {
        let img = gen_phantom(&PhantomSpec::new(size as usize, n_ellipses as usize, seed, phase_order as usize))?;
        put_box(out, CdmImage(img))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_image_read(path: *const c_char, out: *mut *mut CdmImage) -> CdmStatus {
    guard(|| put_box(out, CdmImage(io::read_image(path_arg(path)?)?)))
}

/// # Safety
/// `img` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cdm_image_write(img: *const CdmImage, path: *const c_char) -> CdmStatus {
    guard(|| Ok(io::write_image(path_arg(path)?, &deref(img, "image")?.0)?))
}

/// # Safety
/// `img` must be a live handle; `height` and `width` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_image_shape(img: *const CdmImage, height: *mut u32, width: *mut u32) -> CdmStatus {
    guard(|| {
        let (h, w) = deref(img, "image")?.0.shape();
        put(height, h as u32, "height")?;
        put(width, w as u32, "width")
    })
}

/// Copies interleaved (re, im) pixels into `data`, which holds `len` doubles.
///
/// # Safety
/// `img` must be a live handle; `data` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_image_copy(img: *const CdmImage, data: *mut f64, len: usize) -> CdmStatus {
    guard(|| {
        let img = &deref(img, "image")?.0;
        if data.is_null() {
            return Err(null("data"));
        }
        let need = 2 * img.data().len();
        if len < need {
            return Err(Fail(CdmStatus::ShapeMismatch, format!("buffer holds {len} doubles, image needs {need}")));
        }
        let dst = std::slice::from_raw_parts_mut(data, need);
        for (pair, z) in dst.chunks_exact_mut(2).zip(img.data()) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `img` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cdm_image_free(img: *mut CdmImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Centre block plus seeded random columns up to `round(width / af)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_mask_generate(width: u32, af: f64, center_fraction: f64, seed: u64, out: *mut *mut CdmMask) -> CdmStatus {
    guard(|| put_box(out, CdmMask(gen_task_mask(width as usize, af, center_fraction, seed)?)))
}

/// Mask from `width` bytes, nonzero meaning selected.
///
/// # Safety
/// `selected` must point to `width` bytes; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_mask_from_selection(selected: *const u8, width: u32, out: *mut *mut CdmMask) -> CdmStatus {
    guard(|| {
        if selected.is_null() {
            return Err(null("selected"));
        }
        let sel = std::slice::from_raw_parts(selected, width as usize).iter().map(|&b| b != 0).collect();
        put_box(out, CdmMask(ColumnMask::from_selection(sel)?))
    })
}

/// # Safety
/// `mask` must be a live handle; `count` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_mask_count(mask: *const CdmMask, count: *mut u32) -> CdmStatus {
    guard(|| put(count, deref(mask, "mask")?.0.count() as u32, "count"))
}

/// # Safety
/// `mask` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cdm_mask_free(mask: *mut CdmMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// Nested mask family. `center_fraction <= 0` selects a one-column centre.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_family_build(
    kind: CdmScheduleKind,
    steps: u32,
    sr_min: f64,
    width: u32,
    center_fraction: f64,
    seed: u64,
    out: *mut *mut CdmFamily,
) -> CdmStatus {
    guard(|| {
        let spec = ScheduleSpec::new(kind.into(), steps as usize, sr_min)?;
        let fam = if center_fraction <= 0.0 {
            MaskFamily::build_default(spec, width as usize, seed)?
        } else {
            MaskFamily::build(spec, width as usize, center_fraction, seed)?
        };
        put_box(out, CdmFamily(fam))
    })
}

/// The family's own mask at the start step for `af`.
///
/// # Safety
/// `family` must be a live handle; `step` and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_family_snapped_mask(family: *const CdmFamily, af: f64, step: *mut u32, out: *mut *mut CdmMask) -> CdmStatus {
    guard(|| {
        let (t, mask) = deref(family, "family")?.0.snapped_task_mask(af)?;
        if step.is_null() || out.is_null() {
            return Err(null("output"));
        }
        put(step, t as u32, "step")?;
        put_box(out, CdmMask(mask))
    })
}

/// # Safety
/// `family` and `mask` must be live handles; `step` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_family_start_step(family: *const CdmFamily, mask: *const CdmMask, step: *mut u32) -> CdmStatus {
    guard(|| {
        let t = deref(family, "family")?.0.start_step_for(&deref(mask, "mask")?.0)?;
        put(step, t as u32, "step")
    })
}

/// # Safety
/// `family` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cdm_family_free(family: *mut CdmFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Loads a trained restorer; if `family` is non-null it receives the mask
/// family the restorer was trained with.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for writes; `family`
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_restorer_load(path: *const c_char, out: *mut *mut CdmRestorer, family: *mut *mut CdmFamily) -> CdmStatus {
    guard(|| {
        let ckpt = ModelCheckpoint::load(path_arg(path)?)?;
        let restorer = ckpt.restorer()?;
        let fam = if family.is_null() { None } else { Some(ckpt.metadata.family()?) };
        if out.is_null() {
            return Err(null("output handle"));
        }
        put_box(out, CdmRestorer(Box::new(restorer)))?;
        if let Some(f) = fam {
            put_box(family, CdmFamily(f))?;
        }
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_restorer_zerofill(out: *mut *mut CdmRestorer) -> CdmStatus {
    guard(|| put_box(out, CdmRestorer(Box::new(ZeroFillRestorer))))
}

/// Restorer that always returns a copy of `truth`.
///
/// # Safety
/// `truth` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_restorer_oracle(truth: *const CdmImage, out: *mut *mut CdmRestorer) -> CdmStatus {
    guard(|| {
        let truth = deref(truth, "truth")?.0.clone();
        put_box(out, CdmRestorer(Box::new(OracleRestorer::new(truth))))
    })
}

/// # Safety
/// `restorer` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cdm_restorer_free(restorer: *mut CdmRestorer) {
    if !restorer.is_null() {
        drop(Box::from_raw(restorer));
    }
}

/// Synthesizes measurements `M F truth` and runs the reverse process.
/// `steps` (may be null) receives the number of reverse steps taken.
///
/// # Safety
/// All handles must be live; `options` null (defaults) or valid; `out` valid
/// for writes; `steps` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_reconstruct(
    truth: *const CdmImage,
    mask: *const CdmMask,
    family: *const CdmFamily,
    restorer: *const CdmRestorer,
    options: *const CdmReconOptions,
    out: *mut *mut CdmImage,
    steps: *mut u32,
) -> CdmStatus {
    guard(|| {
        let truth = &deref(truth, "truth")?.0;
        let mask = &deref(mask, "mask")?.0;
        let family = &deref(family, "family")?.0;
        let restorer = &deref(restorer, "restorer")?.0;
        let opts = options.as_ref().copied().unwrap_or_else(|| cdm_recon_options_default());
        if out.is_null() {
            return Err(null("output handle"));
        }
        let y = measure(truth, mask)?;
        let cfg = ReverseRunConfig {
            use_spc: opts.use_spc,
            use_dcc: opts.use_dcc,
            terminal_dc: opts.terminal_dc,
            start_override: (opts.start_override > 0).then_some(opts.start_override as usize),
            ..ReverseRunConfig::new(mask, family)
        };
        let (x, trace) = reconstruct(&y, restorer.as_ref(), &cfg)?;
        if !steps.is_null() {
            steps.write(trace.len() as u32);
        }
        put_box(out, CdmImage(x))
    })
}

/// # Safety
/// Both handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_psnr(recon: *const CdmImage, truth: *const CdmImage, out: *mut f64) -> CdmStatus {
    guard(|| put(out, metrics::psnr(&deref(recon, "recon")?.0, &deref(truth, "truth")?.0)?, "out"))
}

/// # Safety
/// Both handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cdm_ssim(recon: *const CdmImage, truth: *const CdmImage, out: *mut f64) -> CdmStatus {
    guard(|| put(out, metrics::ssim(&deref(recon, "recon")?.0, &deref(truth, "truth")?.0)?, "out"))
}
