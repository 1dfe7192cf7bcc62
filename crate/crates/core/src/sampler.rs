//! Conditioned reverse process.
//!
//! Starting from the measured data at step `T'`, each step estimates the
//! clean image, optionally replaces its measured k-space columns with the
//! measurements, and moves to `t-1` via
//! `x_{t-1} = x_t - D(x0_hat, t) + D(x0_hat, t-1)`.

use std::fmt::Write as _;
use std::path::Path;

use crate::degradation::{mask_columns, DegradationOp};
use crate::error::{Error, Result};
use crate::io::{write_file, write_image};
use crate::mask::{ColumnMask, MaskFamily};
use crate::metrics::{psnr, ssim};
use crate::numerics::{fft2_centered, ifft2_centered, ComplexImage, KSpace};
use crate::restorer::Restorer;

#[derive(Debug, Clone, Copy)]
pub struct ReverseRunConfig<'a> {
    pub task_mask: &'a ColumnMask,
    pub family: &'a MaskFamily,
    pub use_spc: bool,
    pub use_dcc: bool,
    pub start_override: Option<usize>,
    pub terminal_dc: bool,
    pub record_trajectory: bool,
}

impl<'a> ReverseRunConfig<'a> {
    /// SPC, DCC and the terminal projection on; no override, no snapshots.
    pub fn new(task_mask: &'a ColumnMask, family: &'a MaskFamily) -> Self {
        Self {
            task_mask,
            family,
            use_spc: true,
            use_dcc: true,
            start_override: None,
            terminal_dc: true,
            record_trajectory: false,
        }
    }

    /// Start step located from the task mask's sampling rate.
    pub fn spc_start(&self) -> Result<usize> {
        self.family.start_step_for(self.task_mask)
    }

    /// Override if set, else the SPC start, else `T`.
    pub fn effective_start(&self) -> Result<usize> {
        let located = self.spc_start()?;
        let steps = self.family.steps();
        match self.start_override {
            Some(s) if s == 0 || s > steps => Err(Error::Config(format!("start override {s} outside [1, {steps}]"))),
            Some(s) => Ok(s),
            None if self.use_spc => Ok(located),
            None => Ok(steps),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    /// `||x0_hat - x0_hat'||_2`, zero when DCC is off.
    pub dcc_correction_l2: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ReverseTrace {
    pub start: usize,
    pub records: Vec<TraceRecord>,
    /// `x_{t-1}` after every step when trajectory recording is on.
    pub snapshots: Vec<ComplexImage>,
    pub warnings: Vec<String>,
}

impl ReverseTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,dcc_correction_l2\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{:?}", r.t, r.dcc_correction_l2);
        }
        out
    }

    /// Writes `trace.csv` and, when recorded, `snapshot_XXXX.cim` files.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        write_file(&dir.join("trace.csv"), self.to_csv().as_bytes())?;
        for (rec, snap) in self.records.iter().zip(&self.snapshots) {
            write_image(dir.join(format!("snapshot_{:04}.cim", rec.t - 1)), snap)?;
        }
        Ok(())
    }
}

fn check_measurement(y: &KSpace, mask: &ColumnMask) -> Result<()> {
    if y.width() != mask.width() {
        return Err(Error::shape(
            format!("k-space width {}", mask.width()),
            format!("k-space width {}", y.width()),
        ));
    }
    Ok(())
}

/// `F^-1 y`.
pub fn zero_filled_init(y: &KSpace) -> Result<ComplexImage> {
    ifft2_centered(y)
}

/// Spectrum equal to `y` on the mask's columns and to `F x0_hat'` elsewhere.
pub fn dcc_project(x0_hat_prime: &ComplexImage, y: &KSpace, mask: &ColumnMask) -> Result<ComplexImage> {
    check_measurement(y, mask)?;
    if x0_hat_prime.shape() != y.shape() {
        return Err(Error::shape(
            format!("{}x{}", y.height(), y.width()),
            format!("{}x{}", x0_hat_prime.height(), x0_hat_prime.width()),
        ));
    }
    let mut k = fft2_centered(x0_hat_prime)?;
    let width = k.width();
    for (i, (z, m)) in k.data_mut().iter_mut().zip(y.data()).enumerate() {
        if mask.is_selected(i % width) {
            *z = *m;
        }
    }
    ifft2_centered(&k)
}

/// `x_t - D(x0_hat, t) + D(x0_hat, t-1)`.
pub fn reverse_step(x_t: &ComplexImage, x0_hat: &ComplexImage, t: usize, op: &DegradationOp<'_>) -> Result<ComplexImage> {
    if t == 0 {
        return Err(Error::Index { index: 0, max: op.steps() });
    }
    x_t.ensure_same_shape(x0_hat)?;
    let increment = op.step_increment(x0_hat, t)?;
    Ok(&increment + x_t)
}

/// Runs the reverse process on measurements `y = M F x`.
///
/// The state starts at `F^-1 M_s y` for the effective start `s`. When the
/// task mask contains `M_s` (always the case for family masks, and at the
/// located start for any mask snapped to the family) this is exactly the
/// zero-filled image `F^-1 y` projected onto the start step's columns.
pub fn reconstruct(
    y: &KSpace,
    restorer: &dyn Restorer,
    cfg: &ReverseRunConfig<'_>,
) -> Result<(ComplexImage, ReverseTrace)> {
    check_measurement(y, cfg.task_mask)?;
    if cfg.family.width() != cfg.task_mask.width() {
        return Err(Error::shape(
            format!("family width {}", cfg.family.width()),
            format!("mask width {}", cfg.task_mask.width()),
        ));
    }
    let start = cfg.effective_start()?;
    let op = DegradationOp::new(cfg.family);
    let start_mask = cfg.family.mask(start)?;

    let mut trace = ReverseTrace {
        start,
        ..Default::default()
    };
    if !start_mask.is_subset_of(cfg.task_mask) && start_mask.count() <= cfg.task_mask.count() {
        trace.warnings.push(format!(
            "task mask does not contain the family mask at step {start}; exact recovery is not guaranteed"
        ));
    }

    let mut k0 = y.clone();
    mask_columns(&mut k0, |c| start_mask.is_selected(c));
    let mut x = zero_filled_init(&k0)?;

    for t in (1..=start).rev() {
        let estimate = restorer.restore(&x, t)?;
        let (estimate, correction) = if cfg.use_dcc {
            let projected = dcc_project(&estimate, y, cfg.task_mask)?;
            let correction = (&projected - &estimate).norm_l2();
            (projected, correction)
        } else {
            (estimate, 0.0)
        };
        x = reverse_step(&x, &estimate, t, &op)?;
        trace.records.push(TraceRecord {
            t,
            dcc_correction_l2: correction,
        });
        if cfg.record_trajectory {
            trace.snapshots.push(x.clone());
        }
    }

    if cfg.terminal_dc {
        x = dcc_project(&x, y, cfg.task_mask)?;
    }
    if !x.is_finite() {
        return Err(Error::InvalidInput("reverse process produced non-finite values".into()));
    }
    Ok((x, trace))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationRow {
    pub start: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub steps: usize,
}

/// Reconstructs once per start override and scores each result against `truth`.
pub fn ablate_start_point(
    y: &KSpace,
    truth: &ComplexImage,
    restorer: &dyn Restorer,
    cfg: &ReverseRunConfig<'_>,
    starts: &[usize],
) -> Result<Vec<AblationRow>> {
    starts
        .iter()
        .map(|&s| {
            let run = ReverseRunConfig {
                start_override: Some(s),
                record_trajectory: false,
                ..*cfg
            };
            let (x, trace) = reconstruct(y, restorer, &run)?;
            Ok(AblationRow {
                start: s,
                psnr: psnr(&x, truth)?,
                ssim: ssim(&x, truth)?,
                steps: trace.len(),
            })
        })
        .collect()
}
