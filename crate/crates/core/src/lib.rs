//! Cold diffusion MRI reconstruction.
//!
//! The forward process progressively drops k-space columns from a nested
//! family of Cartesian masks; a restorer estimates the fully sampled image
//! from a degraded one; the reverse process starts at the step matching the
//! task's sampling rate and re-inserts missing columns while keeping the
//! measured data consistent.

pub mod degradation;
pub mod cli;
pub mod error;
pub mod eval;
pub mod io;
pub mod mask;
pub mod metrics;
pub mod numerics;
pub mod phantom;
pub mod restorer;
pub mod sampler;
pub mod schedule;

pub use degradation::{degrade_with_mask, measure, DegradationOp};
pub use error::{Error, Result};
pub use mask::{build_mask_family, gen_task_mask, snap_to_family, ColumnMask, MaskFamily};
pub use metrics::{psnr, ssim};
pub use numerics::{fft2_centered, ifft2_centered, rel_l2_error, Complex64, ComplexImage, KSpace};
pub use schedule::{locate_start_step, sampling_rate, ScheduleKind, ScheduleSpec};
pub use phantom::{gen_dataset, gen_phantom, PhantomSpec};
pub use restorer::{ConvArch, ConvRestorer, LossNorm, OracleRestorer, Restorer, ZeroFillRestorer};
pub use sampler::{reconstruct, ReverseRunConfig, ReverseTrace};
