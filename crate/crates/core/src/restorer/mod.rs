//! De-aliasing restorers `R(x_t, t) ≈ x_0` and their training.

mod adam;
mod checkpoint;
pub mod conv;
mod loss;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::ComplexImage;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{ModelCheckpoint, TrainMetadata, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use conv::ConvArch;
pub use loss::{training_loss, LossTape};
pub use train::{train, LossRecord, TrainConfig, TrainRun, Trainer};

/// Estimates the fully sampled image from a degraded one at step `t`.
pub trait Restorer: Send + Sync {
    fn restore(&self, x_t: &ComplexImage, t: usize) -> Result<ComplexImage>;

    fn name(&self) -> &'static str;
}

/// Returns the ground truth it was built with.
#[derive(Debug, Clone)]
pub struct OracleRestorer {
    truth: ComplexImage,
}

impl OracleRestorer {
    pub fn new(truth: ComplexImage) -> Self {
        Self { truth }
    }
}

impl Restorer for OracleRestorer {
    fn restore(&self, x_t: &ComplexImage, _t: usize) -> Result<ComplexImage> {
        x_t.ensure_same_shape(&self.truth)?;
        Ok(self.truth.clone())
    }

    fn name(&self) -> &'static str {
        "oracle"
    }
}

/// Passes the aliased input through unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFillRestorer;

impl Restorer for ZeroFillRestorer {
    fn restore(&self, x_t: &ComplexImage, _t: usize) -> Result<ComplexImage> {
        Ok(x_t.clone())
    }

    fn name(&self) -> &'static str {
        "zerofill"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossNorm {
    #[default]
    L1,
    L2,
}

impl fmt::Display for LossNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossNorm::L1 => "l1",
            LossNorm::L2 => "l2",
        })
    }
}

impl FromStr for LossNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(LossNorm::L1),
            "l2" => Ok(LossNorm::L2),
            other => Err(Error::Config(format!("unknown loss norm '{other}' (expected l1 or l2)"))),
        }
    }
}

/// Trainable residual convolution restorer with f32 parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvRestorer {
    arch: ConvArch,
    params: Vec<f32>,
    steps: usize,
    width: usize,
}

impl ConvRestorer {
    /// All-zero parameters: the identity map.
    pub fn zeros(arch: ConvArch, steps: usize, width: usize) -> Self {
        Self {
            arch,
            params: vec![0.0; arch.param_count()],
            steps,
            width,
        }
    }

    /// Kaiming-uniform hidden layers (bound `sqrt(6 / fan_in)`), zero biases
    /// and a zero final layer, so the untrained restorer is the identity.
    pub fn init(arch: ConvArch, steps: usize, width: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(arch.param_count());
        let layers = arch.layers();
        for (l, &(cin, cout)) in layers.iter().enumerate() {
            let last = l + 1 == layers.len();
            let bound = (6.0 / (cin * 9) as f64).sqrt();
            for _ in 0..cout * cin * 9 {
                params.push(if last { 0.0 } else { rng.gen_range(-bound..bound) as f32 });
            }
            params.extend(std::iter::repeat(0.0f32).take(cout));
        }
        Self {
            arch,
            params,
            steps,
            width,
        }
    }

    /// Seeded uniform parameters in `[-scale, scale]` on every layer.
    pub fn random(arch: ConvArch, steps: usize, width: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..arch.param_count())
            .map(|_| rng.gen_range(-scale..scale) as f32)
            .collect();
        Self {
            arch,
            params,
            steps,
            width,
        }
    }

    pub fn from_params(arch: ConvArch, params: Vec<f32>, steps: usize, width: usize) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(Error::shape(arch.param_count(), params.len()));
        }
        if steps == 0 {
            return Err(Error::Config("restorer needs a positive step count".into()));
        }
        Ok(Self {
            arch,
            params,
            steps,
            width,
        })
    }

    pub fn arch(&self) -> ConvArch {
        self.arch
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    pub fn params_f64(&self) -> Vec<f64> {
        self.params.iter().map(|&p| p as f64).collect()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Value of the constant time channel at step `t`.
    pub fn time_value(&self, t: usize) -> f64 {
        t as f64 / self.steps as f64
    }

    pub(crate) fn check_input(&self, x: &ComplexImage, t: usize) -> Result<()> {
        if x.width() != self.width {
            return Err(Error::shape(
                format!("image width {}", self.width),
                format!("image width {}", x.width()),
            ));
        }
        if t > self.steps {
            return Err(Error::Index { index: t, max: self.steps });
        }
        Ok(())
    }
}

impl Restorer for ConvRestorer {
    fn restore(&self, x_t: &ComplexImage, t: usize) -> Result<ComplexImage> {
        self.check_input(x_t, t)?;
        let params = self.params_f64();
        let cache = conv::forward(&self.arch, &params, conv::encode(x_t, self.time_value(t)), false);
        let out = conv::apply_residual(x_t, &cache.output);
        if !out.is_finite() {
            return Err(Error::InvalidInput("restorer produced non-finite output".into()));
        }
        Ok(out)
    }

    fn name(&self) -> &'static str {
        "conv"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Complex64;

    fn image(seed: u64) -> ComplexImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexImage::from_fn(8, 8, |_, _| Complex64::new(rng.gen_range(0.0..1.0), rng.gen_range(-0.5..0.5))).unwrap()
    }

    #[test]
    fn oracle_returns_truth() {
        let truth = image(1);
        let r = OracleRestorer::new(truth.clone());
        assert_eq!(r.restore(&image(2), 5).unwrap(), truth);
        let small = ComplexImage::zeros(4, 4).unwrap();
        assert!(r.restore(&small, 1).is_err());
    }

    #[test]
    fn zero_fill_is_passthrough() {
        let x = image(3);
        assert_eq!(ZeroFillRestorer.restore(&x, 9).unwrap(), x);
    }

    #[test]
    fn zero_params_are_identity() {
        let x = image(4);
        for arch in [ConvArch::new(4, 1).unwrap(), ConvArch::new(8, 3).unwrap()] {
            let r = ConvRestorer::zeros(arch, 100, 8);
            for t in [0, 1, 50, 100] {
                assert_eq!(r.restore(&x, t).unwrap(), x);
            }
        }
    }

    #[test]
    fn initialized_restorer_starts_at_identity() {
        let x = image(5);
        let r = ConvRestorer::init(ConvArch::default(), 100, 8, 1);
        assert_eq!(r.params().len(), ConvArch::default().param_count());
        assert_eq!(r.restore(&x, 30).unwrap(), x);
        assert!(r.params().iter().any(|&p| p != 0.0));
    }

    #[test]
    fn inference_is_deterministic_and_pure() {
        let x = image(6);
        let r = ConvRestorer::random(ConvArch::new(4, 3).unwrap(), 100, 8, 0.3, 2);
        let before = r.clone();
        let a = r.restore(&x, 17).unwrap();
        let b = r.restore(&x, 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(r, before);
        assert_ne!(a, r.restore(&x, 80).unwrap());
    }

    #[test]
    fn width_mismatch() {
        let r = ConvRestorer::zeros(ConvArch::default(), 100, 16);
        assert!(matches!(r.restore(&image(1), 3), Err(Error::Shape { .. })));
        let r = ConvRestorer::zeros(ConvArch::default(), 100, 8);
        assert!(matches!(r.restore(&image(1), 101), Err(Error::Index { .. })));
    }
}
