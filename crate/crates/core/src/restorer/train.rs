use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::checkpoint::{ModelCheckpoint, TrainMetadata};
use super::loss::LossTape;
use super::{ConvArch, ConvRestorer, LossNorm};
use crate::degradation::DegradationOp;
use crate::error::{Error, Result};
use crate::io::write_file;
use crate::mask::MaskFamily;
use crate::numerics::ComplexImage;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub arch: ConvArch,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub grad_steps: usize,
    pub loss_norm: LossNorm,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            arch: ConvArch::default(),
            learning_rate: 1e-3,
            batch_size: 8,
            grad_steps: 2000,
            loss_norm: LossNorm::L1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam().validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: usize,
    pub loss: f64,
}

/// Mean of the last `window` losses.
pub(crate) fn tail_mean(losses: &[LossRecord], window: usize) -> f64 {
    let tail = &losses[losses.len().saturating_sub(window)..];
    tail.iter().map(|r| r.loss).sum::<f64>() / tail.len() as f64
}

/// Minibatch Adam training of a [`ConvRestorer`] on `R(D(x, t), t) ≈ x`
/// with `t ~ Uniform{1..T}` and images drawn uniformly with replacement.
pub struct Trainer<'a> {
    dataset: &'a [ComplexImage],
    family: &'a MaskFamily,
    config: TrainConfig,
    restorer: ConvRestorer,
    adam: AdamState,
    rng: ChaCha8Rng,
    losses: Vec<LossRecord>,
}

impl<'a> Trainer<'a> {
    pub fn new(dataset: &'a [ComplexImage], family: &'a MaskFamily, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let first = dataset
            .first()
            .ok_or_else(|| Error::InvalidInput("training dataset is empty".into()))?;
        for img in dataset {
            if img.width() != family.width() || img.shape() != first.shape() {
                return Err(Error::shape(
                    format!("{}x{}", first.height(), family.width()),
                    format!("{}x{}", img.height(), img.width()),
                ));
            }
        }
        let restorer = ConvRestorer::init(config.arch, family.steps(), family.width(), config.seed);
        Ok(Self {
            dataset,
            family,
            adam: AdamState::new(restorer.params().len()),
            // separate stream from the parameter initialization
            rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_ba7c_4e5u64),
            restorer,
            config,
            losses: Vec::new(),
        })
    }

    pub fn restorer(&self) -> &ConvRestorer {
        &self.restorer
    }

    pub fn losses(&self) -> &[LossRecord] {
        &self.losses
    }

    pub fn steps_done(&self) -> usize {
        self.losses.len()
    }

    /// One minibatch gradient step; returns the mean batch loss.
    pub fn step(&mut self) -> Result<f64> {
        let step = self.losses.len() + 1;
        let steps = self.family.steps();
        let picks: Vec<(usize, usize)> = (0..self.config.batch_size)
            .map(|_| (self.rng.gen_range(0..self.dataset.len()), self.rng.gen_range(1..=steps)))
            .collect();

        let op = DegradationOp::new(self.family);
        let restorer = &self.restorer;
        let params = restorer.params_f64();
        let norm = self.config.loss_norm;
        let arch = self.config.arch;
        let dataset = self.dataset;
        let per_sample = picks
            .par_iter()
            .map(|&(idx, t)| -> Result<(f64, Vec<f64>)> {
                let x_true = &dataset[idx];
                let x_t = op.degrade(x_true, t)?;
                let mut tape = LossTape::new(arch, norm);
                let loss = tape.forward(&params, &x_t, restorer.time_value(t), x_true)?;
                Ok((loss, tape.backward()?))
            })
            .collect::<Result<Vec<_>>>()?;

        // fixed-order reduction keeps runs bit-reproducible
        let scale = 1.0 / per_sample.len() as f64;
        let mut grads = vec![0.0; params.len()];
        let mut loss = 0.0;
        for (l, g) in &per_sample {
            loss += l;
            for (acc, v) in grads.iter_mut().zip(g) {
                *acc += v;
            }
        }
        loss *= scale;
        grads.iter_mut().for_each(|g| *g *= scale);
        if !loss.is_finite() {
            return Err(Error::Diverged {
                step,
                reason: format!("loss is {loss}"),
            });
        }
        adam_step(self.restorer.params_mut(), &grads, &mut self.adam, &self.config.adam()).map_err(|e| match e {
            Error::Diverged { reason, .. } => Error::Diverged { step, reason },
            other => other,
        })?;
        if self.restorer.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                step,
                reason: "non-finite parameters".into(),
            });
        }
        self.losses.push(LossRecord { step, loss });
        Ok(loss)
    }

    pub fn checkpoint(&self) -> ModelCheckpoint {
        let metadata = TrainMetadata {
            grad_steps: self.losses.len(),
            final_loss: self.losses.last().map_or(f64::NAN, |r| r.loss),
            schedule: *self.family.schedule(),
            width: self.family.width(),
            family_center_fraction: self.family.center_fraction(),
            family_seed: self.family.seed(),
            train_seed: self.config.seed,
            loss_norm: self.config.loss_norm,
            extra: BTreeMap::new(),
        };
        ModelCheckpoint::new(&self.restorer, metadata)
    }

    pub fn run(mut self) -> Result<TrainRun> {
        for _ in 0..self.config.grad_steps {
            self.step()?;
        }
        Ok(TrainRun {
            checkpoint: self.checkpoint(),
            losses: self.losses,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub checkpoint: ModelCheckpoint,
    pub losses: Vec<LossRecord>,
}

impl TrainRun {
    /// Mean loss over the first and last `window` steps.
    pub fn initial_and_final_loss(&self, window: usize) -> Option<(f64, f64)> {
        if self.losses.is_empty() {
            return None;
        }
        let head = &self.losses[..window.min(self.losses.len())];
        let first = head.iter().map(|r| r.loss).sum::<f64>() / head.len() as f64;
        Some((first, tail_mean(&self.losses, window)))
    }

    pub fn loss_csv(&self) -> String {
        let mut out = String::from("step,loss\n");
        for r in &self.losses {
            let _ = writeln!(out, "{},{:?}", r.step, r.loss);
        }
        out
    }

    pub fn write_loss_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.loss_csv().as_bytes())
    }
}

pub fn train(dataset: &[ComplexImage], family: &MaskFamily, config: TrainConfig) -> Result<TrainRun> {
    Trainer::new(dataset, family, config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{gen_phantom, PhantomSpec};
    use crate::schedule::{ScheduleKind, ScheduleSpec};

    fn data(n: usize, size: usize) -> Vec<ComplexImage> {
        (0..n)
            .map(|i| gen_phantom(&PhantomSpec::new(size, 4, i as u64, 1)).unwrap())
            .collect()
    }

    fn small_config(steps: usize) -> TrainConfig {
        TrainConfig {
            arch: ConvArch::new(4, 2).unwrap(),
            grad_steps: steps,
            batch_size: 2,
            learning_rate: 5e-3,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn zero_steps_returns_initial_parameters() {
        let ds = data(2, 16);
        let fam = MaskFamily::build_default(ScheduleSpec::new(ScheduleKind::Log, 10, 0.1).unwrap(), 16, 1).unwrap();
        let cfg = small_config(0);
        let run = train(&ds, &fam, cfg.clone()).unwrap();
        let init = ConvRestorer::init(cfg.arch, 10, 16, cfg.seed);
        assert_eq!(run.checkpoint.params, init.params());
        assert!(run.losses.is_empty());
    }

    #[test]
    fn deterministic_and_logged() {
        let ds = data(3, 16);
        let fam = MaskFamily::build_default(ScheduleSpec::new(ScheduleKind::Linear, 10, 0.1).unwrap(), 16, 1).unwrap();
        let a = train(&ds, &fam, small_config(5)).unwrap();
        let b = train(&ds, &fam, small_config(5)).unwrap();
        assert_eq!(a.checkpoint.encode(), b.checkpoint.encode());
        assert_eq!(a.losses.len(), 5);
        assert!(a.loss_csv().starts_with("step,loss\n1,"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let fam = MaskFamily::build_default(ScheduleSpec::standard(ScheduleKind::Log), 16, 1).unwrap();
        assert!(train(&[], &fam, small_config(1)).is_err());
        let ds = data(1, 32);
        assert!(matches!(train(&ds, &fam, small_config(1)), Err(Error::Shape { .. })));
        let ds = data(1, 16);
        let cfg = TrainConfig {
            batch_size: 0,
            ..small_config(1)
        };
        assert!(train(&ds, &fam, cfg).is_err());
    }

    #[test]
    fn huge_learning_rate_reports_divergence_step() {
        let ds = data(2, 16);
        let fam = MaskFamily::build_default(ScheduleSpec::new(ScheduleKind::Linear, 10, 0.1).unwrap(), 16, 1).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e300,
            ..small_config(50)
        };
        match train(&ds, &fam, cfg) {
            Err(Error::Diverged { step, .. }) => assert!(step >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
