use super::conv::{self, ConvArch, ForwardCache, Planes};
use super::{ConvRestorer, LossNorm, Restorer};
use crate::degradation::DegradationOp;
use crate::error::{Error, Result};
use crate::numerics::ComplexImage;

fn check_train_step(t: usize, steps: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidInput("training step t must be >= 1 (t = 0 is the identity)".into()));
    }
    if t > steps {
        return Err(Error::Index { index: t, max: steps });
    }
    Ok(())
}

/// Per-element loss between a prediction and the truth over the (re, im)
/// encoding, i.e. averaged over `2 * H * W` values.
pub(crate) fn elementwise_loss(pred: &ComplexImage, truth: &ComplexImage, norm: LossNorm) -> f64 {
    let n = (2 * truth.data().len()) as f64;
    let sum: f64 = pred
        .data()
        .iter()
        .zip(truth.data())
        .map(|(p, q)| {
            let d = p - q;
            match norm {
                LossNorm::L1 => d.re.abs() + d.im.abs(),
                LossNorm::L2 => d.re * d.re + d.im * d.im,
            }
        })
        .sum();
    sum / n
}

/// `|| R(D(x_true, t), t) - x_true ||` for any restorer.
pub fn training_loss(
    restorer: &dyn Restorer,
    x_true: &ComplexImage,
    t: usize,
    op: &DegradationOp<'_>,
    norm: LossNorm,
) -> Result<f64> {
    check_train_step(t, op.steps())?;
    let x_t = op.degrade(x_true, t)?;
    let pred = restorer.restore(&x_t, t)?;
    Ok(elementwise_loss(&pred, x_true, norm))
}

struct Recorded {
    params: Vec<f64>,
    cache: ForwardCache,
    x_t: ComplexImage,
    x_true: ComplexImage,
}

/// Records one forward evaluation of the training loss so its gradient can
/// be taken with [`LossTape::backward`].
pub struct LossTape {
    arch: ConvArch,
    norm: LossNorm,
    recorded: Option<Recorded>,
}

impl LossTape {
    pub fn new(arch: ConvArch, norm: LossNorm) -> Self {
        Self {
            arch,
            norm,
            recorded: None,
        }
    }

    /// Loss of `x_t + net(x_t, time)` against `x_true` with f64 parameters.
    pub fn forward(&mut self, params: &[f64], x_t: &ComplexImage, time: f64, x_true: &ComplexImage) -> Result<f64> {
        conv::check_params(&self.arch, params)?;
        x_t.ensure_same_shape(x_true)?;
        let cache = conv::forward(&self.arch, params, conv::encode(x_t, time), true);
        let pred = conv::apply_residual(x_t, &cache.output);
        let loss = elementwise_loss(&pred, x_true, self.norm);
        self.recorded = Some(Recorded {
            params: params.to_vec(),
            cache,
            x_t: x_t.clone(),
            x_true: x_true.clone(),
        });
        Ok(loss)
    }

    /// Degrades `x_true` to step `t` and records the restorer's loss.
    pub fn forward_restorer(
        &mut self,
        restorer: &ConvRestorer,
        x_true: &ComplexImage,
        t: usize,
        op: &DegradationOp<'_>,
    ) -> Result<f64> {
        check_train_step(t, op.steps())?;
        let x_t = op.degrade(x_true, t)?;
        restorer.check_input(&x_t, t)?;
        self.forward(&restorer.params_f64(), &x_t, restorer.time_value(t), x_true)
    }

    /// Exact gradient of the last recorded loss w.r.t. every parameter.
    /// Consumes the recording.
    pub fn backward(&mut self) -> Result<Vec<f64>> {
        let rec = self
            .recorded
            .take()
            .ok_or_else(|| Error::State("backward called before forward".into()))?;
        let (h, w) = rec.x_t.shape();
        let n = h * w;
        let count = (2 * n) as f64;
        let mut grad = vec![0.0; 2 * n];
        for i in 0..n {
            let r = rec.x_t.data()[i].re + rec.cache.output.data[i] - rec.x_true.data()[i].re;
            let m = rec.x_t.data()[i].im + rec.cache.output.data[n + i] - rec.x_true.data()[i].im;
            let (gr, gm) = match self.norm {
                LossNorm::L1 => (sign(r), sign(m)),
                LossNorm::L2 => (2.0 * r, 2.0 * m),
            };
            grad[i] = gr / count;
            grad[n + i] = gm / count;
        }
        let grad_out = Planes {
            channels: 2,
            height: h,
            width: w,
            data: grad,
        };
        Ok(conv::backward(&self.arch, &rec.params, &rec.cache, grad_out))
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degradation::mask_columns;
    use crate::mask::MaskFamily;
    use crate::numerics::{fft2_centered, ifft2_centered, Complex64};
    use crate::restorer::OracleRestorer;
    use crate::schedule::{ScheduleKind, ScheduleSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> ComplexImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexImage::from_fn(h, w, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap()
    }

    fn family(width: usize) -> MaskFamily {
        MaskFamily::build_default(ScheduleSpec::new(ScheduleKind::Linear, 10, 0.2).unwrap(), width, 3).unwrap()
    }

    /// Image whose spectrum lives only on the columns of `M_t`.
    fn band_limited(fam: &MaskFamily, t: usize, seed: u64) -> ComplexImage {
        let mut k = fft2_centered(&random_image(8, fam.width(), seed)).unwrap();
        let m = fam.mask(t).unwrap();
        mask_columns(&mut k, |c| m.is_selected(c));
        ifft2_centered(&k).unwrap()
    }

    #[test]
    fn oracle_has_zero_loss() {
        let fam = family(8);
        let op = DegradationOp::new(&fam);
        let x = random_image(8, 8, 1);
        let oracle = OracleRestorer::new(x.clone());
        assert_eq!(training_loss(&oracle, &x, 4, &op, LossNorm::L1).unwrap(), 0.0);
    }

    #[test]
    fn identity_on_band_limited_input() {
        let fam = family(8);
        let op = DegradationOp::new(&fam);
        let x = band_limited(&fam, 6, 2);
        let r = ConvRestorer::zeros(ConvArch::new(4, 2).unwrap(), 10, 8);
        let loss = training_loss(&r, &x, 6, &op, LossNorm::L2).unwrap();
        assert!(loss < 1e-28);
    }

    #[test]
    fn zero_net_l2_loss_is_masked_out_energy() {
        let fam = family(16);
        let op = DegradationOp::new(&fam);
        let x = random_image(16, 16, 3);
        let r = ConvRestorer::zeros(ConvArch::default(), 10, 16);
        let t = 7;
        // energy of F^-1 (I - M_t) F x, averaged over 2*H*W entries
        let mut k = fft2_centered(&x).unwrap();
        let m = fam.mask(t).unwrap();
        mask_columns(&mut k, |c| !m.is_selected(c));
        let lost = ifft2_centered(&k).unwrap();
        let expected = lost.norm_l2().powi(2) / (2.0 * 256.0);
        let loss = training_loss(&r, &x, t, &op, LossNorm::L2).unwrap();
        assert!((loss - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn rejects_step_zero() {
        let fam = family(8);
        let op = DegradationOp::new(&fam);
        let x = random_image(8, 8, 1);
        assert!(training_loss(&ZeroFill, &x, 0, &op, LossNorm::L1).is_err());
    }

    use crate::restorer::ZeroFillRestorer as ZeroFill;

    #[test]
    fn backward_before_forward() {
        let mut tape = LossTape::new(ConvArch::default(), LossNorm::L2);
        assert!(matches!(tape.backward(), Err(Error::State(_))));
    }

    #[test]
    fn zero_residual_has_zero_gradient() {
        let fam = family(8);
        let op = DegradationOp::new(&fam);
        let x = band_limited(&fam, 5, 4);
        let r = ConvRestorer::zeros(ConvArch::new(4, 3).unwrap(), 10, 8);
        // L1 only: the residual is round-off, whose sign is arbitrary
        let mut tape = LossTape::new(r.arch(), LossNorm::L1);
        assert!(tape.forward_restorer(&r, &x, 5, &op).unwrap() < 1e-14);
        let mut tape = LossTape::new(r.arch(), LossNorm::L2);
        tape.forward_restorer(&r, &x, 5, &op).unwrap();
        let g = tape.backward().unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn output_bias_gradient_by_hand() {
        // theta = 0, L2: dL/db_c = (1/(H*W)) * sum over pixels of (x_t - x_true) in channel c
        let fam = MaskFamily::build_default(ScheduleSpec::new(ScheduleKind::Linear, 4, 0.25).unwrap(), 4, 1).unwrap();
        let op = DegradationOp::new(&fam);
        let x = random_image(4, 4, 9);
        let arch = ConvArch::new(3, 2).unwrap();
        let r = ConvRestorer::zeros(arch, 4, 4);
        let mut tape = LossTape::new(arch, LossNorm::L2);
        tape.forward_restorer(&r, &x, 3, &op).unwrap();
        let g = tape.backward().unwrap();
        let x_t = op.degrade(&x, 3).unwrap();
        let (mut sr, mut si) = (0.0, 0.0);
        for (a, b) in x_t.data().iter().zip(x.data()) {
            sr += a.re - b.re;
            si += a.im - b.im;
        }
        let n = g.len();
        assert!((g[n - 2] - sr / 16.0).abs() < 1e-14);
        assert!((g[n - 1] - si / 16.0).abs() < 1e-14);
        // hidden activations are zero, so only the output bias moves
        assert!(g[..n - 2].iter().all(|v| *v == 0.0));
    }
}
