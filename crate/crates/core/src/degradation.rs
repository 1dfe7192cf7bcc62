//! k-space undersampling degradation `D(x, t) = F^-1 M_t F x`.

use crate::error::{Error, Result};
use crate::mask::{ColumnMask, MaskFamily};
use crate::numerics::{fft2_centered, ifft2_centered, Complex64, ComplexImage, KSpace};

/// Zeroes every column of `k` for which `keep(col)` is false.
pub(crate) fn mask_columns(k: &mut KSpace, keep: impl Fn(usize) -> bool) {
    let width = k.width();
    let zero = Complex64::new(0.0, 0.0);
    for (i, z) in k.data_mut().iter_mut().enumerate() {
        if !keep(i % width) {
            *z = zero;
        }
    }
}

fn check_width(x_width: usize, mask_width: usize) -> Result<()> {
    if x_width != mask_width {
        return Err(Error::shape(format!("image width {mask_width}"), format!("image width {x_width}")));
    }
    Ok(())
}

/// Applies an arbitrary column mask in k-space and returns to image space.
pub fn degrade_with_mask(x: &ComplexImage, mask: &ColumnMask) -> Result<ComplexImage> {
    check_width(x.width(), mask.width())?;
    let mut k = fft2_centered(x)?;
    mask_columns(&mut k, |c| mask.is_selected(c));
    ifft2_centered(&k)
}

/// Masked spectrum `M F x`, used to synthesize measurements.
pub fn measure(x: &ComplexImage, mask: &ColumnMask) -> Result<KSpace> {
    check_width(x.width(), mask.width())?;
    let mut k = fft2_centered(x)?;
    mask_columns(&mut k, |c| mask.is_selected(c));
    Ok(k)
}

/// The forward process over one nested mask family.
#[derive(Debug, Clone, Copy)]
pub struct DegradationOp<'a> {
    family: &'a MaskFamily,
}

impl<'a> DegradationOp<'a> {
    pub fn new(family: &'a MaskFamily) -> Self {
        Self { family }
    }

    pub fn family(&self) -> &'a MaskFamily {
        self.family
    }

    pub fn steps(&self) -> usize {
        self.family.steps()
    }

    pub fn degrade(&self, x: &ComplexImage, t: usize) -> Result<ComplexImage> {
        let mask = self.family.mask(t)?;
        degrade_with_mask(x, mask)
    }

    /// `D(x, t-1) - D(x, t)`: the columns kept at `t-1` but dropped at `t`.
    pub fn step_increment(&self, x: &ComplexImage, t: usize) -> Result<ComplexImage> {
        if t == 0 {
            return Err(Error::Index { index: 0, max: self.steps() });
        }
        let (newer, older) = (self.family.mask(t)?, self.family.mask(t - 1)?);
        check_width(x.width(), newer.width())?;
        let mut k = fft2_centered(x)?;
        mask_columns(&mut k, |c| older.is_selected(c) && !newer.is_selected(c));
        ifft2_centered(&k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rel_l2_error;
    use crate::schedule::{ScheduleKind, ScheduleSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> ComplexImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexImage::from_fn(h, w, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap()
    }

    fn family(width: usize) -> MaskFamily {
        let spec = ScheduleSpec::new(ScheduleKind::Linear, 10, 0.25).unwrap();
        MaskFamily::build_default(spec, width, 4).unwrap()
    }

    fn close(a: &ComplexImage, b: &ComplexImage, tol: f64) -> bool {
        let diff = (a - b).norm_l2();
        diff <= tol * b.norm_l2().max(1.0)
    }

    #[test]
    fn identity_at_step_zero() {
        let fam = family(8);
        let op = DegradationOp::new(&fam);
        let x = random_image(8, 8, 1);
        assert!(rel_l2_error(&op.degrade(&x, 0).unwrap(), &x).unwrap() < 1e-12);
    }

    #[test]
    fn idempotent_projection() {
        let fam = family(8);
        let op = DegradationOp::new(&fam);
        let x = random_image(8, 8, 2);
        for t in 0..=10 {
            let once = op.degrade(&x, t).unwrap();
            let twice = op.degrade(&once, t).unwrap();
            assert!(close(&twice, &once, 1e-12));
        }
    }

    #[test]
    fn composition_matches_brute_force_intersection() {
        let fam = family(8);
        let op = DegradationOp::new(&fam);
        let x = random_image(8, 8, 3);
        for s in 0..=10 {
            for t in 0..=10 {
                let composed = op.degrade(&op.degrade(&x, s).unwrap(), t).unwrap();
                // brute force: mask with the set intersection of M_s and M_t
                let (ms, mt) = (fam.mask(s).unwrap(), fam.mask(t).unwrap());
                let mut k = fft2_centered(&x).unwrap();
                mask_columns(&mut k, |c| ms.is_selected(c) && mt.is_selected(c));
                let brute = ifft2_centered(&k).unwrap();
                assert!(close(&composed, &brute, 1e-12));
                assert!(close(&composed, &op.degrade(&x, s.max(t)).unwrap(), 1e-12));
            }
        }
    }

    #[test]
    fn full_mask_is_identity_and_family_mask_matches() {
        let fam = family(8);
        let op = DegradationOp::new(&fam);
        let x = random_image(8, 8, 4);
        let full = ColumnMask::full(8).unwrap();
        assert!(rel_l2_error(&degrade_with_mask(&x, &full).unwrap(), &x).unwrap() < 1e-12);
        let m = fam.mask(6).unwrap();
        assert_eq!(degrade_with_mask(&x, m).unwrap(), op.degrade(&x, 6).unwrap());
    }

    #[test]
    fn non_expansive() {
        let x = random_image(16, 16, 5);
        let m = crate::mask::gen_task_mask(16, 4.0, 0.125, 0).unwrap();
        assert!(degrade_with_mask(&x, &m).unwrap().norm_l2() <= x.norm_l2());
    }

    #[test]
    fn errors() {
        let fam = family(8);
        let op = DegradationOp::new(&fam);
        let x = random_image(8, 8, 6);
        assert!(matches!(op.degrade(&x, 11), Err(Error::Index { .. })));
        let wide = random_image(8, 12, 6);
        assert!(matches!(op.degrade(&wide, 1), Err(Error::Shape { .. })));
        assert!(op.step_increment(&x, 0).is_err());
    }

    #[test]
    fn impulse_support_shrinks() {
        let fam = family(8);
        let op = DegradationOp::new(&fam);
        let mut x = ComplexImage::zeros(8, 8).unwrap();
        x.set(3, 5, Complex64::new(1.0, 0.0));
        for t in 0..10 {
            let a = fft2_centered(&op.degrade(&x, t).unwrap()).unwrap();
            let b = fft2_centered(&op.degrade(&x, t + 1).unwrap()).unwrap();
            for (za, zb) in a.data().iter().zip(b.data()) {
                if zb.norm() > 1e-12 {
                    assert!(za.norm() > 1e-12);
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn linear(seed in any::<u64>(), t in 0usize..=10, a in -2.0..2.0f64, b in -2.0..2.0f64) {
                let fam = family(8);
                let op = DegradationOp::new(&fam);
                let x = random_image(8, 8, seed);
                let z = random_image(8, 8, seed ^ 0xabc);
                let (a, b) = (Complex64::new(a, 0.1), Complex64::new(0.2, b));
                let lhs = op.degrade(&x.scale(a).axpy(b, &z).unwrap(), t).unwrap();
                let rhs = op.degrade(&x, t).unwrap().scale(a).axpy(b, &op.degrade(&z, t).unwrap()).unwrap();
                prop_assert!(close(&lhs, &rhs, 1e-12));
            }

            #[test]
            fn self_adjoint(seed in any::<u64>(), t in 0usize..=10) {
                let fam = family(8);
                let op = DegradationOp::new(&fam);
                let x = random_image(8, 8, seed);
                let z = random_image(8, 8, seed ^ 0x55);
                let lhs = op.degrade(&x, t).unwrap().inner(&z).unwrap();
                let rhs = x.inner(&op.degrade(&z, t).unwrap()).unwrap();
                prop_assert!((lhs - rhs).norm() <= 1e-12 * x.norm_l2() * z.norm_l2());
            }

            #[test]
            fn increment_is_difference(seed in any::<u64>(), t in 1usize..=10) {
                let fam = family(8);
                let op = DegradationOp::new(&fam);
                let x = random_image(8, 8, seed);
                let diff = &op.degrade(&x, t - 1).unwrap() - &op.degrade(&x, t).unwrap();
                prop_assert!(close(&op.step_increment(&x, t).unwrap(), &diff, 1e-12));
            }
        }
    }
}
