//! Complex images, centered k-space and unitary 2D Fourier transforms.
//!
//! Spectra are always stored DC-centered: the zero-frequency coefficient
//! lives at `(height / 2, width / 2)`. Both transform directions carry a
//! `1/sqrt(H*W)` factor, so `fft2_centered` is unitary and Parseval holds.

use std::cell::RefCell;
use std::ops::{Add, Mul, Sub};

use rustfft::{FftDirection, FftPlanner};

pub use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

macro_rules! grid_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            height: usize,
            width: usize,
            data: Vec<Complex64>,
        }

        impl $name {
            /// All-zero grid.
            pub fn zeros(height: usize, width: usize) -> Result<Self> {
                Self::from_vec(height, width, vec![Complex64::new(0.0, 0.0); height * width])
            }

            /// Wraps a row-major buffer. Fails on zero dimensions or a length mismatch.
            pub fn from_vec(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
                if height == 0 || width == 0 {
                    return Err(Error::InvalidInput(format!(
                        "dimensions must be positive, got {height}x{width}"
                    )));
                }
                if data.len() != height * width {
                    return Err(Error::shape(height * width, data.len()));
                }
                Ok(Self { height, width, data })
            }

            pub fn from_fn(
                height: usize,
                width: usize,
                mut f: impl FnMut(usize, usize) -> Complex64,
            ) -> Result<Self> {
                let mut data = Vec::with_capacity(height * width);
                for r in 0..height {
                    for c in 0..width {
                        data.push(f(r, c));
                    }
                }
                Self::from_vec(height, width, data)
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn width(&self) -> usize {
                self.width
            }

            pub fn shape(&self) -> (usize, usize) {
                (self.height, self.width)
            }

            pub fn data(&self) -> &[Complex64] {
                &self.data
            }

            pub fn data_mut(&mut self) -> &mut [Complex64] {
                &mut self.data
            }

            pub fn into_vec(self) -> Vec<Complex64> {
                self.data
            }

            pub fn get(&self, row: usize, col: usize) -> Complex64 {
                self.data[row * self.width + col]
            }

            pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
                self.data[row * self.width + col] = value;
            }

            pub fn is_finite(&self) -> bool {
                self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            }

            pub fn norm_l2(&self) -> f64 {
                self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
            }

            pub fn scale(&self, factor: Complex64) -> Self {
                Self {
                    height: self.height,
                    width: self.width,
                    data: self.data.iter().map(|z| z * factor).collect(),
                }
            }

            pub fn ensure_same_shape(&self, other: &Self) -> Result<()> {
                if self.shape() != other.shape() {
                    return Err(Error::shape(
                        format!("{}x{}", self.height, self.width),
                        format!("{}x{}", other.height, other.width),
                    ));
                }
                Ok(())
            }

            fn ensure_finite(&self) -> Result<()> {
                if self.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(concat!(stringify!($name), " contains non-finite values").into()))
                }
            }

            /// Elementwise `self + scale * other`, shapes must match.
            pub fn axpy(&self, scale: Complex64, other: &Self) -> Result<Self> {
                self.ensure_same_shape(other)?;
                let data = self
                    .data
                    .iter()
                    .zip(&other.data)
                    .map(|(a, b)| a + scale * b)
                    .collect();
                Ok(Self { height: self.height, width: self.width, data })
            }

            /// Hermitian inner product `<self, other> = sum(self * conj(other))`.
            pub fn inner(&self, other: &Self) -> Result<Complex64> {
                self.ensure_same_shape(other)?;
                Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum())
            }
        }

        impl Add for &$name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                self.axpy(Complex64::new(1.0, 0.0), rhs).expect("shape mismatch in add")
            }
        }

        impl Sub for &$name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                self.axpy(Complex64::new(-1.0, 0.0), rhs).expect("shape mismatch in sub")
            }
        }

        impl Mul<f64> for &$name {
            type Output = $name;
            fn mul(self, rhs: f64) -> $name {
                self.scale(Complex64::new(rhs, 0.0))
            }
        }
    };
}

grid_type!(
    /// H x W complex image in row-major order.
    ComplexImage
);

grid_type!(
    /// DC-centered 2D spectrum with the same layout contract as [`ComplexImage`].
    KSpace
);

impl ComplexImage {
    pub fn magnitude(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm()).collect()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalized DFT along both axes of a row-major buffer.
fn dft2_in_place(data: &mut [Complex64], height: usize, width: usize, direction: FftDirection) {
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let row_fft = planner.plan_fft(width, direction);
        row_fft.process(data);

        let col_fft = planner.plan_fft(height, direction);
        let mut column = vec![Complex64::new(0.0, 0.0); height];
        for c in 0..width {
            for r in 0..height {
                column[r] = data[r * width + c];
            }
            col_fft.process(&mut column);
            for r in 0..height {
                data[r * width + c] = column[r];
            }
        }
    });
}

/// Cyclic shift so that index `i` moves to `(i + shift) mod n` along both axes.
fn roll2(data: &[Complex64], height: usize, width: usize, shift_r: usize, shift_c: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..height {
        let dst_r = (r + shift_r) % height;
        for c in 0..width {
            let dst_c = (c + shift_c) % width;
            out[dst_r * width + dst_c] = data[r * width + c];
        }
    }
    out
}

fn centered_transform(
    data: &[Complex64],
    height: usize,
    width: usize,
    direction: FftDirection,
) -> Vec<Complex64> {
    // ifftshift, transform, fftshift
    let mut buf = roll2(data, height, width, height - height / 2, width - width / 2);
    dft2_in_place(&mut buf, height, width, direction);
    let norm = 1.0 / ((height * width) as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= norm);
    roll2(&buf, height, width, height / 2, width / 2)
}

/// Unitary, DC-centered forward 2D DFT.
pub fn fft2_centered(img: &ComplexImage) -> Result<KSpace> {
    img.ensure_finite()?;
    let data = centered_transform(&img.data, img.height, img.width, FftDirection::Forward);
    Ok(KSpace {
        height: img.height,
        width: img.width,
        data,
    })
}

/// Inverse of [`fft2_centered`] under the same normalization.
pub fn ifft2_centered(k: &KSpace) -> Result<ComplexImage> {
    k.ensure_finite()?;
    let data = centered_transform(&k.data, k.height, k.width, FftDirection::Inverse);
    Ok(ComplexImage {
        height: k.height,
        width: k.width,
        data,
    })
}

/// `||a - b||_2 / ||b||_2`.
pub fn rel_l2_error(a: &ComplexImage, b: &ComplexImage) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let reference = b.norm_l2();
    if reference == 0.0 {
        return Err(Error::DegenerateReference);
    }
    let diff: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(diff / reference)
}

/// Same as [`rel_l2_error`] for spectra.
pub fn rel_l2_error_kspace(a: &KSpace, b: &KSpace) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let reference = b.norm_l2();
    if reference == 0.0 {
        return Err(Error::DegenerateReference);
    }
    let diff: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(diff / reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> ComplexImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexImage::from_fn(h, w, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap()
    }

    /// Direct O(N^2) centered DFT, independent of the FFT path.
    fn direct_centered_dft(img: &ComplexImage) -> KSpace {
        let (h, w) = img.shape();
        let (ch, cw) = ((h / 2) as f64, (w / 2) as f64);
        let norm = 1.0 / ((h * w) as f64).sqrt();
        KSpace::from_fn(h, w, |kr, kc| {
            let (fr, fc) = (kr as f64 - ch, kc as f64 - cw);
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..h {
                for c in 0..w {
                    let (pr, pc) = (r as f64 - ch, c as f64 - cw);
                    let phase = -2.0 * std::f64::consts::PI * (fr * pr / h as f64 + fc * pc / w as f64);
                    acc += img.get(r, c) * Complex64::from_polar(1.0, phase);
                }
            }
            acc * norm
        })
        .unwrap()
    }

    #[test]
    fn constant_image_has_dc_only_spectrum() {
        let c = Complex64::new(0.7, -0.2);
        let img = ComplexImage::from_fn(4, 4, |_, _| c).unwrap();
        let k = fft2_centered(&img).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let v = k.get(r, col);
                if (r, col) == (2, 2) {
                    assert!((v - c * 4.0).norm() < 1e-12);
                } else {
                    assert!(v.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn centered_impulse_has_flat_spectrum() {
        let mut img = ComplexImage::zeros(8, 8).unwrap();
        img.set(4, 4, Complex64::new(1.0, 0.0));
        let k = fft2_centered(&img).unwrap();
        let oracle = direct_centered_dft(&img);
        for (a, b) in k.data().iter().zip(oracle.data()) {
            assert!((a.norm() - 0.125).abs() < 1e-12);
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_dft_on_odd_shape() {
        let img = random_image(5, 7, 3);
        let k = fft2_centered(&img).unwrap();
        let oracle = direct_centered_dft(&img);
        assert!(rel_l2_error_kspace(&k, &oracle).unwrap() < 1e-12);
    }

    #[test]
    fn round_trip_over_sizes() {
        for n in [4usize, 8, 16, 32, 64, 320] {
            let img = random_image(n, n, n as u64);
            let back = ifft2_centered(&fft2_centered(&img).unwrap()).unwrap();
            assert!(rel_l2_error(&back, &img).unwrap() < 1e-12, "size {n}");
        }
        let img = random_image(9, 6, 1);
        let back = ifft2_centered(&fft2_centered(&img).unwrap()).unwrap();
        assert!(rel_l2_error(&back, &img).unwrap() < 1e-12);
    }

    #[test]
    fn dc_only_spectrum_inverts_to_constant() {
        let (h, w) = (6, 10);
        let v = Complex64::new(3.0, 1.0);
        let mut k = KSpace::zeros(h, w).unwrap();
        k.set(h / 2, w / 2, v);
        let img = ifft2_centered(&k).unwrap();
        let expected = v / ((h * w) as f64).sqrt();
        assert!(img.data().iter().all(|z| (z - expected).norm() < 1e-12));
    }

    #[test]
    fn zero_spectrum_inverts_to_zero() {
        let img = ifft2_centered(&KSpace::zeros(8, 8).unwrap()).unwrap();
        assert!(img.data().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rejects_non_finite_input() {
        let mut img = ComplexImage::zeros(4, 4).unwrap();
        img.set(1, 1, Complex64::new(f64::NAN, 0.0));
        assert!(matches!(fft2_centered(&img), Err(Error::InvalidInput(_))));
        let mut k = KSpace::zeros(4, 4).unwrap();
        k.set(0, 0, Complex64::new(0.0, f64::INFINITY));
        assert!(matches!(ifft2_centered(&k), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rel_l2_error_cases() {
        let x = random_image(8, 8, 9);
        assert_eq!(rel_l2_error(&x, &x).unwrap(), 0.0);
        assert!((rel_l2_error(&(&x * 2.0), &x).unwrap() - 1.0).abs() < 1e-14);

        let e = random_image(8, 8, 10);
        let e = &e * (0.1 * x.norm_l2() / e.norm_l2());
        assert!((rel_l2_error(&(&x + &e), &x).unwrap() - 0.1).abs() < 1e-14);

        let other = random_image(4, 8, 1);
        assert!(matches!(rel_l2_error(&other, &x), Err(Error::Shape { .. })));
        let zero = ComplexImage::zeros(8, 8).unwrap();
        assert!(matches!(rel_l2_error(&x, &zero), Err(Error::DegenerateReference)));
    }

    #[test]
    fn from_vec_validates_length() {
        assert!(ComplexImage::from_vec(2, 2, vec![Complex64::new(0.0, 0.0); 3]).is_err());
        assert!(ComplexImage::from_vec(0, 2, vec![]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn parseval(h in 1usize..20, w in 1usize..20, seed in any::<u64>()) {
                let img = random_image(h, w, seed);
                let k = fft2_centered(&img).unwrap();
                prop_assert!((k.norm_l2() - img.norm_l2()).abs() <= 1e-12 * img.norm_l2());
            }

            #[test]
            fn linearity(seed in any::<u64>(), a_re in -2.0..2.0f64, b_im in -2.0..2.0f64) {
                let x = random_image(16, 16, seed);
                let z = random_image(16, 16, seed.wrapping_add(1));
                let (a, b) = (Complex64::new(a_re, 0.5), Complex64::new(-0.3, b_im));
                let combo = x.scale(a).axpy(b, &z).unwrap();
                let lhs = fft2_centered(&combo).unwrap();
                let rhs = fft2_centered(&x).unwrap().scale(a).axpy(b, &fft2_centered(&z).unwrap()).unwrap();
                prop_assert!(rel_l2_error_kspace(&lhs, &rhs).unwrap() < 1e-12);
            }
        }
    }
}
