//! Seeded synthetic complex phantoms: additive random ellipses with a smooth
//! unit-modulus phase field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{Complex64, ComplexImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhantomSpec {
    pub size: usize,
    pub n_ellipses: usize,
    pub seed: u64,
    pub phase_order: usize,
}

impl PhantomSpec {
    pub fn new(size: usize, n_ellipses: usize, seed: u64, phase_order: usize) -> Self {
        Self {
            size,
            n_ellipses,
            seed,
            phase_order,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 16 {
            return Err(Error::InvalidInput(format!("phantom size must be >= 16, got {}", self.size)));
        }
        if self.n_ellipses == 0 {
            return Err(Error::InvalidInput("phantom needs at least one ellipse".into()));
        }
        Ok(())
    }
}

/// Ellipse in normalized coordinates `[-1, 1]^2` (u to the right, v down).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center_u: f64,
    pub center_v: f64,
    pub semi_u: f64,
    pub semi_v: f64,
    pub angle: f64,
    pub intensity: f64,
}

impl Ellipse {
    pub fn contains(&self, u: f64, v: f64) -> bool {
        let (du, dv) = (u - self.center_u, v - self.center_v);
        let (s, c) = self.angle.sin_cos();
        let (ru, rv) = (du * c + dv * s, -du * s + dv * c);
        (ru / self.semi_u).powi(2) + (rv / self.semi_v).powi(2) <= 1.0
    }
}

/// Normalized coordinate of pixel index `i` on an `n`-pixel axis.
pub fn pixel_coord(i: usize, n: usize) -> f64 {
    (2 * i + 1) as f64 / n as f64 - 1.0
}

struct Drawn {
    ellipses: Vec<Ellipse>,
    /// `(i, j, coeff)` for the phase polynomial `sum coeff * u^i v^j`.
    phase_terms: Vec<(i32, i32, f64)>,
}

fn draw(spec: &PhantomSpec) -> Drawn {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut ellipses = Vec::with_capacity(spec.n_ellipses);
    // the first ellipse is the centered body; the rest are features inside it
    ellipses.push(Ellipse {
        center_u: 0.0,
        center_v: 0.0,
        semi_u: rng.gen_range(0.55..0.85),
        semi_v: rng.gen_range(0.55..0.85),
        angle: rng.gen_range(0.0..std::f64::consts::PI),
        intensity: rng.gen_range(0.4..0.8),
    });
    for _ in 1..spec.n_ellipses {
        ellipses.push(Ellipse {
            center_u: rng.gen_range(-0.45..0.45),
            center_v: rng.gen_range(-0.45..0.45),
            semi_u: rng.gen_range(0.05..0.3),
            semi_v: rng.gen_range(0.05..0.3),
            angle: rng.gen_range(0.0..std::f64::consts::PI),
            intensity: rng.gen_range(-0.3..0.5),
        });
    }
    let mut phase_terms = Vec::new();
    for total in 0..=spec.phase_order as i32 {
        for i in 0..=total {
            phase_terms.push((i, total - i, 0.0));
        }
    }
    let amp = std::f64::consts::FRAC_PI_2 / phase_terms.len() as f64;
    for term in &mut phase_terms {
        term.2 = rng.gen_range(-amp..amp);
    }
    Drawn { ellipses, phase_terms }
}

/// The ellipses a spec draws, in drawing order.
pub fn phantom_ellipses(spec: &PhantomSpec) -> Result<Vec<Ellipse>> {
    spec.validate()?;
    Ok(draw(spec).ellipses)
}

/// Magnitude `clip(sum of ellipse intensities, 0, 1)` times `exp(i * phase(u, v))`.
pub fn gen_phantom(spec: &PhantomSpec) -> Result<ComplexImage> {
    spec.validate()?;
    let drawn = draw(spec);
    let n = spec.size;
    ComplexImage::from_fn(n, n, |r, c| {
        let (u, v) = (pixel_coord(c, n), pixel_coord(r, n));
        let magnitude = drawn
            .ellipses
            .iter()
            .filter(|e| e.contains(u, v))
            .map(|e| e.intensity)
            .sum::<f64>()
            .clamp(0.0, 1.0);
        let phase: f64 = drawn
            .phase_terms
            .iter()
            .map(|&(i, j, k)| k * u.powi(i) * v.powi(j))
            .sum();
        Complex64::from_polar(magnitude, phase)
    })
}

/// `count` phantoms with seeds `seed, seed+1, ...`.
pub fn gen_dataset(count: usize, size: usize, n_ellipses: usize, phase_order: usize, seed: u64) -> Result<Vec<ComplexImage>> {
    (0..count as u64)
        .map(|i| gen_phantom(&PhantomSpec::new(size, n_ellipses, seed.wrapping_add(i), phase_order)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let spec = PhantomSpec::new(32, 6, 9, 2);
        assert_eq!(gen_phantom(&spec).unwrap(), gen_phantom(&spec).unwrap());
        assert_ne!(gen_phantom(&spec).unwrap(), gen_phantom(&PhantomSpec { seed: 10, ..spec }).unwrap());
    }

    #[test]
    fn single_ellipse_support() {
        let spec = PhantomSpec::new(32, 1, 4, 1);
        let img = gen_phantom(&spec).unwrap();
        let e = phantom_ellipses(&spec).unwrap()[0];
        assert_eq!((e.center_u, e.center_v), (0.0, 0.0));
        let mut inside = 0;
        for r in 0..32 {
            for c in 0..32 {
                let m = img.get(r, c).norm();
                if e.contains(pixel_coord(c, 32), pixel_coord(r, 32)) {
                    inside += 1;
                    assert!(m > 0.0);
                } else {
                    assert_eq!(m, 0.0);
                }
            }
        }
        assert!(inside > 0);
    }

    #[test]
    fn magnitude_within_unit_interval() {
        for seed in 0..100 {
            let img = gen_phantom(&PhantomSpec::new(16, 8, seed, 2)).unwrap();
            assert!(img.is_finite());
            assert!(img.magnitude().iter().all(|&m| (0.0..=1.0 + 1e-12).contains(&m)));
        }
    }

    #[test]
    fn validation() {
        assert!(gen_phantom(&PhantomSpec::new(16, 0, 0, 0)).is_err());
        assert!(gen_phantom(&PhantomSpec::new(8, 3, 0, 0)).is_err());
    }

    #[test]
    fn phase_is_not_trivial() {
        let img = gen_phantom(&PhantomSpec::new(32, 3, 1, 2)).unwrap();
        assert!(img.data().iter().any(|z| z.im.abs() > 1e-3));
    }
}
