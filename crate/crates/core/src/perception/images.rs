use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::PerceptionError;

pub const IMAGE_SIZE: usize = 32;
/// Angle of the augmentation rotation.
pub const AUGMENT_ANGLE: f64 = std::f64::consts::PI / 6.0;

/// Grayscale image of a box; heavier classes look larger and brighter.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxImage {
    pub h: usize,
    pub w: usize,
    /// Row-major intensities in `[0, 1]`.
    pub pixels: Vec<f64>,
    /// Weight class, starting at 1.
    pub label: usize,
}

impl BoxImage {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.pixels[i * self.w + j]
    }

    /// Pixels brighter than `threshold`.
    pub fn area_above(&self, threshold: f64) -> usize {
        self.pixels.iter().filter(|&&p| p > threshold).count()
    }

    /// Rotates the content about the image center with bilinear sampling;
    /// samples outside the frame take the nearest edge pixel.
    pub fn rotated(&self, angle: f64) -> BoxImage {
        let (s, c) = angle.sin_cos();
        let cy = (self.h as f64 - 1.0) / 2.0;
        let cx = (self.w as f64 - 1.0) / 2.0;
        let sample = |y: f64, x: f64| -> f64 {
            let y = y.clamp(0.0, self.h as f64 - 1.0);
            let x = x.clamp(0.0, self.w as f64 - 1.0);
            let (y0, x0) = (y.floor() as usize, x.floor() as usize);
            let (y1, x1) = ((y0 + 1).min(self.h - 1), (x0 + 1).min(self.w - 1));
            let (fy, fx) = (y - y0 as f64, x - x0 as f64);
            let top = self.at(y0, x0) * (1.0 - fx) + self.at(y0, x1) * fx;
            let bot = self.at(y1, x0) * (1.0 - fx) + self.at(y1, x1) * fx;
            top * (1.0 - fy) + bot * fy
        };
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for i in 0..self.h {
            for j in 0..self.w {
                let (dy, dx) = (i as f64 - cy, j as f64 - cx);
                // inverse map
                let sy = c * dy - s * dx + cy;
                let sx = s * dy + c * dx + cx;
                pixels.push(sample(sy, sx).clamp(0.0, 1.0));
            }
        }
        BoxImage {
            h: self.h,
            w: self.w,
            pixels,
            label: self.label,
        }
    }
}

/// Renders one box of weight class `label`.
pub fn render_box(label: usize, rng: &mut impl Rng) -> BoxImage {
    let n = IMAGE_SIZE;
    let k = label as f64;
    let side = 8.0 + 3.0 * (k - 1.0) + rng.random_range(-1.0..1.0);
    let aspect: f64 = rng.random_range(0.85..1.15);
    let (half_w, half_h) = (0.5 * side * aspect.sqrt(), 0.5 * side / aspect.sqrt());
    let center = (n as f64 - 1.0) / 2.0;
    let cy = center + rng.random_range(-1.5..1.5);
    let cx = center + rng.random_range(-1.5..1.5);
    let theta: f64 = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
    let (s, c) = theta.sin_cos();
    let shade = 0.45 + 0.1 * k + rng.random_range(-0.03..0.03);
    let noise = Normal::new(0.1, 0.03).expect("valid normal");

    const SUB: usize = 4;
    let mut pixels = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut inside = 0;
            for a in 0..SUB {
                for b in 0..SUB {
                    let y = i as f64 + (a as f64 + 0.5) / SUB as f64 - 0.5 - cy;
                    let x = j as f64 + (b as f64 + 0.5) / SUB as f64 - 0.5 - cx;
                    let u = c * x + s * y;
                    let v = -s * x + c * y;
                    if u.abs() <= half_w && v.abs() <= half_h {
                        inside += 1;
                    }
                }
            }
            let frac = inside as f64 / (SUB * SUB) as f64;
            let bg: f64 = noise.sample(rng);
            pixels.push((bg + frac * (shade - bg)).clamp(0.0, 1.0));
        }
    }
    BoxImage {
        h: n,
        w: n,
        pixels,
        label,
    }
}

/// Deterministic balanced image set: `ceil(n/2)` rendered boxes, each
/// followed by its rotated copy until `n` images exist.
pub fn generate_images(
    n: usize,
    n_classes: usize,
    seed: u64,
) -> Result<Vec<BoxImage>, PerceptionError> {
    if n_classes == 0 || n < n_classes {
        return Err(PerceptionError::InvalidArgument(format!(
            "need n >= n_classes >= 1, got n = {n}, n_classes = {n_classes}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = n.div_ceil(2);
    let mut out = Vec::with_capacity(n);
    for i in 0..raw {
        let img = render_box(i % n_classes + 1, &mut rng);
        let aug = (out.len() + 1 < n).then(|| img.rotated(AUGMENT_ANGLE));
        out.push(img);
        if let Some(a) = aug {
            out.push(a);
        }
    }
    Ok(out)
}

/// Shuffled split into train, validation and test sets.
pub fn split_dataset(
    images: &[BoxImage],
    train_frac: f64,
    val_frac: f64,
    seed: u64,
) -> (Vec<BoxImage>, Vec<BoxImage>, Vec<BoxImage>) {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..images.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (train_frac * images.len() as f64).round() as usize;
    let n_val = (val_frac * images.len() as f64).round() as usize;
    let pick = |r: &[usize]| r.iter().map(|&i| images[i].clone()).collect::<Vec<_>>();
    let n_val_end = (n_train + n_val).min(idx.len());
    (
        pick(&idx[..n_train.min(idx.len())]),
        pick(&idx[n_train.min(idx.len())..n_val_end]),
        pick(&idx[n_val_end..]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_from_seed() {
        assert_eq!(
            generate_images(20, 5, 9).unwrap(),
            generate_images(20, 5, 9).unwrap()
        );
        assert_ne!(
            generate_images(20, 5, 9).unwrap(),
            generate_images(20, 5, 10).unwrap()
        );
    }

    #[test]
    fn balanced_classes() {
        let imgs = generate_images(200, 5, 1).unwrap();
        assert_eq!(imgs.len(), 200);
        for k in 1..=5 {
            assert_eq!(imgs.iter().filter(|i| i.label == k).count(), 40);
        }
    }

    #[test]
    fn area_grows_with_class() {
        let imgs = generate_images(200, 5, 3).unwrap();
        let mean = |k: usize| {
            let v: Vec<f64> = imgs
                .iter()
                .filter(|i| i.label == k)
                .map(|i| i.area_above(0.3) as f64)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        for k in 1..5 {
            assert!(
                mean(k + 1) > mean(k),
                "class {k}: {} vs {}",
                mean(k),
                mean(k + 1)
            );
        }
    }

    #[test]
    fn intensities_in_range() {
        for img in generate_images(30, 5, 4).unwrap() {
            assert!(img.pixels.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn full_turn_is_identity() {
        let img = render_box(3, &mut ChaCha8Rng::seed_from_u64(0));
        let back = img.rotated(2.0 * std::f64::consts::PI);
        for (a, b) in img.pixels.iter().zip(&back.pixels) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_images() {
        assert!(generate_images(3, 5, 0).is_err());
    }
}
