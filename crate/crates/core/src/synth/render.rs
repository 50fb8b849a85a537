use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::appearance::{Crop, CropSpec};

/// A coarse color grid standing in for an identity's clothing pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityTexture {
    cells_x: usize,
    cells_y: usize,
    /// `[channel][cell_y][cell_x]`, values in `[0, 1]`.
    colors: Vec<f64>,
}

impl IdentityTexture {
    pub const CHANNELS: usize = 3;

    pub fn random(seed: u64, cells_x: usize, cells_y: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let colors = (0..Self::CHANNELS * cells_x * cells_y).map(|_| rng.random::<f64>()).collect();
        Self { cells_x, cells_y, colors }
    }

    /// Nearest-neighbour upsampling plus per-pixel Gaussian noise.
    pub fn render(&self, spec: CropSpec, noise: f64, rng: &mut impl Rng) -> Crop {
        let (w, h) = (spec.width, spec.height);
        let normal = Normal::new(0.0, noise.max(0.0)).expect("finite noise");
        let mut data = Vec::with_capacity(Self::CHANNELS * w * h);
        for c in 0..Self::CHANNELS {
            for y in 0..h {
                let cy = y * self.cells_y / h;
                for x in 0..w {
                    let cx = x * self.cells_x / w;
                    let base = self.colors[(c * self.cells_y + cy) * self.cells_x + cx];
                    let n = if noise > 0.0 { normal.sample(rng) } else { 0.0 };
                    data.push(base + n);
                }
            }
        }
        Crop::new(Self::CHANNELS, h, w, data).expect("rendered crop is finite")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_render_is_piecewise_constant() {
        let t = IdentityTexture::random(3, 2, 2);
        let spec = CropSpec::default();
        let crop = t.render(spec, 0.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(crop.get(0, 0, 0), crop.get(0, spec.height / 2 - 1, spec.width / 2 - 1));
        assert_eq!(crop.get(1, spec.height - 1, spec.width - 1), t.colors[(2 + 1) * 2 + 1]);
    }

    #[test]
    fn textures_are_seeded() {
        assert_eq!(IdentityTexture::random(5, 4, 8), IdentityTexture::random(5, 4, 8));
        assert_ne!(IdentityTexture::random(5, 4, 8), IdentityTexture::random(6, 4, 8));
    }
}
