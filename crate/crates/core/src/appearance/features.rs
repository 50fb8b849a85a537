//! Crops, feature maps and the pluggable feature extractor.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Size every crop is resized to before feature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropSpec {
    pub width: usize,
    pub height: usize,
}

impl Default for CropSpec {
    fn default() -> Self {
        Self {
            width: 80,
            height: 224,
        }
    }
}

/// Channel-major image crop (`channels × height × width`).
#[derive(Debug, Clone, PartialEq)]
pub struct Crop {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Crop {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 || data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "crop {channels}x{height}x{width} does not match {} values",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// `C × H × W` feature tensor with even spatial dims.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Shape("feature map dims must be positive".into()));
        }
        if !height.is_multiple_of(2) || !width.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "feature map spatial dims must be even, got {height}x{width}"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "feature map {channels}x{height}x{width} does not match {} values",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("feature map contains non-finite values".into()));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(channels, height, width, vec![0.0; channels * height * width])
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

pub trait FeatureExtractor {
    fn extract(&self, crop: &Crop) -> Result<FeatureMap>;

    /// Channel count of produced feature maps.
    fn output_channels(&self) -> usize;
}

/// What feature extraction starts from: raw pixels or a map produced elsewhere.
#[derive(Debug, Clone)]
pub enum AppearanceInput<'a> {
    Crop(&'a Crop),
    Precomputed(FeatureMap),
}

pub fn extract_feature_map(
    input: AppearanceInput<'_>,
    extractor: &dyn FeatureExtractor,
) -> Result<FeatureMap> {
    match input {
        AppearanceInput::Crop(crop) => extractor.extract(crop),
        AppearanceInput::Precomputed(fm) => {
            if fm.channels() != extractor.output_channels() {
                return Err(Error::Shape(format!(
                    "precomputed map has {} channels, model expects {}",
                    fm.channels(),
                    extractor.output_channels()
                )));
            }
            Ok(fm)
        }
    }
}

/// Deterministic stand-in backbone: mean over non-overlapping patches,
/// then a fixed random linear map across channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchAverageExtractor {
    patch_width: usize,
    patch_height: usize,
    /// `out_channels × in_channels`
    projection: DMatrix<f64>,
    seed: u64,
}

impl PatchAverageExtractor {
    pub const DEFAULT_OUT_CHANNELS: usize = 8;

    pub fn new(
        seed: u64,
        in_channels: usize,
        out_channels: usize,
        patch_width: usize,
        patch_height: usize,
    ) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 || patch_width == 0 || patch_height == 0 {
            return Err(Error::Config("extractor dims must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (in_channels as f64).sqrt();
        let projection = DMatrix::from_fn(out_channels, in_channels, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        });
        Ok(Self {
            patch_width,
            patch_height,
            projection,
            seed,
        })
    }

    /// RGB input, 8 output channels, 8×16 patches: an 80×224 crop becomes a 14×10 map.
    pub fn for_crop_spec(seed: u64) -> Self {
        Self::new(seed, 3, Self::DEFAULT_OUT_CHANNELS, 8, 16).expect("static dims are valid")
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    pub fn patch_size(&self) -> (usize, usize) {
        (self.patch_width, self.patch_height)
    }
}

impl FeatureExtractor for PatchAverageExtractor {
    fn extract(&self, crop: &Crop) -> Result<FeatureMap> {
        let in_channels = self.projection.ncols();
        if crop.channels() != in_channels {
            return Err(Error::Shape(format!(
                "extractor expects {in_channels} channels, crop has {}",
                crop.channels()
            )));
        }
        if !crop.width().is_multiple_of(self.patch_width) || !crop.height().is_multiple_of(self.patch_height) {
            return Err(Error::Config(format!(
                "crop {}x{} is not divisible into {}x{} patches",
                crop.width(),
                crop.height(),
                self.patch_width,
                self.patch_height
            )));
        }
        let (gw, gh) = (crop.width() / self.patch_width, crop.height() / self.patch_height);
        if gw % 2 != 0 || gh % 2 != 0 {
            return Err(Error::Config(format!(
                "extractor output {gh}x{gw} is not even; adjust patch size"
            )));
        }

        let out_channels = self.projection.nrows();
        let patch_area = (self.patch_width * self.patch_height) as f64;
        let mut means = vec![0.0; in_channels];
        let mut data = vec![0.0; out_channels * gh * gw];
        for py in 0..gh {
            for px in 0..gw {
                for (c, m) in means.iter_mut().enumerate() {
                    let mut sum = 0.0;
                    for y in py * self.patch_height..(py + 1) * self.patch_height {
                        for x in px * self.patch_width..(px + 1) * self.patch_width {
                            sum += crop.get(c, y, x);
                        }
                    }
                    *m = sum / patch_area;
                }
                for o in 0..out_channels {
                    let v: f64 = (0..in_channels).map(|c| self.projection[(o, c)] * means[c]).sum();
                    data[(o * gh + py) * gw + px] = v;
                }
            }
        }
        FeatureMap::new(out_channels, gh, gw, data)
    }

    fn output_channels(&self) -> usize {
        self.projection.nrows()
    }
}
