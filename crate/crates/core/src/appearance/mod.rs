//! Appearance similarity: feature extraction, quadrant slicing, sliced
//! attention, cosine scoring, per-track template banks and a toy trainer.

mod archive;
mod attention;
mod bank;
mod embedding;
mod features;
mod slicing;
mod training;

pub use archive::{
    feature_map_from_str, feature_map_to_string, load_feature_map, load_params, params_from_str,
    params_to_string, save_feature_map, save_params,
};
pub use attention::{attention_weights, isa_forward, isa_slice_outputs, qkv_attention, AttentionParams};
pub use bank::{bank_insert, multi_template_similarity, FeatureBank, Template, DEFAULT_BANK_CAPACITY};
pub use embedding::{cosine_similarity, EmbeddingVector};
pub use features::{
    extract_feature_map, AppearanceInput, Crop, CropSpec, FeatureExtractor, FeatureMap,
    PatchAverageExtractor,
};
pub use slicing::{slice_feature_map, SliceSet, SLICE_COUNT};
pub use training::{
    loss_and_gradients, pair_loss, train_siamese_toy, CosineSchedule, LabeledPair, PairSet,
    ParamGradients, TrainingOutcome,
};

use crate::error::Result;

/// Shared-weight embedding network: extractor, slicing, attention block.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityModel {
    pub extractor: PatchAverageExtractor,
    pub params: AttentionParams,
}

impl SimilarityModel {
    /// Stub extractor sized for the default crop, seeded attention weights.
    pub fn seeded(seed: u64) -> Self {
        let extractor = PatchAverageExtractor::for_crop_spec(seed);
        let params = AttentionParams::seeded(
            extractor.output_channels(),
            AttentionParams::DEFAULT_KEY_DIM,
            AttentionParams::DEFAULT_EMBEDDING_DIM,
            seed,
        );
        Self { extractor, params }
    }

    /// Rebuilds the matching stub extractor from the seed stored in `params`.
    pub fn from_params(params: AttentionParams) -> Self {
        let extractor = PatchAverageExtractor::for_crop_spec(params.extractor_seed);
        Self { extractor, params }
    }

    pub fn slices(&self, input: AppearanceInput<'_>) -> Result<SliceSet> {
        Ok(slice_feature_map(&extract_feature_map(input, &self.extractor)?))
    }

    pub fn embed(&self, crop: &Crop) -> Result<EmbeddingVector> {
        isa_forward(&self.slices(AppearanceInput::Crop(crop))?, &self.params)
    }

    pub fn embed_feature_map(&self, fm: FeatureMap) -> Result<EmbeddingVector> {
        isa_forward(&self.slices(AppearanceInput::Precomputed(fm))?, &self.params)
    }
}

/// Cosine similarity of the two crops' embeddings under one shared model.
pub fn slm_similarity(a: &Crop, b: &Crop, model: &SimilarityModel) -> Result<f64> {
    Ok(cosine_similarity(&model.embed(a)?, &model.embed(b)?))
}
