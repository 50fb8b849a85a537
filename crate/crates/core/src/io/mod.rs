//! File formats: MOT CSV, embedding sidecars and tracker configuration.

mod config;
mod mot;
mod sidecar;

pub use config::{config_to_string, parse_config, read_config};
pub use mot::{
    detection_records, detections_from_str, ground_truth_from_records, ground_truth_records, parse_mot_csv,
    parse_mot_str, read_detections, read_ground_truth, records_to_string, result_records, write_records,
    write_results_csv, MotCsvRecord,
};
pub use sidecar::{
    attach_embeddings, embeddings_to_string, parse_embeddings, read_embeddings, write_embeddings, EmbeddingTable,
};
