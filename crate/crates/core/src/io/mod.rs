//! On-disk formats: binary tensor files, weight bundles and JSON records.

mod bundle;
mod schema;
mod tensor_file;

pub use bundle::{load_bundle, save_bundle, Manifest, MANIFEST_FILE};
pub use schema::{
    read_json, read_lexicon, write_json, AnnotatedImage, Annotation, AnnotationFile, PredictedImage,
    PredictionFile, Proposal, ProposalFile, ProposalImage,
};
pub use tensor_file::{decode_tensor, encode_tensor, read_tensor, write_tensor, DType, MAGIC, VERSION};
