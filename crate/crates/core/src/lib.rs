//! Data model and end-to-end evaluation toolkit for scene-text spotting.
//!
//! What lives here:
//! - [`geometry`]: simple-polygon primitives and arbitrary-polygon IoU;
//! - [`annotation`]: the COCO-style text annotation data model with parsing,
//!   canonical serialization, validation and statistics, plus ICDAR quad
//!   ground-truth and submission text formats;
//! - [`matching`]: one-to-one greedy assignment of predictions to ground
//!   truth with don't-care suppression;
//! - [`metrics`]: Word Spotting and End-to-end recognition
//!   precision/recall/hmean;
//! - [`lexicon`]: strong/weak/generic lexicons and (probability-weighted)
//!   edit-distance transcription correction;
//! - [`predictions`]: the line-delimited JSON prediction wire format;
//! - [`synth`]: seeded generators for synthetic polygons, scenes and
//!   datasets, used by tests and benchmarks.

pub mod annotation;
pub mod error;
pub mod geometry;
pub mod jsonfmt;
pub mod lexicon;
pub mod matching;
pub mod metrics;
pub mod predictions;
pub mod synth;

pub use annotation::{
    aggregate_stats, parse_coco_text, parse_icdar_quad_gt, serialize_coco_text, subset_stats,
    validate, Dataset, ImageId, ImageRecord, InstanceId, SubsetStats, TextInstance,
    ViolationReport,
};
pub use error::{Error, Result};
pub use geometry::{
    bounding_box, iou, normalize_polygon, polygon_area, polygon_intersection_area,
    AxisAlignedBox, NormalizedPolygon, Point, Polygon,
};
pub use lexicon::{
    best_match, edit_distance, load_lexicon, weighted_edit_distance, CharProbMatrix, Lexicon,
    LexiconMode,
};
pub use matching::{match_instances, MatchConfig, MatchPair, MatchResult, Prediction};
pub use metrics::{
    evaluate, hmean, normalize_transcription, transcription_match, word_spotting_eligible,
    EvalConfig, EvalReport, NormalizationPolicy, Protocol,
};
