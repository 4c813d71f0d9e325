//! Data model, parsing, serialization, validation and statistics for
//! COCO-style text annotations and ICDAR quad text files.

mod coco;
mod icdar;

pub use coco::{parse_coco_text, serialize_coco_text};
pub use icdar::{
    export_icdar_quad_gt, export_icdar_submission, parse_icdar_quad_gt, ICDAR_ILLEGIBLE_MARKER,
};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde_json::Value;

use crate::geometry::{normalize_polygon, Polygon};

macro_rules! string_id {
    ($name:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(ImageId, "Image identifier; JSON integers and strings both map here.");
string_id!(InstanceId, "Text-instance identifier, unique within a dataset.");

/// One ground-truth text instance: a polygon, an optional transcription and
/// the legible / machine_printed attribute flags.
///
/// An illegible instance carries no transcription and acts as a don't-care
/// region during evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TextInstance {
    pub id: InstanceId,
    pub image_id: ImageId,
    pub polygon: Polygon,
    pub transcription: Option<String>,
    pub legible: bool,
    pub machine_printed: bool,
    /// Segmentation rings beyond the first, preserved verbatim for round trip.
    pub extra_rings: Vec<Vec<f64>>,
    /// Unknown annotation-level fields, preserved verbatim.
    pub extra: BTreeMap<String, Value>,
    /// Unknown attribute-level fields, preserved verbatim.
    pub attr_extra: BTreeMap<String, Value>,
}

impl TextInstance {
    pub fn new(
        id: impl Into<InstanceId>,
        image_id: impl Into<ImageId>,
        polygon: Polygon,
        transcription: Option<String>,
        legible: bool,
        machine_printed: bool,
    ) -> Self {
        TextInstance {
            id: id.into(),
            image_id: image_id.into(),
            polygon,
            transcription,
            legible,
            machine_printed,
            extra_rings: Vec::new(),
            extra: BTreeMap::new(),
            attr_extra: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub image_id: ImageId,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    /// Unknown image-level fields, preserved verbatim.
    pub extra: BTreeMap<String, Value>,
}

impl ImageRecord {
    pub fn new(image_id: impl Into<ImageId>, file_name: impl Into<String>, width: u32, height: u32) -> Self {
        ImageRecord {
            image_id: image_id.into(),
            file_name: file_name.into(),
            width,
            height,
            extra: BTreeMap::new(),
        }
    }
}

/// A parsed annotation subset: image table plus text instances.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub subset_name: String,
    pub images: Vec<ImageRecord>,
    pub instances: Vec<TextInstance>,
    /// Unknown top-level fields, preserved verbatim.
    pub extra: BTreeMap<String, Value>,
}

impl Dataset {
    pub fn new(subset_name: impl Into<String>) -> Self {
        Dataset { subset_name: subset_name.into(), ..Default::default() }
    }

    /// Image lookup table; later duplicates win (duplicates are flagged by
    /// [`validate`], not here).
    pub fn image_index(&self) -> HashMap<&ImageId, &ImageRecord> {
        self.images.iter().map(|im| (&im.image_id, im)).collect()
    }

    /// Instances grouped by image, in dataset order.
    pub fn instances_by_image(&self) -> BTreeMap<&ImageId, Vec<&TextInstance>> {
        let mut map: BTreeMap<&ImageId, Vec<&TextInstance>> = BTreeMap::new();
        for inst in &self.instances {
            map.entry(&inst.image_id).or_default().push(inst);
        }
        map
    }
}

/// Per-subset counters: images, instances, legible instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SubsetStats {
    pub images: u64,
    pub instances: u64,
    pub legible: u64,
}

impl SubsetStats {
    pub fn new(images: u64, instances: u64, legible: u64) -> Self {
        SubsetStats { images, instances, legible }
    }
}

pub fn subset_stats(d: &Dataset) -> SubsetStats {
    SubsetStats {
        images: d.images.len() as u64,
        instances: d.instances.len() as u64,
        legible: d.instances.iter().filter(|i| i.legible).count() as u64,
    }
}

/// Component-wise sum over per-subset rows.
pub fn aggregate_stats(rows: &[SubsetStats]) -> SubsetStats {
    rows.iter().fold(SubsetStats::default(), |acc, r| SubsetStats {
        images: acc.images + r.images,
        instances: acc.instances + r.instances,
        legible: acc.legible + r.legible,
    })
}

/// Plain-text statistics table: one row per subset plus a TOTAL row.
pub fn format_stats_table(rows: &[(String, SubsetStats)]) -> String {
    let mut out = String::new();
    for (name, s) in rows {
        out.push_str(&format!("{} {} {} {}\n", name, s.images, s.instances, s.legible));
    }
    let total = aggregate_stats(&rows.iter().map(|(_, s)| *s).collect::<Vec<_>>());
    out.push_str(&format!("TOTAL {} {} {}\n", total.images, total.instances, total.legible));
    out
}

/// CSV statistics table with header and TOTAL row.
pub fn format_stats_csv(rows: &[(String, SubsetStats)]) -> String {
    let mut out = String::from("subset,images,instances,legible\n");
    for (name, s) in rows {
        out.push_str(&format!("{},{},{},{}\n", name, s.images, s.instances, s.legible));
    }
    let total = aggregate_stats(&rows.iter().map(|(_, s)| *s).collect::<Vec<_>>());
    out.push_str(&format!("TOTAL,{},{},{}\n", total.images, total.instances, total.legible));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleCode {
    DuplicateImageId,
    DuplicateInstanceId,
    DanglingImageId,
    InvalidImageSize,
    DegeneratePolygon,
    NonSimplePolygon,
    VertexOutOfBounds,
    SpaceInTranscription,
    NonAsciiTranscription,
    MultiRingSegmentation,
}

impl RuleCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RuleCode::DuplicateImageId => "DUPLICATE_IMAGE_ID",
            RuleCode::DuplicateInstanceId => "DUPLICATE_INSTANCE_ID",
            RuleCode::DanglingImageId => "DANGLING_IMAGE_ID",
            RuleCode::InvalidImageSize => "INVALID_IMAGE_SIZE",
            RuleCode::DegeneratePolygon => "DEGENERATE_POLYGON",
            RuleCode::NonSimplePolygon => "NON_SIMPLE_POLYGON",
            RuleCode::VertexOutOfBounds => "VERTEX_OUT_OF_BOUNDS",
            RuleCode::SpaceInTranscription => "SPACE_IN_TRANSCRIPTION",
            RuleCode::NonAsciiTranscription => "NON_ASCII_TRANSCRIPTION",
            RuleCode::MultiRingSegmentation => "MULTI_RING_SEGMENTATION",
        }
    }
}

impl fmt::Display for RuleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One rule hit: the offending instance or image id, the rule, and a message.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub subject: String,
    pub rule: RuleCode,
    pub message: String,
}

/// Validation outcome. Violations fail a dataset; warnings are advisory
/// (the default charset policy, for one, warns rather than fails).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty() && self.warnings.is_empty()
    }

    pub fn has_violations(&self) -> bool {
        !self.violations.is_empty()
    }
}

/// How transcription characters outside printable ASCII are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CharsetRule {
    #[default]
    Warn,
    Error,
    Off,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationOptions {
    pub charset: CharsetRule,
}

pub fn validate(d: &Dataset) -> ViolationReport {
    validate_with(d, &ValidationOptions::default())
}

pub fn validate_with(d: &Dataset, options: &ValidationOptions) -> ViolationReport {
    let mut report = ViolationReport::default();

    let mut image_ids: HashSet<&ImageId> = HashSet::new();
    for im in &d.images {
        if !image_ids.insert(&im.image_id) {
            report.violations.push(Violation {
                subject: im.image_id.to_string(),
                rule: RuleCode::DuplicateImageId,
                message: format!("image id `{}` occurs more than once", im.image_id),
            });
        }
        if im.width == 0 || im.height == 0 {
            report.violations.push(Violation {
                subject: im.image_id.to_string(),
                rule: RuleCode::InvalidImageSize,
                message: format!(
                    "image `{}` has non-positive size {}x{}",
                    im.image_id, im.width, im.height
                ),
            });
        }
    }
    let image_index = d.image_index();

    let mut instance_ids: HashSet<&InstanceId> = HashSet::new();
    for inst in &d.instances {
        let subject = inst.id.to_string();
        if !instance_ids.insert(&inst.id) {
            report.violations.push(Violation {
                subject: subject.clone(),
                rule: RuleCode::DuplicateInstanceId,
                message: format!("instance id `{}` occurs more than once", inst.id),
            });
        }

        match normalize_polygon(&inst.polygon) {
            Err(_) => report.violations.push(Violation {
                subject: subject.clone(),
                rule: RuleCode::DegeneratePolygon,
                message: format!("instance `{}` has a degenerate polygon", inst.id),
            }),
            Ok(norm) if norm.self_intersecting => report.violations.push(Violation {
                subject: subject.clone(),
                rule: RuleCode::NonSimplePolygon,
                message: format!("instance `{}` has a self-intersecting polygon", inst.id),
            }),
            Ok(_) => {}
        }

        match image_index.get(&inst.image_id) {
            None => report.violations.push(Violation {
                subject: subject.clone(),
                rule: RuleCode::DanglingImageId,
                message: format!(
                    "instance `{}` references unknown image `{}`",
                    inst.id, inst.image_id
                ),
            }),
            Some(im) if im.width > 0 && im.height > 0 => {
                // Tolerant of boundary rounding: half a pixel of slack.
                let (w, h) = (im.width as f64, im.height as f64);
                let outside = inst.polygon.vertices().iter().any(|v| {
                    v.x < -0.5 || v.x > w + 0.5 || v.y < -0.5 || v.y > h + 0.5
                });
                if outside {
                    report.violations.push(Violation {
                        subject: subject.clone(),
                        rule: RuleCode::VertexOutOfBounds,
                        message: format!(
                            "instance `{}` has a vertex outside image `{}` ({}x{})",
                            inst.id, im.image_id, im.width, im.height
                        ),
                    });
                }
            }
            Some(_) => {}
        }

        if let Some(text) = &inst.transcription {
            if text.chars().any(char::is_whitespace) {
                report.violations.push(Violation {
                    subject: subject.clone(),
                    rule: RuleCode::SpaceInTranscription,
                    message: format!(
                        "instance `{}` transcription {:?} contains whitespace",
                        inst.id, text
                    ),
                });
            }
            if options.charset != CharsetRule::Off {
                if let Some(bad) = text.chars().find(|c| !(' '..='~').contains(c)) {
                    let violation = Violation {
                        subject: subject.clone(),
                        rule: RuleCode::NonAsciiTranscription,
                        message: format!(
                            "instance `{}` transcription {:?} contains {:?} outside printable ASCII",
                            inst.id, text, bad
                        ),
                    };
                    match options.charset {
                        CharsetRule::Error => report.violations.push(violation),
                        _ => report.warnings.push(violation),
                    }
                }
            }
        }

        if !inst.extra_rings.is_empty() {
            report.warnings.push(Violation {
                subject: subject.clone(),
                rule: RuleCode::MultiRingSegmentation,
                message: format!(
                    "instance `{}` has {} extra segmentation ring(s); only the first is used",
                    inst.id,
                    inst.extra_rings.len()
                ),
            });
        }
    }

    report
}
