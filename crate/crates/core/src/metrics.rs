//! Word Spotting and End-to-end recognition precision/recall/hmean.
//!
//! Per image: ineligible care words are reclassified as don't-care under
//! word spotting, matching runs, optional lexicon correction rewrites
//! prediction transcriptions, and a matched pair counts as a true positive
//! only when the normalized transcriptions agree. A matched pair with the
//! wrong transcription costs one false positive and one false negative: the
//! detection is consumed, the recognition failed.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::annotation::{Dataset, ImageId, TextInstance};
use crate::error::{Error, Result};
use crate::jsonfmt::{format_metric, json_string};
use crate::lexicon::{best_match, Lexicon, LexiconMode};
use crate::matching::{match_instances, MatchConfig, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Protocol {
    #[default]
    EndToEnd,
    WordSpotting,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::EndToEnd => "end_to_end",
            Protocol::WordSpotting => "word_spotting",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "e2e" | "end_to_end" | "end-to-end" => Ok(Protocol::EndToEnd),
            "word-spotting" | "word_spotting" | "ws" => Ok(Protocol::WordSpotting),
            other => Err(format!("unknown protocol `{other}`")),
        }
    }
}

/// Transcription comparison and word-spotting eligibility settings.
#[derive(Debug, Clone)]
pub struct NormalizationPolicy {
    /// Fold case before comparison (the reference scorers do).
    pub case_fold: bool,
    /// Strip leading/trailing characters outside `[A-Za-z0-9]`.
    pub strip_edge_punctuation: bool,
    /// Minimum normalized length for a word-spotting-eligible ground truth.
    pub word_spotting_min_len: usize,
    /// Word-spotting-eligible words must be purely alphanumeric.
    pub word_spotting_alnum_only: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        NormalizationPolicy {
            case_fold: true,
            strip_edge_punctuation: true,
            word_spotting_min_len: 3,
            word_spotting_alnum_only: true,
        }
    }
}

/// Normalizes a transcription under the policy; idempotent. May return an
/// empty string when stripping consumes everything.
pub fn normalize_transcription(s: &str, policy: &NormalizationPolicy) -> String {
    let stripped = if policy.strip_edge_punctuation {
        s.trim_matches(|c: char| !c.is_ascii_alphanumeric())
    } else {
        s
    };
    if policy.case_fold {
        stripped.to_uppercase()
    } else {
        stripped.to_string()
    }
}

/// True when the normalized ground-truth word takes part in word spotting.
/// Ineligible words become don't-care regions.
pub fn word_spotting_eligible(gt_transcription: &str, policy: &NormalizationPolicy) -> bool {
    let normalized = normalize_transcription(gt_transcription, policy);
    if normalized.chars().count() < policy.word_spotting_min_len {
        return false;
    }
    !policy.word_spotting_alnum_only || normalized.chars().all(|c| c.is_ascii_alphanumeric())
}

/// Equality of normalized transcriptions.
pub fn transcription_match(pred: &str, gt: &str, policy: &NormalizationPolicy) -> bool {
    normalize_transcription(pred, policy) == normalize_transcription(gt, policy)
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn hmean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub protocol: Protocol,
    pub policy: NormalizationPolicy,
    pub iou_threshold: f64,
    pub match_before_suppress: bool,
    /// Normalized-cost rejection threshold for weak/generic lexicon matching.
    pub wed_reject_threshold: f64,
    /// Evaluate images on the rayon pool. Aggregation is order-free sums, so
    /// results are identical either way.
    pub parallel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            protocol: Protocol::EndToEnd,
            policy: NormalizationPolicy::default(),
            iou_threshold: 0.5,
            match_before_suppress: false,
            wed_reject_threshold: 0.5,
            parallel: true,
        }
    }
}

/// Counts plus derived metrics for one image or for a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Counts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        let denom = self.true_positives + self.false_positives;
        if denom == 0 {
            0.0
        } else {
            self.true_positives as f64 / denom as f64
        }
    }

    pub fn recall(&self) -> f64 {
        let denom = self.true_positives + self.false_negatives;
        if denom == 0 {
            0.0
        } else {
            self.true_positives as f64 / denom as f64
        }
    }

    pub fn hmean(&self) -> f64 {
        hmean(self.precision(), self.recall())
    }

    fn add(&mut self, other: &Counts) {
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
    }
}

/// Evaluation outcome: totals, derived metrics, per-image breakdown, and any
/// per-instance geometry errors that excluded records from scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub totals: Counts,
    pub precision: f64,
    pub recall: f64,
    pub hmean: f64,
    pub per_image: BTreeMap<ImageId, Counts>,
    pub errors: Vec<String>,
}

impl EvalReport {
    /// Canonical report JSON: sorted keys, six-decimal metrics, LF endings.
    pub fn to_canonical_json(&self) -> String {
        let mut entries: Vec<(&str, String)> = Vec::new();
        if !self.errors.is_empty() {
            let items: Vec<String> = self.errors.iter().map(|e| json_string(e)).collect();
            entries.push(("errors", format!("[{}]", items.join(","))));
        }
        entries.push(("fn", self.totals.false_negatives.to_string()));
        entries.push(("fp", self.totals.false_positives.to_string()));
        entries.push(("hmean", format_metric(self.hmean)));
        let per_image = if self.per_image.is_empty() {
            "{}".to_string()
        } else {
            let lines: Vec<String> = self
                .per_image
                .iter()
                .map(|(id, c)| {
                    format!(
                        "{}: {{\"fn\":{},\"fp\":{},\"hmean\":{},\"precision\":{},\"recall\":{},\"tp\":{}}}",
                        json_string(id.as_str()),
                        c.false_negatives,
                        c.false_positives,
                        format_metric(c.hmean()),
                        format_metric(c.precision()),
                        format_metric(c.recall()),
                        c.true_positives,
                    )
                })
                .collect();
            format!("{{\n{}\n}}", lines.join(",\n"))
        };
        entries.push(("per_image", per_image));
        entries.push(("precision", format_metric(self.precision)));
        entries.push(("protocol", json_string(self.protocol.as_str())));
        entries.push(("recall", format_metric(self.recall)));
        entries.push(("tp", self.totals.true_positives.to_string()));

        let body: Vec<String> = entries
            .iter()
            .map(|(k, v)| format!("{}: {}", json_string(k), v))
            .collect();
        format!("{{\n{}\n}}\n", body.join(",\n"))
    }

    /// One-line `P=… R=… H=…` summary with six decimals.
    pub fn summary_line(&self) -> String {
        format!(
            "P={} R={} H={}",
            format_metric(self.precision),
            format_metric(self.recall),
            format_metric(self.hmean)
        )
    }
}

/// Runs the evaluation protocol over a ground-truth dataset and predictions.
///
/// Every prediction must reference an image present in the dataset. With a
/// lexicon, each prediction's transcription is rewritten by [`best_match`]
/// before comparison. Instances or predictions with degenerate or
/// self-intersecting polygons are excluded from scoring and recorded in
/// [`EvalReport::errors`] instead of aborting the run.
pub fn evaluate(
    dataset: &Dataset,
    predictions: &[Prediction],
    lexicon: Option<&Lexicon>,
    config: &EvalConfig,
) -> Result<EvalReport> {
    let image_ids: HashSet<&ImageId> = dataset.images.iter().map(|im| &im.image_id).collect();
    for pred in predictions {
        if !image_ids.contains(&pred.image_id) {
            return Err(Error::UnknownImage { image_id: pred.image_id.to_string() });
        }
    }

    let mut corrected: Vec<Prediction> = predictions.to_vec();
    if let Some(lex) = lexicon {
        if lex.mode != LexiconMode::None {
            for pred in &mut corrected {
                let replacement = best_match(
                    &pred.transcription,
                    pred.char_probs.as_ref(),
                    lex,
                    &pred.image_id,
                    config.wed_reject_threshold,
                )?;
                if let Some(word) = replacement {
                    pred.transcription = word;
                }
            }
        }
    }
    // Canonical prediction order: makes the outcome (greedy tie-breaking
    // included) independent of input file order.
    corrected.sort_by(|a, b| {
        let ka = a.polygon.to_flat();
        let kb = b.polygon.to_flat();
        ka.iter()
            .zip(&kb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ka.len().cmp(&kb.len()))
            .then(a.transcription.cmp(&b.transcription))
            .then(a.confidence.total_cmp(&b.confidence))
    });

    let mut preds_by_image: BTreeMap<ImageId, Vec<Prediction>> = BTreeMap::new();
    for pred in corrected {
        preds_by_image.entry(pred.image_id.clone()).or_default().push(pred);
    }

    let mut gts_by_image: BTreeMap<&ImageId, Vec<&TextInstance>> = BTreeMap::new();
    for inst in &dataset.instances {
        gts_by_image.entry(&inst.image_id).or_default().push(inst);
    }

    // Evaluate images in sorted-id order so the report is deterministic.
    let images: Vec<&ImageId> = {
        let mut ids: Vec<&ImageId> = image_ids.into_iter().collect();
        ids.sort();
        ids
    };
    let empty_preds: Vec<Prediction> = Vec::new();
    let empty_gts: Vec<&TextInstance> = Vec::new();
    let job = |image_id: &&ImageId| -> Result<(ImageId, Counts, Vec<String>)> {
        let gts = gts_by_image.get(*image_id).unwrap_or(&empty_gts);
        let preds = preds_by_image.get(*image_id).unwrap_or(&empty_preds);
        let (counts, errors) = evaluate_image(image_id, gts, preds, config)?;
        Ok(((*image_id).clone(), counts, errors))
    };
    let results: Vec<Result<(ImageId, Counts, Vec<String>)>> = if config.parallel {
        images.par_iter().map(job).collect()
    } else {
        images.iter().map(job).collect()
    };

    let mut totals = Counts::default();
    let mut per_image = BTreeMap::new();
    let mut errors = Vec::new();
    for result in results {
        let (image_id, counts, image_errors) = result?;
        totals.add(&counts);
        errors.extend(image_errors);
        per_image.insert(image_id, counts);
    }

    Ok(EvalReport {
        protocol: config.protocol,
        precision: totals.precision(),
        recall: totals.recall(),
        hmean: totals.hmean(),
        totals,
        per_image,
        errors,
    })
}

fn evaluate_image(
    image_id: &ImageId,
    gts: &[&TextInstance],
    preds: &[Prediction],
    config: &EvalConfig,
) -> Result<(Counts, Vec<String>)> {
    let mut errors: Vec<String> = Vec::new();

    // Drop records whose polygons cannot be scored, keeping a note. A care
    // ground truth without a transcription cannot be recognition-scored and
    // is treated as don't-care, as is any word-spotting-ineligible word.
    let mut scored_gts: Vec<TextInstance> = Vec::new();
    for gt in gts {
        match crate::geometry::normalize_polygon(&gt.polygon) {
            Err(e) => {
                errors.push(format!("image {image_id} gt {}: {e}", gt.id));
                continue;
            }
            Ok(norm) if norm.self_intersecting => {
                errors.push(format!("image {image_id} gt {}: non-simple polygon", gt.id));
                continue;
            }
            Ok(_) => {}
        }
        let mut gt = (*gt).clone();
        let care = gt.legible
            && match &gt.transcription {
                None => false,
                Some(text) => {
                    config.protocol != Protocol::WordSpotting
                        || word_spotting_eligible(text, &config.policy)
                }
            };
        gt.legible = care;
        scored_gts.push(gt);
    }

    let mut scored_preds: Vec<Prediction> = Vec::new();
    for pred in preds {
        match crate::geometry::normalize_polygon(&pred.polygon) {
            Err(e) => {
                errors.push(format!(
                    "image {image_id} prediction {:?} at {}: {e}",
                    pred.transcription,
                    vertex_tag(pred)
                ));
            }
            Ok(norm) if norm.self_intersecting => {
                errors.push(format!(
                    "image {image_id} prediction {:?} at {}: non-simple polygon",
                    pred.transcription,
                    vertex_tag(pred)
                ));
            }
            Ok(_) => scored_preds.push(pred.clone()),
        }
    }

    let match_config = MatchConfig {
        iou_threshold: config.iou_threshold,
        match_before_suppress: config.match_before_suppress,
    };
    let result = match_instances(&scored_gts, &scored_preds, &match_config)?;

    let gt_text: BTreeMap<&crate::annotation::InstanceId, &str> = scored_gts
        .iter()
        .filter_map(|g| g.transcription.as_deref().map(|t| (&g.id, t)))
        .collect();

    let mut counts = Counts::default();
    for pair in &result.pairs {
        let gt_transcription = gt_text.get(&pair.gt_id).copied().unwrap_or("");
        let pred_transcription = &scored_preds[pair.pred_index].transcription;
        if transcription_match(pred_transcription, gt_transcription, &config.policy) {
            counts.true_positives += 1;
        } else {
            counts.false_positives += 1;
            counts.false_negatives += 1;
        }
    }
    counts.false_positives += result.unmatched_pred.len() as u64;
    counts.false_negatives += result.unmatched_gt.len() as u64;

    Ok((counts, errors))
}

fn vertex_tag(pred: &Prediction) -> String {
    let v = pred.polygon.vertices()[0];
    format!("({},{})", crate::jsonfmt::format_coord(v.x), crate::jsonfmt::format_coord(v.y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::ImageRecord;
    use crate::geometry::{Point, Polygon};

    fn quad(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        Polygon::new(vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
        .unwrap()
    }

    fn policy() -> NormalizationPolicy {
        NormalizationPolicy::default()
    }

    #[test]
    fn normalize_strips_and_folds() {
        assert_eq!(normalize_transcription("Door,", &policy()), "DOOR");
        assert_eq!(normalize_transcription("HELLO", &policy()), "HELLO");
        assert_eq!(normalize_transcription("(hi)", &policy()), "HI");
        assert_eq!(normalize_transcription("!!!", &policy()), "");
    }

    #[test]
    fn normalize_is_idempotent() {
        for s in ["Door,", "..a..", "Wi-Fi", "çà", "123", ""] {
            let once = normalize_transcription(s, &policy());
            assert_eq!(normalize_transcription(&once, &policy()), once);
        }
    }

    #[test]
    fn eligibility_rules() {
        assert!(!word_spotting_eligible("ab", &policy()));
        assert!(word_spotting_eligible("HOTEL", &policy()));
        assert!(!word_spotting_eligible("Wi-Fi", &policy()));
        assert!(word_spotting_eligible("B&B", &NormalizationPolicy {
            word_spotting_alnum_only: false,
            ..policy()
        }));
    }

    #[test]
    fn transcription_match_folds_case() {
        assert!(transcription_match("hello", "HELLO", &policy()));
        assert!(!transcription_match("HELL0", "HELLO", &policy()));
        let sensitive = NormalizationPolicy { case_fold: false, ..policy() };
        assert!(!transcription_match("hello", "HELLO", &sensitive));
    }

    #[test]
    fn hmean_basics() {
        assert_eq!(hmean(1.0, 1.0), 1.0);
        assert!((hmean(0.5, 1.0) - 2.0 / 3.0).abs() <= 1e-12);
        assert_eq!(hmean(0.0, 0.0), 0.0);
    }

    fn hand_fixture() -> (Dataset, Vec<Prediction>) {
        let mut d = Dataset::new("fixture");
        d.images.push(ImageRecord::new("img", "img.jpg", 100, 100));
        d.instances.push(TextInstance::new(
            "care",
            "img",
            quad(0.0, 0.0, 10.0, 10.0),
            Some("HELLO".into()),
            true,
            false,
        ));
        d.instances.push(TextInstance::new(
            "dc",
            "img",
            quad(20.0, 20.0, 30.0, 30.0),
            None,
            false,
            false,
        ));
        let preds = vec![
            // IoU 0.8 against the care GT.
            Prediction::new("img", quad(0.0, 0.0, 10.0, 8.0), "HELLO", 0.9),
            // Far from everything.
            Prediction::new("img", quad(50.0, 50.0, 60.0, 60.0), "XYZ", 0.8),
        ];
        (d, preds)
    }

    #[test]
    fn hand_fixture_scores_half_precision_full_recall() {
        let (d, preds) = hand_fixture();
        let report = evaluate(&d, &preds, None, &EvalConfig::default()).unwrap();
        assert_eq!(report.totals.true_positives, 1);
        assert_eq!(report.totals.false_positives, 1);
        assert_eq!(report.totals.false_negatives, 0);
        assert_eq!(report.precision, 0.5);
        assert_eq!(report.recall, 1.0);
        assert!((report.hmean - 2.0 / 3.0).abs() <= 1e-12);
        assert_eq!(report.summary_line(), "P=0.500000 R=1.000000 H=0.666667");
    }

    #[test]
    fn perfect_predictions_score_one() {
        let (d, _) = hand_fixture();
        let preds = vec![Prediction::new("img", quad(0.0, 0.0, 10.0, 10.0), "hello", 1.0)];
        let report = evaluate(&d, &preds, None, &EvalConfig::default()).unwrap();
        assert_eq!((report.precision, report.recall, report.hmean), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_predictions_score_zero_by_convention() {
        let (d, _) = hand_fixture();
        let report = evaluate(&d, &[], None, &EvalConfig::default()).unwrap();
        assert_eq!((report.precision, report.recall, report.hmean), (0.0, 0.0, 0.0));
        assert_eq!(report.totals.false_negatives, 1);
    }

    #[test]
    fn wrong_transcription_costs_fp_and_fn() {
        let (d, _) = hand_fixture();
        let preds = vec![Prediction::new("img", quad(0.0, 0.0, 10.0, 10.0), "JELLO", 1.0)];
        let report = evaluate(&d, &preds, None, &EvalConfig::default()).unwrap();
        assert_eq!(report.totals.true_positives, 0);
        assert_eq!(report.totals.false_positives, 1);
        assert_eq!(report.totals.false_negatives, 1);
    }

    #[test]
    fn word_spotting_reclassifies_ineligible_gt() {
        let mut d = Dataset::new("ws");
        d.images.push(ImageRecord::new("img", "img.jpg", 100, 100));
        d.instances.push(TextInstance::new(
            "g1",
            "img",
            quad(0.0, 0.0, 10.0, 10.0),
            Some("HELLO".into()),
            true,
            false,
        ));
        d.instances.push(TextInstance::new(
            "g2",
            "img",
            quad(40.0, 40.0, 50.0, 50.0),
            Some("ab".into()),
            true,
            false,
        ));
        let preds = vec![Prediction::new("img", quad(0.0, 0.0, 10.0, 10.0), "HELLO", 1.0)];

        let ws = EvalConfig { protocol: Protocol::WordSpotting, ..Default::default() };
        let report = evaluate(&d, &preds, None, &ws).unwrap();
        assert_eq!((report.precision, report.recall, report.hmean), (1.0, 1.0, 1.0));

        // End-to-end on the same fixture still counts the short word.
        let e2e = EvalConfig::default();
        let report = evaluate(&d, &preds, None, &e2e).unwrap();
        assert_eq!(report.totals.false_negatives, 1);
        assert_eq!(report.recall, 0.5);
    }

    #[test]
    fn unknown_prediction_image_is_an_error() {
        let (d, _) = hand_fixture();
        let preds = vec![Prediction::new("ghost", quad(0.0, 0.0, 1.0, 1.0), "A", 1.0)];
        assert!(matches!(
            evaluate(&d, &preds, None, &EvalConfig::default()),
            Err(Error::UnknownImage { .. })
        ));
    }

    #[test]
    fn lexicon_correction_rescues_near_miss() {
        let (d, _) = hand_fixture();
        let preds = vec![Prediction::new("img", quad(0.0, 0.0, 10.0, 10.0), "HELL0", 1.0)];
        let lex = Lexicon::from_words(LexiconMode::Generic, ["HELLO", "WORLD"], &policy());
        let report = evaluate(&d, &preds, Some(&lex), &EvalConfig::default()).unwrap();
        assert_eq!(report.totals.true_positives, 1);
    }

    #[test]
    fn non_simple_gt_is_reported_not_fatal() {
        let (mut d, preds) = hand_fixture();
        d.instances.push(TextInstance::new(
            "bow",
            "img",
            Polygon::new(vec![
                Point::new(70.0, 70.0),
                Point::new(80.0, 80.0),
                Point::new(80.0, 70.0),
                Point::new(70.0, 80.0),
            ])
            .unwrap(),
            Some("BOW".into()),
            true,
            false,
        ));
        let report = evaluate(&d, &preds, None, &EvalConfig::default()).unwrap();
        assert_eq!(report.errors.len(), 1);
        assert!(report.errors[0].contains("non-simple"));
        // The bow-tie instance is excluded, so counts match the clean fixture.
        assert_eq!(report.totals.true_positives, 1);
    }

    #[test]
    fn report_is_invariant_under_prediction_reordering() {
        let (d, mut preds) = hand_fixture();
        let forward = evaluate(&d, &preds, None, &EvalConfig::default()).unwrap();
        preds.reverse();
        let backward = evaluate(&d, &preds, None, &EvalConfig::default()).unwrap();
        assert_eq!(forward, backward);
        assert_eq!(forward.to_canonical_json(), backward.to_canonical_json());
    }

    #[test]
    fn serial_and_parallel_reports_are_identical() {
        let (d, preds) = hand_fixture();
        let par = evaluate(&d, &preds, None, &EvalConfig::default()).unwrap();
        let ser = evaluate(&d, &preds, None, &EvalConfig { parallel: false, ..Default::default() })
            .unwrap();
        assert_eq!(par, ser);
        assert_eq!(par.to_canonical_json(), ser.to_canonical_json());
    }

    #[test]
    fn suppressed_prediction_does_not_change_the_report() {
        let (d, mut preds) = hand_fixture();
        let base = evaluate(&d, &preds, None, &EvalConfig::default()).unwrap();
        preds.push(Prediction::new("img", quad(21.0, 21.0, 29.0, 29.0), "NOISE", 0.3));
        let with_suppressed = evaluate(&d, &preds, None, &EvalConfig::default()).unwrap();
        assert_eq!(base.totals, with_suppressed.totals);
    }

    #[test]
    fn canonical_json_shape() {
        let (d, preds) = hand_fixture();
        let report = evaluate(&d, &preds, None, &EvalConfig::default()).unwrap();
        let json = report.to_canonical_json();
        assert!(json.contains("\"protocol\": \"end_to_end\""));
        assert!(json.contains("\"precision\": 0.500000"));
        assert!(json.contains("\"img\": {\"fn\":0,\"fp\":1,\"hmean\":0.666667,\"precision\":0.500000,\"recall\":1.000000,\"tp\":1}"));
        // Parses as ordinary JSON.
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["tp"], 1);
    }
}
