//! One-to-one assignment of predictions to ground truth with don't-care
//! suppression, for a single image.
//!
//! Suppression uses intersection-over-prediction-area > 0.5 against illegible
//! (don't-care) ground truth. Care matching is greedy by IoU with
//! deterministic tie-breaking, which mirrors reference protocol scorers and
//! is maximal: no unmatched pair above the threshold remains.

use crate::annotation::{ImageId, InstanceId, TextInstance};
use crate::error::{Error, Result};
use crate::geometry::{
    bounding_box, normalize_polygon, polygon_area, polygon_intersection_area, AxisAlignedBox,
    Polygon,
};
use crate::lexicon::CharProbMatrix;

/// Fraction of a prediction's area that must fall inside a don't-care region
/// for the prediction to be suppressed.
pub const DONT_CARE_OVERLAP: f64 = 0.5;

/// A model output: polygon, transcription, confidence, and optionally the
/// per-step character probabilities from the recognition decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub image_id: ImageId,
    pub polygon: Polygon,
    pub transcription: String,
    pub confidence: f64,
    pub char_probs: Option<CharProbMatrix>,
}

impl Prediction {
    pub fn new(
        image_id: impl Into<ImageId>,
        polygon: Polygon,
        transcription: impl Into<String>,
        confidence: f64,
    ) -> Self {
        Prediction {
            image_id: image_id.into(),
            polygon,
            transcription: transcription.into(),
            confidence,
            char_probs: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatchConfig {
    /// Pairs require IoU strictly above this value.
    pub iou_threshold: f64,
    /// Run care matching before the don't-care pass; by default suppression
    /// comes first and a suppressed prediction can never be matched.
    pub match_before_suppress: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { iou_threshold: 0.5, match_before_suppress: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchPair {
    pub gt_id: InstanceId,
    /// Index into the prediction slice handed to [`match_instances`].
    pub pred_index: usize,
    pub iou: f64,
}

/// Outcome of matching one image. Pairs, unmatched and suppressed sets
/// partition the inputs; `unmatched_gt` lists care instances only.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    pub unmatched_gt: Vec<InstanceId>,
    pub unmatched_pred: Vec<usize>,
    pub suppressed_pred: Vec<usize>,
}

impl MatchResult {
    pub fn matched_gt_ids(&self) -> impl Iterator<Item = &InstanceId> {
        self.pairs.iter().map(|p| &p.gt_id)
    }
}

/// Matches predictions against ground truth for one image.
///
/// Ground truth with `legible = false` forms the don't-care set. All
/// polygons are normalized here; self-intersecting input is an error.
pub fn match_instances(
    gts: &[TextInstance],
    preds: &[Prediction],
    config: &MatchConfig,
) -> Result<MatchResult> {
    check_single_image(gts, preds)?;

    let gt_polys = normalized_polygons(gts.iter().map(|g| &g.polygon))?;
    let pred_polys = normalized_polygons(preds.iter().map(|p| &p.polygon))?;

    let gt_boxes: Vec<AxisAlignedBox> = gt_polys.iter().map(bounding_box).collect();
    let pred_boxes: Vec<AxisAlignedBox> = pred_polys.iter().map(bounding_box).collect();

    let care: Vec<usize> = (0..gts.len()).filter(|&i| gts[i].legible).collect();
    let dont_care: Vec<usize> = (0..gts.len()).filter(|&i| !gts[i].legible).collect();

    let mut suppressed = vec![false; preds.len()];
    let mut matched_pred = vec![false; preds.len()];
    let mut matched_gt = vec![false; gts.len()];
    let mut pairs: Vec<MatchPair> = Vec::new();

    let run_suppression = |matched_pred: &[bool], suppressed: &mut Vec<bool>| -> Result<()> {
        for (p, pred_poly) in pred_polys.iter().enumerate() {
            if matched_pred[p] || suppressed[p] {
                continue;
            }
            let pred_area = polygon_area(pred_poly);
            for &g in &dont_care {
                if !pred_boxes[p].intersects(&gt_boxes[g]) {
                    continue;
                }
                let inter = polygon_intersection_area(pred_poly, &gt_polys[g])?;
                if inter / pred_area > DONT_CARE_OVERLAP {
                    suppressed[p] = true;
                    break;
                }
            }
        }
        Ok(())
    };

    let run_matching = |suppressed: &[bool],
                            matched_pred: &mut Vec<bool>,
                            matched_gt: &mut Vec<bool>,
                            pairs: &mut Vec<MatchPair>|
     -> Result<()> {
        // Candidate pairs above the threshold, greedy by descending IoU;
        // ties break on lower gt index, then lower pred index.
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for &g in &care {
            for p in 0..preds.len() {
                if suppressed[p] || !gt_boxes[g].intersects(&pred_boxes[p]) {
                    continue;
                }
                let value = crate::geometry::iou(&gt_polys[g], &pred_polys[p])?;
                if value > config.iou_threshold {
                    candidates.push((value, g, p));
                }
            }
        }
        candidates.sort_by(|a, b| {
            b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        });
        for (value, g, p) in candidates {
            if matched_gt[g] || matched_pred[p] {
                continue;
            }
            matched_gt[g] = true;
            matched_pred[p] = true;
            pairs.push(MatchPair { gt_id: gts[g].id.clone(), pred_index: p, iou: value });
        }
        Ok(())
    };

    if config.match_before_suppress {
        run_matching(&suppressed, &mut matched_pred, &mut matched_gt, &mut pairs)?;
        run_suppression(&matched_pred, &mut suppressed)?;
    } else {
        run_suppression(&matched_pred, &mut suppressed)?;
        run_matching(&suppressed, &mut matched_pred, &mut matched_gt, &mut pairs)?;
    }

    let unmatched_gt = care
        .iter()
        .filter(|&&g| !matched_gt[g])
        .map(|&g| gts[g].id.clone())
        .collect();
    let unmatched_pred = (0..preds.len())
        .filter(|&p| !matched_pred[p] && !suppressed[p])
        .collect();
    let suppressed_pred = (0..preds.len()).filter(|&p| suppressed[p]).collect();

    Ok(MatchResult { pairs, unmatched_gt, unmatched_pred, suppressed_pred })
}

fn check_single_image(gts: &[TextInstance], preds: &[Prediction]) -> Result<()> {
    let mut expected: Option<&ImageId> = None;
    let ids = gts
        .iter()
        .map(|g| &g.image_id)
        .chain(preds.iter().map(|p| &p.image_id));
    for id in ids {
        match expected {
            None => expected = Some(id),
            Some(e) if e != id => {
                return Err(Error::CrossImageMatching {
                    expected: e.to_string(),
                    found: id.to_string(),
                })
            }
            Some(_) => {}
        }
    }
    Ok(())
}

fn normalized_polygons<'a>(polys: impl Iterator<Item = &'a Polygon>) -> Result<Vec<Polygon>> {
    polys
        .map(|p| {
            let norm = normalize_polygon(p)?;
            if norm.self_intersecting {
                return Err(Error::NonSimplePolygon);
            }
            Ok(norm.polygon)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn quad(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        Polygon::new(vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
        .unwrap()
    }

    fn gt(id: &str, poly: Polygon, text: Option<&str>) -> TextInstance {
        TextInstance::new(id, "img", poly, text.map(String::from), text.is_some(), false)
    }

    fn pred(poly: Polygon, text: &str) -> Prediction {
        Prediction::new("img", poly, text, 1.0)
    }

    #[test]
    fn identical_prediction_matches_with_iou_one() {
        let gts = vec![gt("g1", quad(0.0, 0.0, 10.0, 5.0), Some("HI"))];
        let preds = vec![pred(quad(0.0, 0.0, 10.0, 5.0), "HI")];
        let result = match_instances(&gts, &preds, &MatchConfig::default()).unwrap();
        assert_eq!(result.pairs.len(), 1);
        assert_eq!(result.pairs[0].iou, 1.0);
        assert!(result.unmatched_gt.is_empty());
        assert!(result.unmatched_pred.is_empty());
        assert!(result.suppressed_pred.is_empty());
    }

    #[test]
    fn prediction_overlapping_two_gts_takes_the_higher_iou() {
        // Prediction covers [0,10]x[0,10]; GT heights 6 and 5.5 inside it
        // give IoU 0.60 and 0.55 respectively.
        let gts = vec![
            gt("g_low", quad(0.0, 4.5, 10.0, 10.0), Some("B")),
            gt("g_high", quad(0.0, 0.0, 10.0, 6.0), Some("A")),
        ];
        let preds = vec![pred(quad(0.0, 0.0, 10.0, 10.0), "A")];
        // Brute-force check of the two candidate IoUs.
        let result = match_instances(&gts, &preds, &MatchConfig::default()).unwrap();
        assert_eq!(result.pairs.len(), 1);
        assert_eq!(result.pairs[0].gt_id.as_str(), "g_high");
        assert!((result.pairs[0].iou - 0.60).abs() <= 1e-12);
        assert_eq!(result.unmatched_gt, vec![InstanceId::new("g_low")]);
    }

    #[test]
    fn prediction_inside_dont_care_is_suppressed() {
        let gts = vec![gt("dc", quad(0.0, 0.0, 20.0, 20.0), None)];
        let preds = vec![pred(quad(5.0, 5.0, 10.0, 10.0), "X")];
        let result = match_instances(&gts, &preds, &MatchConfig::default()).unwrap();
        assert_eq!(result.suppressed_pred, vec![0]);
        assert!(result.pairs.is_empty());
        assert!(result.unmatched_pred.is_empty());
    }

    #[test]
    fn suppression_happens_before_matching_by_default() {
        // The prediction overlaps a care GT above threshold but sits mostly
        // inside a don't-care region.
        let gts = vec![
            gt("dc", quad(0.0, 0.0, 10.0, 10.0), None),
            gt("care", quad(0.0, 0.0, 10.0, 9.0), Some("A")),
        ];
        let preds = vec![pred(quad(0.0, 0.0, 10.0, 8.0), "A")];
        let default_result = match_instances(&gts, &preds, &MatchConfig::default()).unwrap();
        assert_eq!(default_result.suppressed_pred, vec![0]);
        assert!(default_result.pairs.is_empty());

        let inverted = MatchConfig { match_before_suppress: true, ..Default::default() };
        let inverted_result = match_instances(&gts, &preds, &inverted).unwrap();
        assert_eq!(inverted_result.pairs.len(), 1);
        assert!(inverted_result.suppressed_pred.is_empty());
    }

    #[test]
    fn iou_exactly_at_threshold_does_not_match() {
        let gts = vec![gt("g", quad(0.0, 0.0, 10.0, 5.0), Some("A"))];
        let preds = vec![pred(quad(0.0, 0.0, 10.0, 5.0), "A")];
        let config = MatchConfig { iou_threshold: 1.0, ..Default::default() };
        let result = match_instances(&gts, &preds, &config).unwrap();
        assert!(result.pairs.is_empty());
        assert_eq!(result.unmatched_pred, vec![0]);
    }

    #[test]
    fn cross_image_inputs_rejected() {
        let gts = vec![gt("g", quad(0.0, 0.0, 1.0, 1.0), Some("A"))];
        let preds = vec![Prediction::new("other", quad(0.0, 0.0, 1.0, 1.0), "A", 1.0)];
        assert!(matches!(
            match_instances(&gts, &preds, &MatchConfig::default()),
            Err(Error::CrossImageMatching { .. })
        ));
    }

    #[test]
    fn non_simple_gt_rejected() {
        let bow = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let gts = vec![gt("g", bow, Some("A"))];
        assert!(matches!(
            match_instances(&gts, &[], &MatchConfig::default()),
            Err(Error::NonSimplePolygon)
        ));
    }

    #[test]
    fn empty_inputs_yield_empty_result() {
        let result = match_instances(&[], &[], &MatchConfig::default()).unwrap();
        assert_eq!(result, MatchResult::default());
    }

    #[test]
    fn partition_identity_holds() {
        let gts = vec![
            gt("a", quad(0.0, 0.0, 10.0, 5.0), Some("A")),
            gt("b", quad(20.0, 0.0, 30.0, 5.0), Some("B")),
            gt("dc", quad(50.0, 50.0, 70.0, 70.0), None),
        ];
        let preds = vec![
            pred(quad(0.0, 0.0, 10.0, 5.0), "A"),
            pred(quad(55.0, 55.0, 60.0, 60.0), "X"),
            pred(quad(90.0, 90.0, 95.0, 95.0), "Y"),
        ];
        let r = match_instances(&gts, &preds, &MatchConfig::default()).unwrap();
        assert_eq!(r.pairs.len() + r.unmatched_pred.len() + r.suppressed_pred.len(), preds.len());
        assert_eq!(r.pairs.len() + r.unmatched_gt.len(), 2);
    }
}
