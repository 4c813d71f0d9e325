//! Line-delimited JSON prediction files.
//!
//! One JSON object per line:
//! `{"image_id": ..., "detections": [{"points": [x1,y1,...],
//! "transcription": ..., "score": ..., "char_probs": {"alphabet": "<ordered
//! chars>", "rows": [[...], ...]}}]}` — `char_probs` optional, `image_id`
//! may be a JSON number or string.

use serde::Deserialize;
use serde_json::Value;

use crate::annotation::ImageId;
use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::jsonfmt::{format_coord, id_literal, json_string};
use crate::lexicon::CharProbMatrix;
use crate::matching::Prediction;

#[derive(Deserialize)]
struct RecordLine {
    image_id: Value,
    detections: Vec<DetectionLine>,
}

#[derive(Deserialize)]
struct DetectionLine {
    points: Vec<f64>,
    transcription: String,
    score: f64,
    #[serde(default)]
    char_probs: Option<CharProbsLine>,
}

#[derive(Deserialize)]
struct CharProbsLine {
    alphabet: String,
    rows: Vec<Vec<f64>>,
}

/// Parses a prediction file. Records for the same image may span several
/// lines; detections accumulate in file order.
pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>> {
    let mut predictions = Vec::new();
    for (line_index, raw_line) in text.lines().enumerate() {
        let line_no = line_index + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let record: RecordLine = serde_json::from_str(line).map_err(|e| Error::LineParse {
            line: line_no,
            message: e.to_string(),
        })?;
        let image_id = match &record.image_id {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => {
                return Err(Error::LineParse {
                    line: line_no,
                    message: "`image_id` must be a string or number".into(),
                })
            }
        };
        for det in record.detections {
            predictions.push(detection_to_prediction(det, &image_id, line_no)?);
        }
    }
    Ok(predictions)
}

fn detection_to_prediction(
    det: DetectionLine,
    image_id: &str,
    line_no: usize,
) -> Result<Prediction> {
    let polygon = Polygon::from_flat(&det.points).map_err(|e| Error::LineParse {
        line: line_no,
        message: e.to_string(),
    })?;
    if !(0.0..=1.0).contains(&det.score) {
        return Err(Error::LineParse {
            line: line_no,
            message: format!("score {} outside [0, 1]", det.score),
        });
    }
    if det.transcription.chars().any(char::is_whitespace) {
        return Err(Error::LineParse {
            line: line_no,
            message: format!("transcription {:?} contains whitespace", det.transcription),
        });
    }
    let char_probs = match det.char_probs {
        None => None,
        Some(cp) => {
            let matrix = CharProbMatrix::new(cp.alphabet.chars().collect(), cp.rows)
                .map_err(|e| Error::LineParse { line: line_no, message: e.to_string() })?;
            let chars = det.transcription.chars().count();
            if matrix.row_count() != chars {
                return Err(Error::LineParse {
                    line: line_no,
                    message: format!(
                        "char_probs has {} rows but transcription has {} characters",
                        matrix.row_count(),
                        chars
                    ),
                });
            }
            Some(matrix)
        }
    };
    Ok(Prediction {
        image_id: ImageId::new(image_id),
        polygon,
        transcription: det.transcription,
        confidence: det.score,
        char_probs,
    })
}

/// Writes predictions grouped one image per line, deterministic byte layout.
pub fn serialize_predictions(predictions: &[Prediction]) -> String {
    let mut by_image: std::collections::BTreeMap<&ImageId, Vec<&Prediction>> = Default::default();
    for pred in predictions {
        by_image.entry(&pred.image_id).or_default().push(pred);
    }
    let mut out = String::new();
    for (image_id, preds) in by_image {
        let detections: Vec<String> = preds.iter().map(|p| render_detection(p)).collect();
        out.push_str(&format!(
            "{{\"image_id\": {}, \"detections\": [{}]}}\n",
            id_literal(image_id.as_str()),
            detections.join(",")
        ));
    }
    out
}

fn render_detection(pred: &Prediction) -> String {
    let points: Vec<String> = pred.polygon.to_flat().iter().map(|&c| format_coord(c)).collect();
    let mut fields = format!(
        "{{\"points\":[{}],\"transcription\":{},\"score\":{}",
        points.join(","),
        json_string(&pred.transcription),
        crate::jsonfmt::format_metric(pred.confidence),
    );
    if let Some(probs) = &pred.char_probs {
        let rows: Vec<String> = (0..probs.row_count())
            .map(|i| {
                let row: Vec<String> = probs
                    .alphabet()
                    .iter()
                    .map(|&c| format!("{}", probs.prob(i, c)))
                    .collect();
                format!("[{}]", row.join(","))
            })
            .collect();
        fields.push_str(&format!(
            ",\"char_probs\":{{\"alphabet\":{},\"rows\":[{}]}}",
            json_string(&probs.alphabet().iter().collect::<String>()),
            rows.join(",")
        ));
    }
    fields.push('}');
    fields
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_line() {
        let text = r#"{"image_id": "img_1", "detections": [{"points": [0,0,10,0,10,5,0,5], "transcription": "HI", "score": 0.9}]}"#;
        let preds = parse_predictions(text).unwrap();
        assert_eq!(preds.len(), 1);
        assert_eq!(preds[0].image_id.as_str(), "img_1");
        assert_eq!(preds[0].transcription, "HI");
        assert_eq!(preds[0].confidence, 0.9);
        assert!(preds[0].char_probs.is_none());
    }

    #[test]
    fn numeric_image_id_accepted() {
        let text = r#"{"image_id": 7, "detections": [{"points": [0,0,1,0,1,1], "transcription": "A", "score": 1.0}]}"#;
        let preds = parse_predictions(text).unwrap();
        assert_eq!(preds[0].image_id.as_str(), "7");
    }

    #[test]
    fn char_probs_parse_and_validate() {
        let text = r#"{"image_id": "i", "detections": [{"points": [0,0,1,0,1,1], "transcription": "AB", "score": 1.0, "char_probs": {"alphabet": "AB", "rows": [[0.9, 0.1], [0.2, 0.8]]}}]}"#;
        let preds = parse_predictions(text).unwrap();
        let probs = preds[0].char_probs.as_ref().unwrap();
        assert_eq!(probs.row_count(), 2);
        assert_eq!(probs.prob(0, 'A'), 0.9);

        let bad_rows = r#"{"image_id": "i", "detections": [{"points": [0,0,1,0,1,1], "transcription": "ABC", "score": 1.0, "char_probs": {"alphabet": "AB", "rows": [[0.9, 0.1]]}}]}"#;
        match parse_predictions(bad_rows) {
            Err(Error::LineParse { line: 1, message }) => assert!(message.contains("rows")),
            other => panic!("expected row-count error, got {other:?}"),
        }
    }

    #[test]
    fn bad_score_and_malformed_json_are_line_numbered() {
        let text = "\n{\"image_id\": \"i\", \"detections\": [{\"points\": [0,0,1,0,1,1], \"transcription\": \"A\", \"score\": 1.5}]}";
        match parse_predictions(text) {
            Err(Error::LineParse { line: 2, message }) => assert!(message.contains("score")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_predictions("{nope}"),
            Err(Error::LineParse { line: 1, .. })
        ));
    }

    #[test]
    fn round_trips_through_serialization() {
        let text = r#"{"image_id": "img_1", "detections": [{"points": [0,0,10,0,10,5,0,5], "transcription": "HI", "score": 0.9}, {"points": [1,1,2,1,2,2], "transcription": "B", "score": 0.5}]}"#;
        let preds = parse_predictions(text).unwrap();
        let written = serialize_predictions(&preds);
        let reparsed = parse_predictions(&written).unwrap();
        assert_eq!(preds.len(), reparsed.len());
        assert_eq!(preds[0].transcription, reparsed[0].transcription);
        assert_eq!(preds[0].polygon, reparsed[0].polygon);
        // Byte-deterministic.
        assert_eq!(written, serialize_predictions(&reparsed));
    }
}
