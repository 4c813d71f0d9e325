//! ICDAR quad text formats: ground-truth files and submission files.
//!
//! One record per line, `x1,y1,x2,y2,x3,y3,x4,y4,transcription`. Input
//! tolerates CRLF and a UTF-8 BOM; output is LF. A transcription containing
//! commas (or starting with a quote) is double-quoted with `""` escaping.

use crate::annotation::{ImageId, InstanceId, TextInstance};
use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::matching::Prediction;

/// Ground-truth transcription marking an illegible (don't-care) instance.
pub const ICDAR_ILLEGIBLE_MARKER: &str = "###";

/// Parses an ICDAR quad ground-truth file for one image.
///
/// `###` maps to `legible = false` with no transcription. Instance ids are
/// `<image_id>#<line>` with 1-based line numbers.
pub fn parse_icdar_quad_gt(text: &str, image_id: &ImageId) -> Result<Vec<TextInstance>> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut instances = Vec::new();
    for (line_index, raw_line) in text.lines().enumerate() {
        let line_no = line_index + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }

        let fields: Vec<&str> = line.splitn(9, ',').collect();
        if fields.len() < 9 {
            return Err(Error::LineParse {
                line: line_no,
                message: format!("expected 8 coordinates and a transcription, got {} field(s)", fields.len()),
            });
        }
        let mut coords = [0.0f64; 8];
        for (i, field) in fields[..8].iter().enumerate() {
            coords[i] = field.trim().parse::<f64>().map_err(|_| Error::LineParse {
                line: line_no,
                message: format!("non-numeric coordinate `{}`", field.trim()),
            })?;
        }
        let polygon = Polygon::from_flat(&coords).map_err(|e| Error::LineParse {
            line: line_no,
            message: e.to_string(),
        })?;

        let raw_transcription = unquote(fields[8]);
        let (transcription, legible) = if raw_transcription == ICDAR_ILLEGIBLE_MARKER {
            (None, false)
        } else if raw_transcription.is_empty() {
            (None, true)
        } else {
            (Some(raw_transcription), true)
        };

        instances.push(TextInstance {
            id: InstanceId::new(format!("{image_id}#{line_no}")),
            image_id: image_id.clone(),
            polygon,
            transcription,
            legible,
            machine_printed: false,
            extra_rings: Vec::new(),
            extra: Default::default(),
            attr_extra: Default::default(),
        });
    }
    Ok(instances)
}

/// Formats predictions for one image as ICDAR submission lines:
/// integer-rounded vertices, then the transcription.
pub fn export_icdar_submission(preds: &[Prediction]) -> String {
    let mut out = String::new();
    for pred in preds {
        push_record(&mut out, &pred.polygon, &pred.transcription);
    }
    out
}

/// Formats ground-truth instances for one image as ICDAR quad lines;
/// illegible or untranscribed instances become `###`.
pub fn export_icdar_quad_gt(instances: &[&TextInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        let text = match (&inst.transcription, inst.legible) {
            (Some(t), true) => t.as_str(),
            _ => ICDAR_ILLEGIBLE_MARKER,
        };
        push_record(&mut out, &inst.polygon, text);
    }
    out
}

fn push_record(out: &mut String, polygon: &Polygon, transcription: &str) {
    for v in polygon.vertices() {
        out.push_str(&format!("{},{},", v.x.round() as i64, v.y.round() as i64));
    }
    out.push_str(&quote(transcription));
    out.push('\n');
}

fn quote(text: &str) -> String {
    if text.contains(',') || text.starts_with('"') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn unquote(field: &str) -> String {
    if field.len() >= 2 && field.starts_with('"') && field.ends_with('"') {
        field[1..field.len() - 1].replace("\"\"", "\"")
    } else {
        field.to_string()
    }
}
