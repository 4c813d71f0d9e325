//! COCO-style text annotation JSON: lenient parsing, canonical serialization.
//!
//! Canonical output: sorted keys, two-decimal coordinates, LF line endings,
//! one image / annotation object per line. Unknown fields parse into `extra`
//! maps and are re-emitted verbatim, so foreign files survive a round trip.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::annotation::{Dataset, ImageId, ImageRecord, InstanceId, TextInstance};
use crate::error::{Error, Result};
use crate::geometry::{bounding_box, Polygon};
use crate::jsonfmt::{canonical_value, format_coord, id_literal, json_parse_error, json_string};

/// Parses a COCO-style text annotation document.
///
/// `subset_name` labels the dataset (typically the source file stem); it is
/// caller-side metadata and never serialized.
pub fn parse_coco_text(document: &[u8], subset_name: impl Into<String>) -> Result<Dataset> {
    let root: Value =
        serde_json::from_slice(document).map_err(|e| json_parse_error(e, document))?;
    let Value::Object(mut root) = root else {
        return Err(Error::Schema { message: "top-level JSON value must be an object".into() });
    };

    let images_value = root.remove("images").ok_or_else(|| Error::MissingField {
        field: "images".into(),
        context: None,
    })?;
    let annotations_value = root.remove("annotations").ok_or_else(|| Error::MissingField {
        field: "annotations".into(),
        context: None,
    })?;

    let mut dataset = Dataset::new(subset_name);
    dataset.extra = root.into_iter().collect();

    let Value::Array(images) = images_value else {
        return Err(Error::Schema { message: "`images` must be an array".into() });
    };
    for (index, image) in images.into_iter().enumerate() {
        dataset.images.push(parse_image(image, index)?);
    }

    let Value::Array(annotations) = annotations_value else {
        return Err(Error::Schema { message: "`annotations` must be an array".into() });
    };
    for (index, annotation) in annotations.into_iter().enumerate() {
        dataset.instances.push(parse_annotation(annotation, index)?);
    }

    Ok(dataset)
}

fn parse_image(value: Value, index: usize) -> Result<ImageRecord> {
    let context = format!("image at index {index}");
    let Value::Object(mut obj) = value else {
        return Err(Error::Schema { message: format!("{context}: not an object") });
    };
    let id = take_id(&mut obj, "id", &context)?;
    let file_name = match obj.remove("file_name") {
        Some(Value::String(s)) => s,
        Some(_) => {
            return Err(Error::Schema { message: format!("{context}: `file_name` must be a string") })
        }
        None => return Err(Error::MissingField { field: "file_name".into(), context: Some(context) }),
    };
    let width = take_dimension(&mut obj, "width", &context)?;
    let height = take_dimension(&mut obj, "height", &context)?;
    Ok(ImageRecord {
        image_id: ImageId::new(id),
        file_name,
        width,
        height,
        extra: obj.into_iter().collect(),
    })
}

fn parse_annotation(value: Value, index: usize) -> Result<TextInstance> {
    let context = format!("annotation at index {index}");
    let Value::Object(mut obj) = value else {
        return Err(Error::Schema { message: format!("{context}: not an object") });
    };
    let id = take_id(&mut obj, "id", &context)?;
    let image_id = take_id(&mut obj, "image_id", &context)?;
    let context = format!("{context} (id `{id}`)");

    // `bbox` is derivable from the polygon; dropped here, re-derived on write.
    obj.remove("bbox");

    let segmentation = obj.remove("segmentation").ok_or_else(|| Error::MissingField {
        field: "segmentation".into(),
        context: Some(context.clone()),
    })?;
    let Value::Array(rings) = segmentation else {
        return Err(Error::Schema {
            message: format!("{context}: `segmentation` must be an array of rings"),
        });
    };
    let mut ring_iter = rings.into_iter();
    let first_ring = ring_iter.next().ok_or_else(|| Error::Geometry {
        message: "empty segmentation".into(),
        context: Some(context.clone()),
    })?;
    let coords = ring_coords(first_ring, &context)?;
    let polygon = Polygon::from_flat(&coords).map_err(|e| match e {
        Error::Geometry { message, .. } => Error::Geometry { message, context: Some(context.clone()) },
        other => other,
    })?;
    let extra_rings: Vec<Vec<f64>> = ring_iter
        .map(|ring| ring_coords(ring, &context))
        .collect::<Result<_>>()?;

    let attributes = obj.remove("attributes").ok_or_else(|| Error::MissingField {
        field: "attributes".into(),
        context: Some(context.clone()),
    })?;
    let Value::Object(mut attrs) = attributes else {
        return Err(Error::Schema { message: format!("{context}: `attributes` must be an object") });
    };

    let transcription = match attrs.remove("transcription") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s.is_empty() => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => {
            return Err(Error::Schema {
                message: format!("{context}: `attributes.transcription` must be a string"),
            })
        }
    };
    let legible = take_bool(&mut attrs, "legible", &context)?;
    // Both historical spellings are accepted; the canonical writer always
    // emits `machine_printed`.
    let machine_printed = match attrs.remove("machine_printed") {
        Some(v) => coerce_bool(v, "attributes.machine_printed", &context)?,
        None => match attrs.remove("machine-printed") {
            Some(v) => coerce_bool(v, "attributes.machine-printed", &context)?,
            None => {
                return Err(Error::MissingField {
                    field: "attributes.machine_printed".into(),
                    context: Some(context),
                })
            }
        },
    };

    Ok(TextInstance {
        id: InstanceId::new(id),
        image_id: ImageId::new(image_id),
        polygon,
        transcription,
        legible,
        machine_printed,
        extra_rings,
        extra: obj.into_iter().collect(),
        attr_extra: attrs.into_iter().collect(),
    })
}

fn ring_coords(ring: Value, context: &str) -> Result<Vec<f64>> {
    let Value::Array(items) = ring else {
        return Err(Error::Schema {
            message: format!("{context}: segmentation ring must be an array of numbers"),
        });
    };
    if items.len() < 6 {
        return Err(Error::Geometry {
            message: format!(
                "segmentation ring needs an even number of at least 6 coordinates, got {}",
                items.len()
            ),
            context: Some(context.to_string()),
        });
    }
    items
        .iter()
        .map(|v| {
            v.as_f64().ok_or_else(|| Error::Schema {
                message: format!("{context}: segmentation ring contains a non-numeric value"),
            })
        })
        .collect()
}

fn take_id(obj: &mut serde_json::Map<String, Value>, field: &str, context: &str) -> Result<String> {
    match obj.remove(field) {
        Some(Value::String(s)) => Ok(s),
        Some(Value::Number(n)) => {
            if let Some(i) = n.as_i64() {
                Ok(i.to_string())
            } else if let Some(u) = n.as_u64() {
                Ok(u.to_string())
            } else {
                Err(Error::Schema { message: format!("{context}: `{field}` must be an integer or string") })
            }
        }
        Some(_) => Err(Error::Schema { message: format!("{context}: `{field}` must be an integer or string") }),
        None => Err(Error::MissingField { field: field.into(), context: Some(context.to_string()) }),
    }
}

fn take_dimension(obj: &mut serde_json::Map<String, Value>, field: &str, context: &str) -> Result<u32> {
    let value = obj.remove(field).ok_or_else(|| Error::MissingField {
        field: field.into(),
        context: Some(context.to_string()),
    })?;
    let as_integer = match &value {
        Value::Number(n) => n
            .as_u64()
            .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0 && *f >= 0.0).map(|f| f as u64)),
        _ => None,
    };
    match as_integer {
        Some(v) if v <= u32::MAX as u64 => Ok(v as u32),
        _ => Err(Error::Schema {
            message: format!("{context}: `{field}` must be a non-negative integer"),
        }),
    }
}

fn take_bool(attrs: &mut serde_json::Map<String, Value>, field: &str, context: &str) -> Result<bool> {
    match attrs.remove(field) {
        Some(v) => coerce_bool(v, &format!("attributes.{field}"), context),
        None => Err(Error::MissingField {
            field: format!("attributes.{field}"),
            context: Some(context.to_string()),
        }),
    }
}

fn coerce_bool(value: Value, field: &str, context: &str) -> Result<bool> {
    match value {
        Value::Bool(b) => Ok(b),
        // Some exports encode flags COCO-`iscrowd`-style as 0/1.
        Value::Number(n) if n.as_i64() == Some(0) => Ok(false),
        Value::Number(n) if n.as_i64() == Some(1) => Ok(true),
        _ => Err(Error::Schema { message: format!("{context}: `{field}` must be a boolean") }),
    }
}

/// Serializes a dataset to the canonical byte-deterministic document.
pub fn serialize_coco_text(d: &Dataset) -> String {
    let mut entries: BTreeMap<String, String> = d
        .extra
        .iter()
        .map(|(k, v)| (k.clone(), canonical_value(v)))
        .collect();
    entries.insert(
        "annotations".to_string(),
        render_array(d.instances.iter().map(render_annotation)),
    );
    entries.insert("images".to_string(), render_array(d.images.iter().map(render_image)));

    let body: Vec<String> = entries
        .iter()
        .map(|(k, v)| format!("{}: {}", json_string(k), v))
        .collect();
    format!("{{\n{}\n}}\n", body.join(",\n"))
}

fn render_array(items: impl Iterator<Item = String>) -> String {
    let lines: Vec<String> = items.collect();
    if lines.is_empty() {
        "[]".to_string()
    } else {
        format!("[\n{}\n]", lines.join(",\n"))
    }
}

fn render_image(im: &ImageRecord) -> String {
    let mut fields: BTreeMap<&str, String> = BTreeMap::new();
    let extras: Vec<(String, String)> = im
        .extra
        .iter()
        .map(|(k, v)| (k.clone(), canonical_value(v)))
        .collect();
    for (k, v) in &extras {
        fields.insert(k.as_str(), v.clone());
    }
    fields.insert("file_name", json_string(&im.file_name));
    fields.insert("height", im.height.to_string());
    fields.insert("id", id_literal(im.image_id.as_str()));
    fields.insert("width", im.width.to_string());
    render_object(&fields)
}

fn render_annotation(inst: &TextInstance) -> String {
    let mut fields: BTreeMap<&str, String> = BTreeMap::new();
    let extras: Vec<(String, String)> = inst
        .extra
        .iter()
        .map(|(k, v)| (k.clone(), canonical_value(v)))
        .collect();
    for (k, v) in &extras {
        fields.insert(k.as_str(), v.clone());
    }

    let mut attrs: BTreeMap<&str, String> = BTreeMap::new();
    let attr_extras: Vec<(String, String)> = inst
        .attr_extra
        .iter()
        .map(|(k, v)| (k.clone(), canonical_value(v)))
        .collect();
    for (k, v) in &attr_extras {
        attrs.insert(k.as_str(), v.clone());
    }
    attrs.insert("legible", inst.legible.to_string());
    attrs.insert("machine_printed", inst.machine_printed.to_string());
    if let Some(text) = &inst.transcription {
        attrs.insert("transcription", json_string(text));
    }
    fields.insert("attributes", render_object(&attrs));

    let bbox = bounding_box(&inst.polygon).to_xywh();
    fields.insert("bbox", render_coord_array(&bbox));

    fields.insert("id", id_literal(inst.id.as_str()));
    fields.insert("image_id", id_literal(inst.image_id.as_str()));

    let mut rings = vec![render_coord_array(&inst.polygon.to_flat())];
    rings.extend(inst.extra_rings.iter().map(|r| render_coord_array(r)));
    fields.insert("segmentation", format!("[{}]", rings.join(",")));

    render_object(&fields)
}

fn render_object(fields: &BTreeMap<&str, String>) -> String {
    let inner: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("{}:{}", json_string(k), v))
        .collect();
    format!("{{{}}}", inner.join(","))
}

fn render_coord_array(coords: &[f64]) -> String {
    let inner: Vec<String> = coords.iter().map(|&c| format_coord(c)).collect();
    format!("[{}]", inner.join(","))
}
