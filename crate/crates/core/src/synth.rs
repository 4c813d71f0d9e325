//! Seeded generators for synthetic polygons, scenes and datasets.
//!
//! Everything here is deterministic given the seed; tests and benchmarks use
//! these to build fixtures and corpora without shipping data files.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::annotation::{Dataset, ImageId, ImageRecord, TextInstance};
use crate::geometry::{Point, Polygon};
use crate::matching::Prediction;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Star-shaped (hence simple) polygon: sorted angles around a center with
/// random radii.
pub fn random_simple_polygon(
    rng: &mut StdRng,
    center: Point,
    radius_range: (f64, f64),
    vertex_count: usize,
) -> Polygon {
    assert!(vertex_count >= 3);
    loop {
        let mut angles: Vec<f64> = (0..vertex_count)
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        angles.sort_by(f64::total_cmp);
        // Re-draw when two directions nearly coincide; keeps vertices distinct.
        let min_gap = angles
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        if min_gap < 1e-3 {
            continue;
        }
        let vertices: Vec<Point> = angles
            .iter()
            .map(|&a| {
                let r = rng.gen_range(radius_range.0..radius_range.1);
                Point::new(center.x + r * a.cos(), center.y + r * a.sin())
            })
            .collect();
        let polygon = Polygon::new(vertices).expect("radial polygon is well-formed");
        match crate::geometry::normalize_polygon(&polygon) {
            Ok(norm) if !norm.self_intersecting => return norm.polygon,
            _ => continue,
        }
    }
}

/// Convex polygon: hull of random points inside a box around the center.
pub fn random_convex_polygon(
    rng: &mut StdRng,
    center: Point,
    half_extent: f64,
    sample_count: usize,
) -> Polygon {
    loop {
        let points: Vec<Point> = (0..sample_count.max(3))
            .map(|_| {
                Point::new(
                    center.x + rng.gen_range(-half_extent..half_extent),
                    center.y + rng.gen_range(-half_extent..half_extent),
                )
            })
            .collect();
        let hull = convex_hull(&points);
        if hull.len() >= 3 {
            if let Ok(polygon) = Polygon::new(hull) {
                if crate::geometry::polygon_area(&polygon) > 1e-6 {
                    return polygon;
                }
            }
        }
    }
}

/// Andrew's monotone chain; returns the hull counter-clockwise.
fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point, a: Point, b: Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Axis-aligned quad with coordinates quantized to hundredths of a pixel,
/// which the canonical two-decimal serializer round-trips exactly.
pub fn random_quad(rng: &mut StdRng, max_x: f64, max_y: f64) -> Polygon {
    let w = quantize(rng.gen_range(2.0..max_x / 2.0));
    let h = quantize(rng.gen_range(1.0..max_y / 2.0));
    let x = quantize(rng.gen_range(0.0..max_x - w));
    let y = quantize(rng.gen_range(0.0..max_y - h));
    Polygon::new(vec![
        Point::new(x, y),
        Point::new(x + w, y),
        Point::new(x + w, y + h),
        Point::new(x, y + h),
    ])
    .expect("quad is well-formed")
}

fn quantize(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn random_word(rng: &mut StdRng, min_len: usize, max_len: usize) -> String {
    const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    let len = rng.gen_range(min_len..=max_len);
    (0..len)
        .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
        .collect()
}

/// A random one-image matching scene: care and don't-care ground truth plus
/// predictions that overlap some of them.
pub fn random_scene(
    rng: &mut StdRng,
    image_id: &str,
    max_gts: usize,
    max_preds: usize,
) -> (Vec<TextInstance>, Vec<Prediction>) {
    let gt_count = rng.gen_range(0..=max_gts);
    let mut gts = Vec::with_capacity(gt_count);
    for k in 0..gt_count {
        let polygon = random_quad(rng, 100.0, 100.0);
        let dont_care = rng.gen_bool(0.2);
        let transcription = if dont_care { None } else { Some(random_word(rng, 2, 8)) };
        gts.push(TextInstance::new(
            format!("{image_id}#{k}"),
            image_id,
            polygon,
            transcription,
            !dont_care,
            rng.gen_bool(0.3),
        ));
    }

    let pred_count = rng.gen_range(0..=max_preds);
    let mut preds = Vec::with_capacity(pred_count);
    for _ in 0..pred_count {
        let (polygon, transcription) = if !gts.is_empty() && rng.gen_bool(0.7) {
            // Jitter an existing ground-truth box.
            let gt = &gts[rng.gen_range(0..gts.len())];
            let dx = rng.gen_range(-3.0..3.0);
            let dy = rng.gen_range(-3.0..3.0);
            let vertices: Vec<Point> = gt
                .polygon
                .vertices()
                .iter()
                .map(|v| Point::new(quantize(v.x + dx), quantize(v.y + dy)))
                .collect();
            let text = match (&gt.transcription, rng.gen_bool(0.8)) {
                (Some(t), true) => t.clone(),
                _ => random_word(rng, 2, 8),
            };
            (Polygon::new(vertices).expect("jittered quad is well-formed"), text)
        } else {
            (random_quad(rng, 100.0, 100.0), random_word(rng, 2, 8))
        };
        preds.push(Prediction::new(
            image_id,
            polygon,
            transcription,
            quantize(rng.gen_range(0.05..1.0)).clamp(0.0, 1.0),
        ));
    }
    (gts, preds)
}

/// A synthetic dataset with valid polygons inside the image bounds.
pub fn random_dataset(
    rng: &mut StdRng,
    subset_name: &str,
    image_count: usize,
    max_instances_per_image: usize,
) -> Dataset {
    let mut dataset = Dataset::new(subset_name);
    let mut instance_counter = 0u64;
    for i in 0..image_count {
        let image_id = format!("{subset_name}_{i:04}");
        let width = rng.gen_range(320..1280);
        let height = rng.gen_range(240..960);
        dataset.images.push(ImageRecord::new(
            image_id.clone(),
            format!("{image_id}.jpg"),
            width,
            height,
        ));
        for _ in 0..rng.gen_range(0..=max_instances_per_image) {
            let polygon = random_quad(rng, width as f64 - 1.0, height as f64 - 1.0);
            let legible = rng.gen_bool(0.85);
            let transcription = if legible { Some(random_word(rng, 1, 10)) } else { None };
            dataset.instances.push(TextInstance::new(
                instance_counter.to_string(),
                image_id.clone(),
                polygon,
                transcription,
                legible,
                rng.gen_bool(0.3),
            ));
            instance_counter += 1;
        }
    }
    dataset
}

/// Predictions for a dataset: most ground truth re-detected with jitter and
/// occasional recognition mistakes, plus some spurious boxes.
pub fn predictions_for(rng: &mut StdRng, dataset: &Dataset) -> Vec<Prediction> {
    let mut preds = Vec::new();
    let image_sizes: std::collections::HashMap<&ImageId, (f64, f64)> = dataset
        .images
        .iter()
        .map(|im| (&im.image_id, (im.width as f64, im.height as f64)))
        .collect();
    for inst in &dataset.instances {
        if rng.gen_bool(0.85) {
            let dx = rng.gen_range(-1.5..1.5);
            let dy = rng.gen_range(-1.5..1.5);
            let vertices: Vec<Point> = inst
                .polygon
                .vertices()
                .iter()
                .map(|v| Point::new(quantize(v.x + dx), quantize(v.y + dy)))
                .collect();
            let text = match (&inst.transcription, rng.gen_bool(0.85)) {
                (Some(t), true) => t.clone(),
                _ => random_word(rng, 1, 10),
            };
            preds.push(Prediction::new(
                inst.image_id.clone(),
                Polygon::new(vertices).expect("jittered quad is well-formed"),
                text,
                quantize(rng.gen_range(0.05..1.0)).clamp(0.0, 1.0),
            ));
        }
    }
    for im in &dataset.images {
        if rng.gen_bool(0.3) {
            let (w, h) = image_sizes[&im.image_id];
            preds.push(Prediction::new(
                im.image_id.clone(),
                random_quad(rng, w - 1.0, h - 1.0),
                random_word(rng, 1, 10),
                quantize(rng.gen_range(0.05..1.0)).clamp(0.0, 1.0),
            ));
        }
    }
    preds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{normalize_polygon, polygon_area};

    #[test]
    fn simple_polygons_are_simple() {
        let mut r = rng(7);
        for _ in 0..50 {
            let p = random_simple_polygon(&mut r, Point::new(50.0, 50.0), (5.0, 30.0), 8);
            let norm = normalize_polygon(&p).unwrap();
            assert!(!norm.self_intersecting);
            assert!(polygon_area(&p) > 0.0);
        }
    }

    #[test]
    fn convex_polygons_have_positive_area() {
        let mut r = rng(8);
        for _ in 0..50 {
            let p = random_convex_polygon(&mut r, Point::new(50.0, 50.0), 20.0, 10);
            assert!(polygon_area(&p) > 0.0);
            assert!(!p.is_self_intersecting());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let d1 = random_dataset(&mut rng(42), "t", 5, 10);
        let d2 = random_dataset(&mut rng(42), "t", 5, 10);
        assert_eq!(d1, d2);
        let p1 = predictions_for(&mut rng(43), &d1);
        let p2 = predictions_for(&mut rng(43), &d2);
        assert_eq!(p1, p2);
    }

    #[test]
    fn dataset_validates_cleanly() {
        let d = random_dataset(&mut rng(11), "clean", 10, 8);
        let report = crate::annotation::validate(&d);
        assert!(report.is_empty(), "unexpected violations: {report:?}");
    }
}
