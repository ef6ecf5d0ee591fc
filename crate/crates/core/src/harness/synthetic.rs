//! Deterministic 28×28 handwritten-digit look-alikes.
//!
//! Each class is a stroke template in a 20×20 box centred in the frame, the
//! same layout MNIST uses. Every sample perturbs the template with a random
//! affine map, per-vertex jitter, and a random stroke width, then rasterizes
//! by distance to the nearest stroke segment.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::data::LabeledImages;
use super::sampling::SplitMix64;

pub const SIDE: usize = 28;

type Polyline = Vec<(f64, f64)>;

fn arc(cx: f64, cy: f64, rx: f64, ry: f64, from: f64, to: f64, segments: usize) -> Polyline {
    (0..=segments)
        .map(|s| {
            let a = from + (to - from) * s as f64 / segments as f64;
            (cx + rx * a.cos(), cy + ry * a.sin())
        })
        .collect()
}

/// Stroke templates in unit coordinates, `y` pointing down.
fn template(digit: u32) -> Vec<Polyline> {
    match digit % 10 {
        0 => vec![arc(0.5, 0.5, 0.3, 0.45, 0.0, 2.0 * PI, 20)],
        1 => vec![vec![(0.35, 0.2), (0.52, 0.05), (0.52, 0.95)]],
        2 => {
            let mut top = arc(0.5, 0.32, 0.3, 0.27, PI, 2.0 * PI + 0.5, 12);
            top.extend([(0.18, 0.95), (0.85, 0.95)]);
            vec![top]
        }
        3 => {
            let mut upper = arc(0.48, 0.28, 0.28, 0.23, -PI * 0.85, PI * 0.5, 12);
            upper.extend(arc(0.48, 0.73, 0.3, 0.22, -PI * 0.5, PI * 0.85, 12));
            vec![upper]
        }
        4 => vec![vec![(0.62, 0.95), (0.62, 0.05), (0.15, 0.65), (0.85, 0.65)]],
        5 => {
            let mut s = vec![(0.8, 0.05), (0.32, 0.05), (0.27, 0.45)];
            s.extend(arc(0.48, 0.67, 0.3, 0.26, -PI * 0.75, PI * 0.8, 12));
            vec![s]
        }
        6 => vec![
            vec![(0.7, 0.05), (0.4, 0.35), (0.26, 0.68)],
            arc(0.5, 0.7, 0.25, 0.24, 0.0, 2.0 * PI, 16),
        ],
        7 => vec![vec![(0.15, 0.05), (0.85, 0.05), (0.42, 0.95)]],
        8 => vec![
            arc(0.5, 0.27, 0.21, 0.21, 0.0, 2.0 * PI, 14),
            arc(0.5, 0.72, 0.25, 0.23, 0.0, 2.0 * PI, 16),
        ],
        _ => vec![
            arc(0.5, 0.3, 0.23, 0.23, 0.0, 2.0 * PI, 14),
            vec![(0.73, 0.3), (0.62, 0.95)],
        ],
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (qx * qx + qy * qy).sqrt()
}

fn render(digit: u32, rng: &mut SplitMix64) -> Vec<f64> {
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * rng.unit();
    let scale = uniform(0.85, 1.05);
    let angle = uniform(-0.2, 0.2);
    let shear = uniform(-0.15, 0.15);
    let shift = (uniform(-1.5, 1.5), uniform(-1.5, 1.5));
    let width = uniform(0.9, 1.9);
    let (sin, cos) = angle.sin_cos();

    let strokes: Vec<Polyline> = template(digit)
        .into_iter()
        .map(|line| {
            line.into_iter()
                .map(|(x, y)| {
                    let (x, y) = (
                        x + uniform(-0.03, 0.03) - 0.5,
                        y + uniform(-0.03, 0.03) - 0.5,
                    );
                    let x = x + shear * y;
                    let (x, y) = (cos * x - sin * y, sin * x + cos * y);
                    (
                        SIDE as f64 / 2.0 + 20.0 * scale * x + shift.0,
                        SIDE as f64 / 2.0 + 20.0 * scale * y + shift.1,
                    )
                })
                .collect()
        })
        .collect();

    let mut pixels = vec![0.0; SIDE * SIDE];
    for r in 0..SIDE {
        for c in 0..SIDE {
            let p = (c as f64 + 0.5, r as f64 + 0.5);
            let d = strokes
                .iter()
                .flat_map(|l| l.windows(2).map(move |w| segment_distance(p, w[0], w[1])))
                .fold(f64::INFINITY, f64::min);
            pixels[r * SIDE + c] = (width + 0.5 - d).clamp(0.0, 1.0);
        }
    }
    pixels
}

/// `per_class` images for each digit class `0..classes`, grouped by class.
pub fn synthetic_digits(classes: u32, per_class: usize, seed: u64) -> LabeledImages {
    let mut rng = SplitMix64::new(seed);
    let total = classes as usize * per_class;
    let mut images = DMatrix::zeros(SIDE * SIDE, total);
    let mut labels = Vec::with_capacity(total);
    for digit in 0..classes {
        for _ in 0..per_class {
            let col = labels.len();
            images.set_column(col, &nalgebra::DVector::from_vec(render(digit, &mut rng)));
            labels.push(digit);
        }
    }
    LabeledImages {
        images,
        labels,
        rows: SIDE,
        cols: SIDE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_range() {
        let d = synthetic_digits(10, 3, 7);
        assert_eq!(d.images.shape(), (784, 30));
        assert_eq!(d.labels[..3], [0, 0, 0]);
        assert_eq!(d.labels[29], 9);
        assert!(d.images.iter().all(|v| (0.0..=1.0).contains(v)));
        for col in d.images.column_iter() {
            let ink: f64 = col.sum();
            assert!(ink > 20.0 && ink < 400.0, "ink {ink}");
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(synthetic_digits(4, 2, 1), synthetic_digits(4, 2, 1));
        assert_ne!(
            synthetic_digits(4, 2, 1).images,
            synthetic_digits(4, 2, 2).images
        );
    }

    #[test]
    fn same_class_images_are_more_alike() {
        let d = synthetic_digits(10, 6, 3);
        let cos = |a: usize, b: usize| {
            let (x, y) = (d.images.column(a), d.images.column(b));
            x.dot(&y) / (x.norm() * y.norm())
        };
        let (mut within, mut across) = (0.0, 0.0);
        let (mut nw, mut na) = (0, 0);
        for a in 0..60 {
            for b in (a + 1)..60 {
                if d.labels[a] == d.labels[b] {
                    within += cos(a, b);
                    nw += 1;
                } else {
                    across += cos(a, b);
                    na += 1;
                }
            }
        }
        assert!(within / nw as f64 > across / na as f64 + 0.1);
    }
}
