//! Labeled histogram collections: ingested IDX digits or synthetic glyphs.

use std::path::Path;

use entropic_ot::histogram::image_to_histogram;
use entropic_ot::{Histogram, Matrix};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BenchError, Result};
use crate::idx::{read_idx_images, read_idx_labels};

/// Side of the grid used for digits, after cropping.
pub const DIGIT_GRID: usize = 20;
pub const DIGIT_CLASSES: usize = 10;

#[derive(Debug, Clone)]
pub struct LabeledHistogramSet {
    pub histograms: Vec<Histogram>,
    pub labels: Vec<u8>,
    pub source: String,
    pub class_count: usize,
    /// Grid shape `(width, height)` of every histogram.
    pub grid: (usize, usize),
    /// Input indices of all-zero images that could not become histograms.
    pub skipped: Vec<usize>,
}

impl LabeledHistogramSet {
    pub fn len(&self) -> usize {
        self.histograms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histograms.is_empty()
    }

    /// Converts images to histograms, optionally center-cropping each to a
    /// `crop x crop` window. All-zero images are skipped and listed.
    pub fn from_images(images: &[Matrix], labels: &[u8], class_count: usize, crop: Option<usize>, source: impl Into<String>) -> Result<Self> {
        let source = source.into();
        if images.len() != labels.len() {
            return Err(BenchError::Format {
                path: source.clone().into(),
                message: format!("{} images but {} labels", images.len(), labels.len()),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| usize::from(l) >= class_count) {
            return Err(BenchError::Format { path: source.clone().into(), message: format!("label {bad} outside {class_count} classes") });
        }
        let mut grid = None;
        let mut set = Self { histograms: Vec::new(), labels: Vec::new(), source, class_count, grid: (0, 0), skipped: Vec::new() };
        for (k, (img, &label)) in images.iter().zip(labels).enumerate() {
            let img = match crop {
                Some(side) => center_crop(img, side)?,
                None => img.clone(),
            };
            let shape = (img.cols(), img.rows());
            if *grid.get_or_insert(shape) != shape {
                return Err(BenchError::Format { path: set.source.clone().into(), message: "images differ in size".into() });
            }
            if img.as_slice().iter().all(|&p| p == 0.0) {
                set.skipped.push(k);
                continue;
            }
            set.histograms.push(image_to_histogram(&img)?);
            set.labels.push(label);
        }
        set.grid = grid.unwrap_or((0, 0));
        Ok(set)
    }
}

/// Central `side x side` window of an image.
pub fn center_crop(img: &Matrix, side: usize) -> Result<Matrix> {
    if side > img.rows() || side > img.cols() {
        return Err(BenchError::usage(format!("cannot crop {}x{} image to {side}x{side}", img.rows(), img.cols())));
    }
    let (top, left) = ((img.rows() - side) / 2, (img.cols() - side) / 2);
    Ok(Matrix::from_fn(side, side, |i, j| img[(top + i, left + j)]))
}

/// Reads an IDX image/label pair, keeps a seeded random subset of
/// `subset` items (all when `None`) in file order, and converts them.
pub fn load_idx_digits(images: &Path, labels: &Path, subset: Option<usize>, crop: Option<usize>, seed: u64) -> Result<LabeledHistogramSet> {
    let imgs = read_idx_images(images)?;
    let labs = read_idx_labels(labels)?;
    if imgs.len() != labs.len() {
        return Err(BenchError::Format { path: labels.into(), message: format!("{} labels for {} images", labs.len(), imgs.len()) });
    }
    let keep: Vec<usize> = match subset {
        Some(n) if n > imgs.len() => {
            return Err(BenchError::usage(format!("subset of {n} requested but {} images available", imgs.len())));
        }
        Some(n) => {
            let mut idx = sample(&mut ChaCha8Rng::seed_from_u64(seed), imgs.len(), n).into_vec();
            idx.sort_unstable();
            idx
        }
        None => (0..imgs.len()).collect(),
    };
    let picked: Vec<Matrix> = keep.iter().map(|&k| imgs[k].clone()).collect();
    let picked_labels: Vec<u8> = keep.iter().map(|&k| labs[k]).collect();
    let crop = crop.filter(|&side| side < picked.first().map_or(0, |m| m.rows().min(m.cols())));
    LabeledHistogramSet::from_images(&picked, &picked_labels, DIGIT_CLASSES, crop, images.display().to_string())
}

// Seven-segment strokes in a unit box, y pointing down.
const SEGMENTS: [[(f64, f64); 2]; 7] = [
    [(0.0, 0.0), (1.0, 0.0)],
    [(1.0, 0.0), (1.0, 0.5)],
    [(1.0, 0.5), (1.0, 1.0)],
    [(0.0, 1.0), (1.0, 1.0)],
    [(0.0, 0.5), (0.0, 1.0)],
    [(0.0, 0.0), (0.0, 0.5)],
    [(0.0, 0.5), (1.0, 0.5)],
];
const DIGIT_SEGMENTS: [&[usize]; 10] = [
    &[0, 1, 2, 3, 4, 5],
    &[1, 2],
    &[0, 1, 6, 4, 3],
    &[0, 1, 6, 2, 3],
    &[5, 6, 1, 2],
    &[0, 5, 6, 2, 3],
    &[0, 5, 6, 4, 2, 3],
    &[0, 1, 2],
    &[0, 1, 2, 3, 4, 5, 6],
    &[0, 1, 2, 3, 5, 6],
];

/// Handwriting-like seven-segment digits on a 20x20 grid with random
/// scale, slant, translation, jitter and occasional missing strokes.
/// Labels cycle through the ten classes.
pub fn synthetic_digits(n: usize, seed: u64) -> LabeledHistogramSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<u8> = (0..n).map(|k| (k % DIGIT_CLASSES) as u8).collect();
    let images: Vec<Matrix> = labels.iter().map(|&l| render_glyph(&mut rng, usize::from(l))).collect();
    LabeledHistogramSet::from_images(&images, &labels, DIGIT_CLASSES, None, format!("synthetic-digits(seed={seed})"))
        .expect("rendered glyphs always carry ink")
}

fn render_glyph(rng: &mut ChaCha8Rng, digit: usize) -> Matrix {
    let side = DIGIT_GRID as f64;
    let width = rng.random_range(5.0..8.0);
    let height = rng.random_range(10.0..14.0);
    let slant = rng.random_range(-0.3..0.3);
    let cx = side / 2.0 + rng.random_range(-2.0..2.0);
    let cy = side / 2.0 + rng.random_range(-2.0..2.0);
    let mut ink = vec![0.0f64; DIGIT_GRID * DIGIT_GRID];
    let segs = DIGIT_SEGMENTS[digit];
    let dropped = if segs.len() > 2 && rng.random_bool(0.1) { Some(rng.random_range(0..segs.len())) } else { None };
    for (k, &s) in segs.iter().enumerate() {
        if Some(k) == dropped {
            continue;
        }
        let mut ends = SEGMENTS[s].map(|(x, y)| {
            let (ux, uy) = ((x - 0.5) * width, (y - 0.5) * height);
            (cx + ux - slant * uy, cy + uy)
        });
        for e in &mut ends {
            e.0 += rng.random_range(-0.7..0.7);
            e.1 += rng.random_range(-0.7..0.7);
        }
        let steps = 40;
        for t in 0..=steps {
            let f = t as f64 / steps as f64;
            let (x, y) = (ends[0].0 + f * (ends[1].0 - ends[0].0), ends[0].1 + f * (ends[1].1 - ends[0].1));
            splat(&mut ink, x, y);
        }
    }
    let peak = ink.iter().cloned().fold(0.0, f64::max);
    Matrix::from_vec(DIGIT_GRID, DIGIT_GRID, ink.iter().map(|v| (255.0 * v / peak).round()).collect()).expect("grid sized buffer")
}

/// Bilinear deposit of one unit of ink at `(x, y)`.
fn splat(ink: &mut [f64], x: f64, y: f64) {
    let (x0, y0) = (x.floor(), y.floor());
    for (dx, dy) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
        let (px, py) = (x0 + dx, y0 + dy);
        if px < 0.0 || py < 0.0 || px >= DIGIT_GRID as f64 || py >= DIGIT_GRID as f64 {
            continue;
        }
        let w = (1.0 - (x - px).abs()) * (1.0 - (y - py).abs());
        ink[py as usize * DIGIT_GRID + px as usize] += w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crop_takes_central_window() {
        let img = Matrix::from_fn(4, 4, |i, j| (4 * i + j) as f64);
        let c = center_crop(&img, 2).unwrap();
        assert_eq!(c.as_slice(), &[5.0, 6.0, 9.0, 10.0]);
        assert!(center_crop(&img, 5).is_err());
    }

    #[test]
    fn blank_images_are_skipped() {
        let imgs = vec![Matrix::zeros(3, 3), Matrix::from_fn(3, 3, |i, j| (i + j) as f64)];
        let set = LabeledHistogramSet::from_images(&imgs, &[1, 2], 10, None, "t").unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.skipped, vec![0]);
        assert_eq!(set.labels, vec![2]);
        assert_eq!(set.grid, (3, 3));
    }

    #[test]
    fn rejects_label_mismatch() {
        let imgs = vec![Matrix::from_fn(2, 2, |_, _| 1.0)];
        assert!(LabeledHistogramSet::from_images(&imgs, &[1, 2], 10, None, "t").is_err());
        assert!(LabeledHistogramSet::from_images(&imgs, &[10], 10, None, "t").is_err());
    }

    #[test]
    fn synthetic_digits_are_seeded() {
        let a = synthetic_digits(30, 4);
        let b = synthetic_digits(30, 4);
        assert_eq!(a.len(), 30);
        assert_eq!(a.grid, (DIGIT_GRID, DIGIT_GRID));
        assert_eq!(a.labels[13], 3);
        for (x, y) in a.histograms.iter().zip(&b.histograms) {
            assert_eq!(x.weights(), y.weights());
        }
        assert_ne!(a.histograms[0].weights(), synthetic_digits(1, 5).histograms[0].weights());
    }

    #[test]
    fn loads_subset_from_files() {
        let dir = tempfile::tempdir().unwrap();
        let imgs: Vec<Matrix> = (0..6).map(|k| Matrix::from_fn(28, 28, |i, j| ((i * j + k) % 200) as f64)).collect();
        let (ip, lp) = (dir.path().join("img"), dir.path().join("lab"));
        std::fs::write(&ip, crate::idx::encode_idx_images(&imgs)).unwrap();
        std::fs::write(&lp, crate::idx::encode_idx_labels(&[0, 1, 2, 3, 4, 5])).unwrap();
        let set = load_idx_digits(&ip, &lp, Some(4), Some(DIGIT_GRID), 1).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.grid, (20, 20));
        assert!(set.labels.windows(2).all(|w| w[0] < w[1]));
        assert!(load_idx_digits(&ip, &lp, Some(7), None, 1).unwrap_err().is_usage());
    }
}
