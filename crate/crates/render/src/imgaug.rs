//! Image-level augmentation with exact tracking of atom pixel positions.
//!
//! Operators run in a fixed order (rotate, crop, pad, rescale, blur, gaussian noise,
//! salt-and-pepper), each gated independently. Geometric operators move the recorded atom
//! positions by the same map they apply to the raster; the others leave positions alone.

use image::imageops::{self, FilterType};
use image::{GrayImage, Luma};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::draw::RenderedSample;

/// Attempts per operator before it is skipped for pushing an atom off the raster.
pub const MAX_RETRIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

/// One operator with its concrete parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AugmentOp {
    /// Counterclockwise on screen by `degrees` about the raster center; size unchanged.
    Rotate { degrees: f64 },
    /// Pixels removed from each side.
    Crop { left: u32, top: u32, right: u32, bottom: u32 },
    /// White pixels added on one side.
    Pad { side: Side, pixels: u32 },
    /// Downscale by `factor`, then back up to the original size.
    Rescale { factor: f64 },
    Blur { sigma: f32 },
    GaussianNoise { sigma: f64, seed: u64 },
    /// Fraction of pixels set to black.
    SaltPepper { fraction: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Rotate,
    Crop,
    Pad,
    Rescale,
    Blur,
    GaussianNoise,
    SaltPepper,
}

impl OpKind {
    /// Application order.
    pub const ORDER: [OpKind; 7] = [
        OpKind::Rotate,
        OpKind::Crop,
        OpKind::Pad,
        OpKind::Rescale,
        OpKind::Blur,
        OpKind::GaussianNoise,
        OpKind::SaltPepper,
    ];

    /// Draws parameters for a raster of the given size.
    pub fn sample<R: Rng + ?Sized>(self, width: u32, height: u32, rng: &mut R) -> AugmentOp {
        match self {
            OpKind::Rotate => AugmentOp::Rotate {
                degrees: rng.random_range(-90.0..=90.0),
            },
            OpKind::Crop => {
                let (mx, my) = (width / 100, height / 100);
                AugmentOp::Crop {
                    left: rng.random_range(0..=mx),
                    top: rng.random_range(0..=my),
                    right: rng.random_range(0..=mx),
                    bottom: rng.random_range(0..=my),
                }
            }
            OpKind::Pad => {
                let side = [Side::Left, Side::Right, Side::Top, Side::Bottom][rng.random_range(0..4)];
                let dim = if matches!(side, Side::Left | Side::Right) { width } else { height };
                AugmentOp::Pad {
                    side,
                    pixels: (rng.random_range(0.0..=0.4) * dim as f64).round() as u32,
                }
            }
            OpKind::Rescale => AugmentOp::Rescale {
                factor: 1.0 - rng.random_range(0.15..=0.30),
            },
            OpKind::Blur => AugmentOp::Blur {
                sigma: rng.random_range(0.5..=1.5),
            },
            OpKind::GaussianNoise => AugmentOp::GaussianNoise {
                sigma: rng.random_range(4.0..=16.0),
                seed: rng.random(),
            },
            OpKind::SaltPepper => AugmentOp::SaltPepper {
                fraction: rng.random_range(0.001..=0.01),
                seed: rng.random(),
            },
        }
    }
}

/// Per-operator gate probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub probability: [f64; 7],
}

impl AugmentConfig {
    pub fn uniform(p: f64) -> Self {
        AugmentConfig { probability: [p; 7] }
    }

    /// Only `kind`, always applied.
    pub fn only(kind: OpKind) -> Self {
        let mut probability = [0.0; 7];
        probability[OpKind::ORDER.iter().position(|&k| k == kind).expect("listed")] = 1.0;
        AugmentConfig { probability }
    }
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self::uniform(0.5)
    }
}

/// 2D affine map x' = a x + b y + tx, y' = c x + d y + ty on continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Affine {
    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        (
            self.a * p.0 + self.b * p.1 + self.tx,
            self.c * p.0 + self.d * p.1 + self.ty,
        )
    }

    fn inverse(&self) -> Affine {
        let det = self.a * self.d - self.b * self.c;
        let (a, b, c, d) = (self.d / det, -self.b / det, -self.c / det, self.a / det);
        Affine {
            a,
            b,
            c,
            d,
            tx: -(a * self.tx + b * self.ty),
            ty: -(c * self.tx + d * self.ty),
        }
    }

    fn translation(tx: f64, ty: f64) -> Affine {
        Affine {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
            tx,
            ty,
        }
    }
}

impl AugmentOp {
    /// Output raster size and the coordinate map for geometric operators.
    pub fn geometry(&self, width: u32, height: u32) -> Option<(u32, u32, Affine)> {
        match *self {
            AugmentOp::Rotate { degrees } => {
                let (s, c) = degrees.to_radians().sin_cos();
                let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
                Some((
                    width,
                    height,
                    Affine {
                        a: c,
                        b: s,
                        c: -s,
                        d: c,
                        tx: cx - c * cx - s * cy,
                        ty: cy + s * cx - c * cy,
                    },
                ))
            }
            AugmentOp::Crop { left, top, right, bottom } => Some((
                width.saturating_sub(left + right).max(1),
                height.saturating_sub(top + bottom).max(1),
                Affine::translation(-(left as f64), -(top as f64)),
            )),
            AugmentOp::Pad { side, pixels } => {
                let p = pixels as f64;
                Some(match side {
                    Side::Left => (width + pixels, height, Affine::translation(p, 0.0)),
                    Side::Right => (width + pixels, height, Affine::translation(0.0, 0.0)),
                    Side::Top => (width, height + pixels, Affine::translation(0.0, p)),
                    Side::Bottom => (width, height + pixels, Affine::translation(0.0, 0.0)),
                })
            }
            AugmentOp::Rescale { .. } => Some((width, height, Affine::translation(0.0, 0.0))),
            _ => None,
        }
    }

    /// Applies the operator to a raster alone.
    pub fn apply_image(&self, img: &GrayImage) -> GrayImage {
        let (w, h) = img.dimensions();
        match *self {
            AugmentOp::Rotate { .. } => {
                let (_, _, map) = self.geometry(w, h).expect("geometric");
                warp(img, &map, w, h)
            }
            AugmentOp::Crop { left, top, .. } => {
                let (nw, nh, _) = self.geometry(w, h).expect("geometric");
                imageops::crop_imm(img, left, top, nw, nh).to_image()
            }
            AugmentOp::Pad { side, pixels } => {
                let (nw, nh, _) = self.geometry(w, h).expect("geometric");
                let mut out = GrayImage::from_pixel(nw, nh, Luma([255]));
                let (x, y) = match side {
                    Side::Left => (pixels as i64, 0),
                    Side::Top => (0, pixels as i64),
                    _ => (0, 0),
                };
                imageops::replace(&mut out, img, x, y);
                out
            }
            AugmentOp::Rescale { factor } => {
                let dw = ((w as f64 * factor).round() as u32).max(1);
                let dh = ((h as f64 * factor).round() as u32).max(1);
                let small = imageops::resize(img, dw, dh, FilterType::Triangle);
                imageops::resize(&small, w, h, FilterType::Triangle)
            }
            AugmentOp::Blur { sigma } => imageops::blur(img, sigma),
            AugmentOp::GaussianNoise { sigma, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let normal = Normal::new(0.0, sigma).expect("positive sigma");
                let mut out = img.clone();
                for p in out.pixels_mut() {
                    let v = p[0] as f64 + normal.sample(&mut rng);
                    p[0] = v.round().clamp(0.0, 255.0) as u8;
                }
                out
            }
            AugmentOp::SaltPepper { fraction, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut out = img.clone();
                let count = (fraction * (w * h) as f64).round() as usize;
                for _ in 0..count {
                    let (x, y) = (rng.random_range(0..w), rng.random_range(0..h));
                    out.put_pixel(x, y, Luma([0]));
                }
                out
            }
        }
    }

    /// Applies the operator to a sample; fails if any atom would leave the raster.
    pub fn apply(&self, sample: &RenderedSample) -> Option<RenderedSample> {
        let (w, h) = sample.image.dimensions();
        let mut coords = sample.atom_pixel_coords.clone();
        if let Some((nw, nh, map)) = self.geometry(w, h) {
            for p in &mut coords {
                *p = map.apply(*p);
                if !(p.0 >= 0.0 && p.1 >= 0.0 && p.0 < nw as f64 && p.1 < nh as f64) {
                    return None;
                }
            }
        }
        let mut out = RenderedSample {
            image: self.apply_image(&sample.image),
            atom_pixel_coords: coords,
            graph: sample.graph.clone(),
            smiles: sample.smiles.clone(),
        };
        out.sync_graph_coords();
        Some(out)
    }
}

/// Runs the gated operator chain. Returns the augmented sample and the operators applied,
/// in order.
pub fn augment_image<R: Rng + ?Sized>(
    sample: &RenderedSample,
    config: &AugmentConfig,
    rng: &mut R,
) -> (RenderedSample, Vec<AugmentOp>) {
    let mut current = sample.clone();
    let mut applied = Vec::new();
    for (k, kind) in OpKind::ORDER.iter().enumerate() {
        if rng.random::<f64>() >= config.probability[k] {
            continue;
        }
        for _ in 0..MAX_RETRIES {
            let (w, h) = current.image.dimensions();
            let op = kind.sample(w, h, rng);
            if let Some(next) = op.apply(&current) {
                current = next;
                applied.push(op);
                break;
            }
        }
    }
    (current, applied)
}

/// Inverse-mapped bilinear resampling; samples outside the source read as white.
fn warp(img: &GrayImage, map: &Affine, width: u32, height: u32) -> GrayImage {
    let inv = map.inverse();
    let (w, h) = img.dimensions();
    let at = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            255.0
        } else {
            img.get_pixel(x as u32, y as u32)[0] as f64
        }
    };
    GrayImage::from_fn(width, height, |x, y| {
        let (sx, sy) = inv.apply((x as f64 + 0.5, y as f64 + 0.5));
        let (fx, fy) = (sx - 0.5, sy - 0.5);
        let (x0, y0) = (fx.floor(), fy.floor());
        let (tx, ty) = (fx - x0, fy - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let v = at(x0, y0) * (1.0 - tx) * (1.0 - ty)
            + at(x0 + 1, y0) * tx * (1.0 - ty)
            + at(x0, y0 + 1) * (1.0 - tx) * ty
            + at(x0 + 1, y0 + 1) * tx * ty;
        Luma([v.round().clamp(0.0, 255.0) as u8])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::draw::{draw, RenderStyle};
    use crate::layout::layout;
    use skelgraph_core::smiles::parse;

    fn sample() -> RenderedSample {
        let g = layout(&parse("CC(=O)Oc1ccccc1C(=O)O").unwrap()).unwrap();
        draw(&g, &RenderStyle::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn quarter_turn_reference_point() {
        let op = AugmentOp::Rotate { degrees: 90.0 };
        let (_, _, map) = op.geometry(100, 100).unwrap();
        let (x, y) = map.apply((10.0, 20.0));
        assert!((x - 20.0).abs() < 1e-9 && (y - 90.0).abs() < 1e-9, "{x} {y}");
    }

    #[test]
    fn disabled_ops_are_identity() {
        let s = sample();
        let (out, applied) = augment_image(&s, &AugmentConfig::uniform(0.0), &mut ChaCha8Rng::seed_from_u64(1));
        assert!(applied.is_empty());
        assert_eq!(out, s);
    }

    #[test]
    fn noise_changes_pixels_only() {
        let s = sample();
        let cfg = AugmentConfig::only(OpKind::GaussianNoise);
        let (out, applied) = augment_image(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(applied.len(), 1);
        assert_eq!(out.atom_pixel_coords, s.atom_pixel_coords);
        assert_ne!(out.image, s.image);
    }

    #[test]
    fn crop_and_pad_shift_coordinates() {
        let s = sample();
        let crop = AugmentOp::Crop { left: 3, top: 2, right: 1, bottom: 0 };
        let c = crop.apply(&s).unwrap();
        assert_eq!(c.image.dimensions(), (380, 382));
        assert_eq!(c.atom_pixel_coords[0], (s.atom_pixel_coords[0].0 - 3.0, s.atom_pixel_coords[0].1 - 2.0));
        let pad = AugmentOp::Pad { side: Side::Top, pixels: 50 };
        let p = pad.apply(&s).unwrap();
        assert_eq!(p.image.dimensions(), (384, 434));
        assert_eq!(p.atom_pixel_coords[0].1, s.atom_pixel_coords[0].1 + 50.0);
        let y = p.graph.atom(0).coords.unwrap().y;
        assert!((y - p.atom_pixel_coords[0].1 / 434.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_off_raster_is_rejected() {
        let mut s = sample();
        s.atom_pixel_coords[0] = (1.0, 1.0);
        assert!(AugmentOp::Rotate { degrees: 45.0 }.apply(&s).is_none());
    }

    #[test]
    fn chain_is_reproducible() {
        let s = sample();
        let cfg = AugmentConfig::default();
        let a = augment_image(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let b = augment_image(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }
}
