//! Rasterizes a laid-out graph as a grayscale skeletal formula.

use font8x8::{UnicodeFonts, BASIC_FONTS};
use image::{GrayImage, Luma};
use rand::Rng;
use thiserror::Error;

use skelgraph_core::rings::sssr;
use skelgraph_core::smiles::write;
use skelgraph_core::{BondType, Element, LabelKind, MolGraph, Point};

pub const DEFAULT_IMAGE_SIZE: u32 = 384;
const INK: Luma<u8> = Luma([0]);
const PAPER: Luma<u8> = Luma([255]);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("atom {0} has no coordinates")]
    MissingCoordinates(usize),
    #[error("invalid style: {0}")]
    Style(String),
    #[error(transparent)]
    Smiles(#[from] skelgraph_core::smiles::WriteError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FontFamily {
    Plain,
    Bold,
    Oblique,
    BoldOblique,
}

impl FontFamily {
    pub const ALL: [FontFamily; 4] = [
        FontFamily::Plain,
        FontFamily::Bold,
        FontFamily::Oblique,
        FontFamily::BoldOblique,
    ];

    fn bold(self) -> bool {
        matches!(self, FontFamily::Bold | FontFamily::BoldOblique)
    }

    fn oblique(self) -> bool {
        matches!(self, FontFamily::Oblique | FontFamily::BoldOblique)
    }
}

/// Which atoms get a text label besides pseudo-atoms and non-carbon elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Heteroatoms only; carbons stay implicit line vertices.
    Hetero,
    /// Heteroatoms plus terminal carbons.
    TerminalHetero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    pub bond_width_px: u32,
    /// Global stroke multiplier applied to every line.
    pub relative_thickness: f64,
    pub font: FontFamily,
    pub label_mode: LabelMode,
    pub implicit_h_visible: bool,
    pub image_size_px: u32,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            bond_width_px: 2,
            relative_thickness: 1.0,
            font: FontFamily::Plain,
            label_mode: LabelMode::Hetero,
            implicit_h_visible: true,
            image_size_px: DEFAULT_IMAGE_SIZE,
        }
    }
}

impl RenderStyle {
    /// Uniformly sampled style at the given image size.
    pub fn sample<R: Rng + ?Sized>(image_size_px: u32, rng: &mut R) -> RenderStyle {
        RenderStyle {
            bond_width_px: rng.random_range(1..=4),
            relative_thickness: rng.random_range(0.5..=1.5),
            font: FontFamily::ALL[rng.random_range(0..4)],
            label_mode: if rng.random() {
                LabelMode::Hetero
            } else {
                LabelMode::TerminalHetero
            },
            implicit_h_visible: rng.random(),
            image_size_px,
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if !(1..=4).contains(&self.bond_width_px) {
            return Err(RenderError::Style(format!("bond width {} not in 1..=4", self.bond_width_px)));
        }
        if !(0.5..=1.5).contains(&self.relative_thickness) {
            return Err(RenderError::Style(format!(
                "relative thickness {} not in [0.5, 1.5]",
                self.relative_thickness
            )));
        }
        if self.image_size_px < 32 {
            return Err(RenderError::Style(format!("image size {} too small", self.image_size_px)));
        }
        Ok(())
    }

    fn stroke(&self) -> f64 {
        (self.bond_width_px as f64 * self.relative_thickness).max(1.0)
    }
}

/// A drawn molecule with per-atom pixel positions.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedSample {
    pub image: GrayImage,
    /// Continuous pixel position of each graph atom (pixel (i, j) covers [i, i+1) x [j, j+1)).
    pub atom_pixel_coords: Vec<(f64, f64)>,
    /// The drawn graph; its coordinates equal `atom_pixel_coords` divided by the raster size.
    pub graph: MolGraph,
    /// Pseudo-SMILES of `graph`.
    pub smiles: String,
}

impl RenderedSample {
    /// Rewrites graph coordinates from pixel positions and the current raster size.
    pub(crate) fn sync_graph_coords(&mut self) {
        let (w, h) = (self.image.width() as f64, self.image.height() as f64);
        for (i, &(x, y)) in self.atom_pixel_coords.iter().enumerate() {
            self.graph
                .set_coords(i, Point::new(x / w, y / h))
                .expect("pixel coordinates stay inside the raster");
        }
    }
}

/// Whether `atom` is drawn with a text label under `mode`.
pub fn is_labeled(g: &MolGraph, atom: usize, mode: LabelMode) -> bool {
    let label = &g.atom(atom).label;
    if label.kind != LabelKind::Element || label.element != Some(Element::C) {
        return true;
    }
    let degree = g.degree(atom);
    label.charge != 0 || label.isotope.is_some() || degree == 0 || (mode == LabelMode::TerminalHetero && degree == 1)
}

/// Label pieces: text left of the anchor glyph, the anchor glyph(s), text right of it.
fn label_parts(g: &MolGraph, atom: usize, style: &RenderStyle) -> (String, String, String) {
    let label = &g.atom(atom).label;
    if label.kind != LabelKind::Element {
        return (String::new(), label.text.clone(), String::new());
    }
    let left = label.isotope.map(|i| i.to_string()).unwrap_or_default();
    let symbol = label.element.map(|e| e.symbol().to_string()).unwrap_or_default();
    let mut right = String::new();
    let h = g.hydrogen_count(atom);
    if style.implicit_h_visible && h > 0 {
        right.push('H');
        if h > 1 {
            right.push_str(&h.to_string());
        }
    }
    match label.charge {
        0 => {}
        1 => right.push('+'),
        -1 => right.push('-'),
        c if c > 0 => right.push_str(&format!("{c}+")),
        c => right.push_str(&format!("{}-", -c)),
    }
    (left, symbol, right)
}

/// Draws `g`, which must carry coordinates on every atom.
pub fn draw<R: Rng + ?Sized>(g: &MolGraph, style: &RenderStyle, rng: &mut R) -> Result<RenderedSample, RenderError> {
    style.validate()?;
    let size = style.image_size_px;
    let s = size as f64;
    let mut px = Vec::with_capacity(g.atom_count());
    for i in 0..g.atom_count() {
        let p = g.atom(i).coords.ok_or(RenderError::MissingCoordinates(i))?;
        px.push((p.x * s, p.y * s));
    }
    let mut img = GrayImage::from_pixel(size, size, PAPER);
    let stroke = style.stroke();
    let mean_len = if g.bond_count() > 0 {
        g.bonds()
            .iter()
            .map(|b| dist(px[b.begin], px[b.end]))
            .sum::<f64>()
            / g.bond_count() as f64
    } else {
        0.1 * s
    };
    let gap = (0.16 * mean_len).max(stroke + 2.0);
    let rings = sssr(g);
    let ring_center = |a: usize, b: usize| -> Option<(f64, f64)> {
        let ring = rings
            .iter()
            .filter(|r| r.contains(&a) && r.contains(&b))
            .min_by_key(|r| r.len())?;
        let n = ring.len() as f64;
        Some(ring.iter().fold((0.0, 0.0), |acc, &i| (acc.0 + px[i].0 / n, acc.1 + px[i].1 / n)))
    };

    for bond in g.bonds() {
        let (p, q) = (px[bond.begin], px[bond.end]);
        let len = dist(p, q).max(1e-9);
        let normal = (-(q.1 - p.1) / len, (q.0 - p.0) / len);
        let offset = |pt: (f64, f64), d: f64| (pt.0 + normal.0 * d, pt.1 + normal.1 * d);
        // Inner line of a ring double/aromatic bond: toward the ring center, shortened.
        let inner = |img: &mut GrayImage, dashed: bool| {
            let side = match ring_center(bond.begin, bond.end) {
                Some(c) => {
                    let mid = ((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0);
                    if (c.0 - mid.0) * normal.0 + (c.1 - mid.1) * normal.1 >= 0.0 { 1.0 } else { -1.0 }
                }
                None => 1.0,
            };
            let (a, b) = (offset(p, side * gap), offset(q, side * gap));
            let (a, b) = (lerp(a, b, 0.15), lerp(a, b, 0.85));
            if dashed {
                dashed_line(img, a, b, stroke * 0.8, (0.12 * mean_len).max(3.0));
            } else {
                thick_line(img, a, b, stroke);
            }
        };
        match bond.kind {
            BondType::Single => thick_line(&mut img, p, q, stroke),
            BondType::Double => {
                if ring_center(bond.begin, bond.end).is_some() || rng.random::<f64>() < 0.3 {
                    thick_line(&mut img, p, q, stroke);
                    inner(&mut img, false);
                } else {
                    thick_line(&mut img, offset(p, gap / 2.0), offset(q, gap / 2.0), stroke);
                    thick_line(&mut img, offset(p, -gap / 2.0), offset(q, -gap / 2.0), stroke);
                }
            }
            BondType::Triple => {
                thick_line(&mut img, p, q, stroke);
                thick_line(&mut img, offset(p, gap), offset(q, gap), stroke);
                thick_line(&mut img, offset(p, -gap), offset(q, -gap), stroke);
            }
            BondType::Aromatic => {
                thick_line(&mut img, p, q, stroke);
                inner(&mut img, true);
            }
            BondType::SolidWedge => {
                let hw = (0.12 * len).max(stroke + 1.0);
                filled_triangle(&mut img, p, offset(q, hw), offset(q, -hw));
            }
            BondType::DashedWedge => {
                let hw = (0.12 * len).max(stroke + 1.0);
                let marks = ((len / 5.0).round() as usize).max(4);
                for k in 1..=marks {
                    let t = k as f64 / marks as f64;
                    let c = lerp(p, q, t);
                    let w = (hw * t).max(1.0);
                    thick_line(&mut img, offset(c, w), offset(c, -w), (stroke * 0.6).max(1.0));
                }
            }
        }
    }

    let glyph = ((0.45 * mean_len / 8.0).round() as u32).clamp(1, 4);
    for atom in 0..g.atom_count() {
        if !is_labeled(g, atom, style.label_mode) {
            continue;
        }
        let (left, anchor, right) = label_parts(g, atom, style);
        let cell = 8 * glyph;
        let (cx, cy) = px[atom];
        let anchor_w = (anchor.chars().count() as u32 * cell) as f64;
        let x0 = cx - anchor_w / 2.0 - (left.chars().count() as u32 * cell) as f64;
        let y0 = cy - cell as f64 / 2.0;
        let total = (left.chars().count() + anchor.chars().count() + right.chars().count()) as u32 * cell;
        fill_rect(&mut img, x0 - 1.0, y0 - 1.0, total as f64 + 2.0, cell as f64 + 2.0, PAPER);
        let text = format!("{left}{anchor}{right}");
        draw_text(&mut img, &text, x0.round() as i64, y0.round() as i64, glyph, style.font);
    }

    let mut graph = g.clone();
    for (i, &(x, y)) in px.iter().enumerate() {
        graph
            .set_coords(i, Point::new(x / s, y / s))
            .expect("inside the unit square");
    }
    let smiles = write(&graph)?;
    Ok(RenderedSample {
        image: img,
        atom_pixel_coords: px,
        graph,
        smiles,
    })
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn lerp(a: (f64, f64), b: (f64, f64), t: f64) -> (f64, f64) {
    (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)
}

fn put(img: &mut GrayImage, x: i64, y: i64, v: Luma<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, v);
    }
}

/// Pixels whose centers lie within `width / 2` of the segment.
pub(crate) fn thick_line(img: &mut GrayImage, a: (f64, f64), b: (f64, f64), width: f64) {
    let r = (width / 2.0).max(0.5);
    let (x0, x1) = ((a.0.min(b.0) - r).floor() as i64, (a.0.max(b.0) + r).ceil() as i64);
    let (y0, y1) = ((a.1.min(b.1) - r).floor() as i64, (a.1.max(b.1) + r).ceil() as i64);
    let d = (b.0 - a.0, b.1 - a.1);
    let len2 = d.0 * d.0 + d.1 * d.1;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let c = (x as f64 + 0.5, y as f64 + 0.5);
            let t = if len2 > 0.0 {
                (((c.0 - a.0) * d.0 + (c.1 - a.1) * d.1) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let nearest = (a.0 + d.0 * t, a.1 + d.1 * t);
            if dist(c, nearest) <= r {
                put(img, x, y, INK);
            }
        }
    }
}

fn dashed_line(img: &mut GrayImage, a: (f64, f64), b: (f64, f64), width: f64, dash: f64) {
    let len = dist(a, b);
    let n = ((len / dash).floor() as usize).max(1);
    for k in (0..n).step_by(2) {
        let (t0, t1) = (k as f64 / n as f64, ((k + 1) as f64 / n as f64).min(1.0));
        thick_line(img, lerp(a, b, t0), lerp(a, b, t1), width);
    }
}

fn filled_triangle(img: &mut GrayImage, a: (f64, f64), b: (f64, f64), c: (f64, f64)) {
    let xs = [a.0, b.0, c.0];
    let ys = [a.1, b.1, c.1];
    let (x0, x1) = (xs.iter().cloned().fold(f64::INFINITY, f64::min).floor() as i64, xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil() as i64);
    let (y0, y1) = (ys.iter().cloned().fold(f64::INFINITY, f64::min).floor() as i64, ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil() as i64);
    let edge = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0);
    let area = edge(a, b, c);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let p = (x as f64 + 0.5, y as f64 + 0.5);
            let (w0, w1, w2) = (edge(b, c, p), edge(c, a, p), edge(a, b, p));
            let inside = if area >= 0.0 {
                w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0
            } else {
                w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0
            };
            if inside {
                put(img, x, y, INK);
            }
        }
    }
    // Keep the narrow tip visible.
    thick_line(img, a, lerp(b, c, 0.5), 1.0);
}

fn fill_rect(img: &mut GrayImage, x: f64, y: f64, w: f64, h: f64, v: Luma<u8>) {
    for yy in y.floor() as i64..(y + h).ceil() as i64 {
        for xx in x.floor() as i64..(x + w).ceil() as i64 {
            put(img, xx, yy, v);
        }
    }
}

/// Bitmap text from the 8x8 basic font, each font pixel drawn as a `scale`-sized block.
pub(crate) fn draw_text(img: &mut GrayImage, text: &str, x: i64, y: i64, scale: u32, font: FontFamily) {
    let cell = 8 * scale as i64;
    for (k, ch) in text.chars().enumerate() {
        let Some(rows) = BASIC_FONTS.get(ch) else {
            continue;
        };
        for (r, bits) in rows.iter().enumerate() {
            let shear = if font.oblique() { (7 - r as i64) / 3 * scale as i64 } else { 0 };
            for c in 0..8 {
                if bits & (1 << c) == 0 {
                    continue;
                }
                let width = if font.bold() { scale as i64 + (scale as i64 / 2).max(1) } else { scale as i64 };
                for dy in 0..scale as i64 {
                    for dx in 0..width {
                        put(
                            img,
                            x + k as i64 * cell + c * scale as i64 + dx + shear,
                            y + r as i64 * scale as i64 + dy,
                            INK,
                        );
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::layout;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use skelgraph_core::smiles::parse;

    fn render(s: &str, style: &RenderStyle) -> RenderedSample {
        let g = layout(&parse(s).unwrap()).unwrap();
        draw(&g, style, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    /// 8-connected components of dark pixels.
    fn dark_components(img: &GrayImage) -> usize {
        let (w, h) = img.dimensions();
        let mut seen = vec![false; (w * h) as usize];
        let mut count = 0;
        for start in 0..(w * h) {
            if seen[start as usize] || img.get_pixel(start % w, start / w)[0] >= 128 {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start as usize] = true;
            while let Some(i) = stack.pop() {
                let (x, y) = ((i % w) as i64, (i / w) as i64);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let j = (ny as u32 * w + nx as u32) as usize;
                        if !seen[j] && img.get_pixel(nx as u32, ny as u32)[0] < 128 {
                            seen[j] = true;
                            stack.push(j as u32);
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn ethane_is_one_line() {
        let sample = render("CC", &RenderStyle::default());
        assert_eq!(dark_components(&sample.image), 1);
        // A line, not a glyph: every dark pixel is near the segment between the atoms.
        let (a, b) = (sample.atom_pixel_coords[0], sample.atom_pixel_coords[1]);
        for (x, y, p) in sample.image.enumerate_pixels() {
            if p[0] < 128 {
                let c = (x as f64 + 0.5, y as f64 + 0.5);
                let t = (((c.0 - a.0) * (b.0 - a.0) + (c.1 - a.1) * (b.1 - a.1)) / dist(a, b).powi(2)).clamp(0.0, 1.0);
                assert!(dist(c, lerp(a, b, t)) <= 1.5);
            }
        }
    }

    #[test]
    fn oxygen_glyph_sits_on_its_atom() {
        let style = RenderStyle {
            implicit_h_visible: false,
            ..RenderStyle::default()
        };
        let sample = render("CO", &style);
        let (ox, oy) = sample.atom_pixel_coords[1];
        // Centroid of dark pixels in the label box around the oxygen.
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for y in (oy - 10.0) as u32..(oy + 10.0) as u32 {
            for x in (ox - 10.0) as u32..(ox + 10.0) as u32 {
                if sample.image.get_pixel(x, y)[0] < 128 {
                    sx += x as f64 + 0.5;
                    sy += y as f64 + 0.5;
                    n += 1.0;
                }
            }
        }
        assert!(n > 10.0);
        assert!((sx / n - ox).abs() <= 2.0 && (sy / n - oy).abs() <= 2.0, "{} {}", sx / n - ox, sy / n - oy);
        assert_eq!(sample.graph.atom(1).coords.unwrap().x, ox / 384.0);
    }

    #[test]
    fn every_bond_kind_draws() {
        let mut g = layout(&parse("C(C)(F)(Cl)C#CC=Cc1ccccc1").unwrap()).unwrap();
        g.set_bond_type(0, BondType::SolidWedge);
        g.set_bond_type(1, BondType::DashedWedge);
        for font in FontFamily::ALL {
            let style = RenderStyle {
                font,
                label_mode: LabelMode::TerminalHetero,
                ..RenderStyle::default()
            };
            let sample = draw(&g, &style, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            assert!(sample.image.pixels().any(|p| p[0] == 0));
        }
    }

    #[test]
    fn style_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            RenderStyle::sample(384, &mut rng).validate().unwrap();
        }
        let bad = RenderStyle {
            bond_width_px: 5,
            ..RenderStyle::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn drawing_is_deterministic() {
        let g = layout(&parse("CC(=O)Oc1ccccc1C(=O)O").unwrap()).unwrap();
        let style = RenderStyle::default();
        let a = draw(&g, &style, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = draw(&g, &style, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
