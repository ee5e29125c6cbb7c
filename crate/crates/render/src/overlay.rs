//! Static annotation of a raster with predicted atoms and bonds.

use image::{GrayImage, Luma, Rgb, RgbImage};

use skelgraph_core::BondType;

use crate::draw::{draw_text, thick_line, FontFamily};

const BOND_COLOR: Rgb<u8> = Rgb([30, 90, 230]);
const WEDGE_COLOR: Rgb<u8> = Rgb([0, 160, 60]);
const ATOM_COLOR: Rgb<u8> = Rgb([220, 30, 30]);

/// A predicted atom at normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayAtom {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

/// Draws bonds as colored lines (wedges in a second color, with a dot at the narrow end),
/// atoms as small squares with their index and label, over a dimmed copy of `base`.
pub fn overlay(base: &GrayImage, atoms: &[OverlayAtom], bonds: &[(usize, usize, BondType)]) -> RgbImage {
    let (w, h) = base.dimensions();
    let px = |a: &OverlayAtom| (a.x * w as f64, a.y * h as f64);
    let blank = || GrayImage::from_pixel(w, h, Luma([255]));

    let (mut plain, mut wedged, mut marks) = (blank(), blank(), blank());
    for &(i, j, kind) in bonds {
        let (Some(a), Some(b)) = (atoms.get(i), atoms.get(j)) else {
            continue;
        };
        let layer = if kind.is_wedge() { &mut wedged } else { &mut plain };
        let width = match kind {
            BondType::Double => 3.0,
            BondType::Triple => 4.0,
            _ => 2.0,
        };
        thick_line(layer, px(a), px(b), width);
        if kind.is_wedge() {
            thick_line(&mut wedged, px(a), px(a), 6.0);
        }
    }
    let scale = if w >= 256 { 2 } else { 1 };
    for (k, a) in atoms.iter().enumerate() {
        let (x, y) = px(a);
        thick_line(&mut marks, (x - 2.0, y), (x + 2.0, y), 5.0);
        let text = format!("{k}:{}", a.label);
        draw_text(&mut marks, &text, x as i64 + 4, y as i64 - 10 * scale as i64, scale, FontFamily::Plain);
    }

    let mut out = RgbImage::from_fn(w, h, |x, y| {
        let v = 128 + base.get_pixel(x, y)[0] / 2;
        Rgb([v, v, v])
    });
    for (layer, color) in [(&plain, BOND_COLOR), (&wedged, WEDGE_COLOR), (&marks, ATOM_COLOR)] {
        for (x, y, p) in layer.enumerate_pixels() {
            if p[0] < 128 {
                out.put_pixel(x, y, color);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colors_land_on_atoms_and_bonds() {
        let base = GrayImage::from_pixel(200, 200, Luma([255]));
        let atoms = vec![
            OverlayAtom { label: "C".into(), x: 0.25, y: 0.5 },
            OverlayAtom { label: "O".into(), x: 0.75, y: 0.5 },
        ];
        let out = overlay(&base, &atoms, &[(0, 1, BondType::Single), (0, 7, BondType::Single)]);
        assert_eq!(out.dimensions(), (200, 200));
        assert_eq!(*out.get_pixel(100, 100), BOND_COLOR);
        assert_eq!(*out.get_pixel(50, 100), ATOM_COLOR);
        assert_eq!(*out.get_pixel(10, 10), Rgb([255, 255, 255]));
    }
}
