//! Minimal static PNG plots: scatter and line charts on a fixed canvas.

use std::path::Path;

use image::{Rgb, RgbImage};

const W: u32 = 640;
const H: u32 = 480;
const MARGIN: u32 = 40;
const BG: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([120, 120, 120]);

pub const PALETTE: [Rgb<u8>; 6] = [
    Rgb([31, 119, 180]),
    Rgb([255, 127, 14]),
    Rgb([44, 160, 44]),
    Rgb([214, 39, 40]),
    Rgb([148, 103, 189]),
    Rgb([23, 190, 207]),
];

#[derive(Debug, Clone, Copy)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn of<'a>(values: impl IntoIterator<Item = &'a f64>) -> Range {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in values {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            return Range { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 {
            return Range { lo: lo - 0.5, hi: hi + 0.5 };
        }
        Range { lo, hi }
    }
}

pub struct Canvas {
    img: RgbImage,
    x: Range,
    y: Range,
}

impl Canvas {
    pub fn new(x: Range, y: Range) -> Canvas {
        let mut img = RgbImage::from_pixel(W, H, BG);
        for px in MARGIN..W - MARGIN {
            img.put_pixel(px, H - MARGIN, AXIS);
            img.put_pixel(px, MARGIN, AXIS);
        }
        for py in MARGIN..=H - MARGIN {
            img.put_pixel(MARGIN, py, AXIS);
            img.put_pixel(W - MARGIN, py, AXIS);
        }
        Canvas { img, x, y }
    }

    fn to_px(&self, x: f64, y: f64) -> Option<(i64, i64)> {
        if !x.is_finite() || !y.is_finite() {
            return None;
        }
        let span_w = (W - 2 * MARGIN) as f64;
        let span_h = (H - 2 * MARGIN) as f64;
        let px = MARGIN as f64 + (x - self.x.lo) / (self.x.hi - self.x.lo) * span_w;
        let py = (H - MARGIN) as f64 - (y - self.y.lo) / (self.y.hi - self.y.lo) * span_h;
        Some((px.round() as i64, py.round() as i64))
    }

    fn put(&mut self, px: i64, py: i64, c: Rgb<u8>) {
        let inside = px >= MARGIN as i64 && px <= (W - MARGIN) as i64 && py >= MARGIN as i64 && py <= (H - MARGIN) as i64;
        if inside {
            self.img.put_pixel(px as u32, py as u32, c);
        }
    }

    pub fn scatter(&mut self, points: &[(f64, f64)], c: Rgb<u8>) {
        for &(x, y) in points {
            if let Some((px, py)) = self.to_px(x, y) {
                self.put(px, py, c);
            }
        }
    }

    pub fn line(&mut self, points: &[(f64, f64)], c: Rgb<u8>) {
        let mut prev: Option<(i64, i64)> = None;
        for &(x, y) in points {
            let cur = self.to_px(x, y);
            if let (Some((x0, y0)), Some((x1, y1))) = (prev, cur) {
                let steps = (x1 - x0).abs().max((y1 - y0).abs()).max(1);
                for k in 0..=steps {
                    let t = k as f64 / steps as f64;
                    let px = x0 as f64 + t * (x1 - x0) as f64;
                    let py = y0 as f64 + t * (y1 - y0) as f64;
                    self.put(px.round() as i64, py.round() as i64, c);
                }
            }
            prev = cur;
        }
    }

    /// Thin guide line at `y`, e.g. the zero axis of a constellation.
    pub fn hguide(&mut self, y: f64) {
        let (x0, x1) = (self.x.lo, self.x.hi);
        self.line(&[(x0, y), (x1, y)], AXIS);
    }

    pub fn vguide(&mut self, x: f64) {
        let (y0, y1) = (self.y.lo, self.y.hi);
        self.line(&[(x, y0), (x, y1)], AXIS);
    }

    pub fn save(&self, path: &Path) -> image::ImageResult<()> {
        self.img.save(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_handles_degenerate_input() {
        let r = Range::of(&[f64::NAN, 3.0, 3.0]);
        assert!(r.hi > r.lo);
        let e = Range::of(&[]);
        assert_eq!((e.lo, e.hi), (0.0, 1.0));
    }

    #[test]
    fn points_map_inside_the_frame() {
        let c = Canvas::new(Range { lo: -1.0, hi: 1.0 }, Range { lo: -1.0, hi: 1.0 });
        assert_eq!(c.to_px(-1.0, -1.0), Some((MARGIN as i64, (H - MARGIN) as i64)));
        assert_eq!(c.to_px(1.0, 1.0), Some(((W - MARGIN) as i64, MARGIN as i64)));
        assert_eq!(c.to_px(f64::NAN, 0.0), None);
    }
}
