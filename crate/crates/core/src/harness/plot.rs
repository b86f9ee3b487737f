//! Minimal raster rendering: time-series line plots and costmap images.
//! There is no text; axes are a frame with the zero line where it fits.

use image::{GrayImage, Luma, Rgb, RgbImage};

use crate::costmap::CostmapLayer;

const WIDTH: u32 = 800;
const HEIGHT: u32 = 300;
const MARGIN: u32 = 20;
/// Upper bound on the costmap image's longer side, px.
const MAP_MAX_SIDE: usize = 800;

fn line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Plots `ys` against `xs`; points flagged in `marks` get a red tick.
pub(crate) fn line_plot(xs: &[f64], ys: &[f64], marks: &[bool]) -> RgbImage {
    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, Rgb([255, 255, 255]));
    let (l, t) = (MARGIN as i64, MARGIN as i64);
    let (r, b) = ((WIDTH - MARGIN) as i64, (HEIGHT - MARGIN) as i64);
    let grey = Rgb([160, 160, 160]);
    for (a, c) in [
        ((l, t), (r, t)),
        ((r, t), (r, b)),
        ((r, b), (l, b)),
        ((l, b), (l, t)),
    ] {
        line(&mut img, a, c, grey);
    }
    let finite = |v: &&f64| v.is_finite();
    let span = |v: &[f64]| {
        let lo = v
            .iter()
            .filter(finite)
            .copied()
            .fold(f64::INFINITY, f64::min);
        let hi = v
            .iter()
            .filter(finite)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let (x_lo, x_hi) = span(xs);
    let (y_lo, y_hi) = span(ys);
    let px = |x: f64| l + ((x - x_lo) / (x_hi - x_lo) * (r - l) as f64).round() as i64;
    let py = |y: f64| b - ((y - y_lo) / (y_hi - y_lo) * (b - t) as f64).round() as i64;
    if y_lo < 0.0 && y_hi > 0.0 {
        line(&mut img, (l, py(0.0)), (r, py(0.0)), Rgb([220, 220, 220]));
    }
    let pts: Vec<(i64, i64)> = xs.iter().zip(ys).map(|(&x, &y)| (px(x), py(y))).collect();
    for w in pts.windows(2) {
        line(&mut img, w[0], w[1], Rgb([0, 0, 0]));
    }
    for (p, &m) in pts.iter().zip(marks) {
        if m {
            line(&mut img, (p.0, p.1 - 4), (p.0, p.1 + 4), Rgb([200, 0, 0]));
        }
    }
    img
}

/// Free cells white, lethal black, unknown mid-grey; +y points up.
pub(crate) fn costmap_image(layer: &CostmapLayer) -> GrayImage {
    let (cols, rows) = layer.dims();
    let scale = (MAP_MAX_SIDE / cols.max(rows)).max(1);
    let mut img = GrayImage::new((cols * scale) as u32, (rows * scale) as u32);
    for row in 0..rows {
        for col in 0..cols {
            let v = layer.get(col, row).map_or(128, |c| 255 - c);
            for dy in 0..scale {
                for dx in 0..scale {
                    let x = (col * scale + dx) as u32;
                    let y = ((rows - 1 - row) * scale + dy) as u32;
                    img.put_pixel(x, y, Luma([v]));
                }
            }
        }
    }
    img
}
