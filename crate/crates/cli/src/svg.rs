//! Scatter plot of a joint spectrum over the image of the energy-momentum map.

use std::fmt::Write;

use pendulum_core::geometry::BoundaryPoint;
use pendulum_core::spectrum::Spectrum;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 48.0;

/// Data-space rectangle `[h0, h1] x [l0, l1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub h0: f64,
    pub h1: f64,
    pub l0: f64,
    pub l1: f64,
}

impl Frame {
    /// Frame around the spectrum with some room on every side; the minimum
    /// `(-1, 0)` and the pinch `(1, 0)` are always inside.
    pub fn around(spectrum: &Spectrum) -> Self {
        let h_max = spectrum.points.iter().map(|p| p.h).fold(1.0, f64::max);
        let l_max = spectrum
            .points
            .iter()
            .map(|p| p.l.abs())
            .fold(0.5, f64::max);
        let pad = 0.08 * (h_max + 1.0);
        Self {
            h0: -1.0 - pad,
            h1: h_max + pad,
            l0: -l_max - pad,
            l1: l_max + pad,
        }
    }

    fn px(&self, h: f64, l: f64) -> (f64, f64) {
        let x = MARGIN + (h - self.h0) / (self.h1 - self.h0) * (WIDTH - 2.0 * MARGIN);
        let y = HEIGHT - MARGIN - (l - self.l0) / (self.l1 - self.l0) * (HEIGHT - 2.0 * MARGIN);
        (x, y)
    }

    /// Liang-Barsky clip of the segment `a -> b`.
    fn clip(&self, a: (f64, f64), b: (f64, f64)) -> Option<((f64, f64), (f64, f64))> {
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for (p, q) in [
            (-dx, a.0 - self.h0),
            (dx, self.h1 - a.0),
            (-dy, a.1 - self.l0),
            (dy, self.l1 - a.1),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
                continue;
            }
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some((
            (a.0 + t0 * dx, a.1 + t0 * dy),
            (a.0 + t1 * dx, a.1 + t1 * dy),
        ))
    }

    /// Pieces of the polyline `points` inside the frame.
    pub fn clip_polyline(&self, points: &[(f64, f64)]) -> Vec<Vec<(f64, f64)>> {
        let mut pieces: Vec<Vec<(f64, f64)>> = Vec::new();
        let mut current: Vec<(f64, f64)> = Vec::new();
        for w in points.windows(2) {
            match self.clip(w[0], w[1]) {
                Some((a, b)) => {
                    if current.last() != Some(&a) {
                        if !current.is_empty() {
                            pieces.push(std::mem::take(&mut current));
                        }
                        current.push(a);
                    }
                    current.push(b);
                }
                None => {
                    if !current.is_empty() {
                        pieces.push(std::mem::take(&mut current));
                    }
                }
            }
        }
        if !current.is_empty() {
            pieces.push(current);
        }
        pieces
    }
}

/// One `<circle>` per spectrum point, the boundary curve clipped to the
/// frame, and a cross at the pinch point.
pub fn render(spectrum: &Spectrum, locus: &[BoundaryPoint]) -> String {
    let frame = Frame::around(spectrum);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, y1) = frame.px(frame.h0, frame.l0);
    let (x1, y0) = frame.px(frame.h1, frame.l1);
    let _ = writeln!(
        s,
        r#"<rect class="frame" x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );

    let curve: Vec<(f64, f64)> = locus.iter().map(|b| (b.h, b.l)).collect();
    for piece in frame.clip_polyline(&curve) {
        let pts: Vec<String> = piece
            .iter()
            .map(|&(h, l)| {
                let (x, y) = frame.px(h, l);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline class="locus" points="{}" fill="none" stroke="#444" stroke-width="1.5"/>"##,
            pts.join(" ")
        );
    }

    for p in &spectrum.points {
        let (x, y) = frame.px(p.h, p.l);
        let _ = writeln!(
            s,
            r##"<circle class="state" cx="{x:.3}" cy="{y:.3}" r="2" fill="#1f5fa8"><title>({}, {})</title></circle>"##,
            p.qn.n, p.qn.m
        );
    }

    let (px, py) = frame.px(1.0, 0.0);
    let d = 6.0;
    let _ = writeln!(
        s,
        r##"<path class="pinch" d="M{:.3},{:.3} L{:.3},{:.3} M{:.3},{:.3} L{:.3},{:.3}" stroke="#c0392b" stroke-width="2"/>"##,
        px - d,
        py - d,
        px + d,
        py + d,
        px - d,
        py + d,
        px + d,
        py - d
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-size="14" text-anchor="middle">h</text>"#,
        0.5 * WIDTH,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.3}" font-size="14" text-anchor="middle">l</text>"#,
        0.5 * HEIGHT
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_stops_at_the_frame() {
        let f = Frame {
            h0: 0.0,
            h1: 1.0,
            l0: 0.0,
            l1: 1.0,
        };
        let pieces = f.clip_polyline(&[(0.5, 0.5), (0.5, 2.0), (3.0, 3.0)]);
        assert_eq!(pieces, vec![vec![(0.5, 0.5), (0.5, 1.0)]]);
        assert!(f.clip_polyline(&[(2.0, 2.0), (3.0, 3.0)]).is_empty());
    }
}
