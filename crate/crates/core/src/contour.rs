//! Zero-level contour of a sampled grid by marching squares.

use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Straight piece of the contour, as (x, y) end points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    /// First end point.
    pub a: [f64; 2],
    /// Second end point.
    pub b: [f64; 2],
    /// Cell (i, j) whose lower-left corner is (xs[i], ys[j]).
    pub cell: (usize, usize),
}

/// Zero contour of `values` sampled at (xs[i], ys[j]), stored as `values[j * xs.len() + i]`.
///
/// `None` marks a masked sample; cells touching one are skipped.
pub fn zero_contour(xs: &[f64], ys: &[f64], values: &[Option<f64>]) -> Result<Vec<Segment>> {
    let (nx, ny) = (xs.len(), ys.len());
    if values.len() != nx * ny {
        return Err(crate::Error::DimensionMismatch { expected: nx * ny, found: values.len() });
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) || ys.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("grid", "axes must be strictly increasing"));
    }
    let mut out = Vec::new();
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let at = |di: usize, dj: usize| values[(j + dj) * nx + i + di];
            let (Some(v00), Some(v10), Some(v11), Some(v01)) = (at(0, 0), at(1, 0), at(1, 1), at(0, 1)) else {
                continue;
            };
            let (x0, x1, y0, y1) = (xs[i], xs[i + 1], ys[j], ys[j + 1]);
            // corners counter-clockwise from lower-left
            let corners = [([x0, y0], v00), ([x1, y0], v10), ([x1, y1], v11), ([x0, y1], v01)];
            let mut hits: Vec<(usize, [f64; 2])> = Vec::new();
            for e in 0..4 {
                let (p, a) = corners[e];
                let (q, b) = corners[(e + 1) % 4];
                if (a < 0.0) != (b < 0.0) {
                    let t = a / (a - b);
                    hits.push((e, [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]));
                }
            }
            let cell = (i, j);
            match hits.len() {
                2 => out.push(Segment { a: hits[0].1, b: hits[1].1, cell }),
                4 => {
                    // saddle: the centre value decides which corners connect
                    let centre = 0.25 * (v00 + v10 + v11 + v01);
                    let pairs = if (centre < 0.0) == (v00 < 0.0) { [(0, 1), (2, 3)] } else { [(0, 3), (1, 2)] };
                    for (p, q) in pairs {
                        out.push(Segment { a: hits[p].1, b: hits[q].1, cell });
                    }
                }
                _ => {}
            }
        }
    }
    Ok(out)
}
