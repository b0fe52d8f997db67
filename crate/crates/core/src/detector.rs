//! Single-pass AprilGrid detector: adaptive threshold, dark-component contours, quad
//! fitting and payload decoding.

use nalgebra::{Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::board::{BoardSpec, PointIndex, TAG36H11};
use crate::camera::Pixel;
use crate::error::{Error, Result};
use crate::pose::homography_dlt;
use crate::raster::GrayImage;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Side of the square averaging window, odd and at least 3.
    pub window: usize,
    /// A pixel is dark when it is below the local mean minus this offset.
    pub offset: f64,
    /// Gaussian pre-blur (pixels) applied before thresholding; 0 disables it.
    pub blur_sigma: f64,
    /// Smallest component area in pixels.
    pub min_area: usize,
    /// Largest perpendicular distance of contour pixels from the fitted quad sides.
    pub max_fit_error: f64,
    pub max_hamming: u32,
    /// Smallest accepted intensity difference between tag border and surrounding paper.
    pub min_contrast: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { window: 31, offset: 0.02, blur_sigma: 1.0, min_area: 24, max_fit_error: 2.0, max_hamming: 2, min_contrast: 0.05 }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::config(format!("threshold window must be odd and >= 3, got {}", self.window)));
        }
        if !(self.max_fit_error > 0.0) || !(self.blur_sigma >= 0.0) {
            return Err(Error::config("max_fit_error must be positive and blur_sigma non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl BinaryImage {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }
}

/// A four-sided dark region. Corners run counter-clockwise on the board, which is a
/// negative shoelace sum in pixel coordinates. After decoding, corner `i` is tag
/// corner `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quad {
    pub corners: [Pixel; 4],
    pub decoded_id: Option<u32>,
    pub decode_hamming: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Direct,
    Reprojected,
    Oracle,
}

/// One observed feature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection {
    pub frame: usize,
    pub point: PointIndex,
    pub pixel: Pixel,
    pub provenance: Provenance,
    pub refined: bool,
}

/// Marks pixels darker than their local mean minus `offset`, using a `window x window`
/// box clipped at the image border.
pub fn adaptive_threshold(img: &GrayImage, window: usize, offset: f64) -> Result<BinaryImage> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::config(format!("threshold window must be odd and >= 3, got {window}")));
    }
    let (w, h) = (img.width(), img.height());
    let stride = w + 1;
    let mut integral = vec![0f64; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0f64;
        for x in 0..w {
            row += img.get(x, y) as f64;
            integral[(y + 1) * stride + x + 1] = integral[y * stride + x + 1] + row;
        }
    }
    let r = window / 2;
    let mut data = vec![false; w * h];
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
            let sum = integral[y1 * stride + x1] - integral[y0 * stride + x1] - integral[y1 * stride + x0] + integral[y0 * stride + x0];
            let mean = sum / ((y1 - y0) * (x1 - x0)) as f64;
            data[y * w + x] = (img.get(x, y) as f64) < mean - offset;
        }
    }
    Ok(BinaryImage { width: w, height: h, data })
}

const NEIGHBORS: [(isize, isize); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

/// 4-connected foreground components of a `w x h` mask.
fn components(mask: &[bool], w: usize, h: usize) -> Vec<Vec<usize>> {
    let mut labels = vec![0u32; w * h];
    let mut members = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        let label = members.len() as u32 + 1;
        let mut pixels = Vec::new();
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            pixels.push(i);
            let mut visit = |j: usize| {
                if mask[j] && labels[j] == 0 {
                    labels[j] = label;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        members.push(pixels);
    }
    members
}

/// Local mask of a pixel set: label image (1 inside), its size and the offset of its
/// origin in the full image. A one-pixel empty margin surrounds the set.
fn local_mask(pixels: &[usize], w: usize) -> Option<(Vec<u32>, usize, usize, (isize, isize))> {
    let xs = pixels.iter().map(|&i| (i % w) as isize);
    let ys = pixels.iter().map(|&i| (i / w) as isize);
    let (x0, x1) = (xs.clone().min()? - 1, xs.max()? + 1);
    let (y0, y1) = (ys.clone().min()? - 1, ys.max()? + 1);
    let (lw, lh) = ((x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);
    let mut mask = vec![0u32; lw * lh];
    for &i in pixels {
        mask[((i / w) as isize - y0) as usize * lw + ((i % w) as isize - x0) as usize] = 1;
    }
    Some((mask, lw, lh, (x0, y0)))
}

/// The pixel set together with every background pixel it encloses.
fn fill_holes(pixels: &[usize], w: usize) -> Vec<usize> {
    let Some((mask, lw, lh, (x0, y0))) = local_mask(pixels, w) else {
        return pixels.to_vec();
    };
    let mut outside = vec![false; lw * lh];
    let mut stack = vec![0usize];
    outside[0] = true;
    while let Some(i) = stack.pop() {
        let (x, y) = (i % lw, i / lw);
        let mut visit = |j: usize| {
            if mask[j] == 0 && !outside[j] {
                outside[j] = true;
                stack.push(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < lw {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - lw);
        }
        if y + 1 < lh {
            visit(i + lw);
        }
    }
    (0..lw * lh)
        .filter(|&i| !outside[i])
        .map(|i| (y0 + (i / lw) as isize) as usize * w + (x0 + (i % lw) as isize) as usize)
        .collect()
}

/// Splits a pixel set whose parts touch only through necks, as happens where a tag
/// corner meets a gap square. The set is eroded (4-neighborhood) repeatedly; at every
/// depth where it falls apart, each pixel is regrown to its geodesically nearest part.
/// Returns one partition per such depth, as full-image pixel indices.
fn split_component(pixels: &[usize], w: usize) -> Vec<Vec<Vec<usize>>> {
    const MAX_EROSIONS: usize = 4;
    let Some((mask, lw, lh, (x0, y0))) = local_mask(pixels, w) else {
        return Vec::new();
    };
    let mask: Vec<bool> = mask.into_iter().map(|m| m > 0).collect();
    let mut eroded = mask.clone();
    let mut out = Vec::new();
    for _ in 0..MAX_EROSIONS {
        let prev = eroded.clone();
        for y in 1..lh - 1 {
            for x in 1..lw - 1 {
                let i = y * lw + x;
                eroded[i] = prev[i] && prev[i - 1] && prev[i + 1] && prev[i - lw] && prev[i + lw];
            }
        }
        let comps = components(&eroded, lw, lh);
        if comps.is_empty() {
            break;
        }
        if comps.len() < 2 {
            continue;
        }
        let mut labels = vec![0u32; lw * lh];
        let mut queue = std::collections::VecDeque::new();
        for (n, part) in comps.iter().enumerate() {
            for &i in part {
                labels[i] = n as u32 + 1;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            for j in [i - 1, i + 1, i - lw, i + lw] {
                if mask[j] && labels[j] == 0 {
                    labels[j] = labels[i];
                    queue.push_back(j);
                }
            }
        }
        let mut parts = vec![Vec::new(); comps.len()];
        for (i, &l) in labels.iter().enumerate() {
            if l > 0 {
                parts[l as usize - 1].push((y0 + (i / lw) as isize) as usize * w + (x0 + (i % lw) as isize) as usize);
            }
        }
        out.push(parts);
    }
    out
}

/// Moore-neighbor trace of the outer boundary of the component with `label`, starting
/// at its first pixel in raster order.
fn trace_contour(labels: &[u32], w: usize, h: usize, label: u32, start: (usize, usize)) -> Vec<(usize, usize)> {
    let inside = |x: isize, y: isize| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && labels[y as usize * w + x as usize] == label;
    let mut contour = vec![start];
    let (mut cx, mut cy) = (start.0 as isize, start.1 as isize);
    // Entered from the west, so the search starts just after that neighbor.
    let mut dir = 6usize;
    let max_steps = 4 * w * h;
    let mut second: Option<(isize, isize)> = None;
    for _ in 0..max_steps {
        let mut found = None;
        for k in 1..=8 {
            let d = (dir + k) % 8;
            let (nx, ny) = (cx + NEIGHBORS[d].0, cy + NEIGHBORS[d].1);
            if inside(nx, ny) {
                found = Some((d, nx, ny));
                break;
            }
        }
        let Some((d, nx, ny)) = found else {
            break; // isolated pixel
        };
        if (cx, cy) == (start.0 as isize, start.1 as isize) {
            match second {
                None => second = Some((nx, ny)),
                Some(s) if s == (nx, ny) => {
                    contour.pop();
                    break;
                }
                _ => {}
            }
        }
        // Resume the scan just after the last outside neighbor, seen from the new pixel.
        dir = if d % 2 == 0 { (d + 6) % 8 } else { (d + 5) % 8 };
        cx = nx;
        cy = ny;
        contour.push((cx as usize, cy as usize));
    }
    contour
}

fn point_line_distance(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let d = b - a;
    let n = d.norm();
    if n == 0.0 {
        return (p - a).norm();
    }
    (d.x * (p.y - a.y) - d.y * (p.x - a.x)).abs() / n
}

/// Signed shoelace sum in pixel coordinates.
pub fn shoelace(c: &[Pixel]) -> f64 {
    (0..c.len()).map(|i| {
        let (p, q) = (c[i], c[(i + 1) % c.len()]);
        p.x * q.y - q.x * p.y
    }).sum::<f64>() / 2.0
}

/// Total least-squares line through points: returns (point on line, unit direction).
fn fit_line(points: &[Vector2<f64>]) -> Option<(Vector2<f64>, Vector2<f64>)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Vector2::zeros(), |a, p| a + p) / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = p - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some((mean, Vector2::new(angle.cos(), angle.sin())))
}

fn intersect(l1: &(Vector2<f64>, Vector2<f64>), l2: &(Vector2<f64>, Vector2<f64>)) -> Option<Vector2<f64>> {
    let (p, r) = l1;
    let (q, s) = l2;
    let cross = r.x * s.y - r.y * s.x;
    if cross.abs() < 1e-6 {
        return None;
    }
    let t = ((q.x - p.x) * s.y - (q.y - p.y) * s.x) / cross;
    Some(p + r * t)
}

/// Fits four vertices to a closed contour; `None` when the contour is not a quad.
fn fit_quad(contour: &[(usize, usize)], max_fit_error: f64) -> Option<[Pixel; 4]> {
    let n = contour.len();
    if n < 8 {
        return None;
    }
    let pts: Vec<Vector2<f64>> = contour.iter().map(|&(x, y)| Vector2::new(x as f64, y as f64)).collect();
    let centroid = pts.iter().fold(Vector2::zeros(), |a, p| a + p) / n as f64;
    let far = |from: &Vector2<f64>| (0..n).max_by(|&i, &j| (pts[i] - from).norm_squared().total_cmp(&(pts[j] - from).norm_squared())).unwrap();
    let a = far(&centroid);
    let c = far(&pts[a]);
    let chain = |from: usize, to: usize| -> Vec<usize> {
        let len = (to + n - from) % n;
        (0..=len).map(|k| (from + k) % n).collect()
    };
    let farthest_in = |idx: &[usize], p: &Vector2<f64>, q: &Vector2<f64>| {
        idx.iter().copied().max_by(|&i, &j| point_line_distance(&pts[i], p, q).total_cmp(&point_line_distance(&pts[j], p, q)))
    };
    let ac = chain(a, c);
    let ca = chain(c, a);
    let b = farthest_in(&ac, &pts[a], &pts[c])?;
    let d = farthest_in(&ca, &pts[c], &pts[a])?;
    let mut verts = [a, b, c, d];
    // Keep vertices in contour order.
    verts.sort_by_key(|&v| (v + n - a) % n);
    let mut sides = Vec::with_capacity(4);
    for k in 0..4 {
        let (s, e) = (verts[k], verts[(k + 1) % 4]);
        let idx = chain(s, e);
        if idx.len() < 3 {
            return None;
        }
        if idx.iter().any(|&i| point_line_distance(&pts[i], &pts[s], &pts[e]) > max_fit_error) {
            return None;
        }
        sides.push(idx);
    }

    let rough: Vec<Pixel> = verts.iter().map(|&v| pts[v]).collect();
    if shoelace(&rough).abs() < 4.0 {
        return None;
    }
    let mut lines = Vec::with_capacity(4);
    for idx in &sides {
        let len = idx.len();
        let trim = ((0.15 * len as f64).ceil() as usize).max(2);
        let inner: Vec<Vector2<f64>> = if len > 2 * trim + 2 { idx[trim..len - trim].iter().map(|&i| pts[i]).collect() } else { idx.iter().map(|&i| pts[i]).collect() };
        let (p, dir) = fit_line(&inner)?;
        // Contour pixels sit half a pixel inside the dark region's edge.
        let mut normal = Vector2::new(-dir.y, dir.x);
        if normal.dot(&(p - centroid)) < 0.0 {
            normal = -normal;
        }
        lines.push((p + normal * 0.5, dir));
    }
    let mut corners = [Pixel::zeros(); 4];
    for k in 0..4 {
        let c = intersect(&lines[(k + 3) % 4], &lines[k])?;
        if (c - rough[k]).norm() > 2.0 * max_fit_error + 2.0 {
            return None;
        }
        corners[k] = c;
    }
    if !is_convex(&corners) {
        return None;
    }
    if shoelace(&corners) > 0.0 {
        corners.reverse();
    }
    Some(corners)
}

fn is_convex(c: &[Pixel; 4]) -> bool {
    let mut sign = 0.0;
    for k in 0..4 {
        let (a, b, d) = (c[k], c[(k + 1) % 4], c[(k + 2) % 4]);
        let cross = (b - a).perp(&(d - b));
        if cross == 0.0 || (sign != 0.0 && cross.signum() != sign) {
            return false;
        }
        sign = cross.signum();
    }
    true
}

fn quad_of(pixels: &[usize], w: usize, cfg: &DetectorConfig) -> Option<[Pixel; 4]> {
    let (labels, lw, lh, (x0, y0)) = local_mask(pixels, w)?;
    let first = *pixels.iter().min()?;
    let start = (((first % w) as isize - x0) as usize, ((first / w) as isize - y0) as usize);
    let contour = trace_contour(&labels, lw, lh, 1, start);
    let shift = Pixel::new(x0 as f64, y0 as f64);
    fit_quad(&contour, cfg.max_fit_error).map(|c| c.map(|p| p + shift))
}

fn touches_border(pixels: &[usize], w: usize, h: usize) -> bool {
    pixels.iter().any(|&i| {
        let (x, y) = (i % w, i / w);
        x == 0 || y == 0 || x + 1 == w || y + 1 == h
    })
}

fn leaf_quad(pixels: &[usize], w: usize, h: usize, cfg: &DetectorConfig) -> Option<[Pixel; 4]> {
    if pixels.len() < cfg.min_area || touches_border(pixels, w, h) {
        return None;
    }
    quad_of(pixels, w, cfg)
}

/// Gathers quad fits from a pixel set and, when it does not fit, from its neck splits.
/// Every erosion depth contributes the parts that fit; parts of the shallowest split
/// that do not fit are split further.
fn collect_candidates(pixels: &[usize], w: usize, h: usize, cfg: &DetectorConfig, depth: usize, out: &mut Vec<(Vec<usize>, [Pixel; 4])>) {
    const MAX_DEPTH: usize = 3;
    if pixels.len() < cfg.min_area {
        return;
    }
    if let Some(corners) = leaf_quad(pixels, w, h, cfg) {
        out.push((pixels.to_vec(), corners));
        return;
    }
    if depth >= MAX_DEPTH {
        return;
    }
    let filled = fill_holes(pixels, w);
    let mut partitions = split_component(pixels, w);
    if filled.len() > pixels.len() {
        partitions.extend(split_component(&filled, w));
    }
    for (k, parts) in partitions.into_iter().enumerate() {
        for part in parts {
            match leaf_quad(&part, w, h, cfg) {
                Some(corners) => out.push((part, corners)),
                None if k == 0 => collect_candidates(&part, w, h, cfg, depth + 1, out),
                None => {}
            }
        }
    }
}

/// Connected dark components whose outer contours fit four straight sides.
///
/// Components joined at thin necks (tags touching gap squares or each other) are split
/// by erosion, both as thresholded and with holes filled: filling keeps noisy tag rings
/// whole, but also closes the paper between tags joined on both ends. Candidate quads
/// from every split are accepted largest first unless they overlap an accepted one.
pub fn extract_quads(bin: &BinaryImage, cfg: &DetectorConfig) -> Vec<Quad> {
    const MAX_OVERLAP: f64 = 0.1;
    let (w, h) = (bin.width, bin.height);
    let mut quads = Vec::new();
    let mut taken = vec![false; w * h];
    for pixels in components(&bin.data, w, h) {
        let mut candidates = Vec::new();
        collect_candidates(&pixels, w, h, cfg, 0, &mut candidates);
        candidates.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.iter().min().cmp(&b.0.iter().min())));
        for (part, corners) in candidates {
            let overlap = part.iter().filter(|&&i| taken[i]).count();
            if overlap as f64 > MAX_OVERLAP * part.len() as f64 {
                continue;
            }
            for &i in &part {
                taken[i] = true;
            }
            quads.push(Quad { corners, decoded_id: None, decode_hamming: 0 });
        }
    }
    quads
}

/// Moves each quad side onto the intensity edge of `img` and re-intersects the sides.
///
/// Along every side, points away from the corners are shifted along the outward normal
/// to the centroid of the dark-to-light gradient; a line through them replaces the side.
pub fn refine_edges(img: &GrayImage, corners: &[Pixel; 4]) -> Option<[Pixel; 4]> {
    const STEP: f64 = 0.25;
    let centroid = corners.iter().fold(Pixel::zeros(), |a, c| a + c) / 4.0;
    let mut lines = Vec::with_capacity(4);
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        let len = (b - a).norm();
        if len < 4.0 {
            return None;
        }
        let dir = (b - a) / len;
        let mut normal = Vector2::new(-dir.y, dir.x);
        if normal.dot(&((a + b) * 0.5 - centroid)) < 0.0 {
            normal = -normal;
        }
        let range = (len / 10.0).clamp(1.0, 3.0);
        let samples = ((len * 0.7) as usize).clamp(4, 64);
        let mut points = Vec::with_capacity(samples);
        for i in 0..samples {
            let t = 0.15 + 0.7 * (i as f64 + 0.5) / samples as f64;
            let p = a + (b - a) * t;
            let (mut wsum, mut nsum) = (0.0, 0.0);
            let mut n = -range;
            while n <= range {
                let outer = p + normal * (n + STEP);
                let inner = p + normal * (n - STEP);
                if let (Some(o), Some(i)) = (img.sample(outer.x, outer.y), img.sample(inner.x, inner.y)) {
                    let g = o - i;
                    if g > 0.0 {
                        wsum += g;
                        nsum += g * n;
                    }
                }
                n += STEP;
            }
            if wsum > 1e-6 {
                points.push(p + normal * (nsum / wsum));
            }
        }
        lines.push(fit_line(&points)?);
    }
    let mut out = [Pixel::zeros(); 4];
    for k in 0..4 {
        let c = intersect(&lines[(k + 3) % 4], &lines[k])?;
        if (c - corners[k]).norm() > 3.0 {
            return None;
        }
        out[k] = c;
    }
    Some(out)
}

/// Canonical tag coordinates: `(a, b)` in units of the tag side, origin at tag corner 0,
/// `b` growing toward the top row.
const CANONICAL: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];

fn cell_mean(img: &GrayImage, h: &Matrix3<f64>, row: isize, col: isize, grid: f64) -> Option<f64> {
    let mut acc = 0.0;
    for dy in [-0.25, 0.0, 0.25] {
        for dx in [-0.25, 0.0, 0.25] {
            let a = (col as f64 + 0.5 + dx) / grid;
            let b = 1.0 - (row as f64 + 0.5 + dy) / grid;
            let p = h * nalgebra::Vector3::new(a, b, 1.0);
            if p.z.abs() < 1e-12 {
                return None;
            }
            acc += img.sample(p.x / p.z, p.y / p.z)?;
        }
    }
    Some(acc / 9.0)
}

/// Reads the payload of a quad, trying all four corner assignments.
pub fn decode_quad(img: &GrayImage, quad: &Quad, board: &BoardSpec, cfg: &DetectorConfig) -> Result<Quad> {
    let bits = board.family_bits;
    let m = board.border_bits as isize;
    let n = board.tag_cells() as isize;
    let grid = n as f64;
    let canon: Vec<Vector2<f64>> = CANONICAL.iter().map(|&(a, b)| Vector2::new(a, b)).collect();
    let mut best: Option<(u32, u32, usize)> = None;
    for rot in 0..4 {
        let dst: Vec<Vector2<f64>> = (0..4).map(|k| quad.corners[(k + rot) % 4]).collect();
        let Ok(h) = homography_dlt(&canon, &dst) else { continue };
        let mut border = Vec::with_capacity((n * n) as usize - bits * bits);
        let mut outer = Vec::with_capacity(4 * bits);
        let mut ok = true;
        for r in 0..n {
            for c in 0..n {
                if (m..n - m).contains(&r) && (m..n - m).contains(&c) {
                    continue;
                }
                match cell_mean(img, &h, r, c, grid) {
                    Some(v) => border.push(v),
                    None => ok = false,
                }
            }
        }
        for k in 1..n - 1 {
            for (r, c) in [(-1, k), (n, k), (k, -1), (k, n)] {
                if let Some(v) = cell_mean(img, &h, r, c, grid) {
                    outer.push(v);
                }
            }
        }
        if !ok || outer.len() < bits {
            continue;
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (dark, light) = (mean(&border), mean(&outer));
        if light - dark < cfg.min_contrast {
            continue;
        }
        let threshold = 0.5 * (dark + light);
        let dark_border = border.iter().filter(|&&v| v < threshold).count();
        if dark_border + 2 < border.len() {
            continue;
        }
        let mut code = 0u64;
        for i in 0..bits {
            for j in 0..bits {
                let Some(v) = cell_mean(img, &h, i as isize + m, j as isize + m, grid) else {
                    ok = false;
                    break;
                };
                if v > threshold {
                    code |= 1 << (i * bits + j);
                }
            }
        }
        if !ok {
            continue;
        }
        for (id, &word) in TAG36H11.iter().enumerate() {
            let hd = (word ^ code).count_ones();
            if best.is_none_or(|(_, bh, _)| hd < bh) {
                best = Some((id as u32, hd, rot));
            }
        }
    }
    match best {
        Some((id, hd, rot)) if hd <= cfg.max_hamming => {
            let corners = std::array::from_fn(|m| quad.corners[(m + rot) % 4]);
            Ok(Quad { corners, decoded_id: Some(id), decode_hamming: hd })
        }
        _ => Err(Error::DecodeFail),
    }
}

/// All quads of a frame (decoded where possible) and the detections of decoded board tags.
pub fn detect_frame(img: &GrayImage, board: &BoardSpec, cfg: &DetectorConfig, frame: usize) -> Result<(Vec<Quad>, Vec<Detection>)> {
    cfg.validate()?;
    let smooth = img.gaussian_blur(cfg.blur_sigma);
    let bin = adaptive_threshold(&smooth, cfg.window, cfg.offset)?;
    let mut quads = extract_quads(&bin, cfg);
    for q in quads.iter_mut() {
        if let Some(c) = refine_edges(&smooth, &q.corners) {
            q.corners = c;
        }
    }
    // Best decode per tag id: lowest Hamming distance, then largest area.
    let mut chosen: std::collections::BTreeMap<u32, (u32, f64, usize)> = Default::default();
    for (qi, q) in quads.iter_mut().enumerate() {
        if let Ok(decoded) = decode_quad(img, q, board, cfg) {
            *q = decoded;
            let id = q.decoded_id.unwrap();
            if board.slot_of(id).is_err() {
                continue;
            }
            let area = shoelace(&q.corners).abs();
            let better = chosen.get(&id).is_none_or(|&(hd, a, _)| (q.decode_hamming, -area) < (hd, -a));
            if better {
                chosen.insert(id, (q.decode_hamming, area, qi));
            }
        }
    }
    let (w, h) = (img.width() as f64, img.height() as f64);
    let mut detections = Vec::new();
    for (&id, &(_, _, qi)) in &chosen {
        for (corner, px) in quads[qi].corners.iter().enumerate() {
            if px.x > 0.0 && px.y > 0.0 && px.x < w - 1.0 && px.y < h - 1.0 {
                let point = board.index_of(id, corner)?;
                detections.push(Detection { frame, point, pixel: *px, provenance: Provenance::Direct, refined: false });
            }
        }
    }
    detections.sort_by_key(|d| board.flat_index(d.point));
    Ok((quads, detections))
}

/// Detections of one frame.
pub fn detect(img: &GrayImage, board: &BoardSpec, cfg: &DetectorConfig, frame: usize) -> Result<Vec<Detection>> {
    detect_frame(img, board, cfg, frame).map(|(_, d)| d)
}
