//! Grayscale images with intensities in `[0, 1]`.
//!
//! Pixel `(x, y)` has its center at integer coordinates; subpixel reads use bilinear
//! interpolation between centers.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::config(format!(
                "image buffer has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::config("image intensities must lie in [0, 1]"));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v.clamp(0.0, 1.0);
    }

    /// `true` when bilinear reads at `(u, v)` stay inside the pixel grid.
    #[inline]
    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u <= (self.width - 1) as f64 && v <= (self.height - 1) as f64
    }

    /// Bilinear intensity, `None` outside the grid.
    #[inline]
    pub fn sample(&self, u: f64, v: f64) -> Option<f64> {
        if !self.contains(u, v) {
            return None;
        }
        let x0 = (u.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (v.floor() as usize).min(self.height.saturating_sub(2));
        let (fx, fy) = (u - x0 as f64, v - y0 as f64);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let i00 = self.get(x0, y0) as f64;
        let i10 = self.get(x1, y0) as f64;
        let i01 = self.get(x0, y1) as f64;
        let i11 = self.get(x1, y1) as f64;
        Some((i00 * (1.0 - fx) + i10 * fx) * (1.0 - fy) + (i01 * (1.0 - fx) + i11 * fx) * fy)
    }

    /// Intensity gradient by central differences of the bilinear interpolant with a
    /// half-pixel step. `None` if any read leaves the grid.
    pub fn gradient(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        const H: f64 = 0.5;
        let gx = (self.sample(u + H, v)? - self.sample(u - H, v)?) / (2.0 * H);
        let gy = (self.sample(u, v + H)? - self.sample(u, v - H)?) / (2.0 * H);
        Some((gx, gy))
    }

    /// Separable Gaussian blur with edge clamping. `sigma <= 0` returns a copy.
    pub fn gaussian_blur(&self, sigma: f64) -> GrayImage {
        if sigma <= 0.0 {
            return self.clone();
        }
        let radius = (3.0 * sigma).ceil() as isize;
        let kernel: Vec<f32> = {
            let k: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
            let sum: f64 = k.iter().sum();
            k.iter().map(|v| (v / sum) as f32).collect()
        };
        let (w, h) = (self.width as isize, self.height as isize);
        let mut tmp = vec![0f32; self.data.len()];
        for y in 0..h {
            let row = &self.data[(y * w) as usize..((y + 1) * w) as usize];
            for x in 0..w {
                let mut acc = 0f32;
                for (k, kv) in kernel.iter().enumerate() {
                    let xx = (x + k as isize - radius).clamp(0, w - 1);
                    acc += kv * row[xx as usize];
                }
                tmp[(y * w + x) as usize] = acc;
            }
        }
        let mut out = vec![0f32; self.data.len()];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0f32;
                for (k, kv) in kernel.iter().enumerate() {
                    let yy = (y + k as isize - radius).clamp(0, h - 1);
                    acc += kv * tmp[(yy * w + x) as usize];
                }
                out[(y * w + x) as usize] = acc.clamp(0.0, 1.0);
            }
        }
        GrayImage { width: self.width, height: self.height, data: out }
    }

    /// Quantizes to 8 bits.
    pub fn to_luma8(&self) -> image::GrayImage {
        let buf = self.data.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect();
        image::GrayImage::from_raw(self.width as u32, self.height as u32, buf).expect("buffer size matches")
    }

    pub fn from_luma8(img: &image::GrayImage) -> Self {
        let data = img.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
        Self { width: img.width() as usize, height: img.height() as usize, data }
    }

    /// Loads any grayscale-convertible PGM or PNG file.
    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path)?.to_luma8();
        Ok(Self::from_luma8(&img))
    }

    /// Writes an 8-bit file; the format follows the extension (`.pgm`, `.png`).
    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_luma8().save(path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_is_exact_on_ramps() {
        let img = GrayImage::from_fn(10, 8, |x, y| 0.05 * x as f32 + 0.02 * y as f32);
        let v = img.sample(3.25, 4.5).unwrap();
        assert!((v - (0.05 * 3.25 + 0.02 * 4.5)).abs() < 1e-6);
        let (gx, gy) = img.gradient(3.25, 4.5).unwrap();
        assert!((gx - 0.05).abs() < 1e-6 && (gy - 0.02).abs() < 1e-6);
        assert!(img.sample(9.0, 7.0).is_some());
        assert!(img.sample(9.01, 7.0).is_none());
        assert!(img.sample(-0.01, 1.0).is_none());
    }

    #[test]
    fn blur_preserves_constant_and_mass() {
        let img = GrayImage::filled(12, 9, 0.4);
        let b = img.gaussian_blur(1.3);
        assert!(b.data().iter().all(|v| (v - 0.4).abs() < 1e-6));
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(GrayImage::from_vec(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::from_vec(1, 1, vec![1.5]).is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let img = GrayImage::from_fn(5, 4, |x, y| ((x + y) as f32) / 10.0);
        img.save(&p).unwrap();
        let back = GrayImage::load(&p).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-6);
        }
    }
}
