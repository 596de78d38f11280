use super::{RenderError, Rgb32};

/// Mask value of pixels whose primary ray escapes the scene.
pub const BACKGROUND_ID: u16 = u16::MAX;
/// Mask value of pixels showing the ground plane.
pub const GROUND_ID: u16 = u16::MAX - 1;

/// Row-major linear RGB image with channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<Rgb32>,
}

impl ColorImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, pixels: vec![[0.0; 3]; width as usize * height as usize] }
    }

    pub fn filled(width: u32, height: u32, color: Rgb32) -> Self {
        Self { width, height, pixels: vec![color; width as usize * height as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb32 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// 8-bit RGB bytes, rounding to nearest.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| p.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8))
            .collect()
    }
}

/// Row-major per-pixel object ids, with [`GROUND_ID`] and [`BACKGROUND_ID`]
/// reserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdMask {
    pub width: u32,
    pub height: u32,
    pub ids: Vec<u16>,
}

impl IdMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, ids: vec![BACKGROUND_ID; width as usize * height as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.ids[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, id: u16) {
        let w = self.width as usize;
        self.ids[y as usize * w + x as usize] = id;
    }
}

fn check_divisible(width: u32, height: u32, factor: u32) -> Result<(), RenderError> {
    if factor == 0 || width % factor != 0 || height % factor != 0 {
        return Err(RenderError::IndivisibleDimensions { width, height, factor });
    }
    Ok(())
}

/// Box-filter downscale: each output pixel is the per-channel mean of its
/// `factor x factor` source block.
pub fn downscale(image: &ColorImage, factor: u32) -> Result<ColorImage, RenderError> {
    check_divisible(image.width, image.height, factor)?;
    if factor == 1 {
        return Ok(image.clone());
    }
    let (w, h) = (image.width / factor, image.height / factor);
    let f = factor as usize;
    let src_w = image.width as usize;
    let norm = 1.0 / (f * f) as f32;
    let mut pixels = Vec::with_capacity(w as usize * h as usize);
    for y in 0..h as usize {
        for x in 0..w as usize {
            let mut acc = [0.0f32; 3];
            for dy in 0..f {
                let row = (y * f + dy) * src_w + x * f;
                for p in &image.pixels[row..row + f] {
                    acc[0] += p[0];
                    acc[1] += p[1];
                    acc[2] += p[2];
                }
            }
            pixels.push(acc.map(|c| c * norm));
        }
    }
    Ok(ColorImage { width: w, height: h, pixels })
}

/// Nearest-neighbor downscale of an id mask: each output pixel takes the
/// top-left id of its source block.
pub fn downscale_ids(mask: &IdMask, factor: u32) -> Result<IdMask, RenderError> {
    check_divisible(mask.width, mask.height, factor)?;
    let (w, h) = (mask.width / factor, mask.height / factor);
    let f = factor as usize;
    let src_w = mask.width as usize;
    let ids = (0..h as usize)
        .flat_map(|y| (0..w as usize).map(move |x| mask.ids[y * f * src_w + x * f]))
        .collect();
    Ok(IdMask { width: w, height: h, ids })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_hd_halves() {
        let img = ColorImage::new(1920, 1080);
        let small = downscale(&img, 2).unwrap();
        assert_eq!((small.width, small.height), (960, 540));
        let mask = downscale_ids(&IdMask::new(1920, 1080), 2).unwrap();
        assert_eq!((mask.width, mask.height), (960, 540));
    }

    #[test]
    fn constant_image_is_preserved() {
        let img = ColorImage::filled(8, 6, [0.3, 0.6, 0.9]);
        assert_eq!(downscale(&img, 2).unwrap(), ColorImage::filled(4, 3, [0.3, 0.6, 0.9]));
    }

    #[test]
    fn block_average() {
        let v = |k: f32| [k / 255.0; 3];
        let img = ColorImage { width: 2, height: 2, pixels: vec![v(0.0), v(4.0), v(8.0), v(4.0)] };
        let out = downscale(&img, 2).unwrap();
        for c in out.pixels[0] {
            assert!((c - 4.0 / 255.0).abs() < 1e-7);
        }
    }

    #[test]
    fn indivisible_dimensions() {
        let img = ColorImage::new(5, 4);
        assert_eq!(downscale(&img, 2), Err(RenderError::IndivisibleDimensions { width: 5, height: 4, factor: 2 }));
        assert!(downscale_ids(&IdMask::new(4, 3), 2).is_err());
    }

    #[test]
    fn mask_takes_top_left_sample() {
        let mut m = IdMask::new(4, 2);
        m.set(0, 0, 7);
        m.set(1, 0, 8);
        m.set(3, 1, 9);
        let d = downscale_ids(&m, 2).unwrap();
        assert_eq!(d.ids, vec![7, BACKGROUND_ID]);
    }

    #[test]
    fn quantization_rounds() {
        let img = ColorImage { width: 1, height: 1, pixels: vec![[0.0, 0.5, 1.0]] };
        assert_eq!(img.to_rgb8(), vec![0, 128, 255]);
    }
}
