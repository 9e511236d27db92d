//! Image planes, pair loading, BT.601 color conversion, resizing and patch
//! extraction.
//!
//! Everything downstream works on [`LumaPlane`]s: 8-bit luminance in
//! row-major order. Real-valued intermediate images use [`Plane`].

use std::path::Path;

use image::{imageops::FilterType, DynamicImage, GrayImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fsutil;

/// Neutral chroma value assigned to grayscale inputs.
pub const NEUTRAL_CHROMA: u8 = 128;

/// Row-major 8-bit luminance samples.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LumaPlane {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl LumaPlane {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height {
            return Err(Error::InvalidConfig(format!(
                "plane data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// A plane with every sample set to `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// The same samples scaled to `[0, 1]`.
    pub fn normalized(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f64::from(v) / 255.0).collect(),
        }
    }

    /// The samples as reals on the `[0, 255]` scale.
    pub fn to_plane(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f64::from(v)).collect(),
        }
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> LumaPlane {
        debug_assert!(x0 + w <= self.width && y0 + h <= self.height);
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            data.extend_from_slice(&self.data[row + x0..row + x0 + w]);
        }
        LumaPlane {
            width: w,
            height: h,
            data,
        }
    }

    pub fn flip_horizontal(&self) -> LumaPlane {
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(self.width) {
            row.reverse();
        }
        LumaPlane { data, ..*self }
    }

    pub fn flip_vertical(&self) -> LumaPlane {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.data.chunks_exact(self.width).rev() {
            data.extend_from_slice(row);
        }
        LumaPlane { data, ..*self }
    }

    fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("plane length matches dimensions")
    }

    fn from_gray_image(img: GrayImage) -> LumaPlane {
        let (w, h) = img.dimensions();
        LumaPlane {
            width: w as usize,
            height: h as usize,
            data: img.into_raw(),
        }
    }

    /// Encodes the plane as an 8-bit grayscale PNG.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut buf = std::io::Cursor::new(Vec::new());
        self.to_gray_image()
            .write_to(&mut buf, image::ImageFormat::Png)
            .map_err(|source| Error::Encode {
                path: "<memory>".into(),
                source,
            })?;
        Ok(buf.into_inner())
    }

    /// Writes the plane as PNG via a temporary file and rename.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes = self.encode_png().map_err(|e| match e {
            Error::Encode { source, .. } => Error::Encode {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })?;
        fsutil::write_atomic(path, &bytes)
    }

    /// Loads any supported raster as luminance (RGB goes through BT.601).
    pub fn load(path: &Path) -> Result<LumaPlane> {
        Ok(SourceImage::load(path)?.luma)
    }
}

/// Row-major real-valued samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane length mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![0.0; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with coordinates clamped to the plane (replicate border).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        assert_eq!(self.dims(), other.dims(), "plane dimension mismatch");
        Plane::new(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Rounds `[0, 255]` reals to 8-bit, clamping out-of-range samples.
    pub fn to_luma_rounded(&self) -> LumaPlane {
        LumaPlane {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|&v| v.round().clamp(0.0, 255.0) as u8)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChromaPlanes {
    pub cb: LumaPlane,
    pub cr: LumaPlane,
}

impl ChromaPlanes {
    pub fn neutral(width: usize, height: usize) -> Self {
        Self {
            cb: LumaPlane::filled(width, height, NEUTRAL_CHROMA),
            cr: LumaPlane::filled(width, height, NEUTRAL_CHROMA),
        }
    }

    fn map(&self, f: impl Fn(&LumaPlane) -> LumaPlane) -> Self {
        Self {
            cb: f(&self.cb),
            cr: f(&self.cr),
        }
    }
}

/// One modality of a pair: luminance plus optional chroma.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceImage {
    pub luma: LumaPlane,
    pub chroma: Option<ChromaPlanes>,
}

impl SourceImage {
    pub fn gray(luma: LumaPlane) -> Self {
        Self { luma, chroma: None }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.luma.dims()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| Error::Decode {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_dynamic(&img))
    }

    pub fn from_dynamic(img: &DynamicImage) -> Self {
        if img.color().has_color() {
            let rgb = img.to_rgb8();
            let (w, h) = (rgb.width() as usize, rgb.height() as usize);
            let n = w * h;
            let (mut y, mut cb, mut cr) = (
                Vec::with_capacity(n),
                Vec::with_capacity(n),
                Vec::with_capacity(n),
            );
            for p in rgb.pixels() {
                let [yy, b, r] = rgb_to_ycbcr(p.0);
                y.push(yy);
                cb.push(b);
                cr.push(r);
            }
            Self {
                luma: LumaPlane {
                    width: w,
                    height: h,
                    data: y,
                },
                chroma: Some(ChromaPlanes {
                    cb: LumaPlane {
                        width: w,
                        height: h,
                        data: cb,
                    },
                    cr: LumaPlane {
                        width: w,
                        height: h,
                        data: cr,
                    },
                }),
            }
        } else {
            let luma = LumaPlane::from_gray_image(img.to_luma8());
            let (w, h) = luma.dims();
            Self {
                luma,
                chroma: Some(ChromaPlanes::neutral(w, h)),
            }
        }
    }

    fn map(&self, f: impl Fn(&LumaPlane) -> LumaPlane) -> Self {
        Self {
            luma: f(&self.luma),
            chroma: self.chroma.as_ref().map(|c| c.map(&f)),
        }
    }
}

/// Two co-registered source images.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImagePair {
    pub id: String,
    pub a: SourceImage,
    pub b: SourceImage,
}

impl ImagePair {
    pub fn new(id: impl Into<String>, a: SourceImage, b: SourceImage) -> Result<Self> {
        let (aw, ah) = a.dims();
        let (bw, bh) = b.dims();
        if (aw, ah) != (bw, bh) {
            return Err(Error::DimensionMismatch {
                left_w: aw,
                left_h: ah,
                right_w: bw,
                right_h: bh,
            });
        }
        Ok(Self {
            id: id.into(),
            a,
            b,
        })
    }

    /// Pair of bare luminance planes.
    pub fn from_luma(id: impl Into<String>, a: LumaPlane, b: LumaPlane) -> Result<Self> {
        Self::new(id, SourceImage::gray(a), SourceImage::gray(b))
    }

    pub fn width(&self) -> usize {
        self.a.luma.width()
    }

    pub fn height(&self) -> usize {
        self.a.luma.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.a.dims()
    }

    fn map(&self, id: String, f: impl Fn(&LumaPlane) -> LumaPlane) -> Self {
        Self {
            id,
            a: self.a.map(&f),
            b: self.b.map(&f),
        }
    }
}

/// Full-range BT.601 RGB to YCbCr with rounding.
pub fn rgb_to_ycbcr([r, g, b]: [u8; 3]) -> [u8; 3] {
    let (r, g, b) = (f64::from(r), f64::from(g), f64::from(b));
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    [quantize(y), quantize(cb), quantize(cr)]
}

/// Inverse of [`rgb_to_ycbcr`], clamped to the 8-bit range.
pub fn ycbcr_to_rgb([y, cb, cr]: [u8; 3]) -> [u8; 3] {
    let (y, cb, cr) = (f64::from(y), f64::from(cb) - 128.0, f64::from(cr) - 128.0);
    let r = y + 1.402 * cr;
    let g = y - 0.344_136 * cb - 0.714_136 * cr;
    let b = y + 1.772 * cb;
    [quantize(r), quantize(g), quantize(b)]
}

#[inline]
fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Loads a co-registered pair; the id is the file stem of `path_a`.
pub fn load_pair(path_a: &Path, path_b: &Path) -> Result<ImagePair> {
    let a = SourceImage::load(path_a)?;
    let b = SourceImage::load(path_b)?;
    let id = path_a
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pair".to_owned());
    ImagePair::new(id, a, b)
}

/// Bilinearly resamples pairs larger than the cap to exactly `cap_w x cap_h`.
pub fn resize_to_cap(img: &ImagePair, cap_w: usize, cap_h: usize) -> ImagePair {
    assert!(cap_w > 0 && cap_h > 0, "resize cap must be positive");
    let (w, h) = img.dims();
    if w <= cap_w && h <= cap_h {
        return img.clone();
    }
    img.map(img.id.clone(), |p| {
        LumaPlane::from_gray_image(image::imageops::resize(
            &p.to_gray_image(),
            cap_w as u32,
            cap_h as u32,
            FilterType::Triangle,
        ))
    })
}

/// A cropped window of a pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    pub pair: ImagePair,
    pub origin_x: usize,
    pub origin_y: usize,
    pub flip_h: bool,
    pub flip_v: bool,
}

pub fn patch_id(pair_id: &str, origin_x: usize, origin_y: usize) -> String {
    format!("{pair_id}_x{origin_x}_y{origin_y}")
}

/// Number of full windows along one axis.
pub fn window_count(extent: usize, size: usize, stride: usize) -> usize {
    if size == 0 || size > extent || stride == 0 {
        0
    } else {
        (extent - size) / stride + 1
    }
}

/// Crops full `size x size` windows at `stride` spacing in raster order.
///
/// With a flip seed, each patch is independently mirrored horizontally and
/// vertically with probability one half; A and B always receive the same
/// transform.
pub fn extract_patches(
    img: &ImagePair,
    size: usize,
    stride: usize,
    flip_seed: Option<u64>,
) -> Result<Vec<Patch>> {
    let (w, h) = img.dims();
    if size == 0 || size > w || size > h {
        return Err(Error::PatchTooLarge {
            size,
            width: w,
            height: h,
        });
    }
    if stride == 0 {
        return Err(Error::InvalidConfig("stride must be at least 1".into()));
    }
    let mut rng = flip_seed.map(ChaCha8Rng::seed_from_u64);
    let (nx, ny) = (window_count(w, size, stride), window_count(h, size, stride));
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (x0, y0) = (i * stride, j * stride);
            let (flip_h, flip_v) = match rng.as_mut() {
                Some(rng) => (rng.random_bool(0.5), rng.random_bool(0.5)),
                None => (false, false),
            };
            let pair = img.map(patch_id(&img.id, x0, y0), |p| {
                let mut c = p.crop(x0, y0, size, size);
                if flip_h {
                    c = c.flip_horizontal();
                }
                if flip_v {
                    c = c.flip_vertical();
                }
                c
            });
            out.push(Patch {
                pair,
                origin_x: x0,
                origin_y: y0,
                flip_h,
                flip_v,
            });
        }
    }
    Ok(out)
}
