//! Axis-aligned boxes, IoU, square-padding transforms and the location quantizer.

use thiserror::Error;

/// Number of location bins; `<loc0000>` .. `<loc1023>`.
pub const NUM_LOC_BINS: u16 = 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box coordinates must be finite and ordered within [0, 1], got {0:?}")]
    InvalidBox([f64; 4]),
    #[error("image size must be at least 1x1 pixels, got {width}x{height}")]
    InvalidImageSize { width: u32, height: u32 },
    #[error("pixel box {bbox:?} lies outside the {width}x{height} frame")]
    BoxOutOfFrame { bbox: [f64; 4], width: u32, height: u32 },
}

/// Axis-aligned box in normalized `[0, 1]` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2D {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl Box2D {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !(unit(x_min) && unit(y_min) && unit(x_max) && unit(y_max))
            || x_min > x_max
            || y_min > y_max
        {
            return Err(GeometryError::InvalidBox([x_min, y_min, x_max, y_max]));
        }
        Ok(Self { x_min, y_min, x_max, y_max })
    }

    /// Builds a box from possibly unordered, possibly out-of-range corners by
    /// sorting each axis and clamping to the unit square. NaN maps to 0.
    pub fn from_corners_clamped(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        let c = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        let (x0, x1) = (c(x0), c(x1));
        let (y0, y1) = (c(y0), c(y1));
        Self { x_min: x0.min(x1), y_min: y0.min(y1), x_max: x0.max(x1), y_max: y0.max(y1) }
    }

    pub fn unit() -> Self {
        Self { x_min: 0.0, y_min: 0.0, x_max: 1.0, y_max: 1.0 }
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    /// `[x_min, y_min, x_max, y_max]`.
    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn intersection_area(&self, other: &Box2D) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }
}

/// Intersection over union. Two zero-area boxes have IoU 0.
pub fn iou(a: &Box2D, b: &Box2D) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Image dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImageSize {
    width_px: u32,
    height_px: u32,
}

impl ImageSize {
    pub fn new(width_px: u32, height_px: u32) -> Result<Self, GeometryError> {
        if width_px == 0 || height_px == 0 {
            return Err(GeometryError::InvalidImageSize { width: width_px, height: height_px });
        }
        Ok(Self { width_px, height_px })
    }

    pub fn width_px(&self) -> u32 {
        self.width_px
    }

    pub fn height_px(&self) -> u32 {
        self.height_px
    }
}

/// Box in pixel coordinates of the original (unpadded) image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl PixelBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

/// Where the original content sits inside the padded square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadAnchor {
    /// Content at the top-left; padding is added on the right and bottom.
    #[default]
    TopLeft,
    /// Content centered; padding split evenly on both sides.
    Center,
}

/// Mapping between an image's pixel frame and its padded square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PadTransform {
    original: ImageSize,
    anchor: PadAnchor,
}

impl PadTransform {
    pub fn new(original: ImageSize, anchor: PadAnchor) -> Self {
        Self { original, anchor }
    }

    pub fn original(&self) -> ImageSize {
        self.original
    }

    pub fn square_side_px(&self) -> u32 {
        self.original.width_px.max(self.original.height_px)
    }

    pub fn pad_right_px(&self) -> u32 {
        let total = self.square_side_px() - self.original.width_px;
        total - self.pad_left_px()
    }

    pub fn pad_bottom_px(&self) -> u32 {
        let total = self.square_side_px() - self.original.height_px;
        total - self.pad_top_px()
    }

    fn pad_left_px(&self) -> u32 {
        match self.anchor {
            PadAnchor::TopLeft => 0,
            PadAnchor::Center => (self.square_side_px() - self.original.width_px) / 2,
        }
    }

    fn pad_top_px(&self) -> u32 {
        match self.anchor {
            PadAnchor::TopLeft => 0,
            PadAnchor::Center => (self.square_side_px() - self.original.height_px) / 2,
        }
    }

    /// Maps a pixel box of the original image into normalized square coordinates.
    pub fn pad(&self, bbox: &PixelBox) -> Result<Box2D, GeometryError> {
        let (w, h) = (f64::from(self.original.width_px), f64::from(self.original.height_px));
        let inside = |v: f64, hi: f64| v.is_finite() && (0.0..=hi).contains(&v);
        if !(inside(bbox.x_min, w)
            && inside(bbox.x_max, w)
            && inside(bbox.y_min, h)
            && inside(bbox.y_max, h))
            || bbox.x_min > bbox.x_max
            || bbox.y_min > bbox.y_max
        {
            return Err(GeometryError::BoxOutOfFrame {
                bbox: bbox.to_array(),
                width: self.original.width_px,
                height: self.original.height_px,
            });
        }
        let side = f64::from(self.square_side_px());
        let (dx, dy) = (f64::from(self.pad_left_px()), f64::from(self.pad_top_px()));
        Box2D::new(
            (bbox.x_min + dx) / side,
            (bbox.y_min + dy) / side,
            (bbox.x_max + dx) / side,
            (bbox.y_max + dy) / side,
        )
    }

    /// Maps a normalized square box back to original pixels, clamped to the frame.
    pub fn unpad(&self, bbox: &Box2D) -> PixelBox {
        let raw = self.unpad_unclamped(bbox);
        let (w, h) = (f64::from(self.original.width_px), f64::from(self.original.height_px));
        PixelBox {
            x_min: raw.x_min.clamp(0.0, w),
            y_min: raw.y_min.clamp(0.0, h),
            x_max: raw.x_max.clamp(0.0, w),
            y_max: raw.y_max.clamp(0.0, h),
        }
    }

    /// Like [`unpad`](Self::unpad) but without clamping; coordinates may fall
    /// outside the original frame (inside the padding).
    pub fn unpad_unclamped(&self, bbox: &Box2D) -> PixelBox {
        let side = f64::from(self.square_side_px());
        let (dx, dy) = (f64::from(self.pad_left_px()), f64::from(self.pad_top_px()));
        PixelBox {
            x_min: scale_back(bbox.x_min, side) - dx,
            y_min: scale_back(bbox.y_min, side) - dy,
            x_max: scale_back(bbox.x_max, side) - dx,
            y_max: scale_back(bbox.y_max, side) - dy,
        }
    }
}

/// Inverse of `x / side`: of the values within one ulp of `v * side` that
/// divide back to exactly `v`, returns the one with the shortest mantissa.
fn scale_back(v: f64, side: f64) -> f64 {
    let guess = v * side;
    if !guess.is_finite() || guess == 0.0 {
        return guess;
    }
    let candidates = [next_down(guess), guess, next_up(guess)];
    candidates
        .into_iter()
        .filter(|c| *c / side == v)
        .min_by_key(|c| mantissa_len(*c))
        .unwrap_or(guess)
}

fn next_up(x: f64) -> f64 {
    if x >= 0.0 {
        f64::from_bits(x.to_bits() + 1)
    } else {
        f64::from_bits(x.to_bits() - 1)
    }
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

fn mantissa_len(x: f64) -> u32 {
    let mantissa = x.to_bits() & ((1u64 << 52) - 1);
    52 - mantissa.trailing_zeros().min(52)
}

/// Pads `bbox` into the square frame with top-left anchoring.
pub fn pad_to_square(bbox: &PixelBox, size: ImageSize) -> Result<Box2D, GeometryError> {
    PadTransform::new(size, PadAnchor::TopLeft).pad(bbox)
}

/// Inverse of [`pad_to_square`], clamped to the original frame.
pub fn unpad_from_square(bbox: &Box2D, size: ImageSize) -> PixelBox {
    PadTransform::new(size, PadAnchor::TopLeft).unpad(bbox)
}

/// `min(floor(v * 1024), 1023)`; inputs outside `[0, 1]` clamp, NaN maps to bin 0.
pub fn quantize_coord(v: f64) -> u16 {
    if v.is_nan() {
        return 0;
    }
    let scaled = (v.clamp(0.0, 1.0) * f64::from(NUM_LOC_BINS)).floor();
    (scaled as u16).min(NUM_LOC_BINS - 1)
}

/// Bin centre `(bin + 0.5) / 1024`. Bins above 1023 are clamped.
pub fn dequantize_coord(bin: u16) -> f64 {
    (f64::from(bin.min(NUM_LOC_BINS - 1)) + 0.5) / f64::from(NUM_LOC_BINS)
}

/// Lower edge of a bin, `bin / 1024`.
pub fn bin_lower_edge(bin: u16) -> f64 {
    f64::from(bin.min(NUM_LOC_BINS - 1)) / f64::from(NUM_LOC_BINS)
}

/// Upper edge of a bin, `(bin + 1) / 1024`.
pub fn bin_upper_edge(bin: u16) -> f64 {
    (f64::from(bin.min(NUM_LOC_BINS - 1)) + 1.0) / f64::from(NUM_LOC_BINS)
}

/// Quantizes a box's maximum edge so that [`bin_upper_edge`] inverts it exactly:
/// `ceil(v * 1024) - 1`, clamped to `[0, 1023]`.
pub fn quantize_upper_edge(v: f64) -> u16 {
    if v.is_nan() {
        return 0;
    }
    let scaled = (v.clamp(0.0, 1.0) * f64::from(NUM_LOC_BINS)).ceil();
    (scaled as i32 - 1).clamp(0, i32::from(NUM_LOC_BINS) - 1) as u16
}
