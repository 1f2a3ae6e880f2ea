use super::RenderError;

/// Storage bit depth of an encoded image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_code(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65_535,
        }
    }
}

/// Linear-light RGB raster; samples are finite and within `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    /// Builds a buffer from interleaved RGB samples.
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self, RenderError> {
        if width == 0 || height == 0 {
            return Err(RenderError::InvalidImage(format!("empty image {width}x{height}")));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| RenderError::InvalidImage("image size overflows".into()))?;
        if data.len() != expected {
            return Err(RenderError::InvalidImage(format!(
                "expected {expected} samples for {width}x{height}, found {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(RenderError::InvalidImage(format!("sample {i} = {} outside [0, 1]", data[i])));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        Self::from_fn(width, height, |_, _| rgb)
    }

    /// Builds a buffer by evaluating `f(x, y)`; results are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend(f(x, y).map(sanitize));
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

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [f32; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    /// Rewrites every pixel through `f(x, y, rgb)`, clamping the result.
    pub(crate) fn map_pixels(&mut self, mut f: impl FnMut(usize, usize, [f64; 3]) -> [f64; 3]) {
        let width = self.width;
        for (i, px) in self.data.chunks_exact_mut(3).enumerate() {
            let rgb = [f64::from(px[0]), f64::from(px[1]), f64::from(px[2])];
            let out = f(i % width, i / width, rgb);
            for (dst, v) in px.iter_mut().zip(out) {
                *dst = sanitize(v as f32);
            }
        }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// True when both buffers hold the same dimensions and the same sample bits.
    pub fn bit_eq(&self, other: &ImageBuffer) -> bool {
        self.dims() == other.dims()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Round-trips the buffer through integer sRGB codes at `depth`, as an
    /// export would.
    pub fn quantized(&self, depth: BitDepth) -> ImageBuffer {
        let table = super::io::decode_table(depth);
        let data = self
            .data
            .iter()
            .map(|&v| table[super::io::encode_sample(v, depth) as usize])
            .collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Clamps a sample into `[0, 1]`, mapping NaN to 0.
#[inline]
pub(crate) fn sanitize(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Per-pixel weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskBuffer {
    width: usize,
    height: usize,
    weights: Vec<f32>,
}

impl MaskBuffer {
    pub fn new(width: usize, height: usize, weights: Vec<f32>) -> Result<Self, RenderError> {
        if weights.len() != width * height {
            return Err(RenderError::InvalidImage(format!(
                "expected {} mask weights, found {}",
                width * height,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(RenderError::InvalidImage("mask weight outside [0, 1]".into()));
        }
        Ok(Self { width, height, weights })
    }

    pub fn filled(width: usize, height: usize, weight: f32) -> Self {
        Self {
            width,
            height,
            weights: vec![sanitize(weight); width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut weights = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                weights.push(sanitize(f(x, y)));
            }
        }
        Self { width, height, weights }
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

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn weight(&self, x: usize, y: usize) -> f32 {
        self.weights[y * self.width + x]
    }
}

/// Per-pixel portrait category labels supplied alongside an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    width: usize,
    height: usize,
    labels: Vec<u16>,
}

impl Segmentation {
    pub fn new(width: usize, height: usize, labels: Vec<u16>) -> Result<Self, RenderError> {
        if labels.len() != width * height {
            return Err(RenderError::InvalidImage(format!(
                "expected {} segmentation labels, found {}",
                width * height,
                labels.len()
            )));
        }
        Ok(Self { width, height, labels })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }
}
