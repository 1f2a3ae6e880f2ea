//! PNG codec for image buffers, region masks and segmentation side-files.
//!
//! Colour PNGs are interpreted as sRGB-encoded and converted to linear light
//! on read; writing performs the inverse and rounds to the nearest code.
//! Masks and segmentation rasters are single-channel data images and are not
//! gamma-decoded.

use std::io::Cursor;
use std::sync::OnceLock;

use crate::color::{srgb_decode, srgb_encode};

use super::image::{BitDepth, ImageBuffer, MaskBuffer, Segmentation};
use super::RenderError;

fn png_err(e: impl std::fmt::Display) -> RenderError {
    RenderError::Png(e.to_string())
}

pub(crate) fn decode_table(depth: BitDepth) -> &'static [f32] {
    static EIGHT: OnceLock<Vec<f32>> = OnceLock::new();
    static SIXTEEN: OnceLock<Vec<f32>> = OnceLock::new();
    let build = |max: u32| -> Vec<f32> {
        (0..=max)
            .map(|code| srgb_decode(f64::from(code) / f64::from(max)) as f32)
            .collect()
    };
    match depth {
        BitDepth::Eight => EIGHT.get_or_init(|| build(255)),
        BitDepth::Sixteen => SIXTEEN.get_or_init(|| build(65_535)),
    }
}

#[inline]
pub(crate) fn encode_sample(v: f32, depth: BitDepth) -> u32 {
    let max = depth.max_code();
    let code = (srgb_encode(f64::from(v).clamp(0.0, 1.0)) * f64::from(max)).round();
    (code as u32).min(max)
}

struct Decoded {
    width: usize,
    height: usize,
    channels: usize,
    depth: BitDepth,
    samples: Vec<u32>,
}

fn decode(bytes: &[u8]) -> Result<Decoded, RenderError> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(png_err)?;
    let (color, depth) = reader.output_color_type();
    let channels = match color {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(RenderError::Png("unexpanded palette image".into())),
    };
    let data = &buf[..frame.buffer_size()];
    let (depth, samples) = match depth {
        png::BitDepth::Eight => (BitDepth::Eight, data.iter().map(|&b| u32::from(b)).collect()),
        png::BitDepth::Sixteen => (
            BitDepth::Sixteen,
            data.chunks_exact(2)
                .map(|c| u32::from(u16::from_be_bytes([c[0], c[1]])))
                .collect(),
        ),
        other => return Err(RenderError::Png(format!("unsupported bit depth {other:?}"))),
    };
    Ok(Decoded {
        width: frame.width as usize,
        height: frame.height as usize,
        channels,
        depth,
        samples,
    })
}

/// Width and height from the PNG header, without decoding pixel data.
pub fn png_dimensions(bytes: &[u8]) -> Result<(usize, usize), RenderError> {
    let reader = png::Decoder::new(Cursor::new(bytes)).read_info().map_err(png_err)?;
    let info = reader.info();
    Ok((info.width as usize, info.height as usize))
}

/// Decodes a PNG into a linear-light buffer, returning the stored bit depth.
/// Alpha is discarded; greyscale is replicated to RGB.
pub fn read_png(bytes: &[u8]) -> Result<(ImageBuffer, BitDepth), RenderError> {
    let d = decode(bytes)?;
    let table = decode_table(d.depth);
    let mut data = Vec::with_capacity(d.width * d.height * 3);
    for px in d.samples.chunks_exact(d.channels) {
        match d.channels {
            1 | 2 => {
                let v = table[px[0] as usize];
                data.extend([v, v, v]);
            }
            _ => data.extend(px[..3].iter().map(|&c| table[c as usize])),
        }
    }
    Ok((ImageBuffer::new(d.width, d.height, data)?, d.depth))
}

/// Encodes a buffer as an RGB PNG. Output is deterministic for a given input.
pub fn write_png(img: &ImageBuffer, depth: BitDepth) -> Result<Vec<u8>, RenderError> {
    let mut raw = Vec::with_capacity(img.data().len() * if depth == BitDepth::Eight { 1 } else { 2 });
    for &v in img.data() {
        let code = encode_sample(v, depth);
        match depth {
            BitDepth::Eight => raw.push(code as u8),
            BitDepth::Sixteen => raw.extend((code as u16).to_be_bytes()),
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(match depth {
            BitDepth::Eight => png::BitDepth::Eight,
            BitDepth::Sixteen => png::BitDepth::Sixteen,
        });
        enc.set_compression(png::Compression::Default);
        enc.set_filter(png::FilterType::Sub);
        enc.set_adaptive_filter(png::AdaptiveFilterType::NonAdaptive);
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(&raw).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok(out)
}

fn single_channel(d: &Decoded, what: &str) -> Result<Vec<u32>, RenderError> {
    match d.channels {
        1 => Ok(d.samples.clone()),
        2 => Ok(d.samples.chunks_exact(2).map(|c| c[0]).collect()),
        n => Err(RenderError::Png(format!("{what} must be a single-channel PNG, found {n} channels"))),
    }
}

/// Reads a greyscale PNG as mask weights `code / max`.
pub fn read_mask_png(bytes: &[u8]) -> Result<MaskBuffer, RenderError> {
    let d = decode(bytes)?;
    let max = d.depth.max_code() as f32;
    let weights = single_channel(&d, "region mask")?
        .into_iter()
        .map(|c| c as f32 / max)
        .collect();
    MaskBuffer::new(d.width, d.height, weights)
}

/// Reads a greyscale PNG whose codes are portrait category IDs.
pub fn read_segmentation_png(bytes: &[u8]) -> Result<Segmentation, RenderError> {
    let d = decode(bytes)?;
    let labels = single_channel(&d, "segmentation")?
        .into_iter()
        .map(|c| c as u16)
        .collect();
    Segmentation::new(d.width, d.height, labels)
}

/// Encodes single-channel 8-bit data (masks, segmentation), mainly for fixtures.
pub fn write_gray_png(width: usize, height: usize, codes: &[u8]) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(codes).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok(out)
}
