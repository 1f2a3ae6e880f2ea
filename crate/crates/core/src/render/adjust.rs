//! Develop adjustments.
//!
//! These are fixed, documented approximations of common develop controls;
//! they do not attempt to reproduce any vendor's proprietary processing.
//! Buffers hold linear light. Tonal controls measure position on the
//! display-referred (sRGB-encoded) luminance axis.
//!
//! | adjustment | effect |
//! |---|---|
//! | exposure `E` | linear RGB × 2^E |
//! | contrast `c` | encoded value remapped about 0.5 with slope `1 + c/100` |
//! | highlights / shadows / whites / blacks / parametric regions `v` | gain 2^(w·v/100), `w` the band weight of the pixel's encoded luminance |
//! | temperature `t` | R × 2^(t/200), B × 2^(−t/200) |
//! | tint `t` | G × 2^(−t/200), R and B × 2^(t/400) |
//! | white balance preset | fixed temperature/tint offset, or grey-world gains for `Auto` |
//! | saturation `s` | chroma about luminance scaled by `1 + s/100` |
//! | vibrance `v` | as saturation, scaled by `1 − S_hsv` of the pixel |
//! | tone curve | monotone cubic on encoded values of the selected channel(s) |
//! | HSL hue / saturation / luminance per band | HSV edits weighted by hue-band membership |
//! | vignette `a` | gain 2^(2·a/100·r²), `r` the normalized distance from centre |

use crate::color::{luminance, srgb_decode, srgb_encode};
use crate::roc::{Adjustment, CurveChannel, HueBand, ParamValue, ToneRegion};

use super::curve::ToneCurve;
use super::image::ImageBuffer;

/// True when applying `value` would leave every pixel unchanged.
pub(crate) fn is_neutral(adj: Adjustment, value: &ParamValue) -> bool {
    match (adj, value) {
        (_, ParamValue::Scalar(v)) => *v == 0.0,
        (Adjustment::WhiteBalance, ParamValue::Enum(v)) => v == "As Shot",
        (_, ParamValue::Curve(points)) => ToneCurve::is_identity(points),
        _ => false,
    }
}

fn tri(x: f64, center: f64, half_width: f64) -> f64 {
    (1.0 - (x - center).abs() / half_width).max(0.0)
}

fn band_weight(adj: Adjustment, y: f64) -> f64 {
    match adj {
        Adjustment::Blacks => (1.0 - y / 0.25).max(0.0).powi(2),
        Adjustment::Shadows => tri(y, 0.25, 0.25),
        Adjustment::Highlights => tri(y, 0.75, 0.25),
        Adjustment::Whites => ((y - 0.75) / 0.25).max(0.0).powi(2),
        Adjustment::Parametric(region) => {
            let center = match region {
                ToneRegion::Shadows => 0.125,
                ToneRegion::Darks => 0.375,
                ToneRegion::Lights => 0.625,
                ToneRegion::Highlights => 0.875,
            };
            tri(y, center, 0.25)
        }
        _ => 0.0,
    }
}

fn scale_chroma(rgb: [f64; 3], k: f64) -> [f64; 3] {
    let y = luminance(rgb);
    rgb.map(|c| y + (c - y) * k)
}

fn rgb_to_hsv(rgb: [f64; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta <= 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max <= 0.0 { 0.0 } else { delta / max };
    (h, s, max)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = h.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - (h.rem_euclid(2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r + m, g + m, b + m]
}

/// Membership of `hue` in `band`; the eight bands form a partition of unity
/// with linear transitions between neighbouring centres.
pub(crate) fn hue_band_weight(band: HueBand, hue: f64) -> f64 {
    let bands = HueBand::ALL;
    let h = hue.rem_euclid(360.0);
    for (i, lo) in bands.iter().enumerate() {
        let hi = bands[(i + 1) % bands.len()];
        let start = lo.center();
        let end = if hi.center() <= start { hi.center() + 360.0 } else { hi.center() };
        if h >= start && h < end {
            let t = (h - start) / (end - start);
            return if *lo == band {
                1.0 - t
            } else if hi == band {
                t
            } else {
                0.0
            };
        }
    }
    0.0
}

fn white_balance_offsets(preset: &str) -> Option<(f64, f64)> {
    Some(match preset {
        "Daylight" => (5.0, 0.0),
        "Cloudy" => (15.0, 0.0),
        "Shade" => (30.0, 0.0),
        "Tungsten" => (-60.0, 0.0),
        "Fluorescent" => (-35.0, 20.0),
        "Flash" => (10.0, 0.0),
        _ => return None,
    })
}

fn temperature_gains(t: f64) -> [f64; 3] {
    [(t / 200.0).exp2(), 1.0, (-t / 200.0).exp2()]
}

fn tint_gains(t: f64) -> [f64; 3] {
    let rb = (t / 400.0).exp2();
    [rb, (-t / 200.0).exp2(), rb]
}

fn apply_gains(img: &mut ImageBuffer, gains: [f64; 3]) {
    img.map_pixels(|_, _, rgb| [rgb[0] * gains[0], rgb[1] * gains[1], rgb[2] * gains[2]]);
}

/// Applies one adjustment in place. Callers skip neutral values.
pub(crate) fn apply(img: &mut ImageBuffer, adj: Adjustment, value: &ParamValue) {
    match (adj, value) {
        (Adjustment::Exposure, ParamValue::Scalar(e)) => {
            let gain = e.exp2();
            img.map_pixels(|_, _, rgb| rgb.map(|c| c * gain));
        }
        (Adjustment::Contrast, ParamValue::Scalar(c)) => {
            let k = 1.0 + c / 100.0;
            img.map_pixels(|_, _, rgb| {
                rgb.map(|v| srgb_decode((0.5 + (srgb_encode(v) - 0.5) * k).clamp(0.0, 1.0)))
            });
        }
        (
            Adjustment::Highlights
            | Adjustment::Shadows
            | Adjustment::Whites
            | Adjustment::Blacks
            | Adjustment::Parametric(_),
            ParamValue::Scalar(v),
        ) => {
            img.map_pixels(|_, _, rgb| {
                let y = srgb_encode(luminance(rgb).clamp(0.0, 1.0));
                let gain = (band_weight(adj, y) * v / 100.0).exp2();
                rgb.map(|c| c * gain)
            });
        }
        (Adjustment::Temperature, ParamValue::Scalar(t)) => apply_gains(img, temperature_gains(*t)),
        (Adjustment::Tint, ParamValue::Scalar(t)) => apply_gains(img, tint_gains(*t)),
        (Adjustment::WhiteBalance, ParamValue::Enum(preset)) => {
            if preset == "Auto" {
                let n = img.pixel_count() as f64;
                let mut sums = [0.0f64; 3];
                for px in img.pixels() {
                    for c in 0..3 {
                        sums[c] += f64::from(px[c]);
                    }
                }
                let means = sums.map(|s| s / n);
                let grey = luminance(means);
                let gains = means.map(|m| if m > 0.0 { (grey / m).clamp(0.25, 4.0) } else { 1.0 });
                apply_gains(img, gains);
            } else if let Some((t, tint)) = white_balance_offsets(preset) {
                let tg = temperature_gains(t);
                let ng = tint_gains(tint);
                apply_gains(img, [tg[0] * ng[0], tg[1] * ng[1], tg[2] * ng[2]]);
            }
        }
        (Adjustment::Saturation, ParamValue::Scalar(s)) => {
            let k = 1.0 + s / 100.0;
            img.map_pixels(|_, _, rgb| scale_chroma(rgb, k));
        }
        (Adjustment::Vibrance, ParamValue::Scalar(v)) => {
            img.map_pixels(|_, _, rgb| {
                let (_, sat, _) = rgb_to_hsv(rgb);
                scale_chroma(rgb, 1.0 + (v / 100.0) * (1.0 - sat))
            });
        }
        (Adjustment::ToneCurve(channel), ParamValue::Curve(points)) => {
            let curve = ToneCurve::new(points);
            let map = |v: f64| srgb_decode(curve.eval(srgb_encode(v.clamp(0.0, 1.0))).clamp(0.0, 1.0));
            img.map_pixels(|_, _, [r, g, b]| match channel {
                CurveChannel::Rgb => [map(r), map(g), map(b)],
                CurveChannel::Red => [map(r), g, b],
                CurveChannel::Green => [r, map(g), b],
                CurveChannel::Blue => [r, g, map(b)],
            });
        }
        (Adjustment::Hue(band), ParamValue::Scalar(v)) => {
            img.map_pixels(|_, _, rgb| {
                let enc = rgb.map(|c| srgb_encode(c.clamp(0.0, 1.0)));
                let (h, s, val) = rgb_to_hsv(enc);
                let shift = hue_band_weight(band, h) * s * v / 100.0 * 30.0;
                hsv_to_rgb(h + shift, s, val).map(srgb_decode)
            });
        }
        (Adjustment::BandSaturation(band), ParamValue::Scalar(v)) => {
            img.map_pixels(|_, _, rgb| {
                let enc = rgb.map(|c| srgb_encode(c.clamp(0.0, 1.0)));
                let (h, s, val) = rgb_to_hsv(enc);
                let s2 = (s * (1.0 + hue_band_weight(band, h) * v / 100.0)).clamp(0.0, 1.0);
                hsv_to_rgb(h, s2, val).map(srgb_decode)
            });
        }
        (Adjustment::BandLuminance(band), ParamValue::Scalar(v)) => {
            img.map_pixels(|_, _, rgb| {
                let enc = rgb.map(|c| srgb_encode(c.clamp(0.0, 1.0)));
                let (h, s, _) = rgb_to_hsv(enc);
                let gain = (hue_band_weight(band, h) * s * v / 200.0).exp2();
                rgb.map(|c| c * gain)
            });
        }
        (Adjustment::Vignette, ParamValue::Scalar(a)) => {
            let (w, h) = img.dims();
            img.map_pixels(|x, y, rgb| {
                let (nx, ny) = (super::mask::norm_coord(x, w), super::mask::norm_coord(y, h));
                let r2 = ((nx - 0.5).powi(2) + (ny - 0.5).powi(2)) / 0.5;
                let gain = (2.0 * a / 100.0 * r2).exp2();
                rgb.map(|c| c * gain)
            });
        }
        // Kind mismatches are rejected by catalog and document validation.
        _ => {}
    }
}
