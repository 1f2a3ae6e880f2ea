//! Shared inputs for the kernel benchmarks.

use retouch_core::roc::{BBox, LinearMask, MaskSpec, ObjectMask, Point, RocDocument, ToolInvocation};
use retouch_core::ImageBuffer;

/// A smooth colour field with every channel inside `(0, 1)`.
pub fn sample_image(width: usize, height: usize) -> ImageBuffer {
    ImageBuffer::from_fn(width, height, |x, y| {
        let u = x as f32 / width as f32;
        let v = y as f32 / height as f32;
        [0.05 + 0.7 * u, 0.05 + 0.6 * v, 0.1 + 0.4 * (1.0 - u) * v]
    })
}

/// A global-plus-local edit typical of a portrait-free retouch.
pub fn sample_edit() -> RocDocument {
    RocDocument::new(vec![
        ToolInvocation::new("Exposure").with_param("value", 0.4),
        ToolInvocation::new("Contrast").with_param("value", 15.0),
        ToolInvocation::new("Highlights").with_param("value", -30.0),
        ToolInvocation::new("Shadows").with_param("value", 25.0),
        ToolInvocation::new("Vibrance").with_param("value", 20.0),
        ToolInvocation::new("LinearGradient")
            .with_param("exposure", -0.5)
            .with_mask(MaskSpec::Linear(LinearMask {
                start: Point::new(0.5, 0.0),
                end: Point::new(0.5, 0.6),
            })),
        ToolInvocation::new("ObjectMask")
            .with_param("exposure", 0.3)
            .with_mask(MaskSpec::Object(ObjectMask {
                bbox: BBox::new(0.3, 0.3, 0.7, 0.8),
            })),
    ])
}

/// `sample_edit` with every value nudged, as a near-miss prediction.
pub fn sample_prediction() -> RocDocument {
    RocDocument::new(vec![
        ToolInvocation::new("Exposure").with_param("value", 0.6),
        ToolInvocation::new("Contrast").with_param("value", 5.0),
        ToolInvocation::new("Shadows").with_param("value", 40.0),
        ToolInvocation::new("Vignette").with_param("value", -10.0),
        ToolInvocation::new("ObjectMask")
            .with_param("exposure", 0.2)
            .with_mask(MaskSpec::Object(ObjectMask {
                bbox: BBox::new(0.25, 0.35, 0.7, 0.75),
            })),
    ])
}
