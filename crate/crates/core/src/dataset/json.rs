//! Per-scene annotation documents.
//!
//! Written by hand so the byte layout is fixed:
//!
//! ```text
//! {"image": "scene_000007.jpg", "width": 960, "height": 540, "scene_seed": "123", "objects": [{"id": 0, "class": "box", "bbox": [1, 2, 30, 40], "visible_pixels": 1036}]}
//! ```
//!
//! Floats use `%.17g` formatting; the seed is a decimal string so it
//! survives readers that parse numbers as doubles.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::annotate::{Annotation, BBox};
use crate::scene::ShapeClass;

/// C `printf("%.17g")` formatting of a finite double.
pub fn format_g17(x: f64) -> String {
    assert!(x.is_finite(), "non-finite value {x} cannot be written as JSON");
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    const P: i32 = 17;
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= P {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

pub fn annotation_json(image: &str, width: u32, height: u32, scene_seed: u64, annotations: &[Annotation]) -> String {
    let mut out = String::with_capacity(128 + 96 * annotations.len());
    write!(
        out,
        "{{\"image\": {}, \"width\": {width}, \"height\": {height}, \"scene_seed\": \"{scene_seed}\", \"objects\": [",
        json_string(image)
    )
    .unwrap();
    for (i, a) in annotations.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let b = a.bbox.to_array().map(format_g17);
        write!(
            out,
            "{{\"id\": {}, \"class\": \"{}\", \"bbox\": [{}, {}, {}, {}], \"visible_pixels\": {}}}",
            a.object_id, a.class, b[0], b[1], b[2], b[3], a.visible_pixels
        )
        .unwrap();
    }
    out.push_str("]}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub id: u32,
    pub class: ShapeClass,
    pub bbox: BBox,
    pub visible_pixels: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationFile {
    pub image: String,
    pub width: u32,
    pub height: u32,
    pub scene_seed: String,
    pub objects: Vec<AnnotationRecord>,
}

impl AnnotationFile {
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn annotations(&self) -> Vec<Annotation> {
        self.objects
            .iter()
            .map(|r| Annotation { object_id: r.id, class: r.class, bbox: r.bbox, visible_pixels: r.visible_pixels })
            .collect()
    }

    pub fn seed(&self) -> Option<u64> {
        self.scene_seed.parse().ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g17_matches_printf() {
        // reference strings from C printf("%.17g")
        let cases = [
            (5.0, "5"),
            (0.1, "0.10000000000000001"),
            (1.0 / 3.0, "0.33333333333333331"),
            (959.0, "959"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (1e20, "1e+20"),
            (123456789012345680.0, "1.2345678901234568e+17"),
            (0.0001, "0.0001"),
            (0.0, "0"),
        ];
        for (x, s) in cases {
            assert_eq!(format_g17(x), s, "{x}");
        }
    }

    proptest! {
        #[test]
        fn g17_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let s = format_g17(x);
            prop_assert_eq!(s.parse::<f64>().unwrap(), x);
            prop_assert_eq!(serde_json::from_str::<f64>(&s).unwrap(), x);
        }
    }

    #[test]
    fn document_layout_and_round_trip() {
        let anns = vec![
            Annotation { object_id: 0, class: ShapeClass::Box, bbox: BBox::new(1.0, 2.0, 30.0, 40.0), visible_pixels: 1036 },
            Annotation { object_id: 3, class: ShapeClass::Sphere, bbox: BBox::new(0.5, 2.25, 3.0, 4.0), visible_pixels: 25 },
        ];
        let text = annotation_json("scene_000007.jpg", 960, 540, u64::MAX, &anns);
        assert_eq!(
            text,
            "{\"image\": \"scene_000007.jpg\", \"width\": 960, \"height\": 540, \"scene_seed\": \"18446744073709551615\", \
             \"objects\": [{\"id\": 0, \"class\": \"box\", \"bbox\": [1, 2, 30, 40], \"visible_pixels\": 1036}, \
             {\"id\": 3, \"class\": \"sphere\", \"bbox\": [0.5, 2.25, 3, 4], \"visible_pixels\": 25}]}\n"
        );
        let back = AnnotationFile::parse(&text).unwrap();
        assert_eq!(back.annotations(), anns);
        assert_eq!(back.seed(), Some(u64::MAX));
        assert_eq!(back.image, "scene_000007.jpg");
    }

    #[test]
    fn empty_object_list() {
        let text = annotation_json("a.jpg", 4, 2, 0, &[]);
        assert!(text.ends_with("\"objects\": []}\n"));
        assert!(AnnotationFile::parse(&text).unwrap().objects.is_empty());
    }
}
