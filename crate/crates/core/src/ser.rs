//! Serde helpers shared by report types.

use num_complex::Complex64;
use serde::ser::SerializeSeq;
use serde::Serializer;

/// Serialize a complex number as the two-element array [re, im].
pub mod complex_pair {
    use super::*;

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(2))?;
        seq.serialize_element(&c.re)?;
        seq.serialize_element(&c.im)?;
        seq.end()
    }
}

/// JSON has no inf/nan; report unbounded envelopes as a string marker.
pub mod finite_or_marker {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}
