//! Serialization helpers shared by the report types.

use serde::Serializer;

use crate::expr::Rational;

/// Serializes a rational as `"p/q"` (or `"p"` when integral).
pub fn rational<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

pub fn opt_rational<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}
