//! Serde helpers for values JSON cannot represent.

/// Serializes infinities and NaN as the strings `"inf"`, `"-inf"`, `"nan"`
/// instead of `null`.
pub(crate) fn f64_or_token<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
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
