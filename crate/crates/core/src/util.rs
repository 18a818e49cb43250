/// Maximum of an iterator of floats; any NaN wins so failures are not masked.
pub fn max_of<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().fold(
        0.0,
        |acc: f64, v| if v.is_nan() || v > acc { v } else { acc },
    )
}
