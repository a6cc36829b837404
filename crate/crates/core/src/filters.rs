use ndarray::Array2;

/// Median over a `(2r+1) x (2r+1)` neighbourhood, truncated at the borders.
/// For an even number of neighbours the lower of the two middle values is
/// taken, so integer-valued inputs stay integer-valued.
pub fn median_filter(field: &Array2<f64>, radius: usize) -> Array2<f64> {
    let (m, n) = field.dim();
    let mut window = Vec::with_capacity((2 * radius + 1).pow(2));
    Array2::from_shape_fn((m, n), |(i, j)| {
        window.clear();
        for ii in i.saturating_sub(radius)..(i + radius + 1).min(m) {
            for jj in j.saturating_sub(radius)..(j + radius + 1).min(n) {
                window.push(field[[ii, jj]]);
            }
        }
        let mid = (window.len() - 1) / 2;
        let (_, median, _) = window.select_nth_unstable_by(mid, f64::total_cmp);
        *median
    })
}

/// Arithmetic mean of a slice; zero for an empty slice.
pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values.into_iter().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}
