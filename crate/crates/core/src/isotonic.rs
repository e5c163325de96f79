//! Euclidean projection onto non-increasing sequences (pool adjacent
//! violators), optionally boxed.

/// Least-squares non-increasing fit of `values`.
pub fn project_nonincreasing(values: &[f64]) -> Vec<f64> {
    // blocks of (sum, count); means stay non-increasing across the stack
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 >= s1 / c1 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().expect("two blocks") = (s0 + s1, c0 + c1);
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (sum, count) in blocks {
        let mean = sum / count as f64;
        out.extend(std::iter::repeat_n(mean, count));
    }
    out
}

/// Projection onto `{x : x_1 ≥ … ≥ x_T, lo ≤ x_t ≤ hi}`. Clipping the
/// isotonic fit is exact for box constraints and keeps monotonicity.
pub fn project_nonincreasing_boxed(values: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    project_nonincreasing(values)
        .into_iter()
        .map(|x| x.clamp(lo, hi))
        .collect()
}
