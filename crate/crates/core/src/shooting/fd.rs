//! Finite-difference weights on arbitrary stencils (Fornberg's recursion).

/// Weights `w[d][i]` such that `Σ_i w[d][i] f(xs[i])` approximates the `d`-th
/// derivative of `f` at `z`, for `d = 0..=order`.
pub(crate) fn weights(z: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut w = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    w[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[k][i] = c1 * (k as f64 * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                w[k][j] = (c4 * w[k][j] - k as f64 * w[k - 1][j]) / c3;
            }
            w[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    w
}

/// Applies the `order`-th derivative weights at `z` to `(xs, ys)`.
pub(crate) fn derivative(z: f64, xs: &[f64], ys: &[f64], order: usize) -> f64 {
    weights(z, xs, order)[order]
        .iter()
        .zip(ys)
        .map(|(w, y)| w * y)
        .sum()
}
