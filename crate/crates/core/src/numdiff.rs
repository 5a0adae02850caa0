//! Central finite differences with steps scaled to coordinate magnitude.

/// Relative step used by the first-order schemes.
pub const STEP: f64 = 1e-5;

fn step_for(x: f64, rel: f64) -> f64 {
    rel * x.abs().max(1.0)
}

/// Central-difference Jacobian of `f` at `x`, `J[i][k] = ∂fᵢ/∂x_k`.
pub fn jacobian<F>(mut f: F, x: &[f64], rel: f64) -> Vec<Vec<f64>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let h = step_for(x[k], rel);
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[k] += h;
        dn[k] -= h;
        let fu = f(&up);
        let fd = f(&dn);
        cols.push(fu.iter().zip(&fd).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<_>>());
    }
    let m = cols.first().map_or(0, Vec::len);
    (0..m).map(|i| (0..n).map(|k| cols[k][i]).collect()).collect()
}

/// Five-point stencil Jacobian; fourth-order accurate.
pub fn jacobian5<F>(mut f: F, x: &[f64], rel: f64) -> Vec<Vec<f64>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let h = step_for(x[k], rel);
        let mut at = |s: f64| {
            let mut y = x.to_vec();
            y[k] += s * h;
            f(&y)
        };
        let (m2, m1, p1, p2) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
        cols.push(
            (0..m2.len())
                .map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let m = cols.first().map_or(0, Vec::len);
    (0..m).map(|i| (0..n).map(|k| cols[k][i]).collect()).collect()
}

pub fn gradient<F>(mut f: F, x: &[f64], rel: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    jacobian(|y| vec![f(y)], x, rel).remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let g = gradient(|x| x[0] * x[0] * x[1], &[2.0, 3.0], STEP);
        assert!((g[0] - 12.0).abs() < 1e-8);
        assert!((g[1] - 4.0).abs() < 1e-8);
        let j = jacobian5(|x| vec![x[0].powi(3), x[0] * x[1]], &[1.5, -2.0], 1e-3);
        assert!((j[0][0] - 6.75).abs() < 1e-10);
        assert!(j[0][1].abs() < 1e-12);
        assert!((j[1][0] + 2.0).abs() < 1e-10);
        assert!((j[1][1] - 1.5).abs() < 1e-10);
    }
}
