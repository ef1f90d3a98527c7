//! Gauss–Legendre collocation on [-1, 1]: nodes, weights, differentiation
//! and barycentric interpolation.

use nalgebra::DMatrix;

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        0.5 * nf * (nf + 1.0) * x.powi(n as i32 + 1)
    } else {
        nf * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, dp)
}

/// Gauss–Legendre nodes (ascending) and weights.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Barycentric weights of a node set.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                // scaled by 2 per factor to keep magnitudes moderate
                w[i] *= 2.0 * (nodes[i] - nodes[j]);
            }
        }
        w[i] = 1.0 / w[i];
    }
    w
}

/// Differentiation matrix of the interpolating polynomial.
pub fn diff_matrix(nodes: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    let w = barycentric_weights(nodes);
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Matrix evaluating the interpolant through `nodes` at the points `targets`.
pub fn interp_matrix(nodes: &[f64], targets: &[f64]) -> DMatrix<f64> {
    let w = barycentric_weights(nodes);
    let mut m = DMatrix::zeros(targets.len(), nodes.len());
    for (r, &t) in targets.iter().enumerate() {
        if let Some(k) = nodes.iter().position(|&x| (x - t).abs() < 1e-15) {
            m[(r, k)] = 1.0;
            continue;
        }
        let mut denom = 0.0;
        for (j, &x) in nodes.iter().enumerate() {
            let c = w[j] / (t - x);
            m[(r, j)] = c;
            denom += c;
        }
        for j in 0..nodes.len() {
            m[(r, j)] /= denom;
        }
    }
    m
}

/// Values of `P_0 .. P_{deg}` at the nodes, one column per degree.
pub fn legendre_vandermonde(nodes: &[f64], deg: usize) -> DMatrix<f64> {
    DMatrix::from_fn(nodes.len(), deg + 1, |i, l| legendre(l, nodes[i]).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_integrates_monomials() {
        for n in [8usize, 16, 24, 33] {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
                let scale = exact.abs().max(1e-300);
                if k % 2 == 0 {
                    assert!(((q - exact) / scale).abs() < 1e-13, "n={n} k={k} q={q}");
                } else {
                    assert!(q.abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn diff_matrix_exact_on_polynomials() {
        let (x, _) = gauss_legendre(12);
        let d = diff_matrix(&x);
        for k in 1..12 {
            for i in 0..12 {
                let du: f64 = (0..12).map(|j| d[(i, j)] * x[j].powi(k)).sum();
                let exact = k as f64 * x[i].powi(k - 1);
                assert!((du - exact).abs() < 1e-11, "k={k}");
            }
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let (x, _) = gauss_legendre(10);
        let t = [-1.0, -0.3, 0.77, 1.0];
        let m = interp_matrix(&x, &t);
        for (r, &tt) in t.iter().enumerate() {
            let v: f64 = (0..10).map(|j| m[(r, j)] * (x[j].powi(7) - 2.0 * x[j])).sum();
            assert!((v - (tt.powi(7) - 2.0 * tt)).abs() < 1e-12);
        }
    }
}

/// Matrix mapping nodal values to values of the antiderivative vanishing
/// at `x = −1`, exact for polynomials of degree `< n`.
pub fn antiderivative_matrix(nodes: &[f64], weights: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    // coefficients c_l = (2l+1)/2 Σ w_k f_k P_l(x_k)
    let coef = DMatrix::from_fn(n, n, |l, k| (2.0 * l as f64 + 1.0) / 2.0 * weights[k] * legendre(l, nodes[k]).0);
    // ∫_{-1}^x P_l = (P_{l+1} − P_{l−1})/(2l+1), ∫ P_0 = x + 1
    let eval = DMatrix::from_fn(n, n, |i, l| {
        let x = nodes[i];
        if l == 0 {
            x + 1.0
        } else {
            (legendre(l + 1, x).0 - legendre(l - 1, x).0) / (2.0 * l as f64 + 1.0)
        }
    });
    eval * coef
}

/// Legendre coefficients of nodal values (exact for degree `< n`).
pub fn legendre_coefficients(nodes: &[f64], weights: &[f64], f: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|l| {
            (2.0 * l as f64 + 1.0) / 2.0
                * (0..n).map(|k| weights[k] * f[k] * legendre(l, nodes[k]).0).sum::<f64>()
        })
        .collect()
}

#[cfg(test)]
mod antiderivative_tests {
    use super::*;

    #[test]
    fn antiderivative_of_polynomial() {
        let (x, w) = gauss_legendre(12);
        let a = antiderivative_matrix(&x, &w);
        for i in 0..12 {
            let v: f64 = (0..12).map(|k| a[(i, k)] * (3.0 * x[k] * x[k] - 1.0)).sum();
            let e = x[i].powi(3) - x[i] - ((-1.0f64).powi(3) + 1.0);
            assert!((v - e).abs() < 1e-13);
        }
    }
}
