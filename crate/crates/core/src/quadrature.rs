//! Gauss–Legendre rules.

use std::f64::consts::PI;

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product Gauss–Legendre integral of `f` over `[a, b]^dim`.
pub fn tensor_integral(dim: usize, a: f64, b: f64, order: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    if dim == 0 {
        return f(&[]);
    }
    let (nodes, weights) = gauss_legendre(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut point = vec![0.0; dim];
    let mut idx = vec![0usize; dim];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for d in 0..dim {
            point[d] = mid + half * nodes[idx[d]];
            w *= half * weights[idx[d]];
        }
        total += w * f(&point);
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < order {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == dim {
                return total;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for order in [1, 2, 5, 16] {
            let (x, w) = gauss_legendre(order);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            let deg = 2 * order - 1;
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((got - exact).abs() < 1e-13);
            let even = 2 * order - 2;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(even as i32)).sum();
            assert!((got - 2.0 / (even as f64 + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn tensor_gaussian() {
        let v = tensor_integral(2, -1.0, 1.0, 20, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
        // sqrt(pi) * erf(1)
        let one_d = 1.493_648_265_624_854;
        assert!((v - one_d * one_d).abs() < 1e-13, "{v} {}", one_d * one_d);
    }
}
