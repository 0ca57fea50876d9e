//! Gauss rules on `[-1, 1]` and collapsed (Duffy) Gauss rules on the reference triangle.

use crate::real::Real;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed in `f64` by Newton
/// iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = if (1.0 - x * x).abs() < 1e-300 {
        let n = n as f64;
        x.powi((n as i32) + 1) * n * (n + 1.0) / 2.0
    } else {
        n as f64 * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, d)
}

/// Quadrature on the reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Clone, Debug)]
pub struct TriangleRule<T> {
    pub points: Vec<[T; 2]>,
    pub weights: Vec<T>,
    pub degree: usize,
}

impl<T: Real> TriangleRule<T> {
    /// Collapsed Gauss rule exact for polynomials of total degree `degree`.
    pub fn with_degree(degree: usize) -> Self {
        let ns = (degree + 2).div_ceil(2).max(1);
        let nt = (degree + 1).div_ceil(2).max(1);
        let (xs, ws) = gauss_legendre(ns);
        let (xt, wt) = gauss_legendre(nt);
        let mut points = Vec::with_capacity(ns * nt);
        let mut weights = Vec::with_capacity(ns * nt);
        for (&a, &wa) in xs.iter().zip(&ws) {
            let s = 0.5 * (a + 1.0);
            for (&b, &wb) in xt.iter().zip(&wt) {
                let t = 0.5 * (b + 1.0);
                points.push([T::lit(s), T::lit(t * (1.0 - s))]);
                weights.push(T::lit(0.25 * wa * wb * (1.0 - s)));
            }
        }
        Self { points, weights, degree }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
