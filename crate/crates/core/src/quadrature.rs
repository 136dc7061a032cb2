//! Quadrature rules on the reference interval and reference triangle.

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let d = legendre(n, x).1;
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * d * d);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_on(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(&w).map(|(&xi, &wi)| (mid + half * xi, half * wi)).collect()
}

/// Points per cell used for 1D assembly.
pub const POINTS_PER_CELL: usize = 8;

/// Symmetric degree-4 rule on a triangle: barycentric coordinates and
/// weights summing to one (multiply by the triangle area).
pub fn triangle_degree4() -> Vec<([f64; 3], f64)> {
    let a1 = 0.445_948_490_915_965;
    let b1 = 0.108_103_018_168_070;
    let w1 = 0.223_381_589_678_011;
    let a2 = 0.091_576_213_509_771;
    let b2 = 0.816_847_572_980_459;
    let w2 = 0.109_951_743_655_322;
    vec![
        ([b1, a1, a1], w1),
        ([a1, b1, a1], w1),
        ([a1, a1, b1], w1),
        ([b2, a2, a2], w2),
        ([a2, b2, a2], w2),
        ([a2, a2, b2], w2),
    ]
}
