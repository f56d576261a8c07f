//! Gauss-Legendre rules.
//!
//! Nodes are the roots of `P_m`, found by Newton iteration on the
//! three-term Legendre recurrence starting from the Tricomi-type guess
//! `cos(pi (i - 1/4) / (m + 1/2))`. Accuracy is near machine precision for
//! the orders used here (a few hundred nodes at most).

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `m`-point rule on `[-1, 1]`, nodes ascending.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let half = m.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// The rule affinely mapped to `[a, b]`.
    pub fn on_interval(m: usize, a: f64, b: f64) -> Self {
        let GaussLegendre { nodes, weights } = Self::new(m);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Self {
            nodes: nodes.iter().map(|x| mid + half * x).collect(),
            weights: weights.iter().map(|w| half * w).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `(P_m(x), P_m'(x))` by the Bonnet recurrence.
fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule on `[a, b]`: `panels` equal sub-intervals, each with an
/// `order`-point Gauss-Legendre rule.
pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> GaussLegendre {
    let base = GaussLegendre::new(order);
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(mid + 0.5 * width * x);
            weights.push(0.5 * width * w);
        }
    }
    GaussLegendre { nodes, weights }
}

/// Tensor-product quadrature of `f` over the cube `[a, b]^dim` using a
/// one-dimensional rule.
pub fn integrate_cube<F>(rule: &GaussLegendre, dim: usize, f: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    if dim == 0 {
        return f(&[]);
    }
    let m = rule.len();
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (d, &i) in idx.iter().enumerate() {
            point[d] = rule.nodes[i];
            w *= rule.weights[i];
        }
        total += w * f(&point);
        // odometer increment
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < m {
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
    fn three_point_rule_matches_closed_form() {
        let r = GaussLegendre::new(3);
        let x = (3.0f64 / 5.0).sqrt();
        assert!((r.nodes[0] + x).abs() < 1e-15);
        assert!(r.nodes[1].abs() < 1e-15);
        assert!((r.nodes[2] - x).abs() < 1e-15);
        assert!((r.weights[0] - 5.0 / 9.0).abs() < 1e-15);
        assert!((r.weights[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn exact_on_polynomials_up_to_degree_2m_minus_1() {
        for m in [5usize, 20, 80, 200] {
            let r = GaussLegendre::new(m);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13, "m={m}");
            let deg = 2 * m - 2;
            let exact = 2.0 / (deg as f64 + 1.0);
            let got = r.integrate(|x| x.powi(deg as i32));
            assert!((got - exact).abs() < 1e-12, "m={m}: {got} vs {exact}");
        }
    }

    #[test]
    fn nodes_ascending_and_interior() {
        let r = GaussLegendre::on_interval(41, 0.0, 3.0);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(r.nodes[0] > 0.0 && r.nodes[40] < 3.0);
        assert!((r.weights.iter().sum::<f64>() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn cube_integration_of_separable_function() {
        let r = GaussLegendre::on_interval(12, 0.0, 1.0);
        let got = integrate_cube(&r, 3, |x| x[0] * x[1] * x[1] * x[2].exp());
        let exact = 0.5 * (1.0 / 3.0) * (1f64.exp() - 1.0);
        assert!((got - exact).abs() < 1e-13);
    }

    #[test]
    fn composite_rule_integrates_cosine() {
        let r = composite(-1.0, 2.0, 7, 6);
        let got = r.integrate(f64::cos);
        assert!((got - (2f64.sin() + 1f64.sin())).abs() < 1e-13);
    }
}
