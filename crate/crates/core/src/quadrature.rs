//! Gauss-Legendre rules, composite and adaptive integration, spectral
//! differentiation and integration on arbitrary node sets.

use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::PI;

/// Nodes and weights of an integration rule on a fixed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Affine image of a rule on [-1, 1] onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        Rule {
            nodes: self.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: self.weights.iter().map(|&w| half * w).collect(),
        }
    }

    pub fn append(&mut self, other: Rule) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }
}

/// Legendre polynomial P_n(x) and its derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Composite Gauss-Legendre rule on [a, b] with equal panels of length at most `max_len`.
pub fn composite_gauss(a: f64, b: f64, max_len: f64, order: usize) -> Rule {
    let panels = (libm::ceil((b - a).abs() / max_len) as usize).max(1);
    composite_gauss_panels(a, b, panels, order)
}

pub fn composite_gauss_panels(a: f64, b: f64, panels: usize, order: usize) -> Rule {
    let base = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut rule = Rule { nodes: Vec::new(), weights: Vec::new() };
    for p in 0..panels {
        let lo = a + h * p as f64;
        rule.append(base.mapped(lo, lo + h));
    }
    rule
}

/// Adaptive integration by interval bisection, comparing 8- and 16-point
/// Gauss-Legendre rules on each piece. Returns (value, error estimate).
pub fn adaptive_gauss(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let lo_rule = gauss_legendre(8);
    let hi_rule = gauss_legendre(16);
    let total = (b - a).abs().max(f64::MIN_POSITIVE);
    let mut stack = vec![(a, b, 0u32)];
    let mut value = 0.0;
    let mut err = 0.0;
    while let Some((x0, x1, depth)) = stack.pop() {
        let lo = lo_rule.mapped(x0, x1).integrate(&mut *f);
        let hi = hi_rule.mapped(x0, x1).integrate(&mut *f);
        let e = (hi - lo).abs();
        let share = tol * (x1 - x0).abs() / total;
        let roundoff = 64.0 * f64::EPSILON * hi.abs();
        if e <= share.max(roundoff).max(1e-300) || depth >= 40 {
            value += hi;
            err += e;
        } else {
            let mid = 0.5 * (x0 + x1);
            stack.push((mid, x1, depth + 1));
            stack.push((x0, mid, depth + 1));
        }
    }
    (value, err)
}

/// Barycentric weights for polynomial interpolation through `nodes`.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|j| {
            let mut prod = 1.0;
            for k in 0..n {
                if k != j {
                    prod *= nodes[j] - nodes[k];
                }
            }
            1.0 / prod
        })
        .collect()
}

/// Spectral differentiation matrix (row-major, `d[i][j]`) on arbitrary nodes.
pub fn differentiation_matrix(nodes: &[f64]) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let w = barycentric_weights(nodes);
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d[i][j] = v;
                row_sum += v;
            }
        }
        d[i][i] = -row_sum;
    }
    d
}

/// Evaluates the interpolating polynomial through (nodes, values) at x.
pub fn lagrange_eval(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    let mut out = 0.0;
    for j in 0..n {
        let mut l = 1.0;
        for k in 0..n {
            if k != j {
                l *= (x - nodes[k]) / (nodes[j] - nodes[k]);
            }
        }
        out += l * values[j];
    }
    out
}

/// Cumulative integration matrix on a rule over [a, b]:
/// `s[i][j]` integrates the j-th Lagrange basis polynomial from a to node i.
pub fn integration_matrix(rule: &Rule, a: f64) -> Vec<Vec<f64>> {
    let n = rule.len();
    let inner = gauss_legendre(n);
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        let sub = inner.mapped(a, rule.nodes[i]);
        for j in 0..n {
            let mut basis = vec![0.0; n];
            basis[j] = 1.0;
            s[i][j] = sub.integrate(|x| lagrange_eval(&rule.nodes, &basis, x));
        }
    }
    s
}

/// One Richardson step for a quantity with error `C h^order`, given values at h and h/2.
pub fn richardson(coarse: f64, fine: f64, order: f64) -> f64 {
    let f = libm::pow(2.0, order);
    (f * fine - coarse) / (f - 1.0)
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|&x| libm::log(x)).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| libm::log(y)).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn five_point_rule_matches_tabulated_values() {
        let g = gauss_legendre(5);
        let x2 = libm::sqrt(5.0 - 2.0 * libm::sqrt(10.0 / 7.0)) / 3.0;
        assert!((g.nodes[3] - x2).abs() < 1e-15);
        assert!((g.weights[2] - 128.0 / 225.0).abs() < 1e-15);
        assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_gaussian_integral() {
        let (v, _) = adaptive_gauss(&mut |t: f64| libm::exp(-t * t / 2.0), -40.0, 40.0, 1e-13);
        assert!((v - libm::sqrt(2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn differentiation_matrix_is_exact_for_polynomials() {
        let g = gauss_legendre(12);
        let d = differentiation_matrix(&g.nodes);
        for (i, row) in d.iter().enumerate() {
            let approx: f64 = row.iter().zip(&g.nodes).map(|(a, &x)| a * x.powi(5)).sum();
            assert!((approx - 5.0 * g.nodes[i].powi(4)).abs() < 1e-11);
        }
    }

    #[test]
    fn integration_matrix_integrates_cubic() {
        let rule = gauss_legendre(6).mapped(0.0, 2.0);
        let s = integration_matrix(&rule, 0.0);
        for (i, row) in s.iter().enumerate() {
            let v: f64 = row.iter().zip(&rule.nodes).map(|(a, &x)| a * x * x * x).sum();
            assert!((v - rule.nodes[i].powi(4) / 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn richardson_cancels_leading_error() {
        let exact = 1.0;
        let f = |h: f64| exact + 3.0 * h * h + h.powi(4);
        let ext = richardson(f(0.1), f(0.05), 2.0);
        assert!((ext - exact).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn gauss_rule_exact_to_degree_2n_minus_1(n in 1usize..40, a in -3.0f64..0.0, len in 0.1f64..4.0) {
            let b = a + len;
            let rule = gauss_legendre(n).mapped(a, b);
            let deg = 2 * n - 1;
            let approx = rule.integrate(|x| x.powi(deg as i32));
            let exact = (b.powi(deg as i32 + 1) - a.powi(deg as i32 + 1)) / (deg as f64 + 1.0);
            prop_assert!((approx - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
        }
    }
}
