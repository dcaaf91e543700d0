//! Quadrature on the reference triangle (barycentric points, weights summing
//! to one) and Gauss–Legendre rules on the unit interval for edge integrals.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: usize,
}

/// Symmetric Dunavant rules. Each orbit is `(weight, barycentric generator)`;
/// generators with one, two or three distinct coordinates expand to 1, 3 or 6 points.
const DUNAVANT_1: &[(f64, [f64; 3])] = &[(1.0, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])];

const DUNAVANT_2: &[(f64, [f64; 3])] = &[(1.0 / 3.0, [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0])];

const DUNAVANT_4: &[(f64, [f64; 3])] = &[
    (0.223381589678011, [0.108103018168070, 0.445948490915965, 0.445948490915965]),
    (0.109951743655322, [0.816847572980459, 0.091576213509771, 0.091576213509771]),
];

const DUNAVANT_6: &[(f64, [f64; 3])] = &[
    (0.116786275726379, [0.501426509658179, 0.249286745170910, 0.249286745170910]),
    (0.050844906370207, [0.873821971016996, 0.063089014491502, 0.063089014491502]),
    (0.082851075618374, [0.053145049844817, 0.310352451033784, 0.636502499121399]),
];

const DUNAVANT_8: &[(f64, [f64; 3])] = &[
    (0.144315607677787, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
    (0.095091634267285, [0.081414823414554, 0.459292588292723, 0.459292588292723]),
    (0.103217370534718, [0.658861384496480, 0.170569307751760, 0.170569307751760]),
    (0.032458497623198, [0.898905543365938, 0.050547228317031, 0.050547228317031]),
    (0.027230314174435, [0.008394777409958, 0.263112829634638, 0.728492392955404]),
];

fn expand_orbit(w: f64, g: [f64; 3], points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>) {
    let [a, b, c] = g;
    let mut orbit: Vec<[f64; 3]> = if a == b && b == c {
        vec![g]
    } else if b == c {
        vec![[a, b, b], [b, a, b], [b, b, a]]
    } else {
        vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
    };
    // Dunavant generators are truncated to 15 digits; restore the exact partition of unity.
    for p in &mut orbit {
        let s = p[0] + p[1] + p[2];
        p.iter_mut().for_each(|v| *v /= s);
    }
    weights.extend(std::iter::repeat_n(w, orbit.len()));
    points.extend(orbit);
}

impl QuadratureRule {
    /// Smallest tabulated rule that integrates polynomials of total degree
    /// `degree` exactly. Degrees up to 8 are available.
    pub fn triangle(degree: usize) -> Result<Self> {
        let (table, exact) = match degree {
            0 | 1 => (DUNAVANT_1, 1),
            2 => (DUNAVANT_2, 2),
            3 | 4 => (DUNAVANT_4, 4),
            5 | 6 => (DUNAVANT_6, 6),
            7 | 8 => (DUNAVANT_8, 8),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "no triangle rule of degree {degree} (max 8)"
                )))
            }
        };
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &(w, g) in table {
            expand_orbit(w, g, &mut points, &mut weights);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { points, weights, degree: exact })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `(barycentric point, weight)` pairs. Weights sum to one; scale by |T|.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 3], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Gauss–Legendre rule mapped to `[0, 1]`, weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeQuadrature {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl EdgeQuadrature {
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("Gauss-Legendre rule needs at least one point".into()));
        }
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Newton iteration on P_n from the Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            points[i] = 0.5 * (1.0 - x);
            points[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Ok(Self { points, weights })
    }

    /// Polynomial exactness degree `2n - 1`.
    pub fn degree(&self) -> usize {
        2 * self.points.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(parameter in [0,1], weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
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
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// ∫ over the reference triangle of x^a y^b, normalized by its area 1/2.
    fn monomial_mean(a: usize, b: usize) -> f64 {
        2.0 * factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn triangle_rules_are_exact_up_to_their_degree() {
        for requested in [1, 2, 4, 6, 8] {
            let rule = QuadratureRule::triangle(requested).unwrap();
            assert!(rule.iter().all(|(_, w)| w > 0.0));
            for a in 0..=rule.degree() {
                for b in 0..=(rule.degree() - a) {
                    let q: f64 = rule.iter().map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32)).sum();
                    let exact = monomial_mean(a, b);
                    assert!(
                        (q - exact).abs() <= 2e-14 * exact.max(1e-3),
                        "degree {requested}: x^{a} y^{b}: {q} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn rule_sizes() {
        let sizes: Vec<usize> = [1, 2, 4, 6, 8].iter().map(|&d| QuadratureRule::triangle(d).unwrap().len()).collect();
        assert_eq!(sizes, vec![1, 3, 6, 12, 16]);
        assert!(QuadratureRule::triangle(9).is_err());
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..=6 {
            let rule = EdgeQuadrature::gauss_legendre(n).unwrap();
            for k in 0..=rule.degree() {
                let q: f64 = rule.iter().map(|(t, w)| w * t.powi(k as i32)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn four_point_rule_matches_tabulated_nodes() {
        let rule = EdgeQuadrature::gauss_legendre(4).unwrap();
        let nodes: Vec<f64> = rule.iter().map(|(t, _)| 2.0 * t - 1.0).collect();
        let expected = [-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526];
        let mut sorted = nodes.clone();
        sorted.sort_by(f64::total_cmp);
        for (a, b) in sorted.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
