use crate::error::{Error, Result};

/// Symmetric quadrature on the reference triangle `(0,0), (1,0), (0,1)`.
///
/// Points are barycentric `[l0, l1, l2]`; weights sum to the reference area
/// 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

fn orbit_s21(w: f64, a: f64, out: &mut QuadRule) {
    let b = 1.0 - 2.0 * a;
    for p in [[b, a, a], [a, b, a], [a, a, b]] {
        out.points.push(p);
        out.weights.push(w);
    }
}

fn orbit_s111(w: f64, a: f64, b: f64, out: &mut QuadRule) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        out.points.push(p);
        out.weights.push(w);
    }
}

impl QuadRule {
    /// The cheapest available rule exact for polynomials of total degree
    /// `degree` (at most 6).
    pub fn with_degree(degree: usize) -> Result<QuadRule> {
        let mut q = QuadRule {
            points: Vec::new(),
            weights: Vec::new(),
            degree: 0,
        };
        match degree {
            0 | 1 => {
                q.points.push([1.0 / 3.0; 3]);
                q.weights.push(0.5);
                q.degree = 1;
            }
            2 => {
                orbit_s21(1.0 / 6.0, 1.0 / 6.0, &mut q);
                q.degree = 2;
            }
            3 | 4 => {
                // Dunavant degree 4, six points.
                orbit_s21(0.111_690_794_839_005_73, 0.445_948_490_915_964_89, &mut q);
                orbit_s21(0.054_975_871_827_660_934, 0.091_576_213_509_770_743, &mut q);
                q.degree = 4;
            }
            5 | 6 => {
                // Dunavant degree 6, twelve points.
                orbit_s21(0.058_393_137_863_189_683, 0.249_286_745_170_910_42, &mut q);
                orbit_s21(0.025_422_453_185_103_408, 0.063_089_014_491_502_228, &mut q);
                orbit_s111(0.041_425_537_809_186_788, 0.053_145_049_844_816_947, 0.310_352_451_033_784_41, &mut q);
                q.degree = 6;
            }
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "no quadrature rule of degree {degree} available (max 6)"
                )))
            }
        }
        Ok(q)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fact(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Exact integral of l0^a l1^b l2^c over the reference triangle.
    fn exact(a: u32, b: u32, c: u32) -> f64 {
        fact(a) * fact(b) * fact(c) / fact(a + b + c + 2)
    }

    fn apply(q: &QuadRule, a: u32, b: u32, c: u32) -> f64 {
        q.points
            .iter()
            .zip(&q.weights)
            .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
            .sum()
    }

    #[test]
    fn weights_sum_to_half() {
        for d in [1, 2, 4, 6] {
            let q = QuadRule::with_degree(d).unwrap();
            assert!((q.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
            for p in &q.points {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
        assert!(QuadRule::with_degree(7).is_err());
    }

    #[test]
    fn monomials_integrate_exactly() {
        for d in [1u32, 2, 4, 6] {
            let q = QuadRule::with_degree(d as usize).unwrap();
            for a in 0..=d {
                for b in 0..=d - a {
                    for c in 0..=d - a - b {
                        let err = (apply(&q, a, b, c) - exact(a, b, c)).abs();
                        assert!(err < 1e-13, "degree {d}: l^({a},{b},{c}) err {err}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn random_degree6_polynomials(coef in proptest::collection::vec(-3.0f64..3.0, 28)) {
            let q = QuadRule::with_degree(6).unwrap();
            let mut k = 0;
            let mut quad = 0.0;
            let mut ex = 0.0;
            for a in 0..=6u32 {
                for b in 0..=6 - a {
                    ex += coef[k] * exact(a, b, 0);
                    quad += coef[k] * apply(&q, a, b, 0);
                    k += 1;
                }
            }
            prop_assert!((quad - ex).abs() < 1e-13 * (1.0 + ex.abs()));
        }
    }
}
