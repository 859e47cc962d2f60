//! Tridiagonal linear systems.

/// Tridiagonal matrix: `sub[i]` is entry `(i+1, i)`, `diag[i]` is `(i, i)`,
/// `sup[i]` is `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            sub: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            sup: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    /// Adds `value` at `(row, col)`; entries outside the band are ignored.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        if row == col {
            self.diag[row] += value;
        } else if col == row + 1 {
            self.sup[row] += value;
        } else if row == col + 1 {
            self.sub[col] += value;
        }
    }

    #[cfg(test)]
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Solves `A x = rhs` by Gaussian elimination with partial pivoting.
    /// Returns `None` when a pivot vanishes.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        if n == 0 {
            return Some(Vec::new());
        }
        let mut d = self.diag.clone();
        let mut du = self.sup.clone();
        let dl = &self.sub;
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut b = rhs.to_vec();

        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return None;
                }
                let fact = dl[i] / d[i];
                d[i + 1] -= fact * du[i];
                b[i + 1] -= fact * b[i];
            } else {
                // swap rows i and i+1
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let temp = d[i + 1];
                d[i + 1] = du[i] - fact * temp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                du[i] = temp;
                let bi = b[i];
                b[i] = b[i + 1];
                b[i + 1] = bi - fact * b[i + 1];
            }
        }
        if d[n - 1] == 0.0 {
            return None;
        }

        let mut x = vec![0.0; n];
        x[n - 1] = b[n - 1] / d[n - 1];
        if n >= 2 {
            x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        if x.iter().all(|v| v.is_finite()) {
            Some(x)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn solves_random_systems(
            n in 1usize..40,
            seed in prop::collection::vec(-1.0f64..1.0, 120),
            x_true in prop::collection::vec(-5.0f64..5.0, 40),
        ) {
            let mut m = Tridiagonal::zeros(n);
            for i in 0..n {
                m.diag[i] = seed[i];
                if i + 1 < n {
                    m.sub[i] = seed[40 + i];
                    m.sup[i] = seed[80 + i];
                }
            }
            // small pivots are allowed but keep the system comfortably nonsingular
            for i in 0..n {
                m.diag[i] += if m.diag[i] >= 0.0 { 2.5 } else { -2.5 };
            }
            let x = &x_true[..n];
            let rhs = m.mul(x);
            let solved = m.solve(&rhs).unwrap();
            for (a, b) in solved.iter().zip(x) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pivots_on_zero_diagonal() {
        // [[0, 1], [1, 0]] needs a row swap
        let m = Tridiagonal {
            sub: vec![1.0],
            diag: vec![0.0, 0.0],
            sup: vec![1.0],
        };
        assert_eq!(m.solve(&[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);

        let m = Tridiagonal {
            sub: vec![1.0, 1.0, 2.0],
            diag: vec![0.0, 0.0, 1.0, 3.0],
            sup: vec![1.0, 4.0, 1.0],
        };
        let x = [1.0, -2.0, 0.5, 3.0];
        let solved = m.solve(&m.mul(&x)).unwrap();
        for (a, b) in solved.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_none() {
        let m = Tridiagonal {
            sub: vec![0.0],
            diag: vec![1.0, 0.0],
            sup: vec![1.0],
        };
        assert!(m.solve(&[1.0, 1.0]).is_none());
    }
}
