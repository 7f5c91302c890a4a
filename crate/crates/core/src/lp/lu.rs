//! Dense LU factorization with partial pivoting, and product-form updates of it.

pub(crate) struct DenseLu {
    n: usize,
    /// Row-major packed `L` (unit diagonal, below) and `U` (on and above).
    lu: Vec<f64>,
    /// `perm[k]` is the original row placed at position `k`.
    perm: Vec<usize>,
}

impl DenseLu {
    /// Factors the column-major `n x n` matrix given by `columns`. Returns `None` when singular.
    pub(crate) fn factor_columns(n: usize, columns: impl Fn(usize, &mut [f64])) -> Option<Self> {
        let mut lu = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            columns(j, &mut col);
            for i in 0..n {
                lu[i * n + j] = col[i];
            }
        }
        let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return None;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, best) =
                (k..n)
                    .map(|i| (i, lu[i * n + k].abs()))
                    .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if best <= scale * 1e-14 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Some(DenseLu { n, lu, perm })
    }

    /// Solves `A x = b` in place.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            x[i] = row.iter().zip(&x[..i]).fold(x[i], |s, (a, xj)| s - a * xj);
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s = row.iter().zip(&x[i + 1..]).fold(x[i], |s, (a, xj)| s - a * xj);
            x[i] = s / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// Solves `A^T x = b` in place.
    pub(crate) fn solve_transpose(&self, b: &mut [f64]) {
        let n = self.n;
        // A = P^T L U, so A^T x = b  <=>  U^T z = b, L^T w = z, x = P^T w
        let mut z = b.to_vec();
        for i in 0..n {
            let s = z[..i].iter().enumerate().fold(z[i], |s, (j, zj)| s - self.lu[j * n + i] * zj);
            z[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            z[i] = z[i + 1..].iter().enumerate().fold(z[i], |s, (k, zj)| s - self.lu[(i + 1 + k) * n + i] * zj);
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = z[k];
        }
    }
}

/// Inverse of a basis matrix as an LU factorization of an earlier basis
/// followed by one elementary column transformation per basis change.
pub(crate) struct BasisFactor {
    lu: DenseLu,
    /// `(r, w)`: column `r` was replaced by a column `a` with `w = B^{-1} a`.
    etas: Vec<(usize, Vec<f64>)>,
}

impl BasisFactor {
    pub(crate) fn new(lu: DenseLu) -> Self {
        BasisFactor { lu, etas: Vec::new() }
    }

    pub(crate) fn updates(&self) -> usize {
        self.etas.len()
    }

    /// Records that column `r` was replaced by the column whose solve gave `w`.
    pub(crate) fn update(&mut self, r: usize, w: Vec<f64>) {
        self.etas.push((r, w));
    }

    pub(crate) fn solve(&self, b: &mut [f64]) {
        self.lu.solve(b);
        for (r, w) in &self.etas {
            let xr = b[*r] / w[*r];
            for (bi, wi) in b.iter_mut().zip(w) {
                *bi -= wi * xr;
            }
            b[*r] = xr;
        }
    }

    pub(crate) fn solve_transpose(&self, b: &mut [f64]) {
        for (r, w) in self.etas.iter().rev() {
            let s: f64 = b.iter().zip(w).enumerate().filter(|(i, _)| i != r).map(|(_, (bi, wi))| bi * wi).sum();
            b[*r] = (b[*r] - s) / w[*r];
        }
        self.lu.solve_transpose(b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_both_orientations() {
        // column-major [[2, 1, 0], [4, 3, 1], [0, 5, 7]] as rows
        let a = [[2.0, 1.0, 0.0], [4.0, 3.0, 1.0], [0.0, 5.0, 7.0]];
        let lu = DenseLu::factor_columns(3, |j, col| {
            for i in 0..3 {
                col[i] = a[i][j];
            }
        })
        .unwrap();
        let x = [1.0, -2.0, 0.5];
        let mut b: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[i][j] * x[j]).sum()).collect();
        lu.solve(&mut b);
        for i in 0..3 {
            assert!((b[i] - x[i]).abs() < 1e-12);
        }
        let mut bt: Vec<f64> = (0..3).map(|j| (0..3).map(|i| a[i][j] * x[i]).sum()).collect();
        lu.solve_transpose(&mut bt);
        for i in 0..3 {
            assert!((bt[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_singular() {
        assert!(DenseLu::factor_columns(2, |_, col| col.copy_from_slice(&[1.0, 1.0])).is_none());
    }

    #[test]
    fn product_form_updates_match_refactoring() {
        let mut a = vec![[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 2.0, 5.0]];
        let factor = |a: &Vec<[f64; 3]>| {
            DenseLu::factor_columns(3, |j, col| {
                for i in 0..3 {
                    col[i] = a[i][j];
                }
            })
            .unwrap()
        };
        let mut f = BasisFactor::new(factor(&a));
        for (r, col) in [(1, [1.0, -2.0, 0.5]), (0, [0.0, 1.0, 3.0]), (1, [2.0, 2.0, -1.0])] {
            let mut w = col.to_vec();
            f.solve(&mut w);
            f.update(r, w);
            for i in 0..3 {
                a[i][r] = col[i];
            }
            let fresh = factor(&a);
            let b = [0.3, -1.0, 2.0];
            let (mut x, mut y) = (b.to_vec(), b.to_vec());
            f.solve(&mut x);
            fresh.solve(&mut y);
            let (mut xt, mut yt) = (b.to_vec(), b.to_vec());
            f.solve_transpose(&mut xt);
            fresh.solve_transpose(&mut yt);
            for i in 0..3 {
                assert!((x[i] - y[i]).abs() < 1e-12);
                assert!((xt[i] - yt[i]).abs() < 1e-12);
            }
        }
    }
}
