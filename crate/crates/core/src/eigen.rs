//! Dense complex matrices just large enough for ribbon-operator blocks, with
//! a Jacobi eigensolver for Hermitian matrices. Fusion decomposition needs
//! common eigenvectors of a small commuting family, which we get from a
//! random Hermitian combination; no external linear-algebra backend is worth
//! pulling in for 9x9 problems.

use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex64::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, Complex64::ONE);
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.at(i, j).conj());
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &CMatrix, s: Complex64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j) * v[j]).sum())
            .collect()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                if (self.at(i, j) - self.at(j, i).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns (eigenvalues, eigenvectors), eigenvector `j` stored as
/// a normalized coordinate vector.
pub fn hermitian_eigen(mat: &CMatrix) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = mat.n;
    let mut a = mat.clone();
    let mut v = CMatrix::identity(n); // v[k][j] = component k of eigenvector j

    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off += a.at(p, q).norm_sqr();
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.at(p, q);
                let g = apq.norm();
                if g < 1e-18 {
                    continue;
                }
                let u = apq / g; // phase so that D†AD has real coupling γ = g
                let app = a.at(p, p).re;
                let aqq = a.at(q, q).re;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J restricted to (p,q): [[c, s],[−s·ū, c·ū]]; apply A ← J†AJ
                let (su, cu) = (u.conj() * s, u.conj() * c);
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    a.set(k, p, akp * c - akq * su);
                    a.set(k, q, akp * s + akq * cu);
                }
                let (su_r, cu_r) = (u * s, u * c);
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    a.set(p, k, apk * c - aqk * su_r);
                    a.set(q, k, apk * s + aqk * cu_r);
                }
                for k in 0..n {
                    let vkp = v.at(k, p);
                    let vkq = v.at(k, q);
                    v.set(k, p, vkp * c - vkq * su);
                    v.set(k, q, vkp * s + vkq * cu);
                }
            }
        }
    }
    let eigvals: Vec<f64> = (0..n).map(|i| a.at(i, i).re).collect();
    let cols: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..n).map(|k| v.at(k, j)).collect())
        .collect();
    (eigvals, cols)
}
