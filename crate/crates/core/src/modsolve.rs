//! Linear systems over Z_L in phase exponents.
//!
//! The conjugated-cochain equations are linear in the exponents once a common
//! denominator L is fixed. L is composite in general, so the matrix is
//! diagonalized by elementary row and column operations carried out mod L
//! (a Smith-style reduction driven by Euclidean descent on entry size). The
//! diagonal system solves coordinatewise, which yields a deterministic
//! particular solution and a complete set of kernel generators.

/// A system of linear congruences `sum coeff·x ≡ rhs (mod modulus)`.
#[derive(Clone, Debug)]
pub struct ModSystem {
    pub modulus: i64,
    pub n_vars: usize,
    rows: Vec<(Vec<i64>, i64)>,
}

/// Solution structure: `particular + span(kernel_gens)` mod `modulus`.
#[derive(Clone, Debug)]
pub struct ModSolution {
    pub modulus: i64,
    pub particular: Vec<i64>,
    pub kernel_gens: Vec<Vec<i64>>,
}

impl ModSystem {
    pub fn new(modulus: i64, n_vars: usize) -> Self {
        assert!(modulus > 0);
        ModSystem {
            modulus,
            n_vars,
            rows: Vec::new(),
        }
    }

    pub fn add_eq(&mut self, coeffs: &[(usize, i64)], rhs: i64) {
        let mut row = vec![0i64; self.n_vars];
        for &(i, c) in coeffs {
            row[i] = (row[i] + c).rem_euclid(self.modulus);
        }
        self.rows.push((row, rhs.rem_euclid(self.modulus)));
    }

    pub fn check(&self, x: &[i64]) -> bool {
        self.rows.iter().all(|(row, rhs)| {
            let lhs: i64 = row.iter().zip(x).map(|(&c, &v)| c * v).sum();
            lhs.rem_euclid(self.modulus) == *rhs
        })
    }

    /// Solves the system; `None` when inconsistent.
    pub fn solve(&self) -> Option<ModSolution> {
        let l = self.modulus;
        let m = self.rows.len();
        let n = self.n_vars;
        let mut a: Vec<Vec<i64>> = self.rows.iter().map(|(r, _)| r.clone()).collect();
        let mut b: Vec<i64> = self.rows.iter().map(|(_, rhs)| *rhs).collect();
        // v tracks column operations: x = v · x'
        let mut v: Vec<Vec<i64>> = (0..n)
            .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
            .collect();

        let small = |x: i64| -> i64 { x.min(l - x) }; // distance to 0 mod L

        let mut rank = 0usize;
        while rank < m.min(n) {
            // find the smallest nonzero entry in the remaining submatrix
            let mut best: Option<(usize, usize)> = None;
            for (i, row) in a.iter().enumerate().skip(rank) {
                for (j, &e) in row.iter().enumerate().skip(rank) {
                    if e != 0 && best.is_none_or(|(bi, bj)| small(e) < small(a[bi][bj])) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            a.swap(rank, pi);
            b.swap(rank, pi);
            if pj != rank {
                for row in a.iter_mut() {
                    row.swap(rank, pj);
                }
                for vrow in v.iter_mut() {
                    vrow.swap(rank, pj);
                }
            }
            // prefer the representative closer to zero: negate if needed
            if a[rank][rank] > l - a[rank][rank] {
                for row in a.iter_mut() {
                    row[rank] = (l - row[rank]) % l;
                }
                for vrow in v.iter_mut() {
                    vrow[rank] = (l - vrow[rank]) % l;
                }
            }
            let p = a[rank][rank];
            // reduce the pivot column
            let mut clean = true;
            for i in 0..m {
                if i == rank || a[i][rank] == 0 {
                    continue;
                }
                let q = a[i][rank] / p;
                for j in 0..n {
                    a[i][j] = (a[i][j] - q * a[rank][j]).rem_euclid(l);
                }
                b[i] = (b[i] - q * b[rank]).rem_euclid(l);
                if a[i][rank] != 0 {
                    clean = false;
                }
            }
            // reduce the pivot row by column operations
            for j in 0..n {
                if j == rank || a[rank][j] == 0 {
                    continue;
                }
                let q = a[rank][j] / p;
                for row in a.iter_mut() {
                    let sub = q * row[rank];
                    row[j] = (row[j] - sub).rem_euclid(l);
                }
                for vrow in v.iter_mut() {
                    let sub = q * vrow[rank];
                    vrow[j] = (vrow[j] - sub).rem_euclid(l);
                }
                if a[rank][j] != 0 {
                    clean = false;
                }
            }
            if clean {
                rank += 1;
            }
            // otherwise loop again: some remainder became the new smallest
        }

        // diagonal solve: a[i][i]·x'_i ≡ b[i] for i < rank; rows beyond rank
        // must have zero rhs.
        for (i, bi) in b.iter().enumerate() {
            if i >= rank && *bi != 0 {
                return None;
            }
        }
        let mut xp = vec![0i64; n];
        let mut kernel: Vec<Vec<i64>> = Vec::new();
        for i in 0..n {
            let d = if i < rank { a[i][i] } else { 0 };
            if d == 0 {
                if i < rank && b[i] != 0 {
                    return None;
                }
                // fully free coordinate
                kernel.push(v.iter().map(|vrow| vrow[i]).collect());
                continue;
            }
            let g = gcd(d, l);
            if i < rank {
                if b[i] % g != 0 {
                    return None;
                }
                let inv = inv_mod(d / g, l / g);
                xp[i] = (b[i] / g * inv).rem_euclid(l / g);
            }
            if g > 1 {
                // ambiguity direction of order g
                let step = l / g;
                kernel.push(
                    v.iter()
                        .map(|vrow| (vrow[i] * step).rem_euclid(l))
                        .collect(),
                );
            }
        }
        let particular: Vec<i64> = v
            .iter()
            .map(|vrow| {
                vrow.iter()
                    .zip(&xp)
                    .map(|(&vc, &xc)| vc * xc)
                    .sum::<i64>()
                    .rem_euclid(l)
            })
            .collect();
        debug_assert!(self.check(&particular));
        Some(ModSolution {
            modulus: l,
            particular,
            kernel_gens: kernel,
        })
    }
}

impl ModSolution {
    /// Enumerates the full solution set, bailing out above `cap` entries.
    pub fn enumerate(&self, cap: usize) -> Option<Vec<Vec<i64>>> {
        let l = self.modulus;
        let mut seen = std::collections::BTreeSet::new();
        seen.insert(self.particular.clone());
        let mut frontier = vec![self.particular.clone()];
        while let Some(x) = frontier.pop() {
            for gen in &self.kernel_gens {
                let w: Vec<i64> = x
                    .iter()
                    .zip(gen)
                    .map(|(&a, &b)| (a + b).rem_euclid(l))
                    .collect();
                if seen.insert(w.clone()) {
                    if seen.len() > cap {
                        return None;
                    }
                    frontier.push(w);
                }
            }
        }
        Some(seen.into_iter().collect())
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

fn inv_mod(a: i64, m: i64) -> i64 {
    if m == 1 {
        return 0;
    }
    let (g, x, _) = egcd(a.rem_euclid(m), m);
    assert_eq!(g, 1, "not invertible");
    x.rem_euclid(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_consistent_system() {
        let mut sys = ModSystem::new(12, 2);
        sys.add_eq(&[(0, 1), (1, 1)], 5);
        sys.add_eq(&[(0, 1)], 2);
        let sol = sys.solve().unwrap();
        assert!(sys.check(&sol.particular));
        assert_eq!(sol.particular, vec![2, 3]);
    }

    #[test]
    fn inconsistent_system() {
        let mut sys = ModSystem::new(4, 1);
        sys.add_eq(&[(0, 2)], 1); // 2x ≡ 1 mod 4 has no solution
        assert!(sys.solve().is_none());
    }

    #[test]
    fn non_unit_pivot_with_solutions() {
        let mut sys = ModSystem::new(8, 1);
        sys.add_eq(&[(0, 2)], 4); // x ≡ 2 mod 4: solutions {2, 6} mod 8
        let sol = sys.solve().unwrap();
        let all = sol.enumerate(16).unwrap();
        assert_eq!(all, vec![vec![2], vec![6]]);
    }

    #[test]
    fn free_variable_enumeration() {
        let mut sys = ModSystem::new(3, 2);
        sys.add_eq(&[(0, 1), (1, 2)], 0);
        let sol = sys.solve().unwrap();
        let all = sol.enumerate(16).unwrap();
        assert_eq!(all.len(), 3);
        for v in all {
            assert_eq!((v[0] + 2 * v[1]) % 3, 0);
        }
    }

    #[test]
    fn brute_force_agreement_small() {
        // exhaustively verify solution sets against brute force
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rng = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for l in [2i64, 4, 6, 8, 9, 12, 16, 18] {
            for _ in 0..40 {
                let nv = 2 + (rng() % 2) as usize;
                let mut sys = ModSystem::new(l, nv);
                for _ in 0..3 {
                    let coeffs: Vec<(usize, i64)> =
                        (0..nv).map(|i| (i, (rng() % l as u64) as i64)).collect();
                    sys.add_eq(&coeffs, (rng() % l as u64) as i64);
                }
                let mut brute = Vec::new();
                let total = (l as usize).pow(nv as u32);
                for flat in 0..total {
                    let mut x = vec![0i64; nv];
                    let mut f = flat;
                    for xi in x.iter_mut() {
                        *xi = (f % l as usize) as i64;
                        f /= l as usize;
                    }
                    if sys.check(&x) {
                        brute.push(x);
                    }
                }
                brute.sort();
                match sys.solve() {
                    None => assert!(brute.is_empty(), "solver missed solutions for {sys:?}"),
                    Some(sol) => {
                        assert!(sys.check(&sol.particular));
                        let got = sol.enumerate(200_000).unwrap();
                        assert_eq!(got, brute, "solution set mismatch for {sys:?}");
                    }
                }
            }
        }
    }
}
