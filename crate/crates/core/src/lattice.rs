//! Integer lattices: row Hermite normal form, membership, and integer kernels.

use serde::{Deserialize, Serialize};

/// Row-style Hermite normal form of the lattice spanned by the input rows,
/// together with the unimodular transform (`H = U · rows`, nonzero rows only).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hnf {
    pub basis: Vec<Vec<i128>>,
    /// Each basis row as an integer combination of the input rows.
    pub combos: Vec<Vec<i128>>,
    /// Pivot column of each basis row.
    pub pivots: Vec<usize>,
}

pub fn hnf(rows: &[Vec<i64>]) -> Hnf {
    let (mut a, mut u, pivots) = echelon(rows);
    let r = pivots.len();
    for (row, &col) in pivots.iter().enumerate() {
        if a[row][col] < 0 {
            a[row].iter_mut().for_each(|x| *x = -*x);
            u[row].iter_mut().for_each(|x| *x = -*x);
        }
        // reduce rows above into [0, pivot)
        for i in 0..row {
            let q = a[i][col].div_euclid(a[row][col]);
            if q != 0 {
                let (ar, ur) = (a[row].clone(), u[row].clone());
                a[i].iter_mut().zip(&ar).for_each(|(x, y)| *x -= q * y);
                u[i].iter_mut().zip(&ur).for_each(|(x, y)| *x -= q * y);
            }
        }
    }
    a.truncate(r);
    u.truncate(r);
    Hnf { basis: a, combos: u, pivots }
}

/// Integer row echelon form by repeated Euclidean elimination. Returns the
/// reduced rows (pivot rows first, then zero rows), the unimodular transform
/// and the pivot columns.
fn echelon(rows: &[Vec<i64>]) -> (Vec<Vec<i128>>, Vec<Vec<i128>>, Vec<usize>) {
    let m = rows.len();
    let dim = rows.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut u: Vec<Vec<i128>> = (0..m).map(|i| (0..m).map(|j| (i == j) as i128).collect()).collect();
    let mut r = 0;
    let mut pivots = Vec::new();
    for col in 0..dim {
        if r == m {
            break;
        }
        loop {
            let piv = (r..m).filter(|&i| a[i][col] != 0).min_by_key(|&i| a[i][col].abs());
            let Some(p) = piv else { break };
            a.swap(r, p);
            u.swap(r, p);
            let mut done = true;
            for i in r + 1..m {
                if a[i][col] != 0 {
                    let q = a[i][col].div_euclid(a[r][col]);
                    let (ar, ur) = (a[r].clone(), u[r].clone());
                    a[i].iter_mut().zip(&ar).for_each(|(x, y)| *x -= q * y);
                    u[i].iter_mut().zip(&ur).for_each(|(x, y)| *x -= q * y);
                    done &= a[i][col] == 0;
                }
            }
            if done {
                break;
            }
        }
        if a[r][col] != 0 {
            pivots.push(col);
            r += 1;
        }
    }
    (a, u, pivots)
}

impl Hnf {
    /// Integer coordinates of `v` in the basis, if `v` lies in the lattice.
    pub fn solve(&self, v: &[i64]) -> Option<Vec<i128>> {
        let mut rem: Vec<i128> = v.iter().map(|&x| x as i128).collect();
        let mut coef = vec![0i128; self.basis.len()];
        for (i, &p) in self.pivots.iter().enumerate() {
            let b = &self.basis[i];
            // columns before the pivot must already be zero
            if rem[..p].iter().any(|&x| x != 0) {
                return None;
            }
            if rem[p] % b[p] != 0 {
                return None;
            }
            let q = rem[p] / b[p];
            coef[i] = q;
            for c in 0..rem.len() {
                rem[c] -= q * b[c];
            }
        }
        rem.iter().all(|&x| x == 0).then_some(coef)
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        self.solve(v).is_some()
    }

    /// Combination of the original input rows producing `v`.
    pub fn input_combination(&self, v: &[i64]) -> Option<Vec<i128>> {
        let coef = self.solve(v)?;
        let m = self.combos.first().map_or(0, |r| r.len());
        let mut out = vec![0i128; m];
        for (c, row) in coef.iter().zip(&self.combos) {
            for j in 0..m {
                out[j] += c * row[j];
            }
        }
        Some(out)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

/// Basis of the integer kernel `{x ∈ Z^n : A x = 0}` for an `m × n` matrix.
pub fn integer_kernel(a: &[Vec<i64>]) -> Vec<Vec<i128>> {
    let n = a.first().map_or(0, |r| r.len());
    // column operations on A are row operations on Aᵀ
    let at: Vec<Vec<i64>> = (0..n).map(|j| a.iter().map(|r| r[j]).collect()).collect();
    let (_, u, pivots) = echelon(&at);
    u.into_iter().skip(pivots.len()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn even_lattice() {
        let h = hnf(&[vec![4], vec![6]]);
        assert_eq!(h.basis, vec![vec![2]]);
        assert!(!h.contains(&[1]));
        assert!(h.contains(&[-2]));
        let c = h.input_combination(&[2]).unwrap();
        assert_eq!(4 * c[0] + 6 * c[1], 2);
    }

    #[test]
    fn unit_vectors_in_lattice() {
        let h = hnf(&[vec![1, 1], vec![1, -1]]);
        assert!(!h.contains(&[1, 0]));
        assert!(h.contains(&[2, 0]));
        let h = hnf(&[vec![1, 1], vec![0, 1]]);
        assert!(h.contains(&[1, 0]) && h.contains(&[0, -1]));
    }

    #[test]
    fn reifenberg_maps_have_trivial_common_kernel() {
        // (a,b,c) ↦ a+b+c, a+b, b+c
        let m = vec![vec![1, 1, 1], vec![1, 1, 0], vec![0, 1, 1]];
        assert!(integer_kernel(&m).is_empty());
        // any two of them alone share a nontrivial kernel
        let k = integer_kernel(&m[1..]);
        assert_eq!(k.len(), 1);
        let v = &k[0];
        assert_eq!(v[0] + v[1], 0);
        assert_eq!(v[1] + v[2], 0);
    }

    proptest! {
        #[test]
        fn hnf_preserves_lattice(rows in prop::collection::vec(prop::collection::vec(-9i64..9, 3), 1..5)) {
            let h = hnf(&rows);
            for r in &rows {
                prop_assert!(h.contains(r));
            }
            for (b, c) in h.basis.iter().zip(&h.combos) {
                for j in 0..3 {
                    let s: i128 = c.iter().zip(&rows).map(|(ci, r)| ci * r[j] as i128).sum();
                    prop_assert_eq!(s, b[j]);
                }
            }
        }

        #[test]
        fn kernel_vectors_are_annihilated(rows in prop::collection::vec(prop::collection::vec(-5i64..5, 4), 1..4)) {
            for v in integer_kernel(&rows) {
                for r in &rows {
                    let s: i128 = r.iter().zip(&v).map(|(a, b)| *a as i128 * b).sum();
                    prop_assert_eq!(s, 0);
                }
            }
            let rank = hnf(&rows).rank();
            prop_assert_eq!(integer_kernel(&rows).len(), 4 - rank);
        }
    }
}
