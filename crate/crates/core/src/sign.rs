//! Permutations, shuffles and the two Koszul signs.
//!
//! Permutations are 1-based throughout, matching the index conventions of
//! the formulas they implement. `epsilon` is the sign of the graded
//! symmetric action (`m_{s(1)} . ... . m_{s(n)} = eps(s) m_1 . ... . m_n`),
//! `chi` the sign of the graded antisymmetric action; `chi = sgn * epsilon`.

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

/// A permutation of `{1..n}`, stored as the list of images.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (1..=n).collect() }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v == 0 || v > n || seen[v - 1] {
                return Err(Error::Argument(format!("not a permutation: {images:?}")));
            }
            seen[v - 1] = true;
        }
        Ok(Permutation { images })
    }

    pub fn size(&self) -> usize {
        self.images.len()
    }

    /// Image of `i` (1-based).
    pub fn apply(&self, i: usize) -> usize {
        self.images[i - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// `(self . other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.size(), other.size());
        Permutation {
            images: (1..=self.size()).map(|i| self.apply(other.apply(i))).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.size()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v - 1] = i + 1;
        }
        Permutation { images: inv }
    }

    /// The ordinary sign of the permutation.
    pub fn sgn(&self) -> i32 {
        let mut inversions = 0usize;
        for i in 0..self.size() {
            for j in i + 1..self.size() {
                if self.images[i] > self.images[j] {
                    inversions += 1;
                }
            }
        }
        if inversions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// All permutations of `{1..n}` in lexicographic order of image lists.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (1..=n).collect();
        loop {
            out.push(Permutation { images: current.clone() });
            // next_permutation in lexicographic order
            let mut i = n;
            while i > 1 && current[i - 2] >= current[i - 1] {
                i -= 1;
            }
            if i <= 1 {
                break;
            }
            let mut j = n;
            while current[j - 1] <= current[i - 2] {
                j -= 1;
            }
            current.swap(i - 2, j - 1);
            current[i - 1..].reverse();
        }
        out
    }

    /// Permutes a slice: output position `t` receives `items[self(t)-1]`.
    pub fn permute<T: Clone>(&self, items: &[T]) -> Vec<T> {
        assert_eq!(items.len(), self.size());
        self.images.iter().map(|&v| items[v - 1].clone()).collect()
    }
}

fn koszul_parity(images: &[usize], degrees: &[i64], with_sgn: bool) -> i32 {
    let n = images.len();
    let mut parity = 0i64;
    let mut inversions = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            if images[i] > images[j] {
                inversions += 1;
                parity += degrees[images[i] - 1] * degrees[images[j] - 1];
            }
        }
    }
    if with_sgn {
        parity += inversions;
    }
    if parity.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Integer `epsilon(sigma, degrees)` for hot paths.
pub fn epsilon_i(sigma: &Permutation, degrees: &[i64]) -> i32 {
    koszul_parity(&sigma.images, degrees, false)
}

/// Integer `chi(sigma, degrees)` for hot paths.
pub fn chi_i(sigma: &Permutation, degrees: &[i64]) -> i32 {
    koszul_parity(&sigma.images, degrees, true)
}

fn check_sizes(sigma: &Permutation, degrees: &[i64]) -> Result<()> {
    if sigma.size() != degrees.len() {
        return Err(Error::Argument(format!(
            "permutation size {} != degree list length {}",
            sigma.size(),
            degrees.len()
        )));
    }
    Ok(())
}

/// Koszul sign of the graded symmetric action.
pub fn epsilon_sign(sigma: &Permutation, degrees: &[i64]) -> Result<Scalar> {
    check_sizes(sigma, degrees)?;
    Ok(scalar::from_int(epsilon_i(sigma, degrees) as i64))
}

/// Koszul sign of the graded antisymmetric action.
pub fn chi_sign(sigma: &Permutation, degrees: &[i64]) -> Result<Scalar> {
    check_sizes(sigma, degrees)?;
    Ok(scalar::from_int(chi_i(sigma, degrees) as i64))
}

/// All `(k, n-k)`-shuffles: permutations ascending on `1..=k` and on
/// `k+1..=n`. Ordered lexicographically by the first block.
pub fn shuffles(k: usize, n: usize) -> Result<Vec<Permutation>> {
    if k > n {
        return Err(Error::Argument(format!("shuffles: k={k} > n={n}")));
    }
    let mut out = Vec::new();
    let mut subset: Vec<usize> = (1..=k).collect();
    loop {
        let mut images = subset.clone();
        let mut rest: Vec<usize> = (1..=n).filter(|v| !subset.contains(v)).collect();
        images.append(&mut rest);
        out.push(Permutation { images });
        // next k-subset of {1..n} in lexicographic order
        if k == 0 {
            break;
        }
        let mut i = k;
        while i > 0 && subset[i - 1] == n - (k - i) {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        subset[i - 1] += 1;
        for j in i..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar;

    /// Independent oracle: decompose sigma into adjacent transpositions and
    /// fold the two-element rule for each.
    fn epsilon_by_transpositions(sigma: &Permutation, degrees: &[i64]) -> i32 {
        let mut arr: Vec<usize> = sigma.images().to_vec();
        let mut sign = 1i32;
        // bubble back to identity; each adjacent swap of entries (a, b)
        // contributes (-1)^{deg_a * deg_b}
        let n = arr.len();
        loop {
            let mut swapped = false;
            for i in 0..n - 1 {
                if arr[i] > arr[i + 1] {
                    let (a, b) = (arr[i], arr[i + 1]);
                    if (degrees[a - 1] * degrees[b - 1]).rem_euclid(2) == 1 {
                        sign = -sign;
                    }
                    arr.swap(i, i + 1);
                    swapped = true;
                }
            }
            if !swapped {
                break;
            }
        }
        sign
    }

    fn deterministic_degree_lists(n: usize) -> Vec<Vec<i64>> {
        let mut lists = Vec::new();
        for seed in 0..6u64 {
            let mut degs = Vec::with_capacity(n);
            let mut state = seed.wrapping_mul(0x9e37_79b9).wrapping_add(17);
            for _ in 0..n {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                degs.push(((state >> 33) % 5) as i64 - 2);
            }
            lists.push(degs);
        }
        lists
    }

    #[test]
    fn identity_gives_plus_one() {
        let id = Permutation::identity(4);
        assert_eq!(epsilon_sign(&id, &[1, 2, 3, 4]).unwrap(), scalar::one());
        assert_eq!(chi_sign(&id, &[1, 2, 3, 4]).unwrap(), scalar::one());
    }

    #[test]
    fn swap_fixtures() {
        let swap = Permutation::from_images(vec![2, 1]).unwrap();
        // odd-odd symmetric swap picks up the Koszul sign
        assert_eq!(epsilon_sign(&swap, &[1, 1]).unwrap(), -scalar::one());
        // even-even antisymmetric swap is forced to -1
        assert_eq!(chi_sign(&swap, &[0, 0]).unwrap(), -scalar::one());
        assert_eq!(chi_sign(&swap, &[1, 1]).unwrap(), scalar::one());
    }

    #[test]
    fn epsilon_matches_transposition_oracle_on_sigma5() {
        for sigma in Permutation::all(5) {
            for degs in deterministic_degree_lists(5) {
                assert_eq!(
                    epsilon_i(&sigma, &degs),
                    epsilon_by_transpositions(&sigma, &degs),
                    "sigma={sigma:?} degs={degs:?}"
                );
            }
        }
    }

    #[test]
    fn chi_is_sgn_times_epsilon() {
        for sigma in Permutation::all(4) {
            for degs in deterministic_degree_lists(4) {
                assert_eq!(chi_i(&sigma, &degs), sigma.sgn() * epsilon_i(&sigma, &degs));
            }
        }
    }

    /// chi(sigma, a_1..a_n) = (-1)^{(n-1)(a_1 + a_{sigma(1)}) + ... + 1*(a_{n-1} + a_{sigma(n-1)})}
    ///                        * epsilon(sigma, a_1 - 1, ..., a_n - 1).
    #[test]
    fn chi_epsilon_relation_through_shift() {
        for n in 1..=6usize {
            for sigma in Permutation::all(n) {
                for degs in deterministic_degree_lists(n) {
                    let shifted: Vec<i64> = degs.iter().map(|d| d - 1).collect();
                    let mut exp = 0i64;
                    for i in 1..n {
                        exp += (n - i) as i64 * (degs[i - 1] + degs[sigma.apply(i) - 1]);
                    }
                    let lhs = chi_i(&sigma, &degs) as i64;
                    let rhs = (if exp.rem_euclid(2) == 0 { 1 } else { -1 })
                        * epsilon_i(&sigma, &shifted) as i64;
                    assert_eq!(lhs, rhs, "n={n} sigma={sigma:?} degs={degs:?}");
                }
            }
        }
    }

    /// eps(tau.sigma, m) = eps(tau, m) * eps(sigma, m o tau), i.e. the signs
    /// compose along the action.
    #[test]
    fn action_composition_property() {
        for tau in Permutation::all(4) {
            for sigma in Permutation::all(4) {
                for degs in deterministic_degree_lists(4) {
                    let permuted: Vec<i64> = tau.permute(&degs);
                    let lhs = epsilon_i(&tau.compose(&sigma), &degs);
                    let rhs = epsilon_i(&tau, &degs) * epsilon_i(&sigma, &permuted);
                    assert_eq!(lhs, rhs);
                    let lhs_chi = chi_i(&tau.compose(&sigma), &degs);
                    let rhs_chi = chi_i(&tau, &degs) * chi_i(&sigma, &permuted);
                    assert_eq!(lhs_chi, rhs_chi);
                }
            }
        }
    }

    #[test]
    fn shuffle_counts_and_blocks() {
        let sh = shuffles(1, 2).unwrap();
        assert_eq!(sh.len(), 2);
        assert_eq!(sh[0], Permutation::identity(2));
        assert_eq!(sh[1], Permutation::from_images(vec![2, 1]).unwrap());

        let sh = shuffles(2, 3).unwrap();
        assert_eq!(sh.len(), 3);
        for s in &sh {
            assert!(s.apply(1) < s.apply(2));
        }

        for n in 0..=6usize {
            assert_eq!(shuffles(0, n).unwrap(), vec![Permutation::identity(n)]);
            for k in 0..=n {
                let count = shuffles(k, n).unwrap().len();
                let mut expected = 1usize;
                for i in 0..k {
                    expected = expected * (n - i) / (i + 1);
                }
                assert_eq!(count, expected, "C({n},{k})");
            }
        }
        assert!(shuffles(3, 2).is_err());
    }

    #[test]
    fn all_permutations_count() {
        assert_eq!(Permutation::all(4).len(), 24);
        assert_eq!(Permutation::all(1).len(), 1);
    }
}
