//! Oriented binary trees, their sign invariants, evaluation against
//! families of bilinear maps, and the grafting bijection.
//!
//! Orientation is encoded purely by child order: the first child is the
//! branch written `1`, the second the branch written `2`. A node is
//! addressed by its [`RamPath`], the word of branch choices from the root;
//! the derived order on paths (shorter prefixes first, then by digit) is
//! exactly the order all formulas below refer to.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graded::{GradedSpace, SparseVec};
use crate::multimap::{canonical_tuples, Flavor, MultiMap};
use crate::scalar::{self, Scalar};
use crate::sign::Permutation;

/// Address of a node: the branch word from the root, over the digits 1, 2.
///
/// The derived lexicographic order (a proper prefix sorts first) coincides
/// with the order by the real-valued node values it replaces.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct RamPath(pub Vec<u8>);

impl RamPath {
    pub fn root() -> Self {
        RamPath(Vec::new())
    }

    pub fn child(&self, branch: u8) -> Self {
        assert!(branch == 1 || branch == 2);
        let mut w = self.0.clone();
        w.push(branch);
        RamPath(w)
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }
}

impl fmt::Display for RamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "root");
        }
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// A full binary tree: every internal node has exactly two ordered children.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrientedTree {
    Leaf,
    Node(Box<OrientedTree>, Box<OrientedTree>),
}

use OrientedTree::{Leaf, Node};

impl OrientedTree {
    pub fn leaf() -> Self {
        Leaf
    }

    pub fn node(first: OrientedTree, second: OrientedTree) -> Self {
        Node(Box::new(first), Box::new(second))
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Leaf => 1,
            Node(a, b) => a.leaf_count() + b.leaf_count(),
        }
    }

    pub fn ramification_count(&self) -> usize {
        self.leaf_count() - 1
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Leaf)
    }

    /// The subtree addressed by `path`.
    pub fn subtree(&self, path: &RamPath) -> Result<&OrientedTree> {
        let mut cur = self;
        for &b in &path.0 {
            match cur {
                Leaf => return Err(Error::Argument(format!("path {path} leaves the tree"))),
                Node(a, c) => cur = if b == 1 { a } else { c },
            }
        }
        Ok(cur)
    }

    /// Addresses of all ramifications (internal nodes), in path order.
    pub fn ram_paths(&self) -> Vec<RamPath> {
        let mut out = Vec::new();
        fn rec(t: &OrientedTree, here: RamPath, out: &mut Vec<RamPath>) {
            if let Node(a, b) = t {
                out.push(here.clone());
                rec(a, here.child(1), out);
                rec(b, here.child(2), out);
            }
        }
        rec(self, RamPath::root(), &mut out);
        out.sort();
        out
    }

    /// Addresses of the leaves in increasing path order; entry `i - 1` is
    /// the address of leaf `i`.
    pub fn leaf_paths(&self) -> Vec<RamPath> {
        let mut out = Vec::new();
        fn rec(t: &OrientedTree, here: RamPath, out: &mut Vec<RamPath>) {
            match t {
                Leaf => out.push(here),
                Node(a, b) => {
                    rec(a, here.child(1), out);
                    rec(b, here.child(2), out);
                }
            }
        }
        rec(self, RamPath::root(), &mut out);
        out
    }
}

impl fmt::Display for OrientedTree {
    /// Parenthesis grammar: `tree := "." | "(" tree tree ")"`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Leaf => write!(f, "."),
            Node(a, b) => write!(f, "({a}{b})"),
        }
    }
}

impl FromStr for OrientedTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        fn parse(bytes: &[u8], pos: &mut usize) -> Result<OrientedTree> {
            match bytes.get(*pos) {
                Some(b'.') => {
                    *pos += 1;
                    Ok(Leaf)
                }
                Some(b'(') => {
                    *pos += 1;
                    let a = parse(bytes, pos)?;
                    let b = parse(bytes, pos)?;
                    if bytes.get(*pos) != Some(&b')') {
                        return Err(Error::Argument("expected `)`".into()));
                    }
                    *pos += 1;
                    Ok(OrientedTree::node(a, b))
                }
                _ => Err(Error::Argument("expected `.` or `(`".into())),
            }
        }
        let bytes = s.as_bytes();
        let mut pos = 0;
        let t = parse(bytes, &mut pos)?;
        if pos != bytes.len() {
            return Err(Error::Argument(format!("trailing input in tree `{s}`")));
        }
        Ok(t)
    }
}

/// All oriented trees with `n` leaves; `|Ot(n)|` is the `(n-1)`-st Catalan
/// number. Each tree is reconstructed by addition from smaller ones.
pub fn enumerate_ot(n: usize) -> Result<Vec<OrientedTree>> {
    if n == 0 {
        return Err(Error::Argument("trees have at least one leaf".into()));
    }
    fn build(n: usize, memo: &mut Vec<Option<Vec<OrientedTree>>>) -> Vec<OrientedTree> {
        if let Some(cached) = &memo[n] {
            return cached.clone();
        }
        let mut out = Vec::new();
        if n == 1 {
            out.push(Leaf);
        } else {
            for k in 1..n {
                for a in build(k, memo) {
                    for b in build(n - k, memo) {
                        out.push(OrientedTree::node(a.clone(), b.clone()));
                    }
                }
            }
        }
        memo[n] = Some(out.clone());
        out
    }
    let mut memo = vec![None; n + 1];
    Ok(build(n, &mut memo))
}

/// `s(i)`: the number of ramifications strictly smaller than leaf `i` in
/// the path order (1-based `i`).
fn s_leaf(t: &OrientedTree, i: usize) -> Result<usize> {
    let leaves = t.leaf_paths();
    if i == 0 || i > leaves.len() {
        return Err(Error::Argument(format!("leaf index {i} out of range")));
    }
    let target = &leaves[i - 1];
    Ok(t.ram_paths().iter().filter(|p| *p < target).count())
}

/// `w(i) = s(i) - (i - 1)` for a tree with at least two leaves.
pub fn w_leaf(t: &OrientedTree, i: usize) -> Result<i64> {
    if t.leaf_count() < 2 {
        return Err(Error::Argument("w is defined for trees with at least 2 leaves".into()));
    }
    Ok(s_leaf(t, i)? as i64 - (i as i64 - 1))
}

/// `w` of a ramification: remove its subtree and read `w` of the leaf it
/// leaves behind. Cross-checkable against the count of 1s in its path.
pub fn w_ram(t: &OrientedTree, k: &RamPath) -> Result<i64> {
    if k.0.is_empty() {
        return Err(Error::Argument("w of the root is not defined".into()));
    }
    let reduced = subtract(t, k)?;
    let leaves = reduced.leaf_paths();
    let pos = leaves
        .iter()
        .position(|p| p == k)
        .ok_or_else(|| Error::Argument(format!("path {k} is not a ramification")))?;
    w_leaf(&reduced, pos + 1)
}

/// The sign `e(t) = (-1)^{w(1) + ... + w(n)}`, with `e` of the single leaf
/// set to `+1`.
pub fn e_sign(t: &OrientedTree) -> Scalar {
    if t.leaf_count() < 2 {
        return scalar::one();
    }
    let n = t.leaf_count();
    let mut exp = 0i64;
    for i in 1..=n {
        exp += w_leaf(t, i).expect("leaf in range");
    }
    scalar::neg_one_pow(exp)
}

/// Root-joins two trees; leaf counts add and the sum is not commutative.
pub fn add_trees(a: &OrientedTree, b: &OrientedTree) -> OrientedTree {
    OrientedTree::node(a.clone(), b.clone())
}

/// Replaces the subtree at `k` (which must be a ramification) by a leaf.
pub fn subtract(t: &OrientedTree, k: &RamPath) -> Result<OrientedTree> {
    fn rec(t: &OrientedTree, word: &[u8]) -> Result<OrientedTree> {
        match word.split_first() {
            None => match t {
                Leaf => Err(Error::Argument("cannot subtract at a leaf".into())),
                Node(_, _) => Ok(Leaf),
            },
            Some((&b, rest)) => match t {
                Leaf => Err(Error::Argument("path leaves the tree".into())),
                Node(x, y) => {
                    if b == 1 {
                        Ok(OrientedTree::node(rec(x, rest)?, (**y).clone()))
                    } else {
                        Ok(OrientedTree::node((**x).clone(), rec(y, rest)?))
                    }
                }
            },
        }
    }
    rec(t, &k.0)
}

/// Grafts `inners[i]` onto leaf `i + 1` of `outer` (in path order).
pub fn compose_trees(outer: &OrientedTree, inners: &[OrientedTree]) -> Result<OrientedTree> {
    if inners.len() != outer.leaf_count() {
        return Err(Error::Argument(format!(
            "composition needs {} inner trees, got {}",
            outer.leaf_count(),
            inners.len()
        )));
    }
    fn rec(t: &OrientedTree, inners: &[OrientedTree], next: &mut usize) -> OrientedTree {
        match t {
            Leaf => {
                let r = inners[*next].clone();
                *next += 1;
                r
            }
            Node(a, b) => {
                let x = rec(a, inners, next);
                let y = rec(b, inners, next);
                OrientedTree::node(x, y)
            }
        }
    }
    let mut next = 0;
    Ok(rec(outer, inners, &mut next))
}

/// A family of bilinear maps indexed by the ramifications of a companion
/// tree.
#[derive(Debug, Clone)]
pub struct BilinearFamily {
    pub assignment: BTreeMap<RamPath, MultiMap>,
}

impl BilinearFamily {
    pub fn new(assignment: BTreeMap<RamPath, MultiMap>) -> Result<Self> {
        for (path, b) in &assignment {
            if b.arity != 2 {
                return Err(Error::Argument(format!("family map at {path} is not bilinear")));
            }
        }
        Ok(BilinearFamily { assignment })
    }

    /// Uniform family: the same bilinear map at every ramification of `t`.
    pub fn uniform(t: &OrientedTree, b: &MultiMap) -> Result<Self> {
        let mut assignment = BTreeMap::new();
        for p in t.ram_paths() {
            assignment.insert(p, b.clone());
        }
        BilinearFamily::new(assignment)
    }

    /// Uniform family with a different map at the root.
    pub fn rooted(t: &OrientedTree, root: &MultiMap, branch: &MultiMap) -> Result<Self> {
        let mut fam = BilinearFamily::uniform(t, branch)?;
        if !t.is_leaf() {
            fam.assignment.insert(RamPath::root(), root.clone());
        }
        BilinearFamily::new(fam.assignment)
    }

    fn get(&self, path: &RamPath) -> Result<&MultiMap> {
        self.assignment
            .get(path)
            .ok_or_else(|| Error::Argument(format!("family misses an assignment at {path}")))
    }

    /// Total linear degree of the sub-family at and below `path`.
    fn degree_below(&self, t: &OrientedTree, path: &RamPath) -> Result<i64> {
        let sub = t.subtree(path)?;
        let mut deg = 0;
        for p in sub.ram_paths() {
            let mut abs = path.clone();
            abs.0.extend_from_slice(&p.0);
            deg += self.get(&abs)?.lin_degree;
        }
        Ok(deg)
    }
}

fn eval_rec(
    t: &OrientedTree,
    path: &RamPath,
    root_tree: &OrientedTree,
    family: &BilinearFamily,
    args: &[SparseVec],
    space: &GradedSpace,
) -> Result<SparseVec> {
    match t {
        Leaf => Ok(args[0].clone()),
        Node(a, b) => {
            let split = a.leaf_count();
            let left = eval_rec(a, &path.child(1), root_tree, family, &args[..split], space)?;
            let right = eval_rec(b, &path.child(2), root_tree, family, &args[split..], space)?;
            // Koszul sign: the right branch map moves past the left block
            let right_degree = family.degree_below(root_tree, &path.child(2))?;
            let left_arg_degree: i64 = args[..split]
                .iter()
                .map(|v| v.homogeneous_degree(space).unwrap_or(0))
                .sum();
            let sign = scalar::neg_one_pow(right_degree * left_arg_degree);
            let b0 = family.get(path)?;
            Ok(b0.eval(&[left, right]).scale(&sign))
        }
    }
}

/// Evaluates the tree against a family of bilinear maps: the n-linear map
/// obtained by feeding each ramification its assigned map, with the Koszul
/// signs of the tensor convention. The result is a plain multimap.
pub fn evaluate(t: &OrientedTree, family: &BilinearFamily) -> Result<MultiMap> {
    let n = t.leaf_count();
    let ram_paths = t.ram_paths();
    for p in &ram_paths {
        family.get(p)?;
    }
    if family.assignment.len() != ram_paths.len() {
        return Err(Error::Argument(
            "family domain must be exactly the ramification set".into(),
        ));
    }
    let Some(first) = family.assignment.values().next() else {
        return Err(Error::Argument(
            "evaluate needs a ramification; the one-leaf tree acts as the identity".into(),
        ));
    };
    let space = first.source.clone();
    let target = first.target.clone();
    let lin_degree: i64 = family.assignment.values().map(|b| b.lin_degree).sum();
    let mut out = MultiMap::zero(space.clone(), target, n, lin_degree, Flavor::Plain);
    for key in canonical_tuples(&space, n, Flavor::Plain) {
        let args: Vec<SparseVec> = key.iter().map(|&i| SparseVec::unit(i)).collect();
        let val = eval_rec(t, &RamPath::root(), t, family, &args, &space)?;
        if !val.is_zero() {
            out.add_value(&key, &val)?;
        }
    }
    Ok(out)
}

/// Memoizing evaluator for tree sums with a uniform branch map.
///
/// Values on basis tuples are cached across trees, permutations and outer
/// sums; the transfer formulas lean on this heavily.
pub struct TreeEvaluator<'a> {
    space: GradedSpace,
    branch: &'a MultiMap,
    memo: std::collections::HashMap<(OrientedTree, Vec<usize>), SparseVec>,
}

impl<'a> TreeEvaluator<'a> {
    pub fn new(space: GradedSpace, branch: &'a MultiMap) -> Self {
        assert_eq!(branch.arity, 2);
        TreeEvaluator { space, branch, memo: std::collections::HashMap::new() }
    }

    /// Value on a basis tuple of the tree with `branch` at every
    /// ramification.
    pub fn eval_basis(&mut self, t: &OrientedTree, key: &[usize]) -> SparseVec {
        if t.is_leaf() {
            return SparseVec::unit(key[0]);
        }
        let memo_key = (t.clone(), key.to_vec());
        if let Some(v) = self.memo.get(&memo_key) {
            return v.clone();
        }
        let (a, b) = match t {
            Node(a, b) => (a, b),
            Leaf => unreachable!(),
        };
        let split = a.leaf_count();
        let left = self.eval_basis(a, &key[..split]);
        let right = self.eval_basis(b, &key[split..]);
        let right_degree = b.ramification_count() as i64 * self.branch.lin_degree;
        let left_arg_degree: i64 = key[..split].iter().map(|&i| self.space.degree(i)).sum();
        let sign = scalar::neg_one_pow(right_degree * left_arg_degree);
        let val = self.branch.eval(&[left, right]).scale(&sign);
        self.memo.insert(memo_key, val.clone());
        val
    }

    /// Same, but with a separate bilinear map applied at the root.
    pub fn eval_basis_rooted(
        &mut self,
        t: &OrientedTree,
        root: &MultiMap,
        key: &[usize],
    ) -> SparseVec {
        match t {
            Leaf => SparseVec::unit(key[0]),
            Node(a, b) => {
                let split = a.leaf_count();
                let left = self.eval_basis(a, &key[..split]);
                let right = self.eval_basis(b, &key[split..]);
                let right_degree = b.ramification_count() as i64 * self.branch.lin_degree;
                let left_arg_degree: i64 =
                    key[..split].iter().map(|&i| self.space.degree(i)).sum();
                let sign = scalar::neg_one_pow(right_degree * left_arg_degree);
                root.eval(&[left, right]).scale(&sign)
            }
        }
    }
}

/// The sign relating the evaluation of a composed tree to the tensor
/// product of the factor evaluations: `(-1)` to the power
/// `sum_i (deg B^{(i)}) * (sum of outer family degrees at ramifications
/// greater than leaf i of the outer tree)`.
pub fn composition_sign(
    outer: &OrientedTree,
    outer_family_degrees: &BTreeMap<RamPath, i64>,
    inner_total_degrees: &[i64],
) -> Result<Scalar> {
    let n = outer.leaf_count();
    if inner_total_degrees.len() != n {
        return Err(Error::Argument(format!(
            "composition_sign: {} inner degrees for {} leaves",
            inner_total_degrees.len(),
            n
        )));
    }
    let rams = outer.ram_paths();
    for p in &rams {
        if !outer_family_degrees.contains_key(p) {
            return Err(Error::Argument(format!("missing outer family degree at {p}")));
        }
    }
    if outer_family_degrees.len() != rams.len() {
        return Err(Error::Argument(
            "outer degrees must cover exactly the ramifications".into(),
        ));
    }
    let leaves = outer.leaf_paths();
    let mut exp = 0i64;
    for (i, leaf) in leaves.iter().enumerate().take(n - 1) {
        let later: i64 = outer_family_degrees
            .iter()
            .filter(|(p, _)| *p > leaf)
            .map(|(_, d)| *d)
            .sum();
        exp += inner_total_degrees[i] * later;
    }
    Ok(scalar::neg_one_pow(exp))
}

/// The 6-tuple side of the grafting bijection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraftData {
    pub k: usize,
    pub phi: OrientedTree,
    pub psi: OrientedTree,
    pub rho: Permutation,
    pub gamma: Permutation,
    pub delta: Permutation,
}

/// Decomposes a tree with a marked non-root ramification and a permutation
/// into `(k, phi, psi, rho, gamma, delta)`.
pub fn graft_decompose(
    big: &OrientedTree,
    k_path: &RamPath,
    sigma: &Permutation,
) -> Result<GraftData> {
    let n = big.leaf_count();
    if sigma.size() != n {
        return Err(Error::Argument("permutation size must match the leaf count".into()));
    }
    if k_path.0.is_empty() {
        return Err(Error::Argument("the marked ramification must not be the root".into()));
    }
    let sub = big.subtree(k_path)?;
    if sub.is_leaf() {
        return Err(Error::Argument("the marked path addresses a leaf".into()));
    }
    let k = sub.leaf_count();
    if k < 2 || k > n - 1 {
        return Err(Error::Argument(format!(
            "subtree leaf count {k} outside 2..={}",
            n - 1
        )));
    }
    let phi = sub.clone();
    let psi = subtract(big, k_path)?;
    let l = n + 1 - k;
    // r = number of leaves of the big tree smaller than the marked node
    let r = big.leaf_paths().iter().filter(|p| *p < k_path).count();
    // rho: the shuffle whose first block is { sigma(r+1..r+k) } sorted
    let mut first: Vec<usize> = (1..=k).map(|i| sigma.apply(r + i)).collect();
    first.sort_unstable();
    let mut images = first.clone();
    images.extend((1..=n).filter(|v| !first.contains(v)));
    let rho = Permutation::from_images(images)?;
    let rho_inv = rho.inverse();
    // delta(i) = rho^{-1}(sigma(r + i))
    let delta = Permutation::from_images(
        (1..=k).map(|i| rho_inv.apply(sigma.apply(r + i))).collect(),
    )?;
    // gamma per the three displayed cases
    let mut gamma_images = Vec::with_capacity(l);
    for i in 1..=l {
        let v = if i <= r {
            rho_inv.apply(sigma.apply(i)) - k + 1
        } else if i == r + 1 {
            1
        } else {
            rho_inv.apply(sigma.apply(i + k - 1)) - k + 1
        };
        gamma_images.push(v);
    }
    let gamma = Permutation::from_images(gamma_images)?;
    Ok(GraftData { k, phi, psi, rho, gamma, delta })
}

/// Inverse of [`graft_decompose`]: rebuilds the tree
/// `psi o (leaf, ..., leaf, phi, leaf, ..., leaf)`, the marked ramification
/// and the permutation.
pub fn graft_compose(data: &GraftData) -> Result<(OrientedTree, RamPath, Permutation)> {
    let k = data.k;
    let l = data.psi.leaf_count();
    let n = k + l - 1;
    if k < 2 || k > n - 1 {
        return Err(Error::Argument(format!("k = {k} outside 2..={}", n - 1)));
    }
    if data.phi.leaf_count() != k {
        return Err(Error::Argument("phi must have k leaves".into()));
    }
    if data.gamma.size() != l || data.delta.size() != k || data.rho.size() != n {
        return Err(Error::Argument("permutation sizes do not fit".into()));
    }
    // rho must be a (k, n)-shuffle
    for i in 1..k {
        if data.rho.apply(i) >= data.rho.apply(i + 1) {
            return Err(Error::Argument("rho is not ascending on its first block".into()));
        }
    }
    for i in k + 1..n {
        if data.rho.apply(i) >= data.rho.apply(i + 1) {
            return Err(Error::Argument("rho is not ascending on its second block".into()));
        }
    }
    let r = data.gamma.inverse().apply(1) - 1;
    let mut inners = vec![OrientedTree::leaf(); l];
    inners[r] = data.phi.clone();
    let big = compose_trees(&data.psi, &inners)?;
    let k_path = data.psi.leaf_paths()[r].clone();
    let mut sigma_images = Vec::with_capacity(n);
    for i in 1..=n {
        let v = if i <= r {
            data.rho.apply(data.gamma.apply(i) + k - 1)
        } else if i <= r + k {
            data.rho.apply(data.delta.apply(i - r))
        } else {
            data.rho.apply(data.gamma.apply(i - (k - 1)) + k - 1)
        };
        sigma_images.push(v);
    }
    let sigma = Permutation::from_images(sigma_images)?;
    Ok((big, k_path, sigma))
}

/// The two displayed signs relating the split evaluation
/// `psi(B') o gamma o (phi(B'') o delta (x) 1 ...) o rho` to
/// `Phi(B) o sigma`: the first is `(-1)^{r + rk}`, the second additionally
/// moves the total degree of the grafted family past the maps sitting at
/// ramifications greater than the graft point.
pub fn wiwo_signs(
    r: usize,
    k: usize,
    phi_family_degree: i64,
    greater_ram_degrees: i64,
) -> (Scalar, Scalar) {
    let first = scalar::neg_one_pow((r + r * k) as i64);
    let second = &first * scalar::neg_one_pow(greater_ram_degrees * phi_family_degree);
    (first, second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar;

    fn left_comb3() -> OrientedTree {
        "((..).)".parse().unwrap()
    }

    fn right_comb3() -> OrientedTree {
        "(.(..))".parse().unwrap()
    }

    fn beta() -> OrientedTree {
        "(..)".parse().unwrap()
    }

    #[test]
    fn enumerate_counts_are_catalan() {
        let expected = [1usize, 1, 2, 5, 14, 42, 132, 429, 1430, 4862];
        for (i, &c) in expected.iter().enumerate() {
            assert_eq!(enumerate_ot(i + 1).unwrap().len(), c, "n = {}", i + 1);
        }
        assert!(enumerate_ot(0).is_err());
        assert_eq!(enumerate_ot(2).unwrap(), vec![beta()]);
    }

    #[test]
    fn leaf_paths_fixtures() {
        assert_eq!(Leaf.leaf_paths(), vec![RamPath::root()]);
        assert_eq!(beta().leaf_paths(), vec![RamPath(vec![1]), RamPath(vec![2])]);
        assert_eq!(
            left_comb3().leaf_paths(),
            vec![RamPath(vec![1, 1]), RamPath(vec![1, 2]), RamPath(vec![2])]
        );
    }

    #[test]
    fn w_leaf_fixtures() {
        assert_eq!(w_leaf(&beta(), 1).unwrap(), 1);
        assert_eq!(w_leaf(&beta(), 2).unwrap(), 0);
        assert!(w_leaf(&beta(), 3).is_err());
        assert!(w_leaf(&Leaf, 1).is_err());
    }

    #[test]
    fn w_matches_count_of_ones_everywhere() {
        for n in 2..=6usize {
            for t in enumerate_ot(n).unwrap() {
                for (i, p) in t.leaf_paths().iter().enumerate() {
                    assert_eq!(w_leaf(&t, i + 1).unwrap(), p.ones() as i64, "{t} leaf {}", i + 1);
                }
                for p in t.ram_paths() {
                    if !p.0.is_empty() {
                        assert_eq!(w_ram(&t, &p).unwrap(), p.ones() as i64, "{t} at {p}");
                    }
                }
            }
        }
    }

    #[test]
    fn e_sign_fixtures() {
        assert_eq!(e_sign(&Leaf), scalar::one());
        assert_eq!(e_sign(&beta()), -scalar::one());
        assert_eq!(e_sign(&left_comb3()), -scalar::one());
        assert_eq!(e_sign(&right_comb3()), scalar::one());
    }

    #[test]
    fn e_sign_addition_follows_left_leaf_parity() {
        // e(a + b) = (-1)^{leaves(a)} e(a) e(b); the plain product rule with
        // a fixed minus sign fails already at beta + leaf.
        for na in 1..=4usize {
            for nb in 1..=4usize {
                for a in enumerate_ot(na).unwrap() {
                    for b in enumerate_ot(nb).unwrap() {
                        let sum = add_trees(&a, &b);
                        let expected = scalar::neg_one_pow(na as i64) * e_sign(&a) * e_sign(&b);
                        assert_eq!(e_sign(&sum), expected, "{a} + {b}");
                    }
                }
            }
        }
        let counterexample = add_trees(&beta(), &Leaf);
        assert_ne!(
            e_sign(&counterexample),
            -e_sign(&beta()) * e_sign(&Leaf),
            "the unsigned product rule does not hold for beta + leaf"
        );
    }

    #[test]
    fn addition_fixtures() {
        assert_eq!(add_trees(&Leaf, &Leaf), beta());
        assert_eq!(add_trees(&beta(), &Leaf), left_comb3());
        assert_ne!(add_trees(&beta(), &Leaf), add_trees(&Leaf, &beta()));
        for na in 1..=4usize {
            for nb in 1..=4usize {
                let a = &enumerate_ot(na).unwrap()[0];
                let b = &enumerate_ot(nb).unwrap()[0];
                assert_eq!(add_trees(a, b).leaf_count(), na + nb);
            }
        }
    }

    #[test]
    fn subtraction_fixtures() {
        assert_eq!(subtract(&beta(), &RamPath::root()).unwrap(), Leaf);
        assert_eq!(subtract(&left_comb3(), &RamPath(vec![1])).unwrap(), beta());
        assert!(subtract(&beta(), &RamPath(vec![1])).is_err()); // a leaf
        for n in 2..=6usize {
            for t in enumerate_ot(n).unwrap() {
                for p in t.ram_paths() {
                    let l = t.subtree(&p).unwrap().leaf_count();
                    let reduced = subtract(&t, &p).unwrap();
                    assert_eq!(reduced.leaf_count(), n - l + 1);
                }
            }
        }
    }

    #[test]
    fn composition_fixtures() {
        let t = left_comb3();
        let taus = vec![Leaf, Leaf, Leaf];
        assert_eq!(compose_trees(&t, &taus).unwrap(), t);
        assert_eq!(compose_trees(&Leaf, &[right_comb3()]).unwrap(), right_comb3());
        assert_eq!(compose_trees(&beta(), &[beta(), Leaf]).unwrap(), left_comb3());
        assert!(compose_trees(&beta(), &[Leaf]).is_err());
    }

    #[test]
    fn paren_grammar_round_trip() {
        for n in 1..=6usize {
            for t in enumerate_ot(n).unwrap() {
                let s = t.to_string();
                let back: OrientedTree = s.parse().unwrap();
                assert_eq!(back, t);
            }
        }
        assert!("((..)".parse::<OrientedTree>().is_err());
        assert!("(..)junk".parse::<OrientedTree>().is_err());
        assert!("x".parse::<OrientedTree>().is_err());
    }

    #[test]
    fn graft_round_trip_exhaustive() {
        for n in [3usize, 4] {
            let mut triples = Vec::new();
            for t in enumerate_ot(n).unwrap() {
                for p in t.ram_paths() {
                    if p.0.is_empty() {
                        continue;
                    }
                    for sigma in Permutation::all(n) {
                        triples.push((t.clone(), p.clone(), sigma));
                    }
                }
            }
            let expected = if n == 3 { 12 } else { 240 };
            assert_eq!(triples.len(), expected);

            let mut tuples = std::collections::BTreeSet::new();
            for (t, p, sigma) in &triples {
                let data = graft_decompose(t, p, sigma).unwrap();
                let (t2, p2, sigma2) = graft_compose(&data).unwrap();
                assert_eq!((&t2, &p2, &sigma2), (t, p, sigma), "round trip at {t} {p}");
                tuples.insert(format!(
                    "{}|{}|{}|{:?}|{:?}|{:?}",
                    data.k, data.phi, data.psi, data.rho, data.gamma, data.delta
                ));
            }
            assert_eq!(tuples.len(), expected);

            // surjectivity: every admissible 6-tuple arises and round-trips
            let mut count = 0usize;
            for k in 2..=n - 1 {
                let l = n + 1 - k;
                for phi in enumerate_ot(k).unwrap() {
                    for psi in enumerate_ot(l).unwrap() {
                        for rho in crate::sign::shuffles(k, n).unwrap() {
                            for gamma in Permutation::all(l) {
                                for delta in Permutation::all(k) {
                                    let data = GraftData {
                                        k,
                                        phi: phi.clone(),
                                        psi: psi.clone(),
                                        rho: rho.clone(),
                                        gamma: gamma.clone(),
                                        delta: delta.clone(),
                                    };
                                    let (t, p, sigma) = graft_compose(&data).unwrap();
                                    let back = graft_decompose(&t, &p, &sigma).unwrap();
                                    assert_eq!(back, data);
                                    count += 1;
                                }
                            }
                        }
                    }
                }
            }
            assert_eq!(count, expected);
        }
    }

    #[test]
    fn graft_fixture_left_comb() {
        let t = left_comb3();
        let data = graft_decompose(&t, &RamPath(vec![1]), &Permutation::identity(3)).unwrap();
        assert_eq!(data.k, 2);
        assert_eq!(data.phi, beta());
        assert_eq!(data.psi, beta());
        assert_eq!(data.rho, Permutation::identity(3));
        assert_eq!(data.gamma, Permutation::identity(2));
        assert_eq!(data.delta, Permutation::identity(2));
    }

    #[test]
    fn wiwo_trivial_cases() {
        let (s1, _) = wiwo_signs(0, 3, -1, 5);
        assert_eq!(s1, scalar::one());
        let (s1, s2) = wiwo_signs(2, 2, 4, 6); // all even degrees
        assert_eq!(s1, s2);
    }
}
