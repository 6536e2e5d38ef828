//! Sparse degree-homogeneous multilinear maps.
//!
//! Graded symmetric and antisymmetric maps are stored on canonical index
//! tuples only: weakly increasing sequences where, for the antisymmetric
//! flavor, even-degree indices never repeat and, for the symmetric flavor,
//! odd-degree indices never repeat. Evaluation on an arbitrary tuple sorts
//! it into canonical form and multiplies by the Koszul sign (`chi` for
//! antisymmetric, `epsilon` for symmetric maps). The `Plain` flavor stores
//! full tuples and carries no symmetry; it is the carrier for intermediate
//! compositions that have not been (anti)symmetrized yet.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::graded::{GradedSpace, LinearMap, SparseVec};
use crate::scalar::{self, Scalar};
use crate::sign::{self, Permutation};

/// Symmetry flavor of a multilinear map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Symmetric,
    Antisymmetric,
    Plain,
}

/// Which Koszul sign a permutation action carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignRule {
    Epsilon,
    Chi,
}

impl SignRule {
    pub fn of_flavor(flavor: Flavor) -> Option<SignRule> {
        match flavor {
            Flavor::Symmetric => Some(SignRule::Epsilon),
            Flavor::Antisymmetric => Some(SignRule::Chi),
            Flavor::Plain => None,
        }
    }

    pub fn flavor(self) -> Flavor {
        match self {
            SignRule::Epsilon => Flavor::Symmetric,
            SignRule::Chi => Flavor::Antisymmetric,
        }
    }

    pub fn sign(self, sigma: &Permutation, degrees: &[i64]) -> i32 {
        match self {
            SignRule::Epsilon => sign::epsilon_i(sigma, degrees),
            SignRule::Chi => sign::chi_i(sigma, degrees),
        }
    }
}

/// Sorts `indices` into canonical (weakly increasing) order.
///
/// Returns the canonical tuple and the sign `s` with
/// `phi(e_indices) = s * phi(e_canonical)`, or `None` when the repetition
/// rule forces the value to vanish.
pub fn canonicalize(
    indices: &[usize],
    space: &GradedSpace,
    flavor: Flavor,
) -> Option<(Vec<usize>, i32)> {
    if flavor == Flavor::Plain {
        return Some((indices.to_vec(), 1));
    }
    let n = indices.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&t| (indices[t], t));
    let sorted: Vec<usize> = order.iter().map(|&t| indices[t]).collect();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            let deg = space.degree(w[0]);
            let kills = match flavor {
                Flavor::Antisymmetric => deg.rem_euclid(2) == 0,
                Flavor::Symmetric => deg.rem_euclid(2) == 1,
                Flavor::Plain => false,
            };
            if kills {
                return None;
            }
        }
    }
    // sigma is the inverse of the sorting map: indices = sorted o sigma
    let mut images = vec![0usize; n];
    for (t, &p) in order.iter().enumerate() {
        images[p] = t + 1;
    }
    let sigma = Permutation::from_images(images).expect("argsort yields a permutation");
    let degs: Vec<i64> = sorted.iter().map(|&i| space.degree(i)).collect();
    let rule = SignRule::of_flavor(flavor).expect("flavored");
    Some((sorted, rule.sign(&sigma, &degs)))
}

/// All canonical tuples of the given arity over a space's basis.
pub fn canonical_tuples(space: &GradedSpace, arity: usize, flavor: Flavor) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(arity);
    fn rec(
        space: &GradedSpace,
        arity: usize,
        flavor: Flavor,
        start: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == arity {
            out.push(current.clone());
            return;
        }
        for i in start..space.dim() {
            if let Some(&last) = current.last() {
                if i == last {
                    let deg = space.degree(i);
                    let kills = match flavor {
                        Flavor::Antisymmetric => deg.rem_euclid(2) == 0,
                        Flavor::Symmetric => deg.rem_euclid(2) == 1,
                        Flavor::Plain => false,
                    };
                    if kills {
                        continue;
                    }
                }
            }
            current.push(i);
            rec(space, arity, flavor, i, current, out);
            current.pop();
        }
    }
    if flavor == Flavor::Plain {
        // full cartesian product
        fn cart(
            dim: usize,
            arity: usize,
            current: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if current.len() == arity {
                out.push(current.clone());
                return;
            }
            for i in 0..dim {
                current.push(i);
                cart(dim, arity, current, out);
                current.pop();
            }
        }
        cart(space.dim(), arity, &mut current, &mut out);
    } else {
        rec(space, arity, flavor, 0, &mut current, &mut out);
    }
    out
}

/// A degree-homogeneous n-linear map with sparse canonical-tuple storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiMap {
    pub source: GradedSpace,
    pub target: GradedSpace,
    pub arity: usize,
    pub lin_degree: i64,
    pub flavor: Flavor,
    coeffs: BTreeMap<Vec<usize>, SparseVec>,
}

impl MultiMap {
    pub fn zero(
        source: GradedSpace,
        target: GradedSpace,
        arity: usize,
        lin_degree: i64,
        flavor: Flavor,
    ) -> Self {
        assert!(arity >= 1, "multimaps have arity >= 1");
        MultiMap { source, target, arity, lin_degree, flavor, coeffs: BTreeMap::new() }
    }

    /// Wraps a linear map as an arity-1 multimap.
    pub fn from_linear(map: &LinearMap, flavor: Flavor) -> Self {
        let mut out = MultiMap::zero(
            map.source.clone(),
            map.target.clone(),
            1,
            map.degree,
            flavor,
        );
        for i in 0..map.source.dim() {
            let col = map.apply_basis(i);
            if !col.is_zero() {
                out.coeffs.insert(vec![i], col);
            }
        }
        out
    }

    /// Extracts an arity-1 multimap back into a linear map.
    pub fn to_linear(&self) -> Result<LinearMap> {
        if self.arity != 1 {
            return Err(Error::Argument("to_linear requires arity 1".into()));
        }
        let mut out = LinearMap::zero(self.source.clone(), self.target.clone(), self.lin_degree);
        for (key, val) in &self.coeffs {
            out.set_column(key[0], val.clone())?;
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &SparseVec)> {
        self.coeffs.iter()
    }

    fn check_degree(&self, indices: &[usize], to: usize) -> Result<()> {
        let in_deg: i64 = indices.iter().map(|&i| self.source.degree(i)).sum();
        if self.target.degree(to) != in_deg + self.lin_degree {
            return Err(Error::DegreeMismatch(format!(
                "value at {:?} -> {} violates linear degree {}",
                indices,
                self.target.name(to),
                self.lin_degree
            )));
        }
        Ok(())
    }

    /// Adds `c * e_to` to the value on the given (not necessarily canonical)
    /// basis tuple.
    pub fn add_term(&mut self, indices: &[usize], to: usize, c: Scalar) -> Result<()> {
        if indices.len() != self.arity {
            return Err(Error::Argument(format!(
                "tuple length {} != arity {}",
                indices.len(),
                self.arity
            )));
        }
        if c.is_zero() {
            return Ok(());
        }
        self.check_degree(indices, to)?;
        let Some((key, s)) = canonicalize(indices, &self.source, self.flavor) else {
            // the flavor forces this tuple's value to vanish; adding to it is
            // only legal with coefficient zero, which was handled above
            return Err(Error::Argument(format!(
                "tuple {indices:?} is annihilated by the {:?} repetition rule",
                self.flavor
            )));
        };
        let signed = if s == 1 { c } else { -c };
        let slot = self.coeffs.entry(key.clone()).or_default();
        slot.add_scaled_unit(to, &signed);
        if slot.is_zero() {
            self.coeffs.remove(&key);
        }
        Ok(())
    }

    /// Adds a whole sparse value on a tuple.
    pub fn add_value(&mut self, indices: &[usize], value: &SparseVec) -> Result<()> {
        for (to, c) in value.iter() {
            self.add_term(indices, to, c.clone())?;
        }
        Ok(())
    }

    /// Value on a basis tuple, canonicalizing as needed.
    pub fn eval_basis(&self, indices: &[usize]) -> SparseVec {
        assert_eq!(indices.len(), self.arity);
        match canonicalize(indices, &self.source, self.flavor) {
            None => SparseVec::zero(),
            Some((key, s)) => match self.coeffs.get(&key) {
                None => SparseVec::zero(),
                Some(v) => {
                    if s == 1 {
                        v.clone()
                    } else {
                        v.negate()
                    }
                }
            },
        }
    }

    /// Multilinear evaluation on sparse vectors.
    pub fn eval(&self, args: &[SparseVec]) -> SparseVec {
        assert_eq!(args.len(), self.arity);
        let mut out = SparseVec::zero();
        let mut tuple = vec![0usize; self.arity];
        fn rec(
            map: &MultiMap,
            args: &[SparseVec],
            slot: usize,
            tuple: &mut Vec<usize>,
            coeff: &Scalar,
            out: &mut SparseVec,
        ) {
            if slot == args.len() {
                let v = map.eval_basis(tuple);
                out.add_scaled(&v, coeff);
                return;
            }
            for (i, c) in args[slot].iter() {
                tuple[slot] = i;
                let next = coeff * c;
                if !next.is_zero() {
                    rec(map, args, slot + 1, tuple, &next, out);
                }
            }
        }
        rec(self, args, 0, &mut tuple, &scalar::one(), &mut out);
        out
    }

    fn same_shape(&self, other: &MultiMap) -> bool {
        self.source == other.source
            && self.target == other.target
            && self.arity == other.arity
            && self.lin_degree == other.lin_degree
            && self.flavor == other.flavor
    }

    pub fn add(&self, other: &MultiMap) -> Result<MultiMap> {
        if !self.same_shape(other) {
            return Err(Error::SpaceMismatch("add: incompatible multimaps".into()));
        }
        let mut out = self.clone();
        for (key, val) in &other.coeffs {
            let slot = out.coeffs.entry(key.clone()).or_default();
            slot.add_scaled(val, &scalar::one());
            if slot.is_zero() {
                out.coeffs.remove(key);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Scalar) -> MultiMap {
        let mut out = MultiMap::zero(
            self.source.clone(),
            self.target.clone(),
            self.arity,
            self.lin_degree,
            self.flavor,
        );
        if c.is_zero() {
            return out;
        }
        for (key, val) in &self.coeffs {
            out.coeffs.insert(key.clone(), val.scale(c));
        }
        out
    }

    pub fn sub(&self, other: &MultiMap) -> Result<MultiMap> {
        self.add(&other.scale(&-scalar::one()))
    }

    /// Post-composition with a linear map on the target side.
    pub fn then_linear(&self, map: &LinearMap) -> Result<MultiMap> {
        if map.source != self.target {
            return Err(Error::SpaceMismatch("then_linear: target mismatch".into()));
        }
        let mut out = MultiMap::zero(
            self.source.clone(),
            map.target.clone(),
            self.arity,
            self.lin_degree + map.degree,
            self.flavor,
        );
        for (key, val) in &self.coeffs {
            let image = map.apply(val);
            if !image.is_zero() {
                out.coeffs.insert(key.clone(), image);
            }
        }
        Ok(out)
    }

    /// Restriction along a degree-zero inclusion of the source space:
    /// `phi(incl -, ..., incl -)`.
    pub fn restrict_source(&self, incl: &LinearMap) -> Result<MultiMap> {
        if incl.target != self.source {
            return Err(Error::SpaceMismatch("restrict_source: inclusion target mismatch".into()));
        }
        if incl.degree != 0 {
            return Err(Error::Argument("restrict_source requires a degree-0 inclusion".into()));
        }
        let mut out = MultiMap::zero(
            incl.source.clone(),
            self.target.clone(),
            self.arity,
            self.lin_degree,
            self.flavor,
        );
        let columns: Vec<SparseVec> =
            (0..incl.source.dim()).map(|i| incl.apply_basis(i)).collect();
        for key in canonical_tuples(&incl.source, self.arity, self.flavor) {
            let args: Vec<SparseVec> = key.iter().map(|&i| columns[i].clone()).collect();
            let val = self.eval(&args);
            if !val.is_zero() {
                out.coeffs.insert(key, val);
            }
        }
        Ok(out)
    }

    /// Precomposition with `alpha_{k,n}` (sum over `(k, n-k)`-shuffles) for
    /// `k < arity`, or with the full (anti)symmetrization `alpha_n` (sum over
    /// the whole symmetric group) for `k = arity`. The sign action is the one
    /// matching the map's flavor.
    pub fn apply_alpha(&self, k: usize) -> Result<MultiMap> {
        let rule = SignRule::of_flavor(self.flavor).ok_or_else(|| {
            Error::Argument("apply_alpha on a plain map needs an explicit sign rule".into())
        })?;
        self.apply_alpha_with(k, rule)
    }

    /// `apply_alpha` with an explicit sign rule, usable on plain maps.
    pub fn apply_alpha_with(&self, k: usize, rule: SignRule) -> Result<MultiMap> {
        if k < 1 || k > self.arity {
            return Err(Error::Argument(format!(
                "alpha index {k} outside 1..={}",
                self.arity
            )));
        }
        let n = self.arity;
        if k == n {
            return Ok(self.symmetrize(rule));
        }
        let shuffles = sign::shuffles(k, n)?;
        let mut out = MultiMap::zero(
            self.source.clone(),
            self.target.clone(),
            n,
            self.lin_degree,
            Flavor::Plain,
        );
        for key in canonical_tuples(&self.source, n, Flavor::Plain) {
            let degs: Vec<i64> = key.iter().map(|&i| self.source.degree(i)).collect();
            let mut val = SparseVec::zero();
            for sigma in &shuffles {
                let permuted: Vec<usize> = sigma.permute(&key);
                let s = rule.sign(sigma, &degs);
                val.add_scaled(&self.eval_basis(&permuted), &scalar::from_int(s as i64));
            }
            if !val.is_zero() {
                out.coeffs.insert(key, val);
            }
        }
        Ok(out)
    }

    /// Full (anti)symmetrization `phi o alpha_n` as a flavored map.
    pub fn symmetrize(&self, rule: SignRule) -> MultiMap {
        let n = self.arity;
        let flavor = rule.flavor();
        let mut out = MultiMap::zero(
            self.source.clone(),
            self.target.clone(),
            n,
            self.lin_degree,
            flavor,
        );
        let mut targets: Vec<Vec<usize>> = Vec::new();
        for key in self.coeffs.keys() {
            if let Some((canon, _)) = canonicalize(key, &self.source, flavor) {
                targets.push(canon);
            }
        }
        targets.sort();
        targets.dedup();
        let perms = Permutation::all(n);
        for canon in targets {
            let degs: Vec<i64> = canon.iter().map(|&i| self.source.degree(i)).collect();
            let mut val = SparseVec::zero();
            for sigma in &perms {
                let permuted: Vec<usize> = sigma.permute(&canon);
                let s = rule.sign(sigma, &degs);
                val.add_scaled(&self.eval_basis(&permuted), &scalar::from_int(s as i64));
            }
            if !val.is_zero() {
                out.coeffs.insert(canon, val);
            }
        }
        out
    }

    /// Plugs `inner` into the given 1-based slot:
    /// `outer o (1^{slot-1} (x) inner (x) 1^{rest})`, with the Koszul sign
    /// from moving `inner` past the preceding arguments. The result is plain.
    pub fn compose_at(&self, slot: usize, inner: &MultiMap) -> Result<MultiMap> {
        if inner.target != self.source {
            return Err(Error::SpaceMismatch(
                "compose: inner target is not the outer source".into(),
            ));
        }
        if slot < 1 || slot > self.arity {
            return Err(Error::Argument(format!(
                "slot {slot} outside 1..={}",
                self.arity
            )));
        }
        let m = self.arity + inner.arity - 1;
        let mut out = MultiMap::zero(
            inner.source.clone(),
            self.target.clone(),
            m,
            self.lin_degree + inner.lin_degree,
            Flavor::Plain,
        );
        // domain and codomain of the identity slots must agree
        if self.arity > 1 && inner.source != self.source {
            return Err(Error::SpaceMismatch(
                "compose: identity slots need matching spaces".into(),
            ));
        }
        for key in canonical_tuples(&inner.source, m, Flavor::Plain) {
            let pre = &key[..slot - 1];
            let mid = &key[slot - 1..slot - 1 + inner.arity];
            let post = &key[slot - 1 + inner.arity..];
            let pre_deg: i64 = pre.iter().map(|&i| inner.source.degree(i)).sum();
            let sign = scalar::neg_one_pow(inner.lin_degree * pre_deg);
            let w = inner.eval_basis(mid);
            if w.is_zero() {
                continue;
            }
            let mut val = SparseVec::zero();
            let mut outer_tuple = Vec::with_capacity(self.arity);
            for (j, c) in w.iter() {
                outer_tuple.clear();
                outer_tuple.extend_from_slice(pre);
                outer_tuple.push(j);
                outer_tuple.extend_from_slice(post);
                val.add_scaled(&self.eval_basis(&outer_tuple), c);
            }
            let val = val.scale(&sign);
            if !val.is_zero() {
                out.coeffs.insert(key, val);
            }
        }
        Ok(out)
    }
}

/// `outer o (inner (x) 1^{(n-k)}) o alpha_{k,n}` accumulated directly on
/// canonical tuples. `inner` must be an endomorphism-valued map (its source
/// and target space is the source of `outer`), and both maps must carry the
/// flavor matching `rule`; the shuffle sum then restores the full symmetry.
pub fn shuffle_insertion(
    outer: &MultiMap,
    inner: &MultiMap,
    n: usize,
    rule: SignRule,
) -> Result<MultiMap> {
    let k = inner.arity;
    let l = outer.arity;
    if k + l != n + 1 {
        return Err(Error::Argument(format!(
            "shuffle_insertion: arities {k} + {l} != {n} + 1"
        )));
    }
    if inner.source != inner.target || inner.target != outer.source {
        return Err(Error::SpaceMismatch(
            "shuffle_insertion: inner must be an endomorphism into the outer source".into(),
        ));
    }
    let flavor = rule.flavor();
    let space = inner.source.clone();
    let mut out = MultiMap::zero(
        space.clone(),
        outer.target.clone(),
        n,
        outer.lin_degree + inner.lin_degree,
        flavor,
    );
    let shuffles = sign::shuffles(k, n)?;
    let mut outer_tuple = vec![0usize; l];
    for key in canonical_tuples(&space, n, flavor) {
        let degs: Vec<i64> = key.iter().map(|&i| space.degree(i)).collect();
        let mut val = SparseVec::zero();
        for sigma in &shuffles {
            let s = rule.sign(sigma, &degs);
            let inner_args: Vec<usize> = (1..=k).map(|t| key[sigma.apply(t) - 1]).collect();
            let w = inner.eval_basis(&inner_args);
            if w.is_zero() {
                continue;
            }
            let s = scalar::from_int(s as i64);
            for (j, c) in w.iter() {
                outer_tuple[0] = j;
                for t in 1..l {
                    outer_tuple[t] = key[sigma.apply(k + t) - 1];
                }
                val.add_scaled(&outer.eval_basis(&outer_tuple), &(c * &s));
            }
        }
        if !val.is_zero() {
            out.coeffs.insert(key, val);
        }
    }
    Ok(out)
}

/// `outer o (part_1 (x) ... (x) part_k) o alpha_n` accumulated on canonical
/// tuples, where `part_j` has arity `i_j` and `sum i_j = n`. Inter-block
/// Koszul signs from moving each part past the earlier argument blocks are
/// included. All parts map the common source space into `outer`'s source.
pub fn multi_insertion(
    outer: &MultiMap,
    parts: &[&MultiMap],
    rule: SignRule,
) -> Result<MultiMap> {
    if parts.len() != outer.arity {
        return Err(Error::Argument(format!(
            "multi_insertion: {} parts for outer arity {}",
            parts.len(),
            outer.arity
        )));
    }
    let n: usize = parts.iter().map(|p| p.arity).sum();
    let space = parts[0].source.clone();
    for p in parts {
        if p.source != space {
            return Err(Error::SpaceMismatch("multi_insertion: parts share one source".into()));
        }
        if p.target != outer.source {
            return Err(Error::SpaceMismatch(
                "multi_insertion: part targets must be the outer source".into(),
            ));
        }
    }
    let flavor = rule.flavor();
    let lin_degree =
        outer.lin_degree + parts.iter().map(|p| p.lin_degree).sum::<i64>();
    let mut out = MultiMap::zero(space.clone(), outer.target.clone(), n, lin_degree, flavor);
    let perms = Permutation::all(n);
    for key in canonical_tuples(&space, n, flavor) {
        let degs: Vec<i64> = key.iter().map(|&i| space.degree(i)).collect();
        let mut val = SparseVec::zero();
        for sigma in &perms {
            let base_sign = rule.sign(sigma, &degs);
            // Koszul sign for moving part_j past the earlier blocks
            let mut move_parity = 0i64;
            let mut offset = 0usize;
            let mut earlier = 0i64;
            let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(parts.len());
            for p in parts {
                let block: Vec<usize> =
                    (1..=p.arity).map(|t| key[sigma.apply(offset + t) - 1]).collect();
                let block_deg: i64 = block.iter().map(|&i| space.degree(i)).sum();
                move_parity += p.lin_degree * earlier;
                earlier += block_deg;
                offset += p.arity;
                blocks.push(block);
            }
            let mut s = scalar::from_int(base_sign as i64);
            if move_parity.rem_euclid(2) == 1 {
                s = -s;
            }
            // evaluate the parts, then the outer map on the resulting vectors
            let mut part_values = Vec::with_capacity(parts.len());
            let mut dead = false;
            for (p, block) in parts.iter().zip(&blocks) {
                let v = p.eval_basis(block);
                if v.is_zero() {
                    dead = true;
                    break;
                }
                part_values.push(v);
            }
            if dead {
                continue;
            }
            val.add_scaled(&outer.eval(&part_values), &s);
        }
        if !val.is_zero() {
            out.coeffs.insert(key, val);
        }
    }
    Ok(out)
}

/// Shift an antisymmetric map on `L` down to a symmetric map on `L[1]`:
/// `(-1)^{n(n-1)/2} (down) o phi o (up)^n` with the Koszul signs of the
/// n-fold shift.
pub fn decalage_down(mu: &MultiMap) -> Result<MultiMap> {
    if mu.flavor != Flavor::Antisymmetric {
        return Err(Error::Argument("decalage_down expects an antisymmetric map".into()));
    }
    let n = mu.arity as i64;
    let shifted_source = mu.source.shifted();
    let shifted_target = mu.target.shifted();
    let mut out = MultiMap::zero(
        shifted_source,
        shifted_target,
        mu.arity,
        mu.lin_degree + n - 1,
        Flavor::Symmetric,
    );
    for (key, val) in &mu.coeffs {
        let mut exp = n * (n - 1) / 2;
        for (i, &idx) in key.iter().enumerate().take(mu.arity - 1) {
            exp += (n - 1 - i as i64) * (mu.source.degree(idx) - 1);
        }
        let signed = if exp.rem_euclid(2) == 0 { val.clone() } else { val.negate() };
        out.coeffs.insert(key.clone(), signed);
    }
    Ok(out)
}

/// Inverse of [`decalage_down`]: symmetric on `L[1]` back to antisymmetric
/// on `L`. The unshifted spaces must be supplied since the shift forgets
/// them.
pub fn decalage_up(q: &MultiMap, source: &GradedSpace, target: &GradedSpace) -> Result<MultiMap> {
    if q.flavor != Flavor::Symmetric {
        return Err(Error::Argument("decalage_up expects a symmetric map".into()));
    }
    if source.shifted() != q.source || target.shifted() != q.target {
        return Err(Error::SpaceMismatch("decalage_up: spaces do not shift onto the input".into()));
    }
    let n = q.arity as i64;
    let mut out = MultiMap::zero(
        source.clone(),
        target.clone(),
        q.arity,
        q.lin_degree - n + 1,
        Flavor::Antisymmetric,
    );
    for (key, val) in &q.coeffs {
        let mut exp = n * (n - 1) / 2;
        for (i, &idx) in key.iter().enumerate().take(q.arity - 1) {
            exp += (n - 1 - i as i64) * (source.degree(idx) - 1);
        }
        let signed = if exp.rem_euclid(2) == 0 { val.clone() } else { val.negate() };
        out.coeffs.insert(key.clone(), signed);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::GradedSpace;

    fn space() -> GradedSpace {
        GradedSpace::from_pairs(&[("x", 1), ("y", 1), ("z", 2), ("w", 0)]).unwrap()
    }

    fn assert_same_on_all_tuples(a: &MultiMap, b: &MultiMap) {
        assert_eq!(a.arity, b.arity);
        for key in canonical_tuples(&a.source, a.arity, Flavor::Plain) {
            assert_eq!(a.eval_basis(&key), b.eval_basis(&key), "differ at {key:?}");
        }
    }

    #[test]
    fn canonicalize_signs_and_kills() {
        let s = space();
        // antisymmetric: swapping two odd-degree generators keeps the sign
        let (key, sgn) = canonicalize(&[1, 0], &s, Flavor::Antisymmetric).unwrap();
        assert_eq!(key, vec![0, 1]);
        assert_eq!(sgn, 1); // chi(swap, odd, odd) = +1
        // symmetric: swapping two odds flips
        let (_, sgn) = canonicalize(&[1, 0], &s, Flavor::Symmetric).unwrap();
        assert_eq!(sgn, -1);
        // repetition rules
        assert!(canonicalize(&[2, 2], &s, Flavor::Antisymmetric).is_none()); // even repeated
        assert!(canonicalize(&[0, 0], &s, Flavor::Antisymmetric).is_some()); // odd repeated fine
        assert!(canonicalize(&[0, 0], &s, Flavor::Symmetric).is_none());
        assert!(canonicalize(&[2, 2], &s, Flavor::Symmetric).is_some());
    }

    #[test]
    fn evaluation_is_permutation_invariant() {
        let s = space();
        let mut phi = MultiMap::zero(s.clone(), s.clone(), 3, 1, Flavor::Antisymmetric);
        phi.add_term(&[0, 1, 2], 3, scalar::ratio(2, 3)).unwrap_err(); // degree check: 1+1+2+1 != 0
        let mut phi = MultiMap::zero(s.clone(), s.clone(), 2, 0, Flavor::Antisymmetric);
        phi.add_term(&[0, 1], 2, scalar::one()).unwrap();
        phi.add_term(&[0, 0], 2, scalar::ratio(1, 2)).unwrap();
        for key in canonical_tuples(&s, 2, Flavor::Plain) {
            let degs: Vec<i64> = key.iter().map(|&i| s.degree(i)).collect();
            for sigma in Permutation::all(2) {
                let permuted: Vec<usize> = sigma.permute(&key);
                let lhs = phi.eval_basis(&permuted);
                let sgn = sign::chi_i(&sigma, &degs);
                let rhs = phi.eval_basis(&key).scale(&scalar::from_int(sgn as i64));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn alpha_full_on_canonical_map_is_factorial_multiple() {
        let s = space();
        let mut phi = MultiMap::zero(s.clone(), s.clone(), 3, -3, Flavor::Symmetric);
        phi.add_term(&[0, 1, 2], 0, scalar::one()).unwrap();
        phi.add_term(&[2, 2, 3], 0, scalar::ratio(5, 7)).unwrap();
        let alpha = phi.apply_alpha(3).unwrap();
        assert_eq!(alpha, phi.scale(&scalar::from_int(6)));

        let mut anti = MultiMap::zero(s.clone(), s.clone(), 2, -1, Flavor::Antisymmetric);
        anti.add_term(&[0, 2], 2, scalar::one()).unwrap();
        let alpha = anti.apply_alpha(2).unwrap();
        assert_eq!(alpha, anti.scale(&scalar::from_int(2)));
    }

    #[test]
    fn alpha_arity_one_is_identity() {
        let s = space();
        let mut phi = MultiMap::zero(s.clone(), s.clone(), 1, 0, Flavor::Antisymmetric);
        phi.add_term(&[0], 1, scalar::one()).unwrap();
        let alpha = phi.apply_alpha(1).unwrap();
        assert_eq!(alpha, phi);
    }

    #[test]
    fn alpha_shuffle_on_bilinear_expands_two_terms() {
        let s = space();
        // plain bilinear b with b(x, z) = w-ish: use degrees that work out:
        // lin_degree -3 so that b(x,z) = w (1+2-3 = 0)
        let mut b = MultiMap::zero(s.clone(), s.clone(), 2, -3, Flavor::Plain);
        b.add_term(&[0, 2], 3, scalar::one()).unwrap();
        let alpha = b.apply_alpha_with(1, SignRule::Chi).unwrap();
        // alpha_{1,2} = id + swap action: value at (x,z) is b(x,z); value at
        // (z,x) is chi(swap; z,x) * picked up when permuting (z,x) -> (x,z)
        assert_eq!(alpha.eval_basis(&[0, 2]), SparseVec::unit(3));
        let sw = Permutation::from_images(vec![2, 1]).unwrap();
        let expected_sign = sign::chi_i(&sw, &[s.degree(2), s.degree(0)]);
        assert_eq!(
            alpha.eval_basis(&[2, 0]),
            SparseVec::unit(3).scale(&scalar::from_int(expected_sign as i64))
        );
    }

    #[test]
    fn compose_with_identity_inner_is_identity() {
        let s = space();
        let mut b = MultiMap::zero(s.clone(), s.clone(), 2, 0, Flavor::Antisymmetric);
        b.add_term(&[0, 1], 2, scalar::one()).unwrap();
        let id = MultiMap::from_linear(&LinearMap::identity(s.clone()), Flavor::Plain);
        let c = b.compose_at(1, &id).unwrap();
        assert_same_on_all_tuples(&b, &c);
        let c2 = b.compose_at(2, &id).unwrap();
        assert_same_on_all_tuples(&b, &c2);
    }

    #[test]
    fn compose_koszul_sign_for_odd_inner() {
        let s = space();
        // eta: z -> x, degree -1 (odd)
        let mut eta = LinearMap::zero(s.clone(), s.clone(), -1);
        eta.add_entry(2, 0, scalar::one()).unwrap();
        let eta = MultiMap::from_linear(&eta, Flavor::Plain);
        let mut b = MultiMap::zero(s.clone(), s.clone(), 2, 0, Flavor::Plain);
        b.add_term(&[0, 0], 2, scalar::one()).unwrap(); // b(x,x) = z
        // slot 1: no preceding arguments, no sign
        let c1 = b.compose_at(1, &eta).unwrap();
        assert_eq!(c1.eval_basis(&[2, 0]), SparseVec::unit(2));
        // slot 2: eta moves past the first argument x (odd), sign -1
        let c2 = b.compose_at(2, &eta).unwrap();
        assert_eq!(c2.eval_basis(&[0, 2]), SparseVec::unit(2).negate());
    }

    #[test]
    fn decalage_round_trip_and_fixtures() {
        let s = space();
        // n = 2 on two degree-1 elements: sign -1
        let mut mu = MultiMap::zero(s.clone(), s.clone(), 2, 0, Flavor::Antisymmetric);
        mu.add_term(&[0, 1], 2, scalar::one()).unwrap();
        let q = decalage_down(&mu).unwrap();
        assert_eq!(q.lin_degree, 1);
        assert_eq!(q.eval_basis(&[0, 1]), SparseVec::unit(2).negate());
        let back = decalage_up(&q, &s, &s).unwrap();
        assert_eq!(back, mu);

        // n = 1: no sign at all
        let mut d = MultiMap::zero(s.clone(), s.clone(), 1, 1, Flavor::Antisymmetric);
        d.add_term(&[0], 2, scalar::one()).unwrap();
        let q1 = decalage_down(&d).unwrap();
        assert_eq!(q1.eval_basis(&[0]), SparseVec::unit(2));
    }

    #[test]
    fn decalage_round_trip_many_arities() {
        let s = space();
        for n in 1..=5usize {
            let lin_degree = 2 - n as i64;
            let mut mu = MultiMap::zero(s.clone(), s.clone(), n, lin_degree, Flavor::Antisymmetric);
            // fill a few entries whose degrees work out
            for key in canonical_tuples(&s, n, Flavor::Antisymmetric) {
                let in_deg: i64 = key.iter().map(|&i| s.degree(i)).sum();
                for to in 0..s.dim() {
                    if s.degree(to) == in_deg + lin_degree {
                        let c = scalar::ratio((key.iter().sum::<usize>() as i64 % 5) + 1, 3);
                        mu.add_term(&key, to, c).unwrap();
                    }
                }
            }
            let back = decalage_up(&decalage_down(&mu).unwrap(), &s, &s).unwrap();
            assert_eq!(back, mu, "round trip at arity {n}");
        }
    }

    #[test]
    fn shuffle_insertion_matches_composed_alpha() {
        let s = space();
        // inner: symmetric bilinear q with values landing in degree sums
        let mut q = MultiMap::zero(s.clone(), s.clone(), 2, -1, Flavor::Symmetric);
        q.add_term(&[0, 1], 0, scalar::one()).unwrap();
        q.add_term(&[0, 2], 2, scalar::ratio(1, 2)).unwrap();
        // outer: symmetric bilinear
        let mut p = MultiMap::zero(s.clone(), s.clone(), 2, -1, Flavor::Symmetric);
        p.add_term(&[0, 1], 0, scalar::one()).unwrap();
        p.add_term(&[0, 2], 2, scalar::from_int(3)).unwrap();
        let fused = shuffle_insertion(&p, &q, 3, SignRule::Epsilon).unwrap();
        let composed = p.compose_at(1, &q).unwrap().apply_alpha_with(2, SignRule::Epsilon).unwrap();
        for key in canonical_tuples(&s, 3, Flavor::Plain) {
            assert_eq!(fused.eval_basis(&key), composed.eval_basis(&key), "at {key:?}");
        }
    }
}
