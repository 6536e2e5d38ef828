//! Truncated coderivations and coalgebra morphisms, the structure equations
//! they satisfy, and the recursive inverse of a morphism.
//!
//! Everything is arity-graded, so truncation at a cap is exact per arity:
//! the residual of the structure equation at arity `n` only involves
//! components of arity at most `n`.


use crate::error::{Error, Result};
use crate::graded::{GradedSpace, LinearMap};
use crate::multimap::{
    canonical_tuples, decalage_down, decalage_up, multi_insertion, shuffle_insertion, Flavor,
    MultiMap, SignRule,
};
use crate::scalar;
use crate::sign;

/// Per-arity residual maps of a structure equation; empty maps mean the
/// equation holds.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub residuals: Vec<MultiMap>,
}

impl ResidualReport {
    pub fn passes(&self) -> bool {
        self.residuals.iter().all(|r| r.is_zero())
    }

    pub fn nonzero_arities(&self) -> Vec<usize> {
        self.residuals
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.is_zero())
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Number of nonzero canonical entries at each arity.
    pub fn entry_counts(&self) -> Vec<usize> {
        self.residuals.iter().map(|r| r.entries().count()).collect()
    }
}

/// A degree-homogeneous coderivation of the symmetric coalgebra, stored by
/// its corank-1 components `Q_1 .. Q_cap` on the (already shifted) space.
/// The arity-0 component is always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coderivation {
    pub space: GradedSpace,
    pub cap: usize,
    pub degree: i64,
    pub components: Vec<MultiMap>,
}

impl Coderivation {
    pub fn new(
        space: GradedSpace,
        cap: usize,
        degree: i64,
        components: Vec<MultiMap>,
    ) -> Result<Self> {
        if components.len() != cap {
            return Err(Error::Argument(format!(
                "expected {cap} components, got {}",
                components.len()
            )));
        }
        for (i, q) in components.iter().enumerate() {
            let n = i + 1;
            if q.arity != n
                || q.flavor != Flavor::Symmetric
                || q.lin_degree != degree
                || q.source != space
                || q.target != space
            {
                return Err(Error::Argument(format!(
                    "component {n} has the wrong shape for a degree-{degree} coderivation"
                )));
            }
        }
        Ok(Coderivation { space, cap, degree, components })
    }

    pub fn zero(space: GradedSpace, cap: usize, degree: i64) -> Self {
        let components = (1..=cap)
            .map(|n| MultiMap::zero(space.clone(), space.clone(), n, degree, Flavor::Symmetric))
            .collect();
        Coderivation { space, cap, degree, components }
    }

    pub fn component(&self, n: usize) -> &MultiMap {
        &self.components[n - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|q| q.is_zero())
    }
}

/// The graded-commutator bracket of two coderivations, componentwise:
/// `[Q, q]_n = sum_{k+l=n+1} Q_l o (q_k (x) 1...) o alpha_{k,n}
///          - (-1)^{|Q||q|} q_l o (Q_k (x) 1...) o alpha_{k,n}`.
pub fn coder_bracket(big: &Coderivation, small: &Coderivation) -> Result<Coderivation> {
    if big.space != small.space {
        return Err(Error::SpaceMismatch("coder_bracket: different spaces".into()));
    }
    if big.cap != small.cap {
        return Err(Error::Argument("coder_bracket: different caps".into()));
    }
    let cap = big.cap;
    let degree = big.degree + small.degree;
    let swap_sign = scalar::neg_one_pow(big.degree * small.degree);
    let mut components = Vec::with_capacity(cap);
    for n in 1..=cap {
        let mut acc = MultiMap::zero(
            big.space.clone(),
            big.space.clone(),
            n,
            degree,
            Flavor::Symmetric,
        );
        for k in 1..=n {
            let l = n + 1 - k;
            let first = shuffle_insertion(big.component(l), small.component(k), n, SignRule::Epsilon)?;
            acc = acc.add(&first)?;
            let second =
                shuffle_insertion(small.component(l), big.component(k), n, SignRule::Epsilon)?;
            acc = acc.sub(&second.scale(&swap_sign))?;
        }
        components.push(acc);
    }
    Coderivation::new(big.space.clone(), cap, degree, components)
}

/// Residuals of the codifferential condition
/// `sum_{k+l=n+1} Q_l (Q_k (x) 1...) o alpha_{k,n} = 0` for a degree-1
/// coderivation.
pub fn is_codifferential(q: &Coderivation) -> Result<ResidualReport> {
    if q.degree != 1 {
        return Err(Error::Argument("codifferential check needs degree 1".into()));
    }
    let mut residuals = Vec::with_capacity(q.cap);
    for n in 1..=q.cap {
        let mut acc = MultiMap::zero(q.space.clone(), q.space.clone(), n, 2, Flavor::Symmetric);
        for k in 1..=n {
            let l = n + 1 - k;
            let term = shuffle_insertion(q.component(l), q.component(k), n, SignRule::Epsilon)?;
            acc = acc.add(&term)?;
        }
        residuals.push(acc);
    }
    Ok(ResidualReport { residuals })
}

/// A truncated L-infinity algebra: antisymmetric `mu_n` of linear degree
/// `2 - n` on the unshifted space. The generalized Jacobi identities are
/// checked by [`jacobi_check`], not by the constructor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LInftyAlgebra {
    pub space: GradedSpace,
    pub cap: usize,
    pub mu: Vec<MultiMap>,
}

impl LInftyAlgebra {
    pub fn new(space: GradedSpace, cap: usize, mu: Vec<MultiMap>) -> Result<Self> {
        if mu.len() != cap {
            return Err(Error::Argument(format!("expected {cap} structure maps, got {}", mu.len())));
        }
        for (i, m) in mu.iter().enumerate() {
            let n = i + 1;
            if m.arity != n
                || m.flavor != Flavor::Antisymmetric
                || m.lin_degree != 2 - n as i64
                || m.source != space
                || m.target != space
            {
                return Err(Error::Argument(format!(
                    "structure map {n} has the wrong shape (need antisymmetric, degree {})",
                    2 - n as i64
                )));
            }
        }
        Ok(LInftyAlgebra { space, cap, mu })
    }

    /// The zero (abelian, zero-differential) structure.
    pub fn zero_structure(space: GradedSpace, cap: usize) -> Self {
        let mu = (1..=cap)
            .map(|n| {
                MultiMap::zero(space.clone(), space.clone(), n, 2 - n as i64, Flavor::Antisymmetric)
            })
            .collect();
        LInftyAlgebra { space, cap, mu }
    }

    pub fn mu(&self, n: usize) -> &MultiMap {
        &self.mu[n - 1]
    }

    pub fn is_minimal(&self) -> bool {
        self.mu[0].is_zero()
    }

    pub fn is_linear(&self) -> bool {
        self.mu.iter().skip(1).all(|m| m.is_zero())
    }

    /// True when only `mu_1` and `mu_2` can be nonzero.
    pub fn is_dgla_shaped(&self) -> bool {
        self.mu.iter().skip(2).all(|m| m.is_zero())
    }

    pub fn to_coderivation(&self) -> Result<Coderivation> {
        let shifted = self.space.shifted();
        let components = self
            .mu
            .iter()
            .map(decalage_down)
            .collect::<Result<Vec<_>>>()?;
        Coderivation::new(shifted, self.cap, 1, components)
    }

    pub fn from_coderivation(space: GradedSpace, q: &Coderivation) -> Result<Self> {
        let mu = q
            .components
            .iter()
            .map(|c| decalage_up(c, &space, &space))
            .collect::<Result<Vec<_>>>()?;
        LInftyAlgebra::new(space, q.cap, mu)
    }
}

/// Verdict of the generalized Jacobi identities, computed along two
/// independent routes: directly from the displayed identities on the
/// unshifted space, and as the codifferential condition after shifting.
#[derive(Debug, Clone)]
pub struct JacobiReport {
    pub direct: ResidualReport,
    pub via_decalage: ResidualReport,
    pub routes_agree: bool,
}

impl JacobiReport {
    pub fn passes(&self) -> bool {
        self.direct.passes() && self.via_decalage.passes() && self.routes_agree
    }
}

/// Checks `sum_{k+l=n+1} (-1)^{k(l-1)} chi(sigma)
/// mu_l(mu_k(a_{s(1)}..a_{s(k)}), a_{s(k+1)}, ...) = 0` for every arity up
/// to the cap, and cross-checks against the shifted codifferential route.
pub fn jacobi_check(algebra: &LInftyAlgebra) -> Result<JacobiReport> {
    let mut residuals = Vec::with_capacity(algebra.cap);
    for n in 1..=algebra.cap {
        let mut acc = MultiMap::zero(
            algebra.space.clone(),
            algebra.space.clone(),
            n,
            3 - n as i64,
            Flavor::Antisymmetric,
        );
        for k in 1..=n {
            let l = n + 1 - k;
            let term = shuffle_insertion(algebra.mu(l), algebra.mu(k), n, SignRule::Chi)?;
            let sign = scalar::neg_one_pow(k as i64 * (l as i64 - 1));
            acc = acc.add(&term.scale(&sign))?;
        }
        residuals.push(acc);
    }
    let direct = ResidualReport { residuals };
    let via_decalage = is_codifferential(&algebra.to_coderivation()?)?;
    let routes_agree = direct
        .residuals
        .iter()
        .zip(&via_decalage.residuals)
        .all(|(a, b)| a.is_zero() == b.is_zero());
    Ok(JacobiReport { direct, via_decalage, routes_agree })
}

/// Weakly increasing compositions of `n` into `k` positive parts, each with
/// the number of distinct orderings it stands for.
pub fn sorted_compositions(n: usize, k: usize) -> Vec<(Vec<usize>, usize)> {
    fn orderings(parts: &[usize]) -> usize {
        let mut mult = 1usize;
        let mut fact_total = 1usize;
        let mut run = 0usize;
        let mut prev = 0usize;
        for (idx, &p) in parts.iter().enumerate() {
            fact_total *= idx + 1;
            if p == prev {
                run += 1;
            } else {
                run = 1;
                prev = p;
            }
            mult *= run;
        }
        fact_total / mult
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(n: usize, k: usize, min: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 0 {
            if n == 0 {
                out.push(current.clone());
            }
            return;
        }
        for p in min..=n {
            if p * k > n + (k - 1) * n {
                break;
            }
            if n < p {
                break;
            }
            current.push(p);
            rec(n - p, k - 1, p, current, out);
            current.pop();
        }
    }
    let mut raw = Vec::new();
    rec(n, k, 1, &mut current, &mut raw);
    for parts in raw {
        let m = orderings(&parts);
        out.push((parts, m));
    }
    out
}

/// All ordered compositions of `n` into `k` positive parts.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 0 {
            if n == 0 {
                out.push(current.clone());
            }
            return;
        }
        for p in 1..=n {
            current.push(p);
            rec(n - p, k - 1, current, out);
            current.pop();
        }
    }
    rec(n, k, &mut current, &mut out);
    out
}

/// A coalgebra morphism between symmetric coalgebras, stored by its
/// corank-1 components `F_1 .. F_cap` (symmetric, linear degree 0, on
/// shifted spaces). Composite components `F_{n,k}` are computed on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalgMorphism {
    pub source: GradedSpace,
    pub target: GradedSpace,
    pub cap: usize,
    pub components: Vec<MultiMap>,
}

impl CoalgMorphism {
    pub fn new(
        source: GradedSpace,
        target: GradedSpace,
        cap: usize,
        components: Vec<MultiMap>,
    ) -> Result<Self> {
        if components.len() != cap {
            return Err(Error::Argument(format!(
                "expected {cap} components, got {}",
                components.len()
            )));
        }
        for (i, f) in components.iter().enumerate() {
            let n = i + 1;
            if f.arity != n
                || f.flavor != Flavor::Symmetric
                || f.lin_degree != 0
                || f.source != source
                || f.target != target
            {
                return Err(Error::Argument(format!(
                    "morphism component {n} has the wrong shape"
                )));
            }
        }
        Ok(CoalgMorphism { source, target, cap, components })
    }

    pub fn identity(space: GradedSpace, cap: usize) -> Self {
        let mut components: Vec<MultiMap> = (1..=cap)
            .map(|n| MultiMap::zero(space.clone(), space.clone(), n, 0, Flavor::Symmetric))
            .collect();
        components[0] =
            MultiMap::from_linear(&LinearMap::identity(space.clone()), Flavor::Symmetric);
        CoalgMorphism { source: space.clone(), target: space, cap, components }
    }

    pub fn component(&self, n: usize) -> &MultiMap {
        &self.components[n - 1]
    }

    pub fn linear_part(&self) -> Result<LinearMap> {
        self.components[0].to_linear()
    }

    pub fn is_strict(&self) -> bool {
        self.components.iter().skip(1).all(|f| f.is_zero())
    }

    /// Is this the identity morphism?
    pub fn is_identity(&self) -> bool {
        self.is_strict()
            && self.source == self.target
            && self.components[0]
                == MultiMap::from_linear(&LinearMap::identity(self.source.clone()), Flavor::Symmetric)
    }
}

/// `sum_{|I| = n, I in N^k, i_j >= 1} outer_k o F_I`, where
/// `F_I = 1/(I! k!) (F_{i_1} . ... . F_{i_k}) o alpha_n`. The parts must
/// have linear degree 0 (permutation-invariant blocks), which lets the sum
/// run over sorted multi-indices with multiplicities.
fn sum_insertions(
    outer: &MultiMap,
    parts: &[MultiMap],
    n: usize,
    naive: bool,
) -> Result<MultiMap> {
    let k = outer.arity;
    let space = parts[0].source.clone();
    let mut acc = MultiMap::zero(
        space,
        outer.target.clone(),
        n,
        outer.lin_degree,
        Flavor::Symmetric,
    );
    let index_sets: Vec<(Vec<usize>, usize)> = if naive {
        compositions(n, k).into_iter().map(|i| (i, 1)).collect()
    } else {
        sorted_compositions(n, k)
    };
    for (index, mult) in index_sets {
        if index.iter().any(|&i| i > parts.len()) {
            continue;
        }
        for &i in &index {
            if parts[i - 1].lin_degree != 0 && !naive {
                return Err(Error::Argument(
                    "sorted multi-index route needs degree-0 parts".into(),
                ));
            }
        }
        let chosen: Vec<&MultiMap> = index.iter().map(|&i| &parts[i - 1]).collect();
        let term = multi_insertion(outer, &chosen, SignRule::Epsilon)?;
        let mut i_factorial = scalar::one();
        for &i in &index {
            i_factorial *= scalar::factorial(i);
        }
        let norm = scalar::from_int(mult as i64)
            / (i_factorial * scalar::factorial(k));
        acc = acc.add(&term.scale(&norm))?;
    }
    Ok(acc)
}

/// `sum_{k=1}^{n} sum_{|I|=n} outer_k o F_I` over all block counts, used by
/// both the morphism condition and morphism composition. `outers[k-1]` is
/// the k-ary outer map; missing entries are treated as absent terms.
fn sum_all_insertions(
    outers: &[MultiMap],
    parts: &[MultiMap],
    n: usize,
    k_min: usize,
    naive: bool,
) -> Result<Option<MultiMap>> {
    let mut acc: Option<MultiMap> = None;
    for k in k_min..=n.min(outers.len()) {
        let term = sum_insertions(&outers[k - 1], parts, n, naive)?;
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    Ok(acc)
}

/// Residuals of the coalgebra-level morphism condition
/// `sum_k sum_{|I|=n} Q'_k o F_I =
///  sum_{k+l=n+1} F_l o (Q_k (x) 1...) o alpha_{k,n}`.
pub fn coalg_morphism_residuals(
    f: &CoalgMorphism,
    q_source: &Coderivation,
    q_target: &Coderivation,
) -> Result<ResidualReport> {
    if q_source.space != f.source || q_target.space != f.target {
        return Err(Error::SpaceMismatch("morphism condition: spaces do not line up".into()));
    }
    let cap = f.cap.min(q_source.cap).min(q_target.cap);
    let mut residuals = Vec::with_capacity(cap);
    for n in 1..=cap {
        let lhs = sum_all_insertions(&q_target.components, &f.components, n, 1, false)?
            .expect("n >= 1 has at least one term");
        let mut rhs = MultiMap::zero(
            f.source.clone(),
            f.target.clone(),
            n,
            q_source.degree,
            Flavor::Symmetric,
        );
        for k in 1..=n {
            let l = n + 1 - k;
            let term = shuffle_insertion(f.component(l), q_source.component(k), n, SignRule::Epsilon)?;
            rhs = rhs.add(&term)?;
        }
        residuals.push(lhs.sub(&rhs)?);
    }
    Ok(ResidualReport { residuals })
}

/// Composition of coalgebra morphisms: `(F o G)_n = sum_k F_k o G_{n,k}`.
pub fn compose_coalg(f: &CoalgMorphism, g: &CoalgMorphism) -> Result<CoalgMorphism> {
    if g.target != f.source {
        return Err(Error::SpaceMismatch("compose: target of the inner is not the source".into()));
    }
    let cap = f.cap.min(g.cap);
    let mut components = Vec::with_capacity(cap);
    for n in 1..=cap {
        let comp = sum_all_insertions(&f.components, &g.components, n, 1, false)?
            .expect("n >= 1 has at least one term");
        components.push(comp);
    }
    CoalgMorphism::new(g.source.clone(), f.target.clone(), cap, components)
}

/// Left inverse of a coalgebra morphism along a retraction `g1` of its
/// linear part, by the recursion
/// `g_n = - sum_{k=2}^{n} sum_{|I|=n} g_1 o f_k o (g_I)`.
pub fn left_inverse_coalg(f: &CoalgMorphism, g1: &LinearMap) -> Result<CoalgMorphism> {
    if g1.source != f.target || g1.target != f.source || g1.degree != 0 {
        return Err(Error::Argument("left inverse: retraction has the wrong shape".into()));
    }
    let check = g1.compose(&f.linear_part()?)?;
    if check != LinearMap::identity(f.source.clone()) {
        return Err(Error::Argument("left inverse: g1 does not retract the linear part".into()));
    }
    let cap = f.cap;
    let mut components: Vec<MultiMap> = vec![MultiMap::from_linear(g1, Flavor::Symmetric)];
    for n in 2..=cap {
        let inner = sum_all_insertions(&f.components, &components, n, 2, false)?;
        let g_n = match inner {
            None => MultiMap::zero(f.target.clone(), f.source.clone(), n, 0, Flavor::Symmetric),
            Some(t) => t.then_linear(g1)?.scale(&-scalar::one()),
        };
        components.push(g_n);
    }
    CoalgMorphism::new(f.target.clone(), f.source.clone(), cap, components)
}

/// A morphism of truncated L-infinity algebras: antisymmetric `f_n` of
/// linear degree `1 - n` from the source space to the target space. The
/// structure compatibility is checked by [`morphism_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct LInftyMorphism {
    pub source: LInftyAlgebra,
    pub target: LInftyAlgebra,
    pub cap: usize,
    pub f: Vec<MultiMap>,
}

impl LInftyMorphism {
    pub fn new(
        source: LInftyAlgebra,
        target: LInftyAlgebra,
        cap: usize,
        f: Vec<MultiMap>,
    ) -> Result<Self> {
        if f.len() != cap {
            return Err(Error::Argument(format!("expected {cap} components, got {}", f.len())));
        }
        for (i, m) in f.iter().enumerate() {
            let n = i + 1;
            if m.arity != n
                || m.flavor != Flavor::Antisymmetric
                || m.lin_degree != 1 - n as i64
                || m.source != source.space
                || m.target != target.space
            {
                return Err(Error::Argument(format!("morphism component {n} has the wrong shape")));
            }
        }
        Ok(LInftyMorphism { source, target, cap, f })
    }

    pub fn identity(algebra: &LInftyAlgebra) -> Self {
        let mut f: Vec<MultiMap> = (1..=algebra.cap)
            .map(|n| {
                MultiMap::zero(
                    algebra.space.clone(),
                    algebra.space.clone(),
                    n,
                    1 - n as i64,
                    Flavor::Antisymmetric,
                )
            })
            .collect();
        f[0] = MultiMap::from_linear(&LinearMap::identity(algebra.space.clone()), Flavor::Antisymmetric);
        LInftyMorphism { source: algebra.clone(), target: algebra.clone(), cap: algebra.cap, f }
    }

    pub fn component(&self, n: usize) -> &MultiMap {
        &self.f[n - 1]
    }

    pub fn linear_part(&self) -> Result<LinearMap> {
        self.f[0].to_linear()
    }

    pub fn is_strict(&self) -> bool {
        self.f.iter().skip(1).all(|m| m.is_zero())
    }

    /// The underlying coalgebra morphism on the shifted spaces.
    pub fn to_coalg(&self) -> Result<CoalgMorphism> {
        let components = self.f.iter().map(decalage_down).collect::<Result<Vec<_>>>()?;
        CoalgMorphism::new(
            self.source.space.shifted(),
            self.target.space.shifted(),
            self.cap,
            components,
        )
    }

    pub fn from_coalg(
        source: LInftyAlgebra,
        target: LInftyAlgebra,
        coalg: &CoalgMorphism,
    ) -> Result<Self> {
        let f = coalg
            .components
            .iter()
            .map(|c| decalage_up(c, &source.space, &target.space))
            .collect::<Result<Vec<_>>>()?;
        LInftyMorphism::new(source, target, coalg.cap, f)
    }
}

/// Verdict of the morphism condition. The coalgebra-level equation is the
/// authoritative route; when the target is a plain DGLA the specialized
/// bracket display is evaluated as well and compared, and a disagreement is
/// surfaced rather than silently repaired.
#[derive(Debug, Clone)]
pub struct MorphismReport {
    pub coalgebra: ResidualReport,
    pub dgla_display: Option<ResidualReport>,
    pub routes_agree: Option<bool>,
}

impl MorphismReport {
    pub fn passes(&self) -> bool {
        self.coalgebra.passes()
    }
}

/// Residuals of the DGLA-target display
/// `d f_n - sum chi(sigma) (-1)^{i+(j-1)(deg block)} [f_i(...), f_j(...)]
///  = sum (-1)^{k(l-1)} chi(sigma) f_l(mu_k(...), ...)`,
/// with the bracket sum over shuffles satisfying `sigma(1) < sigma(i+1)`.
pub fn dgla_display_residuals(morphism: &LInftyMorphism) -> Result<ResidualReport> {
    let target = &morphism.target;
    if !target.is_dgla_shaped() || target.cap < 2 {
        return Err(Error::Argument("display route needs a DGLA-shaped target".into()));
    }
    let d_target = target.mu(1).to_linear()?;
    let bracket = target.mu(2);
    let src_space = &morphism.source.space;
    let mut residuals = Vec::with_capacity(morphism.cap);
    for n in 1..=morphism.cap {
        let mut acc = morphism.component(n).then_linear(&d_target)?;
        // bracket terms
        let mut pair_sum = MultiMap::zero(
            src_space.clone(),
            target.space.clone(),
            n,
            2 - n as i64,
            Flavor::Antisymmetric,
        );
        for i in 1..n {
            let j = n - i;
            let f_i = morphism.component(i);
            let f_j = morphism.component(j);
            for sigma in sign::shuffles(i, n)? {
                if sigma.apply(1) >= sigma.apply(i + 1) {
                    continue;
                }
                for key in canonical_tuples(src_space, n, Flavor::Antisymmetric) {
                    let degs: Vec<i64> = key.iter().map(|&t| src_space.degree(t)).collect();
                    let chi = sign::chi_i(&sigma, &degs);
                    let block1: Vec<usize> =
                        (1..=i).map(|t| key[sigma.apply(t) - 1]).collect();
                    let block2: Vec<usize> =
                        (i + 1..=n).map(|t| key[sigma.apply(t) - 1]).collect();
                    let block1_deg: i64 =
                        block1.iter().map(|&t| src_space.degree(t)).sum();
                    let u = f_i.eval_basis(&block1);
                    if u.is_zero() {
                        continue;
                    }
                    let w = f_j.eval_basis(&block2);
                    if w.is_zero() {
                        continue;
                    }
                    let sign_exp = i as i64 + (j as i64 - 1) * block1_deg;
                    let c = scalar::from_int(chi as i64) * scalar::neg_one_pow(sign_exp);
                    let val = bracket.eval(&[u, w]).scale(&c);
                    if !val.is_zero() {
                        pair_sum.add_value(&key, &val)?;
                    }
                }
            }
        }
        acc = acc.sub(&pair_sum)?;
        // right-hand side
        for k in 1..=n {
            let l = n + 1 - k;
            let term = shuffle_insertion(
                morphism.component(l),
                morphism.source.mu(k),
                n,
                SignRule::Chi,
            )?;
            let sign = scalar::neg_one_pow(k as i64 * (l as i64 - 1));
            acc = acc.sub(&term.scale(&sign))?;
        }
        residuals.push(acc);
    }
    Ok(ResidualReport { residuals })
}

/// Checks the morphism condition at every arity up to the cap.
pub fn morphism_check(morphism: &LInftyMorphism) -> Result<MorphismReport> {
    let coalg = morphism.to_coalg()?;
    let q_source = morphism.source.to_coderivation()?;
    let q_target = morphism.target.to_coderivation()?;
    let coalgebra = coalg_morphism_residuals(&coalg, &q_source, &q_target)?;
    let (dgla_display, routes_agree) = if morphism.target.is_dgla_shaped() && morphism.target.cap >= 2
    {
        let display = dgla_display_residuals(morphism)?;
        let agree = coalgebra
            .residuals
            .iter()
            .zip(&display.residuals)
            .all(|(a, b)| a.is_zero() == b.is_zero());
        (Some(display), Some(agree))
    } else {
        (None, None)
    };
    Ok(MorphismReport { coalgebra, dgla_display, routes_agree })
}

/// Composition of L-infinity morphisms through the coalgebra level.
pub fn compose(outer: &LInftyMorphism, inner: &LInftyMorphism) -> Result<LInftyMorphism> {
    if inner.target.space != outer.source.space {
        return Err(Error::SpaceMismatch("compose: inner target is not the outer source".into()));
    }
    let coalg = compose_coalg(&outer.to_coalg()?, &inner.to_coalg()?)?;
    LInftyMorphism::from_coalg(inner.source.clone(), outer.target.clone(), &coalg)
}

/// Left inverse of an L-infinity morphism along a degree-0 retraction of
/// its linear part. When the linear part is invertible the result is a
/// two-sided inverse up to the cap.
pub fn left_inverse(morphism: &LInftyMorphism, g1: &LinearMap) -> Result<LInftyMorphism> {
    if g1.source != morphism.target.space || g1.target != morphism.source.space || g1.degree != 0 {
        return Err(Error::Argument("left_inverse: retraction has the wrong shape".into()));
    }
    let f1 = morphism.linear_part()?;
    if g1.compose(&f1)? != LinearMap::identity(morphism.source.space.clone()) {
        return Err(Error::Argument("left_inverse: g1 is not a retraction of f1".into()));
    }
    // shift the retraction to the coalgebra level
    let shifted_g1 = shift_linear(g1);
    let inverse = left_inverse_coalg(&morphism.to_coalg()?, &shifted_g1)?;
    LInftyMorphism::from_coalg(morphism.target.clone(), morphism.source.clone(), &inverse)
}

/// `down o f o up`: the same matrix between the shifted spaces.
pub fn shift_linear(map: &LinearMap) -> LinearMap {
    let mut out = LinearMap::zero(map.source.shifted(), map.target.shifted(), map.degree);
    for i in 0..map.source.dim() {
        let col = map.apply_basis(i);
        if !col.is_zero() {
            out.set_column(i, col).expect("shift preserves homogeneity");
        }
    }
    out
}

/// Direct sum of a minimal and a linear L-infinity algebra: block structure
/// maps vanishing on mixed argument tuples. Other sum shapes are not
/// supported.
pub fn direct_sum(a: &LInftyAlgebra, b: &LInftyAlgebra) -> Result<LInftyAlgebra> {
    if a.cap != b.cap {
        return Err(Error::Argument("direct_sum: caps differ".into()));
    }
    if !(a.is_minimal() && b.is_linear()) && !(a.is_linear() && b.is_minimal()) && !b.is_linear() {
        return Err(Error::Argument(
            "direct_sum supports a minimal summand plus a linear one".into(),
        ));
    }
    let mut basis = a.space.basis().to_vec();
    basis.extend(b.space.basis().iter().cloned());
    let space = GradedSpace::new(basis)?;
    let offset = a.space.dim();
    let mut mu = Vec::with_capacity(a.cap);
    for n in 1..=a.cap {
        let mut m = MultiMap::zero(space.clone(), space.clone(), n, 2 - n as i64, Flavor::Antisymmetric);
        for (key, val) in a.mu(n).entries() {
            for (to, c) in val.iter() {
                m.add_term(key, to, c.clone())?;
            }
        }
        for (key, val) in b.mu(n).entries() {
            let shifted_key: Vec<usize> = key.iter().map(|&i| i + offset).collect();
            for (to, c) in val.iter() {
                m.add_term(&shifted_key, to + offset, c.clone())?;
            }
        }
        mu.push(m);
    }
    LInftyAlgebra::new(space, a.cap, mu)
}

/// Direct sum of two morphisms into the same target: components restrict to
/// the summands and vanish on mixed tuples.
pub fn direct_sum_morphism(
    f: &LInftyMorphism,
    g: &LInftyMorphism,
) -> Result<LInftyMorphism> {
    if f.target != g.target {
        return Err(Error::SpaceMismatch("direct_sum_morphism: targets differ".into()));
    }
    if f.cap != g.cap {
        return Err(Error::Argument("direct_sum_morphism: caps differ".into()));
    }
    let sum_source = direct_sum(&f.source, &g.source)?;
    let offset = f.source.space.dim();
    let mut components = Vec::with_capacity(f.cap);
    for n in 1..=f.cap {
        let mut m = MultiMap::zero(
            sum_source.space.clone(),
            f.target.space.clone(),
            n,
            1 - n as i64,
            Flavor::Antisymmetric,
        );
        for (key, val) in f.component(n).entries() {
            for (to, c) in val.iter() {
                m.add_term(key, to, c.clone())?;
            }
        }
        for (key, val) in g.component(n).entries() {
            let shifted_key: Vec<usize> = key.iter().map(|&i| i + offset).collect();
            for (to, c) in val.iter() {
                m.add_term(&shifted_key, to, c.clone())?;
            }
        }
        components.push(m);
    }
    LInftyMorphism::new(sum_source, f.target.clone(), f.cap, components)
}

/// Exposes the naive all-orderings route of the `F_I` sums so tests can pin
/// the sorted-multi-index enumeration against it.
pub fn sum_insertions_for_test(
    outer: &MultiMap,
    parts: &[MultiMap],
    n: usize,
    naive: bool,
) -> Result<MultiMap> {
    sum_insertions(outer, parts, n, naive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::GradedSpace;

    fn space() -> GradedSpace {
        GradedSpace::from_pairs(&[("a", 0), ("b", 1), ("c", 1), ("d", 2)]).unwrap()
    }

    fn d_map(s: &GradedSpace) -> LinearMap {
        let mut d = LinearMap::zero(s.clone(), s.clone(), 1);
        d.add_entry(0, 1, scalar::one()).unwrap();
        d.add_entry(2, 3, scalar::from_int(2)).unwrap();
        d
    }

    /// A coderivation with only a linear component squaring to zero.
    fn linear_coderivation(cap: usize) -> Coderivation {
        let s = space(); // treated as the shifted space directly
        let mut q1 = MultiMap::zero(s.clone(), s.clone(), 1, 1, Flavor::Symmetric);
        q1.add_term(&[0], 1, scalar::one()).unwrap();
        q1.add_term(&[2], 3, scalar::from_int(2)).unwrap();
        let mut components = vec![q1];
        for n in 2..=cap {
            components.push(MultiMap::zero(s.clone(), s.clone(), n, 1, Flavor::Symmetric));
        }
        Coderivation::new(s, cap, 1, components).unwrap()
    }

    #[test]
    fn square_zero_linear_coderivation_is_codifferential() {
        let q = linear_coderivation(3);
        let report = is_codifferential(&q).unwrap();
        assert!(report.passes());
        let bracket = coder_bracket(&q, &q).unwrap();
        assert!(bracket.is_zero());
    }

    #[test]
    fn bracket_of_odd_with_itself_doubles_the_residual() {
        // [Q, Q]_n = 2 * residual_n for degree-1 Q
        let s = space();
        let mut q1 = MultiMap::zero(s.clone(), s.clone(), 1, 1, Flavor::Symmetric);
        q1.add_term(&[0], 1, scalar::one()).unwrap();
        let mut q2 = MultiMap::zero(s.clone(), s.clone(), 2, 1, Flavor::Symmetric);
        q2.add_term(&[0, 1], 3, scalar::one()).unwrap();
        let q = Coderivation::new(s.clone(), 3, 1, vec![
            q1,
            q2,
            MultiMap::zero(s.clone(), s.clone(), 3, 1, Flavor::Symmetric),
        ])
        .unwrap();
        let bracket = coder_bracket(&q, &q).unwrap();
        let residuals = is_codifferential(&q).unwrap();
        for n in 1..=3 {
            assert_eq!(
                bracket.component(n),
                &residuals.residuals[n - 1].scale(&scalar::from_int(2)),
                "arity {n}"
            );
        }
    }

    #[test]
    fn bracket_is_graded_antisymmetric() {
        let s = space();
        let mk = |entries: &[(usize, usize, i64)], deg: i64, arity: usize| {
            let mut m = MultiMap::zero(s.clone(), s.clone(), arity, deg, Flavor::Symmetric);
            for &(from, to, c) in entries {
                if arity == 1 {
                    m.add_term(&[from], to, scalar::from_int(c)).unwrap();
                }
            }
            m
        };
        // Q of degree 1, q of degree 2 (indices chosen to respect degrees)
        let mut q2 = MultiMap::zero(s.clone(), s.clone(), 2, 1, Flavor::Symmetric);
        q2.add_term(&[0, 1], 3, scalar::from_int(3)).unwrap();
        let big = Coderivation::new(
            s.clone(),
            3,
            1,
            vec![
                mk(&[(0, 1, 1)], 1, 1),
                q2,
                MultiMap::zero(s.clone(), s.clone(), 3, 1, Flavor::Symmetric),
            ],
        )
        .unwrap();
        let mut p1 = MultiMap::zero(s.clone(), s.clone(), 1, 2, Flavor::Symmetric);
        p1.add_term(&[0], 3, scalar::from_int(5)).unwrap();
        let mut p2 = MultiMap::zero(s.clone(), s.clone(), 2, 2, Flavor::Symmetric);
        p2.add_term(&[0, 0], 3, scalar::from_int(-2)).unwrap();
        let small = Coderivation::new(
            s.clone(),
            3,
            2,
            vec![p1, p2, MultiMap::zero(s.clone(), s.clone(), 3, 2, Flavor::Symmetric)],
        )
        .unwrap();
        let ab = coder_bracket(&big, &small).unwrap();
        let ba = coder_bracket(&small, &big).unwrap();
        let sign = scalar::neg_one_pow(big.degree * small.degree);
        for n in 1..=3 {
            assert_eq!(ab.component(n), &ba.component(n).scale(&(-sign.clone())), "arity {n}");
        }
    }

    #[test]
    fn sorted_compositions_match_naive_enumeration() {
        for n in 1..=6usize {
            for k in 1..=n {
                let naive = compositions(n, k);
                let sorted = sorted_compositions(n, k);
                let total: usize = sorted.iter().map(|(_, m)| m).sum();
                assert_eq!(total, naive.len(), "n={n} k={k}");
                for (parts, _) in &sorted {
                    assert!(parts.windows(2).all(|w| w[0] <= w[1]));
                    assert_eq!(parts.iter().sum::<usize>(), n);
                }
            }
        }
    }

    #[test]
    fn identity_morphism_respects_any_codifferential() {
        let q = linear_coderivation(3);
        let f = CoalgMorphism::identity(q.space.clone(), 3);
        let report = coalg_morphism_residuals(&f, &q, &q).unwrap();
        assert!(report.passes());
        assert!(f.is_identity());
    }

    #[test]
    fn compose_with_identity_is_identity() {
        let s = space();
        // nonstrict morphism: f2(b, c) lands in degree 2
        let mut f2 = MultiMap::zero(s.clone(), s.clone(), 2, 0, Flavor::Symmetric);
        f2.add_term(&[1, 2], 3, scalar::from_int(7)).unwrap(); // 1+1 = 2 = deg d
        let f = CoalgMorphism::new(
            s.clone(),
            s.clone(),
            3,
            vec![
                MultiMap::from_linear(&LinearMap::identity(s.clone()), Flavor::Symmetric),
                f2,
                MultiMap::zero(s.clone(), s.clone(), 3, 0, Flavor::Symmetric),
            ],
        )
        .unwrap();
        let id = CoalgMorphism::identity(s.clone(), 3);
        assert_eq!(compose_coalg(&f, &id).unwrap(), f);
        assert_eq!(compose_coalg(&id, &f).unwrap(), f);
    }

    #[test]
    fn composition_of_strict_morphisms_is_strict() {
        let s = space();
        let mut a1 = LinearMap::identity(s.clone()).scale(&scalar::from_int(2));
        a1.add_entry(1, 2, scalar::from_int(3)).unwrap();
        let strict = |m: &LinearMap| {
            CoalgMorphism::new(
                s.clone(),
                s.clone(),
                2,
                vec![
                    MultiMap::from_linear(m, Flavor::Symmetric),
                    MultiMap::zero(s.clone(), s.clone(), 2, 0, Flavor::Symmetric),
                ],
            )
            .unwrap()
        };
        let f = strict(&a1);
        let g = strict(&LinearMap::identity(s.clone()));
        let fg = compose_coalg(&f, &g).unwrap();
        assert!(fg.is_strict());
        assert_eq!(fg.linear_part().unwrap(), a1);
    }

    #[test]
    fn left_inverse_of_strict_invertible_is_strict_inverse() {
        let s = space();
        // invertible diagonal-ish degree-0 map
        let mut m = LinearMap::zero(s.clone(), s.clone(), 0);
        m.add_entry(0, 0, scalar::from_int(2)).unwrap();
        m.add_entry(1, 1, scalar::from_int(3)).unwrap();
        m.add_entry(2, 2, scalar::one()).unwrap();
        m.add_entry(2, 1, scalar::one()).unwrap(); // mixes the two degree-1 basis vectors
        m.add_entry(3, 3, scalar::from_int(-1)).unwrap();
        let mut minv = LinearMap::zero(s.clone(), s.clone(), 0);
        minv.add_entry(0, 0, scalar::ratio(1, 2)).unwrap();
        minv.add_entry(1, 1, scalar::ratio(1, 3)).unwrap();
        minv.add_entry(2, 2, scalar::one()).unwrap();
        minv.add_entry(2, 1, scalar::ratio(-1, 3)).unwrap();
        minv.add_entry(3, 3, scalar::from_int(-1)).unwrap();
        assert_eq!(minv.compose(&m).unwrap(), LinearMap::identity(s.clone()));
        let f = CoalgMorphism::new(
            s.clone(),
            s.clone(),
            3,
            vec![
                MultiMap::from_linear(&m, Flavor::Symmetric),
                MultiMap::zero(s.clone(), s.clone(), 2, 0, Flavor::Symmetric),
                MultiMap::zero(s.clone(), s.clone(), 3, 0, Flavor::Symmetric),
            ],
        )
        .unwrap();
        let g = left_inverse_coalg(&f, &minv).unwrap();
        assert!(g.is_strict());
        assert!(compose_coalg(&g, &f).unwrap().is_identity());
        assert!(compose_coalg(&f, &g).unwrap().is_identity());
    }

    #[test]
    fn left_inverse_quadratic_component_formula() {
        // g_2 = -g1 o F_2 o (g1 . g1), including the 1/(I! k!) normalization
        let s = space();
        let mut f2 = MultiMap::zero(s.clone(), s.clone(), 2, 0, Flavor::Symmetric);
        f2.add_term(&[1, 2], 3, scalar::from_int(5)).unwrap();
        f2.add_term(&[0, 1], 1, scalar::from_int(-3)).unwrap();
        let f = CoalgMorphism::new(
            s.clone(),
            s.clone(),
            2,
            vec![
                MultiMap::from_linear(&LinearMap::identity(s.clone()), Flavor::Symmetric),
                f2.clone(),
            ],
        )
        .unwrap();
        let g = left_inverse_coalg(&f, &LinearMap::identity(s.clone())).unwrap();
        assert_eq!(g.component(2), &f2.scale(&-scalar::one()));
        assert!(compose_coalg(&g, &f).unwrap().is_identity());
        assert!(compose_coalg(&f, &g).unwrap().is_identity());
    }

    #[test]
    fn left_inverse_two_sided_for_nonstrict_cap_four() {
        let s = space();
        let mut f2 = MultiMap::zero(s.clone(), s.clone(), 2, 0, Flavor::Symmetric);
        f2.add_term(&[1, 2], 3, scalar::from_int(2)).unwrap();
        f2.add_term(&[0, 0], 0, scalar::ratio(1, 2)).unwrap();
        let mut f3 = MultiMap::zero(s.clone(), s.clone(), 3, 0, Flavor::Symmetric);
        f3.add_term(&[0, 1, 2], 3, scalar::from_int(-4)).unwrap();
        let f = CoalgMorphism::new(
            s.clone(),
            s.clone(),
            4,
            vec![
                MultiMap::from_linear(&LinearMap::identity(s.clone()), Flavor::Symmetric),
                f2,
                f3,
                MultiMap::zero(s.clone(), s.clone(), 4, 0, Flavor::Symmetric),
            ],
        )
        .unwrap();
        let g = left_inverse_coalg(&f, &LinearMap::identity(s.clone())).unwrap();
        assert!(compose_coalg(&g, &f).unwrap().is_identity());
        assert!(compose_coalg(&f, &g).unwrap().is_identity());
    }

    #[test]
    fn composition_is_associative_at_cap_three() {
        let s = space();
        let mk = |c2: i64, c3: i64| {
            let mut f2 = MultiMap::zero(s.clone(), s.clone(), 2, 0, Flavor::Symmetric);
            f2.add_term(&[1, 2], 3, scalar::from_int(c2)).unwrap();
            let mut f3 = MultiMap::zero(s.clone(), s.clone(), 3, 0, Flavor::Symmetric);
            f3.add_term(&[0, 1, 2], 3, scalar::from_int(c3)).unwrap();
            CoalgMorphism::new(
                s.clone(),
                s.clone(),
                3,
                vec![
                    MultiMap::from_linear(&LinearMap::identity(s.clone()), Flavor::Symmetric),
                    f2,
                    f3,
                ],
            )
            .unwrap()
        };
        let a = mk(1, 2);
        let b = mk(-3, 5);
        let c = mk(7, -1);
        let left = compose_coalg(&compose_coalg(&a, &b).unwrap(), &c).unwrap();
        let right = compose_coalg(&a, &compose_coalg(&b, &c).unwrap()).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn naive_and_sorted_composition_sums_agree() {
        let s = space();
        let mut f2 = MultiMap::zero(s.clone(), s.clone(), 2, 0, Flavor::Symmetric);
        f2.add_term(&[1, 2], 3, scalar::from_int(2)).unwrap();
        let mut f3 = MultiMap::zero(s.clone(), s.clone(), 3, 0, Flavor::Symmetric);
        f3.add_term(&[0, 1, 2], 3, scalar::from_int(-1)).unwrap();
        let parts = vec![
            MultiMap::from_linear(&LinearMap::identity(s.clone()), Flavor::Symmetric),
            f2,
            f3,
            MultiMap::zero(s.clone(), s.clone(), 4, 0, Flavor::Symmetric),
        ];
        let mut q2 = MultiMap::zero(s.clone(), s.clone(), 2, 1, Flavor::Symmetric);
        q2.add_term(&[0, 1], 3, scalar::from_int(3)).unwrap();
        for n in 1..=4usize {
            for outer in [&parts[0], &q2] {
                if outer.arity > n {
                    continue;
                }
                let sorted = sum_insertions_for_test(outer, &parts, n, false).unwrap();
                let naive = sum_insertions_for_test(outer, &parts, n, true).unwrap();
                assert_eq!(sorted, naive, "n={n}, outer arity {}", outer.arity);
            }
        }
    }
}
