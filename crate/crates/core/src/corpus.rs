//! Deterministic random generators for small split DGLAs over the
//! rationals, used by the test suites. Every template satisfies the axioms
//! by construction; a random degree-preserving change of basis scrambles
//! the structure constants afterwards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graded::{GradedSpace, LinearMap, SparseVec};
use crate::linalg::{Matrix, SpanSolver};
use crate::multimap::{Flavor, MultiMap};
use crate::scalar::{self, Scalar};
use crate::transfer::{validate_dgla, DGLA};

fn small_scalar(rng: &mut ChaCha8Rng) -> Scalar {
    let n = rng.gen_range(-3i64..=3);
    let n = if n == 0 { 1 } else { n };
    let d = *[1i64, 1, 2].get(rng.gen_range(0..3)).unwrap();
    scalar::ratio(n, d)
}

/// Two-step nilpotent graded Lie algebra with the differential given by
/// bracketing with a degree-1 generator. Brackets of generators land in a
/// central layer, which kills every iterated bracket, so the Jacobi
/// identity holds identically; the inner differential squares to zero
/// because the chosen generator brackets trivially with itself.
fn nilpotent_inner(rng: &mut ChaCha8Rng) -> DGLA {
    let gen_count = rng.gen_range(2..=3usize);
    let center_count = rng.gen_range(1..=(6 - gen_count).min(3));
    let mut basis: Vec<(String, i64)> = Vec::new();
    let mut gen_degrees = vec![1i64];
    for _ in 1..gen_count {
        gen_degrees.push(rng.gen_range(-1i64..=2));
    }
    for (i, d) in gen_degrees.iter().enumerate() {
        basis.push((format!("n{}", i + 1), *d));
    }
    let mut pair_sums = Vec::new();
    for i in 0..gen_count {
        for j in i..gen_count {
            if !(i == 0 && j == 0) {
                pair_sums.push(gen_degrees[i] + gen_degrees[j]);
            }
        }
    }
    let mut center_degrees = Vec::new();
    for t in 0..center_count {
        let pick = pair_sums[rng.gen_range(0..pair_sums.len())];
        center_degrees.push(pick);
        basis.push((format!("z{}", t + 1), pick));
    }
    let space = GradedSpace::new(basis).unwrap();
    let mut bracket = MultiMap::zero(space.clone(), space.clone(), 2, 0, Flavor::Antisymmetric);
    for i in 0..gen_count {
        for j in i..gen_count {
            if i == 0 && j == 0 {
                continue; // the differential generator kills itself
            }
            if i == j && gen_degrees[i].rem_euclid(2) == 0 {
                continue; // repeated even-degree arguments vanish
            }
            for (t, &zdeg) in center_degrees.iter().enumerate() {
                if zdeg == gen_degrees[i] + gen_degrees[j] && rng.gen_bool(0.7) {
                    bracket.add_term(&[i, j], gen_count + t, small_scalar(rng)).unwrap();
                }
            }
        }
    }
    // d = [n1, -]
    let mut d = LinearMap::zero(space.clone(), space.clone(), 1);
    for j in 0..space.dim() {
        let img = bracket.eval(&[SparseVec::unit(0), SparseVec::unit(j)]);
        if !img.is_zero() {
            d.set_column(j, img).unwrap();
        }
    }
    DGLA::new(space, d, bracket).unwrap()
}

/// Six-dimensional two-step nilpotent algebra arranged so that harmonic
/// classes bracket into the exact part of the center: `[n1, n2] = z1`
/// makes `z1` exact, `[n3, n4]` hits `z1` again, and the remaining central
/// coordinates stay non-exact. The transferred structure on the cohomology
/// then has nonvanishing higher components.
fn obstructed_nilpotent(rng: &mut ChaCha8Rng) -> DGLA {
    let t = rng.gen_range(0i64..=2);
    let space = GradedSpace::new(vec![
        ("n1".to_string(), 1),
        ("n2".to_string(), t),
        ("n3".to_string(), 1),
        ("n4".to_string(), t),
        ("z1".to_string(), t + 1),
        ("z2".to_string(), t + 1),
    ])
    .unwrap();
    let nonzero = |rng: &mut ChaCha8Rng| {
        let c = small_scalar(rng);
        if c == scalar::zero() {
            scalar::one()
        } else {
            c
        }
    };
    let mut b = MultiMap::zero(space.clone(), space.clone(), 2, 0, Flavor::Antisymmetric);
    b.add_term(&[0, 1], 4, nonzero(rng)).unwrap(); // [n1, n2] = z1
    b.add_term(&[2, 3], 4, nonzero(rng)).unwrap(); // [n3, n4] hits z1
    if rng.gen_bool(0.6) {
        b.add_term(&[2, 3], 5, small_scalar(rng)).unwrap();
    }
    b.add_term(&[1, 2], 5, nonzero(rng)).unwrap(); // [n2, n3] hits z2
    if rng.gen_bool(0.4) {
        b.add_term(&[1, 2], 4, small_scalar(rng)).unwrap();
    }
    if t == 1 {
        // extra brackets available when every generator sits in degree 1
        if rng.gen_bool(0.5) {
            b.add_term(&[1, 3], 5, small_scalar(rng)).unwrap();
        }
        if rng.gen_bool(0.4) {
            b.add_term(&[2, 2], 5, small_scalar(rng)).unwrap();
        }
        if rng.gen_bool(0.4) {
            b.add_term(&[3, 3], 4, small_scalar(rng)).unwrap();
        }
    }
    if t == 1 && rng.gen_bool(0.2) {
        // occasionally let the differential also hit n3
        b.add_term(&[0, 2], 4, small_scalar(rng)).unwrap();
    }
    let mut d = LinearMap::zero(space.clone(), space.clone(), 1);
    for j in 0..space.dim() {
        let img = b.eval(&[SparseVec::unit(0), SparseVec::unit(j)]);
        if !img.is_zero() {
            d.set_column(j, img).unwrap();
        }
    }
    DGLA::new(space, d, b).unwrap()
}

/// A Lie algebra in degree zero tensored with a square-zero augmented
/// algebra carrying a random differential: the Lie factor supplies the
/// brackets, the augmentation layers the differential.
fn tensor_square_zero(rng: &mut ChaCha8Rng) -> DGLA {
    let use_sl2 = rng.gen_bool(0.4);
    let lie_dim = if use_sl2 { 3 } else { 2 };
    let aug_count = rng.gen_range(1..=(6 / lie_dim - 1).max(1));
    let mut basis: Vec<(String, i64)> = Vec::new();
    for i in 0..lie_dim {
        basis.push((format!("g{}", i + 1), 0));
    }
    let mut aug_degrees = Vec::new();
    for t in 0..aug_count {
        let deg = rng.gen_range(0i64..=2);
        aug_degrees.push(deg);
        for i in 0..lie_dim {
            basis.push((format!("g{}a{}", i + 1, t + 1), deg));
        }
    }
    let space = GradedSpace::new(basis).unwrap();
    let idx = |i: usize, layer: usize| -> usize {
        if layer == 0 {
            i
        } else {
            lie_dim + (layer - 1) * lie_dim + i
        }
    };
    let mut bracket = MultiMap::zero(space.clone(), space.clone(), 2, 0, Flavor::Antisymmetric);
    let mut lie = vec![vec![SparseVec::zero(); lie_dim]; lie_dim];
    if use_sl2 {
        lie[0][1] = SparseVec::unit(2);
        lie[2][0] = SparseVec::unit(0).scale(&scalar::from_int(2));
        lie[2][1] = SparseVec::unit(1).scale(&scalar::from_int(-2));
    } else {
        lie[0][1] = SparseVec::unit(1);
    }
    for i in 0..lie_dim {
        for j in 0..lie_dim {
            if lie[i][j].is_zero() && !lie[j][i].is_zero() {
                lie[i][j] = lie[j][i].negate();
            }
        }
    }
    for i in 0..lie_dim {
        for j in 0..lie_dim {
            let target = lie[i][j].clone();
            if target.is_zero() {
                continue;
            }
            for (to, c) in target.iter() {
                if i < j {
                    bracket.add_term(&[idx(i, 0), idx(j, 0)], idx(to, 0), c.clone()).unwrap();
                }
                for t in 1..=aug_count {
                    bracket.add_term(&[idx(i, 0), idx(j, t)], idx(to, t), c.clone()).unwrap();
                }
            }
        }
    }
    // pair augmentation layers of adjacent degree; one source per target
    let mut d = LinearMap::zero(space.clone(), space.clone(), 1);
    let mut used: Vec<bool> = vec![false; aug_count];
    for t in 0..aug_count {
        if used[t] {
            continue;
        }
        for u in 0..aug_count {
            if t != u && !used[u] && aug_degrees[u] == aug_degrees[t] + 1 && rng.gen_bool(0.8) {
                let c = small_scalar(rng);
                for i in 0..lie_dim {
                    d.add_entry(idx(i, t + 1), idx(i, u + 1), c.clone()).unwrap();
                }
                used[t] = true;
                used[u] = true;
                break;
            }
        }
    }
    let candidate = DGLA::new(space.clone(), d, bracket.clone()).unwrap();
    if validate_dgla(&candidate).is_empty() {
        candidate
    } else {
        DGLA::new(space.clone(), LinearMap::zero(space.clone(), space, 1), bracket).unwrap()
    }
}

/// Abelian bracket with a random square-zero differential.
fn abelian_complex(rng: &mut ChaCha8Rng) -> DGLA {
    let dim = rng.gen_range(2..=6usize);
    let mut basis = Vec::new();
    for i in 0..dim {
        basis.push((format!("a{}", i + 1), rng.gen_range(-1i64..=2)));
    }
    let space = GradedSpace::new(basis).unwrap();
    let mut d = LinearMap::zero(space.clone(), space.clone(), 1);
    let mut used_target = vec![false; dim];
    let mut used_source = vec![false; dim];
    for from in 0..dim {
        if used_source[from] || used_target[from] {
            continue;
        }
        for to in 0..dim {
            if to != from
                && !used_target[to]
                && !used_source[to]
                && space.degree(to) == space.degree(from) + 1
                && rng.gen_bool(0.7)
            {
                d.add_entry(from, to, small_scalar(rng)).unwrap();
                used_source[from] = true;
                used_target[to] = true;
                break;
            }
        }
    }
    let bracket = MultiMap::zero(space.clone(), space.clone(), 2, 0, Flavor::Antisymmetric);
    DGLA::new(space, d, bracket).unwrap()
}

/// The endomorphisms of a one-even one-odd line, graded homologically:
/// two degree-0 diagonal units, a degree 1 and a degree -1 off-diagonal
/// element, with the matrix super-commutator. The differential brackets
/// with the degree-1 element. Not nilpotent, so the embedding of the
/// contractible part has nonvanishing higher components.
fn gl_one_one(rng: &mut ChaCha8Rng) -> DGLA {
    let space = GradedSpace::new(vec![
        ("e11".to_string(), 0),
        ("e22".to_string(), 0),
        ("e12".to_string(), 1),
        ("e21".to_string(), -1),
    ])
    .unwrap();
    let c = {
        let v = small_scalar(rng);
        if v == scalar::zero() {
            scalar::one()
        } else {
            v
        }
    };
    let mut b = MultiMap::zero(space.clone(), space.clone(), 2, 0, Flavor::Antisymmetric);
    // [e11, e12] = e12, [e22, e12] = -e12, [e11, e21] = -e21,
    // [e22, e21] = e21, [e12, e21] = e11 + e22, all scaled by a unit
    b.add_term(&[0, 2], 2, c.clone()).unwrap();
    b.add_term(&[1, 2], 2, -c.clone()).unwrap();
    b.add_term(&[0, 3], 3, -c.clone()).unwrap();
    b.add_term(&[1, 3], 3, c.clone()).unwrap();
    b.add_term(&[2, 3], 0, c.clone()).unwrap();
    b.add_term(&[2, 3], 1, c.clone()).unwrap();
    // d = [e12, -]
    let mut d = LinearMap::zero(space.clone(), space.clone(), 1);
    for j in 0..space.dim() {
        let img = b.eval(&[SparseVec::unit(2), SparseVec::unit(j)]);
        if !img.is_zero() {
            d.set_column(j, img).unwrap();
        }
    }
    DGLA::new(space, d, b).unwrap()
}

/// Zero differential, nonabelian bracket.
fn zero_differential(rng: &mut ChaCha8Rng) -> DGLA {
    let use_sl2 = rng.gen_bool(0.5);
    let space = if use_sl2 {
        GradedSpace::from_pairs(&[("e", 0), ("f", 0), ("h", 0)]).unwrap()
    } else {
        GradedSpace::from_pairs(&[("p", 0), ("q", 0)]).unwrap()
    };
    let mut bracket = MultiMap::zero(space.clone(), space.clone(), 2, 0, Flavor::Antisymmetric);
    if use_sl2 {
        bracket.add_term(&[0, 1], 2, scalar::one()).unwrap();
        bracket.add_term(&[2, 0], 0, scalar::from_int(2)).unwrap();
        bracket.add_term(&[2, 1], 1, scalar::from_int(-2)).unwrap();
    } else {
        bracket.add_term(&[0, 1], 1, small_scalar(rng)).unwrap();
    }
    let d = LinearMap::zero(space.clone(), space.clone(), 1);
    DGLA::new(space, d, bracket).unwrap()
}

/// Degree-preserving invertible change of basis with small integer
/// entries, as a unit-lower times unit-upper triangular block per degree.
fn random_conjugator(rng: &mut ChaCha8Rng, space: &GradedSpace) -> (LinearMap, LinearMap) {
    let mut p = LinearMap::zero(space.clone(), space.clone(), 0);
    for deg in space.degrees_present() {
        let block = space.indices_of_degree(deg);
        let n = block.len();
        let mut lower = Matrix::identity(n);
        let mut upper = Matrix::identity(n);
        for i in 0..n {
            for j in 0..i {
                if rng.gen_bool(0.5) {
                    lower.set(i, j, scalar::from_int(rng.gen_range(-2i64..=2)));
                }
            }
            for j in i + 1..n {
                if rng.gen_bool(0.5) {
                    upper.set(i, j, scalar::from_int(rng.gen_range(-2i64..=2)));
                }
            }
        }
        for (local_j, &j) in block.iter().enumerate() {
            let mut col = SparseVec::zero();
            for (local_i, &i) in block.iter().enumerate() {
                let mut acc = scalar::zero();
                for t in 0..n {
                    acc += lower.get(local_i, t) * upper.get(t, local_j);
                }
                col.add_scaled_unit(i, &acc);
            }
            p.set_column(j, col).unwrap();
        }
    }
    let dim = space.dim();
    let cols: Vec<Vec<Scalar>> = (0..dim)
        .map(|j| {
            let v = p.apply_basis(j);
            (0..dim).map(|i| v.get(i)).collect()
        })
        .collect();
    let solver = SpanSolver::new(dim, &cols);
    let mut p_inv = LinearMap::zero(space.clone(), space.clone(), 0);
    for i in 0..dim {
        let mut unit = vec![scalar::zero(); dim];
        unit[i] = scalar::one();
        let coords = solver.coordinates(&unit).expect("triangular product is invertible");
        let mut col = SparseVec::zero();
        for (t, c) in coords.iter().enumerate() {
            col.add_scaled_unit(t, c);
        }
        p_inv.set_column(i, col).unwrap();
    }
    (p, p_inv)
}

fn conjugate(l: &DGLA, p: &LinearMap, p_inv: &LinearMap) -> DGLA {
    let d = p.compose(&l.d.compose(p_inv).unwrap()).unwrap();
    let bracket = l.bracket.restrict_source(p_inv).unwrap().then_linear(p).unwrap();
    DGLA::new(l.space.clone(), d, bracket).unwrap()
}

/// A deterministic random split DGLA of dimension at most 6. The template
/// rotates with the seed; every returned value passes `validate_dgla`.
pub fn random_dgla(seed: u64) -> DGLA {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = match seed % 10 {
        0 | 1 | 2 | 3 => obstructed_nilpotent(&mut rng),
        4 | 5 => nilpotent_inner(&mut rng),
        6 => gl_one_one(&mut rng),
        7 => tensor_square_zero(&mut rng),
        8 => abelian_complex(&mut rng),
        _ => zero_differential(&mut rng),
    };
    let l = if rng.gen_bool(0.8) {
        let (p, p_inv) = random_conjugator(&mut rng, &raw.space);
        conjugate(&raw, &p, &p_inv)
    } else {
        raw
    };
    debug_assert!(validate_dgla(&l).is_empty());
    l
}

/// A random homogeneous vector of the given degree.
pub fn random_vector(space: &GradedSpace, degree: i64, seed: u64) -> SparseVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut v = SparseVec::zero();
    for i in space.indices_of_degree(degree) {
        if rng.gen_bool(0.7) {
            v.add_scaled_unit(i, &small_scalar(&mut rng));
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::{build_splitting, hodge, transfer_mu, AlphaNormalization};

    #[test]
    fn corpus_members_are_valid_dglas() {
        for seed in 0..60u64 {
            let l = random_dgla(seed);
            assert!(l.space.dim() <= 6, "seed {seed} too big");
            let violations = validate_dgla(&l);
            assert!(violations.is_empty(), "seed {seed}: {violations:?}");
        }
    }

    #[test]
    fn corpus_contains_nontrivial_higher_structure() {
        let mut nonzero_mu3 = 0usize;
        let mut nonzero_mu4 = 0usize;
        for seed in 0..40u64 {
            let l = random_dgla(seed);
            let eta = build_splitting(&l).unwrap();
            let hd = hodge(&l, &eta).unwrap();
            let algebra = transfer_mu(&l, &eta, &hd, 4, AlphaNormalization::Raw).unwrap();
            if !algebra.mu(3).is_zero() {
                nonzero_mu3 += 1;
            }
            if !algebra.mu(4).is_zero() {
                nonzero_mu4 += 1;
            }
        }
        assert!(nonzero_mu3 >= 3, "only {nonzero_mu3} seeds with nonzero mu_3");
        assert!(nonzero_mu4 >= 1, "only {nonzero_mu4} seeds with nonzero mu_4");
    }
}
