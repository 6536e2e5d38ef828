use linfty_core::coalgebra::morphism_check;
use linfty_core::corpus::random_dgla;
use linfty_core::transfer::*;

#[test]
fn probe_g_residual_entries() {
    let seed = 6u64;
    let l = random_dgla(seed);
    println!("L basis: {:?}", l.space.basis());
    println!("bracket entries:");
    for (k, v) in l.bracket.entries() { println!("  {:?} -> {:?}", k, v); }
    let eta = build_splitting(&l).unwrap();
    let hd = hodge(&l, &eta).unwrap();
    println!("F basis: {:?}", hd.f_space.basis());
    println!("f_include columns:");
    for i in 0..hd.f_space.dim() { println!("  f{} -> {:?}", i+1, hd.f_include.apply_basis(i)); }
    let g = embed_g(&l, &eta, &hd, 3, AlphaNormalization::Raw).unwrap();
    println!("source mu_1 (d_F):");
    for (k, v) in g.source.mu(1).entries() { println!("  {:?} -> {:?}", k, v); }
    println!("g_2:");
    for (k, v) in g.component(2).entries() { println!("  {:?} -> {:?}", k, v); }
    let rep = morphism_check(&g).unwrap();
    println!("residual arity 2:");
    for (k, v) in rep.coalgebra.residuals[1].entries() { println!("  {:?} -> {:?}", k, v); }
    panic!("show");
}
