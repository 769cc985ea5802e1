//! Ready-made splittings and representatives used by tests, samples, and
//! documentation: one-loop HNN splittings of F_r and small shared-graph
//! upper-triangular representatives.

use crate::gog::{DehnTwist, GogEdge, GraphOfGroups};
use crate::graphs::{FilteredGraph, UTRep};
use crate::words::{Letter, Word};

/// One-loop splitting of F_rank: a single vertex with one loop edge whose
/// stable letter is the generator `stable` and whose edge group is generated
/// by the letter `zgen` (≠ stable). The twist by `z^twist` induces
/// `x_stable ↦ z^twist·x_stable` (prefix form) or `x_stable ↦ x_stable·z^twist`
/// (suffix form).
pub fn loop_splitting(
    rank: usize,
    stable: Letter,
    zgen: Letter,
    twist: i64,
    suffix_form: bool,
) -> (GraphOfGroups, DehnTwist) {
    assert!(stable != zgen && stable > 0 && zgen > 0);
    let s = Word::letter(rank, stable);
    let z = Word::letter(rank, zgen);
    let conj = if suffix_form {
        s.times(&z).times(&s.inverse())
    } else {
        s.inverse().times(&z).times(&s)
    };
    let mut basis = vec![conj.clone()];
    for l in 1..=rank as Letter {
        if l != stable {
            basis.push(Word::letter(rank, l));
        }
    }
    let (iota_from, iota_to) = if suffix_form { (conj, z.clone()) } else { (z.clone(), conj) };
    let edge_name = ((b'a' + (stable.unsigned_abs() - 1) as u8) as char).to_string();
    let gog = GraphOfGroups::new(
        rank,
        vec!["v".into()],
        vec![basis],
        vec![GogEdge {
            name: edge_name,
            from: 0,
            to: 0,
            generator: z,
            iota_from,
            iota_to,
            stable: s,
        }],
        0,
    )
    .expect("valid splitting");
    let tw = DehnTwist::new(gog.clone(), vec![twist]).expect("valid twist");
    (gog, tw)
}

/// Two loops at one vertex, both with edge group ⟨c⟩, the common refinement
/// shape for a pair of disjoint twists on F_3. Returns the graph and the two
/// exponent systems realizing `a ↦ ac` and `b ↦ bc`.
pub fn two_loop_graph() -> (GraphOfGroups, Vec<i64>, Vec<i64>) {
    let w = |s: &str| Word::parse(3, s).unwrap();
    let gog = GraphOfGroups::new(
        3,
        vec!["v".into()],
        vec![vec![w("c"), w("acA"), w("bcB")]],
        vec![
            GogEdge {
                name: "a".into(),
                from: 0,
                to: 0,
                generator: w("c"),
                iota_from: w("acA"),
                iota_to: w("c"),
                stable: w("a"),
            },
            GogEdge {
                name: "b".into(),
                from: 0,
                to: 0,
                generator: w("c"),
                iota_from: w("bcB"),
                iota_to: w("c"),
                stable: w("b"),
            },
        ],
        0,
    )
    .expect("valid graph");
    (gog, vec![1, 0], vec![0, 1])
}

/// The rank-4 upper-triangular representative
/// `a ↦ adbcb⁻¹d⁻¹, b ↦ bc, c ↦ c, d ↦ d` on the rose filtered d < c < b < a.
pub fn quadruple_rose_rep() -> UTRep {
    let graph = FilteredGraph::rose(4, &[4, 3, 2, 1]);
    // strata: 0 = d, 1 = c, 2 = b, 3 = a
    UTRep::new(graph, vec![vec![], vec![], vec![2], vec![1, 3, 2, -3, -1]]).unwrap()
}

/// The guiding F_3 pair on a shared filtered rose with reversed preferred
/// orientations (strata c̄ < b̄ < ā): `σ: a ↦ ba`, `τ: b ↦ cb`, upper
/// triangular as `σ̂(ā) = ā·b̄` and `τ̂(b̄) = b̄·c̄`.
pub fn elliptic_hyperbolic_pair_reps() -> (UTRep, UTRep) {
    let graph = FilteredGraph::rose(3, &[-3, -2, -1]);
    let sigma = UTRep::new(graph.clone(), vec![vec![], vec![], vec![2]]).unwrap();
    let tau = UTRep::new(graph, vec![vec![], vec![1], vec![]]).unwrap();
    (sigma, tau)
}

/// The guiding F_3 pair `σ: a ↦ ba`, `ρ: a ↦ ca` on the same shared rose:
/// `σ̂(ā) = ā·b̄` and `ρ̂(ā) = ā·c̄`.
pub fn elliptic_elliptic_pair_reps() -> (UTRep, UTRep) {
    let graph = FilteredGraph::rose(3, &[-3, -2, -1]);
    let sigma = UTRep::new(graph.clone(), vec![vec![], vec![], vec![2]]).unwrap();
    let rho = UTRep::new(graph, vec![vec![], vec![], vec![1]]).unwrap();
    (sigma, rho)
}

/// Disjoint-support commuting pair on the 3-rose (strata c < b < a):
/// `σ: a ↦ ac`, `τ: b ↦ bc`.
pub fn disjoint_pair_reps() -> (UTRep, UTRep) {
    let graph = FilteredGraph::rose(3, &[3, 2, 1]);
    let sigma = UTRep::new(graph.clone(), vec![vec![], vec![], vec![1]]).unwrap();
    let tau = UTRep::new(graph, vec![vec![], vec![1], vec![]]).unwrap();
    (sigma, tau)
}

/// The one-loop splittings corresponding to the guiding examples:
/// `σ`-side (stable a, edge group ⟨b⟩), `τ`-side (stable b, edge group ⟨c⟩),
/// `ρ`-side (stable a, edge group ⟨c⟩).
pub fn guiding_splittings() -> (DehnTwist, DehnTwist, DehnTwist) {
    let (_, a) = loop_splitting(3, 1, 2, 1, false);
    let (_, b) = loop_splitting(3, 2, 3, 1, false);
    let (_, c) = loop_splitting(3, 1, 3, 1, false);
    (a, b, c)
}

/// A hyperbolic-hyperbolic pair of one-loop splittings of F_2: each stable
/// letter is the other's edge-group generator.
pub fn hyperbolic_hyperbolic_pair() -> (DehnTwist, DehnTwist) {
    let (_, a) = loop_splitting(2, 1, 2, 1, false);
    let (_, b) = loop_splitting(2, 2, 1, 1, false);
    (a, b)
}
