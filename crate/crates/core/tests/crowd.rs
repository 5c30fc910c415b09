use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polar_ldgm::construction::SparseGenerator;
use polar_ldgm::crowd::ldpc::{gen_ldpc, SyndromeDecoder, DEFAULT_BP_ITERATIONS};
use polar_ldgm::crowd::{build_query_matrix, CrowdConfig, CrowdScheme, QuerySchemeParams, Selection};
use polar_ldgm::gf2::BitVec;

fn quick() -> CrowdConfig {
    CrowdConfig { selection: Selection::Bhattacharyya, ..CrowdConfig::default() }
}

fn scheme(n: usize, zeta: f64, seed: u64) -> CrowdScheme {
    CrowdScheme::build(QuerySchemeParams { n, p: 0.05, q: 0.02, zeta, seed }, quick()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn responses_are_encoded_syndromes(seed in 0u64..1000, density in 0.0f64..0.5) {
        let s = scheme(800, 0.3, seed % 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<bool> = (0..800).map(|_| rng.gen_bool(density)).collect();
        let syndrome = BitVec::from_bools(&s.h.syndrome(&x));
        let encoded = s.code.gstar.encode(&syndrome).to_bools();
        prop_assert_eq!(s.queries.responses(&x), encoded);
    }
}

#[test]
fn identity_generator_asks_the_parity_checks() {
    let h = gen_ldpc(500, 0.3, 0.05, 2).unwrap();
    let eye = SparseGenerator::new(h.m(), (0..h.m()).map(|i| vec![i]).collect()).unwrap();
    let q = build_query_matrix(&h, &eye).unwrap();
    assert_eq!(q.queries, h.rows);
    assert_eq!(q.max_items, h.row_weight);
    let short = SparseGenerator::new(h.m() - 1, vec![]).unwrap();
    assert!(build_query_matrix(&h, &short).is_err());
}

#[test]
fn item_bound_holds_on_every_instance() {
    for (n, zeta, seed) in [(800, 0.25, 1), (1500, 0.3, 2), (2500, 0.4, 3), (4000, 0.3, 4)] {
        let s = scheme(n, zeta, seed);
        assert!(s.queries.max_items <= s.h.row_weight * s.code.w_ub, "n = {n}");
        let design = s.code.design_m_prime;
        assert!((s.code.m_prime as f64 - design).abs() <= 0.01 * design, "n = {n}: {} vs {design}", s.code.m_prime);
    }
}

#[test]
fn item_count_grows_slowly_with_n() {
    let eps = 0.2;
    let cfg = CrowdConfig { w_ub_epsilon: Some(eps), ..quick() };
    let items = |n: usize, seed: u64| {
        let params = QuerySchemeParams { n, p: 0.05, q: 0.02, zeta: 0.3, seed };
        let s = CrowdScheme::build(params, cfg.clone()).unwrap();
        assert!(s.queries.max_items <= s.h.row_weight * s.code.w_ub);
        s.queries.max_items as f64
    };
    for (n, seed) in [(1000, 4), (2000, 5), (4000, 6), (8000, 7)] {
        let a = items(n, seed);
        let b = items(2 * n, seed);
        let growth = ((2.0 * n as f64).ln() / (n as f64).ln()).powf(1.0 + eps) * 1.5;
        assert!(b / a <= growth, "n = {n}: {a} -> {b}, allowed factor {growth:.3}");
    }
}

#[test]
fn noiseless_syndromes_are_inverted() {
    let n = 5000;
    let h = gen_ldpc(n, 0.3, 0.05, 21).unwrap();
    let dec = SyndromeDecoder::new(&h);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let trials = 20;
    let ok = (0..trials)
        .filter(|_| {
            let x: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.05)).collect();
            dec.decode(&h.syndrome(&x), 0.05, DEFAULT_BP_ITERATIONS).estimate == x
        })
        .count();
    assert!(ok as f64 >= 0.8 * trials as f64, "{ok}/{trials}");
}

#[test]
fn empty_sources_are_always_recovered() {
    let s = CrowdScheme::build(QuerySchemeParams { n: 600, p: 0.0, q: 0.02, zeta: 0.3, seed: 1 }, quick());
    let Ok(s) = s else {
        // p = 0 leaves no entropy to encode; a refusal is acceptable as long as it is an error
        return;
    };
    for t in 0..5 {
        assert!(s.trial(t).unwrap().recovered);
    }
}
