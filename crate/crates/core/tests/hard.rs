mod common;

use std::collections::HashSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qvae_core::hard::{
    encode_permutation, evaluate_q, factorial, hard_distribution, lehmer_decode, permanent, HardSpec, PhaseVector,
    SquareMatrix,
};
use qvae_core::Error;

/// Lehmer decoding by enumerating permutations in lexicographic order.
fn lexicographic(n: usize) -> Vec<Vec<usize>> {
    let mut all = common::permutations(n);
    all.sort();
    all
}

#[test]
fn lehmer_matches_lexicographic_enumeration() {
    for n in 1..=6 {
        let oracle = lexicographic(n);
        for (a, p) in oracle.iter().enumerate() {
            assert_eq!(&lehmer_decode(a as u64, n).unwrap(), p);
        }
    }
}

#[test]
fn lehmer_is_a_bijection_up_to_seven() {
    for n in 1..=7 {
        let seen: HashSet<Vec<usize>> = (0..factorial(n)).map(|a| lehmer_decode(a, n).unwrap()).collect();
        assert_eq!(seen.len() as u64, factorial(n));
    }
    assert!(matches!(lehmer_decode(120, 5), Err(Error::InvalidArgument(_))));
}

#[test]
fn encoded_permutations_are_permutation_matrices() {
    for a in 0..factorial(5) {
        let bits = encode_permutation(&lehmer_decode(a, 5).unwrap()).unwrap();
        assert_eq!(bits.iter().filter(|&&b| b == 1).count(), 5);
        for r in 0..5 {
            assert_eq!(bits[r * 5..r * 5 + 5].iter().map(|&b| b as usize).sum::<usize>(), 1);
            assert_eq!((0..5).map(|j| bits[j * 5 + r] as usize).sum::<usize>(), 1);
        }
    }
    assert!(encode_permutation(&[0, 2]).is_err());
}

#[test]
fn permanent_examples() {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let id = SquareMatrix::from_rows(&(0..3).map(|i| (0..3).map(|j| if i == j { one } else { zero }).collect()).collect::<Vec<_>>()).unwrap();
    assert!((permanent(&id) - one).norm() < 1e-15);
    let ones = SquareMatrix::new(3, vec![one; 9]).unwrap();
    assert!((permanent(&ones) - Complex64::new(6.0, 0.0)).norm() < 1e-13);
    assert!(SquareMatrix::new(3, vec![one; 8]).is_err());
}

#[test]
fn ryser_matches_permutation_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in 1..=6 {
        for _ in 0..20 {
            let rows: Vec<Vec<Complex64>> = (0..n)
                .map(|_| (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
                .collect();
            let exact = common::permanent_by_sum(&rows);
            let r = permanent(&SquareMatrix::from_rows(&rows).unwrap());
            assert!((r - exact).norm() <= 1e-10 * exact.norm().max(1e-300));
        }
    }
}

#[test]
fn q_examples() {
    let s1 = HardSpec::new(1, 2).unwrap();
    assert!((evaluate_q(&s1, &PhaseVector::new(&s1, vec![0]).unwrap()).unwrap() - 1.0).norm() < 1e-15);
    assert!((evaluate_q(&s1, &PhaseVector::new(&s1, vec![1]).unwrap()).unwrap() + 1.0).norm() < 1e-15);
    let s2 = HardSpec::new(2, 2).unwrap();
    let q = |y: Vec<usize>| evaluate_q(&s2, &PhaseVector::new(&s2, y).unwrap()).unwrap();
    assert!((q(vec![0, 0, 0, 0]) - 2.0).norm() < 1e-15);
    assert!(q(vec![1, 0, 0, 0]).norm() < 1e-15);
    assert!(PhaseVector::new(&s2, vec![0, 0, 0]).is_err());
    assert!(PhaseVector::new(&s2, vec![0, 0, 0, 2]).is_err());
}

#[test]
fn q_is_invariant_under_row_swaps() {
    let spec = HardSpec::new(3, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let y: Vec<usize> = (0..9).map(|_| rng.gen_range(0..4)).collect();
        let mut swapped = y.clone();
        for k in 0..3 {
            swapped.swap(k, 6 + k);
        }
        let a = evaluate_q(&spec, &PhaseVector::new(&spec, y).unwrap()).unwrap();
        let b = evaluate_q(&spec, &PhaseVector::new(&spec, swapped).unwrap()).unwrap();
        assert!((a.norm() - b.norm()).abs() < 1e-12);
    }
}

#[test]
fn phase_index_round_trip() {
    let spec = HardSpec::new(2, 4).unwrap();
    for idx in 0..256 {
        assert_eq!(PhaseVector::from_index(&spec, idx).to_index(&spec), idx);
    }
    // coordinate 0 occupies the two most significant bits
    assert_eq!(PhaseVector::from_index(&spec, 0b11_00_00_01).values(), &[3, 0, 0, 1]);
}

#[test]
fn small_tables_match_brute_force() {
    let t = hard_distribution(&HardSpec::new(1, 2).unwrap()).unwrap();
    assert_eq!(t.probs(), &[0.5, 0.5]);
    let t = hard_distribution(&HardSpec::new(2, 2).unwrap()).unwrap();
    assert_eq!(t.probs().iter().filter(|&&p| (p - 0.125).abs() < 1e-15).count(), 8);
    assert_eq!(t.probs().iter().filter(|&&p| p == 0.0).count(), 8);
    for (n, l) in [(2, 4), (3, 2), (1, 8)] {
        let t = hard_distribution(&HardSpec::new(n, l).unwrap()).unwrap();
        let oracle = common::hard_table_by_sum(n, l);
        for (a, b) in t.probs().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn normalisation_holds_up_to_two_to_the_twenty() {
    for (n, l) in [(1, 2), (1, 16), (2, 2), (2, 4), (2, 16), (3, 2), (4, 2)] {
        let spec = HardSpec::new(n, l).unwrap();
        let t = hard_distribution(&spec).unwrap();
        let sum: f64 = t.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "({n}, {l}) sums to {sum}");
    }
}

#[test]
fn oversized_tables_are_refused() {
    assert!(matches!(
        hard_distribution(&HardSpec::new(5, 2).unwrap()),
        Err(Error::ResourceLimit { .. })
    ));
}
