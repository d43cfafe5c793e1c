use statrs::distribution::{ChiSquared, ContinuousCDF};

use qvae_core::evaluation::resample_table;
use qvae_core::hard::{hard_distribution, HardSpec};
use qvae_core::sampling::{build_sampler, empirical_from_indices, empirical_table, Sampler};
use qvae_core::states::{haar_random_state, product_random_state};
use qvae_core::ProbabilityTable;

fn chi_squared_p_value(table: &ProbabilityTable, counts: &[u64], total: u64) -> f64 {
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (p, c) in table.probs().iter().zip(counts) {
        if *p > 0.0 {
            let e = p * total as f64;
            stat += (*c as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

fn counts(s: &Sampler, n: usize, draws: usize) -> Vec<u64> {
    let mut c = vec![0u64; 1 << n];
    for i in s.draw_stream(0, draws).indices() {
        c[*i] += 1;
    }
    c
}

#[test]
fn chi_squared_goodness_of_fit() {
    let tables = [
        haar_random_state(10, 1).unwrap().probabilities(),
        product_random_state(6, 2).unwrap().probabilities(),
        hard_distribution(&HardSpec::new(2, 4).unwrap()).unwrap(),
    ];
    for t in &tables {
        let s = build_sampler(t, 3);
        let c = counts(&s, t.n_qubits(), 1_000_000);
        let p = chi_squared_p_value(t, &c, 1_000_000);
        assert!(p > 0.01, "p-value {p} at n={}", t.n_qubits());
    }
}

#[test]
fn uniform_frequencies_within_three_sigma() {
    let t = ProbabilityTable::uniform(2).unwrap();
    let c = counts(&build_sampler(&t, 8), 2, 1_000_000);
    for v in c {
        assert!((v as f64 / 1e6 - 0.25).abs() < 0.0013);
    }
}

#[test]
fn zero_probability_outcomes_are_never_drawn() {
    let t = hard_distribution(&HardSpec::new(2, 2).unwrap()).unwrap();
    let c = counts(&build_sampler(&t, 4), 4, 1_000_000);
    for (p, v) in t.probs().iter().zip(&c) {
        if *p == 0.0 {
            assert_eq!(*v, 0);
        }
    }
    let mut probs = vec![0.0; 256];
    probs[3] = 1e-300;
    probs[200] = 1.0 - 1e-300;
    let t = ProbabilityTable::new(8, probs).unwrap();
    let c = counts(&build_sampler(&t, 4), 8, 100_000);
    assert_eq!(c.iter().sum::<u64>(), c[3] + c[200]);
}

#[test]
fn total_variation_shrinks_with_samples() {
    let t = haar_random_state(8, 5).unwrap().probabilities();
    let tv = |n| t.total_variation(&resample_table(&t, n, 1).unwrap()).unwrap();
    let (small, large) = (tv(10_000), tv(1_000_000));
    assert!(large < 0.01);
    // O(1/√N): a hundredfold increase should cut TV roughly tenfold
    assert!(small / large > 5.0 && small / large < 20.0, "{small} {large}");
}

#[test]
fn draws_are_reproducible_and_stream_keyed() {
    let t = haar_random_state(6, 1).unwrap().probabilities();
    let mut a = build_sampler(&t, 9);
    let mut b = build_sampler(&t, 9);
    assert_eq!(a.draw(500).unwrap(), b.draw(500).unwrap());
    assert_eq!(a.draw(500).unwrap(), b.draw_stream(1, 500));
    assert_ne!(b.draw_stream(1, 500), b.draw_stream(2, 500));
    assert_ne!(build_sampler(&t, 10).draw_stream(0, 500), build_sampler(&t, 9).draw_stream(0, 500));
}

#[test]
fn empirical_tables_agree() {
    let t = product_random_state(5, 1).unwrap().probabilities();
    let batch = build_sampler(&t, 2).draw_stream(0, 20_000);
    let from_strings = empirical_table(batch.strings(), 5).unwrap();
    let from_indices = empirical_from_indices(batch.indices(), 5).unwrap();
    assert_eq!(from_strings, from_indices);
    assert!(empirical_from_indices(&[], 5).is_err());
}
