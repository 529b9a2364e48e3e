use proptest::prelude::*;
use randamp::mermin::mermin_coefficients;
use randamp::polytope::{parse_bits, ConditionalDistribution};
use randamp::protocol::{
    check_quintuplet, for_each_run, monte_carlo, run_protocol_indexed, sample_source,
    sequence_probability, step2_proceeds, AbortStage, BoxModel, EpsilonSource, ProtocolConfig,
    SourceStrategy,
};

fn bits(s: &str) -> usize {
    parse_bits(s).unwrap().0
}

fn frequency(v: &[u8]) -> f64 {
    v.iter().map(|&b| b as f64).sum::<f64>() / v.len() as f64
}

fn strategies() -> impl Strategy<Value = (f64, SourceStrategy)> {
    (0.01f64..=0.5).prop_flat_map(|eps| {
        (
            Just(eps),
            prop_oneof![
                (eps..=1.0 - eps).prop_map(|p| SourceStrategy::HonestIid { p_one: p }),
                (0u8..2).prop_map(|t| SourceStrategy::ConstantBias { toward: t }),
                Just(SourceStrategy::DiscardSettings),
            ],
        )
    })
}

#[test]
fn unbiased_source_frequency() {
    let v = sample_source(&EpsilonSource::uniform(), 100_000, 1).unwrap();
    assert!((frequency(&v) - 0.5).abs() < 0.01);
}

#[test]
fn maximally_biased_source_frequency() {
    let s = EpsilonSource::new(0.2, SourceStrategy::ConstantBias { toward: 1 }).unwrap();
    let f = frequency(&sample_source(&s, 100_000, 2).unwrap());
    assert!((f - 0.8).abs() < 0.01);
}

#[test]
fn quintuplet_check_examples() {
    let f = mermin_coefficients(5).unwrap();
    assert!(check_quintuplet(bits("00000"), bits("11111"), &f).unwrap());
    assert!(!check_quintuplet(bits("00000"), bits("00111"), &f).unwrap());
    assert!(check_quintuplet(bits("00000"), bits("00011"), &f).is_err());
    // flipping any outcome bit of a passing quintuplet breaks it
    for x in f.support() {
        for a in (0..32).filter(|&a| check_quintuplet(a, x, &f).unwrap()) {
            for i in 0..5 {
                assert!(!check_quintuplet(a ^ (1 << i), x, &f).unwrap());
            }
        }
    }
}

#[test]
fn step2_boundary_is_exact() {
    for n in 3..300usize {
        let third = n.div_ceil(3);
        assert!(!step2_proceeds(third - 1, n), "n={n}");
        assert!(step2_proceeds(third, n), "n={n}");
    }
}

#[test]
fn transcripts_follow_the_abort_rules() {
    // a mildly adversarial source makes both outcomes of step 2 common
    let mut cfg = ProtocolConfig::honest(30, 2, 17);
    cfg.source = EpsilonSource::new(0.3, SourceStrategy::DiscardSettings).unwrap();
    let bell = mermin_coefficients(5).unwrap();
    let mut seen = [0usize; 3];
    for run in 0..400 {
        let t = run_protocol_indexed(&cfg, run).unwrap();
        let supported = t.inputs.iter().filter(|&&x| bell.is_supported(x)).count();
        assert_eq!(
            t.abort == AbortStage::Step2,
            !step2_proceeds(supported, cfg.n)
        );
        match t.abort {
            AbortStage::Step2 => {
                seen[0] += 1;
                assert_eq!(t.source_bits, 5 * cfg.n);
                assert!(t.k.is_none() && t.l.is_none());
            }
            stage => {
                assert_eq!(t.source_bits, 5 * cfg.n + 1);
                assert_eq!(t.survivors.len(), cfg.nb * t.block_size);
                assert_eq!(t.block_size, supported / cfg.nb);
                assert_eq!(t.g, t.recompute_g());
                assert_eq!(t.k.is_some(), stage == AbortStage::None);
                seen[if stage == AbortStage::None { 1 } else { 2 }] += 1;
            }
        }
    }
    assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
}

#[test]
fn near_deterministic_discard_source_aborts_at_step2() {
    let mut cfg = ProtocolConfig::honest(60, 4, 3);
    cfg.source = EpsilonSource::new(0.001, SourceStrategy::DiscardSettings).unwrap();
    let s = monte_carlo(&cfg, 500).unwrap();
    assert!(s.step2_abort_rate > 0.99, "{}", s.step2_abort_rate);
}

#[test]
fn distillation_block_never_affects_g() {
    let mut cfg = ProtocolConfig::honest(64, 4, 8);
    cfg.boxes = BoxModel::all_zero();
    for run in 0..50 {
        let mut t = run_protocol_indexed(&cfg, run).unwrap();
        let Some(l) = t.l else { continue };
        let g = t.recompute_g();
        t.r[l] ^= 1;
        assert_eq!(t.recompute_g(), g);
    }
}

#[test]
fn all_zero_boxes_abort_iff_a_checked_block_has_odd_target() {
    let mut cfg = ProtocolConfig::honest(64, 4, 21);
    cfg.boxes = BoxModel::all_zero();
    let bell = mermin_coefficients(5).unwrap();
    for run in 0..200 {
        let t = run_protocol_indexed(&cfg, run).unwrap();
        let Some(l) = t.l else { continue };
        let odd_target = (0..cfg.nb).filter(|&b| b != l).any(|b| {
            t.block(b)
                .iter()
                .any(|&j| bell.parity_target(t.inputs[j]) == Some(1))
        });
        assert_eq!(t.abort == AbortStage::Step4, odd_target);
    }
}

#[test]
fn honest_runs_pass_every_check() {
    let cfg = ProtocolConfig::honest(64, 4, 99);
    let s = monte_carlo(&cfg, 2000).unwrap();
    assert_eq!(s.step4_aborts, 0);
    assert_eq!(s.wrong_parity, 0);
    assert_eq!(s.inconsistent, 0);
    assert!((s.maj0_rate.unwrap() - 0.5).abs() < 0.02);
    // supported settings ~ Binomial(64, 1/2); fewer than 22 has probability ~0.004
    assert!(s.step2_aborts <= 25, "{}", s.step2_aborts);
    for_each_run(&cfg, 200, |t| {
        if t.abort != AbortStage::Step2 {
            assert_eq!(t.survivors.len() % cfg.nb, 0);
            // truncation to whole blocks drops fewer than N_b survivors
            assert!(t.survivors.len() + cfg.nb > 64usize.div_ceil(3));
        }
        Ok(())
    })
    .unwrap();
}

#[test]
fn monte_carlo_is_reproducible() {
    let cfg = ProtocolConfig::honest(32, 2, 5);
    assert_eq!(
        monte_carlo(&cfg, 300).unwrap(),
        monte_carlo(&cfg, 300).unwrap()
    );
    let mut other = cfg.clone();
    other.seed = 6;
    assert_ne!(
        monte_carlo(&cfg, 300).unwrap(),
        monte_carlo(&other, 300).unwrap()
    );
}

#[test]
fn signalling_custom_box_is_rejected() {
    // party 2 outputs party 1's setting
    let table =
        ConditionalDistribution::from_fn(5, |a, x| if a == (x & 1) << 1 { 1.0 } else { 0.0 })
            .unwrap();
    let mut cfg = ProtocolConfig::honest(30, 2, 0);
    cfg.boxes = BoxModel::Custom {
        distribution: table,
    };
    assert!(cfg.validate().is_err());
}

proptest! {
    #[test]
    fn prefix_probabilities_respect_epsilon((eps, strategy) in strategies(), prefix in 0usize..64, len in 1usize..7) {
        let s = EpsilonSource::new(eps, strategy).unwrap();
        let prefix: Vec<u8> = (0..len).map(|i| ((prefix >> i) & 1) as u8).collect();
        let p = sequence_probability(&s, &prefix);
        let n = len as i32;
        prop_assert!(p >= eps.powi(n) * (1.0 - 1e-12));
        prop_assert!(p <= (1.0 - eps).powi(n) * (1.0 + 1e-12));
    }

    #[test]
    fn prefix_probabilities_sum_to_one((eps, strategy) in strategies()) {
        let s = EpsilonSource::new(eps, strategy).unwrap();
        let total: f64 = (0..8usize)
            .map(|m| sequence_probability(&s, &[(m & 1) as u8, ((m >> 1) & 1) as u8, ((m >> 2) & 1) as u8]))
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn every_bit_bias_is_within_epsilon((eps, strategy) in strategies(), history in prop::collection::vec(0u8..2, 0..20)) {
        let s = EpsilonSource::new(eps, strategy).unwrap();
        let p = s.next_bias(&history);
        prop_assert!(p >= eps && p <= 1.0 - eps);
    }
}
