mod common;

use proptest::prelude::*;
use randamp::mermin::{ghz_correlations, mermin_coefficients};
use randamp::polytope::{
    block_functional_value, functional_value, is_nonsignalling, nosignalling_constraints,
    nosignalling_residuals, tensor_product, uniform_distribution, ConditionalDistribution,
    LinearFunctional,
};

/// Rank by Gaussian elimination with partial pivoting.
fn rank(mut rows: Vec<Vec<f64>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) =
            (r..rows.len()).max_by(|&i, &j| rows[i][c].abs().total_cmp(&rows[j][c].abs()))
        else {
            break;
        };
        if rows[p][c].abs() < 1e-9 {
            continue;
        }
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r {
                let f = rows[i][c] / rows[r][c];
                if f != 0.0 {
                    for k in c..cols {
                        rows[i][k] -= f * rows[r][k];
                    }
                }
            }
        }
        r += 1;
    }
    r
}

/// Normalized random box on `n` parties, not necessarily no-signalling.
fn random_box(n: usize, weights: &[f64]) -> ConditionalDistribution {
    let outcomes = 1 << n;
    ConditionalDistribution::from_fn(n, |a, x| {
        let row = &weights[x * outcomes..(x + 1) * outcomes];
        row[a] / row.iter().sum::<f64>()
    })
    .unwrap()
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 1 << (2 * n))
}

#[test]
fn bipartite_nosignalling_polytope_has_dimension_eight() {
    // homogeneous marginal rows only: their kernel is the linear span of
    // the no-signalling boxes (9-dimensional), and normalization removes one
    let m = nosignalling_constraints(2).unwrap();
    let dense: Vec<Vec<f64>> = m.rows.iter().map(|r| r.to_dense(16)).collect();
    let marginal: Vec<Vec<f64>> = dense
        .iter()
        .zip(&m.rhs)
        .filter(|(_, &b)| b == 0.0)
        .map(|(r, _)| r.clone())
        .collect();
    assert_eq!(16 - rank(marginal), 9);
    assert_eq!(16 - rank(dense), 16 - 9 + 1);
}

#[test]
fn uniform_and_ghz_boxes_are_nonsignalling() {
    for n in [2, 3, 5] {
        assert!(is_nonsignalling(&uniform_distribution(n).unwrap(), 1e-12));
    }
    assert!(is_nonsignalling(&ghz_correlations(5).unwrap(), 1e-12));
}

#[test]
fn signalling_box_is_detected() {
    // party 2 outputs party 1's setting
    let p = ConditionalDistribution::from_fn(2, |a, x| if a == (x & 1) << 1 { 1.0 } else { 0.0 })
        .unwrap();
    assert!(!is_nonsignalling(&p, 1e-6));
}

#[test]
fn single_slot_block_value_is_functional_value() {
    let f = mermin_coefficients(5).unwrap();
    let p = uniform_distribution(5).unwrap();
    let direct = functional_value(f.functional(), &p).unwrap();
    let block = block_functional_value(f.functional(), &p, 1).unwrap();
    assert_eq!(direct, block);
    // each of the 16 supported settings puts half its mass on the wrong parity
    assert!((direct - 8.0).abs() < 1e-12);
}

#[test]
fn two_slot_ghz_block_reduces_to_alpha_squared() {
    let alpha = 0.8842;
    let beta = 1.260;
    let bell = mermin_coefficients(5).unwrap();
    let c = LinearFunctional::normalization(5).unwrap();
    let f = c.combine(alpha, bell.functional(), beta).unwrap();
    let ghz = ghz_correlations(5).unwrap();
    let block = tensor_product(&ghz, &ghz).unwrap();
    let v = block_functional_value(&f, &block, 2).unwrap();
    assert!((v - alpha * alpha).abs() < 1e-10, "{v}");
    assert!((v - 0.78181).abs() < 1e-5);
}

#[test]
fn json_and_csv_round_trip() {
    let p = ghz_correlations(3).unwrap();
    let j = ConditionalDistribution::from_json(&p.to_json().unwrap()).unwrap();
    let c = ConditionalDistribution::from_csv(&p.to_csv()).unwrap();
    assert_eq!(j.values(), p.values());
    for (a, b) in c.values().iter().zip(p.values()) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn malformed_boxes_are_rejected() {
    assert!(ConditionalDistribution::new(2, vec![0.25; 15]).is_err());
    assert!(ConditionalDistribution::new(1, vec![0.5, 0.5, 0.7, 0.3 + 0.1]).is_err());
    assert!(ConditionalDistribution::new(1, vec![1.5, -0.5, 0.5, 0.5]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn functional_value_is_bilinear(
        w1 in weights(3),
        w2 in weights(3),
        coeffs in prop::collection::vec(-2.0f64..2.0, 64),
        s in 0.0f64..1.0,
    ) {
        let (p, q) = (random_box(3, &w1), random_box(3, &w2));
        let f = LinearFunctional::new(3, coeffs).unwrap();
        let mixed = p.mix(s, &q).unwrap();
        let lhs = functional_value(&f, &mixed).unwrap();
        let rhs = s * functional_value(&f, &p).unwrap() + (1.0 - s) * functional_value(&f, &q).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn block_value_factorizes_on_products(
        w1 in weights(2),
        w2 in weights(2),
        coeffs in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let (p, q) = (random_box(2, &w1), random_box(2, &w2));
        let f = LinearFunctional::new(2, coeffs).unwrap();
        let block = tensor_product(&p, &q).unwrap();
        let lhs = block_functional_value(&f, &block, 2).unwrap();
        let rhs = functional_value(&f, &p).unwrap() * functional_value(&f, &q).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn residuals_follow_party_permutations(w in weights(3), perm in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let p = random_box(3, &w);
        let q = p.permute_parties(&perm).unwrap();
        let mut a = nosignalling_residuals(&p);
        let mut b = nosignalling_residuals(&q);
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert_eq!(is_nonsignalling(&p, 1e-9), is_nonsignalling(&q, 1e-9));
    }

    #[test]
    fn products_of_nonsignalling_boxes_are_nonsignalling(n in 1usize..3, m in 1usize..3) {
        let p = tensor_product(&ghz_correlations(3).unwrap(), &uniform_distribution(n).unwrap()).unwrap();
        prop_assert!(is_nonsignalling(&p, 1e-12));
        let q = tensor_product(&uniform_distribution(m).unwrap(), &uniform_distribution(n).unwrap()).unwrap();
        prop_assert!(is_nonsignalling(&q, 1e-12));
    }
}
