//! Finite joint behaviours `P(k, ỹ, t, g, e | z)` and the distinguishing
//! probability against their ideal counterparts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest table enumerated exactly.
pub const MAX_STATES: usize = 1_000_000;
const TOLERANCE: f64 = 1e-9;

/// Index of `g` meaning "not aborted".
pub const ACCEPTED: usize = 1;
/// Index of `k` meaning "no bit" when `k` has three values.
pub const NO_BIT: usize = 2;

/// Alphabet sizes in table order `[k, ỹ, t, g, e, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabets {
    pub k: usize,
    pub y: usize,
    pub t: usize,
    pub g: usize,
    pub e: usize,
    pub z: usize,
}

impl Alphabets {
    fn dims(&self) -> [usize; 6] {
        [self.k, self.y, self.t, self.g, self.e, self.z]
    }

    pub fn states(&self) -> usize {
        self.dims().iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointBehavior {
    sizes: Alphabets,
    /// Row-major in `[k, ỹ, t, g, e, z]`, `z` fastest.
    values: Vec<f64>,
}

impl JointBehavior {
    pub fn new(sizes: Alphabets, values: Vec<f64>) -> Result<Self> {
        if !(2..=3).contains(&sizes.k) || sizes.g != 2 {
            return Err(Error::InvalidArgument(
                "k needs 2 or 3 values and g exactly 2".into(),
            ));
        }
        if sizes.dims().contains(&0) {
            return Err(Error::InvalidArgument("alphabets must be non-empty".into()));
        }
        let states = sizes
            .dims()
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&s| s <= MAX_STATES)
            .ok_or_else(|| {
                Error::ResourceLimit(format!("joint table exceeds {MAX_STATES} states"))
            })?;
        if values.len() != states {
            return Err(Error::DimensionMismatch {
                expected: states,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < -TOLERANCE) {
            return Err(Error::InvalidDistribution(
                "negative or non-finite entry".into(),
            ));
        }
        let b = JointBehavior { sizes, values };
        b.check_normalized()?;
        b.check_eve_nosignalling()?;
        Ok(b)
    }

    pub fn from_fn(
        sizes: Alphabets,
        f: impl Fn(usize, usize, usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(sizes.states());
        for k in 0..sizes.k {
            for y in 0..sizes.y {
                for t in 0..sizes.t {
                    for g in 0..sizes.g {
                        for e in 0..sizes.e {
                            for z in 0..sizes.z {
                                values.push(f(k, y, t, g, e, z));
                            }
                        }
                    }
                }
            }
        }
        Self::new(sizes, values)
    }

    pub fn sizes(&self) -> Alphabets {
        self.sizes
    }

    fn at(&self, k: usize, y: usize, t: usize, g: usize, e: usize, z: usize) -> usize {
        let s = &self.sizes;
        ((((k * s.y + y) * s.t + t) * s.g + g) * s.e + e) * s.z + z
    }

    pub fn prob(&self, k: usize, y: usize, t: usize, g: usize, e: usize, z: usize) -> f64 {
        self.values[self.at(k, y, t, g, e, z)]
    }

    fn outer(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        let s = self.sizes;
        (0..s.k).flat_map(move |k| {
            (0..s.y)
                .flat_map(move |y| (0..s.t).flat_map(move |t| (0..s.g).map(move |g| (k, y, t, g))))
        })
    }

    fn check_normalized(&self) -> Result<()> {
        for z in 0..self.sizes.z {
            let total: f64 = self
                .outer()
                .map(|(k, y, t, g)| {
                    (0..self.sizes.e)
                        .map(|e| self.prob(k, y, t, g, e, z))
                        .sum::<f64>()
                })
                .sum();
            if (total - 1.0).abs() > TOLERANCE {
                return Err(Error::InvalidDistribution(format!(
                    "z = {z} sums to {total}"
                )));
            }
        }
        Ok(())
    }

    /// `Σ_e P(k, ỹ, t, g, e | z)` must not depend on `z`.
    fn check_eve_nosignalling(&self) -> Result<()> {
        for (k, y, t, g) in self.outer() {
            let marginal = |z| {
                (0..self.sizes.e)
                    .map(|e| self.prob(k, y, t, g, e, z))
                    .sum::<f64>()
            };
            let first = marginal(0);
            for z in 1..self.sizes.z {
                if (marginal(z) - first).abs() > TOLERANCE {
                    return Err(Error::InvalidDistribution(format!(
                        "marginal at (k={k}, y={y}, t={t}, g={g}) depends on z"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same table with `k` replaced by a uniform bit wherever `g` = accepted.
    pub fn ideal_counterpart(&self) -> JointBehavior {
        let s = self.sizes;
        let mut values = self.values.clone();
        for y in 0..s.y {
            for t in 0..s.t {
                for e in 0..s.e {
                    for z in 0..s.z {
                        let total: f64 = (0..s.k).map(|k| self.prob(k, y, t, ACCEPTED, e, z)).sum();
                        for k in 0..s.k {
                            values[self.at(k, y, t, ACCEPTED, e, z)] =
                                if k < 2 { 0.5 * total } else { 0.0 };
                        }
                    }
                }
            }
        }
        JointBehavior { sizes: s, values }
    }

    fn is_ideal_on_accepted(&self) -> bool {
        let s = self.sizes;
        (0..s.y).all(|y| {
            (0..s.t).all(|t| {
                (0..s.e).all(|e| {
                    (0..s.z).all(|z| {
                        let p = |k| self.prob(k, y, t, ACCEPTED, e, z);
                        (p(0) - p(1)).abs() <= TOLERANCE
                            && (s.k < 3 || p(NO_BIT).abs() <= TOLERANCE)
                    })
                })
            })
        })
    }
}

/// `½ + ¼ Σ_{k,ỹ,t,g} max_z Σ_e |P − P_ideal|`.
pub fn guessing_probability(p: &JointBehavior, ideal: &JointBehavior) -> Result<f64> {
    if p.sizes != ideal.sizes {
        return Err(Error::InvalidArgument(format!(
            "alphabets differ: {:?} vs {:?}",
            p.sizes, ideal.sizes
        )));
    }
    if !ideal.is_ideal_on_accepted() {
        return Err(Error::InvalidArgument(
            "reference behaviour is not uniform on accepted branches".into(),
        ));
    }
    let s = p.sizes;
    let total: f64 = p
        .outer()
        .map(|(k, y, t, g)| {
            (0..s.z)
                .map(|z| {
                    (0..s.e)
                        .map(|e| (p.prob(k, y, t, g, e, z) - ideal.prob(k, y, t, g, e, z)).abs())
                        .sum::<f64>()
                })
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(0.5 + 0.25 * total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sizes(e: usize, z: usize) -> Alphabets {
        Alphabets {
            k: 2,
            y: 1,
            t: 1,
            g: 2,
            e,
            z,
        }
    }

    #[test]
    fn ideal_of_ideal_is_fixed_point() {
        let p = JointBehavior::from_fn(
            sizes(1, 1),
            |_, _, _, g, _, _| if g == 1 { 0.5 } else { 0.0 },
        )
        .unwrap();
        assert_eq!(p.ideal_counterpart(), p);
        assert_eq!(guessing_probability(&p, &p).unwrap(), 0.5);
    }

    #[test]
    fn rejects_signalling_and_bad_shapes() {
        // e reveals z through its marginal on k
        let r = JointBehavior::from_fn(sizes(1, 2), |k, _, _, g, _, z| {
            f64::from(u8::from(g == 1 && k == z))
        });
        assert!(matches!(r, Err(Error::InvalidDistribution(_))));
        let bad = Alphabets {
            g: 1,
            ..sizes(1, 1)
        };
        assert!(JointBehavior::new(bad, vec![1.0, 0.0]).is_err());
        let huge = Alphabets {
            y: 1000,
            t: 1000,
            ..sizes(1, 1)
        };
        assert!(matches!(
            JointBehavior::new(huge, vec![]),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn aborted_branch_is_copied() {
        let p = JointBehavior::from_fn(
            Alphabets {
                k: 3,
                ..sizes(1, 1)
            },
            |k, _, _, g, _, _| match (k, g) {
                (2, 0) => 0.5,
                (0, 1) => 0.5,
                _ => 0.0,
            },
        )
        .unwrap();
        let id = p.ideal_counterpart();
        assert_eq!(id.prob(2, 0, 0, 0, 0, 0), 0.5);
        assert_eq!(id.prob(0, 0, 0, 1, 0, 0), 0.25);
        assert!((guessing_probability(&p, &id).unwrap() - 0.625).abs() < 1e-15);
    }
}
