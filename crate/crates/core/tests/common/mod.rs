//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;

/// `P(a|x)` for `(|0…0⟩ + |1…1⟩)/√2` measured qubit by qubit, setting 1 in
/// the X basis and setting 0 in the Y basis, outcome bit 0 for eigenvalue +1.
/// Indexed as `a + 2ⁿ·x`.
pub fn ghz_statevector(n: usize) -> Vec<f64> {
    let dim = 1usize << n;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut ghz = vec![Complex64::new(0.0, 0.0); dim];
    ghz[0] = Complex64::new(h, 0.0);
    ghz[dim - 1] = Complex64::new(h, 0.0);
    // rows are the conjugated eigenvectors for outcomes 0 and 1
    let x_basis = [
        [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
        [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
    ];
    let y_basis = [
        [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
        [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
    ];
    let mut out = vec![0.0; dim * dim];
    for x in 0..dim {
        let mut psi = ghz.clone();
        for q in 0..n {
            let m = if (x >> q) & 1 == 1 {
                &x_basis
            } else {
                &y_basis
            };
            let bit = 1usize << q;
            for i in 0..dim {
                if i & bit == 0 {
                    let (a0, a1) = (psi[i], psi[i | bit]);
                    psi[i] = m[0][0] * a0 + m[0][1] * a1;
                    psi[i | bit] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
        for a in 0..dim {
            out[a + dim * x] = psi[a].norm_sqr();
        }
    }
    out
}

/// Majority of the first three bits.
pub fn maj3(a: usize) -> u8 {
    u8::from((a & 1) + ((a >> 1) & 1) + ((a >> 2) & 1) >= 2)
}
