#![allow(dead_code)]

use gausschan::numcore::Mat4;
use gausschan::state::CovarianceMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn mat(f: impl Fn(usize, usize) -> f64) -> Mat4 {
    Mat4::from_fn(f)
}

/// Rotation of one mode (0 = Alice, 1 = Bob) by `t` radians.
pub fn rot(mode: usize, t: f64) -> Mat4 {
    let (c, s) = (t.cos(), t.sin());
    let o = 2 * mode;
    mat(|i, j| match (i.wrapping_sub(o), j.wrapping_sub(o)) {
        (0, 0) | (1, 1) => c,
        (0, 1) => s,
        (1, 0) => -s,
        _ if i == j => 1.0,
        _ => 0.0,
    })
}

pub fn sqz(mode: usize, r: f64) -> Mat4 {
    let mut d = [1.0; 4];
    d[2 * mode] = (-r).exp();
    d[2 * mode + 1] = r.exp();
    Mat4::from_diag(d)
}

/// Mixing of the two modes with transmission cos²t.
pub fn mix(t: f64) -> Mat4 {
    let (c, s) = (t.cos(), t.sin());
    mat(|i, j| {
        if i % 2 != j % 2 {
            0.0
        } else if i / 2 == j / 2 {
            c
        } else if i < j {
            s
        } else {
            -s
        }
    })
}

pub fn tms(r: f64) -> Mat4 {
    let (c, s) = (r.cosh(), r.sinh());
    mat(|i, j| {
        if i == j {
            c
        } else if i % 2 == j % 2 {
            if i % 2 == 0 {
                s
            } else {
                -s
            }
        } else {
            0.0
        }
    })
}

/// Random symplectic built from local and two-mode generators.
pub fn random_symplectic<R: Rng>(rng: &mut R) -> Mat4 {
    let mut s = Mat4::identity();
    let tau = std::f64::consts::TAU;
    for _ in 0..2 {
        for mode in 0..2 {
            s = rot(mode, tau * rng.random::<f64>()) * s;
            s = sqz(mode, rng.random_range(-0.7..0.7)) * s;
        }
        s = mix(tau * rng.random::<f64>()) * s;
        s = tms(rng.random_range(-0.9..0.9)) * s;
    }
    s
}

/// Random physical CM with its symplectic spectrum, ascending.
pub fn random_state<R: Rng>(rng: &mut R) -> (CovarianceMatrix, [f64; 2]) {
    let mut nu = [0.0; 2];
    for v in &mut nu {
        *v = if rng.random_bool(0.2) { 1.0 } else { 1.0 + 3.0 * rng.random::<f64>() };
    }
    state_with_spectrum(rng, nu)
}

/// Random CM with the given symplectic eigenvalues.
pub fn state_with_spectrum<R: Rng>(rng: &mut R, mut nu: [f64; 2]) -> (CovarianceMatrix, [f64; 2]) {
    let s = random_symplectic(rng);
    let d = Mat4::from_diag([nu[0], nu[0], nu[1], nu[1]]);
    let g = CovarianceMatrix::new((s * d * s.transpose()).symmetrized()).unwrap();
    nu.sort_by(f64::total_cmp);
    (g, nu)
}

/// Random local symplectic (acts on each mode separately).
pub fn random_local<R: Rng>(rng: &mut R) -> Mat4 {
    let tau = std::f64::consts::TAU;
    let mut s = Mat4::identity();
    for mode in 0..2 {
        s = rot(mode, tau * rng.random::<f64>()) * s;
        s = sqz(mode, rng.random_range(-0.8..0.8)) * s;
        s = rot(mode, tau * rng.random::<f64>()) * s;
    }
    s
}

/// Determinant by cofactor expansion along the first row.
pub fn cofactor_det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<f64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| *v).collect())
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[0][j] * cofactor_det(&minor)
        })
        .sum()
}

pub fn to_vecs(m: &Mat4) -> Vec<Vec<f64>> {
    m.rows().iter().map(|r| r.to_vec()).collect()
}

/// The four printed CMs with their tabulated quantities.
pub struct Fixture {
    pub name: &'static str,
    pub rows: [[f64; 4]; 4],
    /// lambda, lambda^TA, W, E_N, Q_L, F, mu
    pub table: [f64; 7],
    pub key_rate: Option<f64>,
}

pub fn fixtures() -> [Fixture; 4] {
    [
        Fixture {
            name: "V-class gain 5",
            rows: [
                [0.751, -0.146, 0.307, -0.000],
                [-0.146, 3.175, -0.000, -2.129],
                [0.307, -0.000, 0.706, -0.102],
                [-0.000, -2.129, -0.102, 3.181],
            ],
            table: [0.033, -0.317, -0.341, 0.602, -0.071, 0.586, 0.648],
            key_rate: None,
        },
        Fixture {
            name: "V-class gain 10",
            rows: [
                [0.686, -0.054, 0.326, 0.003],
                [-0.054, 4.625, 0.001, -3.584],
                [0.326, 0.001, 0.678, -0.031],
                [0.003, -3.584, -0.031, 4.681],
            ],
            table: [0.034, -0.349, -0.383, 0.700, -0.059, 0.597, 0.563],
            key_rate: None,
        },
        Fixture {
            name: "S-class gain 5",
            rows: [
                [2.359, 0.132, 1.885, 0.028],
                [0.132, 2.205, 0.008, -1.883],
                [1.885, 0.008, 2.266, 0.372],
                [0.028, -1.883, 0.372, 2.427],
            ],
            table: [0.063, -0.600, -0.599, 1.342, 0.387, 0.701, 0.608],
            key_rate: Some(0.323),
        },
        Fixture {
            name: "S-class gain 10",
            rows: [
                [4.200, -0.090, 3.773, -0.033],
                [-0.090, 4.462, 0.035, -4.216],
                [3.773, 0.035, 4.228, -0.208],
                [-0.033, -4.216, -0.208, 4.842],
            ],
            table: [0.175, -0.566, -0.566, 1.331, 0.100, 0.695, 0.301],
            key_rate: Some(0.120),
        },
    ]
}

pub fn fixture_cm(f: &Fixture) -> CovarianceMatrix {
    CovarianceMatrix::from_rows(f.rows).unwrap()
}
