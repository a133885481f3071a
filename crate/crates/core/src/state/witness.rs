//! Optimal second-moment entanglement witness.
//!
//! Solves
//!
//! ```text
//! W = max t  s.t.  γ_A + iσ ⪰ 0,  γ_B + iσ ⪰ 0,  γ - γ_A ⊕ γ_B ⪰ t·I
//! ```
//!
//! The first stage bisects on `t` with a Dykstra alternating-projection
//! feasibility oracle. Alternating projections crawl once the bracket is
//! small, so a second stage runs a log-barrier Newton method on the same
//! program. Both stages only ever tighten a certified bracket `[lo, hi]`:
//! `lo` comes from an explicit feasible point and `hi` from a dual
//! certificate (any `Z ⪰ 0` with unit trace bounds `W` from above by
//! `tr(Zγ) - 2√det Z_A - 2√det Z_B`).

use crate::numcore::{block, cholesky, direct_sum, eig_sym, psd_part, Mat2, Mat4, Matrix, SymMatrix};

use super::CovarianceMatrix;

#[derive(Debug, Clone, Copy)]
pub struct WitnessOptions {
    /// Target width of the certified bracket.
    pub tolerance: f64,
    /// Cap on projection sweeps plus Newton steps.
    pub max_iterations: usize,
    /// Projection sweeps spent before switching to the barrier stage.
    pub projection_budget: usize,
    /// Run the barrier stage at all.
    pub polish: bool,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        WitnessOptions { tolerance: 1e-7, max_iterations: 100_000, projection_budget: 300, polish: true }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WitnessResult {
    /// Midpoint of the final bracket. Negative certifies entanglement.
    pub value: f64,
    pub gamma_a: Mat2,
    pub gamma_b: Mat2,
    pub iterations: usize,
    pub converged: bool,
    /// Certified `[lower, upper]` bounds on the optimum.
    pub bracket: (f64, f64),
}

/// Witness with default options.
pub fn optimal_witness(g: &CovarianceMatrix) -> WitnessResult {
    optimal_witness_with(g, &WitnessOptions::default())
}

pub fn optimal_witness_with(g: &CovarianceMatrix, opts: &WitnessOptions) -> WitnessResult {
    let gm = *g.matrix();
    let lmin = eig_sym(g.sym()).min();
    let mut st = Search {
        g: gm,
        lo: lmin - 1.0,
        hi: lmin,
        a: Mat2::identity(),
        b: Mat2::identity(),
        iterations: 0,
    };

    let first = opts.projection_budget.min(opts.max_iterations);
    st.bisect(opts.tolerance, first);
    if opts.polish && st.gap() > opts.tolerance {
        st.barrier(opts.tolerance, opts.max_iterations);
    }
    if st.gap() > opts.tolerance {
        st.bisect(opts.tolerance, opts.max_iterations);
    }

    WitnessResult {
        value: 0.5 * (st.lo + st.hi),
        gamma_a: st.a,
        gamma_b: st.b,
        iterations: st.iterations,
        converged: st.gap() <= opts.tolerance,
        bracket: (st.lo, st.hi),
    }
}

struct Search {
    g: Mat4,
    lo: f64,
    hi: f64,
    a: Mat2,
    b: Mat2,
    iterations: usize,
}

/// Projection sweeps between certificate evaluations.
const CERT_EVERY: usize = 5;

impl Search {
    fn gap(&self) -> f64 {
        self.hi - self.lo
    }

    /// Records `(a, b)` as a feasible point if it improves the lower bound.
    fn offer_primal(&mut self, a: &Mat2, b: &Mat2) -> f64 {
        let s = sym(self.g - direct_sum(a, b));
        let cert = eig_sym(&s).min();
        if cert > self.lo {
            self.lo = cert;
            self.a = *a;
            self.b = *b;
        }
        cert
    }

    fn offer_dual(&mut self, z: &Mat4) {
        if let Some(u) = dual_bound(&self.g, z) {
            self.hi = self.hi.min(u);
        }
    }

    /// Bisection on `t` with Dykstra's alternating projections between
    /// `K1 = 𝒜 × 𝒜 × PSD` and the affine set `M + a ⊕ b = γ - tI`.
    fn bisect(&mut self, tol: f64, cap: usize) {
        while self.gap() > tol && self.iterations < cap {
            let t = 0.5 * (self.lo + self.hi);
            let target = self.g - Mat4::identity().scale(t);
            let mut x = Triple {
                a: self.a,
                b: self.b,
                m: *psd_part(&sym(target - direct_sum(&self.a, &self.b))).matrix(),
            };
            let mut p = Triple::zeros();
            let mut q = Triple::zeros();
            loop {
                if self.iterations >= cap {
                    return;
                }
                self.iterations += 1;
                let y = project_affine(&x.add(&p), &target);
                p = x.add(&p).sub(&y);
                let z = y.add(&q);
                x = Triple {
                    a: project_physical(&z.a),
                    b: project_physical(&z.b),
                    m: *psd_part(&sym(z.m)).matrix(),
                };
                q = z.sub(&x);
                if self.iterations % CERT_EVERY == 0 {
                    self.offer_primal(&x.a, &x.b);
                    self.offer_dual(&(x.m - y.m));
                    if self.lo >= t || self.hi <= t {
                        break;
                    }
                }
            }
        }
    }

    /// Log-barrier Newton method over `(a11, a12, a22, b11, b12, b22, t)`.
    fn barrier(&mut self, tol: f64, cap: usize) {
        let mut x = [1.25, 0.0, 1.25, 1.25, 0.0, 1.25, 0.0];
        let start = sym(slack(&self.g, &x));
        x[6] = eig_sym(&start).min() - 1.0;
        let mut s = 1.0;
        loop {
            for _ in 0..100 {
                if self.iterations >= cap {
                    return;
                }
                let Some((grad, hess)) = gradient_hessian(&self.g, &x, s) else { return };
                let Some(neg) = hess.solve(&grad) else { return };
                let dx: [f64; 7] = std::array::from_fn(|k| -neg[k]);
                let slope: f64 = (0..7).map(|k| grad[k] * dx[k]).sum();
                if -slope / 2.0 < 1e-12 {
                    break;
                }
                let f0 = objective(&self.g, &x, s);
                let mut step = 1.0;
                let mut accepted = false;
                while step > 1e-14 {
                    let trial: [f64; 7] = std::array::from_fn(|k| x[k] + step * dx[k]);
                    if objective(&self.g, &trial, s) <= f0 + 0.25 * step * slope {
                        x = trial;
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                self.iterations += 1;
                if !accepted {
                    break;
                }
            }
            let (a, b) = blocks_of(&x);
            self.offer_primal(&a, &b);
            if let Some(inv) = slack(&self.g, &x).inverse() {
                self.offer_dual(&inv);
            }
            if self.gap() <= tol || 8.0 / s < 1e-2 * tol {
                return;
            }
            s *= 8.0;
        }
    }
}

fn sym(m: Mat4) -> SymMatrix<4> {
    SymMatrix::new(m.symmetrized()).expect("finite iterate")
}

/// Weak-duality upper bound on the witness from a trial dual matrix.
fn dual_bound(g: &Mat4, z: &Mat4) -> Option<f64> {
    let zp = *psd_part(&sym(*z)).matrix();
    let tr = zp.trace();
    if !(tr > 1e-300) {
        return None;
    }
    let zn = zp.scale(1.0 / tr);
    let za = block(&zn, 0, 0).det().max(0.0);
    let zb = block(&zn, 1, 1).det().max(0.0);
    let value = (zn * *g).trace() - 2.0 * za.sqrt() - 2.0 * zb.sqrt();
    value.is_finite().then_some(value)
}

#[derive(Clone, Copy)]
struct Triple {
    a: Mat2,
    b: Mat2,
    m: Mat4,
}

impl Triple {
    fn zeros() -> Self {
        Triple { a: Mat2::zeros(), b: Mat2::zeros(), m: Mat4::zeros() }
    }

    fn add(&self, o: &Self) -> Self {
        Triple { a: self.a + o.a, b: self.b + o.b, m: self.m + o.m }
    }

    fn sub(&self, o: &Self) -> Self {
        Triple { a: self.a - o.a, b: self.b - o.b, m: self.m - o.m }
    }
}

/// Projection onto `{(a, b, M) : M + a ⊕ b = target}`. Off-diagonal blocks
/// of `M` are pinned to the target; diagonal-block residuals split evenly.
fn project_affine(x: &Triple, target: &Mat4) -> Triple {
    let mut m = *target;
    let ra = block(target, 0, 0) - block(&x.m, 0, 0) - x.a;
    let rb = block(target, 1, 1) - block(&x.m, 1, 1) - x.b;
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = x.m[(i, j)] + 0.5 * ra[(i, j)];
            m[(2 + i, 2 + j)] = x.m[(2 + i, 2 + j)] + 0.5 * rb[(i, j)];
        }
    }
    Triple { a: x.a + ra.scale(0.5), b: x.b + rb.scale(0.5), m }
}

/// Frobenius projection of a symmetric 2×2 matrix onto the single-mode
/// physical set `{X : X + iσ ⪰ 0}`.
///
/// With `X = [[u+v, w], [w, u-v]]` the set is `u ≥ √(1 + v² + w²)`, so the
/// problem reduces to projecting `(u, ρ)` onto the upper branch of a
/// hyperbola and rescaling `(v, w)`.
pub(crate) fn project_physical(x: &Mat2) -> Mat2 {
    let u = 0.5 * (x[(0, 0)] + x[(1, 1)]);
    let v = 0.5 * (x[(0, 0)] - x[(1, 1)]);
    let w = 0.5 * (x[(0, 1)] + x[(1, 0)]);
    let rho0 = v.hypot(w);
    if u > 0.0 && u * u - rho0 * rho0 >= 1.0 {
        return x.symmetrized();
    }
    let rho = if rho0 == 0.0 {
        0.0
    } else {
        let h = |r: f64| r * (2.0 - u / (1.0 + r * r).sqrt()) - rho0;
        let (mut lo, mut hi) = (0.0, rho0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if h(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let f = (1.0 + rho * rho).sqrt();
    let (v2, w2) = if rho0 > 0.0 { (v * rho / rho0, w * rho / rho0) } else { (0.0, 0.0) };
    Matrix([[f + v2, w2], [w2, f - v2]])
}

fn blocks_of(x: &[f64; 7]) -> (Mat2, Mat2) {
    (
        Matrix([[x[0], x[1]], [x[1], x[2]]]),
        Matrix([[x[3], x[4]], [x[4], x[5]]]),
    )
}

fn slack(g: &Mat4, x: &[f64; 7]) -> Mat4 {
    let (a, b) = blocks_of(x);
    *g - direct_sum(&a, &b) - Mat4::identity().scale(x[6])
}

/// Basis matrices `E_k` with `slack = γ - Σ x_k E_k`.
fn basis(k: usize) -> Mat4 {
    let mut e = Mat4::zeros();
    let (off, local) = if k < 3 { (0, k) } else { (2, k - 3) };
    match (k, local) {
        (6, _) => return Mat4::identity(),
        (_, 0) => e[(off, off)] = 1.0,
        (_, 1) => {
            e[(off, off + 1)] = 1.0;
            e[(off + 1, off)] = 1.0;
        }
        _ => e[(off + 1, off + 1)] = 1.0,
    }
    e
}

fn objective(g: &Mat4, x: &[f64; 7], s: f64) -> f64 {
    let da = x[0] * x[2] - x[1] * x[1];
    let db = x[3] * x[5] - x[4] * x[4];
    if da <= 1.0 || db <= 1.0 || x[0] <= 0.0 || x[3] <= 0.0 {
        return f64::INFINITY;
    }
    let Ok(l) = cholesky(&sym(slack(g, x))) else { return f64::INFINITY };
    let logdet: f64 = (0..4).map(|i| 2.0 * l[(i, i)].ln()).sum();
    -s * x[6] - logdet - (da - 1.0).ln() - (db - 1.0).ln()
}

fn gradient_hessian(g: &Mat4, x: &[f64; 7], s: f64) -> Option<([f64; 7], Matrix<7>)> {
    let si = slack(g, x).inverse()?;
    let e: [Mat4; 7] = std::array::from_fn(basis);
    let se: [Mat4; 7] = std::array::from_fn(|k| si * e[k]);
    let mut grad: [f64; 7] = std::array::from_fn(|k| se[k].trace());
    let mut hess = Matrix::<7>::from_fn(|k, l| (se[k] * se[l]).trace());
    grad[6] -= s;
    for off in [0, 3] {
        let (a11, a12, a22) = (x[off], x[off + 1], x[off + 2]);
        let d = a11 * a22 - a12 * a12 - 1.0;
        let gd = [a22, -2.0 * a12, a11];
        let hd = [[0.0, 0.0, 1.0], [0.0, -2.0, 0.0], [1.0, 0.0, 0.0]];
        for i in 0..3 {
            grad[off + i] -= gd[i] / d;
            for j in 0..3 {
                hess[(off + i, off + j)] += gd[i] * gd[j] / (d * d) - hd[i][j] / d;
            }
        }
    }
    grad.iter().all(|v| v.is_finite()).then_some((grad, hess))
}
