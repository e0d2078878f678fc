//! Witnessed upper bounds on the restricted-eigenvalue constants.
//!
//! For a fixed support J0 the target is
//!
//! ```text
//!   min { sqrt(D^T Psi D) / |D_{J0}|_2 :  |D_{J0^c}|_1 <= c0 |D_{J0}|_1 }
//! ```
//!
//! (or with |D_{J01}|_2 in the denominator for the m-variant). The problem
//! is scale invariant, so |D_{J0}|_2 is pinned to 1 and the minimization
//! alternates between the convex inner problem in D_{J0^c} (exact solve when
//! the unconstrained minimizer fits the l1 ball, projected gradient
//! otherwise) and a projected Rayleigh step on the J0 sphere. Every iterate
//! is feasible, so any evaluated ratio is a valid upper bound; the search
//! only affects tightness.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct SearchParams {
    /// Random restarts per support, on top of the eigenvector starts.
    pub budget: usize,
    /// Outer alternations per start.
    pub outer_iters: usize,
    /// Projected-gradient iteration cap for the inner problem.
    pub pgd_iters: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            budget: 64,
            outer_iters: 25,
            pgd_iters: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConeSearchOutcome {
    /// Minimal ratio with denominator |D_{J0}|_2.
    pub ratio: f64,
    /// Minimal ratio with denominator |D_{J01}|_2 (when an m was supplied);
    /// evaluated on the same witnesses so it never exceeds `ratio`.
    pub ratio_m: Option<f64>,
    /// Witness attaining `ratio`.
    pub delta: DVector<f64>,
}

/// Euclidean projection onto the l1 ball of the given radius.
pub fn project_l1_ball(v: &mut DVector<f64>, radius: f64) {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return;
    }
    if radius <= 0.0 {
        v.fill(0.0);
        return;
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (i, &u) in mags.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - radius) / (i as f64 + 1.0);
        if u > t {
            tau = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = x.signum() * (x.abs() - tau).max(0.0);
    }
}

struct ConeProblem<'a> {
    psi: &'a DMatrix<f64>,
    j0: &'a [usize],
    outside: Vec<usize>,
    psi_cc: DMatrix<f64>,
    psi_cj: DMatrix<f64>,
    c0: f64,
    /// 1 / (2 phi_max), a safe fixed step for the quadratic.
    step: f64,
}

impl<'a> ConeProblem<'a> {
    fn new(psi: &'a DMatrix<f64>, j0: &'a [usize], c0: f64, lipschitz: f64) -> Self {
        let m = psi.nrows();
        let in_j0 = {
            let mut mask = vec![false; m];
            for &j in j0 {
                mask[j] = true;
            }
            mask
        };
        let outside: Vec<usize> = (0..m).filter(|&j| !in_j0[j]).collect();
        let psi_cc = DMatrix::from_fn(outside.len(), outside.len(), |a, b| {
            psi[(outside[a], outside[b])]
        });
        let psi_cj =
            DMatrix::from_fn(outside.len(), j0.len(), |a, b| psi[(outside[a], j0[b])]);
        ConeProblem {
            psi,
            j0,
            outside,
            psi_cc,
            psi_cj,
            c0,
            step: 1.0 / lipschitz.max(1e-12),
        }
    }

    fn assemble(&self, delta_j: &DVector<f64>, delta_c: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(self.psi.nrows());
        for (k, &j) in self.j0.iter().enumerate() {
            full[j] = delta_j[k];
        }
        for (k, &j) in self.outside.iter().enumerate() {
            full[j] = delta_c[k];
        }
        full
    }

    fn quadratic(&self, full: &DVector<f64>) -> f64 {
        (self.psi * full).dot(full)
    }

    /// Minimizes the quadratic over the l1 ball of radius c0 |delta_j|_1,
    /// exactly when the unconstrained minimizer is interior, by projected
    /// gradient otherwise. The returned point is always feasible.
    fn inner_solve(
        &self,
        delta_j: &DVector<f64>,
        start: Option<&DVector<f64>>,
        pgd_iters: usize,
    ) -> DVector<f64> {
        let radius = self.c0 * delta_j.iter().map(|v| v.abs()).sum::<f64>();
        let dim = self.outside.len();
        if dim == 0 || radius <= 0.0 {
            return DVector::zeros(dim);
        }
        let rhs = -(&self.psi_cj * delta_j);
        let unconstrained = self
            .psi_cc
            .clone()
            .cholesky()
            .map(|chol| chol.solve(&rhs));
        if let Some(unc) = &unconstrained {
            if unc.iter().map(|v| v.abs()).sum::<f64>() <= radius {
                return unc.clone();
            }
        }
        let mut point = match (start, &unconstrained) {
            (Some(p), _) => p.clone(),
            (None, Some(unc)) => unc.clone(),
            (None, None) => DVector::zeros(dim),
        };
        project_l1_ball(&mut point, radius);
        for _ in 0..pgd_iters {
            let grad = 2.0 * (&self.psi_cc * &point + &rhs * -1.0);
            let mut next = &point - self.step * grad;
            project_l1_ball(&mut next, radius);
            let change = (&next - &point).amax();
            point = next;
            if change <= 1e-13 * (1.0 + point.amax()) {
                break;
            }
        }
        // Guard against projection roundoff: shrink onto the ball if needed.
        let l1: f64 = point.iter().map(|v| v.abs()).sum();
        if l1 > radius {
            point *= radius / l1;
        }
        point
    }
}

/// Squared 2-norm of the restriction of `full` to J0 plus its `m` largest
/// magnitudes outside J0 (ties towards smaller index).
fn j01_norm_squared(full: &DVector<f64>, j0: &[usize], outside: &[usize], m: usize) -> f64 {
    let mut on: f64 = j0.iter().map(|&j| full[j] * full[j]).sum();
    let mut mags: Vec<(usize, f64)> = outside.iter().map(|&j| (j, full[j].abs())).collect();
    mags.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for (_, v) in mags.into_iter().take(m) {
        on += v * v;
    }
    on
}

/// Minimizes the cone ratio for a fixed support.
///
/// `lipschitz` should be (an upper bound on) twice the maximal eigenvalue of
/// `psi`. When `m_variant` is given, the J01 ratio is evaluated on the same
/// iterates and reported alongside.
pub fn min_ratio_over_cone(
    psi: &DMatrix<f64>,
    j0: &[usize],
    c0: f64,
    m_variant: Option<usize>,
    lipschitz: f64,
    params: &SearchParams,
    rng: &mut ChaCha8Rng,
) -> ConeSearchOutcome {
    let problem = ConeProblem::new(psi, j0, c0, lipschitz);
    let s = j0.len();

    let mut best_ratio = f64::INFINITY;
    let mut best_ratio_m = f64::INFINITY;
    let mut best_delta = DVector::zeros(psi.nrows());

    let psi_jj = DMatrix::from_fn(s, s, |a, b| psi[(j0[a], j0[b])]);
    let eig = psi_jj.symmetric_eigen();
    let min_idx = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let eigvec: DVector<f64> = eig.eigenvectors.column(min_idx).into();

    let mut starts: Vec<DVector<f64>> = vec![eigvec.clone(), -eigvec];
    for _ in 0..params.budget {
        let mut v = DVector::from_fn(s, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        let norm = v.norm();
        if norm > 1e-12 {
            v /= norm;
            starts.push(v);
        }
    }

    for start in starts {
        let mut delta_j = start;
        let mut delta_c: Option<DVector<f64>> = None;
        for _ in 0..params.outer_iters {
            let inner = problem.inner_solve(&delta_j, delta_c.as_ref(), params.pgd_iters);
            let full = problem.assemble(&delta_j, &inner);
            let q = problem.quadratic(&full).max(0.0);
            let denom = delta_j.norm();
            if denom <= 1e-14 {
                break;
            }
            let ratio = q.sqrt() / denom;
            if ratio < best_ratio {
                best_ratio = ratio;
                best_delta = full.clone();
            }
            if let Some(m) = m_variant {
                let d01 = j01_norm_squared(&full, j0, &problem.outside, m).sqrt();
                if d01 > 1e-14 {
                    best_ratio_m = best_ratio_m.min(q.sqrt() / d01);
                }
            }
            // Rayleigh step on the J0 block, then renormalize to the sphere.
            let image = problem.psi * &full;
            let rayleigh = q / (denom * denom);
            let grad = DVector::from_fn(s, |k, _| {
                2.0 * (image[j0[k]] - rayleigh * delta_j[k])
            });
            let mut next = &delta_j - problem.step * grad;
            let norm = next.norm();
            if norm <= 1e-14 {
                break;
            }
            next /= norm;
            let moved = (&next - &delta_j).amax();
            delta_j = next;
            delta_c = Some(inner);
            if moved <= 1e-13 {
                break;
            }
        }
    }

    ConeSearchOutcome {
        ratio: best_ratio,
        ratio_m: m_variant.map(|_| best_ratio_m),
        delta: best_delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn search(psi: DMatrix<f64>, j0: &[usize], c0: f64, m: Option<usize>) -> ConeSearchOutcome {
        let lipschitz = 2.0 * psi.clone().symmetric_eigen().eigenvalues.max();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        min_ratio_over_cone(
            &psi,
            j0,
            c0,
            m,
            lipschitz,
            &SearchParams {
                budget: 8,
                ..Default::default()
            },
            &mut rng,
        )
    }

    #[test]
    fn identity_gram_has_unit_ratio() {
        let outcome = search(DMatrix::identity(4, 4), &[0], 1.0, None);
        assert_relative_eq!(outcome.ratio, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn correlated_two_by_two_matches_hand_minimum() {
        // Psi = [[1, 0.5], [0.5, 1]], J0 = {0}, c0 = 1: minimum of
        // 1 + t + t^2 over |t| <= 1 is 3/4 at t = -1/2.
        let psi = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let outcome = search(psi, &[0], 1.0, None);
        assert_relative_eq!(outcome.ratio, 0.75f64.sqrt(), epsilon = 1e-9);
        assert_relative_eq!(outcome.delta[1] / outcome.delta[0], -0.5, epsilon = 1e-6);
    }

    #[test]
    fn projection_matches_manual_example() {
        let mut v = DVector::from_vec(vec![3.0, -1.0]);
        project_l1_ball(&mut v, 2.0);
        // tau = 1: (2, 0); |.|_1 = 2.
        assert_relative_eq!(v[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(v[1], 0.0, epsilon = 1e-12);
        let mut inside = DVector::from_vec(vec![0.5, 0.5]);
        project_l1_ball(&mut inside, 2.0);
        assert_eq!(inside, DVector::from_vec(vec![0.5, 0.5]));
    }

    #[test]
    fn m_variant_never_exceeds_plain_ratio() {
        let psi = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.0],
        );
        let outcome = search(psi, &[0], 1.0, Some(1));
        assert!(outcome.ratio_m.unwrap() <= outcome.ratio + 1e-9);
    }
}
