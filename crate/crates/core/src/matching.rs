//! Patch matching: normalized mean-absolute distances, their temperature
//! relaxation, the relaxation Jacobian, and hard argmin selection.
//!
//! The distance of candidate `i` against the reference patch is
//! `d_i = MAD_i / sqrt(sum_j MAD_j^2 + eps^2)` where `MAD` is the mean
//! absolute difference over the patch. Note the normalization couples each
//! distance to the entire candidate set; it never changes the ordering, so
//! argmin(d) = argmin(MAD).

use crate::error::{Error, Result};
use crate::grid::{Grid, Shift, Vec2};
use crate::scalar::Scalar;

/// Regularizer inside the distance normalization; removes the 0/0 case when
/// every candidate equals the reference.
pub const NMA_EPS: f64 = 1e-12;

/// A reference patch and the candidate patches it is matched against,
/// each tagged with its displacement from the search center.
#[derive(Clone, Debug)]
pub struct CandidateSet<T> {
    ref_patch: Grid<T>,
    candidates: Vec<Grid<T>>,
    positions: Vec<Shift>,
}

impl<T: Scalar> CandidateSet<T> {
    pub fn new(ref_patch: Grid<T>, candidates: Vec<Grid<T>>, positions: Vec<Shift>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::parameter("candidate set must not be empty"));
        }
        if candidates.len() != positions.len() {
            return Err(Error::dimension("one position per candidate is required"));
        }
        for c in &candidates {
            if !c.same_dims(&ref_patch) {
                return Err(Error::dimension(
                    "candidate patches must match the reference patch size",
                ));
            }
        }
        Ok(CandidateSet {
            ref_patch,
            candidates,
            positions,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn ref_patch(&self) -> &Grid<T> {
        &self.ref_patch
    }

    pub fn candidates(&self) -> &[Grid<T>] {
        &self.candidates
    }

    pub fn positions(&self) -> &[Shift] {
        &self.positions
    }
}

/// The relaxed match for one query: distances, softmax weights, the blended
/// patch and the weight-averaged displacement.
#[derive(Clone, Debug)]
pub struct SoftMatch<T> {
    pub distances: Vec<T>,
    pub weights: Vec<T>,
    pub temperature: T,
    pub blended_patch: Grid<T>,
    pub expected_offset: Vec2<T>,
}

/// Normalized mean-absolute distance of every candidate against the
/// reference patch.
pub fn nma_distances<T: Scalar>(cs: &CandidateSet<T>, eps: T) -> Vec<T> {
    let mads: Vec<T> = cs
        .candidates
        .iter()
        .map(|c| c.mean_abs_diff(&cs.ref_patch))
        .collect();
    let norm_sq: T = mads.iter().map(|&m| m * m).sum::<T>() + eps * eps;
    let norm = norm_sq.sqrt();
    mads.into_iter().map(|m| m / norm).collect()
}

/// Softmax of `-d/T`, computed with max-subtraction so small temperatures do
/// not underflow the dominant weight.
pub fn soft_weights<T: Scalar>(distances: &[T], temperature: T) -> Result<Vec<T>> {
    if temperature <= T::zero() {
        return Err(Error::parameter("temperature must be positive"));
    }
    if distances.is_empty() {
        return Err(Error::parameter("distances must not be empty"));
    }
    let min_d = distances.iter().fold(T::infinity(), |acc, &d| acc.min(d));
    let mut weights: Vec<T> = distances
        .iter()
        .map(|&d| (-(d - min_d) / temperature).exp())
        .collect();
    let total: T = weights.iter().copied().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Jacobian of [`soft_weights`]: `J[i][j] = dw_i/dd_j = -w_i (delta_ij - w_j) / T`.
/// Every row sums to zero because the weights always sum to one.
pub fn soft_weights_jacobian<T: Scalar>(distances: &[T], temperature: T) -> Result<Vec<Vec<T>>> {
    let w = soft_weights(distances, temperature)?;
    let m = w.len();
    let inv_t = T::one() / temperature;
    let mut jac = vec![vec![T::zero(); m]; m];
    for i in 0..m {
        for j in 0..m {
            let delta = if i == j { T::one() } else { T::zero() };
            jac[i][j] = -(w[i] * (delta - w[j])) * inv_t;
        }
    }
    Ok(jac)
}

/// Index of the minimum distance. Ties break toward the smallest squared
/// displacement from the search center, then the earliest (raster) index,
/// biasing toward no motion.
pub fn hard_argmin<T: Scalar>(distances: &[T], positions: &[Shift]) -> usize {
    debug_assert_eq!(distances.len(), positions.len());
    debug_assert!(!distances.is_empty());
    let mut best = 0usize;
    for i in 1..distances.len() {
        let better = distances[i] < distances[best]
            || (distances[i] == distances[best]
                && positions[i].mag_sq() < positions[best].mag_sq());
        if better {
            best = i;
        }
    }
    best
}

/// Full relaxed match: NMA distances, softmax weights, the convex blend of
/// candidates and the expected displacement.
pub fn soft_match<T: Scalar>(cs: &CandidateSet<T>, temperature: T) -> Result<SoftMatch<T>> {
    let distances = nma_distances(cs, T::from_f64(NMA_EPS));
    let weights = soft_weights(&distances, temperature)?;
    let k = cs.ref_patch.height();
    let kw = cs.ref_patch.width();
    let mut blended = Grid::zeros(k, kw);
    for (w, cand) in weights.iter().zip(&cs.candidates) {
        for (acc, &v) in blended.data_mut().iter_mut().zip(cand.data()) {
            *acc += *w * v;
        }
    }
    let mut expected = Vec2::new(T::zero(), T::zero());
    for (w, pos) in weights.iter().zip(&cs.positions) {
        expected.y += *w * T::from_f64(pos.dy as f64);
        expected.x += *w * T::from_f64(pos.dx as f64);
    }
    Ok(SoftMatch {
        distances,
        weights,
        temperature,
        blended_patch: blended,
        expected_offset: expected,
    })
}
