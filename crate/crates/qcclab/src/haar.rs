//! Deterministic sampling of Haar-random states, unitaries, densities,
//! channels, and POVMs.
//!
//! All randomness in the crate flows through [`ChaCha8Rng`] seeded from a
//! caller-supplied 64-bit seed; batch work derives one stream per work item
//! so results do not depend on scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::KrausChannel;
use crate::linalg::{c, cr, CMat, CVec};

/// Root RNG for a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` of the RNG for `seed`; used to make batch
/// items (restarts, grid points, trials) order-independent.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

/// Haar-random unit vector in `C^n`.
pub fn state(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    loop {
        let v = CVec::from_fn(n, |_, _| c(gaussian(rng), gaussian(rng)));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / cr(norm);
        }
    }
}

/// Haar-random unitary via QR of a Ginibre matrix with phase fixing.
pub fn unitary(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = ginibre(n, n, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    // absorb the phases of R's diagonal so the distribution is Haar
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / cr(d.norm()) } else { cr(1.0) };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// Random Hermitian matrix (GUE-like, unnormalized scale O(1)).
pub fn hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = ginibre(n, n, rng);
    (&g + g.adjoint()) * cr(0.5 / (n as f64).sqrt())
}

/// Random full-rank density matrix (normalized Wishart).
pub fn density(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = ginibre(n, n, rng);
    let w = &g * g.adjoint();
    let tr: f64 = w.diagonal().iter().map(|z| z.re).sum();
    w / cr(tr)
}

/// Rank-one density matrix of a Haar-random pure state.
pub fn pure_density(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let psi = state(n, rng);
    &psi * psi.adjoint()
}

/// Random operator normalized to unit operator norm.
pub fn operator_unit_norm(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = ginibre(n, n, rng);
    let nrm = crate::linalg::op_norm(&g);
    g / cr(nrm)
}

/// Random Hermitian operator normalized to unit operator norm.
pub fn hermitian_unit_norm(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let h = hermitian(n, rng);
    let nrm = crate::linalg::op_norm(&h);
    h / cr(nrm)
}

/// Haar-random CPTP channel of the given Kraus rank, from a Haar-random
/// isometry into a `rank`-dimensional environment.
pub fn channel(dim: usize, rank: usize, rng: &mut ChaCha8Rng) -> KrausChannel {
    assert!(rank >= 1);
    // Isometry V: C^dim -> C^(dim*rank): QR of a tall Ginibre matrix.
    let g = ginibre(dim * rank, dim, rng);
    let qr = g.qr();
    let v = qr.q(); // (dim*rank) x dim, V†V = I
    let kraus: Vec<CMat> = (0..rank)
        .map(|k| {
            let mut x = CMat::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    x[(i, j)] = v[(k * dim + i, j)];
                }
            }
            x
        })
        .collect();
    KrausChannel::new(kraus, 1e-9).expect("Haar isometry blocks form a channel")
}

/// Random POVM: `m` positive effects of norm <= 1 summing to the identity.
pub fn povm(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<CMat> {
    assert!(m >= 1);
    let parts: Vec<CMat> = (0..m)
        .map(|_| {
            let g = ginibre(n, n, rng);
            &g * g.adjoint()
        })
        .collect();
    let total = parts.iter().fold(CMat::zeros(n, n), |acc, p| acc + p);
    // S^{-1/2} A_i S^{-1/2} via the spectral decomposition of the sum.
    let spec = crate::linalg::hermitian_eigen(&total).expect("finite Wishart sum");
    let inv_sqrt = {
        let d = CMat::from_diagonal(&CVec::from_iterator(
            spec.eigenvalues.len(),
            spec.eigenvalues.iter().map(|&x| cr(1.0 / x.max(1e-300).sqrt())),
        ));
        &spec.eigenvectors * d * spec.eigenvectors.adjoint()
    };
    parts.iter().map(|p| &inv_sqrt * p * &inv_sqrt).collect()
}
