//! Small complex linear-algebra helpers shared across the crate.

use crate::{C64, CMatrix, Error, Result};

/// Project a complex scalar onto the unit circle: `z / |z|`.
///
/// The value equals `exp(j * arg(z))`; by convention `0` maps to `1` (any
/// phase is equally good for a zero entry, and a fixed choice keeps outputs
/// deterministic).
#[inline]
pub fn unit_phase(z: C64) -> C64 {
    let m = z.norm();
    if m == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        z / m
    }
}

/// Entry-wise phase extraction: `out[i][j] = unit_phase(m[i][j])`.
pub fn phase_matrix(m: &CMatrix) -> CMatrix {
    m.map(unit_phase)
}

/// Largest absolute deviation from Hermitian symmetry, `max |A - A^H|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order (ties keep the decomposition routine's order).
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns.
pub fn hermitian_eigen_desc(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput(format!(
            "eigendecomposition requires a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Orthonormalize the columns of `m` in place with twice-iterated modified
/// Gram-Schmidt, dropping columns whose residual falls below `drop_tol`.
///
/// Returns the number of columns kept (they occupy the leading columns).
pub fn mgs_orthonormalize(m: &mut CMatrix, drop_tol: f64) -> usize {
    let ncols = m.ncols();
    let mut kept = 0;
    for j in 0..ncols {
        let mut v = m.column(j).clone_owned();
        for _ in 0..2 {
            for i in 0..kept {
                let q = m.column(i);
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm > drop_tol {
            v /= C64::new(norm, 0.0);
            m.set_column(kept, &v);
            kept += 1;
        }
    }
    kept
}

/// Cosines of the principal angles between the column spaces of `a` and `b`
/// (descending). Inputs need not have orthonormal columns.
pub fn principal_angle_cosines(a: &CMatrix, b: &CMatrix) -> Result<Vec<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::InvalidInput(format!(
            "subspaces live in different ambient dimensions ({} vs {})",
            a.nrows(),
            b.nrows()
        )));
    }
    let mut qa = a.clone();
    let mut qb = b.clone();
    let ka = mgs_orthonormalize(&mut qa, 1e-12);
    let kb = mgs_orthonormalize(&mut qb, 1e-12);
    if ka == 0 || kb == 0 {
        return Err(Error::Degenerate(
            "principal angles of a zero-dimensional subspace".into(),
        ));
    }
    let cross = qa.columns(0, ka).adjoint() * qb.columns(0, kb);
    let svd = cross.svd(false, false);
    let mut cos: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| s.clamp(0.0, 1.0))
        .collect();
    cos.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(cos)
}

/// Spectral subspace distance `sin(theta_max)` between the column spaces of
/// `a` and `b`: 0 for identical spans, 1 for spans with an orthogonal
/// direction.
///
/// Computed from the residual `(I - Qa Qa^H) Qb`, whose largest singular
/// value is `sin(theta_max)` directly; this stays accurate for nearly
/// identical spans where `sqrt(1 - cos^2)` would lose half the digits.
pub fn subspace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::InvalidInput(format!(
            "subspaces live in different ambient dimensions ({} vs {})",
            a.nrows(),
            b.nrows()
        )));
    }
    let mut qa = a.clone();
    let mut qb = b.clone();
    let ka = mgs_orthonormalize(&mut qa, 1e-12);
    let kb = mgs_orthonormalize(&mut qb, 1e-12);
    if ka == 0 || kb == 0 {
        return Err(Error::Degenerate(
            "subspace distance of a zero-dimensional subspace".into(),
        ));
    }
    let qa = qa.columns(0, ka);
    let qb = qb.columns(0, kb).clone_owned();
    let residual = &qb - qa * (qa.adjoint() * &qb);
    let svd = residual.svd(false, false);
    Ok(svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s)).min(1.0))
}

/// Solve the Hermitian positive-definite system `M X = B` by Cholesky,
/// retrying once with a small diagonal loading if `M` is singular to
/// working precision.
pub fn solve_hermitian(m: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if let Some(chol) = m.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    let trace = m.diagonal().iter().map(|z| z.re).sum::<f64>();
    let loading = 1e-12 * trace / m.nrows() as f64;
    let mut loaded = m.clone();
    for i in 0..m.nrows() {
        loaded[(i, i)] += C64::new(loading, 0.0);
    }
    loaded
        .cholesky()
        .map(|c| c.solve(b))
        .ok_or_else(|| Error::Numerical("Hermitian solve failed even with diagonal loading".into()))
}
