//! RF precoder construction from low-dimensional subspaces.
//!
//! The unconstrained optimum for the RF stage is the basis `U` of the
//! channel's column space (left singular vectors for instantaneous CSIT,
//! leading covariance eigenvectors for statistical CSIT). Under the
//! unit-modulus constraint the element-wise closest phase-shifter network is
//! `F_RF = exp(j * arg(U))`; subarray architectures apply the same phase
//! extraction on a restricted wiring support, with the dynamic variant
//! choosing the support greedily from the entry magnitudes of `U`.

use crate::channel::{ChannelRealization, CovarianceEstimate};
use crate::linalg::{hermitian_eigen_desc, phase_matrix, unit_phase};
use crate::precoding::{RfArchitecture, RfPrecoder};
use crate::{C64, CMatrix, Error, Result};

/// Where a subspace basis came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisSource {
    /// Left singular vectors of an instantaneous channel matrix.
    InstantaneousSvd,
    /// Leading eigenvectors of a channel covariance.
    CovarianceEig,
}

/// An `N x m` matrix with orthonormal columns spanning the target subspace,
/// with the associated singular values or eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    matrix: CMatrix,
    source: BasisSource,
    values: Vec<f64>,
}

impl SubspaceBasis {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn source(&self) -> BasisSource {
        self.source
    }

    /// Singular values (SVD source) or eigenvalues (covariance source),
    /// descending; completed null-space columns carry the value zero.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_columns(&self) -> usize {
        self.matrix.ncols()
    }

    /// Leading `m` columns as a new basis.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.num_columns() {
            return Err(Error::InvalidInput(format!(
                "cannot truncate a {}-column basis to {m} columns",
                self.num_columns()
            )));
        }
        Ok(Self {
            matrix: self.matrix.columns(0, m).clone_owned(),
            source: self.source,
            values: self.values[..m].to_vec(),
        })
    }
}

/// Relative threshold below which singular values count as zero.
const RANK_TOL: f64 = 1e-12;

/// Extend `basis` (whose leading `kept` columns are orthonormal) to `target`
/// columns by orthonormalizing coordinate vectors against it; candidates are
/// scanned in index order so the completion is deterministic.
fn complete_with_coordinates(basis: &mut CMatrix, kept: usize, target: usize) -> Result<()> {
    let n = basis.nrows();
    let mut have = kept;
    for candidate in 0..n {
        if have == target {
            break;
        }
        let mut v = crate::CVector::zeros(n);
        v[candidate] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for i in 0..have {
                let q = basis.column(i);
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-3 {
            v /= C64::new(norm, 0.0);
            basis.set_column(have, &v);
            have += 1;
        }
    }
    if have < target {
        return Err(Error::Numerical(format!(
            "could not complete basis to {target} columns (reached {have})"
        )));
    }
    Ok(())
}

/// Leading `m` left singular vectors of the channel matrix.
///
/// Computed from the `K x K` Gram matrix `H^H H` (eigenvectors `v_i`,
/// eigenvalues `sigma_i^2`) as `u_i = H v_i / sigma_i`, which costs
/// `O(N K^2)` instead of a full `N x N` factorization. Singular values below
/// `1e-12 * sigma_max` are treated as zero and the surplus columns are
/// completed deterministically with orthonormalized coordinate vectors, so
/// the basis is well defined even when `m` exceeds `rank(H)`.
pub fn left_singular_basis(channel: &ChannelRealization, m: usize) -> Result<SubspaceBasis> {
    let n = channel.num_antennas();
    let k = channel.num_users();
    if m == 0 || m > n {
        return Err(Error::InvalidInput(format!(
            "basis size m = {m} out of range 1..={n}"
        )));
    }
    let h = channel.matrix();
    let gram = h.adjoint() * h;
    let (eigvals, eigvecs) = hermitian_eigen_desc(&gram)?;
    let sigma: Vec<f64> = eigvals.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let rank = if sigma_max > 0.0 {
        sigma.iter().filter(|&&s| s > RANK_TOL * sigma_max).count()
    } else {
        0
    };

    let lead = m.min(k).min(rank);
    let mut basis = CMatrix::zeros(n, m);
    let mut values = Vec::with_capacity(m);
    for i in 0..lead {
        let u = h * eigvecs.column(i) / C64::new(sigma[i], 0.0);
        basis.set_column(i, &u);
        values.push(sigma[i]);
    }
    if lead < m {
        complete_with_coordinates(&mut basis, lead, m)?;
        values.resize(m, 0.0);
    }
    Ok(SubspaceBasis {
        matrix: basis,
        source: BasisSource::InstantaneousSvd,
        values,
    })
}

/// Leading `m` eigenvectors of a channel covariance, eigenvalues descending.
pub fn covariance_basis(cov: &CovarianceEstimate, m: usize) -> Result<SubspaceBasis> {
    let n = cov.dim();
    if m == 0 || m > n {
        return Err(Error::InvalidInput(format!(
            "basis size m = {m} out of range 1..={n}"
        )));
    }
    let (eigvals, eigvecs) = hermitian_eigen_desc(cov.matrix())?;
    Ok(SubspaceBasis {
        matrix: eigvecs.columns(0, m).clone_owned(),
        source: BasisSource::CovarianceEig,
        values: eigvals[..m].iter().map(|&l| l.max(0.0)).collect(),
    })
}

/// Fully-connected RF precoder by phase extraction,
/// `F_RF(i, j) = exp(j * arg(U(i, j)))`; the element-wise optimum of
/// `||F_RF - U||_F` under the unit-modulus constraint.
pub fn rf_from_left_singular(basis: &SubspaceBasis) -> RfPrecoder {
    RfPrecoder::fully_connected(phase_matrix(basis.matrix()))
}

/// Baseline fully-connected RF precoder from the channel's entry phases,
/// `F_RF = exp(j * arg(H))`. Only defined for one RF chain per user.
pub fn rf_from_channel_phases(channel: &ChannelRealization, num_rf: usize) -> Result<RfPrecoder> {
    if num_rf != channel.num_users() {
        return Err(Error::InvalidInput(format!(
            "channel-phase RF design requires N_RF = K (got N_RF = {num_rf}, K = {})",
            channel.num_users()
        )));
    }
    Ok(RfPrecoder::fully_connected(phase_matrix(channel.matrix())))
}

/// Fully-connected RF precoder from covariance eigenvectors,
/// `F_RF = exp(j * arg(V_R))` over the `num_rf` leading eigenvectors.
///
/// Logs a warning when `num_rf` is below the covariance's numerical rank:
/// fewer RF chains than propagation dimensions cannot capture the full
/// channel subspace.
pub fn rf_from_covariance(cov: &CovarianceEstimate, num_rf: usize) -> Result<RfPrecoder> {
    let basis = covariance_basis(cov, num_rf)?;
    let full = covariance_rank(cov);
    if num_rf < full {
        log::warn!(
            "covariance RF design with N_RF = {num_rf} < rank(R) = {full}: \
             the statistical subspace is truncated"
        );
    }
    Ok(rf_from_left_singular(&basis))
}

fn covariance_rank(cov: &CovarianceEstimate) -> usize {
    match hermitian_eigen_desc(cov.matrix()) {
        Ok((vals, _)) => {
            let top = vals.first().copied().unwrap_or(0.0);
            if top <= 0.0 {
                0
            } else {
                vals.iter().filter(|&&v| v > 1e-10 * top).count()
            }
        }
        Err(_) => 0,
    }
}

fn check_subarray_dims(basis: &SubspaceBasis, num_rf: usize) -> Result<usize> {
    let n = basis.num_rows();
    if num_rf == 0 || n % num_rf != 0 {
        return Err(Error::InvalidInput(format!(
            "subarray design requires N divisible by N_RF (N = {n}, N_RF = {num_rf})"
        )));
    }
    if basis.num_columns() < num_rf {
        return Err(Error::InvalidInput(format!(
            "basis has {} columns but {num_rf} RF chains are requested",
            basis.num_columns()
        )));
    }
    Ok(n / num_rf)
}

fn subarray_from_partition(
    basis: &SubspaceBasis,
    partition: Vec<Vec<usize>>,
    architecture: RfArchitecture,
) -> Result<RfPrecoder> {
    let n = basis.num_rows();
    let mut matrix = CMatrix::zeros(n, partition.len());
    for (r, subset) in partition.iter().enumerate() {
        for &antenna in subset {
            matrix[(antenna, r)] = unit_phase(basis.matrix()[(antenna, r)]);
        }
    }
    RfPrecoder::subarray(matrix, partition, architecture)
}

/// Block-diagonal RF precoder with the sequential antenna partition
/// `S_r = {r*N_sub, ..., (r+1)*N_sub - 1}` and phases from the basis.
pub fn fixed_subarray_rf(basis: &SubspaceBasis, num_rf: usize) -> Result<RfPrecoder> {
    let n_sub = check_subarray_dims(basis, num_rf)?;
    let partition: Vec<Vec<usize>> = (0..num_rf)
        .map(|r| (r * n_sub..(r + 1) * n_sub).collect())
        .collect();
    subarray_from_partition(basis, partition, RfArchitecture::FixedSubarray)
}

/// Greedy dynamic-subarray partitioning: for each RF chain in order, claim
/// the `N_sub` still-available antennas with the largest `|U(:, r)|`
/// (ties broken toward the lower antenna index), then phase-extract on the
/// claimed support.
pub fn dynamic_subarray_rf(basis: &SubspaceBasis, num_rf: usize) -> Result<RfPrecoder> {
    let n_sub = check_subarray_dims(basis, num_rf)?;
    let n = basis.num_rows();
    let mut available: Vec<usize> = (0..n).collect();
    let mut partition = Vec::with_capacity(num_rf);
    for r in 0..num_rf {
        available.sort_by(|&a, &b| {
            let ma = basis.matrix()[(a, r)].norm();
            let mb = basis.matrix()[(b, r)].norm();
            mb.partial_cmp(&ma).unwrap().then(a.cmp(&b))
        });
        let mut subset: Vec<usize> = available.drain(..n_sub).collect();
        subset.sort_unstable();
        partition.push(subset);
    }
    subarray_from_partition(basis, partition, RfArchitecture::DynamicSubarray)
}

/// Subarray approximation objective `||F_RF - U||_F` against the leading
/// `N_RF` basis columns (also meaningful for fully-connected precoders).
pub fn rf_approximation_error(rf: &RfPrecoder, basis: &SubspaceBasis) -> f64 {
    let cols = rf.num_rf_chains();
    (rf.matrix() - basis.matrix().columns(0, cols)).norm()
}

/// Number of ways to split `n` antennas into `num_rf` unordered equal
/// subsets: `n! / ((n_sub!)^{num_rf} * num_rf!)`. Exact for every count
/// representable in an `f64` (the guard range and far beyond).
pub fn subarray_partition_count(n: usize, num_rf: usize) -> Result<f64> {
    if num_rf == 0 || n % num_rf != 0 {
        return Err(Error::InvalidInput(format!(
            "partition count requires N divisible by N_RF (N = {n}, N_RF = {num_rf})"
        )));
    }
    let n_sub = n / num_rf;
    // Leader-based product: the lowest free antenna anchors each subset, so
    // count = prod_r C(remaining - 1, n_sub - 1).
    let mut count = 1.0_f64;
    let mut remaining = n;
    for _ in 0..num_rf {
        count *= binomial(remaining - 1, n_sub - 1);
        remaining -= n_sub;
    }
    Ok(count)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Upper bound on partitions the exhaustive oracle will enumerate.
pub const EXHAUSTIVE_PARTITION_LIMIT: f64 = 1e6;

/// Globally optimal equal-size subarray partition by exhaustive search,
/// used as a test oracle for the greedy algorithm.
///
/// Every unordered partition is enumerated; subsets are matched to RF chains
/// by minimizing `||F_RF - U||_F` over all subset-to-column assignments.
/// Ties keep the first minimizer in enumeration order, which is the
/// lexicographically smallest partition. Refuses instances with more than
/// [`EXHAUSTIVE_PARTITION_LIMIT`] partitions.
pub fn exhaustive_subarray_oracle(
    basis: &SubspaceBasis,
    num_rf: usize,
) -> Result<(RfPrecoder, f64)> {
    let n_sub = check_subarray_dims(basis, num_rf)?;
    let n = basis.num_rows();
    let count = subarray_partition_count(n, num_rf)?;
    if count > EXHAUSTIVE_PARTITION_LIMIT {
        return Err(Error::InvalidInput(format!(
            "exhaustive subarray search over {count:.3e} partitions exceeds the \
             {EXHAUSTIVE_PARTITION_LIMIT:.0e} limit"
        )));
    }

    // ||F_RF - U||_F^2 = base + sum_r sum_{antenna in S_r} delta[antenna][r]
    // with delta = (1 - |u|)^2 - |u|^2 = 1 - 2|u| and base = sum |u|^2.
    let mut base = 0.0;
    let mut delta = vec![vec![0.0; num_rf]; n];
    for r in 0..num_rf {
        for i in 0..n {
            let mag = basis.matrix()[(i, r)].norm();
            base += mag * mag;
            delta[i][r] = 1.0 - 2.0 * mag;
        }
    }

    let mut best_cost = f64::INFINITY;
    let mut best_assignment: Option<Vec<Vec<usize>>> = None;
    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(num_rf);
    let free: Vec<usize> = (0..n).collect();
    enumerate_partitions(&free, n_sub, &mut groups, &mut |groups| {
        let (cost, assignment) = best_column_assignment(groups, &delta, num_rf);
        if cost < best_cost {
            best_cost = cost;
            best_assignment = Some(assignment);
        }
    });

    let partition = best_assignment
        .ok_or_else(|| Error::Numerical("partition enumeration produced nothing".into()))?;
    let rf = subarray_from_partition(basis, partition, RfArchitecture::DynamicSubarray)?;
    let objective = (base + best_cost).max(0.0).sqrt();
    Ok((rf, objective))
}

/// Enumerate unordered partitions of `free` into equal subsets of `n_sub`.
/// The lowest free element always anchors the next subset, so each partition
/// appears exactly once, in lexicographic order.
fn enumerate_partitions(
    free: &[usize],
    n_sub: usize,
    groups: &mut Vec<Vec<usize>>,
    visit: &mut impl FnMut(&[Vec<usize>]),
) {
    if free.is_empty() {
        visit(groups);
        return;
    }
    let anchor = free[0];
    let rest = &free[1..];
    let mut combo_indices: Vec<usize> = (0..n_sub - 1).collect();
    loop {
        let mut group = Vec::with_capacity(n_sub);
        group.push(anchor);
        group.extend(combo_indices.iter().map(|&i| rest[i]));
        let remaining: Vec<usize> = rest
            .iter()
            .enumerate()
            .filter(|(i, _)| !combo_indices.contains(i))
            .map(|(_, &v)| v)
            .collect();
        groups.push(group);
        enumerate_partitions(&remaining, n_sub, groups, visit);
        groups.pop();

        if !next_combination(&mut combo_indices, rest.len()) {
            break;
        }
    }
}

/// Advance `indices` to the next k-combination of `0..n` in lexicographic
/// order; false when exhausted. An empty combination has no successor.
fn next_combination(indices: &mut [usize], n: usize) -> bool {
    let k = indices.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if indices[i] < n - (k - i) {
            indices[i] += 1;
            for j in i + 1..k {
                indices[j] = indices[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Optimal subset-to-column matching for one partition: brute force over the
/// `num_rf!` permutations (small by the enumeration guard), first minimizer
/// kept on ties.
fn best_column_assignment(
    groups: &[Vec<usize>],
    delta: &[Vec<f64>],
    num_rf: usize,
) -> (f64, Vec<Vec<usize>>) {
    // Cost of placing group g on column r.
    let mut cost = vec![vec![0.0; num_rf]; groups.len()];
    for (g, group) in groups.iter().enumerate() {
        for r in 0..num_rf {
            cost[g][r] = group.iter().map(|&antenna| delta[antenna][r]).sum();
        }
    }
    let mut remaining: Vec<usize> = (0..num_rf).collect();
    let mut prefix = Vec::with_capacity(num_rf);
    let mut best = f64::INFINITY;
    let mut best_perm = remaining.clone();
    for_each_permutation(&mut remaining, &mut prefix, &mut |p| {
        let total: f64 = p.iter().enumerate().map(|(g, &r)| cost[g][r]).sum();
        if total < best {
            best = total;
            best_perm = p.to_vec();
        }
    });
    let mut assignment = vec![Vec::new(); num_rf];
    for (g, &r) in best_perm.iter().enumerate() {
        assignment[r] = groups[g].clone();
    }
    (best, assignment)
}

/// Visit all permutations of `remaining` (ascending on entry, so the sweep
/// is lexicographic).
fn for_each_permutation(
    remaining: &mut Vec<usize>,
    prefix: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if remaining.is_empty() {
        visit(prefix);
        return;
    }
    for i in 0..remaining.len() {
        let x = remaining.remove(i);
        prefix.push(x);
        for_each_permutation(remaining, prefix, visit);
        prefix.pop();
        remaining.insert(i, x);
    }
}
