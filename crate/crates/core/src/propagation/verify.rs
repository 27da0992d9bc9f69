use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphOperators;
use crate::linalg::{dense_inverse, symmetric_eigen, DenseMatrix, SparseMatrix};
use crate::lowrank::EigOptions;
use crate::random::{gaussian_matrix, seeded};
use crate::scalar::Scalar;

use super::objective::DENSE_ORACLE_LIMIT;
use super::operator::{build_propagation_with, BuildOptions};
use super::spec::{RegularizerSpec, Variant};

/// Eigenvalues of `L̃` below this are treated as its null space.
const NULL_SPACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub tolerance: f64,
    /// Relative perturbation applied to the closed-form side; a negative control.
    pub fault: Option<f64>,
    /// Columns of the random `H^{(l−1)}Θ`.
    pub n_cols: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            fault: None,
            n_cols: 3,
        }
    }
}

/// Outcome of one stationarity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub variant: Variant,
    pub label: String,
    pub seed: u64,
    pub n_nodes: usize,
    /// `max |H_closed − H_stationary|`.
    pub discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// JKNet/DAGNN: `max |truncated − resolvent|`, reported only.
    pub truncation_gap: Option<f64>,
}

impl StationarityReport {
    pub fn ensure_passed(&self) -> Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(Error::TheoremMismatch {
                variant: self.label.clone(),
                discrepancy: self.discrepancy,
                tolerance: self.tolerance,
            })
        }
    }
}

/// Random undirected graph with 8 to 32 nodes and nonnegative sparse features
/// with no all-zero row, for the stationarity checks.
pub fn random_instance(seed: u64) -> Result<(SparseMatrix<f64>, DenseMatrix<f64>)> {
    use rand::Rng as _;
    let mut rng = seeded(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = rng.random_range(8..=32);
    let p = 3.0 / n as f64;
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                let w = 0.5 + rng.random::<f64>();
                triplets.push((i, j, w));
                triplets.push((j, i, w));
            }
        }
    }
    let adjacency = SparseMatrix::from_triplets(n, n, triplets)?;
    let mut features = DenseMatrix::from_fn(n, 6, |_, _| {
        let u: f64 = rng.random();
        if u < 0.5 {
            0.0
        } else {
            u
        }
    });
    for i in 0..n {
        if features.row(i).iter().all(|&v| v == 0.0) {
            features[(i, i % 6)] = 0.5 + rng.random::<f64>();
        }
    }
    Ok((adjacency, features))
}

fn solve_dense<T: Scalar>(s: &DenseMatrix<T>, t: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    dense_inverse(s)?.matmul(t)
}

fn shift<T: Scalar>(base: &DenseMatrix<T>, c: f64) -> DenseMatrix<T> {
    let mut out = base.scale(T::of(c));
    for i in 0..out.n_rows() {
        out[(i, i)] += T::one();
    }
    out
}

/// `(1/(β+1))(I − β/(β+1)·Â)^{-1}`: the un-truncated series behind JKNet/DAGNN.
fn resolvent<T: Scalar>(a_hat: &DenseMatrix<T>, beta: f64) -> Result<DenseMatrix<T>> {
    let s = shift(a_hat, -beta / (beta + 1.0));
    Ok(dense_inverse(&s)?.scale(T::of(1.0 / (beta + 1.0))))
}

/// Orthonormal basis of the null space of a symmetric PSD matrix.
fn null_space<T: Scalar>(l: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let (vals, vecs) = symmetric_eigen(l)?;
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].abs().as_f64() < NULL_SPACE_TOL).collect();
    Ok(DenseMatrix::from_fn(l.n_rows(), keep.len(), |i, j| vecs[(i, keep[j])]))
}

/// The two GCN routes on `range(L̃)`, where the objective is bounded below:
/// the inverse `(L̃ + Π₀)^{-1}` and the bordered system `[L̃ N; Nᵀ 0]`.
fn gcn_routes<T: Scalar>(ops: &GraphOperators<T>, b: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    let l = ops.l_topo.to_dense();
    let basis = null_space(&l)?;
    let (n, k) = basis.shape();
    let proj = basis.matmul_t(&basis)?;
    let b_range = b.sub(&proj.matmul(b)?)?;

    let closed = solve_dense(&l.add(&proj)?, &b_range)?;

    let mut kkt = DenseMatrix::zeros(n + k, n + k);
    let mut rhs = DenseMatrix::zeros(n + k, b.n_cols());
    for i in 0..n {
        for j in 0..n {
            kkt[(i, j)] = l[(i, j)];
        }
        for j in 0..k {
            kkt[(i, n + j)] = basis[(i, j)];
            kkt[(n + j, i)] = basis[(i, j)];
        }
        rhs.row_mut(i).copy_from_slice(b_range.row(i));
    }
    let sol = solve_dense(&kkt, &rhs)?;
    Ok((closed, sol.select_rows(&(0..n).collect::<Vec<_>>())))
}

/// Computes the layer output two ways and compares them: (a) the closed-form
/// rule, with the exact inverse where the rule truncates a series, and (b) a
/// dense solve of the objective's stationarity system. `H^{(l−1)}Θ` and `H⁰`
/// are drawn from `seed`.
pub fn verify_stationarity<T: Scalar>(
    spec: &RegularizerSpec,
    ops: &GraphOperators<T>,
    seed: u64,
    opts: &VerifyOptions,
) -> Result<StationarityReport> {
    let n = ops.n_nodes();
    if n > DENSE_ORACLE_LIMIT {
        return Err(Error::TooLarge { n, max: DENSE_ORACLE_LIMIT });
    }
    spec.validate()?;
    let mut rng = seeded(seed);
    let b: DenseMatrix<T> = gaussian_matrix(n, opts.n_cols, &mut rng);
    let h0: DenseMatrix<T> = gaussian_matrix(n, opts.n_cols, &mut rng);
    let a_hat = ops.a_hat.to_dense();
    let l_hat = ops.l_hat()?.to_dense();
    let exact_build = BuildOptions {
        eig: EigOptions {
            tol: 1e-12,
            max_iter: 50,
            seed,
            oversample: 0,
            check_every: 1,
            strict: true,
        },
        cg_tol: 1e-13,
        cg_max_iter: 10_000,
    };
    let source = spec.variant.needs_source().then_some(&h0);
    let mut truncation_gap = None;

    let (closed, stationary) = match spec.variant {
        Variant::Gcn | Variant::Sgc => gcn_routes(ops, &b)?,
        Variant::Appnp => {
            let closed = build_propagation_with(spec, ops, source, &exact_build)?.apply(&b)?;
            // Stationarity multiplied through by (1−α)Â, so Â^{-1} is never formed.
            let s = DenseMatrix::identity(n).scale(T::of(1.0 / (1.0 - spec.alpha)));
            let mut t = ops.a_hat.spmm(&b)?;
            t.axpy(T::of(spec.alpha / (1.0 - spec.alpha)), &h0)?;
            (closed, solve_dense(&s, &t)?)
        }
        Variant::JkNet => {
            let ab = ops.a_hat.spmm(&b)?;
            let closed = resolvent(&a_hat, spec.beta)?.matmul(&ab)?;
            let truncated = build_propagation_with(spec, ops, None, &exact_build)?.apply(&b)?;
            truncation_gap = Some(truncated.max_abs_diff(&closed).as_f64());
            (closed, solve_dense(&shift(&l_hat, spec.beta), &ab)?)
        }
        Variant::Dagnn => {
            let closed = resolvent(&a_hat, spec.beta)?.matmul(&h0)?;
            let truncated = build_propagation_with(spec, ops, source, &exact_build)?.apply(&b)?;
            truncation_gap = Some(truncated.max_abs_diff(&closed).as_f64());
            (closed, solve_dense(&shift(&l_hat, spec.beta), &h0)?)
        }
        Variant::GnnHf | Variant::GnnLf => {
            let (lambda, mu) = spec.rational_parameters().expect("rational variant");
            let base = if spec.variant == Variant::GnnHf { &l_hat } else { &a_hat };
            let closed = build_propagation_with(spec, ops, None, &exact_build)?.apply(&b)?;
            let t = shift(base, mu).matmul(&b)?;
            (closed, solve_dense(&shift(base, lambda), &t)?)
        }
        Variant::Tsgcn | Variant::TsgcnS | Variant::TsgcnT => {
            let full = spec.clone().with_rank(n);
            let closed = build_propagation_with(&full, ops, None, &exact_build)?.apply(&b)?;
            let (a, bw) = spec.tsgcn_weights();
            let joint = ops.l_topo.add_scaled(T::of(a), &ops.l_sem, T::of(bw))?.to_dense();
            (closed, solve_dense(&shift(&joint, 1.0), &b)?)
        }
    };
    let closed = match opts.fault {
        Some(eps) => closed.scale(T::of(1.0 + eps)),
        None => closed,
    };
    let discrepancy = closed.max_abs_diff(&stationary).as_f64();
    Ok(StationarityReport {
        variant: spec.variant,
        label: spec.label(),
        seed,
        n_nodes: n,
        discrepancy,
        tolerance: opts.tolerance,
        passed: discrepancy <= opts.tolerance,
        truncation_gap,
    })
}

/// [`verify_stationarity`] on the graph from [`random_instance`]`(seed)`.
pub fn verify_random(spec: &RegularizerSpec, seed: u64, opts: &VerifyOptions) -> Result<StationarityReport> {
    let (adjacency, features) = random_instance(seed)?;
    let ops = GraphOperators::build(&adjacency, &features, 3)?;
    verify_stationarity(spec, &ops, seed, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_variant_passes_on_a_few_seeds() {
        for v in Variant::FRAMEWORK {
            for seed in 0..20 {
                let r = verify_random(&RegularizerSpec::new(v).with_rank(4), seed, &VerifyOptions::default()).unwrap();
                println!("{:8} seed {seed:2} n {:2} disc {:.2e} trunc {:?}", r.label, r.n_nodes, r.discrepancy, r.truncation_gap);
                assert!(r.passed, "{r:?}");
            }
        }
    }

    #[test]
    fn injected_fault_is_caught() {
        let opts = VerifyOptions {
            fault: Some(1e-3),
            ..Default::default()
        };
        let r = verify_random(&RegularizerSpec::new(Variant::Gcn), 0, &opts).unwrap();
        assert!(!r.passed);
        assert!(matches!(r.ensure_passed(), Err(Error::TheoremMismatch { .. })));
    }
}
