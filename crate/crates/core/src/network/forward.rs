use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::propagation::{ProjectiveSet, PropagationOperator};
use crate::random::Rng;
use crate::scalar::Scalar;

use super::model::ModelParams;
use super::projection::{log_softmax_row, project};

/// Node-feature matrix as the first layer sees it.
pub trait InputMatrix<T: Scalar> {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    /// `X · Θ`.
    fn times(&self, theta: &DenseMatrix<T>) -> Result<DenseMatrix<T>>;
    /// `Xᵀ · G`.
    fn t_times(&self, g: &DenseMatrix<T>) -> Result<DenseMatrix<T>>;
}

impl<T: Scalar> InputMatrix<T> for DenseMatrix<T> {
    fn n_rows(&self) -> usize {
        DenseMatrix::n_rows(self)
    }
    fn n_cols(&self) -> usize {
        DenseMatrix::n_cols(self)
    }
    fn times(&self, theta: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.matmul(theta)
    }
    fn t_times(&self, g: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.t_matmul(g)
    }
}

impl<T: Scalar> InputMatrix<T> for SparseMatrix<T> {
    fn n_rows(&self) -> usize {
        SparseMatrix::n_rows(self)
    }
    fn n_cols(&self) -> usize {
        SparseMatrix::n_cols(self)
    }
    fn times(&self, theta: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.spmm(theta)
    }
    fn t_times(&self, g: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.t_spmm(g)
    }
}

/// Inverted dropout on hidden-layer inputs during training.
pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut Rng,
}

/// Intermediates of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T: Scalar> {
    pub sets: Vec<ProjectiveSet>,
    /// Propagated pre-activations `P^{(l)} = prop(H^{(l−1)}Θ^{(l)})`.
    pub pre_activations: Vec<DenseMatrix<T>>,
    /// `H^{(l)} = project(P^{(l)})`.
    pub activations: Vec<DenseMatrix<T>>,
    /// Dropout scale masks (`0` or `1/(1−p)`) applied to `H^{(l−1)}`, `l ≥ 2`.
    pub masks: Vec<Option<DenseMatrix<T>>>,
}

impl<T: Scalar> ForwardTrace<T> {
    /// Class probabilities `H^{(L)}`.
    pub fn output(&self) -> &DenseMatrix<T> {
        self.activations.last().expect("at least one layer")
    }

    pub fn logits(&self) -> &DenseMatrix<T> {
        self.pre_activations.last().expect("at least one layer")
    }

    pub fn predictions(&self) -> Vec<usize> {
        self.logits().argmax_rows()
    }
}

fn numeric(layer: usize, e: Error) -> Error {
    match e {
        Error::NonFinite { context } => Error::Numeric {
            layer,
            message: format!("non-finite value in {context}"),
        },
        other => other,
    }
}

/// `H^{(l)} = project_l(prop(H^{(l−1)}Θ^{(l)}))` for every layer.
pub fn forward<T: Scalar, X: InputMatrix<T> + ?Sized>(
    params: &ModelParams<T>,
    prop: &PropagationOperator<T>,
    x: &X,
    sets: &[ProjectiveSet],
    mut dropout: Option<Dropout<'_>>,
) -> Result<ForwardTrace<T>> {
    if sets.len() != params.n_layers() {
        return Err(Error::shape("forward", format!("{} projective sets", params.n_layers()), sets.len()));
    }
    if x.n_cols() != params.thetas[0].n_rows() || x.n_rows() != prop.n_nodes() {
        return Err(Error::shape(
            "forward",
            format!("{} x {} input", prop.n_nodes(), params.thetas[0].n_rows()),
            format!("{} x {}", x.n_rows(), x.n_cols()),
        ));
    }
    let mut trace = ForwardTrace {
        sets: sets.to_vec(),
        pre_activations: Vec::with_capacity(sets.len()),
        activations: Vec::with_capacity(sets.len()),
        masks: Vec::with_capacity(sets.len()),
    };
    for (l, theta) in params.thetas.iter().enumerate() {
        let layer = l + 1;
        let z = if l == 0 {
            trace.masks.push(None);
            x.times(theta)
        } else {
            let h = &trace.activations[l - 1];
            match dropout.as_mut().filter(|d| d.rate > 0.0) {
                Some(d) => {
                    let keep = T::of(1.0 / (1.0 - d.rate));
                    let mask = DenseMatrix::from_fn(h.n_rows(), h.n_cols(), |_, _| {
                        if d.rng.random::<f64>() < d.rate {
                            T::zero()
                        } else {
                            keep
                        }
                    });
                    let dropped = h.hadamard(&mask)?;
                    trace.masks.push(Some(mask));
                    dropped.matmul(theta)
                }
                None => {
                    trace.masks.push(None);
                    h.matmul(theta)
                }
            }
        }
        .map_err(|e| numeric(layer, e))?;
        let p = prop.layer_map(&z).map_err(|e| numeric(layer, e))?;
        let h = project(sets[l], &p);
        h.ensure_finite("activation").map_err(|e| numeric(layer, e))?;
        trace.pre_activations.push(p);
        trace.activations.push(h);
    }
    Ok(trace)
}

/// Mean cross-entropy over `train_idx` plus `(weight_decay/2)·Σ‖Θ‖²`, and
/// its exact gradient with respect to every `Θ^{(l)}`.
pub fn loss_and_grads<T: Scalar, X: InputMatrix<T> + ?Sized>(
    trace: &ForwardTrace<T>,
    params: &ModelParams<T>,
    prop: &PropagationOperator<T>,
    x: &X,
    labels: &[usize],
    train_idx: &[usize],
    weight_decay: f64,
) -> Result<(T, Vec<DenseMatrix<T>>)> {
    if train_idx.is_empty() {
        return Err(Error::EmptyIndexSet("training"));
    }
    let n_layers = params.n_layers();
    if trace.activations.len() != n_layers || trace.sets[n_layers - 1] != ProjectiveSet::Simplex {
        return Err(Error::InvalidInput("trace does not match the model or lacks a simplex output".into()));
    }
    let logits = trace.logits();
    let n_classes = logits.n_cols();
    let inv_m = T::one() / T::of_usize(train_idx.len());

    let mut ce = T::zero();
    let mut grad = DenseMatrix::zeros(logits.n_rows(), n_classes);
    for &i in train_idx {
        let y = labels[i];
        if y >= n_classes {
            return Err(Error::InvalidInput(format!("label {y} of node {i} exceeds {n_classes} classes")));
        }
        let log_p = log_softmax_row(logits.row(i));
        ce -= log_p[y];
        let g = grad.row_mut(i);
        for (c, lp) in log_p.into_iter().enumerate() {
            g[c] += lp.exp() * inv_m;
        }
        g[y] -= inv_m;
    }
    let wd = T::of(weight_decay);
    let loss = ce * inv_m + T::of(0.5) * wd * params.squared_norm();

    let mut grads = vec![DenseMatrix::zeros(0, 0); n_layers];
    // `grad` holds dLoss/dP^{(l)} at the top of each iteration.
    for l in (0..n_layers).rev() {
        let gz = prop.layer_map_transpose(&grad)?;
        let mut g_theta = if l == 0 {
            x.t_times(&gz)?
        } else {
            let h = &trace.activations[l - 1];
            match &trace.masks[l] {
                Some(mask) => h.hadamard(mask)?.t_matmul(&gz)?,
                None => h.t_matmul(&gz)?,
            }
        };
        g_theta.axpy(wd, &params.thetas[l])?;
        grads[l] = g_theta;
        if l == 0 {
            break;
        }
        let mut gh = gz.matmul_t(&params.thetas[l])?;
        if let Some(mask) = &trace.masks[l] {
            gh = gh.hadamard(mask)?;
        }
        grad = match trace.sets[l - 1] {
            ProjectiveSet::Identity => gh,
            ProjectiveSet::NonNegative => {
                let p = &trace.pre_activations[l - 1];
                let mut out = gh;
                for (g, &pv) in out.values_mut().iter_mut().zip(p.values()) {
                    if pv <= T::zero() {
                        *g = T::zero();
                    }
                }
                out
            }
            ProjectiveSet::Simplex => {
                return Err(Error::InvalidInput("simplex projection is only supported on the output layer".into()))
            }
        };
    }
    if !loss.is_finite() {
        return Err(Error::Numeric {
            layer: n_layers,
            message: "loss is not finite".into(),
        });
    }
    Ok((loss, grads))
}
