use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Propagation rules covered by the framework.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Gcn,
    Sgc,
    Appnp,
    #[serde(rename = "jknet")]
    JkNet,
    Dagnn,
    GnnLf,
    GnnHf,
    Tsgcn,
    TsgcnS,
    TsgcnT,
}

impl Variant {
    /// The eight rules with their own regularizer (ablations excluded).
    pub const FRAMEWORK: [Variant; 8] = [
        Variant::Gcn,
        Variant::Sgc,
        Variant::Appnp,
        Variant::JkNet,
        Variant::Dagnn,
        Variant::GnnLf,
        Variant::GnnHf,
        Variant::Tsgcn,
    ];

    pub const ALL: [Variant; 10] = [
        Variant::Gcn,
        Variant::Sgc,
        Variant::Appnp,
        Variant::JkNet,
        Variant::Dagnn,
        Variant::GnnLf,
        Variant::GnnHf,
        Variant::Tsgcn,
        Variant::TsgcnS,
        Variant::TsgcnT,
    ];

    /// Identifier used in configs and file names.
    pub fn key(self) -> &'static str {
        match self {
            Variant::Gcn => "gcn",
            Variant::Sgc => "sgc",
            Variant::Appnp => "appnp",
            Variant::JkNet => "jknet",
            Variant::Dagnn => "dagnn",
            Variant::GnnLf => "gnn_lf",
            Variant::GnnHf => "gnn_hf",
            Variant::Tsgcn => "tsgcn",
            Variant::TsgcnS => "tsgcn_s",
            Variant::TsgcnT => "tsgcn_t",
        }
    }

    /// Projection applied after every hidden layer. The output layer is always
    /// the simplex.
    pub fn hidden_set(self) -> ProjectiveSet {
        match self {
            Variant::Sgc | Variant::Appnp | Variant::JkNet | Variant::Dagnn => ProjectiveSet::Identity,
            _ => ProjectiveSet::NonNegative,
        }
    }

    /// Whether the rule carries a source term `H⁰`.
    pub fn needs_source(self) -> bool {
        matches!(self, Variant::Appnp | Variant::Dagnn)
    }

    pub fn is_tsgcn(self) -> bool {
        matches!(self, Variant::Tsgcn | Variant::TsgcnS | Variant::TsgcnT)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Variant::Gcn => "GCN",
            Variant::Sgc => "SGC",
            Variant::Appnp => "APPNP",
            Variant::JkNet => "JKNet",
            Variant::Dagnn => "DAGNN",
            Variant::GnnLf => "GNN-LF",
            Variant::GnnHf => "GNN-HF",
            Variant::Tsgcn => "tsGCN",
            Variant::TsgcnS => "tsGCN-s",
            Variant::TsgcnT => "tsGCN-t",
        };
        f.write_str(name)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Variant::ALL
            .into_iter()
            .find(|v| v.key().replace('_', "") == norm)
            .ok_or_else(|| Error::InvalidInput(format!("unknown variant `{s}`")))
    }
}

/// Constraint set whose projection realizes an activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectiveSet {
    /// `S`: identity activation.
    Identity,
    /// `S₊`: ReLU.
    NonNegative,
    /// `S_simplex`: row-wise softmax.
    Simplex,
}

/// A regularizer from the catalog plus its hyperparameters.
///
/// `alpha` and `beta` are read per variant: teleport probability for APPNP,
/// `β` of the resolvent for JKNet/DAGNN, the model parameters mapped to
/// `(λ, μ)` for GNN-LF/HF, and the topological/semantic weights for tsGCN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerSpec {
    pub variant: Variant,
    pub alpha: f64,
    pub beta: f64,
    /// Truncation order for JKNet/DAGNN, step count for APPNP.
    pub k_order: usize,
    /// Woodbury rank for the tsGCN family.
    pub rank: usize,
    /// tsGCN family: use the dense inverse instead of the low-rank path.
    #[serde(default)]
    pub exact_inverse: bool,
}

pub const DEFAULT_K_ORDER: usize = 10;

impl RegularizerSpec {
    /// Defaults per variant. For tsGCN these are the Cora settings with the
    /// rank left at 1; callers set it from the feature dimension.
    pub fn new(variant: Variant) -> Self {
        let (alpha, beta) = match variant {
            Variant::Gcn | Variant::Sgc => (0.0, 0.0),
            Variant::Appnp => (0.1, 0.0),
            Variant::JkNet | Variant::Dagnn => (0.0, 1.0),
            Variant::GnnLf | Variant::GnnHf => (0.5, 0.5),
            Variant::Tsgcn | Variant::TsgcnS | Variant::TsgcnT => (1.0, 0.2),
        };
        Self {
            variant,
            alpha,
            beta,
            k_order: DEFAULT_K_ORDER,
            rank: 1,
            exact_inverse: false,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_k_order(mut self, k: usize) -> Self {
        self.k_order = k;
        self
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = rank;
        self
    }

    pub fn with_exact_inverse(mut self, exact: bool) -> Self {
        self.exact_inverse = exact;
        self
    }

    /// Short label, e.g. `tsGCN(inv)` for the exact-inverse ablation.
    pub fn label(&self) -> String {
        if self.variant.is_tsgcn() && self.exact_inverse {
            format!("{}(inv)", self.variant)
        } else {
            self.variant.to_string()
        }
    }

    /// Projection per layer for a network of `n_layers` layers.
    pub fn projective_sets(&self, n_layers: usize) -> Vec<ProjectiveSet> {
        (0..n_layers)
            .map(|l| {
                if l + 1 == n_layers {
                    ProjectiveSet::Simplex
                } else {
                    self.variant.hidden_set()
                }
            })
            .collect()
    }

    /// Topological and semantic weights after applying the ablation switches.
    pub fn tsgcn_weights(&self) -> (f64, f64) {
        match self.variant {
            Variant::TsgcnS => (0.0, self.beta),
            Variant::TsgcnT => (self.alpha, 0.0),
            _ => (self.alpha, self.beta),
        }
    }

    /// `α_k = β^{k−1}/(β+1)^k` for `k = 1..=K`, returned at index `k`
    /// (index 0 holds 0).
    pub fn jknet_coefficients(&self) -> Vec<f64> {
        let b = self.beta;
        let mut c = vec![0.0; self.k_order + 1];
        let mut term = 1.0 / (b + 1.0);
        for ck in c.iter_mut().skip(1) {
            *ck = term;
            term *= b / (b + 1.0);
        }
        c
    }

    /// `γ_k = β^k/(β+1)^{k+1}` for `k = 0..=K`: the truncated expansion of
    /// `(I + βL̂)^{-1}`.
    pub fn dagnn_coefficients(&self) -> Vec<f64> {
        let b = self.beta;
        let mut c = vec![0.0; self.k_order + 1];
        let mut term = 1.0 / (b + 1.0);
        for ck in &mut c {
            *ck = term;
            term *= b / (b + 1.0);
        }
        c
    }

    /// `(λ, μ)` for the rational filters: GNN-HF on `L̂`, GNN-LF on `Â`.
    pub fn rational_parameters(&self) -> Option<(f64, f64)> {
        let (a, b) = (self.alpha, self.beta);
        match self.variant {
            Variant::GnnHf => Some((b + 1.0 / a - 1.0, b)),
            Variant::GnnLf => Some(((-a * b + 2.0 * a - 1.0) / (a * b - a + 1.0), 1.0 / b - 1.0)),
            _ => None,
        }
    }

    /// Checks every constraint, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(format!("{}: {m}", self.variant)));
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return bad(format!("non-finite hyperparameters ({}, {})", self.alpha, self.beta));
        }
        match self.variant {
            Variant::Gcn | Variant::Sgc => Ok(()),
            Variant::Appnp => {
                if !(0.0..1.0).contains(&self.alpha) {
                    return bad(format!("teleport alpha must lie in [0, 1), got {}", self.alpha));
                }
                if self.k_order == 0 {
                    return bad("needs at least one propagation step".into());
                }
                Ok(())
            }
            Variant::JkNet | Variant::Dagnn => {
                if self.k_order == 0 {
                    return bad("k_order must be at least 1".into());
                }
                if self.beta < 0.0 {
                    return bad(format!("beta must be nonnegative, got {}", self.beta));
                }
                Ok(())
            }
            Variant::GnnLf | Variant::GnnHf => {
                let (lambda, mu) = self.rational_parameters().expect("rational variant");
                let (lo, hi_closed, what) = if self.variant == Variant::GnnHf {
                    // I + cL̂ is PD for every graph iff c ≥ −1/2 (spectrum of L̂ in [0, 2)).
                    (-0.5, f64::INFINITY, "I + c·L̂")
                } else {
                    // I + cÂ is PD for every graph iff −1 < c ≤ 1 (spectrum of Â in (−1, 1]).
                    (-1.0, 1.0, "I + c·Â")
                };
                let ok = |c: f64| {
                    c.is_finite()
                        && if self.variant == Variant::GnnHf {
                            c >= lo
                        } else {
                            c > lo && c <= hi_closed
                        }
                };
                if !ok(lambda) {
                    return Err(Error::Parameter {
                        lambda,
                        mu,
                        message: format!(
                            "{} from (alpha, beta) = ({}, {}) does not keep {what} positive definite",
                            self.variant, self.alpha, self.beta
                        ),
                    });
                }
                Ok(())
            }
            Variant::Tsgcn | Variant::TsgcnS | Variant::TsgcnT => {
                if self.alpha < 0.0 || self.beta < 0.0 {
                    return bad(format!("weights must be nonnegative, got ({}, {})", self.alpha, self.beta));
                }
                if !self.exact_inverse && self.rank == 0 {
                    return bad("rank must be at least 1".into());
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.key().parse::<Variant>().unwrap(), v);
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert!("gat".parse::<Variant>().is_err());
    }

    #[test]
    fn jknet_first_coefficient() {
        let c = RegularizerSpec::new(Variant::JkNet).with_beta(0.5).with_k_order(1).jknet_coefficients();
        assert_eq!(c, vec![0.0, 1.0 / 1.5]);
    }

    #[test]
    fn dagnn_coefficients_shift_jknet() {
        let s = RegularizerSpec::new(Variant::Dagnn).with_beta(0.7).with_k_order(6);
        let (j, d) = (s.jknet_coefficients(), s.dagnn_coefficients());
        for k in 0..6 {
            assert!((d[k] - j[k + 1]).abs() < 1e-15);
        }
    }

    #[test]
    fn hf_and_lf_maps() {
        let hf = RegularizerSpec::new(Variant::GnnHf).with_alpha(0.5).with_beta(0.5);
        assert_eq!(hf.rational_parameters(), Some((1.5, 0.5)));
        let lf = RegularizerSpec::new(Variant::GnnLf).with_alpha(0.5).with_beta(0.5);
        let (l, m) = lf.rational_parameters().unwrap();
        assert!((l + 1.0 / 3.0).abs() < 1e-15 && (m - 1.0).abs() < 1e-15);
        assert!(hf.validate().is_ok() && lf.validate().is_ok());
        let bad = RegularizerSpec::new(Variant::GnnLf).with_alpha(0.9).with_beta(0.2);
        assert!(matches!(bad.validate(), Err(Error::Parameter { .. })));
        let bad = RegularizerSpec::new(Variant::GnnHf).with_alpha(-1.0).with_beta(0.2);
        assert!(matches!(bad.validate(), Err(Error::Parameter { .. })));
    }

    #[test]
    fn appnp_alpha_range() {
        assert!(RegularizerSpec::new(Variant::Appnp).with_alpha(1.0).validate().is_err());
        assert!(RegularizerSpec::new(Variant::Appnp).with_alpha(0.0).validate().is_ok());
    }

    #[test]
    fn projective_sets_end_on_simplex() {
        let s = RegularizerSpec::new(Variant::Sgc).projective_sets(3);
        assert_eq!(s, vec![ProjectiveSet::Identity, ProjectiveSet::Identity, ProjectiveSet::Simplex]);
        let g = RegularizerSpec::new(Variant::Gcn).projective_sets(2);
        assert_eq!(g, vec![ProjectiveSet::NonNegative, ProjectiveSet::Simplex]);
    }
}
