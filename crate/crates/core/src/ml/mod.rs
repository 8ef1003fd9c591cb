//! Maximum-likelihood engine.

pub mod fit;
pub mod likelihood;
pub mod optimize;
pub mod probit;

pub use fit::{delta_var_alpha, fit_ml, FitError, MlFit};
pub use likelihood::{
    cluster_loglik_crossed, cluster_loglik_nested, total_loglik, Cluster, ClusterSet,
    LikelihoodError, LikelihoodModel, Pattern, Quadrature,
};
