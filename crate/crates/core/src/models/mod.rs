//! Linear classifiers trained from scratch, plus the external-classifier boundary.

mod external;
mod linear;

pub use external::{
    predict_external, Endpoint, ExternalClassifier, HttpClassifier, SubprocessClassifier,
};
pub use linear::{
    fit_logreg, fit_svm, gradient_check, logreg_objective, svm_objective, train, train_logreg,
    train_svm, Gradient, LinearModel, ModelKind, Prediction, TrainConfig, TrainOutcome,
};
