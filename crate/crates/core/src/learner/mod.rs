mod auc;
mod cv;
mod dataset;
mod model;
mod select;
mod split;
mod svm;

pub use auc::roc_auc;
pub use cv::{
    cross_validate, nu_sweep, CvConfig, CvProbe, CvReport, FitStage, Method, NuSweepReport, SplitOutcome, StageTimings,
    SweepPoint,
};
pub use dataset::Dataset;
pub use model::GseModel;
pub use select::{f_statistic, f_statistic_select};
pub use split::{stratified_shuffle_splits, Split, SplitPlan};
pub use svm::{decision_values, dual_objective, smo_train, SvmModel, SvmParams};
