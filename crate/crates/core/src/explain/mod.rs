//! Local explanations: Even Descent sampling around an instance and a
//! weighted surrogate tree over its edge features.

mod descent;
mod sampler;
mod surrogate;
mod tree;

pub use descent::{
    even_descent, gradient_fd, step_scale, tau0, update_ps, ResolvedSampler, SamplerConfig, Scorer, Tau0, Trajectory,
};
pub use sampler::{even_sample, even_sample_n, PiecewiseDensity, CDF_GRID};
pub use surrogate::{
    fit_surrogate, theta_scale, trajectory_nu, write_trajectory_csv, EdgeImportance, ExplanationReport, GridCell,
    SurrogateConfig, TrajectoryRecord, REPORT_LABEL,
};
pub use tree::{SurrogateTree, TreeNode};
