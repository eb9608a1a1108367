//! Sparse combination of region EBLUPs into one predictor by the lasso or
//! elastic net, with cross-validated choice of the penalty.

mod design;
mod io;
mod lasso;
mod path;

pub use design::{assemble_design, DesignBundle};
pub use io::{importance_scores, load_model, save_model, write_importance, Importance};
pub use lasso::{
    fit_lasso, fit_lasso_traced, kkt_violation, lambda_max, predict_combined, soft_threshold,
    CombinedModel,
};
pub use path::{lambda_grid, lambda_path, PathReport};
