//! Statistical battery: one-tailed Wilcoxon signed-rank test, step-down minP
//! multiple-testing adjustment, stratified variety-sampling CIs, and the
//! log-space normal tail they rely on.

pub mod minp;
pub mod normal;
pub mod rng;
pub mod stratified;
pub mod wilcoxon;

pub use minp::{adjust_sd_minp, FamilyTest, MinPError};
pub use normal::log_phi;
pub use stratified::{
    stratified_ci, stratified_p_values, StratifiedCI, StratifiedDraws, StratifiedError,
};
pub use wilcoxon::{
    wilcoxon_one_tailed_less, wilcoxon_one_tailed_less_with, Method, TestResult, WilcoxonError,
    ZeroPolicy,
};
