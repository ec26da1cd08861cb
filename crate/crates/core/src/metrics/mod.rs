//! Binary classification and regression evaluation. Stressed (`1`) is the
//! positive class throughout.

mod classification;
mod regression;
mod roc;

pub use classification::{
    confusion, report, ClassificationReport, ConfusionMatrix, DegenerateFlags,
};
pub use regression::{regression_report, RegressionReport};
pub use roc::{roc, RocCurve};
