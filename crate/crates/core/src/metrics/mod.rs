//! Evaluation metrics.

pub mod detect;
pub mod ocr;
pub mod seq;
pub mod table;
pub mod ted;

/// Mean whose value does not depend on input order: values are summed in
/// sorted order. Empty input gives 0.
pub fn order_independent_mean(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}
