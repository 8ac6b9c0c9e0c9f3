//! Two-sample distances.

use crate::linalg::Vector;

fn mean_distance(a: &[Vector], b: &[Vector]) -> f64 {
    let mut total = 0.0;
    for x in a {
        for y in b {
            total += (x - y).norm();
        }
    }
    total / (a.len() * b.len()) as f64
}

/// `2 E‖X - Y‖ - E‖X - X'‖ - E‖Y - Y'‖` with V-statistic averages.
pub fn energy_distance(a: &[Vector], b: &[Vector]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "energy distance needs samples");
    2.0 * mean_distance(a, b) - mean_distance(a, a) - mean_distance(b, b)
}
