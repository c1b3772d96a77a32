//! Refinement studies: errors, observed orders and Richardson extrapolation
//! for sequences computed on uniformly refined meshes (`h` halves per level).

use serde::Serialize;

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StudyRow<T> {
    pub level: u32,
    pub value: T,
    /// `|value − reference|` when a reference is known.
    pub error: Option<T>,
    /// `log2(e_{k−1} / e_k)`, or the Richardson ratio order without a reference.
    pub order: Option<T>,
}

/// Observed orders against per-level references, or from three consecutive
/// values when there are none. Differences at roundoff level give no order.
pub fn study_rows<T: Real>(levels: &[u32], values: &[T], exact: Option<&[T]>) -> Vec<StudyRow<T>> {
    let two = T::lit(2.0);
    let floor = |x: T| T::lit(64.0) * T::epsilon() * x.abs().max(T::min_positive_value());
    let order = |a: T, b: T, size: T| {
        if a > floor(size) && b > floor(size) {
            Some((a / b).log(two))
        } else {
            None
        }
    };
    (0..values.len())
        .map(|k| {
            let error = exact.map(|e| (values[k] - e[k]).abs());
            let ord = match exact {
                Some(e) if k >= 1 => order((values[k - 1] - e[k - 1]).abs(), (values[k] - e[k]).abs(), e[k]),
                None if k >= 2 => order(
                    (values[k - 1] - values[k - 2]).abs(),
                    (values[k] - values[k - 1]).abs(),
                    values[k],
                ),
                _ => None,
            };
            StudyRow {
                level: levels[k],
                value: values[k],
                error,
                order: ord,
            }
        })
        .collect()
}

/// Richardson extrapolation of the last two values with order `q`.
pub fn richardson<T: Real>(values: &[T], q: T) -> Option<T> {
    let n = values.len();
    if n < 2 || !(q > T::zero()) {
        return None;
    }
    let f = T::lit(2.0).powf(q);
    Some(values[n - 1] + (values[n - 1] - values[n - 2]) / (f - T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_sequence() {
        let exact = 3.0;
        let values: Vec<f64> = (0..4).map(|k| exact + 0.5 * 4f64.powi(-k)).collect();
        let rows = study_rows(&[0, 1, 2, 3], &values, Some(&[exact; 4]));
        assert!(rows[0].order.is_none());
        for r in &rows[1..] {
            assert!((r.order.unwrap() - 2.0).abs() < 1e-9);
        }
        let blind = study_rows(&[0, 1, 2, 3], &values, None);
        assert!((blind[3].order.unwrap() - 2.0).abs() < 1e-9);
        assert!((richardson(&values, 2.0).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn exact_sequence_has_no_order() {
        let rows = study_rows(&[0, 1], &[1.0, 1.0], Some(&[1.0, 1.0]));
        assert_eq!(rows[1].error, Some(0.0));
        assert!(rows[1].order.is_none());
        let noisy = study_rows(&[0, 1, 2], &[9.0, 9.0 + 1.8e-15, 9.0 - 1.8e-15], Some(&[9.0; 3]));
        assert!(noisy.iter().all(|r| r.order.is_none()));
    }
}
