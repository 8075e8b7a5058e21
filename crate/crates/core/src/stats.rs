//! Small order-statistics helpers shared by the analysis modules.

/// Linear-interpolation percentile (`q` in `[0, 100]`) of an ascending slice.
/// Returns `None` for an empty slice.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

pub fn sorted(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn percentile(values: impl IntoIterator<Item = f64>, q: f64) -> Option<f64> {
    percentile_sorted(&sorted(values), q)
}

/// Sorted multiset supporting incremental inserts and percentile queries.
#[derive(Debug, Clone, Default)]
pub struct RunningPercentile {
    values: Vec<f64>,
}

impl RunningPercentile {
    pub fn insert(&mut self, v: f64) {
        let at = self.values.partition_point(|x| *x <= v);
        self.values.insert(at, v);
    }

    pub fn get(&self, q: f64) -> Option<f64> {
        percentile_sorted(&self.values, q)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_between_ranks() {
        let v = [10.0, 11.0, 12.0, 50.0, 51.0, 52.0, 150.0];
        assert_eq!(percentile_sorted(&v, 50.0), Some(50.0));
        assert!((percentile_sorted(&v, 10.0).unwrap() - 10.6).abs() < 1e-12);
        assert!((percentile_sorted(&v, 90.0).unwrap() - 91.2).abs() < 1e-9);
        assert_eq!(percentile_sorted(&[], 50.0), None);
    }

    #[test]
    fn running_matches_batch() {
        let data = [5.0, 1.0, 9.0, 3.0, 3.0, 7.0];
        let mut r = RunningPercentile::default();
        for (i, x) in data.iter().enumerate() {
            r.insert(*x);
            assert_eq!(r.get(20.0), percentile(data[..=i].iter().copied(), 20.0));
        }
    }
}
