use crate::eval::EvalError;
use crate::metrics::{Direction, Metric};
use crate::scalar::Real;

/// Per-method win rate over every `(other method, example, metric)`
/// comparison where both values exist. A win counts 1, a tie 0.5.
///
/// `values` is indexed `[method][example][metric]`. Returns the overall rate
/// and the rate per metric; `None` where a method had no comparisons.
#[allow(clippy::type_complexity)]
pub fn win_rate<T: Real>(
    values: &[Vec<Vec<Option<T>>>],
    directions: &[Direction],
) -> Result<(Vec<Option<T>>, Vec<Vec<Option<T>>>), EvalError> {
    let m = values.len();
    if m < 2 {
        return Err(EvalError::TooFewMethods(m));
    }
    let n_ex = values[0].len();
    let k = directions.len();
    for (i, row) in values.iter().enumerate() {
        if row.len() != n_ex || row.iter().any(|v| v.len() != k) {
            return Err(EvalError::Ragged(format!("method {i} does not have {n_ex} examples x {k} metrics")));
        }
    }
    let half = T::of(0.5);
    let mut overall = Vec::with_capacity(m);
    let mut per_metric = Vec::with_capacity(m);
    for a in 0..m {
        let (mut won, mut total) = (T::zero(), 0usize);
        let mut metric_rates = Vec::with_capacity(k);
        for (j, dir) in directions.iter().enumerate() {
            let (mut mw, mut mt) = (T::zero(), 0usize);
            for b in (0..m).filter(|&b| b != a) {
                for e in 0..n_ex {
                    let (Some(x), Some(y)) = (values[a][e][j], values[b][e][j]) else { continue };
                    let better = match dir {
                        Direction::LowerIsBetter => x < y,
                        Direction::HigherIsBetter => x > y,
                    };
                    if better {
                        mw = mw + T::one();
                    } else if x == y {
                        mw = mw + half;
                    }
                    mt += 1;
                }
            }
            metric_rates.push((mt > 0).then(|| mw / T::of_usize(mt)));
            won = won + mw;
            total += mt;
        }
        overall.push((total > 0).then(|| won / T::of_usize(total)));
        per_metric.push(metric_rates);
    }
    Ok((overall, per_metric))
}

/// Win rates over the eight risk metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct WinRateTable<T> {
    pub methods: Vec<String>,
    pub overall: Vec<Option<T>>,
    /// `[method][metric]` in [`Metric::ALL`] order.
    pub per_metric: Vec<Vec<Option<T>>>,
}

impl<T: Real> WinRateTable<T> {
    pub fn compute(methods: &[String], values: &[Vec<Vec<Option<T>>>]) -> Result<Self, EvalError> {
        let dirs: Vec<Direction> = Metric::ALL.iter().map(|m| m.direction()).collect();
        let (overall, per_metric) = win_rate(values, &dirs)?;
        Ok(Self { methods: methods.to_vec(), overall, per_metric })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_and_ties() {
        let a = vec![vec![Some(0.0f64)], vec![Some(1.0)]];
        let b = vec![vec![Some(1.0f64)], vec![Some(2.0)]];
        let (o, _) = win_rate(&[a.clone(), b], &[Direction::LowerIsBetter]).unwrap();
        assert_eq!(o, vec![Some(1.0), Some(0.0)]);
        let (o, _) = win_rate(&[a.clone(), a.clone(), a], &[Direction::LowerIsBetter]).unwrap();
        assert_eq!(o, vec![Some(0.5); 3]);
    }

    #[test]
    fn higher_is_better_and_missing() {
        let a = vec![vec![Some(3.0f64)], vec![None]];
        let b = vec![vec![Some(1.0f64)], vec![Some(9.0)]];
        let (o, _) = win_rate(&[a, b], &[Direction::HigherIsBetter]).unwrap();
        assert_eq!(o, vec![Some(1.0), Some(0.0)]);
    }

    #[test]
    fn single_method_is_an_error() {
        assert!(matches!(win_rate::<f64>(&[vec![]], &[]), Err(EvalError::TooFewMethods(1))));
    }
}
