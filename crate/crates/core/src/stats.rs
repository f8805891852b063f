//! Weighted descriptive statistics used for starting values.

pub fn weighted_mean(x: &[f64], w: &[f64]) -> f64 {
    let sw: f64 = w.iter().sum();
    x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw
}

/// Weighted variance about `centre`, normalized by the total weight.
pub fn weighted_variance(x: &[f64], w: &[f64], centre: f64) -> f64 {
    let sw: f64 = w.iter().sum();
    x.iter().zip(w).map(|(a, b)| b * (a - centre).powi(2)).sum::<f64>() / sw
}

/// Lower weighted median; averages the two middle values when the weight
/// splits exactly in half.
pub fn weighted_median(x: &[f64], w: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..x.len()).filter(|&i| w[i] > 0.0).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let total: f64 = idx.iter().map(|&i| w[i]).sum();
    let mut acc = 0.0;
    for (pos, &i) in idx.iter().enumerate() {
        acc += w[i];
        if (acc - 0.5 * total).abs() <= 1e-12 * total {
            return match idx.get(pos + 1) {
                Some(&j) => 0.5 * (x[i] + x[j]),
                None => x[i],
            };
        }
        if acc > 0.5 * total {
            return x[i];
        }
    }
    idx.last().map_or(f64::NAN, |&i| x[i])
}

pub fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_and_even() {
        assert_eq!(weighted_median(&[3.0, 1.0, 2.0], &uniform_weights(3)), 2.0);
        assert_eq!(weighted_median(&[4.0, 1.0, 2.0, 3.0], &uniform_weights(4)), 2.5);
    }

    #[test]
    fn mean_and_variance() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let w = uniform_weights(4);
        assert_eq!(weighted_mean(&x, &w), 2.5);
        assert_eq!(weighted_variance(&x, &w, 2.5), 1.25);
    }
}
