//! Binary cross-entropy over sigmoid outputs.

use crate::error::ModelError;

/// Probabilities are clamped into [ε, 1−ε] before the logs so saturated
/// outputs cannot produce infinities.
pub const BCE_EPS: f64 = 1e-7;

/// Mean negative log-likelihood of binary labels.
pub fn bce_loss(p: &[f64], y: &[u8]) -> Result<f64, ModelError> {
    bce_loss_weighted(p, y, 1.0)
}

/// BCE with the positive (unsafe) class scaled by `pos_weight`.
pub fn bce_loss_weighted(p: &[f64], y: &[u8], pos_weight: f64) -> Result<f64, ModelError> {
    if p.len() != y.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} probabilities for {} labels",
            p.len(),
            y.len()
        )));
    }
    if p.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&pi, &yi)| sample_loss(pi, yi, pos_weight))
        .sum();
    Ok(total / p.len() as f64)
}

/// Loss of a single sample.
pub fn sample_loss(p: f64, y: u8, pos_weight: f64) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    match y {
        1 => -pos_weight * p.ln(),
        _ => -(1.0 - p).ln(),
    }
}

/// ∂loss/∂z for one sample, where p = σ(z): the well-known `p − y`,
/// scaled by the class weight for positives.
pub fn sample_dz(p: f64, y: u8, pos_weight: f64) -> f64 {
    match y {
        1 => pos_weight * (p - 1.0),
        _ => p,
    }
}

/// ∂loss/∂p for one sample (before the sigmoid chain rule); used only to
/// validate the analytic `sample_dz` in tests.
pub fn sample_dp(p: f64, y: u8) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    match y {
        1 => -1.0 / p,
        _ => 1.0 / (1.0 - p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_point_is_ln_two() {
        let l = bce_loss(&[0.5], &[1]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
        let l = bce_loss(&[0.5, 0.5], &[1, 0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_answer_has_small_loss() {
        let l = bce_loss(&[0.9], &[1]).unwrap();
        assert!((l - 0.10536051565782628).abs() < 1e-12);
    }

    #[test]
    fn loss_is_nonnegative_and_clamped() {
        assert!(bce_loss(&[0.0], &[0]).unwrap() >= 0.0);
        assert!(bce_loss(&[1.0], &[1]).unwrap() >= 0.0);
        assert!(bce_loss(&[0.0], &[1]).unwrap().is_finite());
        assert!(bce_loss(&[1.0], &[0]).unwrap().is_finite());
    }

    #[test]
    fn gradient_wrt_p_at_half() {
        assert_eq!(sample_dp(0.5, 1), -2.0);
        assert_eq!(sample_dp(0.5, 0), 2.0);
    }

    #[test]
    fn dz_matches_dp_through_sigmoid_derivative() {
        // dz = dp · p(1−p); check at a few points.
        for &(p, y) in &[(0.3, 1u8), (0.7, 0u8), (0.5, 1u8)] {
            let via_chain = sample_dp(p, y) * p * (1.0 - p);
            assert!((sample_dz(p, y, 1.0) - via_chain).abs() < 1e-12);
        }
    }

    #[test]
    fn positive_weight_scales_only_positives() {
        let unweighted = sample_loss(0.4, 1, 1.0);
        assert!((sample_loss(0.4, 1, 2.5) - 2.5 * unweighted).abs() < 1e-12);
        assert_eq!(sample_loss(0.4, 0, 2.5), sample_loss(0.4, 0, 1.0));
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(bce_loss(&[0.5], &[1, 0]).is_err());
        assert!(bce_loss(&[], &[]).is_err());
    }
}
