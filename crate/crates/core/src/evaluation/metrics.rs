use crate::error::{Error, Result};

fn check(truth: &[f64], pred: &[f64]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::Evaluation("empty metric input".into()));
    }
    if truth.len() != pred.len() {
        return Err(Error::Evaluation(format!(
            "{} truths but {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Coefficient of determination `1 - SS_res / SS_tot`. `Ok(None)` when the
/// truth is constant and the ratio is undefined.
pub fn r2(truth: &[f64], pred: &[f64]) -> Result<Option<f64>> {
    check(truth, pred)?;
    let m = mean(truth);
    let ss_tot: f64 = truth.iter().map(|t| (t - m) * (t - m)).sum();
    if ss_tot == 0.0 {
        return Ok(None);
    }
    let ss_res: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum();
    Ok(Some(1.0 - ss_res / ss_tot))
}

/// RMSE divided by the mean truth. `Ok(None)` when that mean is zero.
pub fn relative_rmse(truth: &[f64], pred: &[f64]) -> Result<Option<f64>> {
    check(truth, pred)?;
    let m = mean(truth);
    if m == 0.0 {
        return Ok(None);
    }
    let mse = truth.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum::<f64>() / truth.len() as f64;
    Ok(Some(mse.sqrt() / m))
}

/// Population mean and standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r2_examples() {
        let t = [0.1, 0.5, 0.3];
        assert_eq!(r2(&t, &t).unwrap(), Some(1.0));
        assert_eq!(r2(&t, &[0.3; 3]).unwrap(), Some(0.0));
        assert_eq!(r2(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), Some(-3.0));
        assert_eq!(r2(&[0.2, 0.2], &[0.1, 0.3]).unwrap(), None);
        assert!(r2(&[0.2], &[0.1, 0.3]).is_err());
        assert!(r2(&[], &[]).is_err());
    }

    #[test]
    fn relative_rmse_examples() {
        let t = [0.2, 0.4];
        assert_eq!(relative_rmse(&t, &t).unwrap(), Some(0.0));
        let v = relative_rmse(&t, &[0.3, 0.3]).unwrap().unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(relative_rmse(&[0.0, 0.0], &[0.1, 0.0]).unwrap(), None);
    }

    #[test]
    fn relative_rmse_is_scale_free() {
        let t = [0.1, 0.3, 0.2, 0.7];
        let p = [0.2, 0.2, 0.25, 0.5];
        let a = relative_rmse(&t, &p).unwrap().unwrap();
        let ts: Vec<f64> = t.iter().map(|v| v * 0.37).collect();
        let ps: Vec<f64> = p.iter().map(|v| v * 0.37).collect();
        let b = relative_rmse(&ts, &ps).unwrap().unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn mean_predictor_of_the_test_set_scores_zero() {
        let t = [0.13, 0.52, 0.08, 0.33, 0.41];
        let m = t.iter().sum::<f64>() / 5.0;
        assert!(r2(&t, &[m; 5]).unwrap().unwrap().abs() < 1e-12);
        let (_, sd) = mean_std(&t);
        let rel = relative_rmse(&t, &[m; 5]).unwrap().unwrap();
        assert!((rel - sd / m).abs() < 1e-12);
    }
}
