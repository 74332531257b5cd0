use crate::error::{Error, Result};

fn check(actual: &[f64], pred: &[f64]) -> Result<()> {
    if actual.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: pred.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidArgument("metrics need at least one observation".into()));
    }
    Ok(())
}

pub fn rmse(actual: &[f64], pred: &[f64]) -> Result<f64> {
    check(actual, pred)?;
    let ss: f64 = actual.iter().zip(pred).map(|(a, p)| (a - p).powi(2)).sum();
    Ok((ss / actual.len() as f64).sqrt())
}

/// Symmetric MAPE in percent; a term with `a = p = 0` contributes 0.
pub fn smape(actual: &[f64], pred: &[f64]) -> Result<f64> {
    check(actual, pred)?;
    let s: f64 = actual
        .iter()
        .zip(pred)
        .map(|(a, p)| {
            let den = (a.abs() + p.abs()) / 2.0;
            if den == 0.0 {
                0.0
            } else {
                (a - p).abs() / den
            }
        })
        .sum();
    Ok(100.0 * s / actual.len() as f64)
}

/// `RMSE / (RMS(actual) + RMS(pred))`; 0 when both series are identically zero.
pub fn theil_u(actual: &[f64], pred: &[f64]) -> Result<f64> {
    let num = rmse(actual, pred)?;
    let n = actual.len() as f64;
    let ra = (actual.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
    let rp = (pred.iter().map(|p| p * p).sum::<f64>() / n).sqrt();
    if ra + rp == 0.0 {
        return Ok(0.0);
    }
    Ok(num / (ra + rp))
}

/// Median of `|a_t − p_t| / |a_t − a_{t−1}|` over `t ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mdrae {
    pub value: f64,
    /// Terms dropped because the naive denominator was zero.
    pub skipped: usize,
}

pub fn mdrae_detail(actual: &[f64], pred: &[f64]) -> Result<Mdrae> {
    check(actual, pred)?;
    let mut ratios: Vec<f64> = Vec::with_capacity(actual.len());
    let mut skipped = 0;
    for t in 1..actual.len() {
        let den = (actual[t] - actual[t - 1]).abs();
        if den == 0.0 {
            skipped += 1;
        } else {
            ratios.push((actual[t] - pred[t]).abs() / den);
        }
    }
    if ratios.is_empty() {
        return Err(Error::DegenerateBaseline);
    }
    ratios.sort_by(f64::total_cmp);
    let m = ratios.len();
    let value = if m % 2 == 1 {
        ratios[m / 2]
    } else {
        (ratios[m / 2 - 1] + ratios[m / 2]) / 2.0
    };
    Ok(Mdrae { value, skipped })
}

pub fn mdrae(actual: &[f64], pred: &[f64]) -> Result<f64> {
    mdrae_detail(actual, pred).map(|m| m.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_values() {
        assert!((rmse(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 2.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(smape(&[100.0], &[0.0]).unwrap(), 200.0);
        assert_eq!(theil_u(&[1.0, -2.0, 3.0], &[0.0; 3]).unwrap(), 1.0);
        let a = [1.0, 3.0, 2.0, 5.0, 4.0];
        let naive = [0.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(mdrae(&a, &naive).unwrap(), 1.0);
    }

    #[test]
    fn perfect_forecast_is_zero() {
        let a = [1.0, 2.5, -3.0, 4.0];
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_eq!(smape(&a, &a).unwrap(), 0.0);
        assert_eq!(theil_u(&a, &a).unwrap(), 0.0);
        assert_eq!(mdrae(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(
            mdrae(&[2.0, 2.0, 2.0], &[1.0; 3]),
            Err(Error::DegenerateBaseline)
        ));
        let m = mdrae_detail(&[1.0, 1.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!((m.value, m.skipped), (1.5, 1));
    }

    #[test]
    fn scale_behaviour() {
        let a = [1.0, 4.0, 2.0, 7.0, 3.0];
        let p = [1.5, 3.0, 2.5, 6.0, 4.5];
        let c = -3.7;
        let sa: Vec<f64> = a.iter().map(|v| v * c).collect();
        let sp: Vec<f64> = p.iter().map(|v| v * c).collect();
        assert!((rmse(&sa, &sp).unwrap() - c.abs() * rmse(&a, &p).unwrap()).abs() < 1e-12);
        assert!((mdrae(&sa, &sp).unwrap() - mdrae(&a, &p).unwrap()).abs() < 1e-12);
        assert!((theil_u(&sa, &sp).unwrap() - theil_u(&a, &p).unwrap()).abs() < 1e-12);
    }
}
