use serde::Serialize;

use super::Series;
use crate::error::{Error, Result};
use crate::linalg::{mean, pop_variance, symmetric_eigen, Matrix};

/// Year-on-year percentage change `100·(s_t − s_{t−4})/s_{t−4}`.
pub fn yoy_growth(s: &Series) -> Result<Series> {
    if s.len() < 5 {
        return Err(Error::InsufficientHistory(format!(
            "y-o-y growth of `{}` needs at least 5 quarters, got {}",
            s.name,
            s.len()
        )));
    }
    let v = s.values();
    let mut out = Vec::with_capacity(v.len() - 4);
    for t in 4..v.len() {
        let base = v[t - 4];
        if base <= 0.0 {
            return Err(Error::DivisionDomain {
                at: s.index()[t - 4].to_string(),
                value: base,
            });
        }
        out.push(100.0 * (v[t] - base) / base);
    }
    Ok(Series::new(s.name.clone(), s.index()[4..].to_vec(), out)?.with_units("% y-o-y"))
}

/// Row `t` of the result holds `s_{t−k}`. The index moves forward by `k`
/// quarters; alignment with other columns drops the undefined leading rows.
pub fn lag(s: &Series, k: usize) -> Result<Series> {
    if k >= s.len() {
        return Err(Error::InsufficientHistory(format!(
            "lag {k} of `{}` with only {} observations",
            s.name,
            s.len()
        )));
    }
    Ok(s.shifted(k as i64))
}

/// Row `t` of the result holds `s_{t+k}`.
pub fn lead(s: &Series, k: usize) -> Result<Series> {
    if k >= s.len() {
        return Err(Error::InsufficientHistory(format!(
            "lead {k} of `{}` with only {} observations",
            s.name,
            s.len()
        )));
    }
    Ok(s.shifted(-(k as i64)))
}

#[derive(Debug, Clone, Serialize)]
pub struct PrincipalComponent {
    pub scores: Series,
    /// Leading eigenvector of the correlation matrix, one entry per input column.
    pub loadings: Vec<f64>,
    /// Leading eigenvalue over the trace.
    pub explained_share: f64,
    pub eigenvalues: Vec<f64>,
}

/// First principal component of standardized columns (population variance).
///
/// The eigenvector is signed so that its largest-magnitude loading is positive.
pub fn first_principal_component(columns: &[Series]) -> Result<PrincipalComponent> {
    if columns.len() < 2 {
        return Err(Error::InvalidArgument("PCA needs at least two columns".into()));
    }
    let index = columns[0].index();
    for c in columns {
        if c.index() != index {
            return Err(Error::InvalidArgument(format!(
                "column `{}` does not share the index of `{}`",
                c.name, columns[0].name
            )));
        }
    }
    let n = index.len();
    let p = columns.len();
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(p);
    for c in columns {
        let v = c.values();
        let m = mean(v);
        let var = pop_variance(v);
        if !(var > 0.0) {
            return Err(Error::DegenerateColumn(c.name.clone()));
        }
        let sd = var.sqrt();
        z.push(v.iter().map(|x| (x - m) / sd).collect());
    }
    let mut corr = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let r = z[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    let (vals, vecs) = symmetric_eigen(&corr);
    let mut loadings: Vec<f64> = (0..p).map(|k| vecs[(k, 0)]).collect();
    let lead_pos = loadings
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if loadings[lead_pos] < 0.0 {
        loadings.iter_mut().for_each(|l| *l = -*l);
    }
    let scores: Vec<f64> = (0..n).map(|t| (0..p).map(|k| loadings[k] * z[k][t]).sum()).collect();
    let trace: f64 = vals.iter().sum();
    Ok(PrincipalComponent {
        scores: Series::new("pc1", index.to_vec(), scores)?,
        explained_share: vals[0] / trace,
        loadings,
        eigenvalues: vals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Quarter};
    use proptest::prelude::*;

    fn start() -> Quarter {
        "2000Q1".parse().unwrap()
    }

    fn ser(name: &str, v: &[f64]) -> Series {
        Series::from_start(name, start(), v.to_vec()).unwrap()
    }

    #[test]
    fn yoy_examples() {
        let g = yoy_growth(&ser("cpi", &[100.0, 100.0, 100.0, 100.0, 110.0])).unwrap();
        assert_eq!(g.values(), &[10.0]);
        assert_eq!(g.first(), Some("2001Q1".parse().unwrap()));
        let g = yoy_growth(&ser("cpi", &[100.0, 102.0, 104.0, 106.0, 108.0])).unwrap();
        assert!((g.values()[0] - 8.0).abs() < 1e-12);
        let g = yoy_growth(&ser("c", &[5.0; 9])).unwrap();
        assert!(g.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn yoy_errors() {
        assert!(matches!(
            yoy_growth(&ser("c", &[1.0; 4])),
            Err(Error::InsufficientHistory(_))
        ));
        let r = yoy_growth(&ser("c", &[1.0, 0.0, 1.0, 1.0, 1.0, 1.0]));
        assert!(matches!(r, Err(Error::DivisionDomain { .. })));
    }

    #[test]
    fn lag_and_lead_alignment() {
        let s = ser("x", &[1.0, 2.0, 3.0]);
        let l = lag(&s, 1).unwrap();
        assert_eq!(l.get(start()), None);
        assert_eq!(l.get(start().offset(1)), Some(1.0));
        assert_eq!(l.get(start().offset(2)), Some(2.0));
        let f = lead(&s, 1).unwrap();
        assert_eq!(f.get(start()), Some(2.0));
        assert_eq!(f.get(start().offset(1)), Some(3.0));
        assert_eq!(f.get(start().offset(2)), None);
        assert_eq!(lag(&s, 0).unwrap(), s);
        assert!(lag(&s, 3).is_err());

        let ds = Dataset::from_series(vec![s.clone(), l.renamed("x.L1")]).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.column("x.L1").unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn pca_identical_columns() {
        let a = ser("a", &[1.0, 3.0, 2.0, 5.0]);
        let pc = first_principal_component(&[a.clone(), a.renamed("b")]).unwrap();
        let h = 0.5f64.sqrt();
        assert!((pc.loadings[0] - h).abs() < 1e-12 && (pc.loadings[1] - h).abs() < 1e-12);
        assert!((pc.explained_share - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pca_uncorrelated_equal_variance() {
        let a = ser("a", &[1.0, -1.0, 1.0, -1.0]);
        let b = ser("b", &[1.0, 1.0, -1.0, -1.0]);
        let pc = first_principal_component(&[a, b]).unwrap();
        assert!((pc.explained_share - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pca_zero_variance() {
        let a = ser("a", &[1.0, 2.0, 3.0]);
        let b = ser("flat", &[2.0, 2.0, 2.0]);
        assert_eq!(
            first_principal_component(&[a, b]).unwrap_err(),
            Error::DegenerateColumn("flat".into())
        );
    }

    proptest! {
        #[test]
        fn lag_lead_inverse(v in proptest::collection::vec(-10f64..10.0, 3..20), k in 0usize..3) {
            let s = ser("x", &v);
            prop_assume!(k < s.len());
            let back = lag(&lead(&s, k).unwrap(), k).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn yoy_of_constant_is_zero(c in 0.1f64..1e4, n in 5usize..30) {
            let s = ser("c", &vec![c; n]);
            prop_assert!(yoy_growth(&s).unwrap().values().iter().all(|v| *v == 0.0));
        }
    }
}
