use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, Quarter, Series};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Parameters of the synthetic Phillips-curve data generating process.
///
/// ```text
/// g_t      = rho·g_{t−1} + sigma_driver·e_t                          (output-gap driver)
/// gdp_t    = 100·exp((trend_growth·t + g_t)/100)                     (so 100·log gdp = const + trend + g)
/// x_t^j    = sigma_supply_j·u_t^j,  j ∈ {exchange_rate, crude, rainfall}
/// pi_t     = mu + phi·(pi_{t−1} − mu)
///            + convexity·max(g_{t−1} − threshold, 0)
///            + interaction·1{pi_{t−1} > mu and crude_{t−1} > 0}
///            + sigma_inflation·v_t
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SynthParams {
    pub rho: f64,
    pub sigma_driver: f64,
    pub trend_growth: f64,
    pub mu: f64,
    pub phi: f64,
    pub threshold: f64,
    pub convexity: f64,
    pub interaction: f64,
    pub sigma_inflation: f64,
    pub sigma_exchange_rate: f64,
    pub sigma_crude: f64,
    pub sigma_rainfall: f64,
    /// Leading observations simulated and discarded.
    pub burn_in: usize,
    pub start: String,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            rho: 0.7,
            sigma_driver: 1.0,
            trend_growth: 1.5,
            mu: 5.0,
            phi: 0.3,
            threshold: 0.5,
            convexity: 1.5,
            interaction: 3.0,
            sigma_inflation: 0.4,
            sigma_exchange_rate: 3.0,
            sigma_crude: 10.0,
            sigma_rainfall: 5.0,
            burn_in: 50,
            start: "2000Q1".into(),
        }
    }
}

impl SynthParams {
    /// Inflation implied by the deterministic part of the equation.
    pub fn skeleton(&self, prev_inflation: f64, prev_driver: f64, prev_crude: f64) -> f64 {
        let regime = prev_inflation > self.mu && prev_crude > 0.0;
        self.mu
            + self.phi * (prev_inflation - self.mu)
            + self.convexity * (prev_driver - self.threshold).max(0.0)
            + self.interaction * f64::from(u8::from(regime))
    }

    /// Human-readable statement of the generating equations with the values plugged in.
    pub fn equations(&self) -> String {
        format!(
            "g_t = {rho}*g_(t-1) + {sd}*e_t\n\
             100*log(gdp_t) = 100*log(100) + {tg}*t + g_t\n\
             exchange_rate_t = {sx}*u1_t ; crude_t = {sc}*u2_t ; rainfall_t = {sr}*u3_t\n\
             inflation_t = {mu} + {phi}*(inflation_(t-1) - {mu}) + {cv}*max(g_(t-1) - {th}, 0) \
             + {ia}*1[inflation_(t-1) > {mu} and crude_(t-1) > 0] + {si}*v_t\n\
             e, u1, u2, u3, v iid N(0,1); {burn} burn-in quarters discarded\n",
            rho = self.rho,
            sd = self.sigma_driver,
            tg = self.trend_growth,
            sx = self.sigma_exchange_rate,
            sc = self.sigma_crude,
            sr = self.sigma_rainfall,
            mu = self.mu,
            phi = self.phi,
            cv = self.convexity,
            th = self.threshold,
            ia = self.interaction,
            si = self.sigma_inflation,
            burn = self.burn_in,
        )
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    /// Columns: `inflation`, `gdp`, `exchange_rate`, `crude`, `rainfall`, `driver`.
    pub dataset: Dataset,
    pub equations: String,
    pub params: SynthParams,
}

/// Draw a synthetic quarterly dataset. Identical `(seed, n, params)` give identical output.
pub fn synth_dgp(seed: u64, n: usize, params: &SynthParams) -> Result<SynthOutput> {
    if n < 60 {
        return Err(Error::InsufficientHistory(format!(
            "synthetic dataset needs n >= 60, got {n}"
        )));
    }
    let start: Quarter = params.start.parse()?;
    let total = n + params.burn_in;
    let mut rng = substream(seed, 0);
    let mut draw = || -> f64 { rng.sample(StandardNormal) };

    let mut driver = vec![0.0; total];
    let mut infl = vec![params.mu; total];
    let mut fx = vec![0.0; total];
    let mut crude = vec![0.0; total];
    let mut rain = vec![0.0; total];
    for t in 0..total {
        let (e, u1, u2, u3, v) = (draw(), draw(), draw(), draw(), draw());
        fx[t] = params.sigma_exchange_rate * u1;
        crude[t] = params.sigma_crude * u2;
        rain[t] = params.sigma_rainfall * u3;
        if t == 0 {
            driver[0] = params.sigma_driver * e / (1.0 - params.rho * params.rho).max(1e-6).sqrt();
            continue;
        }
        driver[t] = params.rho * driver[t - 1] + params.sigma_driver * e;
        infl[t] = params.skeleton(infl[t - 1], driver[t - 1], crude[t - 1]) + params.sigma_inflation * v;
    }
    let keep = params.burn_in..total;
    let gdp: Vec<f64> = keep
        .clone()
        .enumerate()
        .map(|(i, t)| 100.0 * ((params.trend_growth * i as f64 + driver[t]) / 100.0).exp())
        .collect();
    let cols = vec![
        Series::from_start("inflation", start, infl[keep.clone()].to_vec())?.with_units("% y-o-y"),
        Series::from_start("gdp", start, gdp)?.with_units("index"),
        Series::from_start("exchange_rate", start, fx[keep.clone()].to_vec())?.with_units("% y-o-y"),
        Series::from_start("crude", start, crude[keep.clone()].to_vec())?.with_units("% y-o-y"),
        Series::from_start("rainfall", start, rain[keep.clone()].to_vec())?.with_units("% deviation"),
        Series::from_start("driver", start, driver[keep].to_vec())?.with_units("% gap"),
    ];
    Ok(SynthOutput {
        dataset: Dataset::from_series(cols)?,
        equations: params.equations(),
        params: params.clone(),
    })
}
