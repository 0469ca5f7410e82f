//! Synthetic SCADA generator with controllable degradation.
//!
//! Power at sample `t` is `curve(wind_t) * (1 - degradation)^t * (1 + noise_t)`
//! with `noise_t ~ N(0, noise)`, minus an optional step drop injected from a
//! given sample onward.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{SampleRecord, SeriesSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindModel {
    /// Independent uniform draws on `[lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// First-order autoregression around `mean` with reflecting bounds.
    Autoregressive {
        lo: f64,
        hi: f64,
        mean: f64,
        phi: f64,
        sigma: f64,
    },
}

impl WindModel {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            WindModel::Uniform { lo, hi } | WindModel::Autoregressive { lo, hi, .. } => (lo, hi),
        }
    }
}

/// Mixture of Gaussians around regime centres, one regime drawn per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureModel {
    pub centers: Vec<f64>,
    pub spread: f64,
}

/// Cubic ramp from `cut_in` to `rated_speed`, flat at `rated_power` above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub cut_in: f64,
    pub rated_speed: f64,
    pub rated_power: f64,
}

impl Default for PowerCurve {
    /// Roughly a 2.5 MW machine in Wh per 10 minutes; [5, 7.5) m/s maps to
    /// about 25,000-100,000.
    fn default() -> Self {
        PowerCurve {
            cut_in: 3.0,
            rated_speed: 12.0,
            rated_power: 430_000.0,
        }
    }
}

impl PowerCurve {
    pub fn power(&self, wind: f64) -> f64 {
        if wind <= self.cut_in {
            0.0
        } else if wind >= self.rated_speed {
            self.rated_power
        } else {
            let c3 = self.cut_in.powi(3);
            self.rated_power * (wind.powi(3) - c3) / (self.rated_speed.powi(3) - c3)
        }
    }
}

/// Additive drop of `amount` power units from sample `at` onward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepChange {
    pub at: usize,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub turbine_id: String,
    pub samples: usize,
    pub start: DateTime<Utc>,
    pub sampling_period_secs: i64,
    pub wind: WindModel,
    pub temperature: TemperatureModel,
    pub power_curve: PowerCurve,
    /// Relative power loss per sample, applied multiplicatively.
    pub degradation: f64,
    /// Relative standard deviation of multiplicative noise.
    pub noise: f64,
    pub step: Option<StepChange>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            turbine_id: "S01".into(),
            samples: 50_000,
            start: Utc.with_ymd_and_hms(2016, 1, 1, 0, 0, 0).unwrap(),
            sampling_period_secs: 600,
            wind: WindModel::Autoregressive {
                lo: 3.0,
                hi: 12.0,
                mean: 6.5,
                phi: 0.9,
                sigma: 0.8,
            },
            temperature: TemperatureModel {
                centers: vec![15.0, 18.0, 22.0, 27.0],
                spread: 1.0,
            },
            power_curve: PowerCurve::default(),
            degradation: 0.0,
            noise: 0.0,
            step: None,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.samples == 0 {
            return bad("samples must be positive");
        }
        if self.sampling_period_secs <= 0 {
            return bad("sampling period must be positive");
        }
        if !(self.degradation >= 0.0 && self.degradation < 1.0) {
            return bad("degradation must lie in [0, 1)");
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return bad("noise must be non-negative");
        }
        let (lo, hi) = self.wind.bounds();
        if !(0.0 <= lo && lo <= hi) {
            return bad("wind bounds need 0 <= lo <= hi");
        }
        if let WindModel::Autoregressive {
            phi, sigma, mean, ..
        } = self.wind
        {
            if !(0.0..1.0).contains(&phi) || !(sigma >= 0.0) || !(lo..=hi).contains(&mean) {
                return bad("autoregressive wind needs 0 <= phi < 1, sigma >= 0, lo <= mean <= hi");
            }
        }
        if self.temperature.centers.is_empty() || !(self.temperature.spread >= 0.0) {
            return bad("temperature model needs centres and a non-negative spread");
        }
        let pc = self.power_curve;
        if !(pc.cut_in < pc.rated_speed) || !(pc.rated_power >= 0.0) {
            return bad("power curve needs cut_in < rated_speed and rated_power >= 0");
        }
        Ok(())
    }
}

fn reflect(mut x: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let width = hi - lo;
    // fold into [lo, hi] by mirroring at both ends
    let period = 2.0 * width;
    x = (x - lo).rem_euclid(period);
    if x > width {
        x = period - x;
    }
    lo + x
}

/// Generates a single-turbine series; deterministic in `config.seed`.
pub fn generate_scada(config: &SynthConfig) -> Result<SeriesSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let (lo, hi) = config.wind.bounds();
    let mut wind = match config.wind {
        WindModel::Uniform { .. } => lo,
        WindModel::Autoregressive { mean, .. } => mean,
    };
    let decay = 1.0 - config.degradation;
    let mut records = Vec::with_capacity(config.samples);
    for t in 0..config.samples {
        wind = match config.wind {
            WindModel::Uniform { .. } if hi > lo => rng.random_range(lo..hi),
            WindModel::Uniform { .. } => lo,
            WindModel::Autoregressive {
                mean, phi, sigma, ..
            } => reflect(
                mean + phi * (wind - mean) + sigma * std_normal.sample(&mut rng),
                lo,
                hi,
            ),
        };
        let centres = &config.temperature.centers;
        let temperature = centres[rng.random_range(0..centres.len())]
            + config.temperature.spread * std_normal.sample(&mut rng);
        let eps = std_normal.sample(&mut rng);
        let mut power =
            config.power_curve.power(wind) * decay.powi(t as i32) * (1.0 + config.noise * eps);
        if let Some(step) = config.step {
            if t >= step.at {
                power -= step.amount;
            }
        }
        records.push(SampleRecord {
            timestamp: config.start + Duration::seconds(config.sampling_period_secs * t as i64),
            turbine_id: config.turbine_id.clone(),
            wind_speed: wind,
            temperature,
            power: power.max(0.0),
        });
    }
    let (mut set, _) = SeriesSet::from_records(records);
    set.sampling_period_secs = config.sampling_period_secs;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{load_scada_from_reader, summarize, write_scada_csv, ColumnMap};

    fn small(samples: usize) -> SynthConfig {
        SynthConfig {
            samples,
            ..Default::default()
        }
    }

    #[test]
    fn power_curve_shape() {
        let pc = PowerCurve::default();
        assert_eq!(pc.power(2.0), 0.0);
        assert_eq!(pc.power(20.0), pc.rated_power);
        let mut prev = 0.0;
        for i in 0..200 {
            let p = pc.power(3.0 + i as f64 * 0.05);
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn reflect_keeps_bounds() {
        assert_eq!(reflect(13.0, 3.0, 12.0), 11.0);
        assert_eq!(reflect(1.0, 3.0, 12.0), 5.0);
        assert_eq!(reflect(7.0, 3.0, 12.0), 7.0);
        assert!((3.0..=12.0).contains(&reflect(-40.3, 3.0, 12.0)));
    }

    #[test]
    fn counts_and_determinism() {
        let cfg = small(100);
        let a = generate_scada(&cfg).unwrap();
        assert_eq!(summarize(&a)[0].count, 100);
        assert_eq!(a, generate_scada(&cfg).unwrap());
        let b = generate_scada(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn noiseless_stationary_power_is_a_function_of_wind() {
        let set = generate_scada(&small(500)).unwrap();
        let pc = PowerCurve::default();
        for r in set.turbine("S01").unwrap() {
            assert_eq!(r.power, pc.power(r.wind_speed));
        }
    }

    #[test]
    fn degradation_lowers_window_means() {
        // constant wind isolates the decay
        let cfg = SynthConfig {
            samples: 1000,
            wind: WindModel::Uniform { lo: 6.0, hi: 6.0 },
            degradation: 1e-4,
            ..Default::default()
        };
        let set = generate_scada(&cfg).unwrap();
        let p: Vec<f64> = set
            .turbine("S01")
            .unwrap()
            .iter()
            .map(|r| r.power)
            .collect();
        let means: Vec<f64> = p
            .chunks(100)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn step_change_applies_from_index() {
        let cfg = SynthConfig {
            samples: 10,
            wind: WindModel::Uniform { lo: 7.0, hi: 7.0 },
            step: Some(StepChange {
                at: 5,
                amount: 1000.0,
            }),
            ..Default::default()
        };
        let p: Vec<f64> = generate_scada(&cfg)
            .unwrap()
            .turbine("S01")
            .unwrap()
            .iter()
            .map(|r| r.power)
            .collect();
        assert_eq!(p[4] - p[5], 1000.0);
        assert_eq!(p[0], p[4]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let set = generate_scada(&SynthConfig {
            noise: 0.02,
            degradation: 1e-6,
            ..small(300)
        })
        .unwrap();
        let mut buf = Vec::new();
        write_scada_csv(&set, &mut buf).unwrap();
        let (back, report) = load_scada_from_reader(buf.as_slice(), &ColumnMap::default()).unwrap();
        assert_eq!(report.dropped(), 0);
        assert_eq!(back, set);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(generate_scada(&SynthConfig {
            degradation: -0.1,
            ..small(10)
        })
        .is_err());
        assert!(generate_scada(&SynthConfig {
            noise: -1.0,
            ..small(10)
        })
        .is_err());
        assert!(generate_scada(&small(0)).is_err());
        let cfg = SynthConfig {
            wind: WindModel::Autoregressive {
                lo: 3.0,
                hi: 12.0,
                mean: 20.0,
                phi: 0.5,
                sigma: 1.0,
            },
            ..small(10)
        };
        assert!(generate_scada(&cfg).is_err());
    }
}
