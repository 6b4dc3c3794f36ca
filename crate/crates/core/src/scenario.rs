//! Prior sampling, labeled dataset generation, and min-max input scaling.
//!
//! Parameters are drawn from independent uniform priors; the transmission
//! probability is then pinned by the identity `p_tran = r0 * p_recov /
//! c_rate`, so every sampled scenario satisfies `r0 * p_recov == p_tran *
//! c_rate` to floating tolerance. Scalers are fitted on training data only
//! and reapplied verbatim at test time.

use std::io::{BufWriter, Write};
use std::path::Path;

use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abm::{simulate, EpiCurve, EpiParams};
use crate::error::{Error, Result};
use crate::rng::{child_rng, child_seed, SimRng};

/// Uniform prior ranges for scenario parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    /// Population size range (sampled continuously, rounded to integer).
    pub n: (f64, f64),
    /// Per-day recovery probability range.
    pub p_recov: (f64, f64),
    /// Initially infected count range (rounded to integer).
    pub i0: (f64, f64),
    /// Basic reproduction number range.
    pub r0: (f64, f64),
    /// Daily contact rate range.
    pub c_rate: (f64, f64),
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            n: (5000.0, 10000.0),
            p_recov: (0.071, 0.25),
            i0: (100.0, 2000.0),
            r0: (1.0, 5.0),
            c_rate: (5.0, 15.0),
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("n", self.n),
            ("p_recov", self.p_recov),
            ("i0", self.i0),
            ("r0", self.r0),
            ("c_rate", self.c_rate),
        ] {
            if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || lo >= hi {
                return Err(Error::InvalidParam(format!(
                    "prior range for {name} must satisfy 0 < lower < upper, got ({lo}, {hi})"
                )));
            }
        }
        if self.i0.1 > self.n.0 {
            return Err(Error::InvalidParam(format!(
                "prior i0 upper bound {} must not exceed n lower bound {}",
                self.i0.1, self.n.0
            )));
        }
        if self.p_recov.1 > 1.0 {
            return Err(Error::InvalidParam(
                "prior p_recov upper bound must be <= 1".into(),
            ));
        }
        let worst_p_tran = self.r0.1 * self.p_recov.1 / self.c_rate.0;
        if worst_p_tran > 1.0 {
            return Err(Error::InvalidParam(format!(
                "prior ranges allow p_tran = {worst_p_tran} > 1"
            )));
        }
        Ok(())
    }
}

/// Draws one parameter vector from the prior.
///
/// Draw order is fixed (n, p_recov, i0, r0, c_rate) so results are
/// reproducible from the generator state alone.
pub fn sample_params(prior: &PriorConfig, rng: &mut SimRng) -> EpiParams {
    let n = rng.random_range(prior.n.0..prior.n.1).round() as u32;
    let p_recov = rng.random_range(prior.p_recov.0..prior.p_recov.1);
    let i0 = rng.random_range(prior.i0.0..prior.i0.1).round() as u32;
    let r0 = rng.random_range(prior.r0.0..prior.r0.1);
    let c_rate = rng.random_range(prior.c_rate.0..prior.c_rate.1);
    let p_tran = r0 * p_recov / c_rate;
    EpiParams {
        n,
        i0,
        c_rate,
        p_tran,
        p_recov,
        r0,
    }
}

/// One labeled training/testing example: parameters plus the curve they
/// generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: EpiParams,
    pub curve: EpiCurve,
    /// Seed that produced `curve` via [`simulate`].
    pub seed: u64,
}

/// Generates `count` scenarios with independent parameter draws and
/// independent simulation seeds, fully reproducible from `seed`.
///
/// Scenario `i` draws parameters from child stream `2i` and simulates with
/// child seed `2i + 1`. Generation fans out across threads; the output is
/// ordered by scenario index regardless of scheduling.
pub fn generate_dataset(
    count: usize,
    horizon: usize,
    prior: &PriorConfig,
    seed: u64,
) -> Result<Vec<Scenario>> {
    if count < 1 {
        return Err(Error::InvalidParam("dataset count must be >= 1".into()));
    }
    prior.validate()?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = child_rng(seed, 2 * i as u64);
            let params = sample_params(prior, &mut rng);
            let sim_seed = child_seed(seed, 2 * i as u64 + 1);
            let curve = simulate(&params, horizon, sim_seed)?;
            Ok(Scenario {
                params,
                curve,
                seed: sim_seed,
            })
        })
        .collect()
}

/// A fitted per-feature min-max pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub min: f64,
    pub max: f64,
}

impl FeatureScaler {
    pub fn fit(values: impl Iterator<Item = f64>, name: &str) -> Result<Self> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            if !v.is_finite() {
                return Err(Error::Numeric(format!("non-finite value while fitting {name}")));
            }
            min = min.min(v);
            max = max.max(v);
        }
        if !(max > min) {
            return Err(Error::InvalidParam(format!(
                "feature {name} is constant (min == max == {min}); cannot scale"
            )));
        }
        Ok(FeatureScaler { min, max })
    }

    pub fn scale(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn unscale(&self, y: f64) -> f64 {
        self.min + y * (self.max - self.min)
    }
}

/// Input scalers fitted on the training split: one global pair for incidence
/// over all days and curves, plus pairs for the static covariates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scalers {
    pub incidence: FeatureScaler,
    pub n: FeatureScaler,
    pub p_recov: FeatureScaler,
}

/// Fits min-max scalers on a training set.
pub fn fit_scalers(train: &[Scenario]) -> Result<Scalers> {
    if train.is_empty() {
        return Err(Error::InvalidParam("cannot fit scalers on an empty set".into()));
    }
    let incidence = FeatureScaler::fit(
        train
            .iter()
            .flat_map(|s| s.curve.incidence().iter().map(|&x| f64::from(x))),
        "incidence",
    )?;
    let n = FeatureScaler::fit(train.iter().map(|s| f64::from(s.params.n)), "n")?;
    let p_recov = FeatureScaler::fit(train.iter().map(|s| s.params.p_recov), "p_recov")?;
    Ok(Scalers {
        incidence,
        n,
        p_recov,
    })
}

impl Scalers {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&ScalersDoc::from(self))
            .expect("scalers always serialize");
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: ScalersDoc =
            serde_json::from_str(&text).map_err(|e| Error::schema(path, e.to_string()))?;
        Ok(doc.into())
    }
}

/// On-disk layout: `{feature: {min, max}}`.
#[derive(Serialize, Deserialize)]
struct ScalersDoc {
    incidence: FeatureScaler,
    n: FeatureScaler,
    p_recov: FeatureScaler,
}

impl From<&Scalers> for ScalersDoc {
    fn from(s: &Scalers) -> Self {
        ScalersDoc {
            incidence: s.incidence,
            n: s.n,
            p_recov: s.p_recov,
        }
    }
}

impl From<ScalersDoc> for Scalers {
    fn from(d: ScalersDoc) -> Self {
        Scalers {
            incidence: d.incidence,
            n: d.n,
            p_recov: d.p_recov,
        }
    }
}

/// A scaled observation ready for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    /// Scaled incidence, length = model horizon (right-padded when allowed).
    pub incidence: Vec<f64>,
    /// Scaled static covariates: `[n, p_recov]`.
    pub statics: [f64; 2],
    /// Per-day validity; padded days are false.
    pub mask: Vec<bool>,
}

/// Scales an observation. Values are not clipped, so test-time inputs may
/// fall outside `[0, 1]`.
///
/// Curves shorter than `horizon` are right-padded with zeros and masked out
/// when `allow_padding` is set; longer curves are always rejected.
pub fn encode_input(
    curve: &EpiCurve,
    n: u32,
    p_recov: f64,
    scalers: &Scalers,
    horizon: usize,
    allow_padding: bool,
) -> Result<ModelInput> {
    let len = curve.horizon();
    if len > horizon {
        return Err(Error::ShapeMismatch(format!(
            "curve has {len} days but the model horizon is {horizon}"
        )));
    }
    if len < horizon && !allow_padding {
        return Err(Error::ShapeMismatch(format!(
            "curve has {len} days, expected {horizon} (padding disabled)"
        )));
    }
    let mut incidence = Vec::with_capacity(horizon);
    let mut mask = Vec::with_capacity(horizon);
    for day in 0..len {
        incidence.push(scalers.incidence.scale(f64::from(curve.incidence()[day])));
        mask.push(curve.day_observed(day));
    }
    incidence.resize(horizon, 0.0);
    mask.resize(horizon, false);
    Ok(ModelInput {
        incidence,
        statics: [scalers.n.scale(f64::from(n)), scalers.p_recov.scale(p_recov)],
        mask,
    })
}

/// Dataset CSV schema: `scenario,seed,n,i0,c_rate,p_tran,p_recov,r0,day0..day{h-1}`.
pub fn save_dataset_csv(scenarios: &[Scenario], path: &Path) -> Result<()> {
    if scenarios.is_empty() {
        return Err(Error::InvalidParam("cannot save an empty dataset".into()));
    }
    let horizon = scenarios[0].curve.horizon();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = String::from("scenario,seed,n,i0,c_rate,p_tran,p_recov,r0");
    for d in 0..horizon {
        header.push_str(&format!(",day{d}"));
    }
    writeln!(w, "{header}").map_err(|e| Error::io(path, e))?;
    for (i, s) in scenarios.iter().enumerate() {
        if s.curve.horizon() != horizon {
            return Err(Error::ShapeMismatch(format!(
                "scenario {i} has horizon {} but the dataset uses {horizon}",
                s.curve.horizon()
            )));
        }
        let p = &s.params;
        let mut row = format!(
            "{i},{},{},{},{},{},{},{}",
            s.seed, p.n, p.i0, p.c_rate, p.p_tran, p.p_recov, p.r0
        );
        for &inc in s.curve.incidence() {
            row.push_str(&format!(",{inc}"));
        }
        writeln!(w, "{row}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Reads a dataset written by [`save_dataset_csv`].
pub fn load_dataset_csv(path: &Path) -> Result<Vec<Scenario>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::schema(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::schema(path, e.to_string()))?
        .clone();
    let fixed = [
        "scenario", "seed", "n", "i0", "c_rate", "p_tran", "p_recov", "r0",
    ];
    if headers.len() < fixed.len() + 1 {
        return Err(Error::schema(path, "too few columns for a dataset"));
    }
    for (i, name) in fixed.iter().enumerate() {
        if &headers[i] != *name {
            return Err(Error::schema(
                path,
                format!("column {i} must be '{name}', got '{}'", &headers[i]),
            ));
        }
    }
    let horizon = headers.len() - fixed.len();
    for d in 0..horizon {
        let want = format!("day{d}");
        if &headers[fixed.len() + d] != want.as_str() {
            return Err(Error::schema(
                path,
                format!("column {} must be '{want}', got '{}'", fixed.len() + d, &headers[fixed.len() + d]),
            ));
        }
    }

    let mut out = Vec::new();
    for (rowno, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::schema(path, e.to_string()))?;
        let field = |idx: usize| -> Result<&str> {
            record
                .get(idx)
                .ok_or_else(|| Error::schema(path, format!("row {rowno}: missing column {idx}")))
        };
        let parse_f64 = |idx: usize| -> Result<f64> {
            field(idx)?.trim().parse().map_err(|_| {
                Error::schema(path, format!("row {rowno}: bad float in column {idx}"))
            })
        };
        let parse_u = |idx: usize| -> Result<u64> {
            field(idx)?.trim().parse().map_err(|_| {
                Error::schema(path, format!("row {rowno}: bad integer in column {idx}"))
            })
        };
        let index = parse_u(0)? as usize;
        if index != rowno {
            return Err(Error::schema(
                path,
                format!("scenario indices must be consecutive; got {index} at row {rowno}"),
            ));
        }
        let seed = parse_u(1)?;
        let params = EpiParams {
            n: parse_u(2)? as u32,
            i0: parse_u(3)? as u32,
            c_rate: parse_f64(4)?,
            p_tran: parse_f64(5)?,
            p_recov: parse_f64(6)?,
            r0: parse_f64(7)?,
        };
        params.validate().map_err(|e| Error::schema(path, format!("row {rowno}: {e}")))?;
        let mut incidence = Vec::with_capacity(horizon);
        for d in 0..horizon {
            incidence.push(parse_u(fixed.len() + d)? as u32);
        }
        out.push(Scenario {
            params,
            curve: EpiCurve::new(incidence)?,
            seed,
        });
    }
    if out.is_empty() {
        return Err(Error::schema(path, "dataset has no rows"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn p_tran_identity_examples() {
        // r0 = 2, p_recov = 0.1, c_rate = 10 -> p_tran = 0.02.
        assert!((2.0 * 0.1 / 10.0 - 0.02f64).abs() < 1e-15);
        // Extreme corner stays a probability.
        assert!(5.0 * 0.25 / 5.0 <= 1.0);
    }

    #[test]
    fn sampler_respects_prior_box_and_identity() {
        let prior = PriorConfig::default();
        let mut rng = rng_from_seed(11);
        let mut c_rate_sum = 0.0;
        let draws = 10_000;
        for _ in 0..draws {
            let p = sample_params(&prior, &mut rng);
            assert!(f64::from(p.n) >= prior.n.0 && f64::from(p.n) <= prior.n.1);
            assert!(p.p_recov >= prior.p_recov.0 && p.p_recov < prior.p_recov.1);
            assert!(f64::from(p.i0) >= prior.i0.0 && f64::from(p.i0) <= prior.i0.1);
            assert!(p.r0 >= prior.r0.0 && p.r0 < prior.r0.1);
            assert!(p.c_rate >= prior.c_rate.0 && p.c_rate < prior.c_rate.1);
            assert!(p.p_tran > 0.0 && p.p_tran < 1.0);
            assert!(p.i0 <= p.n);
            assert!(
                (p.r0 * p.p_recov - p.p_tran * p.c_rate).abs() <= 1e-12,
                "identity violated"
            );
            c_rate_sum += p.c_rate;
        }
        let mean = c_rate_sum / f64::from(draws);
        assert!((mean - 10.0).abs() < 0.1, "c_rate mean {mean} should be near 10");
    }

    #[test]
    fn dataset_is_reproducible_and_valid() {
        let prior = PriorConfig::default();
        let a = generate_dataset(8, 20, &prior, 99).unwrap();
        let b = generate_dataset(8, 20, &prior, 99).unwrap();
        assert_eq!(a, b);
        for s in &a {
            assert_eq!(s.curve.horizon(), 20);
            assert_eq!(s.curve.incidence()[0], s.params.i0);
            assert!(s.curve.total() <= u64::from(s.params.n));
            // Curve really is the simulation output for the stored seed.
            assert_eq!(s.curve, simulate(&s.params, 20, s.seed).unwrap());
        }
    }

    #[test]
    fn scaler_fit_and_endpoints() {
        let prior = PriorConfig::default();
        let train = generate_dataset(12, 20, &prior, 4).unwrap();
        let scalers = fit_scalers(&train).unwrap();
        assert!(scalers.incidence.max > scalers.incidence.min);
        // Every scaled training value lies in [0, 1].
        for s in &train {
            for &x in s.curve.incidence() {
                let v = scalers.incidence.scale(f64::from(x));
                assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
            let nv = scalers.n.scale(f64::from(s.params.n));
            assert!((-1e-12..=1.0 + 1e-12).contains(&nv));
        }
        // Endpoints map to exactly 0 and 1.
        assert_eq!(scalers.incidence.scale(scalers.incidence.min), 0.0);
        assert_eq!(scalers.incidence.scale(scalers.incidence.max), 1.0);
    }

    #[test]
    fn scaler_rejects_constant_feature() {
        let p = EpiParams::new(5000, 100, 10.0, 0.0, 0.1, 1.0).unwrap();
        let curve = simulate(&p, 10, 1).unwrap();
        let train = vec![Scenario {
            params: p,
            curve,
            seed: 1,
        }];
        // Single scenario: n (and p_recov) are constant.
        assert!(fit_scalers(&train).is_err());
    }

    #[test]
    fn encode_pads_and_masks() {
        let scalers = Scalers {
            incidence: FeatureScaler { min: 0.0, max: 10.0 },
            n: FeatureScaler {
                min: 5000.0,
                max: 10000.0,
            },
            p_recov: FeatureScaler {
                min: 0.071,
                max: 0.25,
            },
        };
        let curve = EpiCurve::new(vec![0, 5, 10]).unwrap();
        let enc = encode_input(&curve, 7500, 0.1605, &scalers, 5, true).unwrap();
        assert_eq!(enc.incidence, vec![0.0, 0.5, 1.0, 0.0, 0.0]);
        assert_eq!(enc.mask, vec![true, true, true, false, false]);
        assert!(encode_input(&curve, 7500, 0.1605, &scalers, 5, false).is_err());
        assert!(encode_input(&curve, 7500, 0.1605, &scalers, 2, true).is_err());

        // Encode-then-decode is lossless.
        for (day, &v) in enc.incidence.iter().take(3).enumerate() {
            let back = scalers.incidence.unscale(v);
            assert!((back - f64::from(curve.incidence()[day])).abs() < 1e-12);
        }
        assert!((scalers.n.unscale(enc.statics[0]) - 7500.0).abs() < 1e-12);
        assert!((scalers.p_recov.unscale(enc.statics[1]) - 0.1605).abs() < 1e-12);
    }

    #[test]
    fn scaler_idempotence_on_scaled_data() {
        // Fitting on already scaled values yields the identity pair (0, 1).
        let vals = [0.0, 0.25, 0.5, 1.0];
        let s = FeatureScaler::fit(vals.iter().copied(), "x").unwrap();
        assert_eq!(s.min, 0.0);
        assert_eq!(s.max, 1.0);
    }

    #[test]
    fn dataset_csv_round_trip_bitexact() {
        let prior = PriorConfig::default();
        let data = generate_dataset(5, 12, &prior, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        save_dataset_csv(&data, &path).unwrap();
        let back = load_dataset_csv(&path).unwrap();
        assert_eq!(data, back);
        let bytes1 = std::fs::read(&path).unwrap();
        let path2 = dir.path().join("again.csv");
        save_dataset_csv(&back, &path2).unwrap();
        assert_eq!(bytes1, std::fs::read(&path2).unwrap());
    }

    #[test]
    fn scalers_json_round_trip() {
        let prior = PriorConfig::default();
        let train = generate_dataset(6, 15, &prior, 8).unwrap();
        let scalers = fit_scalers(&train).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scalers.json");
        scalers.save_json(&path).unwrap();
        let back = Scalers::load_json(&path).unwrap();
        assert_eq!(scalers, back);
    }
}
