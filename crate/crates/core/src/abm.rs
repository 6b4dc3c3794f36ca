//! Discrete-time stochastic agent-based SIR simulator over a fully connected
//! population.
//!
//! Every day, each infectious agent draws `K ~ Poisson(c_rate)` contact
//! targets uniformly at random (with replacement) among the other `n - 1`
//! agents; each contact landing on an agent that was susceptible at the
//! start of the day is an independent Bernoulli(`p_tran`) infection trial.
//! After infections are resolved, every agent that was infectious at the
//! start of the day recovers with probability `p_recov`. Newly infected
//! agents become infectious the next day. Day 0 is the initial condition:
//! the `i0` seed cases are recorded as day-0 incidence and no contacts or
//! recoveries happen on that day, which keeps the mean-field identity
//! `R0 = p_tran * c_rate / p_recov` exact for every agent.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::RngExt;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from_seed};

/// One SIR scenario's parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpiParams {
    /// Number of agents.
    pub n: u32,
    /// Initially infected agents (seed cases).
    pub i0: u32,
    /// Expected contacts per infectious agent per day.
    pub c_rate: f64,
    /// Per-contact transmission probability.
    pub p_tran: f64,
    /// Per-day recovery probability.
    pub p_recov: f64,
    /// Basic reproduction number.
    pub r0: f64,
}

impl EpiParams {
    pub fn new(n: u32, i0: u32, c_rate: f64, p_tran: f64, p_recov: f64, r0: f64) -> Result<Self> {
        let p = EpiParams {
            n,
            i0,
            c_rate,
            p_tran,
            p_recov,
            r0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_rate", self.c_rate),
            ("p_tran", self.p_tran),
            ("p_recov", self.p_recov),
            ("r0", self.r0),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("{name} must be finite, got {v}")));
            }
        }
        if self.n == 0 {
            return Err(Error::InvalidParam("n must be >= 1".into()));
        }
        if self.i0 == 0 || self.i0 > self.n {
            return Err(Error::InvalidParam(format!(
                "i0 must satisfy 1 <= i0 <= n, got i0={} n={}",
                self.i0, self.n
            )));
        }
        if self.c_rate <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "c_rate must be > 0, got {}",
                self.c_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.p_tran) {
            return Err(Error::InvalidParam(format!(
                "p_tran must be in [0,1], got {}",
                self.p_tran
            )));
        }
        if self.p_recov <= 0.0 || self.p_recov > 1.0 {
            return Err(Error::InvalidParam(format!(
                "p_recov must be in (0,1], got {}",
                self.p_recov
            )));
        }
        // r0 is descriptive metadata for the dynamics; p_tran = 0 forces a
        // zero reproduction number, so only negatives are rejected.
        if self.r0 < 0.0 {
            return Err(Error::InvalidParam(format!("r0 must be >= 0, got {}", self.r0)));
        }
        Ok(())
    }
}

/// A fixed-horizon daily incidence series with an optional validity mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpiCurve {
    incidence: Vec<u32>,
    /// Observed-day mask; `None` means all days observed.
    mask: Option<Vec<bool>>,
}

impl EpiCurve {
    pub fn new(incidence: Vec<u32>) -> Result<Self> {
        if incidence.is_empty() {
            return Err(Error::InvalidParam("curve horizon must be >= 1".into()));
        }
        Ok(EpiCurve {
            incidence,
            mask: None,
        })
    }

    pub fn with_mask(incidence: Vec<u32>, mask: Vec<bool>) -> Result<Self> {
        if incidence.len() != mask.len() {
            return Err(Error::ShapeMismatch(format!(
                "incidence length {} != mask length {}",
                incidence.len(),
                mask.len()
            )));
        }
        let mut c = EpiCurve::new(incidence)?;
        c.mask = Some(mask);
        Ok(c)
    }

    pub fn horizon(&self) -> usize {
        self.incidence.len()
    }

    pub fn incidence(&self) -> &[u32] {
        &self.incidence
    }

    /// Per-day observed flags; all true when no explicit mask is present.
    pub fn day_observed(&self, day: usize) -> bool {
        self.mask.as_ref().map_or(true, |m| m[day])
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn total(&self) -> u64 {
        self.incidence.iter().map(|&x| u64::from(x)).sum()
    }

    /// Incidence as `f64`, the form consumed by scalers and distance kernels.
    pub fn to_f64(&self) -> Vec<f64> {
        self.incidence.iter().map(|&x| f64::from(x)).collect()
    }

    /// Writes the curve as `day,incidence` CSV (integers, no exponent forms).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "day,incidence")?;
        for (day, inc) in self.incidence.iter().enumerate() {
            writeln!(w, "{day},{inc}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    /// Reads a `day,incidence` CSV written by [`EpiCurve::write_csv`].
    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut lines = reader.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "day,incidence" => {}
            Some(Ok(h)) => {
                return Err(Error::schema(path, format!("expected header 'day,incidence', got '{h}'")))
            }
            Some(Err(e)) => return Err(Error::io(path, e)),
            None => return Err(Error::schema(path, "empty file")),
        }
        let mut incidence = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, ',');
            let day: usize = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::schema(path, format!("bad day field on line {}", lineno + 2)))?;
            let inc: u32 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| {
                    Error::schema(path, format!("bad incidence field on line {}", lineno + 2))
                })?;
            if day != incidence.len() {
                return Err(Error::schema(
                    path,
                    format!("days must run 0..horizon-1; got {day} at row {}", incidence.len()),
                ));
            }
            incidence.push(inc);
        }
        EpiCurve::new(incidence)
    }
}

/// Simulation output with per-day compartment counts (end-of-day states).
#[derive(Debug, Clone)]
pub struct SimDetail {
    pub curve: EpiCurve,
    pub susceptible: Vec<u32>,
    pub infectious: Vec<u32>,
    pub recovered: Vec<u32>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    S,
    I,
    R,
}

/// Runs one epidemic and returns the incidence curve.
///
/// Deterministic given `(params, horizon, seed)`.
pub fn simulate(params: &EpiParams, horizon: usize, seed: u64) -> Result<EpiCurve> {
    simulate_detailed(params, horizon, seed).map(|d| d.curve)
}

/// Like [`simulate`] but also reports the daily S/I/R compartment counts,
/// the optional prevalence-style debug output.
pub fn simulate_detailed(params: &EpiParams, horizon: usize, seed: u64) -> Result<SimDetail> {
    params.validate()?;
    if horizon < 1 {
        return Err(Error::InvalidParam("horizon must be >= 1".into()));
    }
    let n = params.n as usize;
    let i0 = params.i0 as usize;
    let mut rng = rng_from_seed(seed);
    // c_rate > 0 is validated above, so the Poisson is well-formed.
    let contacts = Poisson::new(params.c_rate)
        .map_err(|e| Error::InvalidParam(format!("bad contact rate {}: {e}", params.c_rate)))?;

    let mut status = vec![Status::S; n];
    for s in status.iter_mut().take(i0) {
        *s = Status::I;
    }

    let mut incidence = vec![0u32; horizon];
    incidence[0] = params.i0;
    let mut susceptible = vec![0u32; horizon];
    let mut infectious_count = vec![0u32; horizon];
    let mut recovered = vec![0u32; horizon];
    susceptible[0] = (n - i0) as u32;
    infectious_count[0] = params.i0;

    let mut infectious: Vec<u32> = (0..i0 as u32).collect();
    let mut newly_infected: Vec<u32> = Vec::new();
    let mut marked = vec![false; n];

    for day in 1..horizon {
        if infectious.is_empty() {
            // Epidemic over: remaining days keep the final compartments.
            susceptible[day] = susceptible[day - 1];
            infectious_count[day] = 0;
            recovered[day] = recovered[day - 1];
            continue;
        }

        // Infection phase, computed from start-of-day state. Draw order is
        // fixed: infectious agents ascending, one Poisson count each, then
        // per contact a target draw and (if the target is eligible) one
        // Bernoulli trial.
        newly_infected.clear();
        for &agent in &infectious {
            let k = contacts.sample(&mut rng) as u64;
            for _ in 0..k {
                // Uniform over the other n-1 agents.
                let mut target = rng.random_range(0..(n as u32 - 1));
                if target >= agent {
                    target += 1;
                }
                let t = target as usize;
                if status[t] == Status::S
                    && !marked[t]
                    && rng.random_bool(params.p_tran)
                {
                    marked[t] = true;
                    newly_infected.push(target);
                }
            }
        }

        // Recovery phase for agents infectious at the start of the day.
        let mut next_infectious: Vec<u32> = Vec::with_capacity(infectious.len() + newly_infected.len());
        for &agent in &infectious {
            if rng.random_bool(params.p_recov) {
                status[agent as usize] = Status::R;
            } else {
                next_infectious.push(agent);
            }
        }
        newly_infected.sort_unstable();
        for &t in &newly_infected {
            status[t as usize] = Status::I;
            marked[t as usize] = false;
        }
        incidence[day] = newly_infected.len() as u32;

        // Keep the infectious list in ascending agent order so the next
        // day's draw order stays canonical.
        next_infectious.extend_from_slice(&newly_infected);
        next_infectious.sort_unstable();
        infectious = next_infectious;

        susceptible[day] = susceptible[day - 1] - incidence[day];
        infectious_count[day] = infectious.len() as u32;
        recovered[day] = params.n - susceptible[day] - infectious_count[day];
    }

    Ok(SimDetail {
        curve: EpiCurve::new(incidence)?,
        susceptible,
        infectious: infectious_count,
        recovered,
    })
}

/// Runs `reps` independent epidemics; rep `r` uses `child_seed(seed, r)`.
pub fn simulate_ensemble(
    params: &EpiParams,
    horizon: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<EpiCurve>> {
    if reps < 1 {
        return Err(Error::InvalidParam("reps must be >= 1".into()));
    }
    (0..reps)
        .map(|r| simulate(params, horizon, child_seed(seed, r as u64)))
        .collect()
}
