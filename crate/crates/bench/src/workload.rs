//! Bursty traffic generation by recursive bisection (the b-model), with a
//! lifetime distribution as the fourth input: bias `b`, aggregation level
//! `l` (2^l intervals), total volume `N`, and per-record lifetimes.
//!
//! At every bisection one half of the interval receives fraction `b` of
//! the volume and the other `1 − b`; a seeded fair coin picks the side.
//! `b = 0.5` yields uniform traffic, larger values burstier traffic.
//! Integer volumes round stochastically so the bucket sums conserve `N`
//! exactly. Keys are a seeded permutation of `0..N`, which keeps key
//! order statistically independent of arrival order.

use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BModelParams {
    pub b: f64,
    pub l: u32,
    pub n: u64,
    pub seed: u64,
}

impl BModelParams {
    pub fn new(b: f64, l: u32, n: u64, seed: u64) -> Result<BModelParams, WorkloadError> {
        if !(0.5..1.0).contains(&b) {
            return Err(WorkloadError::InvalidParams(format!(
                "bias must be in [0.5, 1.0), got {b}"
            )));
        }
        if l > 30 {
            return Err(WorkloadError::InvalidParams(format!(
                "aggregation level {l} too large (max 30)"
            )));
        }
        Ok(BModelParams { b, l, n, seed })
    }
}

/// Lifetime of arriving records, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LifetimeDistribution {
    Fixed(u64),
    UniformRange(u64, u64),
    Exponential(u64),
    AlwaysInfinite,
}

impl LifetimeDistribution {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let ok = match *self {
            LifetimeDistribution::Fixed(d) => d >= 1,
            LifetimeDistribution::UniformRange(lo, hi) => lo >= 1 && lo <= hi,
            LifetimeDistribution::Exponential(mean) => mean >= 1,
            LifetimeDistribution::AlwaysInfinite => true,
        };
        if ok {
            Ok(())
        } else {
            Err(WorkloadError::InvalidParams(format!(
                "lifetimes must be positive: {self:?}"
            )))
        }
    }

    /// One lifetime sample; `None` means the record never expires.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Option<u64> {
        match *self {
            LifetimeDistribution::Fixed(d) => Some(d),
            LifetimeDistribution::UniformRange(lo, hi) => Some(rng.random_range(lo..=hi)),
            LifetimeDistribution::Exponential(mean) => {
                let exp = Exp::new(1.0 / mean as f64).expect("positive rate");
                Some((exp.sample(rng).round() as u64).max(1))
            }
            LifetimeDistribution::AlwaysInfinite => None,
        }
    }

    /// Mean lifetime in milliseconds; `None` for never-expiring records.
    pub fn mean_ms(&self) -> Option<u64> {
        match *self {
            LifetimeDistribution::Fixed(d) => Some(d),
            LifetimeDistribution::UniformRange(lo, hi) => Some((lo + hi) / 2),
            LifetimeDistribution::Exponential(mean) => Some(mean),
            LifetimeDistribution::AlwaysInfinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub key: u64,
    /// `None` = never expires.
    pub lifetime_ms: Option<u64>,
}

/// Time-bucketed arrivals: bucket `i` covers simulated time
/// `[i·bucket_ms, (i+1)·bucket_ms)` and all its records arrive at the
/// bucket start.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadTrace {
    pub b: f64,
    pub l: u32,
    pub n: u64,
    pub seed: u64,
    pub bucket_ms: u64,
    pub buckets: Vec<Vec<TraceRecord>>,
}

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("invalid workload parameters: {0}")]
    InvalidParams(String),
    #[error("trace parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl WorkloadTrace {
    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn total_records(&self) -> u64 {
        self.buckets.iter().map(|b| b.len() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.iter().all(|b| b.is_empty())
    }

    /// Line format, stable for golden files:
    /// a header `bmodel b=.. l=.. N=.. seed=.. bucket_ms=..`,
    /// then one `bucket_index key lifetime_ms|inf` line per record.
    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(
            w,
            "bmodel b={} l={} N={} seed={} bucket_ms={}",
            self.b, self.l, self.n, self.seed, self.bucket_ms
        )?;
        for (i, bucket) in self.buckets.iter().enumerate() {
            for rec in bucket {
                match rec.lifetime_ms {
                    Some(ms) => writeln!(w, "{i} {} {ms}", rec.key)?,
                    None => writeln!(w, "{i} {} inf", rec.key)?,
                }
            }
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<WorkloadTrace, WorkloadError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| WorkloadError::Parse { line: 1, msg: "empty file".into() })??;
        let mut b = None;
        let mut l = None;
        let mut n = None;
        let mut seed = None;
        let mut bucket_ms = None;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("bmodel") {
            return Err(WorkloadError::Parse { line: 1, msg: "expected 'bmodel' header".into() });
        }
        for field in fields {
            let (name, value) = field.split_once('=').ok_or_else(|| WorkloadError::Parse {
                line: 1,
                msg: format!("malformed header field '{field}'"),
            })?;
            let bad = |_| WorkloadError::Parse { line: 1, msg: format!("bad value in '{field}'") };
            match name {
                "b" => b = Some(value.parse::<f64>().map_err(|_| bad(()))?),
                "l" => l = Some(value.parse::<u32>().map_err(|_| bad(()))?),
                "N" => n = Some(value.parse::<u64>().map_err(|_| bad(()))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad(()))?),
                "bucket_ms" => bucket_ms = Some(value.parse::<u64>().map_err(|_| bad(()))?),
                other => {
                    return Err(WorkloadError::Parse {
                        line: 1,
                        msg: format!("unknown header field '{other}'"),
                    })
                }
            }
        }
        let (Some(b), Some(l), Some(n), Some(seed), Some(bucket_ms)) = (b, l, n, seed, bucket_ms)
        else {
            return Err(WorkloadError::Parse { line: 1, msg: "incomplete header".into() });
        };

        let mut buckets: Vec<Vec<TraceRecord>> = Vec::new();
        buckets.resize(1usize << l.min(30), Vec::new());
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = idx + 2;
            let mut parts = line.split_whitespace();
            let parse_err = |msg: &str| WorkloadError::Parse { line: lineno, msg: msg.into() };
            let bucket: usize = parts
                .next()
                .ok_or_else(|| parse_err("missing bucket index"))?
                .parse()
                .map_err(|_| parse_err("bad bucket index"))?;
            let key: u64 = parts
                .next()
                .ok_or_else(|| parse_err("missing key"))?
                .parse()
                .map_err(|_| parse_err("bad key"))?;
            let lifetime = match parts.next().ok_or_else(|| parse_err("missing lifetime"))? {
                "inf" => None,
                ms => Some(ms.parse::<u64>().map_err(|_| parse_err("bad lifetime"))?),
            };
            if parts.next().is_some() {
                return Err(parse_err("trailing fields"));
            }
            if bucket >= buckets.len() {
                buckets.resize(bucket + 1, Vec::new());
            }
            buckets[bucket].push(TraceRecord { key, lifetime_ms: lifetime });
        }
        Ok(WorkloadTrace { b, l, n, seed, bucket_ms, buckets })
    }
}

/// Recursively split `volume` over `2^level` buckets. Per split the draw
/// order is fixed: the stochastic-rounding coin (only when the biased
/// share is fractional), then the fair coin choosing which side receives
/// it; then the left half is expanded before the right.
fn bisect(volume: u64, level: u32, b: f64, rng: &mut ChaCha8Rng, out: &mut Vec<u64>) {
    if level == 0 {
        out.push(volume);
        return;
    }
    let biased = b * volume as f64;
    let mut share = biased.floor() as u64;
    let frac = biased - share as f64;
    if frac > 0.0 && rng.random_bool(frac) {
        share += 1;
    }
    share = share.min(volume);
    let (left, right) = if rng.random_bool(0.5) {
        (share, volume - share)
    } else {
        (volume - share, share)
    };
    bisect(left, level - 1, b, rng, out);
    bisect(right, level - 1, b, rng, out);
}

/// Generate a full trace: bucket volumes by recursive bisection, keys as
/// a seeded permutation of `0..N`, one lifetime sample per record.
pub fn generate(
    params: &BModelParams,
    ltd: &LifetimeDistribution,
    bucket_ms: u64,
) -> Result<WorkloadTrace, WorkloadError> {
    BModelParams::new(params.b, params.l, params.n, params.seed)?;
    ltd.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut volumes = Vec::with_capacity(1 << params.l);
    bisect(params.n, params.l, params.b, &mut rng, &mut volumes);
    debug_assert_eq!(volumes.iter().sum::<u64>(), params.n);

    let mut keys: Vec<u64> = (0..params.n).collect();
    keys.shuffle(&mut rng);

    let mut next_key = keys.into_iter();
    let buckets = volumes
        .iter()
        .map(|&v| {
            (0..v)
                .map(|_| TraceRecord {
                    key: next_key.next().expect("volume conservation"),
                    lifetime_ms: ltd.sample(&mut rng),
                })
                .collect()
        })
        .collect();

    Ok(WorkloadTrace {
        b: params.b,
        l: params.l,
        n: params.n,
        seed: params.seed,
        bucket_ms,
        buckets,
    })
}

/// Constant-rate trace: `rate` arrivals in each of `n_buckets` buckets,
/// the distribution a `b = 0.5` bisection realises exactly.
pub fn uniform_trace(
    rate: u64,
    n_buckets: u64,
    bucket_ms: u64,
    ltd: &LifetimeDistribution,
    seed: u64,
) -> Result<WorkloadTrace, WorkloadError> {
    if rate == 0 || n_buckets == 0 {
        return Err(WorkloadError::InvalidParams(
            "rate and duration must be positive".into(),
        ));
    }
    ltd.validate()?;
    let n = rate * n_buckets;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keys: Vec<u64> = (0..n).collect();
    keys.shuffle(&mut rng);

    let mut next_key = keys.into_iter();
    let buckets = (0..n_buckets)
        .map(|_| {
            (0..rate)
                .map(|_| TraceRecord {
                    key: next_key.next().expect("exact volume"),
                    lifetime_ms: ltd.sample(&mut rng),
                })
                .collect()
        })
        .collect();

    Ok(WorkloadTrace {
        b: 0.5,
        l: (n_buckets as f64).log2().ceil() as u32,
        n,
        seed,
        bucket_ms,
        buckets,
    })
}
