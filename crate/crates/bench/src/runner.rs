//! Scenario driver: replays a workload trace against a chosen structure
//! and expiration strategy under a simulated clock, aggregating wall time
//! and counters every fixed number of operations.

use std::hint::black_box;
use std::time::Instant;

use expire_treap::hash::mix64;
use expire_treap::{ExpirationTime, ExtendedComparator, KeyHasher, TreapSnapshot};

use crate::competitors::{
    strat_step, AvlTree, ExpirationStrategy, ExpiryHeap, HashIndex, KeyedIndex, RedBlackTree,
};
use crate::report::{BenchError, BenchReport, IntervalRow};
use crate::workload::{generate, uniform_trace, BModelParams, LifetimeDistribution, WorkloadTrace};

/// Bootstrap keys live far above workload keys (which are `0..N`).
const BOOTSTRAP_KEY_BASE: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    Treap,
    TreapHashed,
    Avl,
    AvlHeap,
    RedBlack,
    RedBlackHeap,
    Hash,
    HashHeap,
}

impl StructureKind {
    pub const ALL: [StructureKind; 8] = [
        StructureKind::Treap,
        StructureKind::TreapHashed,
        StructureKind::Avl,
        StructureKind::AvlHeap,
        StructureKind::RedBlack,
        StructureKind::RedBlackHeap,
        StructureKind::Hash,
        StructureKind::HashHeap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::Treap => "treap",
            StructureKind::TreapHashed => "treap-hashed",
            StructureKind::Avl => "avl",
            StructureKind::AvlHeap => "avl-heap",
            StructureKind::RedBlack => "red-black",
            StructureKind::RedBlackHeap => "red-black-heap",
            StructureKind::Hash => "hash",
            StructureKind::HashHeap => "hash-heap",
        }
    }

    pub fn parse(s: &str) -> Result<StructureKind, BenchError> {
        StructureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown structure '{s}'")))
    }

    pub fn uses_heap(self) -> bool {
        matches!(
            self,
            StructureKind::AvlHeap | StructureKind::RedBlackHeap | StructureKind::HashHeap
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    Maintenance,
    Lookup,
    Traversal,
}

impl MeasurementKind {
    pub fn name(self) -> &'static str {
        match self {
            MeasurementKind::Maintenance => "maintenance",
            MeasurementKind::Lookup => "lookup",
            MeasurementKind::Traversal => "traversal",
        }
    }

    pub fn parse(s: &str) -> Result<MeasurementKind, BenchError> {
        match s {
            "maintenance" => Ok(MeasurementKind::Maintenance),
            "lookup" => Ok(MeasurementKind::Lookup),
            "traversal" => Ok(MeasurementKind::Traversal),
            other => Err(BenchError::Config(format!("unknown measurement '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub structure: StructureKind,
    pub b: f64,
    pub l: u32,
    pub n: u64,
    pub lifetime: LifetimeDistribution,
    pub bucket_ms: u64,
    pub target_db_size: u64,
    pub ops_per_aggregation: u64,
    pub measurement: MeasurementKind,
    pub seed: u64,
    /// Sweep interval for bare structures (periodic cleansing). Defaults
    /// to the mean lifetime, the interval the RoE measure is defined
    /// over.
    pub cleanse_interval_ms: Option<u64>,
}

impl ScenarioConfig {
    pub fn defaults(structure: StructureKind) -> ScenarioConfig {
        ScenarioConfig {
            name: "scenario".into(),
            structure,
            b: 0.5,
            l: 6,
            n: 64_000,
            lifetime: LifetimeDistribution::Fixed(1000),
            bucket_ms: 100,
            target_db_size: 40_000,
            ops_per_aggregation: 80_000,
            measurement: MeasurementKind::Maintenance,
            seed: 0,
            cleanse_interval_ms: None,
        }
    }

    /// Steady-state scenario pinned to a Rate of Expiration: a fraction
    /// `roe` of the database churns with fixed lifetimes while the rest
    /// never expires, with arrivals sized to keep the churn population
    /// constant.
    pub fn for_roe(
        structure: StructureKind,
        target_db_size: u64,
        roe: f64,
        seed: u64,
    ) -> ScenarioConfig {
        assert!((0.0..=1.0).contains(&roe));
        let lifetime_ms = 1000u64;
        let bucket_ms = 100u64;
        let l = 6u32; // 64 buckets
        let churn = ((target_db_size as f64 * roe).round() as u64).max(1);
        // Arrivals per bucket that replace the churn population once per
        // lifetime.
        let per_bucket = (churn * bucket_ms / lifetime_ms).max(1);
        ScenarioConfig {
            name: format!("roe{}-{}", (roe * 100.0).round() as u64, structure.name()),
            structure,
            b: 0.5,
            l,
            n: per_bucket << l,
            lifetime: LifetimeDistribution::Fixed(lifetime_ms),
            bucket_ms,
            target_db_size,
            ops_per_aggregation: 80_000,
            measurement: MeasurementKind::Maintenance,
            seed,
            cleanse_interval_ms: None,
        }
    }

    /// Parse a `key=value` config file; `#` starts a comment.
    pub fn parse_kv(text: &str) -> Result<ScenarioConfig, BenchError> {
        let mut cfg = ScenarioConfig::defaults(StructureKind::Treap);
        let mut saw_structure = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                BenchError::Config(format!("line {}: expected key=value, got '{raw}'", i + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| BenchError::Config(format!("line {}: bad {what}: '{value}'", i + 1));
            match key {
                "name" => cfg.name = value.to_string(),
                "structure" => {
                    cfg.structure = StructureKind::parse(value)?;
                    saw_structure = true;
                }
                "b" => cfg.b = value.parse().map_err(|_| bad("bias"))?,
                "l" => cfg.l = value.parse().map_err(|_| bad("aggregation level"))?,
                "n" => cfg.n = value.parse().map_err(|_| bad("volume"))?,
                "lifetime" => cfg.lifetime = parse_lifetime(value)?,
                "bucket_ms" => cfg.bucket_ms = value.parse().map_err(|_| bad("bucket_ms"))?,
                "target_db_size" => {
                    cfg.target_db_size = value.parse().map_err(|_| bad("target_db_size"))?
                }
                "ops_per_aggregation" => {
                    cfg.ops_per_aggregation =
                        value.parse().map_err(|_| bad("ops_per_aggregation"))?
                }
                "measurement" => cfg.measurement = MeasurementKind::parse(value)?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
                "cleanse_interval_ms" => {
                    cfg.cleanse_interval_ms =
                        Some(value.parse().map_err(|_| bad("cleanse_interval_ms"))?)
                }
                other => return Err(BenchError::Config(format!("line {}: unknown key '{other}'", i + 1))),
            }
        }
        if !saw_structure {
            return Err(BenchError::Config("missing 'structure' key".into()));
        }
        if cfg.ops_per_aggregation == 0 {
            return Err(BenchError::Config("ops_per_aggregation must be positive".into()));
        }
        if cfg.bucket_ms == 0 {
            return Err(BenchError::Config("bucket_ms must be positive".into()));
        }
        Ok(cfg)
    }
}

/// Lifetime spec: `fixed:MS`, `uniform:LO:HI`, `exp:MEAN`, or `inf`.
pub fn parse_lifetime(spec: &str) -> Result<LifetimeDistribution, BenchError> {
    let bad = || BenchError::Config(format!("bad lifetime spec '{spec}'"));
    let mut parts = spec.split(':');
    let ltd = match parts.next().ok_or_else(bad)? {
        "fixed" => LifetimeDistribution::Fixed(
            parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?,
        ),
        "uniform" => LifetimeDistribution::UniformRange(
            parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?,
            parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?,
        ),
        "exp" => LifetimeDistribution::Exponential(
            parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?,
        ),
        "inf" => LifetimeDistribution::AlwaysInfinite,
        _ => return Err(bad()),
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    ltd.validate()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    Ok(ltd)
}

/// A structure under test, unified behind insert / expire / query.
enum Subject {
    Treap {
        current: TreapSnapshot<u64, u32>,
        cmp: ExtendedComparator,
        hasher: KeyHasher,
    },
    Indexed {
        index: Box<dyn KeyedIndex<u32>>,
        heap: Option<ExpiryHeap>,
        strategy: ExpirationStrategy,
    },
}

impl Subject {
    fn build(kind: StructureKind, seed: u64, cleanse_interval_ms: u64) -> Subject {
        let indexed = |index: Box<dyn KeyedIndex<u32>>, heap: bool| Subject::Indexed {
            heap: heap.then(ExpiryHeap::new),
            strategy: if heap {
                ExpirationStrategy::EagerHeap
            } else {
                ExpirationStrategy::periodic(cleanse_interval_ms)
            },
            index,
        };
        match kind {
            StructureKind::Treap | StructureKind::TreapHashed => Subject::Treap {
                current: TreapSnapshot::empty(),
                cmp: ExtendedComparator::new(seed),
                hasher: if kind == StructureKind::TreapHashed {
                    KeyHasher::Mixed { seed }
                } else {
                    KeyHasher::Identity
                },
            },
            StructureKind::Avl | StructureKind::AvlHeap => indexed(
                Box::new(AvlTree::new()),
                kind == StructureKind::AvlHeap,
            ),
            StructureKind::RedBlack | StructureKind::RedBlackHeap => indexed(
                Box::new(RedBlackTree::new()),
                kind == StructureKind::RedBlackHeap,
            ),
            StructureKind::Hash | StructureKind::HashHeap => indexed(
                Box::new(HashIndex::new()),
                kind == StructureKind::HashHeap,
            ),
        }
    }

    fn insert(&mut self, key: u64, exp: ExpirationTime, payload: u32) -> bool {
        match self {
            Subject::Treap { current, cmp, hasher } => {
                let key = hasher.apply(key);
                let next = current.insert(key, exp, payload, cmp);
                let inserted = next.len() > current.len();
                *current = next;
                inserted
            }
            Subject::Indexed { index, heap, .. } => {
                let inserted = index.insert(key, exp, payload);
                if inserted {
                    if let (Some(heap), Some(ms)) = (heap.as_mut(), exp.millis()) {
                        heap.push(ms, key);
                    }
                }
                inserted
            }
        }
    }

    /// One expiration step at `now`; returns records expelled.
    fn expire_step(&mut self, now_ms: u64) -> usize {
        match self {
            Subject::Treap { current, cmp, .. } => {
                let (next, expelled) = current.expire(now_ms, cmp);
                *current = next;
                expelled.len()
            }
            Subject::Indexed { index, heap, strategy } => {
                strat_step(index.as_mut(), heap.as_mut(), strategy, now_ms)
            }
        }
    }

    fn find(&self, key: u64) -> Option<u32> {
        match self {
            Subject::Treap { current, hasher, .. } => {
                current.find(&hasher.apply(key)).ok().copied()
            }
            Subject::Indexed { index, .. } => index.find(key).map(|(_, p)| *p),
        }
    }

    fn traverse_sum(&self) -> (u64, u64) {
        let mut visited = 0u64;
        let mut sum = 0u64;
        match self {
            Subject::Treap { current, .. } => {
                for (_, _, p) in current.iter() {
                    visited += 1;
                    sum = sum.wrapping_add(*p as u64);
                }
            }
            Subject::Indexed { index, .. } => {
                index.each_entry(&mut |_, _, p| {
                    visited += 1;
                    sum = sum.wrapping_add(*p as u64);
                });
            }
        }
        (visited, sum)
    }

    fn len(&self) -> u64 {
        match self {
            Subject::Treap { current, .. } => current.len() as u64,
            Subject::Indexed { index, .. } => index.len() as u64,
        }
    }

    fn heap_entries(&self) -> u64 {
        match self {
            Subject::Treap { .. } => 0,
            Subject::Indexed { heap, .. } => heap.as_ref().map_or(0, |h| h.len() as u64),
        }
    }

    fn tombstones(&self) -> u64 {
        match self {
            Subject::Treap { .. } => 0,
            Subject::Indexed { heap, .. } => heap.as_ref().map_or(0, |h| h.tombstones() as u64),
        }
    }
}

/// Deterministic payload so readers can validate what they find.
pub fn payload_for(key: u64) -> u32 {
    mix64(key) as u32
}

struct RowAccumulator {
    ops_per_row: u64,
    rows: Vec<IntervalRow>,
    started: Instant,
    ops_in_row: u64,
    inserts: u64,
    expirations: u64,
    removes: u64,
}

impl RowAccumulator {
    fn new(ops_per_row: u64) -> RowAccumulator {
        RowAccumulator {
            ops_per_row,
            rows: Vec::new(),
            started: Instant::now(),
            ops_in_row: 0,
            inserts: 0,
            expirations: 0,
            removes: 0,
        }
    }

    fn record(&mut self, inserts: u64, expirations: u64, subject: &Subject) {
        self.inserts += inserts;
        self.expirations += expirations;
        self.ops_in_row += inserts + expirations;
        if self.ops_in_row >= self.ops_per_row {
            self.flush(subject);
        }
    }

    fn flush(&mut self, subject: &Subject) {
        if self.ops_in_row == 0 {
            return;
        }
        let wall_ms = self.started.elapsed().as_secs_f64() * 1e3;
        self.rows.push(IntervalRow {
            interval_index: self.rows.len() as u64,
            wall_ms,
            inserts: self.inserts,
            expirations: self.expirations,
            removes: self.removes,
            live_size: subject.len(),
            heap_entries: subject.heap_entries(),
            tombstones: subject.tombstones(),
        });
        self.ops_in_row = 0;
        self.inserts = 0;
        self.expirations = 0;
        self.removes = 0;
        self.started = Instant::now();
    }
}

/// Pre-fill the subject to the target size so the replay starts in steady
/// state: the part of the population that the workload churn will replace
/// gets staggered finite expirations, the rest never expires.
fn bootstrap(subject: &mut Subject, cfg: &ScenarioConfig, trace: &WorkloadTrace) -> u64 {
    let target = cfg.target_db_size;
    if target == 0 {
        return 0;
    }
    let churn = match (cfg.lifetime.mean_ms(), trace.bucket_count()) {
        (Some(mean), buckets @ 1..) => {
            let duration_ms = buckets as u64 * cfg.bucket_ms;
            let per_ms = trace.total_records() as f64 / duration_ms as f64;
            ((per_ms * mean as f64).round() as u64).min(target)
        }
        _ => 0,
    };
    let permanent = target - churn;
    let mut finite_seeded = 0u64;
    for i in 0..target {
        let key = BOOTSTRAP_KEY_BASE + i;
        let exp = if i < permanent {
            ExpirationTime::INFINITY
        } else {
            let lifetime = cfg.lifetime.mean_ms().unwrap_or(1);
            let stagger = 1 + (finite_seeded * lifetime) / churn.max(1);
            finite_seeded += 1;
            ExpirationTime::finite(stagger)
        };
        subject.insert(key, exp, payload_for(key));
    }
    target
}

/// Replay `cfg`'s workload and aggregate a report. Operation counts per
/// row are deterministic for a fixed config and seed; wall times are not.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<BenchReport, BenchError> {
    let params = BModelParams::new(cfg.b, cfg.l, cfg.n, cfg.seed)
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let trace = generate(&params, &cfg.lifetime, cfg.bucket_ms)
        .map_err(|e| BenchError::Config(e.to_string()))?;
    match cfg.measurement {
        MeasurementKind::Maintenance => run_maintenance(cfg, &trace),
        MeasurementKind::Lookup => {
            let res = lookup_bench(cfg.structure, cfg.target_db_size, 100_000, cfg.seed);
            let mut report = BenchReport::default();
            report.summary = vec![
                ("db_size".into(), cfg.target_db_size as f64),
                ("lookups".into(), res.lookups as f64),
                ("lookup_total_ms".into(), res.total_ms),
                ("lookups_per_sec".into(), res.ops_per_sec),
            ];
            Ok(report)
        }
        MeasurementKind::Traversal => {
            let res = traversal_bench(cfg.structure, cfg.target_db_size, cfg.seed);
            let mut report = BenchReport::default();
            report.summary = vec![
                ("db_size".into(), cfg.target_db_size as f64),
                ("traversal_seconds".into(), res.seconds),
                ("records_visited".into(), res.visited as f64),
            ];
            Ok(report)
        }
    }
}

fn run_maintenance(cfg: &ScenarioConfig, trace: &WorkloadTrace) -> Result<BenchReport, BenchError> {
    if trace.is_empty() {
        return Ok(BenchReport::default());
    }
    let cleanse_ms = cfg
        .cleanse_interval_ms
        .or(cfg.lifetime.mean_ms())
        .unwrap_or(cfg.bucket_ms * 10);
    let mut subject = Subject::build(cfg.structure, cfg.seed, cleanse_ms);

    let initial_live = bootstrap(&mut subject, cfg, trace);
    let mut finite_live: u64 = match &subject {
        Subject::Treap { current, .. } => {
            current.iter().filter(|(_, e, _)| e.is_finite()).count() as u64
        }
        Subject::Indexed { index, .. } => {
            let mut n = 0;
            index.each_entry(&mut |_, e, _| n += u64::from(e.is_finite()));
            n
        }
    };

    let mut acc = RowAccumulator::new(cfg.ops_per_aggregation);
    let mut now_ms = 0u64;
    for (i, bucket) in trace.buckets.iter().enumerate() {
        now_ms = i as u64 * cfg.bucket_ms;
        for rec in bucket {
            let exp = match rec.lifetime_ms {
                Some(d) => ExpirationTime::finite(now_ms + d),
                None => ExpirationTime::INFINITY,
            };
            let inserted = subject.insert(rec.key, exp, payload_for(rec.key));
            debug_assert!(inserted, "workload keys are unique");
            finite_live += u64::from(exp.is_finite());
            let expelled = subject.expire_step(now_ms) as u64;
            finite_live -= expelled;
            acc.record(1, expelled, &subject);
        }
        // Interval boundary: periodic strategies sweep here.
        let expelled = subject.expire_step(now_ms) as u64;
        finite_live -= expelled;
        acc.record(0, expelled, &subject);
    }

    // Drain: advance simulated time until every finite record is gone, so
    // every strategy pays for the expirations its inserts implied.
    while finite_live > 0 {
        now_ms += cfg.bucket_ms;
        let expelled = subject.expire_step(now_ms) as u64;
        finite_live -= expelled;
        acc.record(0, expelled, &subject);
    }
    acc.flush(&subject);

    let mut report = BenchReport {
        initial_live,
        rows: acc.rows,
        summary: Vec::new(),
    };
    let durations: Vec<f64> = report.rows.iter().map(|r| r.wall_ms).collect();
    let total_ops: u64 = report
        .rows
        .iter()
        .map(|r| r.inserts + r.expirations + r.removes)
        .sum();
    let total_ms = report.total_wall_ms();
    report.summary = vec![
        ("total_wall_ms".into(), total_ms),
        ("total_ops".into(), total_ops as f64),
        (
            "ops_per_sec".into(),
            if total_ms > 0.0 { total_ops as f64 / (total_ms / 1e3) } else { 0.0 },
        ),
        ("intervals".into(), report.rows.len() as f64),
        ("mean_interval_ms".into(), mean(&durations)),
        ("p95_interval_ms".into(), percentile(&durations, 0.95)),
        ("peak_live".into(), report.peak_live() as f64),
        ("peak_mem_proxy".into(), report.peak_mem_proxy() as f64),
        (
            "total_expirations".into(),
            report.rows.iter().map(|r| r.expirations).sum::<u64>() as f64,
        ),
    ];
    Ok(report)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn percentile(xs: &[f64], p: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[idx]
}

pub struct LookupResult {
    pub lookups: u64,
    pub total_ms: f64,
    pub ops_per_sec: f64,
    /// First few probed keys, for determinism checks.
    pub probe_prefix: Vec<u64>,
}

/// Populate `db_size` records, then time `n_lookups` uniformly random
/// present-key lookups.
pub fn lookup_bench(
    kind: StructureKind,
    db_size: u64,
    n_lookups: u64,
    seed: u64,
) -> LookupResult {
    use rand::{Rng, SeedableRng};
    let mut subject = Subject::build(kind, seed, u64::MAX);
    for i in 0..db_size {
        let key = mix64(i);
        subject.insert(key, ExpirationTime::finite(1_000_000 + i), payload_for(key));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x1009);
    let probes: Vec<u64> = (0..n_lookups)
        .map(|_| mix64(rng.random_range(0..db_size.max(1))))
        .collect();
    let probe_prefix = probes.iter().take(16).copied().collect();

    let started = Instant::now();
    let mut hits = 0u64;
    for &key in &probes {
        hits += u64::from(black_box(subject.find(key)).is_some());
    }
    let total_ms = started.elapsed().as_secs_f64() * 1e3;
    assert_eq!(hits, n_lookups, "present-key lookups must all hit");
    LookupResult {
        lookups: n_lookups,
        total_ms,
        ops_per_sec: if total_ms > 0.0 { n_lookups as f64 / (total_ms / 1e3) } else { 0.0 },
        probe_prefix,
    }
}

pub struct TraversalResult {
    pub seconds: f64,
    pub visited: u64,
}

/// Populate `db_size` records, then time one full in-order traversal.
pub fn traversal_bench(kind: StructureKind, db_size: u64, seed: u64) -> TraversalResult {
    let mut subject = Subject::build(kind, seed, u64::MAX);
    for i in 0..db_size {
        let key = mix64(i);
        subject.insert(key, ExpirationTime::finite(1_000_000 + i), payload_for(key));
    }
    let started = Instant::now();
    let (visited, sum) = subject.traverse_sum();
    let seconds = started.elapsed().as_secs_f64();
    black_box(sum);
    TraversalResult { seconds, visited }
}

/// Build a uniform trace directly from scenario fields; used by tests
/// that want a trace without the b-model machinery.
pub fn uniform_for(cfg: &ScenarioConfig) -> Result<WorkloadTrace, BenchError> {
    let buckets = 1u64 << cfg.l;
    let rate = (cfg.n / buckets).max(1);
    uniform_trace(rate, buckets, cfg.bucket_ms, &cfg.lifetime, cfg.seed)
        .map_err(|e| BenchError::Config(e.to_string()))
}
