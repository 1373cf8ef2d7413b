//! Benchmark result rows and their aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};

/// One (instance, method) run. Column order of the CSV follows field order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub map: String,
    pub agents: usize,
    pub method: String,
    pub seed: u64,
    pub success: bool,
    /// Validation verdict for a returned solution; true when nothing was returned.
    pub valid: bool,
    pub time_s: f64,
    pub budget_s: f64,
    /// Largest subproblem over agent count; 1 for raw runs.
    pub decomposition_rate: f64,
    pub subproblems: usize,
    pub prep_ms: f64,
    pub step1_ms: f64,
    pub step2_ms: f64,
    pub step3_ms: f64,
    pub step4_ms: f64,
    pub decomposition_ms: f64,
    pub high_expansions: u64,
    pub low_expansions: u64,
    pub makespan: Option<usize>,
    pub soc: Option<usize>,
    pub error: String,
}

pub fn write_records<W: io::Write>(out: W, records: &[BenchRecord]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const HEADER: [&str; 21] = [
    "map",
    "agents",
    "method",
    "seed",
    "success",
    "valid",
    "time_s",
    "budget_s",
    "decomposition_rate",
    "subproblems",
    "prep_ms",
    "step1_ms",
    "step2_ms",
    "step3_ms",
    "step4_ms",
    "decomposition_ms",
    "high_expansions",
    "low_expansions",
    "makespan",
    "soc",
    "error",
];

pub fn read_records<R: io::Read>(input: R) -> Result<Vec<BenchRecord>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Per (map, agents, method) summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub map: String,
    pub agents: usize,
    pub method: String,
    pub runs: usize,
    pub success_rate: f64,
    /// Mean wall time with failed runs counted at their budget.
    pub mean_time_s: f64,
    pub mean_decomposition_rate: f64,
    /// Over successful runs only; `None` if there were none.
    pub mean_makespan: Option<f64>,
    pub mean_soc: Option<f64>,
    pub max_decomposition_ms: f64,
    pub invalid: usize,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn aggregate(records: &[BenchRecord]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(String, usize, String), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.map.clone(), r.agents, r.method.clone())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((map, agents, method), rs)| {
            let ok: Vec<&&BenchRecord> = rs.iter().filter(|r| r.success).collect();
            Aggregate {
                map,
                agents,
                method,
                runs: rs.len(),
                success_rate: ok.len() as f64 / rs.len() as f64,
                mean_time_s: mean(rs.iter().map(|r| if r.success { r.time_s } else { r.budget_s })).unwrap_or(0.0),
                mean_decomposition_rate: mean(rs.iter().map(|r| r.decomposition_rate)).unwrap_or(0.0),
                mean_makespan: mean(ok.iter().filter_map(|r| r.makespan).map(|x| x as f64)),
                mean_soc: mean(ok.iter().filter_map(|r| r.soc).map(|x| x as f64)),
                max_decomposition_ms: rs.iter().map(|r| r.decomposition_ms).fold(0.0, f64::max),
                invalid: rs.iter().filter(|r| !r.valid).count(),
            }
        })
        .collect()
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.1}"));
        write!(
            f,
            "{:<16} {:>4} {:<17} runs={:<4} success={:.2} time={:.3}s rate={:.2} makespan={} soc={} decomp_max={:.1}ms invalid={}",
            self.map,
            self.agents,
            self.method,
            self.runs,
            self.success_rate,
            self.mean_time_s,
            self.mean_decomposition_rate,
            opt(self.mean_makespan),
            opt(self.mean_soc),
            self.max_decomposition_ms,
            self.invalid
        )
    }
}
