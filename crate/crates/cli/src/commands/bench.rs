use std::time::Instant;

use geoguide::random::{derive_seed, stream_rng, BoxMuller};
use geoguide::{extract_subspace, geodesic_flow, q_matrix, Matrix};

use crate::args::BenchArgs;
use crate::config::write_text;
use crate::error::{CliError, CliResult};
use crate::stats::{log_log_slope, median};

pub const BENCH_HEADER: &str = "n,d,op,median_ms,slope_hint";
pub const OPS: [&str; 4] = ["subspace", "flow", "q", "total"];

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub d: usize,
    pub op: &'static str,
    pub median_ms: f64,
    /// Log-log slopes of this op's timings along d (fixed n) and along n
    /// (fixed d). Informational only.
    pub slope_hint: String,
}

fn gaussian(n: usize, d: usize, seed: u64) -> Matrix {
    let mut g = BoxMuller::new(stream_rng(seed, 0));
    Matrix::from_fn(n, d, |_, _| g.sample())
}

/// Subspace dimension timed at batch size `n` and ambient `d`.
pub fn bench_k(n: usize, d: usize) -> usize {
    (n.min(d) / 4).clamp(1, d - 1)
}

fn time_once(a: &Matrix, b: &Matrix, k: usize) -> CliResult<[f64; 4]> {
    let t0 = Instant::now();
    let p = extract_subspace(a, k)?;
    let q = extract_subspace(b, k)?;
    let t1 = Instant::now();
    let flow = geodesic_flow(&p, &q)?;
    let t2 = Instant::now();
    let metric = q_matrix(&flow);
    let t3 = Instant::now();
    std::hint::black_box(metric);
    let ms = |from: Instant, to: Instant| (to - from).as_secs_f64() * 1e3;
    Ok([ms(t0, t1), ms(t1, t2), ms(t2, t3), ms(t0, t3)])
}

pub fn run_bench(dims: &[usize], batches: &[usize], trials: usize, seed: u64) -> CliResult<Vec<BenchRow>> {
    if dims.is_empty() || batches.is_empty() || trials == 0 {
        return Err(CliError::Usage("--dims, --batches and --trials must be non-empty and positive".into()));
    }
    if let Some(d) = dims.iter().find(|&&d| d < 2) {
        return Err(CliError::Usage(format!("dimension {d} leaves no room for a proper subspace")));
    }
    if batches.contains(&0) {
        return Err(CliError::Usage("batch sizes must be positive".into()));
    }
    let mut rows = Vec::new();
    for &n in batches {
        for &d in dims {
            let a = gaussian(n, d, derive_seed(seed, n as u64, 2 * d as u64));
            let b = gaussian(n, d, derive_seed(seed, n as u64, 2 * d as u64 + 1));
            let k = bench_k(n, d);
            // one untimed warm-up
            time_once(&a, &b, k)?;
            let mut samples = vec![Vec::with_capacity(trials); OPS.len()];
            for _ in 0..trials {
                for (s, t) in samples.iter_mut().zip(time_once(&a, &b, k)?) {
                    s.push(t);
                }
            }
            for (op, s) in OPS.iter().zip(&samples) {
                rows.push(BenchRow { n, d, op, median_ms: median(s), slope_hint: String::new() });
            }
        }
    }
    let fmt = |s: Option<f64>| s.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
    let snapshot = rows.clone();
    for row in &mut rows {
        let along = |fixed_n: bool| {
            let pts: Vec<(f64, f64)> = snapshot
                .iter()
                .filter(|r| r.op == row.op && if fixed_n { r.n == row.n } else { r.d == row.d })
                .map(|r| ((if fixed_n { r.d } else { r.n }) as f64, r.median_ms))
                .collect();
            log_log_slope(&pts)
        };
        row.slope_hint = format!("d:{} n:{}", fmt(along(true)), fmt(along(false)));
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{BENCH_HEADER}\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{:.6},{}\n", r.n, r.d, r.op, r.median_ms, r.slope_hint));
    }
    out
}

pub fn cmd_bench(a: &BenchArgs) -> CliResult<Vec<BenchRow>> {
    let rows = run_bench(&a.dims, &a.batches, a.trials, a.seed)?;
    let csv = bench_csv(&rows);
    if let Some(out) = &a.out {
        write_text(out, &csv)?;
    }
    print!("{csv}");
    Ok(rows)
}
