use std::time::Instant;

use super::Pipeline;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    /// Tokens per pass.
    pub tokens: usize,
    /// Wall-clock seconds of each timed pass.
    pub seconds: Vec<f64>,
    /// Median over passes.
    pub tokens_per_second: f64,
    pub peak_rss_bytes: Option<u64>,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// One untimed warm-up pass, then `runs` timed passes of the full pipeline
/// over `texts` on the calling thread.
pub fn benchmark(pipeline: &Pipeline, texts: &[String], runs: usize) -> BenchReport {
    let pass = || texts.iter().map(|t| pipeline.annotate_text(t).len()).sum::<usize>();
    let tokens = pass();
    let mut seconds = Vec::with_capacity(runs);
    let mut rates = Vec::with_capacity(runs);
    for _ in 0..runs {
        let start = Instant::now();
        let n = std::hint::black_box(pass());
        let elapsed = start.elapsed().as_secs_f64();
        seconds.push(elapsed);
        rates.push(n as f64 / elapsed.max(f64::MIN_POSITIVE));
    }
    BenchReport {
        tokens,
        seconds,
        tokens_per_second: median(&rates),
        peak_rss_bytes: peak_rss_bytes(),
    }
}

/// Peak resident set size of this process (`VmHWM`), where the OS reports it.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
