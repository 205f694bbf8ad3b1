//! Rendering samples as a human summary, JSON or CSV.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

use crate::stats::{regress, ErrorModel, Regression, Summary};
use crate::{BenchSpec, OutputFormat, Sample, Variant};

pub const CSV_HEADER: &str = "bench,variant,iterations,repetition,duration_ns,checksum";

/// Timing summary for one variant at one size.
#[derive(Debug, Clone, Serialize)]
pub struct Group {
    pub variant: Variant,
    pub iterations: u64,
    /// Milliseconds.
    pub summary: Summary,
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub groups: Vec<Group>,
    /// Choreographic median over handwritten median, per size.
    pub median_ratio: BTreeMap<u64, f64>,
    /// Choreographic minus handwritten time (ns) against iterations, over
    /// repetitions paired by index, with HC3 errors. Needs two or more sizes.
    pub overhead: Option<Regression>,
}

pub fn groups(samples: &[Sample]) -> BTreeMap<(u64, Variant), Vec<f64>> {
    let mut groups: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    for s in samples {
        groups
            .entry((s.iterations, s.variant))
            .or_default()
            .push(s.duration_ns as f64 / 1e6);
    }
    groups
}

/// Per-repetition overhead points `(iterations, choreographic - handwritten)`
/// in nanoseconds.
pub fn overhead_points(samples: &[Sample]) -> Vec<(f64, f64)> {
    let mut by_key: BTreeMap<(u64, usize), [Option<u64>; 2]> = BTreeMap::new();
    for s in samples {
        let slot = match s.variant {
            Variant::Handwritten => 0,
            Variant::Choreographic => 1,
        };
        by_key.entry((s.iterations, s.repetition)).or_default()[slot] = Some(s.duration_ns);
    }
    by_key
        .into_iter()
        .filter_map(|((iterations, _), pair)| match pair {
            [Some(h), Some(c)] => Some((iterations as f64, c as f64 - h as f64)),
            _ => None,
        })
        .collect()
}

pub fn overhead_regression(samples: &[Sample], confidence: f64) -> Option<Regression> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = overhead_points(samples).into_iter().unzip();
    regress(&xs, &ys, confidence, ErrorModel::Hc3)
}

pub fn analyze(samples: &[Sample]) -> Analysis {
    let groups: Vec<Group> = groups(samples)
        .into_iter()
        .filter_map(|((iterations, variant), ms)| {
            Summary::of(&ms).map(|summary| Group {
                variant,
                iterations,
                summary,
            })
        })
        .collect();
    let mut medians: BTreeMap<u64, [Option<f64>; 2]> = BTreeMap::new();
    for g in &groups {
        let slot = (g.variant == Variant::Choreographic) as usize;
        medians.entry(g.iterations).or_default()[slot] = Some(g.summary.median);
    }
    let median_ratio = medians
        .into_iter()
        .filter_map(|(n, m)| match m {
            [Some(h), Some(c)] if h > 0.0 => Some((n, c / h)),
            _ => None,
        })
        .collect();
    Analysis {
        groups,
        median_ratio,
        overhead: overhead_regression(samples, 0.95),
    }
}

pub fn write_csv(out: &mut impl Write, samples: &[Sample]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in samples {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.bench, s.variant, s.iterations, s.repetition, s.duration_ns, s.checksum
        )?;
    }
    Ok(())
}

pub fn write_json(out: &mut impl Write, samples: &[Sample]) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, samples)?;
    writeln!(out)
}

pub fn write_human(out: &mut impl Write, spec: &BenchSpec, samples: &[Sample]) -> io::Result<()> {
    let analysis = analyze(samples);
    write!(out, "{}", spec.bench)?;
    if let Some(t) = spec.transport {
        write!(out, " over {t}")?;
    }
    writeln!(
        out,
        ", {} timed repetitions after {} warm-up",
        spec.reps, spec.warmup
    )?;
    writeln!(
        out,
        "{:<14} {:>10} {:>11} {:>11} {:>11} {:>11} {:>11}",
        "variant", "size", "min ms", "p5 ms", "median ms", "p95 ms", "max ms"
    )?;
    for g in &analysis.groups {
        let s = &g.summary;
        writeln!(
            out,
            "{:<14} {:>10} {:>11.4} {:>11.4} {:>11.4} {:>11.4} {:>11.4}",
            g.variant.to_string(),
            g.iterations,
            s.min,
            s.p5,
            s.median,
            s.p95,
            s.max
        )?;
    }
    for (n, ratio) in &analysis.median_ratio {
        writeln!(out, "size {n}: choreographic/handwritten median = {ratio:.4}")?;
    }
    if let Some(r) = &analysis.overhead {
        writeln!(
            out,
            "overhead slope {:.3e} ns/iteration, {:.0}% CI [{:.3e}, {:.3e}], intercept {:.0} ns",
            r.slope,
            r.confidence * 100.0,
            r.slope_ci.0,
            r.slope_ci.1,
            r.intercept
        )?;
    }
    Ok(())
}

pub fn write(out: &mut impl Write, spec: &BenchSpec, samples: &[Sample]) -> io::Result<()> {
    match spec.output {
        OutputFormat::Human => write_human(out, spec, samples),
        OutputFormat::Json => write_json(out, samples),
        OutputFormat::Csv => write_csv(out, samples),
    }
}
