//! Experimental curve ingestion, the averaging/zeroing pipeline, and
//! the error metrics comparing predictions against measurements.

use std::fmt::Write as _;
use std::io::BufRead;

/// Ordered (tip displacement mm, reaction force N) samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FDCurve {
    pub samples: Vec<(f64, f64)>,
    pub label: String,
}

impl FDCurve {
    pub fn new(samples: Vec<(f64, f64)>, label: impl Into<String>) -> Self {
        FDCurve {
            samples,
            label: label.into(),
        }
    }

    pub fn displacements(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    /// Checks the curve invariants: strictly increasing displacements,
    /// finite values, first displacement >= 0.
    pub fn check(&self) -> Result<(), ValidationError> {
        if self.samples.is_empty() {
            return Err(ValidationError::Integrity("curve has no samples".into()));
        }
        if self.samples[0].0 < 0.0 {
            return Err(ValidationError::Integrity(format!(
                "first displacement {} is negative",
                self.samples[0].0
            )));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !(s.0.is_finite() && s.1.is_finite()) {
                return Err(ValidationError::Integrity(format!(
                    "non-finite sample at index {i}"
                )));
            }
            if i > 0 && s.0 <= self.samples[i - 1].0 {
                return Err(ValidationError::Integrity(format!(
                    "displacements not strictly increasing at index {i} ({} after {})",
                    s.0,
                    self.samples[i - 1].0
                )));
            }
        }
        Ok(())
    }
}

/// Error metrics for one prediction-vs-experiment comparison. All
/// statistics are over absolute differences, so
/// `0 <= min_diff <= mae <= rmse <= max_diff`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub label: String,
    pub mae: f64,
    pub rmse: f64,
    pub max_diff: f64,
    pub min_diff: f64,
    /// Sample standard deviation (n - 1 divisor) of the differences.
    pub std_diff: f64,
    pub n: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ValidationError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("curve integrity violation: {0}")]
    Integrity(String),
    #[error("grid mismatch: {0}")]
    Grid(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("I/O failure on {destination}: {source}")]
    Io {
        destination: String,
        #[source]
        source: std::io::Error,
    },
}

/// Parses a curve from CSV with header `displacement_mm,force_n`.
/// Accepts LF or CRLF line endings; blank trailing lines are ignored.
pub fn load_curve_csv<R: std::io::Read>(
    reader: R,
    label: impl Into<String>,
) -> Result<FDCurve, ValidationError> {
    let buf = std::io::BufReader::new(reader);
    let mut samples = Vec::new();
    let mut lines = 0usize;
    for (idx, line) in buf.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| ValidationError::Io {
            destination: "<csv input>".into(),
            source,
        })?;
        let line = line.trim_end_matches('\r').trim();
        if idx == 0 {
            if line != "displacement_mm,force_n" {
                return Err(ValidationError::Parse {
                    line: 1,
                    message: format!(
                        "expected header 'displacement_mm,force_n', got '{line}'"
                    ),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        lines += 1;
        let mut parts = line.split(',');
        let parse = |field: Option<&str>, name: &str| -> Result<f64, ValidationError> {
            field
                .ok_or(())
                .and_then(|s| s.trim().parse::<f64>().map_err(|_| ()))
                .map_err(|_| ValidationError::Parse {
                    line: line_no,
                    message: format!("malformed {name} in '{line}'"),
                })
        };
        let d = parse(parts.next(), "displacement")?;
        let f = parse(parts.next(), "force")?;
        if parts.next().is_some() {
            return Err(ValidationError::Parse {
                line: line_no,
                message: format!("expected 2 columns in '{line}'"),
            });
        }
        if let Some(&(prev, _)) = samples.last() {
            if d <= prev {
                return Err(ValidationError::Integrity(format!(
                    "displacement {d} at line {line_no} not greater than previous {prev}"
                )));
            }
        }
        samples.push((d, f));
    }
    if lines == 0 {
        return Err(ValidationError::Integrity("empty CSV body".into()));
    }
    let curve = FDCurve::new(samples, label);
    curve.check()?;
    Ok(curve)
}

/// Loads a curve CSV from a file path, labeling it by the file stem.
pub fn load_curve_file(path: &std::path::Path) -> Result<FDCurve, ValidationError> {
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = std::fs::File::open(path).map_err(|source| ValidationError::Io {
        destination: path.display().to_string(),
        source,
    })?;
    load_curve_csv(file, label)
}

/// Subtracts the first sample's force from every sample, mirroring the
/// force-gauge zeroing step. Idempotent.
pub fn zero_offset(curve: &FDCurve) -> FDCurve {
    let offset = curve.samples.first().map(|s| s.1).unwrap_or(0.0);
    FDCurve {
        samples: curve
            .samples
            .iter()
            .map(|&(d, f)| (d, f - offset))
            .collect(),
        label: curve.label.clone(),
    }
}

/// Pointwise arithmetic mean of several runs on identical displacement
/// grids. A single run is returned unchanged.
pub fn average_runs(runs: &[FDCurve]) -> Result<FDCurve, ValidationError> {
    let first = runs
        .first()
        .ok_or_else(|| ValidationError::Domain("no runs to average".into()))?;
    for (r_idx, run) in runs.iter().enumerate().skip(1) {
        if run.samples.len() != first.samples.len() {
            return Err(ValidationError::Grid(format!(
                "run {r_idx} has {} samples, run 0 has {}",
                run.samples.len(),
                first.samples.len()
            )));
        }
        for (i, (a, b)) in first.samples.iter().zip(&run.samples).enumerate() {
            if a.0 != b.0 {
                return Err(ValidationError::Grid(format!(
                    "run {r_idx} displacement {} differs from run 0 displacement {} at sample {i}",
                    b.0, a.0
                )));
            }
        }
    }
    let n = runs.len() as f64;
    let samples = first
        .samples
        .iter()
        .enumerate()
        .map(|(i, &(d, _))| {
            let mean = runs.iter().map(|r| r.samples[i].1).sum::<f64>() / n;
            (d, mean)
        })
        .collect();
    Ok(FDCurve {
        samples,
        label: first.label.clone(),
    })
}

/// Piecewise-linear resampling of a curve onto `grid`. Every grid
/// point must lie within the curve's displacement range.
pub fn resample(curve: &FDCurve, grid: &[f64]) -> Result<FDCurve, ValidationError> {
    curve.check()?;
    let (lo, _) = curve.samples[0];
    let (hi, _) = *curve.samples.last().unwrap();
    let mut samples = Vec::with_capacity(grid.len());
    for &g in grid {
        if g < lo || g > hi {
            return Err(ValidationError::Range(format!(
                "grid point {g} outside curve range [{lo}, {hi}]"
            )));
        }
        let idx = curve.samples.partition_point(|s| s.0 < g);
        let f = if idx < curve.samples.len() && curve.samples[idx].0 == g {
            curve.samples[idx].1
        } else {
            let (d0, f0) = curve.samples[idx - 1];
            let (d1, f1) = curve.samples[idx];
            f0 + (f1 - f0) * (g - d0) / (d1 - d0)
        };
        samples.push((g, f));
    }
    Ok(FDCurve {
        samples,
        label: curve.label.clone(),
    })
}

/// Computes the error metrics between a predicted and a measured curve
/// on identical grids. The displacement-0 sample, where both forces
/// are pinned to zero, is excluded; at least 2 samples must remain.
pub fn compute_metrics(fe: &FDCurve, exp: &FDCurve) -> Result<MetricsReport, ValidationError> {
    if fe.samples.len() != exp.samples.len() {
        return Err(ValidationError::Grid(format!(
            "curves have {} and {} samples",
            fe.samples.len(),
            exp.samples.len()
        )));
    }
    let mut diffs = Vec::new();
    for (i, (a, b)) in fe.samples.iter().zip(&exp.samples).enumerate() {
        if a.0 != b.0 {
            return Err(ValidationError::Grid(format!(
                "displacement {} vs {} at sample {i}",
                a.0, b.0
            )));
        }
        if a.0 == 0.0 {
            continue;
        }
        diffs.push((a.1 - b.1).abs());
    }
    let n = diffs.len();
    if n < 2 {
        return Err(ValidationError::Domain(format!(
            "need at least 2 non-zero-displacement samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mae = diffs.iter().sum::<f64>() / nf;
    let rmse = (diffs.iter().map(|d| d * d).sum::<f64>() / nf).sqrt();
    let max_diff = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_diff = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
    let std_diff =
        (diffs.iter().map(|d| (d - mae) * (d - mae)).sum::<f64>() / (nf - 1.0)).sqrt();
    Ok(MetricsReport {
        label: fe.label.clone(),
        mae,
        rmse,
        max_diff,
        min_diff,
        std_diff,
        n,
    })
}

/// Renders the fixed-column comparison table, one row per material.
pub fn render_report(reports: &[MetricsReport]) -> Result<String, ValidationError> {
    if reports.is_empty() {
        return Err(ValidationError::Domain("no reports to render".into()));
    }
    let mut out = String::new();
    writeln!(
        out,
        "{:<12}{:>8}{:>8}{:>10}{:>10}{:>10}",
        "Model", "MAE", "RMSE", "Max Diff", "Min Diff", "Std Dev"
    )
    .unwrap();
    for r in reports {
        writeln!(
            out,
            "{:<12}{:>8.2}{:>8.2}{:>10.2}{:>10.2}{:>10.2}",
            r.label, r.mae, r.rmse, r.max_diff, r.min_diff, r.std_diff
        )
        .unwrap();
    }
    Ok(out)
}

/// Writes a standalone SVG overlaying the given curves: one polyline
/// per curve, a legend from the labels, axes spanning the data with a
/// 5% margin.
pub fn emit_overlay_svg(curves: &[FDCurve]) -> Result<String, ValidationError> {
    if curves.is_empty() {
        return Err(ValidationError::Domain("no curves to plot".into()));
    }
    for c in curves {
        c.check()?;
    }
    const W: f64 = 720.0;
    const H: f64 = 480.0;
    const ML: f64 = 70.0;
    const MR: f64 = 150.0;
    const MT: f64 = 30.0;
    const MB: f64 = 60.0;
    const COLORS: [&str; 8] = [
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    ];

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for c in curves {
        for &(d, f) in &c.samples {
            x_min = x_min.min(d);
            x_max = x_max.max(d);
            y_min = y_min.min(f);
            y_max = y_max.max(f);
        }
    }
    let pad = |lo: &mut f64, hi: &mut f64| {
        let span = (*hi - *lo).max(1e-12);
        *lo -= 0.05 * span;
        *hi += 0.05 * span;
    };
    pad(&mut x_min, &mut x_max);
    pad(&mut y_min, &mut y_max);

    let sx = |x: f64| ML + (x - x_min) / (x_max - x_min) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y_min) / (y_max - y_min) * (H - MT - MB);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    // Axes.
    writeln!(
        svg,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        ML,
        H - MB,
        W - MR,
        H - MB
    )
    .unwrap();
    writeln!(
        svg,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        ML,
        MT,
        ML,
        H - MB
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">Tip displacement (mm)</text>"#,
        (ML + W - MR) / 2.0,
        H - 15.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 18 {})">Force (N)</text>"#,
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    )
    .unwrap();
    // Tick labels at the data extremes.
    writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{:.1}</text>"#,
        sx(x_min),
        H - MB + 18.0,
        x_min
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{:.1}</text>"#,
        sx(x_max),
        H - MB + 18.0,
        x_max
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{:.2}</text>"#,
        ML - 6.0,
        sy(y_min) + 4.0,
        y_min
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{:.2}</text>"#,
        ML - 6.0,
        sy(y_max) + 4.0,
        y_max
    )
    .unwrap();

    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = c
            .samples
            .iter()
            .map(|&(d, f)| format!("{:.3},{:.3}", sx(d), sy(f)))
            .collect();
        writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.8" points="{}"/>"#,
            color,
            points.join(" ")
        )
        .unwrap();
        let ly = MT + 20.0 * i as f64;
        writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="1.8"/>"#,
            W - MR + 10.0,
            ly,
            W - MR + 34.0,
            ly,
            color
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
            W - MR + 40.0,
            ly + 4.0,
            if c.label.is_empty() {
                format!("curve {i}")
            } else {
                c.label.clone()
            }
        )
        .unwrap();
    }
    writeln!(svg, "</svg>").unwrap();
    Ok(svg)
}

/// Serializes a curve to the CSV exchange format.
pub fn curve_to_csv(curve: &FDCurve) -> String {
    let mut out = String::from("displacement_mm,force_n\n");
    for &(d, f) in &curve.samples {
        writeln!(out, "{d:.6},{f:.6}").unwrap();
    }
    out
}
