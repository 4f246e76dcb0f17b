//! `relmark report`: gather `metrics.csv` files from evaluation runs into a
//! combined CSV plus an SVG bar chart of micro-F1 per run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use serde::Serialize;

use crate::pipeline::write_manifest;

#[derive(Debug, clap::Args, Serialize)]
pub struct ReportArgs {
    /// Directory tree containing eval outputs (searched for metrics.csv)
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
struct RunScores {
    name: String,
    precision: f64,
    recall: f64,
    f1: f64,
}

fn find_metrics(root: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        entries.sort();
        for path in entries {
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "metrics.csv") {
                found.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}

fn parse_micro_row(path: &Path, root: &Path) -> Result<RunScores> {
    let text = std::fs::read_to_string(path)?;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("micro,") {
            let fields: Vec<&str> = rest.split(',').collect();
            ensure!(fields.len() >= 3, "malformed micro row in {}", path.display());
            let name = path
                .parent()
                .and_then(|p| p.strip_prefix(root).ok())
                .filter(|p| !p.as_os_str().is_empty())
                .map(|p| p.display().to_string().replace(std::path::MAIN_SEPARATOR, "/"))
                .unwrap_or_else(|| "run".to_string());
            return Ok(RunScores {
                name,
                precision: fields[0].parse()?,
                recall: fields[1].parse()?,
                f1: fields[2].parse()?,
            });
        }
    }
    anyhow::bail!("no micro row in {}", path.display())
}

/// Minimal hand-rolled SVG: one bar per run, y axis fixed to [0, 1].
fn svg_chart(runs: &[RunScores]) -> String {
    const BAR_W: i32 = 56;
    const GAP: i32 = 28;
    const LEFT: i32 = 56;
    const TOP: i32 = 24;
    const PLOT_H: i32 = 240;
    let width = LEFT + 16 + runs.len() as i32 * (BAR_W + GAP);
    let height = TOP + PLOT_H + 72;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        s,
        "  <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>"
    );
    // axes and horizontal grid lines every 0.2
    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let y = TOP + PLOT_H - (frac * PLOT_H as f64).round() as i32;
        let _ = writeln!(
            s,
            "  <line x1=\"{LEFT}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#ddd\"/>",
            width - 8
        );
        let _ = writeln!(
            s,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{frac:.1}</text>",
            LEFT - 6,
            y + 4
        );
    }
    let _ = writeln!(
        s,
        "  <line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{}\" stroke=\"black\"/>",
        TOP + PLOT_H
    );
    let _ = writeln!(
        s,
        "  <line x1=\"{LEFT}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        TOP + PLOT_H,
        width - 8,
        TOP + PLOT_H
    );
    let _ = writeln!(
        s,
        "  <text x=\"12\" y=\"{}\" transform=\"rotate(-90 12 {})\">micro-F1</text>",
        TOP + PLOT_H / 2,
        TOP + PLOT_H / 2
    );

    for (i, run) in runs.iter().enumerate() {
        let x = LEFT + 16 + i as i32 * (BAR_W + GAP);
        let h = (run.f1.clamp(0.0, 1.0) * PLOT_H as f64).round() as i32;
        let y = TOP + PLOT_H - h;
        let _ = writeln!(
            s,
            "  <rect x=\"{x}\" y=\"{y}\" width=\"{BAR_W}\" height=\"{h}\" fill=\"#4878cf\"/>"
        );
        let _ = writeln!(
            s,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.3}</text>",
            x + BAR_W / 2,
            y - 5,
            run.f1
        );
        let _ = writeln!(
            s,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            x + BAR_W / 2,
            TOP + PLOT_H + 18,
            xml_escape(&run.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn run(args: &ReportArgs) -> Result<()> {
    let files = find_metrics(&args.input)?;
    ensure!(
        !files.is_empty(),
        "no metrics.csv found under {}",
        args.input.display()
    );
    let runs: Vec<RunScores> = files
        .iter()
        .map(|f| parse_micro_row(f, &args.input))
        .collect::<Result<_>>()?;

    let mut csv = String::from("run,precision,recall,f1\n");
    for r in &runs {
        let _ = writeln!(csv, "{},{:.4},{:.4},{:.4}", r.name, r.precision, r.recall, r.f1);
    }
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("report.csv"), csv)?;
    std::fs::write(args.out.join("report.svg"), svg_chart(&runs))?;
    write_manifest(&args.out, "report", args)?;
    println!("collected {} runs into {}", runs.len(), args.out.display());
    Ok(())
}
