//! Figure families rendered from the CSVs of a run directory.

use std::path::Path;

use crate::error::Result;
use crate::svg::{heat_grid, letter_values, LinePlot};

/// Files written and plots skipped (with the reason).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlotReport {
    pub written: Vec<String>,
    pub problems: Vec<String>,
}

/// A CSV read as text with lookup by column name.
struct Table {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.iter().map(str::to_string).collect();
        let rows = r.records().collect::<std::result::Result<_, _>>()?;
        Ok(Self { headers, rows })
    }

    /// Parsed column, empty cells as `None`; `Err` names the missing column.
    fn column(&self, name: &str) -> std::result::Result<Vec<Option<f64>>, String> {
        let i = self.headers.iter().position(|h| h == name).ok_or_else(|| format!("missing column `{name}`"))?;
        Ok(self.rows.iter().map(|r| r.get(i).and_then(|v| v.parse().ok())).collect())
    }

    fn pairs(&self, x: &str, y: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
        let xs = self.column(x)?;
        let ys = self.column(y)?;
        Ok(xs.into_iter().zip(ys).filter_map(|(a, b)| Some((a?, b?))).collect())
    }
}

struct Renderer<'a> {
    out: &'a Path,
    report: PlotReport,
}

impl Renderer<'_> {
    /// Writes `name` if `build` succeeds, otherwise records why it was skipped.
    fn emit(&mut self, name: &str, build: impl FnOnce() -> std::result::Result<String, String>) -> Result<()> {
        match build() {
            Ok(svg) => {
                std::fs::write(self.out.join(name), svg)?;
                self.report.written.push(name.to_string());
            }
            Err(reason) => self.report.problems.push(format!("plot={name} reason=\"{reason}\"")),
        }
        Ok(())
    }
}

fn sorted_csvs(dir: &Path, prefix: &str) -> Result<Vec<(String, std::path::PathBuf)>> {
    let mut v = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if let Some(label) = name.strip_prefix(prefix).and_then(|n| n.strip_suffix(".csv")) {
            v.push((label.to_string(), path.clone()));
        }
    }
    v.sort();
    Ok(v)
}

pub fn render_dir(input: &Path, out: &Path) -> Result<PlotReport> {
    let mut r = Renderer { out, report: PlotReport::default() };

    let transcripts = sorted_csvs(input, "transcript_")?;
    let mut stats_overlay = LinePlot::new("normalized error rms by step", "k", "s1 = log2(1 + rms)", false, false);
    let mut eta_overlay = LinePlot::new("estimate vs cumulative dofs", "J_k", "eta_k", true, true);
    for (label, path) in &transcripts {
        let t = Table::read(path)?;
        r.emit(&format!("error_vs_dofs_{label}.svg"), || {
            Ok(LinePlot::new(&format!("{label}: estimate vs dofs"), "ndofs", "eta_k", true, true).with_series(label, t.pairs("ndofs", "eta_k")?).render())
        })?;
        r.emit(&format!("error_vs_cumulative_{label}.svg"), || {
            Ok(LinePlot::new(&format!("{label}: estimate vs cumulative dofs"), "J_k", "eta_k", true, true).with_series(label, t.pairs("J_k", "eta_k")?).render())
        })?;
        r.emit(&format!("actions_{label}.svg"), || {
            let mut p = LinePlot::new(&format!("{label}: actions"), "k", "parameter", false, false).with_series("theta", t.pairs("k", "theta")?);
            match t.pairs("k", "rho") {
                Ok(rho) if !rho.is_empty() => p = p.with_series("rho", rho),
                _ => {}
            }
            Ok(p.render())
        })?;
        r.emit(&format!("stats_{label}.svg"), || {
            Ok(LinePlot::new(&format!("{label}: observation statistics"), "k", "value", false, false)
                .with_series("s1", t.pairs("k", "s1")?)
                .with_series("s2", t.pairs("k", "s2")?)
                .render())
        })?;
        if let Ok(p) = t.pairs("k", "s1") {
            stats_overlay = stats_overlay.with_series(label, p);
        }
        if let Ok(p) = t.pairs("J_k", "eta_k") {
            eta_overlay = eta_overlay.with_series(label, p);
        }
    }
    if transcripts.len() > 1 {
        r.emit("stats_overlay.svg", || Ok(stats_overlay.render()))?;
        r.emit("error_vs_cumulative_overlay.svg", || Ok(eta_overlay.render()))?;
    }

    let summary_path = input.join("sweep_summary.csv");
    if summary_path.exists() {
        let t = Table::read(&summary_path)?;
        r.emit("sweep_landscape.svg", || {
            let theta = t.column("theta")?;
            let rho = t.column("rho")?;
            let cost = t.column("mean_cost")?;
            if rho.iter().all(Option::is_none) {
                let pts = theta.iter().zip(&cost).filter_map(|(a, b)| Some(((*a)?, (*b)?))).collect();
                return Ok(LinePlot::new("sweep: mean final cost", "theta", "cost", false, false).with_series("mean cost", pts).render());
            }
            let mut xs: Vec<f64> = theta.iter().flatten().copied().collect();
            let mut ys: Vec<f64> = rho.iter().flatten().copied().collect();
            for v in [&mut xs, &mut ys] {
                v.sort_by(f64::total_cmp);
                v.dedup();
            }
            let mut grid = vec![vec![f64::NAN; xs.len()]; ys.len()];
            for ((t, r), c) in theta.iter().zip(&rho).zip(&cost) {
                if let (Some(t), Some(r)) = (t, r) {
                    let col = xs.iter().position(|x| x == t).expect("theta listed");
                    let row = ys.iter().position(|y| y == r).expect("rho listed");
                    grid[row][col] = c.unwrap_or(f64::NAN);
                }
            }
            Ok(heat_grid("sweep: mean final cost", "theta", "rho", &xs, &ys, &grid))
        })?;
        let lv_path = input.join("sweep_letter_values.csv");
        r.emit("sweep_letter_values.svg", || {
            if !lv_path.exists() {
                return Err("missing sweep_letter_values.csv".into());
            }
            let lv = Table::read(&lv_path).map_err(|e| e.to_string())?;
            let (lt, lr, lo, hi) = (lv.column("theta")?, lv.column("rho")?, lv.column("lower")?, lv.column("upper")?);
            let (st, sr, med) = (t.column("theta")?, t.column("rho")?, t.column("median_cost")?);
            let groups = st
                .iter()
                .zip(&sr)
                .zip(&med)
                .filter_map(|((th, rh), m)| {
                    let boxes: Vec<(f64, f64)> = (0..lt.len())
                        .filter(|&i| lt[i] == *th && lr[i] == *rh)
                        .filter_map(|i| Some((lo[i]?, hi[i]?)))
                        .collect();
                    let th = (*th)?;
                    let name = match rh {
                        Some(r) => format!("{th}/{r}"),
                        None => format!("{th}"),
                    };
                    Some((name, (*m)?, boxes))
                })
                .collect::<Vec<_>>();
            Ok(letter_values("sweep: final cost letter values", "cost", &groups))
        })?;
    }

    let training_path = input.join("training.csv");
    if training_path.exists() {
        let t = Table::read(&training_path)?;
        r.emit("training_curve.svg", || {
            Ok(LinePlot::new("training: mean episode cost", "batch", "cost", false, false).with_series("mean cost", t.pairs("batch", "mean_cost")?).render())
        })?;
    }

    let compare_path = input.join("compare.csv");
    if compare_path.exists() {
        let t = Table::read(&compare_path)?;
        r.emit("compare_exponent.svg", || {
            let e = t.column("exponent")?;
            let pts = e.iter().enumerate().filter_map(|(i, v)| Some((i as f64, (*v)?))).collect();
            Ok(LinePlot::new("improvement exponent by problem", "problem index", "log2 factor", false, false).with_series("exponent", pts).render())
        })?;
    }
    Ok(r.report)
}
