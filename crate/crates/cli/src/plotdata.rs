//! Two-column plot files derived from the tables listed in a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qdx_core::Error;

use crate::output::{num, Manifest};
use crate::schema;

struct Table {
    name: String,
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path, name: &str) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Table {
            name: name.to_string(),
            header,
            rows,
        })
    }

    fn column(&self, col: &str) -> Result<usize> {
        self.header.iter().position(|h| h == col).ok_or_else(|| {
            Error::Schema {
                file: self.name.clone(),
                reason: format!("missing column `{col}`"),
            }
            .into()
        })
    }

    fn values(&self, col: &str) -> Result<Vec<f64>> {
        let i = self.column(col)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, rec)| {
                let s = rec.get(i).unwrap_or("");
                s.parse::<f64>().map_err(|_| {
                    Error::Schema {
                        file: self.name.clone(),
                        reason: format!("row {}: column `{col}` holds {s:?}, not a number", r + 1),
                    }
                    .into()
                })
            })
            .collect()
    }
}

struct PlotFile {
    name: String,
    x: &'static str,
    y: &'static str,
    points: Vec<(f64, f64)>,
}

fn write_plot(dir: &Path, p: &PlotFile) -> Result<PathBuf> {
    let mut text = format!("# {} {}\n", p.x, p.y);
    for (x, y) in &p.points {
        text.push_str(&format!("{} {}\n", num(*x), num(*y)));
    }
    let path = dir.join(&p.name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Splits `(key, x, y)` triples into one plot per key, in first-seen order.
/// Points with a non-positive `y` are dropped before taking logs.
fn grouped_log_plots(
    stem: &str,
    tag: &str,
    keys: &[f64],
    x: &[f64],
    y: &[f64],
    labels: (&'static str, &'static str),
) -> Vec<PlotFile> {
    let mut order: Vec<f64> = Vec::new();
    for k in keys {
        if !order.contains(k) {
            order.push(*k);
        }
    }
    if order.is_empty() {
        return vec![PlotFile {
            name: format!("{stem}_{}_{}.txt", labels.0, labels.1),
            x: labels.0,
            y: labels.1,
            points: Vec::new(),
        }];
    }
    order
        .iter()
        .enumerate()
        .map(|(g, key)| PlotFile {
            name: format!("{stem}_{tag}{g:02}_{}_{}.txt", labels.0, labels.1),
            x: labels.0,
            y: labels.1,
            points: keys
                .iter()
                .zip(x.iter().zip(y))
                .filter(|(k, (_, v))| *k == key && **v > 0.0)
                .map(|(_, (a, b))| (a.ln(), b.ln()))
                .collect(),
        })
        .collect()
}

fn plots_for(schema_id: &str, stem: &str, t: &Table) -> Result<Vec<PlotFile>> {
    let log_pairs = |xs: &[f64], ys: &[f64]| -> Vec<(f64, f64)> {
        xs.iter()
            .zip(ys)
            .filter(|(_, y)| **y > 0.0)
            .map(|(x, y)| (*x, y.ln()))
            .collect()
    };
    Ok(match schema_id {
        id if id == schema::BANDS.id => vec![PlotFile {
            name: format!("{stem}_m_log_width.txt"),
            x: "m",
            y: "log_width",
            points: log_pairs(&t.values("m")?, &t.values("width")?),
        }],
        id if id == schema::PROBABILITIES.id => grouped_log_plots(
            stem,
            "alpha",
            &t.values("alpha")?,
            &t.values("t")?,
            &t.values("probability")?,
            ("log_t", "log_P"),
        ),
        id if id == schema::OUTSIDE.id => grouped_log_plots(
            stem,
            "n",
            &t.values("n")?,
            &t.values("t")?,
            &t.values("both")?,
            ("log_t", "log_P"),
        ),
        id if id == schema::MOMENTS.id => grouped_log_plots(
            stem,
            "p",
            &t.values("p")?,
            &t.values("t")?,
            &t.values("moment")?,
            ("log_t", "log_M"),
        ),
        id if id == schema::DIMENSION.id => {
            let l = t.values("lambda")?;
            let d = t.values("dimension")?;
            vec![PlotFile {
                name: format!("{stem}_log_lambda_dim_log_lambda.txt"),
                x: "log_lambda",
                y: "dim_log_lambda",
                points: l.iter().zip(&d).map(|(l, d)| (l.ln(), d * l.ln())).collect(),
            }]
        }
        id if id == schema::SPREADING.id => {
            let a = t.values("alpha")?;
            let plus = t.values("s_plus")?;
            let minus = t.values("s_minus")?;
            vec![
                PlotFile {
                    name: format!("{stem}_alpha_s_plus.txt"),
                    x: "alpha",
                    y: "s_plus",
                    points: a.iter().copied().zip(plus).collect(),
                },
                PlotFile {
                    name: format!("{stem}_alpha_s_minus.txt"),
                    x: "alpha",
                    y: "s_minus",
                    points: a.iter().copied().zip(minus).collect(),
                },
            ]
        }
        _ => Vec::new(),
    })
}

/// Writes plot files into `plot/` beside the manifest and returns their paths.
pub fn emit_plotdata(manifest_path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Schema {
        file: manifest_path.display().to_string(),
        reason: e.to_string(),
    })?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let plot_dir = dir.join("plot");
    fs::create_dir_all(&plot_dir)?;
    let mut written = Vec::new();
    for entry in &manifest.files {
        let Some(s) = schema::lookup(&entry.schema) else {
            return Err(Error::Schema {
                file: entry.path.clone(),
                reason: format!("undeclared schema `{}`", entry.schema),
            }
            .into());
        };
        if s.columns.is_empty() {
            continue;
        }
        let table = Table::read(&dir.join(&entry.path), &entry.path)?;
        let stem = entry.path.trim_end_matches(".csv");
        for p in plots_for(s.id, stem, &table)? {
            written.push(write_plot(&plot_dir, &p)?);
        }
    }
    Ok(written)
}
