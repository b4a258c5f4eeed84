//! Plot-ready SVG from experiment CSVs.
//!
//! The chart type follows from the columns unless `kind` is given:
//!
//! | kind          | required columns                              |
//! |---------------|-----------------------------------------------|
//! | `capacity`    | `eps, energy, energy_se, C_fit`               |
//! | `rho2`        | `distance, value, std_error, oracle`          |
//! | `rho1`        | `x_lo, x_hi, value, std_error`                |
//! | `hitting`     | `alpha, hit_fraction, ci_low, ci_high`        |
//! | `convergence` | `N, rho1, std_error, rho_det`                 |

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::svg::{Figure, Series};
use crate::{CliError, Context};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Capacity,
    Rho2,
    Rho1,
    Hitting,
    Convergence,
}

impl Kind {
    const ALL: [Kind; 5] = [Kind::Capacity, Kind::Rho2, Kind::Rho1, Kind::Hitting, Kind::Convergence];

    fn columns(self) -> &'static [&'static str] {
        match self {
            Kind::Capacity => &["eps", "energy", "energy_se", "C_fit"],
            Kind::Rho2 => &["distance", "value", "std_error", "oracle"],
            Kind::Rho1 => &["x_lo", "x_hi", "value", "std_error"],
            Kind::Hitting => &["alpha", "hit_fraction", "ci_low", "ci_high"],
            Kind::Convergence => &["N", "rho1", "std_error", "rho_det"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub input: PathBuf,
    #[serde(default)]
    pub kind: Option<Kind>,
    /// File name inside the output directory; `<input stem>.svg` by default.
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub kind: Kind,
    pub input: PathBuf,
    pub output: String,
    pub n_rows: usize,
}

struct Table {
    raw: String,
    index: HashMap<String, usize>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(text: String) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let index = r
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect::<HashMap<_, _>>();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()?;
        if index.is_empty() || rows.is_empty() {
            return Err(CliError::Config("input CSV has no data rows".into()));
        }
        Ok(Self { raw: text, index, rows })
    }

    fn has(&self, kind: Kind) -> bool {
        kind.columns().iter().all(|c| self.index.contains_key(*c))
    }

    /// Column `name` as numbers; blank cells become NaN.
    fn col(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let i = *self
            .index
            .get(name)
            .ok_or_else(|| CliError::Config(format!("missing column `{name}`")))?;
        self.rows
            .iter()
            .map(|r| {
                let cell = r.get(i).map_or("", |s| s.trim());
                if cell.is_empty() {
                    Ok(f64::NAN)
                } else {
                    cell.parse::<f64>()
                        .map_err(|_| CliError::Config(format!("column `{name}` has non-numeric value `{cell}`")))
                }
            })
            .collect()
    }
}

fn band(v: &[f64], se: &[f64], k: f64) -> Vec<(f64, f64)> {
    v.iter().zip(se).map(|(v, s)| (v - k * s, v + k * s)).collect()
}

fn figure(kind: Kind, t: &Table, title: &str) -> Result<Figure, CliError> {
    let table = t.raw.clone();
    let fig = |x_label: &str, y_label: &str, series: Vec<Series>| Figure {
        title: title.to_string(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        series,
        table: table.clone(),
    };
    Ok(match kind {
        Kind::Capacity => {
            let x: Vec<f64> = t.col("eps")?.iter().map(|e| 1.0 / e.ln().abs()).collect();
            let e = t.col("energy")?;
            let se = t.col("energy_se")?;
            let mut series = vec![Series::markers(
                "energy (3 SE)",
                x.iter().copied().zip(e.iter().copied()).collect(),
                Some(band(&e, &se, 3.0)),
            )];
            if let Some(c) = t.col("C_fit")?.into_iter().find(|c| c.is_finite()) {
                let xmax = x.iter().copied().fold(0.0, f64::max);
                series.push(Series::line("C / |log eps|", vec![(0.0, 0.0), (xmax, c * xmax)]));
            }
            fig("1 / |log eps|", "energy", series)
        }
        Kind::Rho2 => {
            let x = t.col("distance")?;
            let v = t.col("value")?;
            let se = t.col("std_error")?;
            let o = t.col("oracle")?;
            fig(
                "pair distance",
                "rho_2",
                vec![
                    Series::markers("empirical (3 SE)", x.iter().copied().zip(v.iter().copied()).collect(), Some(band(&v, &se, 3.0))),
                    Series::line("determinant", x.iter().copied().zip(o).collect()),
                ],
            )
        }
        Kind::Rho1 => {
            let mid: Vec<f64> = t.col("x_lo")?.iter().zip(t.col("x_hi")?).map(|(a, b)| 0.5 * (a + b)).collect();
            let v = t.col("value")?;
            let se = t.col("std_error")?;
            let mut series = vec![Series::markers(
                "empirical (3 SE)",
                mid.iter().copied().zip(v.iter().copied()).collect(),
                Some(band(&v, &se, 3.0)),
            )];
            if t.index.contains_key("oracle") {
                series.push(Series::line("K(x, x)", mid.iter().copied().zip(t.col("oracle")?).collect()));
            }
            fig("x", "rho_1", series)
        }
        Kind::Hitting => {
            let a = t.col("alpha")?;
            let h = t.col("hit_fraction")?;
            let bars: Vec<(f64, f64)> = t.col("ci_low")?.into_iter().zip(t.col("ci_high")?).collect();
            fig(
                "alpha",
                "hit fraction",
                vec![Series::markers("hit fraction (95% CI)", a.into_iter().zip(h).collect(), Some(bars))],
            )
        }
        Kind::Convergence => {
            let n = t.col("N")?;
            let v = t.col("rho1")?;
            let se = t.col("std_error")?;
            let target = t.col("rho_det")?;
            let mut series = vec![
                Series::markers("log-gas (3 SE)", n.iter().copied().zip(v.iter().copied()).collect(), Some(band(&v, &se, 3.0))),
                Series::line("bulk density", n.iter().copied().zip(target).collect()),
            ];
            if t.index.contains_key("rho_exact") {
                series.push(Series::line("exact finite N", n.iter().copied().zip(t.col("rho_exact")?).collect()));
            }
            fig("N", "rho_1(0)", series)
        }
    })
}

pub fn run(ctx: &mut Context, p: &Params) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(&p.input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.input.display())))?;
    let table = Table::read(text)?;
    let kind = match p.kind {
        Some(k) => {
            if let Some(c) = k.columns().iter().find(|c| !table.index.contains_key(**c)) {
                return Err(CliError::Config(format!("missing column `{c}`")));
            }
            k
        }
        None => *Kind::ALL
            .iter()
            .find(|k| table.has(**k))
            .ok_or_else(|| CliError::Config("CSV columns match no known chart".into()))?,
    };
    let stem = p.input.file_stem().and_then(|s| s.to_str()).unwrap_or("plot").to_string();
    let output = p.output.clone().unwrap_or_else(|| format!("{stem}.svg"));
    let svg = figure(kind, &table, &stem)?.render();
    let mut w = ctx.create(&output)?;
    w.write_all(svg.as_bytes())?;
    w.flush()?;
    Ok(Report {
        kind,
        input: p.input.clone(),
        output,
        n_rows: table.rows.len(),
    })
}
