//! Artifact emission. Every artifact embeds a manifest without a timestamp,
//! so repeated runs are byte-identical; files written with `--out` also get
//! a `<out>.manifest.json` sidecar that carries the timestamp.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{SecondsFormat, Utc};
use fapchan::mcsim::{DensityGrid, FapSampleSet, GridAxis, Normalization};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub seed: u64,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: impl Serialize, seed: u64) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            parameters: serde_json::to_value(parameters)?,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
        })
    }

    fn stamped(&self) -> Self {
        RunManifest { timestamp: Some(Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)), ..self.clone() }
    }
}

/// 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// A JSON number in the same format; non-finite values become `null`.
pub fn num(x: f64) -> Box<RawValue> {
    let s = if x.is_finite() { fmt_f64(x) } else { "null".into() };
    RawValue::from_string(s).expect("formatted float is valid JSON")
}

pub fn num_opt(x: Option<f64>) -> Box<RawValue> {
    num(x.unwrap_or(f64::NAN))
}

pub fn nums(xs: &[f64]) -> Vec<Box<RawValue>> {
    xs.iter().map(|&x| num(x)).collect()
}

/// Where an artifact goes: a file (plus sidecar) or stdout.
pub struct Sink {
    pub path: Option<PathBuf>,
}

impl Sink {
    pub fn write(&self, body: &str, manifest: &RunManifest) -> Result<()> {
        match &self.path {
            Some(p) => {
                std::fs::write(p, body).with_context(|| format!("writing {}", p.display()))?;
                let side = sidecar_path(p);
                let text = serde_json::to_string_pretty(&manifest.stamped())? + "\n";
                std::fs::write(&side, text).with_context(|| format!("writing {}", side.display()))?;
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(body.as_bytes()).context("writing to stdout")?;
                out.flush().context("writing to stdout")?;
            }
        }
        Ok(())
    }
}

pub fn sidecar_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn manifest_line(manifest: &RunManifest) -> Result<String> {
    Ok(format!("# manifest: {}\n", serde_json::to_string(manifest)?))
}

/// JSON object with the manifest appended under `manifest`.
pub fn json_with_manifest<T: Serialize>(body: &T, manifest: &RunManifest) -> Result<String> {
    let mut v = serde_json::to_value(body)?;
    let Value::Object(map) = &mut v else {
        bail!("artifact body must be a JSON object");
    };
    map.insert("manifest".into(), serde_json::to_value(manifest)?);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

#[derive(Serialize, Deserialize)]
struct GridJson<V> {
    axes: Vec<GridAxis>,
    values: Vec<V>,
    normalization: Normalization,
    total: u64,
    out_of_grid: u64,
    truncated: bool,
}

pub fn render_grid(grid: &DensityGrid, format: Format, manifest: &RunManifest) -> Result<String> {
    match format {
        Format::Json => json_with_manifest(
            &GridJson {
                axes: grid.axes.clone(),
                values: nums(&grid.values),
                normalization: grid.normalization,
                total: grid.total,
                out_of_grid: grid.out_of_grid,
                truncated: grid.truncated,
            },
            manifest,
        ),
        Format::Csv => {
            let mut s = manifest_line(manifest)?;
            writeln!(
                s,
                "# normalization = {}, total = {}, out_of_grid = {}, truncated = {}",
                serde_json::to_value(grid.normalization)?.as_str().unwrap_or_default(),
                grid.total,
                grid.out_of_grid,
                grid.truncated
            )?;
            let names: Vec<String> = (1..=grid.axes.len()).map(|k| format!("n{k}")).collect();
            writeln!(s, "{},value", names.join(","))?;
            for (i, v) in grid.values.iter().enumerate() {
                for c in grid.cell_center(i) {
                    s.push_str(&fmt_f64(c));
                    s.push(',');
                }
                s.push_str(&fmt_f64(*v));
                s.push('\n');
            }
            Ok(s)
        }
    }
}

pub fn emit_grid(grid: &DensityGrid, sink: &Sink, format: Format, manifest: &RunManifest) -> Result<()> {
    sink.write(&render_grid(grid, format, manifest)?, manifest)
}

/// Inverse of the JSON grid rendering, used to reload emitted grids.
pub fn parse_grid_json(text: &str) -> Result<DensityGrid> {
    let g: GridJson<Option<f64>> = serde_json::from_str(text)?;
    Ok(DensityGrid {
        axes: g.axes,
        values: g.values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
        normalization: g.normalization,
        total: g.total,
        out_of_grid: g.out_of_grid,
        truncated: g.truncated,
    })
}

#[derive(Serialize)]
struct SamplesJson {
    dim: usize,
    absorbed: u64,
    escaped: u64,
    samples: Vec<Vec<Box<RawValue>>>,
}

pub fn render_samples(set: &FapSampleSet, format: Format, manifest: &RunManifest) -> Result<String> {
    match format {
        Format::Json => json_with_manifest(
            &SamplesJson {
                dim: set.dim(),
                absorbed: set.absorbed,
                escaped: set.escaped,
                samples: set.points().map(nums).collect(),
            },
            manifest,
        ),
        Format::Csv => {
            let mut s = manifest_line(manifest)?;
            writeln!(s, "# absorbed = {}, escaped = {}", set.absorbed, set.escaped)?;
            let names: Vec<String> = (1..=set.dim()).map(|k| format!("n{k}")).collect();
            writeln!(s, "{}", names.join(","))?;
            for p in set.points() {
                let row: Vec<String> = p.iter().map(|&x| fmt_f64(x)).collect();
                s.push_str(&row.join(","));
                s.push('\n');
            }
            Ok(s)
        }
    }
}

/// Read a sample CSV written by `simulate`: returns (dim, flat data, escaped).
pub fn parse_samples_csv(text: &str) -> Result<(usize, Vec<f64>, u64)> {
    let mut escaped = 0;
    let mut dim = None;
    let mut data = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if let Some(meta) = line.strip_prefix('#') {
            for kv in meta.split(',') {
                if let Some((k, v)) = kv.split_once('=') {
                    if k.trim() == "escaped" {
                        escaped = v.trim().parse().with_context(|| format!("line {}: bad escaped count", no + 1))?;
                    }
                }
            }
            continue;
        }
        if dim.is_none() {
            dim = Some(line.split(',').count());
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("line {}: bad number", no + 1))?;
        if Some(row.len()) != dim {
            bail!("line {}: expected {} columns", no + 1, dim.unwrap_or(0));
        }
        data.extend(row);
    }
    Ok((dim.context("sample file has no header row")?, data, escaped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fapchan::mcsim::SampleSource;

    fn manifest() -> RunManifest {
        RunManifest::new("test", serde_json::json!({"a": 1}), 3).unwrap()
    }

    fn grid() -> DensityGrid {
        let axes = vec![GridAxis::new(0.0, 1.0, 2).unwrap(), GridAxis::new(-1.0, 1.0, 2).unwrap()];
        DensityGrid::from_fn(axes, Normalization::Density, |c| Ok((c[0] + 0.1).ln() / 3.0 + c[1])).unwrap()
    }

    #[test]
    fn csv_grid_shape() {
        let s = render_grid(&grid(), Format::Csv, &manifest()).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# manifest: "));
        assert_eq!(lines[2], "n1,n2,value");
        assert_eq!(lines.len(), 3 + 4);
        assert!(!s.contains("timestamp"));
    }

    #[test]
    fn json_grid_round_trips_bitwise() {
        let g = grid();
        let back = parse_grid_json(&render_grid(&g, Format::Json, &manifest()).unwrap()).unwrap();
        assert_eq!(back.axes, g.axes);
        for (a, b) in back.values.iter().zip(&g.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn float_text_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(num(f64::NAN).get(), "null");
    }

    #[test]
    fn samples_csv_round_trips() {
        let set = FapSampleSet::new(2, vec![0.5, -1.25, 1e-9, 3.0], 4, SampleSource::Derived("t".into())).unwrap();
        let text = render_samples(&set, Format::Csv, &manifest()).unwrap();
        let (dim, data, escaped) = parse_samples_csv(&text).unwrap();
        assert_eq!((dim, escaped), (2, 4));
        assert_eq!(data, set.flat());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("/tmp/a.csv")), PathBuf::from("/tmp/a.csv.manifest.json"));
    }
}
