use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::substrate::{SpikeEvent, UnitId};

use super::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub ablate_astrocyte: bool,
}

impl Provenance {
    pub fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            config_sha256: cfg.hash(),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            ablate_astrocyte: cfg.ablate_astrocyte,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub experiment: String,
    pub metrics: BTreeMap<String, Value>,
    pub provenance: Provenance,
}

impl SummaryReport {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            experiment: cfg.experiment.name().to_string(),
            metrics: BTreeMap::new(),
            provenance: Provenance::of(cfg),
        }
    }

    /// Record a metric. Non-finite floats are stored as `null`.
    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    pub fn set_f64(&mut self, key: &str, x: f64) {
        let v = if x.is_finite() { Value::from(x) } else { Value::Null };
        self.metrics.insert(key.to_string(), v);
    }

    pub fn set_opt(&mut self, key: &str, x: Option<f64>) {
        self.set_f64(key, x.unwrap_or(f64::NAN));
    }

    pub fn f64(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).and_then(Value::as_f64)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSample {
    pub step: u64,
    pub pre_id: u32,
    pub post_id: u32,
    pub weight: f64,
}

/// Raw streams produced by a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub spikes: Vec<SpikeEvent>,
    pub weights: Vec<WeightSample>,
    pub total_steps: u64,
    pub unit_count: usize,
    /// Labelled values drawn as a bar chart.
    pub bars: Vec<(String, f64)>,
    /// Experiment-specific files, written verbatim.
    pub extra_files: Vec<(String, Vec<u8>)>,
}

impl RunRecord {
    pub fn log_weights(&mut self, step: u64, w: impl IntoIterator<Item = (UnitId, UnitId, f64)>) {
        self.weights.extend(w.into_iter().map(|(pre, post, weight)| WeightSample {
            step,
            pre_id: pre.0,
            post_id: post.0,
            weight,
        }));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: SummaryReport,
    pub record: RunRecord,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn spikes_csv(spikes: &[SpikeEvent]) -> String {
    let mut s = String::with_capacity(16 * spikes.len() + 16);
    s.push_str("step,unit_id\n");
    for e in spikes {
        let _ = writeln!(s, "{},{}", e.step, e.unit_id.0);
    }
    s
}

pub fn weights_csv(weights: &[WeightSample]) -> String {
    let mut s = String::from("step,pre_id,post_id,weight\n");
    for w in weights {
        let _ = writeln!(s, "{},{},{},{}", w.step, w.pre_id, w.post_id, w.weight);
    }
    s
}

/// Parse a `step,unit_id` spike file.
pub fn read_spikes_csv(path: &Path) -> Result<Vec<SpikeEvent>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["step", "unit_id"] {
        return Err(Error::Config(format!(
            "{}: expected header step,unit_id",
            path.display()
        )));
    }
    rdr.deserialize::<(u64, u32)>()
        .map(|r| {
            r.map(|(step, id)| SpikeEvent {
                step,
                unit_id: UnitId(id),
            })
            .map_err(|e| Error::csv(path, e))
        })
        .collect()
}

const W: f64 = 800.0;
const H: f64 = 400.0;

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{}\" viewBox=\"0 0 {W} {}\">\n<title>{title}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        H + 40.0,
        H + 40.0
    )
}

/// One mark per spike; x is time, y is unit id.
pub fn raster_svg(spikes: &[SpikeEvent], total_steps: u64, unit_count: usize) -> String {
    let mut s = svg_open("spike raster");
    let steps = total_steps.max(1) as f64;
    let units = unit_count.max(1) as f64;
    let h = (H / units).max(0.5);
    for e in spikes {
        let x = e.step as f64 / steps * W;
        let y = e.unit_id.0 as f64 / units * H;
        let _ = writeln!(
            s,
            "<rect class=\"spike\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"1\" height=\"{h:.2}\"/>"
        );
    }
    let _ = writeln!(s, "<text x=\"4\" y=\"{}\" font-size=\"12\">step 0 .. {total_steps}</text>", H + 30.0);
    s.push_str("</svg>\n");
    s
}

/// One polyline per synapse.
pub fn weights_svg(weights: &[WeightSample], total_steps: u64) -> String {
    let mut s = svg_open("synaptic weights");
    let mut series: BTreeMap<(u32, u32), Vec<(u64, f64)>> = BTreeMap::new();
    for w in weights {
        series.entry((w.pre_id, w.post_id)).or_default().push((w.step, w.weight));
    }
    let (lo, hi) = weights.iter().fold((0.0f64, 0.0f64), |(lo, hi), w| (lo.min(w.weight), hi.max(w.weight)));
    let span = (hi - lo).max(1e-9);
    let steps = total_steps.max(1) as f64;
    let zero = H - (0.0 - lo) / span * H;
    let _ = writeln!(s, "<line x1=\"0\" y1=\"{zero:.2}\" x2=\"{W}\" y2=\"{zero:.2}\" stroke=\"#999\"/>");
    for pts in series.values() {
        let p: Vec<String> = pts
            .iter()
            .map(|&(t, w)| format!("{:.2},{:.2}", t as f64 / steps * W, H - (w - lo) / span * H))
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" points=\"{}\"/>",
            p.join(" ")
        );
    }
    let _ = writeln!(s, "<text x=\"4\" y=\"{}\" font-size=\"12\">weight range [{lo}, {hi}]</text>", H + 30.0);
    s.push_str("</svg>\n");
    s
}

pub fn bars_svg(bars: &[(String, f64)]) -> String {
    let mut s = svg_open("summary bars");
    let max = bars.iter().map(|b| b.1).fold(0.0f64, f64::max).max(1e-9);
    let n = bars.len().max(1) as f64;
    let bw = W / n;
    for (i, (label, v)) in bars.iter().enumerate() {
        let h = v.max(0.0) / max * (H - 20.0);
        let x = i as f64 * bw + bw * 0.1;
        let _ = writeln!(
            s,
            "<rect class=\"bar\" x=\"{x:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"steelblue\"/>",
            H - h,
            bw * 0.8
        );
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{}\" font-size=\"12\">{label}: {v:.3}</text>",
            H + 20.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Write the full artifact set into `out_dir`; returns the written paths.
pub fn emit_outputs(out: &RunOutput, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let r = &out.record;
    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("spikes.csv".into(), spikes_csv(&r.spikes).into_bytes()),
        ("weights.csv".into(), weights_csv(&r.weights).into_bytes()),
        ("summary.json".into(), out.report.to_json().into_bytes()),
        (
            "raster.svg".into(),
            raster_svg(&r.spikes, r.total_steps, r.unit_count).into_bytes(),
        ),
        ("weights.svg".into(), weights_svg(&r.weights, r.total_steps).into_bytes()),
        ("bars.svg".into(), bars_svg(&r.bars).into_bytes()),
    ];
    files.extend(r.extra_files.iter().cloned());
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = out_dir.join(name);
        write_file(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}
