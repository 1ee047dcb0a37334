use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{mean_ci, MetricRecord};
use crate::turbo::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FigureKind {
    SnrVsPower,
    Q2VsPower,
    PreFecBerVsPower,
    PostFecBerVsPower,
    /// Best mean Q-factor over launch power, one row per channel.
    MaxQ2PerChannel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSpec {
    pub kind: FigureKind,
    /// Series to emit; empty means every scheme present.
    #[serde(default)]
    pub schemes: Vec<Scheme>,
    /// Restrict power sweeps to one channel; all channels are pooled otherwise.
    #[serde(default)]
    pub channel: Option<usize>,
}

impl FigureSpec {
    pub fn new(kind: FigureKind) -> Self {
        Self { kind, schemes: Vec::new(), channel: None }
    }

    /// A TOML file, or a bare figure kind such as `snr-vs-power`.
    pub fn load(arg: &str) -> Result<Self> {
        let p = Path::new(arg);
        if p.is_file() {
            let text = std::fs::read_to_string(p)?;
            return toml::from_str(&text).map_err(|e| Error::Config(e.to_string()));
        }
        let kind: FigureKind = serde_json::from_value(serde_json::Value::String(arg.into()))
            .map_err(|_| Error::Config(format!("{arg:?} is neither a figure spec file nor a figure kind")))?;
        Ok(Self::new(kind))
    }
}

/// One table: first column is the x axis, then `scheme` and `scheme_ci` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl PlotTable {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",") + "\n";
        for r in &self.rows {
            s += &r.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",");
            s.push('\n');
        }
        s
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_records(path: &Path) -> Result<Vec<MetricRecord>> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    let mut offset = 0u64;
    for line in f.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(|e| Error::Format {
                offset: offset + e.column().saturating_sub(1) as u64,
                message: e.to_string(),
            })?);
        }
        offset += line.len() as u64 + 1;
    }
    Ok(out)
}

fn value(kind: FigureKind, r: &MetricRecord) -> Option<f64> {
    match kind {
        FigureKind::SnrVsPower => Some(r.snr_db),
        FigureKind::Q2VsPower | FigureKind::MaxQ2PerChannel => r.q2_db,
        FigureKind::PreFecBerVsPower => Some(r.pre_fec_ber),
        FigureKind::PostFecBerVsPower => r.post_fec_ber,
    }
}

/// Aggregate records over seeds into one table per figure panel.
pub fn emit_plotdata(records: &[MetricRecord], spec: &FigureSpec) -> Result<PlotTable> {
    let selected: Vec<&MetricRecord> = records
        .iter()
        .filter(|r| spec.kind == FigureKind::MaxQ2PerChannel || spec.channel.is_none_or(|c| r.channel_index == c))
        .collect();
    if selected.is_empty() {
        return Err(Error::Config("no records match the figure selection".into()));
    }
    let present: Vec<Scheme> = {
        let mut v: Vec<Scheme> = selected.iter().map(|r| r.scheme).collect();
        v.sort();
        v.dedup();
        v
    };
    let mut warnings = Vec::new();
    let schemes: Vec<Scheme> = if spec.schemes.is_empty() {
        present.clone()
    } else {
        spec.schemes
            .iter()
            .copied()
            .filter(|s| {
                let ok = present.contains(s);
                if !ok {
                    let w = format!("scheme {} has no records, column omitted", s.name());
                    log::warn!("{w}");
                    warnings.push(w);
                }
                ok
            })
            .collect()
    };
    if schemes.is_empty() {
        return Err(Error::Config("none of the requested schemes has records".into()));
    }
    // (x key, scheme) -> values over seeds; x keys are f64 bits of power or channel index.
    let key = |x: f64| (x * 1e6).round() as i64;
    let mut cells: BTreeMap<(i64, Scheme), Vec<f64>> = BTreeMap::new();
    let mut xs: BTreeMap<i64, f64> = BTreeMap::new();
    let x_of = |r: &MetricRecord| r.launch_power_dbm;
    if spec.kind == FigureKind::MaxQ2PerChannel {
        // Mean over seeds per (channel, power), then the best power per channel.
        let mut by_power: BTreeMap<(usize, Scheme, i64), Vec<f64>> = BTreeMap::new();
        for r in &selected {
            if let Some(v) = value(spec.kind, r) {
                by_power.entry((r.channel_index, r.scheme, key(r.launch_power_dbm))).or_default().push(v);
            }
        }
        let mut best: BTreeMap<(usize, Scheme), (f64, Vec<f64>)> = BTreeMap::new();
        for ((ch, s, _), vals) in by_power {
            let m = mean_ci(&vals).0;
            let e = best.entry((ch, s)).or_insert((f64::NEG_INFINITY, Vec::new()));
            if m > e.0 {
                *e = (m, vals);
            }
        }
        for ((ch, s), (_, vals)) in best {
            xs.insert(ch as i64, ch as f64);
            cells.insert((ch as i64, s), vals);
        }
    } else {
        for r in &selected {
            if let Some(v) = value(spec.kind, r) {
                xs.insert(key(x_of(r)), x_of(r));
                cells.entry((key(x_of(r)), r.scheme)).or_default().push(v);
            }
        }
    }
    let x_name = if spec.kind == FigureKind::MaxQ2PerChannel { "channel" } else { "launch_power_dbm" };
    let mut header = vec![x_name.to_string()];
    for s in &schemes {
        header.push(s.name().to_string());
        header.push(format!("{}_ci", s.name()));
    }
    let rows = xs
        .iter()
        .map(|(k, &x)| {
            let mut row = vec![x];
            for s in &schemes {
                let (m, h) = cells.get(&(*k, *s)).map(|v| mean_ci(v)).unwrap_or((f64::NAN, f64::NAN));
                row.push(m);
                row.push(h);
            }
            row
        })
        .collect();
    Ok(PlotTable { header, rows, warnings })
}
