//! Flag, config-file and default merging. Flags win over the config file, which wins
//! over the built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use qfilter::control::{preset_by_name, PresetParams};
use qfilter::quadrature::IntegrationSettings;
use qfilter::{ControlSequence, F2Settings, FidelitySettings, McSettings, NoiseSpectrum, Order, PresetName};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderArg {
    Second,
    Fourth,
}

impl From<OrderArg> for Order {
    fn from(o: OrderArg) -> Order {
        match o {
            OrderArg::Second => Order::Second,
            OrderArg::Fourth => Order::Fourth,
        }
    }
}

/// Options shared by every command. All are optional so a config file can fill gaps.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Control sequence JSON file
    #[arg(long, value_name = "PATH")]
    pub sequence: Option<PathBuf>,
    /// Named preset (see preset-list)
    #[arg(long)]
    pub preset: Option<String>,
    /// Drive rate Ω for presets
    #[arg(long)]
    pub rate: Option<f64>,
    /// Total duration for presets that take one
    #[arg(long)]
    pub tau: Option<f64>,
    /// Spectrum as inline JSON or a JSON file path
    #[arg(long)]
    pub spectrum: Option<String>,
    /// Frequency points (filter1 rows; fourth-order grid size elsewhere)
    #[arg(long)]
    pub freq_points: Option<usize>,
    /// Lower edge of the filter1 frequency grid
    #[arg(long)]
    pub omega_min: Option<f64>,
    /// Upper edge of the filter1 frequency grid
    #[arg(long)]
    pub omega_max: Option<f64>,
    /// Relative tolerance of the frequency integrals
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Minimum time-grid intervals per segment for the nested integrals
    #[arg(long)]
    pub time_points_per_segment: Option<usize>,
    /// Perturbative order of the analytic fidelity
    #[arg(long, value_enum)]
    pub order: Option<OrderArg>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Largest Monte-Carlo time step
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cosine components of the synthesised noise
    #[arg(long)]
    pub components: Option<usize>,
    /// Keep per-trajectory fidelities in the mc output
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub retain_trajectories: Option<bool>,
    #[arg(long)]
    pub tau_x_min: Option<f64>,
    #[arg(long)]
    pub tau_x_max: Option<f64>,
    /// Log-spaced π-pulse durations in a sweep
    #[arg(long)]
    pub tau_x_points: Option<usize>,
    /// Duration / τ_x for swept presets that need a duration
    #[arg(long)]
    pub tau_ratio: Option<f64>,
    /// Presets compared in a sweep, comma separated
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => { $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )* };
}

impl Options {
    /// Fill every unset field from `lower`.
    pub fn or(mut self, lower: Options) -> Options {
        overlay!(
            self, lower, sequence, preset, rate, tau, spectrum, freq_points, omega_min, omega_max, rtol,
            time_points_per_segment, order, trajectories, dt, seed, components, retain_trajectories, tau_x_min,
            tau_x_max, tau_x_points, tau_ratio, variants, out, format, threads
        );
        self
    }

    /// Read a JSON config file. Relative paths inside it resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Options> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let raw: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("bad config JSON in {}", path.display()))?;
        // An inline spectrum object is accepted and kept as JSON text.
        let raw = match raw {
            serde_json::Value::Object(mut m) => {
                if let Some(v @ serde_json::Value::Object(_)) = m.get("spectrum").cloned() {
                    m.insert("spectrum".into(), serde_json::Value::String(v.to_string()));
                }
                serde_json::Value::Object(m)
            }
            _ => bail!("config {} must be a JSON object", path.display()),
        };
        let mut o: Options =
            serde_json::from_value(raw).with_context(|| format!("bad config in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &PathBuf| if p.is_relative() { base.join(p) } else { p.clone() };
        o.sequence = o.sequence.as_ref().map(rebase);
        o.out = o.out.as_ref().map(rebase);
        if let Some(s) = &o.spectrum {
            if !s.trim_start().starts_with('{') {
                o.spectrum = Some(rebase(&PathBuf::from(s)).to_string_lossy().into_owned());
            }
        }
        Ok(o)
    }
}

/// Defaults. Printed in full by `--show-config`.
pub fn defaults() -> Options {
    Options {
        sequence: None,
        preset: None,
        rate: None,
        tau: None,
        spectrum: None,
        freq_points: None,
        omega_min: None,
        omega_max: None,
        rtol: Some(IntegrationSettings::default().rtol),
        time_points_per_segment: Some(F2Settings::default().min_points_per_segment),
        order: Some(OrderArg::Second),
        trajectories: Some(McSettings::default().trajectories),
        dt: None,
        seed: Some(0),
        components: Some(qfilter::montecarlo::DEFAULT_COMPONENTS),
        retain_trajectories: Some(false),
        tau_x_min: Some(0.1),
        tau_x_max: Some(10.0),
        tau_x_points: Some(10),
        tau_ratio: Some(1.0),
        variants: Some(vec!["primitive_x".into(), "corrected_x".into(), "x_dcg".into()]),
        out: None,
        format: Some(Format::Csv),
        threads: None,
    }
}

/// Default row count of `filter1`; other commands default to the fourth-order grid size.
pub const FILTER1_POINTS: usize = 200;

pub struct Resolved {
    pub o: Options,
}

impl Resolved {
    pub fn new(o: Options) -> Result<Self> {
        let r = Resolved { o };
        for (name, v) in [("rtol", r.o.rtol), ("dt", r.o.dt), ("tau_ratio", r.o.tau_ratio)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    bail!("{name} must be positive, got {v}");
                }
            }
        }
        Ok(r)
    }

    pub fn format(&self) -> Format {
        self.o.format.unwrap_or(Format::Csv)
    }

    pub fn order(&self) -> Order {
        self.o.order.unwrap_or(OrderArg::Second).into()
    }

    pub fn sequence(&self) -> Result<ControlSequence> {
        match (&self.o.sequence, &self.o.preset) {
            (Some(_), Some(_)) => bail!("give either --sequence or --preset, not both"),
            (None, None) => bail!("a control sequence is required: --sequence PATH or --preset NAME"),
            (Some(path), None) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("cannot read sequence {}", path.display()))?;
                Ok(ControlSequence::from_json(&text)?)
            }
            (None, Some(name)) => {
                let params = PresetParams { rate: self.o.rate, tau: self.o.tau };
                Ok(preset_by_name(name.parse()?, &params)?.sequence)
            }
        }
    }

    pub fn spectrum(&self) -> Result<NoiseSpectrum> {
        let Some(s) = &self.o.spectrum else {
            bail!("a noise spectrum is required: --spectrum JSON|PATH");
        };
        if s.trim_start().starts_with('{') {
            return Ok(NoiseSpectrum::from_json(s, None)?);
        }
        let path = Path::new(s);
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read spectrum {s}"))?;
        Ok(NoiseSpectrum::from_json(&text, path.parent())?)
    }

    pub fn integration(&self) -> IntegrationSettings {
        IntegrationSettings { rtol: self.o.rtol.unwrap_or(1e-6), ..Default::default() }
    }

    pub fn f2(&self) -> F2Settings {
        let mut s = F2Settings::default();
        if let Some(m) = self.o.time_points_per_segment {
            s.min_points_per_segment = m;
            s.max_points_per_segment = s.max_points_per_segment.max(m);
        }
        s
    }

    pub fn fidelity(&self) -> FidelitySettings {
        FidelitySettings {
            integration: self.integration(),
            f2: self.f2(),
            f2_points: self.o.freq_points.unwrap_or(qfilter::filters::F2_DEFAULT_POINTS),
            strict: true,
        }
    }

    pub fn mc(&self) -> McSettings {
        let d = McSettings::default();
        McSettings {
            trajectories: self.o.trajectories.unwrap_or(d.trajectories),
            dt: self.o.dt,
            seed: self.o.seed.unwrap_or(d.seed),
            components: self.o.components.unwrap_or(d.components),
            retain: self.o.retain_trajectories.unwrap_or(false),
        }
    }

    /// Log-spaced π-pulse durations.
    pub fn tau_x(&self) -> Result<Vec<f64>> {
        let (a, b) = (self.o.tau_x_min.unwrap_or(0.1), self.o.tau_x_max.unwrap_or(10.0));
        let n = self.o.tau_x_points.unwrap_or(10);
        if !(a > 0.0 && b >= a) || n == 0 {
            bail!("need 0 < tau_x_min <= tau_x_max and tau_x_points >= 1");
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        let (la, lb) = (a.ln(), b.ln());
        Ok((0..n)
            .map(|k| match k {
                0 => a,
                k if k == n - 1 => b,
                k => (la + (lb - la) * k as f64 / (n - 1) as f64).exp(),
            })
            .collect())
    }

    pub fn variants(&self) -> Result<Vec<PresetName>> {
        let names = match (&self.o.variants, &self.o.preset) {
            (Some(v), _) => v.clone(),
            (None, Some(p)) => vec![p.clone()],
            (None, None) => defaults().variants.unwrap_or_default(),
        };
        names.iter().map(|n| n.parse().map_err(Into::into)).collect()
    }
}
