use std::f64::consts::PI;

use anyhow::{bail, Result};
use qfilter::control::{preset_by_name, PresetParams};
use qfilter::fidelity::{error_sweep, SweepConfig};
use qfilter::filters::{f1, F2_WINDOW_FACTOR, F2_WINDOW_LO};
use qfilter::quadrature::FrequencyGrid;
use qfilter::{ensemble_fidelity, fidelity, F2Grid, PresetName};
use serde_json::json;

use crate::config::{Format, Resolved, FILTER1_POINTS};
use crate::output::{num, opt, summary_path, Csv, Outputs};

fn single(r: &Resolved, body: String) -> Outputs {
    let mut out = Outputs::default();
    out.push(r.o.out.clone(), body);
    out
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serialises");
    s.push('\n');
    s
}

pub fn filter1(r: &Resolved) -> Result<Outputs> {
    let seq = r.sequence()?;
    let tau = seq.tau();
    let lo = r.o.omega_min.unwrap_or(F2_WINDOW_LO / tau);
    let hi = r.o.omega_max.unwrap_or(F2_WINDOW_FACTOR * seq.max_rate().max(2.0 * PI / tau));
    let n = r.o.freq_points.unwrap_or(FILTER1_POINTS);
    let grid = FrequencyGrid::log_spaced(lo, hi, n)?;
    let rows = grid.nodes().iter().map(|&w| f1(&seq, w)).collect::<qfilter::Result<Vec<_>>>()?;
    let body = match r.format() {
        Format::Csv => {
            let mut csv = Csv::new("filter1", &["omega", "F1", "F1_x", "F1_y", "F1_z"]);
            for f in &rows {
                let c = f.components;
                csv.row(&[num(f.omega), num(f.total), num(c[0]), num(c[1]), num(c[2])]);
            }
            csv.finish()
        }
        Format::Json => pretty(&json!({
            "tau": tau,
            "rows": rows.iter().map(|f| json!({
                "omega": f.omega, "F1": f.total,
                "F1_x": f.components[0], "F1_y": f.components[1], "F1_z": f.components[2],
            })).collect::<Vec<_>>(),
        })),
    };
    Ok(single(r, body))
}

pub fn filter2(r: &Resolved) -> Result<Outputs> {
    let seq = r.sequence()?;
    let settings = r.fidelity();
    let grid = F2Grid::compute_default(&seq, settings.f2_points, &settings.f2)?;
    let n = grid.len();
    let terms: Vec<_> = (0..n).flat_map(|k| (0..n).map(move |l| (k, l))).map(|(k, l)| grid.terms(k, l)).collect();
    let body = match r.format() {
        Format::Csv => {
            let mut csv = Csv::new("filter2", &["omega", "omega_prime", "F2", "F2_a", "F2_b", "F2_c"]);
            for t in &terms {
                csv.row(&[
                    num(t.omega),
                    num(t.omega_prime),
                    num(t.total()),
                    num(t.a_sum()),
                    num(t.b_sum()),
                    num(t.c_sum()),
                ]);
            }
            csv.finish()
        }
        Format::Json => pretty(&json!({ "tau": seq.tau(), "nodes": grid.nodes(), "terms": terms })),
    };
    Ok(single(r, body))
}

pub fn fidelity_cmd(r: &Resolved) -> Result<Outputs> {
    let seq = r.sequence()?;
    let spec = r.spectrum()?;
    let report = fidelity(&seq, &spec, r.order(), &r.fidelity(), None)?;
    let body = match r.format() {
        Format::Json => report.to_json() + "\n",
        Format::Csv => {
            let mut csv = Csv::new(
                "fidelity",
                &["tau", "xi", "chi", "fidelity_2nd", "error_2nd", "fidelity_4th", "error_4th", "flags"],
            );
            csv.row(&[
                num(report.tau),
                num(report.xi),
                num(report.chi),
                num(report.fidelity_2nd),
                num(report.error_2nd),
                opt(report.fidelity_4th),
                opt(report.error_4th),
                report.flags.describe(),
            ]);
            csv.finish()
        }
    };
    Ok(single(r, body))
}

pub fn sweep(r: &Resolved) -> Result<Outputs> {
    let spec = r.spectrum()?;
    let config = SweepConfig {
        variants: r.variants()?,
        tau_x: r.tau_x()?,
        tau_ratio: r.o.tau_ratio.unwrap_or(1.0),
        order: r.order(),
        settings: r.fidelity(),
    };
    let rows = error_sweep(&config, &spec)?;
    let body = match r.format() {
        Format::Json => pretty(&serde_json::to_value(&rows)?),
        Format::Csv => {
            let mut csv =
                Csv::new("sweep", &["variant", "tau_x", "tau", "xi", "chi", "error_2nd", "error_4th", "flags"]);
            for row in &rows {
                csv.row(&[
                    row.variant.to_string(),
                    num(row.tau_x),
                    num(row.tau),
                    num(row.xi),
                    num(row.chi),
                    num(row.error_2nd),
                    opt(row.error_4th),
                    row.flags.describe(),
                ]);
            }
            csv.finish()
        }
    };
    Ok(single(r, body))
}

pub fn mc(r: &Resolved) -> Result<Outputs> {
    let seq = r.sequence()?;
    let spec = r.spectrum()?;
    let mut settings = r.mc();
    let mut out = Outputs::default();
    match r.format() {
        Format::Json => {
            let res = ensemble_fidelity(&seq, &spec, &settings)?;
            out.push(r.o.out.clone(), res.to_json() + "\n");
        }
        Format::Csv => {
            let retain = settings.retain;
            settings.retain = true;
            let mut res = ensemble_fidelity(&seq, &spec, &settings)?;
            let mut csv = Csv::new("mc", &["trajectory_index", "fidelity"]);
            for (i, f) in res.fidelities.iter().flatten().enumerate() {
                csv.row(&[i.to_string(), num(*f)]);
            }
            if !retain {
                res.fidelities = None;
                res.error_vectors = None;
            }
            out.push(r.o.out.clone(), csv.finish());
            match &r.o.out {
                Some(p) => out.push(Some(summary_path(p)), res.to_json() + "\n"),
                None => eprintln!("{}", res.to_json()),
            }
        }
    }
    Ok(out)
}

struct CompareRow {
    tau_x: Option<f64>,
    tau: f64,
    xi: f64,
    chi: f64,
    error_2nd: f64,
    error_4th: Option<f64>,
    error_mc: f64,
    std_error_mc: f64,
    flags: String,
}

impl CompareRow {
    fn deviation(&self, e: f64) -> f64 {
        (e - self.error_mc).abs() / self.error_mc
    }
}

/// Analytic and Monte-Carlo errors side by side. With a preset and `--tau-x-points` the
/// preset is swept over `τ_x` as in `sweep`; otherwise the single configured sequence.
pub fn compare(r: &Resolved) -> Result<Outputs> {
    let spec = r.spectrum()?;
    let cases: Vec<(Option<f64>, qfilter::ControlSequence)> = match (&r.o.preset, r.o.tau_x_points) {
        (Some(name), Some(_)) => {
            let name: PresetName = name.parse()?;
            let ratio = r.o.tau_ratio.unwrap_or(1.0);
            r.tau_x()?
                .into_iter()
                .map(|tx| Ok((Some(tx), preset_by_name(name, &PresetParams::rate_tau(PI / tx, ratio * tx))?.sequence)))
                .collect::<Result<_>>()?
        }
        _ => vec![(None, r.sequence()?)],
    };
    let settings = r.fidelity();
    let mc = r.mc();
    let mut rows = Vec::with_capacity(cases.len());
    for (tau_x, seq) in &cases {
        let a = fidelity(seq, &spec, r.order(), &settings, None)?;
        let m = ensemble_fidelity(seq, &spec, &mc)?;
        if m.mean_error <= 0.0 || m.mean_error.is_nan() {
            bail!("Monte-Carlo error is zero at tau = {}; the relative deviation is undefined", seq.tau());
        }
        rows.push(CompareRow {
            tau_x: *tau_x,
            tau: a.tau,
            xi: a.xi,
            chi: a.chi,
            error_2nd: a.error_2nd,
            error_4th: a.error_4th,
            error_mc: m.mean_error,
            std_error_mc: m.std_error,
            flags: a.flags.describe(),
        });
    }
    let body = match r.format() {
        Format::Json => pretty(&json!(rows
            .iter()
            .map(|c| json!({
                "tau_x": c.tau_x, "tau": c.tau, "xi": c.xi, "chi": c.chi,
                "error_2nd": c.error_2nd, "error_4th": c.error_4th,
                "error_mc": c.error_mc, "std_error_mc": c.std_error_mc,
                "deviation": c.deviation(c.error_2nd),
                "deviation_4th": c.error_4th.map(|e| c.deviation(e)),
                "flags": c.flags,
            }))
            .collect::<Vec<_>>())),
        Format::Csv => {
            let mut csv = Csv::new(
                "compare",
                &[
                    "tau_x",
                    "tau",
                    "xi",
                    "chi",
                    "error_2nd",
                    "error_4th",
                    "error_mc",
                    "std_error_mc",
                    "deviation",
                    "deviation_4th",
                    "flags",
                ],
            );
            for c in &rows {
                csv.row(&[
                    opt(c.tau_x),
                    num(c.tau),
                    num(c.xi),
                    num(c.chi),
                    num(c.error_2nd),
                    opt(c.error_4th),
                    num(c.error_mc),
                    num(c.std_error_mc),
                    num(c.deviation(c.error_2nd)),
                    opt(c.error_4th.map(|e| c.deviation(e))),
                    c.flags.clone(),
                ]);
            }
            csv.finish()
        }
    };
    Ok(single(r, body))
}

pub fn preset_list(r: &Resolved) -> Result<Outputs> {
    let body = match r.format() {
        Format::Json => pretty(&json!(PresetName::ALL
            .iter()
            .map(|p| json!({"name": p.as_str(), "description": p.description()}))
            .collect::<Vec<_>>())),
        Format::Csv => {
            let mut csv = Csv::new("preset-list", &["name", "description"]);
            for p in PresetName::ALL {
                csv.row(&[p.as_str().to_string(), format!("\"{}\"", p.description())]);
            }
            csv.finish()
        }
    };
    Ok(single(r, body))
}
