//! The `spectrum`, `ldp`, `check` and `oracle` pipelines. Each returns the
//! files to write; nothing touches the disk until every number is computed.

use mfspec_core::convex::kink_scan;
use mfspec_core::io::fmt_f64;
use mfspec_core::ldp::{
    auto_tilt, binomial_interval_oracle, binomial_tail_log, binomial_tail_oracle,
    gartner_ellis_check, sample_plain, sample_tilted, TailEstimate,
};
use mfspec_core::observables::{almost_additivity_defect, variation, DefectMode, ObservableSpec};
use mfspec_core::pressure::{log_mgf_curve, pressure_curve, transfer_pressure};
use mfspec_core::spectra::{besicovitch_oracle, entropy_spectrum, SpectrumLabel};
use mfspec_core::symbolic::{verify_ahlfors_bowen, ReferenceMeasure};
use mfspec_core::{Error, ExecOptions, Result};
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, Experiment, Format, TiltConfig};

pub type Files = Vec<(String, String)>;

pub struct Emit<'a> {
    pub format: Format,
    pub prefix: &'a str,
}

impl Emit<'_> {
    fn name(&self, stem: &str) -> String {
        format!("{}{stem}", self.prefix)
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

pub fn spectrum(cfg: &Config, exp: &Experiment, opts: &ExecOptions, emit: &Emit) -> Result<Files> {
    let options = cfg.spectrum_options()?;
    let run = entropy_spectrum(&exp.spec, &exp.space, &exp.measure, &options, opts)?;
    let pressure = pressure_curve(
        &exp.spec,
        &exp.space,
        options.q_grid,
        &options.depths,
        &options.curve,
        opts,
    )?;
    let mut files = Files::new();
    if emit.format.csv() {
        files.push((emit.name("spectrum.csv"), run.table.to_csv()));
        files.push((emit.name("mgf.csv"), run.mgf.to_csv()));
        files.push((emit.name("pressure.csv"), pressure.to_csv()));
    }
    if emit.format.json() {
        let doc = json!({
            "config": cfg,
            "spectrum": run.table,
            "mgf": run.mgf,
            "pressure": pressure,
            "domain": run.endpoints,
            "ahlfors_bowen": run.ahlfors_bowen,
        });
        files.push((emit.name("spectrum.json"), to_json(&doc)));
    }
    Ok(files)
}

/// Probability of symbol 1 when the observable is the coin count under an
/// i.i.d. measure on the full 2-shift, the one case with a binomial oracle.
fn coin_probability(exp: &Experiment) -> Option<f64> {
    if exp.spec != ObservableSpec::coin() || !exp.space.is_full() {
        return None;
    }
    match &exp.measure {
        ReferenceMeasure::Uniform { .. } | ReferenceMeasure::Bernoulli { .. } => {
            Some(exp.measure.initial(1))
        }
        ReferenceMeasure::Markov { .. } => None,
    }
}

pub struct LdpOutcome {
    pub files: Files,
    pub estimate: TailEstimate,
    pub oracle: Option<f64>,
}

pub fn ldp(cfg: &Config, exp: &Experiment, opts: &ExecOptions, emit: &Emit) -> Result<LdpOutcome> {
    let mc = cfg
        .mc
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("the ldp command needs an [mc] table".into()))?;
    let (mode, q) = match &mc.tilt {
        None => ("none", None),
        Some(TiltConfig::Fixed(q)) => ("fixed", Some(*q)),
        Some(TiltConfig::Named(_)) => (
            "auto",
            Some(auto_tilt(
                &exp.measure,
                &exp.spec,
                &exp.space,
                mc.n,
                mc.interval,
            )?),
        ),
    };
    let estimate = match q {
        None => sample_plain(
            &exp.measure,
            &exp.spec,
            &exp.space,
            mc.n,
            mc.interval,
            mc.samples,
            mc.seed,
            opts,
        )?,
        Some(q) => sample_tilted(
            &exp.measure,
            &exp.spec,
            &exp.space,
            mc.n,
            mc.interval,
            q,
            mc.samples,
            mc.seed,
            opts,
        )?,
    };
    let oracle = coin_probability(exp)
        .map(|p| binomial_interval_oracle(mc.n as u64, mc.interval, p))
        .transpose()?;
    let mut files = Files::new();
    if emit.format.csv() {
        let body = format!(
            "{}\n{}\n",
            TailEstimate::csv_header(),
            estimate.csv_row(oracle)
        );
        files.push((emit.name("tail.csv"), body));
    }
    if emit.format.json() {
        let doc = json!({
            "config": cfg,
            "tilt": { "mode": mode, "q": q },
            "estimate": estimate,
            "oracle": oracle,
        });
        files.push((emit.name("tail.json"), to_json(&doc)));
    }
    Ok(LdpOutcome {
        files,
        estimate,
        oracle,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: &'static str,
    pub status: &'static str,
    pub value: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
    pub label: SpectrumLabel,
}

impl CheckReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,status,value,detail\n");
        for r in &self.rows {
            let value = r.value.map(fmt_f64).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.check, r.status, value, r.detail
            ));
        }
        out.push_str(&format!("label,{},,\n", self.label.as_str()));
        out
    }
}

fn status(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

pub fn check_report(cfg: &Config, exp: &Experiment, opts: &ExecOptions) -> Result<CheckReport> {
    let (space, spec) = (&exp.space, &exp.spec);
    let mut rows = Vec::new();

    let ab = verify_ahlfors_bowen(
        &exp.measure,
        space,
        cfg.check.ahlfors_bowen_depth,
        1.0,
        opts,
    )?;
    rows.push(CheckRow {
        check: "ahlfors_bowen",
        status: status(ab.pass),
        value: Some(ab.max_ratio_deviation),
        detail: format!("deviation growth {} per step", fmt_f64(ab.growth_per_step)),
    });

    // v_n/n should decay; window-k additive specs give exactly zero once ε ≤ l^{−(k−1)}
    let l = space.alphabet() as f64;
    let eps = cfg
        .check
        .variation_epsilon
        .unwrap_or_else(|| l.powi(-(spec.window() as i32 - 1)));
    let mut per_step = Vec::new();
    for n in 1..=cfg.check.variation_depth {
        per_step.push(variation(spec, space, n, eps, opts)? / n as f64);
    }
    let decays = per_step.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    rows.push(CheckRow {
        check: "variation",
        status: status(decays),
        value: per_step.last().copied(),
        detail: format!(
            "v_n/n at eps {} for n=1..{}: {}",
            fmt_f64(eps),
            cfg.check.variation_depth,
            per_step
                .iter()
                .map(|v| fmt_f64(*v))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    });

    if matches!(spec, ObservableSpec::Weighted { .. }) {
        rows.push(CheckRow {
            check: "almost_additivity",
            status: "not_applicable",
            value: None,
            detail: "weighted sums are not almost additive".into(),
        });
    } else {
        let depth = cfg.check.defect_depth;
        let mut worst: f64 = 0.0;
        for n in 1..=depth {
            for m in 1..=depth {
                worst = worst.max(almost_additivity_defect(
                    spec,
                    space,
                    n,
                    m,
                    DefectMode::Exhaustive,
                    opts,
                )?);
            }
        }
        let (ok, bound) = match spec {
            ObservableSpec::Cocycle { cocycle } => {
                let b = cocycle.entry_ratio_bound();
                (worst <= b, format!("bound {}", fmt_f64(b)))
            }
            _ if spec.is_additive() => (worst == 0.0, "additive: expected 0".into()),
            _ => (worst.is_finite(), "finite".into()),
        };
        rows.push(CheckRow {
            check: "almost_additivity",
            status: status(ok),
            value: Some(worst),
            detail: format!("max defect over n m <= {depth}; {bound}"),
        });
    }

    let mgf = log_mgf_curve(
        spec,
        space,
        &exp.measure,
        cfg.q_grid()?,
        &cfg.depths,
        &cfg.curve_options()?,
        opts,
    )?;
    let unconverged = mgf.converged.iter().filter(|c| !**c).count();
    rows.push(CheckRow {
        check: "limit_convergence",
        status: status(unconverged == 0),
        value: Some(mgf.error_bound.iter().cloned().fold(0.0, f64::max)),
        detail: format!(
            "{unconverged} of {} grid points above tolerance; max heuristic error shown",
            mgf.converged.len()
        ),
    });
    // same kink scan the spectrum label uses, converged or not
    let kinks: Vec<f64> = match gartner_ellis_check(&mgf) {
        Ok(ge) => ge.kinks,
        Err(Error::Unconverged(_)) => kink_scan(&mgf.limit_function().ensure_convex())
            .into_iter()
            .map(|(q, _)| q)
            .collect(),
        Err(e) => return Err(e),
    };
    let smooth = kinks.is_empty();
    rows.push(CheckRow {
        check: "gartner_ellis",
        status: status(smooth),
        value: Some(kinks.len() as f64),
        detail: if smooth {
            "no kinks".into()
        } else {
            format!(
                "kinks at q = {}",
                kinks
                    .iter()
                    .map(|q| fmt_f64(*q))
                    .collect::<Vec<_>>()
                    .join(" ")
            )
        },
    });

    let label = if spec.supports_equality() && ab.pass && smooth {
        SpectrumLabel::Equality
    } else {
        SpectrumLabel::UpperBound
    };
    Ok(CheckReport { rows, label })
}

pub fn check(
    cfg: &Config,
    exp: &Experiment,
    opts: &ExecOptions,
    emit: &Emit,
) -> Result<(Files, CheckReport)> {
    let report = check_report(cfg, exp, opts)?;
    let mut files = Files::new();
    if emit.format.csv() {
        files.push((emit.name("check.csv"), report.to_csv()));
    }
    if emit.format.json() {
        let doc = json!({ "config": cfg, "checks": report.rows, "label": report.label });
        files.push((emit.name("check.json"), to_json(&doc)));
    }
    Ok((files, report))
}

pub fn oracle_besicovitch(alpha: f64) -> String {
    let o = besicovitch_oracle(alpha);
    let dim = o.dimension.map(fmt_f64).unwrap_or_default();
    let rate = match o.rate.finite() {
        Some(r) => fmt_f64(r),
        None => "inf".into(),
    };
    format!("alpha,dimension,rate\n{},{dim},{rate}\n", fmt_f64(alpha))
}

pub fn oracle_binomial(n: u64, k: u64, p: f64) -> Result<String> {
    let prob = binomial_tail_oracle(n, k, p)?;
    let log = binomial_tail_log(n, k, p)?;
    Ok(format!(
        "n,k_min,p,probability,log_probability\n{n},{k},{},{},{}\n",
        fmt_f64(p),
        fmt_f64(prob),
        fmt_f64(log)
    ))
}

pub fn oracle_transfer(exp: &Experiment, qs: &[f64]) -> Result<String> {
    let mut out = String::from("q,pressure\n");
    for &q in qs {
        let p = transfer_pressure(&exp.spec, &exp.space, q)?;
        out.push_str(&format!("{},{}\n", fmt_f64(q), fmt_f64(p)));
    }
    Ok(out)
}
