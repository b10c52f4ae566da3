use serde_json::{json, Value};
use walkmax_core::asymptotics::{
    constants as model_constants, convergence_report, convolution_prediction, finite_constant, local_constant,
    stopped_constant, tail_level_grid, AsymptoticConstants, ConvergenceReport, Provenance, TailComponent, Verdict,
};
use walkmax_core::increments::{lgamma_diagnostic, sgamma_diagnostic};
use walkmax_core::lattice::{
    bigjump_oracle, convolution_power_tail_with, default_step, default_top, finite_horizon_with, lattice_for,
    lindley_fixed_point_with, snap, stopped_max_sigma1, top_covering, ConvolutionMethod, LindleyOptions,
};
use walkmax_core::montecarlo::{
    bigjump_conditional_ratio, bigjump_records, estimate_finite_tail_crude, estimate_stopped_tail_crude,
    estimate_tail_crude, renewal_diagnostics,
};
use walkmax_core::{Error, EstimatorReport, HChoice, IncrementModel, Interval, LatticePmf, MaxLaw, Result, SimConfig};

use crate::args::*;
use crate::output::{table, Outcome};

fn parse_model(a: &ModelArgs) -> Result<IncrementModel> {
    a.model.parse()
}

fn h_choice(h: HArg) -> HChoice {
    match h {
        HArg::Quarter => HChoice::Quarter,
        HArg::Sqrt => HChoice::Sqrt,
    }
}

fn sim_config(s: &SimArgs) -> SimConfig {
    SimConfig {
        n_paths: s.n_paths,
        seed: s.seed,
        shards: s.shards,
        slack: None,
        horizon_cap: s.horizon_cap,
    }
}

/// The given x-grid, or the points where `P(ξ > x)` is `1e-4, …, 1e-9`.
fn x_grid(model: &IncrementModel, xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return tail_level_grid(model, &DEFAULT_LEVELS);
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Param {
            name: "x",
            reason: "grid must be finite and strictly increasing".into(),
        });
    }
    Ok(xs.to_vec())
}

fn step_for(model: &IncrementModel, grid: &GridArgs) -> Result<f64> {
    match grid.step {
        Some(h) if !(h > 0.0 && h.is_finite()) => Err(Error::Param {
            name: "step",
            reason: format!("must be positive, got {h}"),
        }),
        Some(h) => Ok(h),
        None => Ok(default_step(model)),
    }
}

/// Lattice law of the increment and of the all-time maximum.
struct Oracle {
    h: f64,
    top: f64,
    pmf: LatticePmf,
    law: MaxLaw,
}

impl Oracle {
    /// Grid covering `x_max` (if any) with the certificate margin.
    fn build(model: &IncrementModel, grid: &GridArgs, h: f64, x_max: Option<f64>) -> Result<Self> {
        let top = match x_max {
            Some(x) => top_covering(model, h, x),
            None => default_top(model, h),
        };
        let pmf = lattice_for(model, h, top)?;
        let law = lindley_fixed_point_with(
            &pmf,
            &LindleyOptions {
                tol: grid.fixed_point_tol,
                top: Some(top),
                ..LindleyOptions::default()
            },
        )?;
        Ok(Oracle { h, top, pmf, law })
    }

    fn resolved(&self, xs: &[f64]) -> Value {
        json!({ "step": self.h, "top": self.top, "x_grid": xs })
    }
}

/// `T(snap(x))`: the continuous tail at the cell boundary that the lattice
/// event `{kh > x}` corresponds to.
fn snapped_tail(model: &IncrementModel, x: f64, h: f64) -> f64 {
    model.tail(snap(x, h))
}

fn convergence_table(report: &ConvergenceReport) -> Result<String> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii csv"))
}

fn estimator_rows(reports: &[EstimatorReport]) -> String {
    table(
        "method,x,estimate,stderr,bias_bound,n_paths,n_effective,horizon_hits,seed",
        reports.iter().map(|r| {
            format!(
                "{},{},{:e},{:e},{:e},{},{},{},{}",
                r.method, r.x, r.estimate, r.stderr, r.bias_bound, r.n_paths, r.n_effective, r.horizon_hits, r.seed
            )
        }),
    )
}

/// A report passes on strict convergence, or on a decreasing
/// least-squares trend of the deviations that ends within tolerance: the
/// second-order terms make the ratio cross its limit at moderate `x`.
fn report_passes(report: &ConvergenceReport) -> bool {
    report.verdict == Verdict::Converging || report.trend_passes()
}

pub fn verify_class(a: &VerifyClassArgs) -> Result<Outcome> {
    let model = parse_model(&a.model)?;
    let lg = lgamma_diagnostic(&model, &a.k, &a.x);
    let sg = sgamma_diagnostic(&model, h_choice(a.h), &a.sx)?;
    let not_in_class = !model.in_class();
    let mut notices = Vec::new();
    if not_in_class {
        notices.push(format!(
            "not_in_class: {model} is a lattice law outside the twisted class"
        ));
    }
    if lg.log_domain {
        notices.push("tail ratios evaluated in the log domain".into());
    }
    let passed = not_in_class || (lg.passed && sg.decreasing);
    let rows = lg.rows.iter().map(|r| {
        format!(
            "{},{},{},{},{:e},{:e}",
            r.k, r.x, r.ratio, r.target, r.deviation, r.rel_deviation
        )
    });
    Ok(Outcome {
        table: Some(table("k,x,ratio,target,deviation,rel_deviation", rows)),
        report: json!({ "not_in_class": not_in_class, "lgamma": lg, "sgamma": sg }),
        resolved: json!({ "h_choice": h_choice(a.h) }),
        passed,
        notices,
        extra: Vec::new(),
    })
}

pub fn constants(a: &ConstantsArgs) -> Result<Outcome> {
    let model = parse_model(&a.model)?;
    let h = step_for(&model, &a.grid)?;
    let mut notices = Vec::new();
    let gamma = match (model.gamma(), a.gamma) {
        (Some(g), None) => g,
        (Some(g), Some(given)) if given != g => {
            return Err(Error::Param {
                name: "gamma",
                reason: format!("{model} has γ = {g}; --gamma {given} contradicts it"),
            })
        }
        (Some(g), Some(_)) => g,
        (None, Some(g)) => {
            notices.push(format!("not_in_class: {model}; constants use the supplied γ = {g}"));
            g
        }
        (None, None) => {
            return Err(Error::Param {
                name: "gamma",
                reason: format!("{model} is not in the twisted class; pass --gamma"),
            })
        }
    };
    if model.in_class() {
        model.require_theorem_regime()?;
    }
    let phg = model.mgf(gamma)?.value;
    if !(phg < 1.0) {
        return Err(Error::Regime(format!(
            "φ(γ) = {phg} ≥ 1 at γ = {gamma}: the maximum is driven by drift, not by one big jump"
        )));
    }
    let oracle = Oracle::build(&model, &a.grid, h, None)?;
    let consts = if model.in_class() {
        model_constants(&model, &oracle.law)?
    } else {
        AsymptoticConstants::from_parts(gamma, phg, oracle.law.exp_moment(gamma)?)?
    };
    if oracle.law.tail(0.0) == 0.0 {
        notices.push("M ≡ 0: the walk never rises above zero, so E e^{γM} = 1 and C = 1/(1 − φ(γ))".into());
    }
    let mut buf = Vec::new();
    oracle.law.write_csv(&mut buf)?;
    Ok(Outcome {
        report: json!({
            "constants": consts,
            "within_bracket": consts.within_bracket(),
            "max_law": {
                "step": oracle.law.step,
                "top": oracle.law.top(),
                "overflow": oracle.law.overflow,
                "trunc_bound": oracle.law.trunc_bound,
                "certificate": oracle.law.certificate,
            },
        }),
        table: Some(String::from_utf8(buf).expect("ascii csv")),
        resolved: json!({ "step": h, "top": oracle.top, "gamma": gamma }),
        passed: true,
        notices,
        extra: Vec::new(),
    })
}

pub fn tail_report(a: &TailReportArgs) -> Result<Outcome> {
    let model = parse_model(&a.model)?;
    model.require_theorem_regime()?;
    let xs = x_grid(&model, &a.x)?;
    let h = step_for(&model, &a.grid)?;
    let oracle = Oracle::build(&model, &a.grid, h, xs.last().copied())?;
    let consts = model_constants(&model, &oracle.law)?;
    let (measured, estimates, provenance) = match a.measured {
        Measured::Oracle => (
            xs.iter()
                .map(|&x| (x, oracle.law.tail(x) / snapped_tail(&model, x, h)))
                .collect::<Vec<_>>(),
            None,
            Provenance::Oracle,
        ),
        Measured::Mc => {
            let cfg = sim_config(&a.sim);
            let reports = xs
                .iter()
                .map(|&x| estimate_tail_crude(&model, x, &cfg))
                .collect::<Result<Vec<_>>>()?;
            let measured = reports.iter().map(|r| (r.x, r.estimate / model.tail(r.x))).collect();
            (measured, Some(reports), Provenance::Simulation)
        }
    };
    let report = convergence_report(consts.c, &measured, a.tol, provenance)?;
    let refinement_change = if a.refine {
        let fine = Oracle::build(
            &model,
            &GridArgs {
                step: Some(h / 2.0),
                fixed_point_tol: a.grid.fixed_point_tol,
            },
            h / 2.0,
            xs.last().copied(),
        )?;
        let change = xs
            .iter()
            .map(|&x| {
                let coarse = oracle.law.tail(x) / snapped_tail(&model, x, h);
                let refined = fine.law.tail(x) / snapped_tail(&model, x, h / 2.0);
                (refined / coarse - 1.0).abs()
            })
            .fold(0.0, f64::max);
        Some(change)
    } else {
        None
    };
    let passed = report_passes(&report);
    let mut table_text = convergence_table(&report)?;
    if let Some(reports) = &estimates {
        table_text = estimator_rows(reports) + "\n" + &table_text;
    }
    Ok(Outcome {
        report: json!({
            "constants": consts,
            "convergence": report,
            "estimates": estimates,
            "refinement_change": refinement_change,
        }),
        table: Some(table_text),
        resolved: oracle.resolved(&xs),
        passed,
        notices: Vec::new(),
        extra: Vec::new(),
    })
}

pub fn local_report(a: &LocalReportArgs) -> Result<Outcome> {
    let model = parse_model(&a.model)?;
    model.require_theorem_regime()?;
    let xs = x_grid(&model, &a.x)?;
    let h = step_for(&model, &a.grid)?;
    let x_max = xs.last().copied().map(|x| x + a.t);
    let oracle = Oracle::build(&model, &a.grid, h, x_max)?;
    let consts = model_constants(&model, &oracle.law)?;
    let factor = local_constant(&consts, a.t)? / consts.c.value;
    let predicted = consts.c.scale(factor);
    let measured: Vec<(f64, f64)> = xs
        .iter()
        .map(|&x| (x, oracle.law.prob_between(x, x + a.t) / snapped_tail(&model, x, h)))
        .collect();
    let report = convergence_report(predicted, &measured, a.tol, Provenance::Oracle)?;
    let passed = report_passes(&report);
    Ok(Outcome {
        table: Some(convergence_table(&report)?),
        report: json!({
            "constants": consts,
            "t": a.t,
            "predicted": predicted,
            "convergence": report,
        }),
        resolved: oracle.resolved(&xs),
        passed,
        notices: Vec::new(),
        extra: Vec::new(),
    })
}

pub fn finite(a: &FiniteArgs) -> Result<Outcome> {
    let model = parse_model(&a.model)?;
    model.require_theorem_regime()?;
    if a.n.contains(&0) {
        return Err(Error::Param {
            name: "N",
            reason: "horizons must be ≥ 1".into(),
        });
    }
    let xs = x_grid(&model, &a.x)?;
    let h = step_for(&model, &a.grid)?;
    let top = top_covering(&model, h, *xs.last().expect("non-empty grid"));
    let pmf = lattice_for(&model, h, top)?;
    let n_max = a.n.iter().copied().max().unwrap_or(1);
    let laws = finite_horizon_with(&pmf, n_max, Some(top))?;
    let cfg = sim_config(&a.sim);
    let mut sections = Vec::new();
    let mut tables = Vec::new();
    let mut passed = true;
    for &n in &a.n {
        let predicted = finite_constant(&model, n, &laws)?;
        let (measured, estimates, provenance) = match a.measured {
            Measured::Oracle => (
                xs.iter()
                    .map(|&x| (x, laws[n].tail(x) / snapped_tail(&model, x, h)))
                    .collect::<Vec<_>>(),
                None,
                Provenance::Oracle,
            ),
            Measured::Mc => {
                let reports = xs
                    .iter()
                    .map(|&x| estimate_finite_tail_crude(&model, x, n, &cfg))
                    .collect::<Result<Vec<_>>>()?;
                let measured = reports.iter().map(|r| (r.x, r.estimate / model.tail(r.x))).collect();
                (measured, Some(reports), Provenance::Simulation)
            }
        };
        let report = convergence_report(predicted, &measured, a.tol, provenance)?;
        passed &= report_passes(&report);
        tables.push(
            report
                .rows
                .iter()
                .map(|r| format!("{n},{},{:e},{:e},{},{}", r.x, r.measured, r.predicted, r.ratio, r.dev))
                .collect::<Vec<_>>(),
        );
        sections.push(json!({
            "n": n,
            "predicted": predicted,
            "convergence": report,
            "estimates": estimates,
        }));
    }
    Ok(Outcome {
        report: json!({ "horizons": sections }),
        table: Some(table("n,x,measured,predicted,ratio,dev", tables.into_iter().flatten())),
        resolved: json!({ "step": h, "top": top, "x_grid": xs }),
        passed,
        notices: Vec::new(),
        extra: Vec::new(),
    })
}

pub fn stopped(a: &StoppedArgs) -> Result<Outcome> {
    let model = parse_model(&a.model)?;
    model.require_theorem_regime()?;
    let xs = x_grid(&model, &a.x)?;
    let h = step_for(&model, &a.grid)?;
    let oracle = Oracle::build(&model, &a.grid, h, xs.last().copied())?;
    let consts = model_constants(&model, &oracle.law)?;
    let law = stopped_max_sigma1(&oracle.pmf, a.horizon, &xs)?;
    let predicted = stopped_constant(&consts, &law)?;
    let (measured, estimates, provenance) = match a.measured {
        Measured::Oracle => (
            law.max_tail
                .iter()
                .map(|t| (t.x, t.prob / snapped_tail(&model, t.x, h)))
                .collect::<Vec<_>>(),
            None,
            Provenance::Oracle,
        ),
        Measured::Mc => {
            let cfg = sim_config(&a.sim);
            let reports = xs
                .iter()
                .map(|&x| estimate_stopped_tail_crude(&model, x, &cfg))
                .collect::<Result<Vec<_>>>()?;
            let measured = reports.iter().map(|r| (r.x, r.estimate / model.tail(r.x))).collect();
            (measured, Some(reports), Provenance::Simulation)
        }
    };
    let report = convergence_report(predicted, &measured, a.tol, provenance)?;
    let passed = report_passes(&report);
    Ok(Outcome {
        table: Some(convergence_table(&report)?),
        report: json!({
            "constants": consts,
            "predicted": predicted,
            "stopped_tails": law.max_tail,
            "chi_escape": law.chi_escape,
            "residual": law.residual,
            "convergence": report,
            "estimates": estimates,
        }),
        resolved: oracle.resolved(&xs),
        passed,
        notices: Vec::new(),
        extra: Vec::new(),
    })
}

pub fn bigjump(a: &BigjumpArgs) -> Result<Outcome> {
    let model = parse_model(&a.model)?;
    let xs = x_grid(&model, &a.x)?;
    let hc = h_choice(a.h);
    let mut extra = Vec::new();
    let (ratios, report, table_text, resolved) = match a.measured {
        Measured::Oracle => {
            let h = step_for(&model, &a.grid)?;
            let oracle = Oracle::build(&model, &a.grid, h, xs.last().copied())?;
            let rows = xs
                .iter()
                .map(|&x| bigjump_oracle(&oracle.pmf, &oracle.law, x, hc.apply(x)))
                .collect::<Result<Vec<_>>>()?;
            let ratios: Vec<f64> = rows.iter().map(|r| r.conditional_ratio()).collect();
            let text = table(
                "x,a,tail,joint,conditional_ratio,bigjump_sum,error_bound",
                rows.iter().map(|r| {
                    format!(
                        "{},{},{:e},{:e},{},{:e},{:e}",
                        r.x,
                        r.a,
                        r.tail,
                        r.joint,
                        r.conditional_ratio(),
                        r.bigjump_sum,
                        r.error_bound
                    )
                }),
            );
            let report: Vec<Value> = rows
                .iter()
                .map(|r| json!({ "oracle": r, "conditional_ratio": r.conditional_ratio() }))
                .collect();
            (ratios, json!(report), text, oracle.resolved(&xs))
        }
        Measured::Mc => {
            let cfg = sim_config(&a.sim);
            let reports = xs
                .iter()
                .map(|&x| bigjump_conditional_ratio(&model, x, hc, &cfg))
                .collect::<Result<Vec<_>>>()?;
            if let Some(path) = &a.trace {
                let mut lines = Vec::new();
                for &x in &xs {
                    let records = bigjump_records(&model, x, hc.apply(x), &cfg)?;
                    lines.extend(records.iter().enumerate().map(|(i, r)| {
                        format!(
                            "{x},{i},{},{},{},{}",
                            opt(r.first_above_a),
                            opt(r.bigjump_index),
                            opt(r.exceed_time),
                            r.undecided
                        )
                    }));
                }
                extra.push((
                    path.clone(),
                    table("x,path,first_above_a,bigjump_index,exceed_time,undecided", lines),
                ));
            }
            let ratios = reports.iter().map(|r| r.estimate).collect();
            let text = estimator_rows(&reports);
            (ratios, json!(reports), text, json!({ "x_grid": xs }))
        }
    };
    let last = ratios.last().copied().unwrap_or(f64::NAN);
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let passed = last >= a.threshold && increasing;
    Ok(Outcome {
        report: json!({
            "h_choice": hc,
            "rows": report,
            "final_ratio": last,
            "increasing": increasing,
            "threshold": a.threshold,
        }),
        table: Some(table_text),
        resolved,
        passed,
        notices: Vec::new(),
        extra,
    })
}

fn opt(v: Option<usize>) -> String {
    v.map_or(String::new(), |n| n.to_string())
}

pub fn renewal(a: &RenewalArgs) -> Result<Outcome> {
    let model = parse_model(&a.model)?;
    if a.r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Param {
            name: "r",
            reason: "grid must be strictly increasing".into(),
        });
    }
    let rows = renewal_diagnostics(&model, &a.r, &sim_config(&a.sim))?;
    let delta_decreasing = rows.windows(2).all(|w| w[1].delta < w[0].delta);
    let phi_decreasing = rows.windows(2).all(|w| match (w[0].phi, w[1].phi) {
        (Some(p0), Some(p1)) => p1 < p0,
        _ => true,
    });
    let text = table(
        "r,delta,delta_stderr,delta_bias_bound,phi,phi_stderr,phi_bias_bound,undecided",
        rows.iter().map(|r| {
            format!(
                "{},{:e},{:e},{:e},{},{},{},{}",
                r.r,
                r.delta,
                r.delta_stderr,
                r.delta_bias_bound,
                r.phi.map_or(String::new(), |v| format!("{v:e}")),
                r.phi_stderr.map_or(String::new(), |v| format!("{v:e}")),
                r.phi_bias_bound.map_or(String::new(), |v| format!("{v:e}")),
                r.undecided
            )
        }),
    );
    let mut notices = Vec::new();
    if !model.in_class() {
        notices.push(format!("not_in_class: {model}; only δ is reported"));
    }
    Ok(Outcome {
        report: json!({
            "rows": rows,
            "delta_decreasing": delta_decreasing,
            "phi_decreasing": phi_decreasing,
        }),
        table: Some(text),
        resolved: json!({ "r_grid": a.r }),
        passed: delta_decreasing && phi_decreasing,
        notices,
        extra: Vec::new(),
    })
}

pub fn convolution_check(a: &ConvolutionArgs) -> Result<Outcome> {
    let model = parse_model(&a.model)?;
    let phg = model.phi_hat().ok_or_else(|| {
        Error::Regime(format!(
            "{model} is not in the twisted class (not_in_class); φ̂ is undefined"
        ))
    })?;
    if a.n.contains(&0) {
        return Err(Error::Param {
            name: "n",
            reason: "powers must be ≥ 1".into(),
        });
    }
    let xs = x_grid(&model, &a.x)?;
    let h = step_for(&model, &a.grid)?;
    let x_max = *xs.last().expect("non-empty grid");
    // Summands above the span would be lost; cover the increment law to a
    // level a million times rarer than the largest evaluation point.
    let top = tail_level_grid(&model, &[1e-6 * model.tail(x_max)])?[0].max(x_max + h);
    let pmf = lattice_for(&model, h, top)?;
    let method = if a.fft {
        ConvolutionMethod::Fft
    } else {
        ConvolutionMethod::Direct
    };
    let mut sections = Vec::new();
    let mut lines = Vec::new();
    let mut passed = true;
    for &n in &a.n {
        let prediction = convolution_prediction(&vec![TailComponent { phi_hat: phg, c: 1.0 }; n])?;
        let rows = convolution_power_tail_with(&pmf, n, &xs, method)?;
        let measured: Vec<(f64, f64)> = rows.iter().map(|r| (r.x, r.ratio())).collect();
        let report = convergence_report(Interval::exact(prediction), &measured, a.tol, Provenance::Oracle)?;
        passed &= report_passes(&report);
        lines.extend(
            report
                .rows
                .iter()
                .map(|r| format!("{n},{},{:e},{:e},{},{}", r.x, r.measured, r.predicted, r.ratio, r.dev)),
        );
        sections.push(json!({ "n": n, "predicted": prediction, "rows": rows, "convergence": report }));
    }
    Ok(Outcome {
        report: json!({ "method": method, "powers": sections }),
        table: Some(table("n,x,measured,predicted,ratio,dev", lines)),
        resolved: json!({ "step": h, "top": top, "x_grid": xs }),
        passed,
        notices: Vec::new(),
        extra: Vec::new(),
    })
}
