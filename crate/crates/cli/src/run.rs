use std::collections::BTreeMap;
use std::path::PathBuf;

use mixfrac_core::eigensolver::{solve_direct, solve_recursive_rayleigh, RecursiveOptions, Spectrum};
use mixfrac_core::kernel::normalization_constant;
use mixfrac_core::maxprinciple::{
    g_eval, h_eval, strong_mp_check, verify_counterexample, weak_mp_trials, Convention, CounterexampleReport,
    HALF_GUARD,
};
use mixfrac_core::operator::max_offdiagonal;
use mixfrac_core::{Grid, GridFunction, HypothesisReport, MeasureComponent, OperatorMatrix, SignedMeasure};
use nalgebra::DVector;
use serde_json::json;

use crate::config::{ConventionConfig, RunConfig, SpectrumMethod, Task, Validated};
use crate::error::CliError;
use crate::output::{fmt_float, fmt_opt, OutputDir};
use crate::plot::{Marker, Plot, Series};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub force: bool,
    /// Overrides `output.dir` from the config.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Parses and validates the config, then runs its tasks in order.
///
/// Nothing is written when the config is invalid. `hypotheses.json` is
/// written before the hypothesis gate so that a refused run still explains
/// itself.
pub fn run(opts: &RunOptions) -> Result<RunSummary, CliError> {
    let cfg = RunConfig::from_path(&opts.config)?;
    let validated = cfg.validate()?;
    let dir = opts.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let mut out = OutputDir::create(&dir)?;
    let mut runner = Runner {
        cfg: &cfg,
        v: validated,
        force: opts.force,
        op: None,
        out: &mut out,
        seen: BTreeMap::new(),
    };
    runner.write_hypotheses()?;
    for task in &cfg.tasks {
        runner.run_task(task)?;
    }
    Ok(RunSummary {
        out_dir: out.root().to_path_buf(),
        files: out.written().to_vec(),
    })
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    v: Validated,
    force: bool,
    op: Option<OperatorMatrix>,
    out: &'a mut OutputDir,
    /// Tasks of each kind seen so far, for file-name suffixes.
    seen: BTreeMap<&'static str, usize>,
}

fn hypothesis_json(r: &HypothesisReport) -> serde_json::Value {
    json!({
        "mu0_ok": r.mu0_ok,
        "mu1_ok": r.mu1_ok,
        "gamma": if r.gamma.is_finite() { json!(r.gamma) } else { serde_json::Value::Null },
        "s_sharp": r.s_sharp,
    })
}

impl Runner<'_> {
    /// `""` for the first task of a kind, `"_2"`, `"_3"`, ... afterwards.
    fn suffix(&mut self, kind: &'static str) -> String {
        let count = self.seen.entry(kind).or_insert(0);
        *count += 1;
        if *count == 1 {
            String::new()
        } else {
            format!("_{count}")
        }
    }

    fn write_hypotheses(&mut self) -> Result<(), CliError> {
        let report = self.v.measure.hypothesis_report();
        self.out.write_json("hypotheses.json", &hypothesis_json(&report))?;
        if !report.ok() && !self.force {
            return Err(mixfrac_core::Error::HypothesisViolation(report).into());
        }
        Ok(())
    }

    fn operator(&mut self) -> Result<&OperatorMatrix, CliError> {
        if self.op.is_none() {
            let op = OperatorMatrix::assemble(&self.v.measure, &self.v.grid, self.cfg.measure.nodes_per_piece, self.force)?;
            self.op = Some(op);
        }
        Ok(self.op.as_ref().expect("assembled above"))
    }

    fn run_task(&mut self, task: &Task) -> Result<(), CliError> {
        match *task {
            Task::Spectrum { k, method } => self.spectrum(k, method),
            Task::Maxprinciple { trials, seed } => self.maxprinciple(trials, seed),
            Task::Counterexample { alpha, s, convention, n } => {
                let convention = match convention {
                    ConventionConfig::Unnormalized => Convention::Unnormalized,
                    ConventionConfig::Normalized => Convention::Normalized,
                };
                self.counterexample(alpha, s, convention, n.unwrap_or(self.v.grid.n()))
            }
        }
    }

    fn spectrum(&mut self, k: usize, method: SpectrumMethod) -> Result<(), CliError> {
        let suffix = self.suffix("spectrum");
        let op = self.operator()?;
        let direct = match method {
            SpectrumMethod::Both | SpectrumMethod::Direct => Some(solve_direct(op, k)?),
            SpectrumMethod::Recursive => None,
        };
        let recursive = match method {
            SpectrumMethod::Both | SpectrumMethod::Recursive => {
                Some(solve_recursive_rayleigh(op, k, &RecursiveOptions::default())?)
            }
            SpectrumMethod::Direct => None,
        };
        let grid = *op.grid();

        let header: Vec<String> = ["k", "lambda_direct", "lambda_recursive", "rel_gap"].map(String::from).to_vec();
        let rows = (0..k).map(|i| {
            let d = direct.as_ref().map(|s| s.lambdas[i]);
            let r = recursive.as_ref().map(|s| s.lambdas[i]);
            let gap = d.zip(r).map(|(d, r)| (d - r).abs() / d.abs());
            vec![(i + 1).to_string(), fmt_opt(d), fmt_opt(r), fmt_opt(gap)]
        });
        self.out.write_csv(&format!("eigenvalues{suffix}.csv"), &header, rows)?;

        let shown: &Spectrum = direct.as_ref().or(recursive.as_ref()).expect("at least one method runs");
        let mut header = vec!["x".to_string()];
        header.extend((1..=k).map(|i| format!("e{i}")));
        let rows = (0..grid.n()).map(|j| {
            let mut row = vec![fmt_float(grid.x(j + 1))];
            row.extend(shown.vectors.iter().map(|e| fmt_float(e.values()[j])));
            row
        });
        self.out.write_csv(&format!("eigenfunctions{suffix}.csv"), &header, rows)?;

        if self.cfg.output.emit_svg {
            let series = shown
                .vectors
                .iter()
                .enumerate()
                .map(|(i, e)| Series {
                    label: format!("e{} (λ = {:.6})", i + 1, shown.lambdas[i]),
                    points: with_boundary(&grid, e),
                })
                .collect();
            let plot = Plot {
                title: format!("Eigenfunctions, n = {}", grid.n()),
                x_label: "x".into(),
                y_label: "e_k(x)".into(),
                series,
                markers: vec![],
            };
            self.out.write_bytes(&format!("eigenfunctions{suffix}.svg"), plot.render().as_bytes())?;
        }
        Ok(())
    }

    fn maxprinciple(&mut self, trials: usize, seed: u64) -> Result<(), CliError> {
        let suffix = self.suffix("maxprinciple");
        let grid = self.v.grid;
        let weak = weak_mp_trials(&self.v.measure, &grid, trials, seed)?;
        let mut impulse = DVector::zeros(grid.n());
        impulse[grid.n() / 2] = 1.0;
        let strong = strong_mp_check(&self.v.measure, &grid, &GridFunction::new(grid, impulse)?)?;

        let header: Vec<String> = ["check", "trials", "seed", "min_value", "violations"].map(String::from).to_vec();
        let rows = vec![
            vec![
                "weak".into(),
                weak.trials.to_string(),
                weak.seed.to_string(),
                fmt_float(weak.min_solution_value),
                weak.violations.to_string(),
            ],
            vec![
                "strong_impulse".into(),
                "1".into(),
                String::new(),
                fmt_float(strong.min_scaled_value),
                usize::from(!strong.strictly_positive).to_string(),
            ],
        ];
        self.out.write_csv(&format!("mp_report{suffix}.csv"), &header, rows)?;
        Ok(())
    }

    fn counterexample(&mut self, alpha: f64, s: f64, convention: Convention, n: usize) -> Result<(), CliError> {
        let suffix = self.suffix("counterexample");
        let report = verify_counterexample(alpha, s, n, convention)?;

        // The same operator as a signed measure: delta_1 - (alpha / 2c) delta_s.
        let weight = alpha / (2.0 * normalization_constant(1, s));
        let signed = SignedMeasure::new(
            vec![MeasureComponent::atom(1.0, 1.0)?],
            vec![MeasureComponent::atom(s, weight)?],
            1.0,
        )?;
        let grid = Grid::new(-1.0, 1.0, n)?;
        let assembled = OperatorMatrix::assemble(&signed, &grid, 1, true)?;
        let max_off = max_offdiagonal(assembled.matrix());

        let header: Vec<String> = ["x", "u_R", "residual"].map(String::from).to_vec();
        let rows = (0..report.nodes.len())
            .map(|i| vec![fmt_float(report.nodes[i]), fmt_float(report.u_values[i]), fmt_float(report.residuals[i])]);
        self.out.write_csv(&format!("counterexample{suffix}.csv"), &header, rows)?;
        let summary = json!({
            "alpha": report.alpha,
            "alpha_effective": report.alpha_effective,
            "s": report.s,
            "convention": match convention { Convention::Unnormalized => "unnormalized", Convention::Normalized => "normalized" },
            "r0": report.r0,
            "grid_residual_min": report.grid_residual_min,
            "u_max_interior": report.u_max_interior,
            "closedform_oracle_dev": report.closedform_oracle_dev,
            "confirmed": report.confirmed(),
            "assembled_max_offdiagonal": max_off,
        });
        self.out.write_json(&format!("counterexample{suffix}.json"), &summary)?;

        if self.cfg.output.emit_svg {
            let residual = residual_plot(&report);
            self.out.write_bytes(&format!("counterexample_residual{suffix}.svg"), residual.render().as_bytes())?;
            let radius = radius_plot(&report)?;
            self.out.write_bytes(&format!("counterexample_radius{suffix}.svg"), radius.render().as_bytes())?;
        }
        Ok(())
    }
}

fn with_boundary(grid: &Grid, e: &GridFunction) -> Vec<(f64, f64)> {
    let mut pts = vec![(grid.a(), 0.0)];
    pts.extend((0..grid.n()).map(|j| (grid.x(j + 1), e.values()[j])));
    pts.push((grid.b(), 0.0));
    pts
}

fn residual_plot(report: &CounterexampleReport) -> Plot {
    Plot {
        title: format!("Counterexample residual, alpha = {}, s = {}, R0 = {:.6}", report.alpha, report.s, report.r0),
        x_label: "x".into(),
        y_label: "-u_R'' - alpha (-Δ)^s u_R".into(),
        series: vec![Series {
            label: "residual".into(),
            points: report.nodes.iter().copied().zip(report.residuals.iter().copied()).collect(),
        }],
        markers: vec![Marker::Horizontal {
            y: 0.0,
            label: "0".into(),
        }],
    }
}

/// `g_{R,s}(1)` (or `h_R(1)` at `s = 1/2`) against `R`, with the target level.
fn radius_plot(report: &CounterexampleReport) -> Result<Plot, CliError> {
    let (s, r0) = (report.s, report.r0);
    let lo = r0 / 20.0;
    let hi = 3.0 * r0;
    let samples = 200;
    let mut points = Vec::with_capacity(samples + 1);
    for i in 0..=samples {
        let r = lo + (hi - lo) * i as f64 / samples as f64;
        let v = if (s - 0.5).abs() < HALF_GUARD { h_eval(1.0, r)? } else { g_eval(1.0, r, s)? };
        points.push((r, v));
    }
    Ok(Plot {
        title: format!("Endpoint value against R, s = {s}"),
        x_label: "R".into(),
        y_label: "(-Δ)^s u_R (1), unnormalized".into(),
        series: vec![Series {
            label: "g_{R,s}(1)".into(),
            points,
        }],
        markers: vec![
            Marker::Horizontal {
                y: -2.0 / report.alpha,
                label: "-2/alpha".into(),
            },
            Marker::Vertical {
                x: r0,
                label: "R0".into(),
            },
        ],
    })
}
