use std::fs;
use std::path::{Path, PathBuf};

use saddle_exit::dynsys::registry::{self, TruthCard};
use saddle_exit::mc::{
    compare_to_limit, convergence_sweep, ks_band_99, lemma_tests, run_batch, samples_csv, sweep_csv, CompareOptions,
};
use saddle_exit::sde::{ExitSample, SampleStatus};
use saddle_exit::theory::{analyze, sigma_at_fixed_point, Analysis, Side};
use saddle_exit::ComparisonReport;
use serde::Serialize;

use crate::config::{DomainSpec, Experiment, ExperimentConfig, ModelSpec};
use crate::CliError;

const CDF_POINTS: usize = 200;
/// Trajectories per Monte Carlo check in `verify`.
const VERIFY_N: usize = 2_000;
const VERIFY_LEMMA_N: usize = 500;

pub struct Context {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::input(format!("output_dir: cannot create {}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    fn prepare(&self) -> Result<(Experiment, Analysis<f64>), CliError> {
        let exp = self.config.experiment()?;
        let analysis = analyze(&exp.model, &exp.x0, &self.config.analysis_options())?;
        Ok((exp, analysis))
    }

    fn compare_options(&self, exp: &Experiment) -> CompareOptions {
        let mut o = CompareOptions::new(exp.model.domain().diameter());
        if let Some(m) = self.config.tolerances.min_per_side {
            o.min_per_side = m;
        }
        o
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct CdfRow {
    t: f64,
    cdf_plus: f64,
    cdf_minus: f64,
    density_plus: f64,
    density_minus: f64,
}

#[derive(Serialize)]
struct RawTable {
    plus: Vec<(f64, f64)>,
    minus: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    lambda: f64,
    v: Vec<f64>,
    ell: Vec<f64>,
    /// `null` when there is no other eigenvalue.
    gap: Option<f64>,
    eigenvalues: Vec<(f64, f64)>,
    saddle: Vec<f64>,
    x0: Vec<f64>,
    q_plus: Vec<f64>,
    q_minus: Vec<f64>,
    h_plus: f64,
    h_minus: f64,
    h_error: f64,
    sigma: f64,
    sigma_error: f64,
    raw_table: RawTable,
    cdf_table: Vec<CdfRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth_card: Option<TruthCard>,
}

/// Closed-form parameters when the config is a built-in model in a ball
/// centred on the saddle and started there.
fn truth_card(cfg: &ExperimentConfig, exp: &Experiment) -> Option<TruthCard> {
    let DomainSpec::Ball { radius, center: None } = cfg.domain else {
        return None;
    };
    if cfg.saddle_guess.is_some() || exp.x0.iter().any(|&c| c != 0.0) {
        return None;
    }
    match cfg.model {
        ModelSpec::LinearSaddle { lambda, .. } => Some(registry::linear_saddle_card(lambda, radius)),
        ModelSpec::CubicSaddle { lambda, mu, coupling } => registry::cubic_saddle_card(lambda, mu, coupling, radius),
        _ => None,
    }
}

fn cdf_table(a: &Analysis<f64>) -> Vec<CdfRow> {
    let law = &a.law;
    let lo = law.quantile(Side::Plus, 1e-4).min(law.quantile(Side::Minus, 1e-4));
    let hi = law.quantile(Side::Plus, 1.0 - 1e-4).max(law.quantile(Side::Minus, 1.0 - 1e-4));
    (0..CDF_POINTS)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / (CDF_POINTS - 1) as f64;
            CdfRow {
                t,
                cdf_plus: law.cdf(Side::Plus, t),
                cdf_minus: law.cdf(Side::Minus, t),
                density_plus: law.density(Side::Plus, t),
                density_minus: law.density(Side::Minus, t),
            }
        })
        .collect()
}

pub fn analyze_cmd(ctx: &Context) -> Result<PathBuf, CliError> {
    let (exp, a) = ctx.prepare()?;
    let report = AnalyzeReport {
        lambda: a.spectral.lambda,
        v: a.spectral.v.clone(),
        ell: a.spectral.ell.clone(),
        gap: a.spectral.gap.is_finite().then_some(a.spectral.gap),
        eigenvalues: a.spectral.eigenvalues.clone(),
        saddle: exp.saddle.clone(),
        x0: exp.x0.clone(),
        q_plus: a.curve.q_plus.clone(),
        q_minus: a.curve.q_minus.clone(),
        h_plus: a.h.h_plus,
        h_minus: a.h.h_minus,
        h_error: a.h.extrapolation_error_estimate,
        sigma: a.sigma.sigma,
        sigma_error: a.sigma.error_bar,
        raw_table: RawTable { plus: a.h.raw_plus.clone(), minus: a.h.raw_minus.clone() },
        cdf_table: cdf_table(&a),
        truth_card: truth_card(&ctx.config, &exp),
    };
    ctx.write("analyze.json", &to_json(&report))
}

fn batch(ctx: &Context, exp: &Experiment, a: &Analysis<f64>, eps: f64, n: usize) -> Result<Vec<ExitSample<f64>>, CliError> {
    let cfg = &ctx.config;
    Ok(run_batch(&exp.model, &a.spectral, &a.law, &exp.x0, eps, n, cfg.seed, &cfg.sde_options())?)
}

pub fn sample_cmd(ctx: &Context) -> Result<PathBuf, CliError> {
    let eps = ctx.config.require_eps()?;
    let (exp, a) = ctx.prepare()?;
    let samples = batch(ctx, &exp, &a, eps, ctx.config.n)?;
    ctx.write("samples.csv", &samples_csv(&samples))
}

fn parse_field(path: &Path, line: usize, col: &str, raw: &str) -> Result<f64, CliError> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::input(format!("{}:{line}: column {col}: not a number: {raw:?}", path.display())))
}

/// Reads a CSV written by `sample`.
pub fn read_samples(path: &Path, seed: u64) -> Result<Vec<ExitSample<f64>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("samples: cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let ncol = header.len();
    if ncol < 6 || header[..3] != ["traj", "eps", "tau"] || header[ncol - 2..] != ["side", "capped"] {
        return Err(CliError::input(format!("samples: {} has an unexpected header", path.display())));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != ncol {
            return Err(CliError::input(format!("{}:{}: expected {ncol} columns", path.display(), k + 2)));
        }
        let num = |i: usize| parse_field(path, k + 2, header[i], cols[i]);
        let exit_point = (3..ncol - 2).map(num).collect::<Result<Vec<_>, _>>()?;
        let tau = num(2)?;
        let status = match (cols[ncol - 1].trim(), exit_point.iter().any(|c| c.is_nan())) {
            ("0", _) => SampleStatus::Exited,
            (_, true) => SampleStatus::NonFinite,
            _ => SampleStatus::Capped,
        };
        out.push(ExitSample {
            trajectory_index: num(0)? as u64,
            seed,
            eps: num(1)?,
            tau,
            exit_point,
            side: num(ncol - 2)? as i8,
            status,
        });
    }
    if out.is_empty() {
        return Err(CliError::input(format!("samples: {} has no rows", path.display())));
    }
    Ok(out)
}

pub fn compare_cmd(ctx: &Context) -> Result<PathBuf, CliError> {
    let (exp, a) = ctx.prepare()?;
    let samples = match &ctx.config.samples {
        Some(p) => read_samples(p, ctx.config.seed)?,
        None => batch(ctx, &exp, &a, ctx.config.require_eps()?, ctx.config.n)?,
    };
    let report = compare_to_limit(&samples, &a.law, &ctx.compare_options(&exp))?;
    ctx.write("compare.json", &to_json(&report))
}

pub fn convergence_cmd(ctx: &Context) -> Result<PathBuf, CliError> {
    let eps_list = ctx.config.require_eps_list()?;
    let (exp, a) = ctx.prepare()?;
    let cfg = &ctx.config;
    let rows =
        convergence_sweep(&exp.model, &a.spectral, &a.law, &exp.x0, eps_list, cfg.n, cfg.seed, &cfg.sde_options())?;
    ctx.write("convergence.csv", &sweep_csv(&rows))
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value >= threshold }
    }
}

fn mc_checks(r: &ComparisonReport, checks: &mut Vec<Check>) {
    checks.push(Check::at_most("ks_plus", r.ks_plus, ks_band_99(r.n_plus)));
    checks.push(Check::at_most("ks_minus", r.ks_minus, ks_band_99(r.n_minus)));
    let exited = (r.n - r.n_capped) as f64;
    checks.push(Check::at_most("side_fraction_deviation", (r.side_fraction_plus - 0.5).abs(), 1.5 / exited.sqrt()));
    let conc = r.concentration_at(0.05 * r.diameter).unwrap_or(0.0);
    checks.push(Check::at_least("concentration_0.05_diam", conc, 0.99));
    checks.push(Check::at_most("capped_fraction", r.n_capped as f64 / r.n as f64, 0.01));
}

/// Reduced-size acceptance checks on the configured model. Returns whether
/// every check passed.
pub fn verify_cmd(ctx: &Context) -> Result<(PathBuf, bool), CliError> {
    let (exp, a) = ctx.prepare()?;
    let cfg = &ctx.config;
    let mut checks = Vec::new();
    checks.push(Check::at_most("h_error", a.h.extrapolation_error_estimate, 1e-3));
    if exp.x0.iter().all(|&c| c == 0.0) {
        let exact = sigma_at_fixed_point(&a.spectral);
        checks.push(Check::at_most("sigma_fixed_point", (a.sigma.sigma - exact).abs(), 1e-6));
    }
    if let Some(card) = truth_card(cfg, &exp) {
        checks.push(Check::at_most("h_plus_truth", (a.h.h_plus - card.h_plus).abs(), 1e-3));
        checks.push(Check::at_most("h_minus_truth", (a.h.h_minus - card.h_minus).abs(), 1e-3));
        checks.push(Check::at_most("sigma_truth", (a.sigma.sigma - card.sigma).abs(), 1e-6));
    }
    let eps = cfg.eps.unwrap_or(1e-4);
    let samples = batch(ctx, &exp, &a, eps, cfg.n.min(VERIFY_N))?;
    let report = compare_to_limit(&samples, &a.law, &ctx.compare_options(&exp))?;
    mc_checks(&report, &mut checks);

    let lemma_opts = saddle_exit::mc::LemmaOptions { n: VERIFY_LEMMA_N, gronwall_seeds: 50, ..cfg.lemma_options() };
    let lemmas = lemma_tests(&exp.model, &a.spectral, &exp.x0, &lemma_opts)?;
    let l = &lemmas;
    let flagged = |name: &str, value: f64, threshold: f64, pass: bool| Check { name: name.into(), value, threshold, pass };
    checks.push(flagged(
        "threshold_gap_shrinks",
        l.threshold_gap.mean_gap[1].abs(),
        l.threshold_gap.mean_gap[0].abs(),
        l.threshold_gap.pass,
    ));
    checks.push(flagged("stable_component_beta", l.stable_component.beta, 0.0, l.stable_component.pass));
    checks.push(flagged("coupling_ratio_first_halving", l.coupling.ratios[0], 0.5, l.coupling.pass));
    checks.push(flagged("gronwall_violations", l.gronwall.violations as f64, 0.0, l.gronwall.pass));

    for c in &checks {
        println!("{} {} = {:.6e} (threshold {:.6e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
    }
    let pass = checks.iter().all(|c| c.pass);
    #[derive(Serialize)]
    struct VerifyReport<'a> {
        pass: bool,
        checks: &'a [Check],
        comparison: &'a ComparisonReport,
        lemmas: &'a saddle_exit::mc::LemmaReport,
    }
    let path = ctx.write(
        "verify.json",
        &to_json(&VerifyReport { pass, checks: &checks, comparison: &report, lemmas: &lemmas }),
    )?;
    Ok((path, pass))
}
