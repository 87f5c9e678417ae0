//! Experiment drivers behind the command-line tool. Each driver turns a
//! [`RunConfig`] into a CSV table (or a JSON record for the worked
//! examples) whose bytes depend only on the configuration.

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clm::{
    delta_c, delta_d, fidelity_chain_bound, optimize_directions, pinsker_bound, schmidt_clm, OptimizerConfig,
    QuadratureSpec,
};
use crate::coarse::{chsh_delta_c, chsh_optimize, coarse_chain};
use crate::error::{invalid, ClmError, Result};
use crate::macroscopicity::{macroscopicity, MacroConfig};
use crate::povm::{correlation_function, joint_distribution_dense, joint_distribution_symmetric, Direction, MeasurementSetting};
use crate::statecore::{matrix_schmidt_weights, schmidt_weights, shannon_entropy, total_correlation_pure, PureState, C64};
use crate::statelib::{
    binomial, coherent_plus, ghz, haar_random_with, one_axis_twist, permutation_pair_state, symmetric_to_dense,
    w_like, SqueezingParams,
};
use crate::xxz::{ground_state, scaling_study, sweep_point, XxzParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Examples,
    Bounds,
    Bell,
    Macro,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Examples => "examples",
            Self::Bounds => "bounds",
            Self::Bell => "bell",
            Self::Macro => "macro",
        }
    }

    fn stochastic(self) -> bool {
        matches!(self, Self::Fig1 | Self::Bounds | Self::Bell | Self::Macro)
    }
}

/// Settings for one run. Unset fields fall back to per-experiment
/// defaults; `paper_scale` switches those defaults to the larger sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub n: Option<Vec<usize>>,
    /// μ for fig2, `Jz/J` for fig3 and fig4.
    pub grid: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    /// Not echoed into outputs, so the same run written to two paths
    /// produces identical bytes.
    #[serde(skip_serializing)]
    pub out: Option<String>,
    pub threads: usize,
    pub paper_scale: bool,
    pub wall_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            n: None,
            grid: None,
            sigma: None,
            seed: None,
            samples: None,
            out: None,
            threads: 1,
            paper_scale: false,
            wall_time: false,
        }
    }
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment: Some(experiment),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<Experiment> {
        let Some(exp) = self.experiment else {
            return invalid("no experiment selected");
        };
        if self.threads == 0 {
            return invalid("threads must be at least 1");
        }
        for (name, values) in [("grid", &self.grid), ("sigma", &self.sigma)] {
            if let Some(v) = values {
                if v.iter().any(|x| !x.is_finite()) {
                    return invalid(format!("{name} values must be finite"));
                }
            }
        }
        if let Some(s) = &self.sigma {
            if s.iter().any(|&x| x <= 0.0) {
                return invalid("sigma values must be positive");
            }
        }
        if let Some(n) = &self.n {
            if n.is_empty() {
                return invalid("empty N list");
            }
        }
        if exp.stochastic() && self.seed.is_none() {
            return invalid(format!("{} is stochastic and needs a seed", exp.name()));
        }
        if self.samples == Some(0) {
            return invalid("samples must be positive");
        }
        Ok(exp)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// Mixes `(seed, N, index)` into an independent stream seed.
pub fn derive_seed(seed: u64, n: usize, index: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(seed ^ mix((n as u64) << 32 ^ mix(index as u64)))
}

fn haar_sample(n: usize, seed: u64, index: usize) -> Result<PureState> {
    haar_random_with(n, &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, n, index)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// A finished run: the config echo plus either CSV text or a JSON value.
#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: Experiment,
    pub config: RunConfig,
    pub format: Format,
    body: String,
    json: Option<serde_json::Value>,
}

impl Report {
    /// Full file contents. The wall time is written only when the config
    /// asks for it, so default outputs stay byte-identical across reruns.
    pub fn render(&self, wall: Option<Duration>) -> String {
        let config = serde_json::to_string(&self.config).expect("config serializes");
        let wall = match (self.config.wall_time, wall) {
            (true, Some(d)) => format!("{:.3}", d.as_secs_f64()),
            _ => "off".to_string(),
        };
        let seed = self.config.seed.map_or("none".to_string(), |s| s.to_string());
        match self.format {
            Format::Csv => format!(
                "# clmlab {VERSION}\n# experiment: {}\n# config: {config}\n# seed: {seed}\n# wall_time_s: {wall}\n{}",
                self.experiment.name(),
                self.body
            ),
            Format::Json => {
                let doc = serde_json::json!({
                    "tool": format!("clmlab {VERSION}"),
                    "experiment": self.experiment.name(),
                    "config": self.config,
                    "seed": self.config.seed,
                    "wall_time_s": wall,
                    "records": self.json,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("record serializes");
                s.push('\n');
                s
            }
        }
    }

    pub fn json(&self) -> Option<&serde_json::Value> {
        self.json.as_ref()
    }

    pub fn csv_body(&self) -> &str {
        &self.body
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| ClmError::Output(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| ClmError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ClmError::Output(e.to_string()))
}

pub fn run(config: &RunConfig) -> Result<Report> {
    let exp = config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| ClmError::Output(e.to_string()))?;
    let (body, json) = pool.install(|| -> Result<(String, Option<serde_json::Value>)> {
        Ok(match exp {
            Experiment::Fig1 => (to_csv(&fig1(config)?)?, None),
            Experiment::Fig2 => (to_csv(&fig2(config)?)?, None),
            Experiment::Fig3 => (to_csv(&fig3(config)?)?, None),
            Experiment::Fig4 => (to_csv(&fig4(config)?)?, None),
            Experiment::Bounds => (to_csv(&bounds(config)?)?, None),
            Experiment::Bell => (to_csv(&bell(config)?)?, None),
            Experiment::Macro => (to_csv(&macro_table(config)?)?, None),
            Experiment::Examples => {
                let records = examples()?;
                (String::new(), Some(serde_json::to_value(records).map_err(|e| ClmError::Output(e.to_string()))?))
            }
        })
    })?;
    Ok(Report {
        experiment: exp,
        config: config.clone(),
        format: if exp == Experiment::Examples { Format::Json } else { Format::Csv },
        body,
        json,
    })
}

fn linspace(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start + step * k as f64).collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig1Row {
    #[serde(rename = "N")]
    pub n: usize,
    pub samples: usize,
    pub mean_optimal_clm: f64,
    pub std_optimal_clm: f64,
    pub mean_linear_entropy: f64,
    pub std_linear_entropy: f64,
    pub analytic_linear_entropy: f64,
}

/// `1 - 2^{N/2+1} / (2^N + 1)`.
pub fn haar_linear_entropy(n: usize) -> f64 {
    1.0 - (n as f64 / 2.0 + 1.0).exp2() / ((n as f64).exp2() + 1.0)
}

const FIG1_MAX_SITES: usize = 14;

pub fn fig1(config: &RunConfig) -> Result<Vec<Fig1Row>> {
    let ns = config.n.clone().unwrap_or_else(|| vec![6, 8, 10, 12, 14]);
    let samples = config.samples.unwrap_or(if config.paper_scale { 1000 } else { 200 });
    let limit = if config.paper_scale { 20 } else { FIG1_MAX_SITES };
    for &n in &ns {
        if n == 0 || n % 2 == 1 {
            return invalid(format!("fig1 needs even N, got {n}"));
        }
        if n > limit {
            return Err(ClmError::Capacity {
                what: "fig1 direction optimization",
                requested: n,
                limit,
            });
        }
    }
    let seed = config.seed();
    ns.iter()
        .map(|&n| {
            let per_state: Vec<(f64, f64)> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let psi = haar_sample(n, seed, i)?;
                    let opt = optimize_directions(
                        &psi,
                        &OptimizerConfig {
                            seed: derive_seed(seed ^ 0x6f70_7469_6d69_7a65, n, i),
                            ..OptimizerConfig::default()
                        },
                    )?;
                    let w = schmidt_weights(&psi)?;
                    Ok((opt.delta_d, 1.0 - w.iter().map(|l| l * l).sum::<f64>()))
                })
                .collect::<Result<_>>()?;
            let clm: Vec<f64> = per_state.iter().map(|p| p.0).collect();
            let lin: Vec<f64> = per_state.iter().map(|p| p.1).collect();
            let (mc, sc) = mean_std(&clm);
            let (ml, sl) = mean_std(&lin);
            Ok(Fig1Row {
                n,
                samples,
                mean_optimal_clm: mc,
                std_optimal_clm: sc,
                mean_linear_entropy: ml,
                std_linear_entropy: sl,
                analytic_linear_entropy: haar_linear_entropy(n),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig2Row {
    pub mu: f64,
    pub delta_d_zz: f64,
    pub linear_entropy: f64,
    pub prop1_upper_bound: f64,
    pub entanglement_entropy: f64,
    pub total_correlation: f64,
}

pub const SYMMETRIC_MAX_SITES: usize = 400;

/// One squeezing point on `V_μ |+>^N` with the aligned rotation.
pub fn squeezing_point(n: usize, mu: f64) -> Result<Fig2Row> {
    if n > SYMMETRIC_MAX_SITES {
        return Err(ClmError::Capacity {
            what: "symmetric squeezing",
            requested: n,
            limit: SYMMETRIC_MAX_SITES,
        });
    }
    let sym = one_axis_twist(&coherent_plus(n)?, &SqueezingParams::aligned(n, mu))?;
    let jd = joint_distribution_symmetric(&sym, Direction::z())?;
    let w = &matrix_schmidt_weights(sym.coefficient_matrix()?);
    let entropy = shannon_entropy(w).max(0.0);
    Ok(Fig2Row {
        mu,
        delta_d_zz: delta_d(&jd),
        linear_entropy: (1.0 - w.iter().map(|l| l * l).sum::<f64>()).max(0.0),
        prop1_upper_bound: pinsker_bound(2.0 * entropy).min(fidelity_chain_bound(2.0 * entropy)),
        entanglement_entropy: entropy,
        total_correlation: total_correlation_pure(w).max(0.0),
    })
}

pub fn fig2(config: &RunConfig) -> Result<Vec<Fig2Row>> {
    let ns = config.n.clone().unwrap_or_else(|| vec![200]);
    if ns.len() != 1 {
        return invalid("fig2 takes a single N");
    }
    let grid = config.grid.clone().unwrap_or_else(|| linspace(0.0, 0.005, 41));
    grid.par_iter().map(|&mu| squeezing_point(ns[0], mu)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig3Row {
    #[serde(rename = "Jz_over_J")]
    pub ratio: f64,
    pub delta_d_xx: f64,
    pub delta_d_zz: f64,
    pub linear_entropy: f64,
    pub entanglement_entropy: f64,
}

/// `-2 ≤ Jz/J ≤ 8` in steps of 1/4, with the singular point `-1` replaced
/// by the two sides `-1 ∓ 10^{-3}`.
pub fn fig3_default_grid() -> Vec<f64> {
    let mut g = Vec::new();
    for r in linspace(-2.0, 0.25, 41) {
        if r == -1.0 {
            g.push(-1.001);
            g.push(-0.999);
        } else {
            g.push(r);
        }
    }
    g
}

pub fn fig3(config: &RunConfig) -> Result<Vec<Fig3Row>> {
    let ns = config.n.clone().unwrap_or_else(|| vec![if config.paper_scale { 24 } else { 16 }]);
    if ns.len() != 1 {
        return invalid("fig3 takes a single N");
    }
    let grid = config.grid.clone().unwrap_or_else(fig3_default_grid);
    // Reject bad parameters before any long solve.
    for &r in &grid {
        XxzParams::with_ratio(ns[0], r)?;
    }
    grid.par_iter()
        .map(|&r| {
            let row = sweep_point(ns[0], r)?;
            Ok(Fig3Row {
                ratio: row.ratio,
                delta_d_xx: row.delta_d_xx,
                delta_d_zz: row.delta_d_zz,
                linear_entropy: row.linear_entropy,
                entanglement_entropy: row.entanglement_entropy,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig4Row {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "Jz_over_J")]
    pub ratio: f64,
    pub delta_d_zz: f64,
    pub fit_c: f64,
    pub fit_alpha: f64,
    pub fit_max_residual: f64,
}

pub fn fig4(config: &RunConfig) -> Result<Vec<Fig4Row>> {
    let ns = config
        .n
        .clone()
        .unwrap_or_else(|| if config.paper_scale { vec![8, 12, 16, 20, 24] } else { vec![8, 12, 16, 20] });
    let grid = config.grid.clone().unwrap_or_else(|| vec![-0.999, 0.0, 1.0]);
    for &n in &ns {
        for &r in &grid {
            XxzParams::with_ratio(n, r)?;
        }
    }
    let studies: Vec<_> = grid.par_iter().map(|&r| scaling_study(&ns, &[r])).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for study in studies {
        let fit = study.fits.first();
        for row in &study.rows {
            rows.push(Fig4Row {
                n: row.n_sites,
                ratio: row.ratio,
                delta_d_zz: row.delta_d_zz,
                fit_c: fit.map_or(f64::NAN, |f| f.c),
                fit_alpha: fit.map_or(f64::NAN, |f| f.alpha),
                fit_max_residual: fit.map_or(f64::NAN, |f| f.max_residual),
            });
        }
    }
    Ok(rows)
}

/// One check of a closed-form value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleRecord {
    pub case: String,
    pub state: String,
    pub quantity: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub sigma: Option<f64>,
    pub computed: f64,
    pub expected: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn record(case: &str, state: &str, quantity: &str, n: usize, sigma: Option<f64>, computed: f64, expected: f64, tolerance: f64) -> ExampleRecord {
    let delta = (computed - expected).abs();
    ExampleRecord {
        case: case.into(),
        state: state.into(),
        quantity: quantity.into(),
        n,
        sigma,
        computed,
        expected,
        delta,
        tolerance,
        pass: delta <= tolerance,
    }
}

pub fn examples() -> Result<Vec<ExampleRecord>> {
    let zz = MeasurementSetting::zz();
    let mut out = Vec::new();
    for n in [4usize, 8, 12, 16] {
        let (g, w) = (ghz(n)?, w_like(n)?);
        let nf = n as f64;
        out.push(record("ghz_w_like", "ghz", "delta_d_zz", n, None, delta_d(&joint_distribution_dense(&g, &zz)?), 0.5, 1e-10));
        out.push(record("ghz_w_like", "w_like", "delta_d_zz", n, None, delta_d(&joint_distribution_dense(&w, &zz)?), 0.5, 1e-10));
        out.push(record("ghz_w_like", "ghz", "correlation_zz", n, None, correlation_function(&g, &zz)?, nf * nf / 16.0, 1e-10));
        out.push(record("ghz_w_like", "w_like", "correlation_zz", n, None, correlation_function(&w, &zz)?, -0.25, 1e-10));
    }
    for n in [4usize, 8, 12] {
        let psi = permutation_pair_state(n)?;
        let entropy = shannon_entropy(&schmidt_weights(&psi)?);
        out.push(record("permutation_pair", "psi2", "delta_d_zz", n, None, delta_d(&joint_distribution_dense(&psi, &zz)?), 0.0, 1e-12));
        out.push(record("permutation_pair", "psi2", "entanglement_entropy", n, None, entropy, binomial(n / 2, n / 4).log2(), 1e-9));
        out.push(record("permutation_pair", "psi2", "schmidt_clm", n, None, schmidt_clm(&psi)?, 1.0 - 1.0 / binomial(n / 2, n / 4), 1e-10));
    }
    let n = 20;
    let quad = QuadratureSpec::default();
    let erf_ghz = |s: f64| libm::erf(n as f64 / (4.0 * 2f64.sqrt() * s)).powi(2) / 2.0;
    let erf_w = |s: f64| libm::erf(1.0 / (2.0 * 2f64.sqrt() * s)).powi(2) / 2.0;
    for (name, psi, closed, quoted) in [("ghz", ghz(n)?, erf_ghz(2.0), 0.488), ("w_like", w_like(n)?, erf_w(2.0), 0.019)] {
        let jd = joint_distribution_dense(&psi, &zz)?;
        let dc = delta_c(&jd, 2.0, &quad)?;
        out.push(record("coarse_n20", name, "delta_c_zz", n, Some(2.0), dc, quoted, 2e-3));
        out.push(record("coarse_n20", name, "delta_c_zz_vs_erf", n, Some(2.0), dc, closed, 2e-3));
        out.push(record("coarse_n20", name, "erf_closed_form", n, Some(2.0), closed, quoted, 2e-3));
        out.push(record("coarse_n20", name, "delta_c_sharp_limit", n, Some(1e-3), delta_c(&jd, 1e-3, &quad)?, delta_d(&jd), 1e-6));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub state: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub sigma: f64,
    pub delta_c: f64,
    pub one_minus_f2: f64,
    pub variance_bound: f64,
    pub macro_bound: f64,
    pub m_upper: f64,
    pub ordered: bool,
}

/// Named states for the coarse-graining chain: structured states at N = 8
/// and 12 and `samples` Haar states at N = 8.
pub fn bounds_corpus(seed: u64, haar: usize) -> Result<Vec<(String, PureState)>> {
    let mut corpus = vec![
        ("ghz".to_string(), ghz(8)?),
        ("w_like".to_string(), w_like(8)?),
        ("psi2".to_string(), permutation_pair_state(8)?),
    ];
    for mu in [0.1, 0.3] {
        let sym = one_axis_twist(&coherent_plus(12)?, &SqueezingParams::aligned(12, mu))?;
        corpus.push((format!("twisted_mu{mu}"), symmetric_to_dense(&sym)?));
    }
    for r in [0.0, 1.0] {
        corpus.push((format!("xxz_jz{r}"), ground_state(&XxzParams::with_ratio(12, r)?)?.state));
    }
    for i in 0..haar {
        corpus.push((format!("haar_{i}"), haar_sample(8, seed, i)?));
    }
    Ok(corpus)
}

pub fn bounds(config: &RunConfig) -> Result<Vec<BoundsRow>> {
    let corpus = bounds_corpus(config.seed(), config.samples.unwrap_or(20))?;
    let nested: Vec<Vec<BoundsRow>> = corpus
        .par_iter()
        .map(|(name, psi)| {
            let nf = psi.n_sites() as f64;
            let sigmas = config.sigma.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0, 5.0, nf.sqrt(), 4.0 * nf.sqrt()]);
            let chain = coarse_chain(psi, &MeasurementSetting::zz(), &sigmas)?;
            Ok(chain
                .into_iter()
                .map(|c| BoundsRow {
                    state: name.clone(),
                    n: psi.n_sites(),
                    sigma: c.sigma,
                    delta_c: c.delta_c,
                    one_minus_f2: c.one_minus_f2,
                    variance_bound: c.variance_bound,
                    macro_bound: c.macro_bound,
                    m_upper: c.m_upper,
                    ordered: c.violations(1e-6).is_empty(),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellRow {
    pub state: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub sigma: f64,
    pub b_value: f64,
    pub product_b_value: f64,
    pub max_delta_c: f64,
    pub delta_c_bound: f64,
    pub m_upper: f64,
    pub chsh_macro_bound: f64,
}

pub fn bell_pair() -> Result<PureState> {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    PureState::new(2, vec![h, z, z, h])
}

pub fn bell(config: &RunConfig) -> Result<Vec<BellRow>> {
    let states = [("bell".to_string(), bell_pair()?),
        ("ghz".to_string(), ghz(4)?),
        ("ghz".to_string(), ghz(8)?),
        ("coherent_plus".to_string(), symmetric_to_dense(&coherent_plus(8)?)?)];
    let sigmas = config.sigma.clone().unwrap_or_else(|| vec![1e-3, 0.1, 0.5, 1.0, 2.0, 5.0]);
    let restarts = config.samples.unwrap_or(4);
    let seed = config.seed();
    let jobs: Vec<(usize, f64)> = (0..states.len()).flat_map(|s| sigmas.iter().map(move |&x| (s, x))).collect();
    jobs.par_iter()
        .enumerate()
        .map(|(k, &(s, sigma))| {
            let (name, psi) = &states[s];
            let opt = chsh_optimize(psi, sigma, restarts, derive_seed(seed, psi.n_sites(), k))?;
            let dc = chsh_delta_c(psi, &opt.settings, sigma.max(1e-3))?;
            let worst = dc.iter().copied().fold(0.0, f64::max);
            Ok(BellRow {
                state: name.clone(),
                n: psi.n_sites(),
                sigma,
                b_value: opt.best_b,
                product_b_value: opt.record.product_b_value(),
                max_delta_c: worst,
                delta_c_bound: 2.0 + 8.0 * worst,
                m_upper: opt.m_upper,
                chsh_macro_bound: opt.chsh_macro_bound,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacroRow {
    pub state: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub macroscopicity: f64,
    pub relaxation_bound: f64,
    pub ratio_to_n_squared: f64,
}

pub fn macro_table(config: &RunConfig) -> Result<Vec<MacroRow>> {
    let ns = config.n.clone().unwrap_or_else(|| vec![4, 6, 8, 10, 12]);
    let haar = config.samples.unwrap_or(4);
    let seed = config.seed();
    let mut jobs: Vec<(String, usize, Option<usize>)> = Vec::new();
    for &n in &ns {
        for name in ["coherent_plus", "ghz", "w_like"] {
            jobs.push((name.to_string(), n, None));
        }
        for i in 0..haar {
            jobs.push((format!("haar_{i}"), n, Some(i)));
        }
    }
    jobs.par_iter()
        .map(|(name, n, idx)| {
            let psi = match (name.as_str(), idx) {
                (_, Some(i)) => haar_sample(*n, seed, *i)?,
                ("coherent_plus", _) => symmetric_to_dense(&coherent_plus(*n)?)?,
                ("ghz", _) => ghz(*n)?,
                _ => w_like(*n)?,
            };
            let m = macroscopicity(
                &psi,
                &MacroConfig {
                    seed: derive_seed(seed, *n, idx.unwrap_or(usize::MAX)),
                    ..MacroConfig::default()
                },
            )?;
            Ok(MacroRow {
                state: name.clone(),
                n: *n,
                macroscopicity: m.value,
                relaxation_bound: m.relaxation_upper_bound,
                ratio_to_n_squared: m.value / (*n * *n) as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_linear_entropy_value() {
        assert!((haar_linear_entropy(8) - (1.0 - 32.0 / 257.0)).abs() < 1e-15);
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = derive_seed(1, 8, 0);
        assert_eq!(a, derive_seed(1, 8, 0));
        assert_ne!(a, derive_seed(1, 8, 1));
        assert_ne!(a, derive_seed(1, 10, 0));
        assert_ne!(a, derive_seed(2, 8, 0));
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_err());
        assert!(RunConfig::new(Experiment::Fig1).validate().is_err());
        let mut c = RunConfig::new(Experiment::Fig2);
        assert!(c.validate().is_ok());
        c.grid = Some(vec![0.0, f64::NAN]);
        assert!(c.validate().is_err());
        let parsed: RunConfig = serde_json::from_str(r#"{"experiment": "fig3", "n": [8], "grid": [0.5]}"#).unwrap();
        assert_eq!(parsed.experiment, Some(Experiment::Fig3));
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn fig3_grid_avoids_the_singular_point() {
        let g = fig3_default_grid();
        assert!(!g.contains(&-1.0));
        assert!(g.contains(&-1.001) && g.contains(&-0.999));
        assert_eq!(g.first(), Some(&-2.0));
        assert_eq!(g.last(), Some(&8.0));
    }

    #[test]
    fn examples_all_pass() {
        let recs = examples().unwrap();
        for r in &recs {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut c = RunConfig::new(Experiment::Fig2);
        c.n = Some(vec![20]);
        c.grid = Some(vec![0.0, 0.1]);
        let text = run(&c).unwrap().render(None);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# clmlab "));
        assert_eq!(lines[4], "# wall_time_s: off");
        assert_eq!(lines[5], "mu,delta_d_zz,linear_entropy,prop1_upper_bound,entanglement_entropy,total_correlation");
        assert_eq!(lines.len(), 8);
        assert!(lines[6].starts_with("0.0,"), "{}", lines[6]);
    }
}
