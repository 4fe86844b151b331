//! Seed-swept experiments behind the command-line tool: OLS versus
//! task-relevant SGD, the randomized bound sweep, the orbit demonstration and
//! the tabular inference comparison.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::{self, fmt_f64, KeyValues};
use crate::ident::{self, Method, RunHistory, SgdConfig};
use crate::linalg::Mat;
use crate::lqr::{self, LqrProblem, SystemParams};
use crate::orbit;
use crate::rng;
use crate::tabular::bound::{check_candidate, perturbed_optimal_value, planning_witness, BoundCheck, BOUND_SLACK};
use crate::tabular::separation::{crafted_family, geometric_sizes, run_separation, SeparationConfig, SeparationReport};
use crate::tabular::{value_iteration, TabularMdp};

/// RNG stream ids, combined with the run seed.
pub const SYSTEM_STREAM: u64 = 1;
pub const PERTURB_STREAM: u64 = 2;

/// Step-size grid used to pick `alpha0` on a pilot seed.
pub const ALPHA_GRID: [f64; 7] = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
pub const PILOT_SEED: u64 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub traj_len: usize,
    pub iterations: usize,
    pub lambda: f64,
    pub alpha0_ols: f64,
    pub alpha0_tr: f64,
    pub eps: f64,
    pub perturb_magnitude: f64,
    pub sigma_u: f64,
    pub gamma: f64,
    pub seeds: Vec<u64>,
    pub output_path: Option<String>,
    /// Fixed true system; when absent one is drawn per seed.
    pub system_path: Option<String>,
}

impl ExperimentConfig {
    /// `n = m = 20`. Step sizes were picked on [`PILOT_SEED`] from [`ALPHA_GRID`].
    pub fn full() -> Self {
        Self {
            n: 20,
            m: 20,
            traj_len: 10,
            iterations: 200,
            lambda: 1e-5,
            alpha0_ols: 3e-2,
            alpha0_tr: 1e-4,
            eps: 0.05,
            perturb_magnitude: 0.1,
            sigma_u: 1e-3,
            gamma: 0.9,
            seeds: (0..10).collect(),
            output_path: None,
            system_path: None,
        }
    }

    /// `n = m = 5`, quick enough for a laptop run.
    pub fn desk() -> Self {
        Self { n: 5, m: 5, alpha0_ols: 1e-1, alpha0_tr: 3e-3, sigma_u: 1.0, ..Self::full() }
    }

    /// Parses a `key = value` file. A `preset = full|desk` key selects the
    /// starting point (default `full`); every other key overrides one field.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let mut cfg = match kv.take_raw("preset") {
            None => Self::full(),
            Some((_, p)) if p == "full" => Self::full(),
            Some((_, p)) if p == "desk" => Self::desk(),
            Some((l, p)) => return Err(Error::Parse { line: l, msg: format!("unknown preset '{p}'") }),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = kv.take(stringify!($field))? {
                    cfg.$field = v;
                }
            )*};
        }
        set!(n, m, traj_len, iterations, lambda, alpha0_ols, alpha0_tr, eps, perturb_magnitude, sigma_u, gamma);
        if let Some((l, v)) = kv.take_raw("seeds") {
            cfg.seeds = parse_seeds(&v).map_err(|msg| Error::Parse { line: l, msg })?;
        }
        cfg.output_path = kv.take_raw("output_path").map(|(_, v)| v);
        cfg.system_path = kv.take_raw("system_path").map(|(_, v)| v);
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidConfig("n and m must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds must not be empty".into()));
        }
        if !(self.perturb_magnitude > 0.0 && self.perturb_magnitude.is_finite()) {
            return Err(Error::InvalidConfig("perturb_magnitude must be > 0".into()));
        }
        if !(self.sigma_u > 0.0 && self.sigma_u.is_finite()) {
            return Err(Error::InvalidConfig("sigma_u must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma = {} outside [0, 1)", self.gamma)));
        }
        for m in [Method::Ols, Method::Tr] {
            self.sgd_config(m, 0).validate()?;
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<LqrProblem> {
        LqrProblem::identity_costs(self.n, self.m, self.gamma, self.sigma_u)
    }

    pub fn sgd_config(&self, method: Method, seed: u64) -> SgdConfig {
        SgdConfig {
            lambda: self.lambda,
            alpha0: match method {
                Method::Ols => self.alpha0_ols,
                Method::Tr => self.alpha0_tr,
            },
            eps: self.eps,
            iterations: self.iterations,
            traj_len: self.traj_len,
            seed,
        }
    }

    /// Every setting, in a fixed order, for self-describing output files.
    pub fn echo(&self) -> Vec<(String, String)> {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let mut out = vec![
            ("n".to_string(), self.n.to_string()),
            ("m".into(), self.m.to_string()),
            ("traj_len".into(), self.traj_len.to_string()),
            ("iterations".into(), self.iterations.to_string()),
            ("lambda".into(), fmt_f64(self.lambda)),
            ("alpha0_ols".into(), fmt_f64(self.alpha0_ols)),
            ("alpha0_tr".into(), fmt_f64(self.alpha0_tr)),
            ("eps".into(), fmt_f64(self.eps)),
            ("perturb_magnitude".into(), fmt_f64(self.perturb_magnitude)),
            ("sigma_u".into(), fmt_f64(self.sigma_u)),
            ("gamma".into(), fmt_f64(self.gamma)),
            ("seeds".into(), seeds.join(",")),
        ];
        if let Some(p) = &self.system_path {
            out.push(("system_path".into(), p.clone()));
        }
        out
    }
}

/// `"0,1,5"` or a half-open range `"0..10"`.
pub fn parse_seeds(text: &str) -> std::result::Result<Vec<u64>, String> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| format!("bad range start '{lo}'"))?;
        let hi: u64 = hi.trim().parse().map_err(|_| format!("bad range end '{hi}'"))?;
        if hi <= lo {
            return Err(format!("empty seed range {lo}..{hi}"));
        }
        return Ok((lo..hi).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad seed '{s}'")))
        .collect()
}

/// The random plant for `seed`.
pub fn true_system(n: usize, m: usize, seed: u64) -> Result<SystemParams> {
    ident::random_system(n, m, &mut rng::stream(seed, SYSTEM_STREAM))
}

fn one_seed(cfg: &ExperimentConfig, prob: &LqrProblem, fixed: Option<&SystemParams>, seed: u64, methods: &[Method]) -> Result<Vec<RunHistory>> {
    let sys = match fixed {
        Some(s) => s.clone(),
        None => true_system(cfg.n, cfg.m, seed)?,
    };
    let theta0 = ident::rank_one_perturb(&sys, cfg.perturb_magnitude, &mut rng::stream(seed, PERTURB_STREAM))?;
    methods
        .iter()
        .map(|&m| ident::run_sgd(m, &sys, prob, &theta0, &cfg.sgd_config(m, seed)))
        .collect()
}

/// Runs both methods on every seed. Output is ordered by method (OLS first),
/// then by seed in config order, independent of scheduling.
pub fn compare(cfg: &ExperimentConfig, fixed: Option<&SystemParams>) -> Result<Vec<RunHistory>> {
    cfg.validate()?;
    if let Some(s) = fixed {
        if s.n() != cfg.n || s.m() != cfg.m {
            return Err(Error::DimensionMismatch(format!(
                "system is {}x{}, config asks for n={} m={}",
                s.n(),
                s.m(),
                cfg.n,
                cfg.m
            )));
        }
    }
    let prob = cfg.problem()?;
    let methods = [Method::Ols, Method::Tr];
    let per_seed = cfg
        .seeds
        .par_iter()
        .map(|&seed| one_seed(cfg, &prob, fixed, seed, &methods))
        .collect::<Result<Vec<_>>>()?;
    let mut runs = Vec::with_capacity(2 * cfg.seeds.len());
    for k in 0..methods.len() {
        runs.extend(per_seed.iter().map(|r| r[k].clone()));
    }
    Ok(runs)
}

/// Writes the comparison CSV for `runs` produced under `cfg`.
pub fn write_compare_csv<W: std::io::Write>(out: W, cfg: &ExperimentConfig, runs: &[RunHistory]) -> Result<()> {
    format::write_comparison_csv(out, &cfg.echo(), runs)
}

/// Picks the grid step size with the lowest final suboptimality on one seed
/// (unstable endings rank last; ties go to the smaller step).
pub fn pilot_alpha(method: Method, cfg: &ExperimentConfig, grid: &[f64], pilot_seed: u64) -> Result<f64> {
    let prob = cfg.problem()?;
    let mut best: Option<(f64, f64)> = None;
    for &alpha in grid {
        let trial = match method {
            Method::Ols => ExperimentConfig { alpha0_ols: alpha, ..cfg.clone() },
            Method::Tr => ExperimentConfig { alpha0_tr: alpha, ..cfg.clone() },
        };
        let run = &one_seed(&trial, &prob, None, pilot_seed, &[method])?[0];
        let score = run.last().and_then(|r| r.suboptimality.value()).unwrap_or(f64::INFINITY);
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, alpha));
        }
    }
    best.map(|(_, a)| a).ok_or_else(|| Error::InvalidConfig("empty step-size grid".into()))
}

// ---------------------------------------------------------------------------
// bound sweep

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremSweepConfig {
    pub trials: usize,
    pub max_states: usize,
    pub max_actions: usize,
    pub seed: u64,
    pub gammas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub solver_tol: f64,
    pub slack: f64,
    /// Multiplies every `eps` term of the bounds; 1 for real use.
    pub planning_scale: f64,
}

impl Default for TheoremSweepConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            max_states: 5,
            max_actions: 3,
            seed: 0,
            gammas: vec![0.5, 0.9],
            epsilons: vec![0.0, 0.05],
            solver_tol: 1e-12,
            slack: BOUND_SLACK,
            planning_scale: 1.0,
        }
    }
}

pub const BOUND_FAMILIES: [&str; 4] = ["total", "planning", "optimal_mismatch", "policy_mismatch"];

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyStats {
    pub name: &'static str,
    pub checks: usize,
    pub violations: usize,
    pub min_slack: f64,
    pub median_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremSweepReport {
    pub config: TheoremSweepConfig,
    pub families: Vec<FamilyStats>,
    /// `(trial, candidate, family, lhs, rhs)` for every violation.
    pub failures: Vec<(String, usize, &'static str, f64, f64)>,
}

impl TheoremSweepReport {
    pub fn violations(&self) -> usize {
        self.families.iter().map(|f| f.violations).sum()
    }

    pub fn render(&self) -> String {
        let c = &self.config;
        let mut out = format!(
            "bound sweep\ntrials = {}\nmax_states = {}\nmax_actions = {}\nseed = {}\nslack = {}\nplanning_scale = {}\n",
            c.trials,
            c.max_states,
            c.max_actions,
            c.seed,
            fmt_f64(c.slack),
            fmt_f64(c.planning_scale)
        );
        out.push_str("family checks violations min_slack median_slack\n");
        for f in &self.families {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                f.name,
                f.checks,
                f.violations,
                fmt_f64(f.min_slack),
                fmt_f64(f.median_slack)
            ));
        }
        for (trial, z, fam, lhs, rhs) in &self.failures {
            out.push_str(&format!("violation trial={trial} candidate={z} family={fam} lhs={} rhs={}\n", fmt_f64(*lhs), fmt_f64(*rhs)));
        }
        out.push_str(&format!("total_violations = {}\n", self.violations()));
        out
    }
}

/// Truth mixed with a random model, rewards jittered.
fn perturbed_model(truth: &TabularMdp, rng: &mut rng::Rng) -> Result<TabularMdp> {
    let other = TabularMdp::random(truth.n_states(), truth.n_actions(), truth.gamma(), 0.3, rng)?;
    let w: f64 = rng.random_range(0.0..0.3);
    let mut t: Vec<f64> = truth.transitions().iter().zip(other.transitions()).map(|(p, q)| (1.0 - w) * p + w * q).collect();
    for row in t.chunks_mut(truth.n_states()) {
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= sum);
    }
    let r = truth.rewards().iter().map(|x| x + rng.random_range(-0.1..=0.1)).collect();
    TabularMdp::new(truth.n_states(), truth.n_actions(), t, r, truth.gamma())
}

type CheckRow = (String, usize, [(f64, f64); 4]);

fn sweep_trial(cfg: &TheoremSweepConfig, trial: usize) -> Result<Vec<CheckRow>> {
    let mut rng = rng::stream(cfg.seed, trial as u64);
    let ns = rng.random_range(1..=cfg.max_states);
    let na = rng.random_range(1..=cfg.max_actions);
    let gamma = cfg.gammas[rng.random_range(0..cfg.gammas.len())];
    let eps = cfg.epsilons[rng.random_range(0..cfg.epsilons.len())];
    let sparsity = if rng.random_bool(0.5) { 0.0 } else { 0.5 };
    let truth = TabularMdp::random(ns, na, gamma, sparsity, &mut rng)?;
    let candidates = [
        truth.clone(),
        perturbed_model(&truth, &mut rng)?,
        TabularMdp::random(ns, na, gamma, sparsity, &mut rng)?,
    ];
    let v_star = value_iteration(&truth, cfg.solver_tol);
    let check = BoundCheck { eps, solver_tol: cfg.solver_tol, planning_scale: cfg.planning_scale };
    candidates
        .iter()
        .enumerate()
        .map(|(z, model)| {
            let v_z = perturbed_optimal_value(model, eps, cfg.solver_tol, &mut rng);
            let rep = check_candidate(&truth, &v_star, model, z, &v_z, &check)?;
            Ok((trial.to_string(), z, rep.inequalities().map(|(_, c)| (c.lhs, c.rhs))))
        })
        .collect()
}

/// Near-tight instances where the planning term matters; included so that a
/// weakened bound is detectable regardless of what the random trials draw.
fn witness_rows(cfg: &TheoremSweepConfig) -> Result<Vec<CheckRow>> {
    let eps = cfg.epsilons.iter().copied().fold(0.0, f64::max);
    if eps <= 0.0 {
        return Ok(Vec::new());
    }
    cfg.gammas
        .iter()
        .map(|&gamma| {
            let (mdp, v) = planning_witness(gamma, eps)?;
            let v_star = value_iteration(&mdp, cfg.solver_tol);
            let check = BoundCheck { eps, solver_tol: cfg.solver_tol, planning_scale: cfg.planning_scale };
            let rep = check_candidate(&mdp, &v_star, &mdp, 0, &v, &check)?;
            Ok((format!("witness(gamma={gamma})"), 0, rep.inequalities().map(|(_, c)| (c.lhs, c.rhs))))
        })
        .collect()
}

pub fn theorem_sweep(cfg: &TheoremSweepConfig) -> Result<TheoremSweepReport> {
    if cfg.trials == 0 || cfg.max_states == 0 || cfg.max_actions == 0 {
        return Err(Error::InvalidConfig("trials, max_states and max_actions must be >= 1".into()));
    }
    if cfg.gammas.iter().any(|g| !(0.0..1.0).contains(g)) || cfg.gammas.is_empty() {
        return Err(Error::InvalidConfig("gammas must be nonempty and in [0, 1)".into()));
    }
    if cfg.epsilons.iter().any(|e| !(*e >= 0.0)) || cfg.epsilons.is_empty() {
        return Err(Error::InvalidConfig("epsilons must be nonempty and >= 0".into()));
    }
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|t| sweep_trial(cfg, t))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<CheckRow> = per_trial.into_iter().flatten().collect();
    rows.extend(witness_rows(cfg)?);

    let mut families = Vec::new();
    let mut failures = Vec::new();
    for (k, name) in BOUND_FAMILIES.iter().enumerate() {
        let slacks: Vec<f64> = rows.iter().map(|r| r.2[k].1 - r.2[k].0).collect();
        for (trial, z, ineq) in &rows {
            let (lhs, rhs) = ineq[k];
            if lhs > rhs + cfg.slack {
                failures.push((trial.clone(), *z, *name, lhs, rhs));
            }
        }
        families.push(FamilyStats {
            name,
            checks: rows.len(),
            violations: rows.iter().filter(|r| r.2[k].0 > r.2[k].1 + cfg.slack).count(),
            min_slack: slacks.iter().copied().fold(f64::INFINITY, f64::min),
            median_slack: format::median(&slacks).unwrap_or(f64::NAN),
        });
    }
    Ok(TheoremSweepReport { config: cfg.clone(), families, failures })
}

// ---------------------------------------------------------------------------
// orbit demonstration

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitDemoConfig {
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    pub seed: u64,
    pub gamma: f64,
    pub sigma_u: f64,
    pub traj_len: usize,
}

impl Default for OrbitDemoConfig {
    fn default() -> Self {
        Self { n: 10, m: 5, samples: 100, seed: 0, gamma: 0.9, sigma_u: 1.0, traj_len: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSample {
    /// `true` for the identity element, `false` for Haar draws.
    pub identity: bool,
    pub tr_loss: f64,
    pub ols_loss: f64,
    pub distance: f64,
    pub gram_gap: f64,
    pub member: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitDemoReport {
    pub config: OrbitDemoConfig,
    pub samples: Vec<OrbitSample>,
    /// Number of distinct members (up to 1e-12 in max-norm).
    pub distinct_members: usize,
}

impl OrbitDemoReport {
    pub fn render(&self) -> String {
        let c = &self.config;
        let mut out = format!(
            "orbit demo\nn = {}\nm = {}\nsamples = {}\nseed = {}\ngamma = {}\nsigma_u = {}\ntraj_len = {}\n",
            c.n,
            c.m,
            c.samples,
            c.seed,
            fmt_f64(c.gamma),
            fmt_f64(c.sigma_u),
            c.traj_len
        );
        out.push_str("index kind tr_loss ols_loss distance gram_gap\n");
        for (i, s) in self.samples.iter().enumerate() {
            out.push_str(&format!(
                "{i} {} {} {} {} {}\n",
                if s.identity { "identity" } else { "haar" },
                fmt_f64(s.tr_loss),
                fmt_f64(s.ols_loss),
                fmt_f64(s.distance),
                fmt_f64(s.gram_gap)
            ));
        }
        let haar: Vec<&OrbitSample> = self.samples.iter().filter(|s| !s.identity).collect();
        let fold = |f: fn(&OrbitSample) -> f64, init: f64, op: fn(f64, f64) -> f64| haar.iter().map(|s| f(s)).fold(init, op);
        out.push_str(&format!(
            "max_tr_loss = {}\nmin_ols_loss = {}\nmin_distance = {}\nmax_gram_gap = {}\ndistinct_members = {}\n",
            fmt_f64(self.samples.iter().map(|s| s.tr_loss).fold(0.0, f64::max)),
            fmt_f64(fold(|s| s.ols_loss, f64::INFINITY, f64::min)),
            fmt_f64(fold(|s| s.distance, f64::INFINITY, f64::min)),
            fmt_f64(self.samples.iter().map(|s| s.gram_gap).fold(0.0, f64::max)),
            self.distinct_members
        ));
        out
    }
}

/// Plant for the orbit demo: entries from the same laws as [`ident::random_system`]
/// but without the instability requirement, redrawn until the DARE solves.
fn orbit_system(n: usize, m: usize, prob: &LqrProblem, rng: &mut rng::Rng) -> Result<(SystemParams, lqr::ValueMatrix)> {
    for _ in 0..ident::RANDOM_SYSTEM_MAX_ATTEMPTS {
        let a = Mat::from_fn(n, n, |_, _| rng.random_range(0.0..=ident::A_MAX));
        let b = Mat::from_fn(n, m, |_, _| rng.random_range(0.0..=ident::B_MAX));
        let sys = SystemParams::new(a, b)?;
        if let Ok(p) = lqr::solve_dare(&sys, prob, lqr::DARE_TOL, lqr::DARE_MAX_ITER) {
            return Ok((sys, p));
        }
    }
    Err(Error::GenerationFailed { attempts: ident::RANDOM_SYSTEM_MAX_ATTEMPTS })
}

pub fn orbit_demo(cfg: &OrbitDemoConfig) -> Result<OrbitDemoReport> {
    if cfg.samples == 0 || cfg.n == 0 || cfg.m == 0 || cfg.traj_len == 0 {
        return Err(Error::InvalidConfig("n, m, samples and traj_len must be >= 1".into()));
    }
    let prob = LqrProblem::identity_costs(cfg.n, cfg.m, cfg.gamma, cfg.sigma_u)?;
    let mut rng = rng::stream(cfg.seed, SYSTEM_STREAM);
    let (sys, p) = orbit_system(cfg.n, cfg.m, &prob, &mut rng)?;
    let tau = ident::simulate_trajectory(&sys, &prob, cfg.traj_len, &mut rng);
    let theta_star = sys.theta();

    let mut elements = vec![(true, orbit::OrthogonalMatrix::identity(cfg.n))];
    elements.extend((0..cfg.samples).map(|_| (false, orbit::random_orthogonal(cfg.n, &mut rng))));
    let samples = elements
        .into_iter()
        .map(|(identity, v)| {
            let member = orbit::orbit_member(&sys, &p, &v)?;
            Ok(OrbitSample {
                identity,
                tr_loss: ident::tr_loss(&member, &tau, &p, 0.0)?,
                ols_loss: ident::ols_loss(&member, &tau, 0.0)?,
                distance: crate::linalg::spectral_norm(&(member.theta() - &theta_star)),
                gram_gap: orbit::value_gram_gap(&member, &sys, &p)?,
                member: member.theta(),
            })
        })
        .collect::<Result<Vec<OrbitSample>>>()?;
    let mut distinct: Vec<&Mat> = Vec::new();
    for s in &samples {
        if !distinct.iter().any(|d| (*d - &s.member).amax() <= 1e-12) {
            distinct.push(&s.member);
        }
    }
    let distinct_members = distinct.len();
    Ok(OrbitDemoReport { config: cfg.clone(), samples, distinct_members })
}

// ---------------------------------------------------------------------------
// tabular inference comparison

#[derive(Debug, Clone, PartialEq)]
pub struct InferTabularConfig {
    pub gamma: f64,
    pub separation: SeparationConfig,
}

impl Default for InferTabularConfig {
    fn default() -> Self {
        Self { gamma: 0.9, separation: SeparationConfig::default() }
    }
}

impl InferTabularConfig {
    pub fn with_grid(gamma: f64, min_batch: usize, max_batch: usize, sizes: usize, resamples: usize, seed: u64) -> Result<Self> {
        if min_batch == 0 || max_batch < min_batch || sizes < 2 || resamples == 0 {
            return Err(Error::InvalidConfig("need 1 <= min_batch <= max_batch, sizes >= 2, resamples >= 1".into()));
        }
        Ok(Self {
            gamma,
            separation: SeparationConfig {
                batch_sizes: geometric_sizes(min_batch, max_batch, sizes),
                resamples,
                seed,
                ..SeparationConfig::default()
            },
        })
    }
}

pub fn infer_tabular(cfg: &InferTabularConfig) -> Result<SeparationReport> {
    run_separation(&crafted_family(cfg.gamma)?, &cfg.separation)
}

pub fn render_separation(cfg: &InferTabularConfig, rep: &SeparationReport) -> String {
    let s = &cfg.separation;
    let sizes: Vec<String> = s.batch_sizes.iter().map(usize::to_string).collect();
    let mut out = format!(
        "tabular inference\ngamma = {}\nresamples = {}\nsuccess_fraction = {}\nseed = {}\nbatch_sizes = {}\n",
        fmt_f64(cfg.gamma),
        s.resamples,
        fmt_f64(s.success_fraction),
        s.seed,
        sizes.join(",")
    );
    out.push_str("candidate suboptimality inference_error bound\n");
    for (z, q) in rep.quality.iter().enumerate() {
        out.push_str(&format!("{z} {} {} {}\n", fmt_f64(q.suboptimality), fmt_f64(q.inference_error), fmt_f64(q.bound)));
    }
    out.push_str("rule batch_size successes picks\n");
    for sweep in &rep.sweeps {
        for o in &sweep.outcomes {
            let picks: Vec<String> = o.picks.iter().map(usize::to_string).collect();
            out.push_str(&format!("{} {} {} {}\n", sweep.rule, o.batch_size, o.successes, picks.join(",")));
        }
    }
    for sweep in &rep.sweeps {
        let req = sweep.required_batch.map_or("none".to_string(), |b| b.to_string());
        out.push_str(&format!("required_batch {} = {req}\n", sweep.rule));
    }
    out.push_str(&format!(
        "tr_picks_within_bound = {}\nseparated = {}\n",
        rep.tr_picks_within_bound,
        rep.separated()
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_parse() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4, 7,9").unwrap(), vec![4, 7, 9]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("a").is_err());
    }

    #[test]
    fn config_overrides_and_errors() {
        let cfg = ExperimentConfig::from_text("preset = desk\niterations = 7\nseeds = 0..2\n").unwrap();
        assert_eq!((cfg.n, cfg.iterations, cfg.seeds.clone()), (5, 7, vec![0, 1]));
        assert!(matches!(
            ExperimentConfig::from_text("n = 5\nbogus = 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::from_text("n = 5\n\ngamma = high\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(ExperimentConfig::from_text("eps = 0.9\n").is_err());
    }

    #[test]
    fn compare_orders_by_method_then_seed() {
        let cfg = ExperimentConfig { iterations: 3, seeds: vec![4, 1], ..ExperimentConfig::desk() };
        let runs = compare(&cfg, None).unwrap();
        let keys: Vec<(Method, u64)> = runs.iter().map(|r| (r.method, r.seed)).collect();
        assert_eq!(keys, vec![(Method::Ols, 4), (Method::Ols, 1), (Method::Tr, 4), (Method::Tr, 1)]);
    }

    #[test]
    fn zero_iterations_give_empty_histories() {
        let cfg = ExperimentConfig { iterations: 0, seeds: vec![0], ..ExperimentConfig::desk() };
        let runs = compare(&cfg, None).unwrap();
        assert!(runs.iter().all(|r| r.records.is_empty()));
        let mut buf = Vec::new();
        write_compare_csv(&mut buf, &cfg, &runs).unwrap();
        assert!(format::read_comparison_csv(std::str::from_utf8(&buf).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn small_sweep_is_clean() {
        let rep = theorem_sweep(&TheoremSweepConfig { trials: 50, ..Default::default() }).unwrap();
        assert_eq!(rep.violations(), 0, "{}", rep.render());
    }
}
