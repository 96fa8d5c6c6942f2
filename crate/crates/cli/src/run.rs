//! One function per subcommand: compute everything in memory, then hand back
//! artifacts, a report and the asserted checks.

use std::f64::consts::PI;

use hypowalk::fourier::FourierBasis;
use hypowalk::lie::lie_check;
use hypowalk::operator::{
    assemble_generator_with, assemble_transfer_with, eigen, flat_multiplier, AssemblyOptions, Layout, Spectrum,
};
use hypowalk::sampler::{diffusion_limit_test, matrix_decay_slope, minorization_ratio, tv_decay_rate};
use hypowalk::spectra::{
    chapman_taylor_check, cluster_match, flat_levels, gap_scaling_fit, gap_scan, generator_consistency,
    projector_sweep, rescaled_low_spectrum, spectrum_report_from, EpsRule, GapFit, SpectrumReport,
};
use hypowalk::{build_free_nilpotent, Error, Model};
use serde_json::{json, Map, Value};

use crate::config::{trig_poly, ConfigError, EpsSpec, ExperimentConfig, Subcommand};
use crate::output::{Artifacts, Checks, Csv};

pub enum RunError {
    /// Exit status 2: the request itself is invalid.
    Config(ConfigError),
    /// Exit status 1: the computation ran but could not produce its result.
    Failed(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Connectivity { .. } | Error::NotSymmetric(_) | Error::EmptyWindow(_) => {
                RunError::Failed(e.to_string())
            }
            _ => RunError::Config(e.into()),
        }
    }
}

pub struct Outcome {
    pub artifacts: Artifacts,
    pub report: Map<String, Value>,
    pub checks: Checks,
}

impl Outcome {
    fn new() -> Self {
        Self { artifacts: Artifacts::default(), report: Map::new(), checks: Checks::default() }
    }

    fn put(&mut self, key: &str, value: impl serde::Serialize) {
        self.report.insert(key.into(), serde_json::to_value(value).expect("reports serialize"));
    }
}

type Run = Result<Outcome, RunError>;

pub fn run(sub: Subcommand, cfg: &ExperimentConfig) -> Run {
    match sub {
        Subcommand::LieCheck => lie_check_cmd(cfg),
        Subcommand::LieDump => lie_dump(cfg),
        Subcommand::Spectrum => spectrum(cfg),
        Subcommand::GapScan => gap_scan_cmd(cfg),
        Subcommand::Cluster => cluster(cfg),
        Subcommand::WalkTv => walk_tv(cfg),
        Subcommand::Diffuse => diffuse(cfg),
        Subcommand::Minorize => minorize(cfg),
        Subcommand::Consistency => consistency(cfg),
    }
}

fn blocks(quadrature: usize) -> AssemblyOptions {
    AssemblyOptions { quadrature, layout: Layout::Blocks, field: None }
}

fn lie_check_cmd(cfg: &ExperimentConfig) -> Run {
    let ps = cfg.lie_generators.clone().unwrap_or_else(|| vec![1, 2, 3]);
    let rs = cfg.lie_steps.clone().unwrap_or_else(|| vec![1, 2, 3, 4]);
    let triples = cfg.triples.unwrap_or(100);
    let mut out = Outcome::new();
    let mut csv =
        Csv::new(&["p", "r", "dim", "witt", "jacobi", "associativity", "b", "p_steps", "walk_closed_form", "top_word"]);
    let mut reports = Vec::new();
    for &p in &ps {
        for &r in &rs {
            let rep = lie_check(p, r, triples, cfg.seed())?;
            let b: Vec<String> = rep.b.iter().map(usize::to_string).collect();
            let b = b.join(";");
            csv.row(&[
                &rep.p,
                &rep.r,
                &rep.dim,
                &rep.witt,
                &rep.jacobi,
                &rep.associativity,
                &b.as_str(),
                &rep.p_steps,
                &rep.walk_closed_form,
                &rep.top_word,
            ]);
            let tag = format!("p={p} r={r}");
            out.checks.require(&format!("{tag} witt"), rep.witt);
            out.checks.require(&format!("{tag} jacobi"), rep.jacobi);
            out.checks.require(&format!("{tag} walk constants"), rep.walk_closed_form);
            out.checks.require(&format!("{tag} top-layer word"), rep.top_word);
            out.checks.at_most(&format!("{tag} associativity"), rep.associativity, cfg.checks.assoc_tol);
            reports.push(rep);
        }
    }
    out.artifacts.csv("lie_check.csv", csv);
    out.put("algebras", reports);
    Ok(out)
}

fn lie_dump(cfg: &ExperimentConfig) -> Run {
    let one = |v: &Option<Vec<usize>>, key: &str| match v.as_deref() {
        Some([x]) => Ok(*x),
        _ => Err(ConfigError::new(format!("`{key}` must be a single-element list"))),
    };
    let s = build_free_nilpotent(one(&cfg.lie_generators, "lie_generators")?, one(&cfg.lie_steps, "lie_steps")?)?;
    let mut out = Outcome::new();
    let mut basis = Csv::new(&["index", "weight", "word"]);
    for i in 0..s.dim() {
        let w = s.word_name(i);
        basis.row(&[&i, &s.weight(i), &w.as_str()]);
    }
    out.artifacts.csv("basis.csv", basis);
    out.artifacts.add("structure_constants.csv", s.structure_constants_csv());
    out.put("dim", s.dim());
    out.put("layer_dims", s.layer_dims());
    Ok(out)
}

fn spectrum_rows(spec: &Spectrum, h: f64) -> Csv {
    let mut csv = Csv::new(&["block_n", "index_in_block", "eigenvalue", "rescaled_value"]);
    for p in &spec.pairs {
        let rescaled = (1.0 - p.value) / (h * h);
        csv.row(&[&spec.block_frequencies[p.block], &p.index, &p.value, &rescaled]);
    }
    csv
}

/// Report entry with the declared keys.
fn spectrum_json(r: &SpectrumReport, fit: Option<&GapFit>) -> Value {
    json!({
        "h": r.h,
        "gap": r.gap,
        "nu_hat": fit.map(|f| f.nu_hat),
        "order": fit.and_then(|f| f.order),
        "drift": r.drift,
        "clusters": r.clusters,
        "weyl": r.weyl,
    })
}

/// `max |lambda_j - tau_j|` against the sinc multipliers, both sorted.
fn flat_oracle_error(spec: &Spectrum, h: f64) -> f64 {
    let m = spec.basis.cutoff as i64;
    let mut oracle: Vec<f64> = (-m..=m).flat_map(|a| (-m..=m).map(move |b| flat_multiplier(a, b, h))).collect();
    oracle.sort_by(|a, b| b.total_cmp(a));
    spec.values().iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn require_flat(model: Model, what: &str) -> Result<(), ConfigError> {
    if model == Model::Flat2 {
        Ok(())
    } else {
        Err(ConfigError::new(format!("`{what}` has a closed form only for flat2")))
    }
}

fn spectrum(cfg: &ExperimentConfig) -> Run {
    let (model, hs, cutoff, q) = (cfg.model()?, cfg.hs()?, cfg.cutoff()?, cfg.quadrature());
    let (r, eps) = (cfg.r()?, cfg.eps()?.rule());
    if cfg.checks.oracle_tol.is_some() {
        require_flat(model, "oracle_tol")?;
    }
    let opts = blocks(q);
    let spec_l = eigen(&assemble_generator_with(model, cutoff, &opts)?)?;
    let mut out = Outcome::new();
    let mut reports = Vec::new();
    let mut oracle_err = 0.0f64;
    for (i, &h) in hs.iter().enumerate() {
        let spec_t = eigen(&assemble_transfer_with(model, h, cutoff, &opts)?)?;
        let name = if hs.len() == 1 { "spectrum.csv".to_string() } else { format!("spectrum_{i}.csv") };
        out.artifacts.csv(name, spectrum_rows(&spec_t, h));
        if model == Model::Flat2 {
            oracle_err = oracle_err.max(flat_oracle_error(&spec_t, h));
        }
        reports.push(spectrum_report_from(model, &spec_t, &spec_l, r, eps)?);
    }
    let points: Vec<_> = reports
        .iter()
        .map(|r| hypowalk::spectra::GapPoint { h: r.h, gap: r.gap, gap_over_h2: r.gap / (r.h * r.h) })
        .collect();
    let fit = gap_scaling_fit(&points).ok();
    let entries: Vec<Value> = reports.iter().map(|r| spectrum_json(r, fit.as_ref())).collect();
    let body = if entries.len() == 1 { entries[0].clone() } else { Value::Array(entries) };
    out.artifacts.json("report.json", &body);
    out.put("spectra", hs.len());
    out.checks.at_most("max |lambda - sinc oracle|", oracle_err, cfg.checks.oracle_tol);
    Ok(out)
}

fn gap_scan_cmd(cfg: &ExperimentConfig) -> Run {
    let (model, hs, cutoff, q) = (cfg.model()?, cfg.hs()?, cfg.cutoff()?, cfg.quadrature());
    let points = gap_scan(model, &hs, cutoff, q)?;
    let mut out = Outcome::new();
    let mut csv = Csv::new(&["h", "gap", "gap_over_h2"]);
    for p in &points {
        csv.row(&[&p.h, &p.gap, &p.gap_over_h2]);
    }
    out.artifacts.csv("gapscan.csv", csv);
    let c = &cfg.checks;
    if (c.nu_rel_tol.is_some() || c.raw_rel_tol.is_some()) && c.nu_target.is_none() {
        return Err(ConfigError::new("`nu_rel_tol` and `raw_rel_tol` need `nu_target`").into());
    }
    if points.len() >= 2 {
        let fit = gap_scaling_fit(&points)?;
        out.checks.require("gap decreases with h", fit.monotone);
        if let Some(target) = c.nu_target {
            out.checks.at_most("|nu_hat / nu - 1|", (fit.nu_hat / target - 1.0).abs(), c.nu_rel_tol);
        }
        out.put("fit", &fit);
    } else if c.nu_rel_tol.is_some() {
        return Err(ConfigError::new("`nu_rel_tol` needs at least two step sizes").into());
    }
    if let Some(target) = c.nu_target {
        let last = points.last().expect("h list is nonempty");
        out.checks.at_most("|g/h^2 / nu - 1| at smallest h", (last.gap_over_h2 / target - 1.0).abs(), c.raw_rel_tol);
    }
    out.put("points", &points);
    Ok(out)
}

fn cluster(cfg: &ExperimentConfig) -> Run {
    let (model, h, cutoff, q) = (cfg.model()?, cfg.single_h()?, cfg.cutoff()?, cfg.quadrature());
    let (r, eps) = (cfg.r()?, cfg.eps()?.rule());
    let opts = blocks(q);
    let spec_t = eigen(&assemble_transfer_with(model, h, cutoff, &opts)?)?;
    let spec_l = eigen(&assemble_generator_with(model, cutoff, &opts)?)?;
    let report = spectrum_report_from(model, &spec_t, &spec_l, r, eps)?;
    // flat2 with a fixed half-width is matched against the lattice levels directly
    let (clusters, oracle) = match (model, eps) {
        (Model::Flat2, EpsRule::Fixed(e)) => {
            (cluster_match(&rescaled_low_spectrum(&spec_t, r)?, &flat_levels(r), e)?, "lattice")
        }
        _ => (report.clusters.clone(), "generator"),
    };
    let mut out = Outcome::new();
    let mut csv = Csv::new(&["nu", "spread", "m_expected", "m_found"]);
    for c in &clusters.clusters {
        csv.row(&[&c.nu, &c.spread, &c.m_expected, &c.m_found]);
    }
    out.artifacts.csv("clusters.csv", csv);
    out.checks.require("every cluster count equals its multiplicity", clusters.passed);
    out.checks.require("no unmatched rescaled values", clusters.unmatched.is_empty());
    out.put("oracle", oracle);
    out.put("h", h);
    out.put("drift", report.drift);
    out.put("eps", clusters.eps);
    out.put("rescaled", &report.rescaled);
    out.put("clusters", &clusters);
    Ok(out)
}

fn walk_tv(cfg: &ExperimentConfig) -> Run {
    let (model, h, cutoff, q) = (cfg.model()?, cfg.single_h()?, cfg.cutoff()?, cfg.quadrature());
    let checkpoints = cfg.checkpoints.as_ref().ok_or_else(|| ConfigError::new("missing `checkpoints`"))?.to_vec()?;
    let walkers = cfg.walkers(1)?[0];
    let c = &cfg.checks;
    if c.slope_tol.is_some() && (cfg.slope_steps.is_none() || cfg.f.is_none()) {
        return Err(ConfigError::new("`slope_tol` needs `slope_steps` and `f`").into());
    }
    let r = tv_decay_rate(model, h, &checkpoints, walkers, cfg.x0(), cfg.seed(), cfg.bins()?, cutoff, q)?;
    let mut out = Outcome::new();
    let mut csv = Csv::new(&["n", "tv_hat", "stderr", "floor"]);
    for row in &r.rows {
        csv.row(&[&row.n, &row.tv, &row.stderr, &row.floor]);
    }
    out.artifacts.csv("tv.csv", csv);
    out.checks.at_most("|rate / g - 1|", (r.ratio - 1.0).abs(), c.rate_rel_tol);
    if let (Some((lo, hi)), Some(_)) = (cfg.slope_steps, &cfg.f) {
        let op = assemble_transfer_with(model, h, cutoff, &blocks(q))?;
        let f = cfg.f()?.coefficients(op.basis)?;
        let slope = matrix_decay_slope(&op, &f, lo, hi)?;
        let err = (slope - (1.0 - r.gap).ln()).abs();
        out.checks.at_most("|matrix slope - log(1 - g)|", err, c.slope_tol);
        out.put("matrix_slope", slope);
    }
    out.put("gap", r.gap);
    out.put("rate", r.fit.rate);
    out.put("ratio", r.ratio);
    out.put("fit", &r.fit);
    Ok(out)
}

/// `T^n f (x0)` and `e^{-tL} f (x0)` for flat2 from the multipliers.
fn flat_closed_forms(cfg: &ExperimentConfig, h: f64, n: usize, t: f64) -> Result<(f64, f64), ConfigError> {
    let x0 = cfg.x0();
    let nu = PI * PI / 3.0;
    let mut power = 0.0;
    let mut heat = 0.0;
    for term in &cfg.f()?.terms {
        let phase = 2.0 * PI * (term.m as f64 * x0[0] + term.n as f64 * x0[1]);
        let v = term.cos * phase.cos() + term.sin * phase.sin();
        power += v * flat_multiplier(term.m, term.n, h).powi(n as i32);
        heat += v * (-t * nu * (term.m * term.m + term.n * term.n) as f64).exp();
    }
    Ok((power, heat))
}

fn diffuse(cfg: &ExperimentConfig) -> Run {
    let (model, hs, cutoff, q) = (cfg.model()?, cfg.hs()?, cfg.cutoff()?, cfg.quadrature());
    let (t, f) = (cfg.t()?, cfg.f()?);
    let walkers = cfg.walkers(hs.len())?;
    let c = &cfg.checks;
    if c.oracle_tol.is_some() {
        require_flat(model, "oracle_tol")?;
    }
    let mut out = Outcome::new();
    let mut csv = Csv::new(&["h", "t", "mc_mean", "mc_stderr", "matrix_value", "semigroup_value"]);
    let mut rows = Vec::new();
    for (&h, &w) in hs.iter().zip(&walkers) {
        let r = diffusion_limit_test(model, h, t, &f, cfg.x0(), w, cfg.seed(), cutoff, q)?;
        csv.row(&[&r.h, &r.t, &r.mc_mean, &r.mc_stderr, &r.matrix_value, &r.semigroup_value]);
        let tag = format!("h={h}");
        out.checks.at_most(&format!("{tag} |z|"), r.z.abs(), c.z_max);
        if c.oracle_tol.is_some() {
            let (power, heat) = flat_closed_forms(cfg, h, r.n_steps, t)?;
            let err = (r.matrix_value - power).abs().max((r.semigroup_value - heat).abs());
            out.checks.at_most(&format!("{tag} closed-form error"), err, c.oracle_tol);
        }
        rows.push(r);
    }
    out.artifacts.csv("diffusion.csv", csv);
    let first = rows[0];
    out.checks.at_most(
        "|T^n f - e^{-tL} f| at first h",
        (first.matrix_value - first.semigroup_value).abs(),
        c.semigroup_tol,
    );
    if c.halving_band.is_some() {
        for w in rows.windows(2) {
            if (w[0].h - 2.0 * w[1].h).abs() > 1e-12 * w[0].h {
                return Err(ConfigError::new("`halving_band` needs successively halving step sizes").into());
            }
            let ratio =
                (w[0].matrix_value - w[0].semigroup_value).abs() / (w[1].matrix_value - w[1].semigroup_value).abs();
            out.checks.within(&format!("semigroup error ratio h={} -> {}", w[0].h, w[1].h), ratio, c.halving_band);
        }
    }
    out.put("rows", &rows);
    Ok(out)
}

fn minorize(cfg: &ExperimentConfig) -> Run {
    let (model, h) = (cfg.model()?, cfg.single_h()?);
    let eps = match cfg.eps()? {
        EpsSpec::Value(e) | EpsSpec::Rule(EpsRule::Fixed(e)) => e,
        EpsSpec::Rule(_) => return Err(ConfigError::new("`eps` must be a number for minorize").into()),
    };
    let samples = cfg.samples.ok_or_else(|| ConfigError::new("missing `samples`"))?;
    let (p, r) = model.lift_algebra()?;
    let lie = build_free_nilpotent(p, r)?;
    let x0 = cfg.x0.unwrap_or([0.5, 0.5]);
    let rep = minorization_ratio(model, &lie, h, eps, x0, samples, cfg.bins()?, cfg.seed())?;
    let mut out = Outcome::new();
    out.artifacts.json("minorization.json", &rep);
    out.checks.require("S samples stay inside the P-step support", !rep.support_violation);
    out.checks.at_least("c_hat", rep.c_hat, cfg.checks.c_min);
    let dev = (rep.s_mass - rep.s_mass_expected).abs() / rep.s_mass_stderr;
    out.checks.at_most("S-mass deviation in standard errors", dev, cfg.checks.mass_sigmas);
    out.put("c_hat", rep.c_hat);
    out.put("s_mass", rep.s_mass);
    out.put("excluded_bins", rep.excluded_bins);
    Ok(out)
}

fn consistency(cfg: &ExperimentConfig) -> Run {
    if cfg.generator.is_none() && cfg.chapman_taylor.is_none() && cfg.projector.is_none() {
        return Err(ConfigError::new("need at least one of `generator`, `chapman_taylor`, `projector`").into());
    }
    let c = &cfg.checks;
    let mut out = Outcome::new();
    if let Some(parts) = &cfg.generator {
        let mut csv = Csv::new(&["model", "h", "error"]);
        let mut reports = Vec::new();
        for part in parts {
            for &h in &part.h {
                crate::config::check_h(h)?;
            }
            let r = generator_consistency(part.model, &trig_poly(&part.f), &part.h, part.cutoff, part.quadrature)?;
            for &(h, e) in &r.errors {
                csv.row(&[&part.model.name(), &h, &e]);
            }
            for (i, &ratio) in r.ratios.iter().enumerate() {
                let name = format!("{} e(h)/e(h/2) at h={}", part.model, part.h[i]);
                out.checks.within(&name, ratio, c.ratio_band);
            }
            reports.push(json!({"model": part.model, "errors": r.errors, "ratios": r.ratios}));
        }
        out.artifacts.csv("generator_consistency.csv", csv);
        out.put("generator", reports);
    }
    if let Some(part) = &cfg.chapman_taylor {
        crate::config::check_h(part.h)?;
        let op = assemble_transfer_with(part.model, part.h, part.cutoff, &blocks(part.quadrature))?;
        let f = trig_poly(&part.f).coefficients(op.basis)?;
        let r = chapman_taylor_check(&op, &f, &part.deltas)?;
        let mut csv = Csv::new(&["delta", "n_max", "defect", "defect_over_delta2"]);
        for row in &r.rows {
            csv.row(&[&row.delta, &row.n_max, &row.defect, &row.defect_over_delta2]);
        }
        out.artifacts.csv("chapman_taylor.csv", csv);
        out.checks.at_most("max/min of D(delta)/delta^2", r.variation, c.variation_max);
        out.put("chapman_taylor", &r);
    }
    if let Some(part) = &cfg.projector {
        for &h in &part.h {
            crate::config::check_h(h)?;
        }
        let f = trig_poly(&part.f).coefficients(FourierBasis::new(part.cutoff))?;
        let r = projector_sweep(part.model, &f, &part.h, part.c4, part.quadrature)?;
        let mut csv = Csv::new(&["h", "tail_sup"]);
        for &(h, tail) in &r.tails {
            csv.row(&[&h, &tail]);
        }
        out.artifacts.csv("projector_tails.csv", csv);
        for (i, &ratio) in r.ratios.iter().enumerate() {
            out.checks.at_most(&format!("tail ratio h={} -> {}", part.h[i], part.h[i + 1]), ratio, c.tail_ratio_max);
        }
        out.put("projector", &r);
    }
    Ok(out)
}
