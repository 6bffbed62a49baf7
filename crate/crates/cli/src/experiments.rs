//! The six experiments. Each one computes every table in memory and hands
//! back [`Artifacts`]; nothing touches the disk here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use ljchain::audit::{audit_assumptions, default_grid};
use ljchain::boundary_layer::{beta, certify_decay, equilibrium_residuals, BetaReport, DecayReport};
use ljchain::cell_formula::phi_convergence;
use ljchain::chain::{sweep_with, ChainState, Classification, Starts};
use ljchain::envelope::convex_envelope_with_anchors;
use ljchain::{EffectiveModel, Error, PotentialFamily};

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{Cell, Table};

/// How a completed run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    /// A checked identity or certificate did not hold.
    Inconsistent(String),
    /// An iterative schedule stopped before its tolerance.
    NotConverged(String),
}

pub struct Artifacts {
    pub tables: Vec<Table>,
    pub summary: Value,
    pub status: Status,
}

/// Constants shared by every summary.
#[derive(Debug, Serialize)]
struct Constants {
    gamma: f64,
    delta: Vec<f64>,
    c: Vec<f64>,
    alpha: f64,
    zc1: f64,
    zc2: Option<f64>,
    zc3: f64,
    jcb_at_gamma: f64,
    beta: Option<f64>,
    beta_plain: Option<f64>,
    beta_discrepancy: Option<f64>,
    b: Option<f64>,
    b_tilde: Option<f64>,
    l_star: Option<f64>,
    layer_n: Option<usize>,
    layer_converged: Option<bool>,
    lambda: Option<f64>,
    c_const: Option<f64>,
    alpha_lb: Option<f64>,
}

struct Context {
    model: EffectiveModel,
    layer: Option<BetaReport>,
    decay: Option<DecayReport>,
}

impl Context {
    fn build(cfg: &ExperimentConfig) -> Result<Self, Error> {
        let fam = PotentialFamily::new(cfg.family.k1, cfg.family.k2, cfg.family.range)?;
        let model = EffectiveModel::build(&fam);
        let layer =
            if fam.range() >= 2 { Some(beta(&model, cfg.tolerances.layer_max_n, cfg.tolerances.layer)?) } else { None };
        let decay = match (&layer, fam.range()) {
            (Some(l), 2) => Some(certify_decay(&model, &l.split.profile.r)?),
            _ => None,
        };
        Ok(Self { model, layer, decay })
    }

    fn constants(&self) -> Constants {
        let m = &self.model;
        let lm = m.family.landmarks();
        let l = self.layer.as_ref();
        Constants {
            gamma: m.gamma,
            delta: lm.delta,
            c: m.c.clone(),
            alpha: m.alpha,
            zc1: lm.zc1,
            zc2: lm.zc2,
            zc3: lm.zc3,
            jcb_at_gamma: m.jcb_at_gamma,
            beta: l.map(|l| l.beta),
            beta_plain: l.map(|l| l.beta_plain),
            beta_discrepancy: l.map(|l| l.discrepancy),
            b: l.map(|l| l.b),
            b_tilde: l.map(|l| l.b_tilde),
            l_star: l.map(|l| (l.beta / m.alpha).sqrt()),
            layer_n: l.map(|l| l.n),
            layer_converged: l.map(|l| l.converged),
            lambda: self.decay.as_ref().map(|d| d.lambda),
            c_const: self.decay.as_ref().map(|d| d.c_const),
            alpha_lb: self.decay.as_ref().map(|d| d.alpha_lb),
        }
    }

    fn layer(&self, what: &str) -> Result<&BetaReport, Error> {
        self.layer.as_ref().ok_or_else(|| Error::Unsupported(format!("{what} needs K >= 2")))
    }
}

pub fn run(cfg: &ExperimentConfig, experiment: Experiment) -> Result<Artifacts, Error> {
    let ctx = Context::build(cfg)?;
    let (tables, details, status) = match experiment {
        Experiment::Audit => audit(cfg, &ctx)?,
        Experiment::Density => density(cfg, &ctx)?,
        Experiment::Phi => phi(cfg, &ctx)?,
        Experiment::Chain => chain(cfg, &ctx)?,
        Experiment::Layer => layer(&ctx)?,
        Experiment::Decay => decay(&ctx)?,
    };
    let summary = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment,
        "config": cfg,
        "constants": ctx.constants(),
        "results": details,
    });
    Ok(Artifacts { tables, summary, status })
}

type Outcome = Result<(Vec<Table>, Value, Status), Error>;

fn audit(cfg: &ExperimentConfig, ctx: &Context) -> Outcome {
    let fam = &ctx.model.family;
    let report = audit_assumptions(fam, &default_grid(fam, cfg.grids.audit_points))?;
    let mut table = Table::new("audit", &["check", "passed", "margin", "witness", "note"]);
    for c in &report.checks {
        table.push(vec![
            Cell::Text(c.name.clone()),
            Cell::Flag(c.passed),
            Cell::Num(c.margin),
            c.witness.map_or(Cell::Empty, Cell::Num),
            Cell::Text(c.note.clone()),
        ]);
    }
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let status = if failed.is_empty() {
        Status::Ok
    } else {
        Status::Inconsistent(format!("audit checks failed: {}", failed.join(", ")))
    };
    Ok((vec![table], json!({ "all_passed": report.all_passed(), "checks": report.checks }), status))
}

fn envelope_table(
    name: &str,
    samples: &[(f64, f64)],
    far: (f64, f64),
    closed: impl Fn(f64) -> f64,
) -> Result<(Table, f64), Error> {
    let env = convex_envelope_with_anchors(samples, &[far])?;
    let mut table = Table::new(name, &["z", "f", "f_envelope_sampled", "f_envelope_closed_form"]);
    let mut sup: f64 = 0.0;
    for (z, f, e) in env.rows() {
        let c = closed(z);
        sup = sup.max((e - c).abs());
        table.push(vec![Cell::Num(z), Cell::Num(f), Cell::Num(e), Cell::Num(c)]);
    }
    Ok((table, sup))
}

fn density(cfg: &ExperimentConfig, ctx: &Context) -> Outcome {
    let m = &ctx.model;
    let [lo, hi] = cfg.grids.density_range;
    let step = cfg.grids.density_step * m.gamma;
    let count = ((hi - lo) * m.gamma / step).floor() as usize;
    let grid: Vec<f64> = (0..=count).map(|k| lo * m.gamma + k as f64 * step).collect();
    let far = 1e7 * m.family.delta1();

    let samples: Vec<(f64, f64)> = grid.iter().map(|&z| (z, m.jcb(z))).collect();
    let (jcb, jcb_sup) = envelope_table("envelope_jcb", &samples, (far, m.jcb(far)), |z| m.jcb_star_star(z))?;
    let mut tables = vec![jcb];
    let mut sups = vec![json!({ "density": "J_CB", "sup_error": jcb_sup })];
    for j in 2..=m.range() {
        let samples: Vec<(f64, f64)> = grid.iter().map(|&z| (z, m.psi(j, z))).collect();
        let (t, sup) =
            envelope_table(&format!("envelope_psi_{j}"), &samples, (far, m.psi(j, far)), |z| m.psi_envelope(j, z))?;
        tables.push(t);
        sups.push(json!({ "density": format!("psi_{j}"), "sup_error": sup }));
    }
    Ok((tables, json!({ "envelopes": sups }), Status::Ok))
}

fn phi(cfg: &ExperimentConfig, ctx: &Context) -> Outcome {
    let m = &ctx.model;
    let blocks = cfg
        .grids
        .z
        .par_iter()
        .map(|&f| phi_convergence(m, f * m.gamma, &cfg.grids.cell_sizes))
        .collect::<Result<Vec<_>, Error>>()?;
    let mut table = Table::new("phi", &["N", "z", "phi_N", "jcb_star_star", "abs_error"]);
    for row in blocks.iter().flatten() {
        table.push(vec![
            Cell::Int(row.n),
            Cell::Num(row.z),
            Cell::Num(row.phi),
            Cell::Num(row.jcb_star_star),
            Cell::Num(row.abs_error),
        ]);
    }
    let trend: Vec<Value> = cfg
        .grids
        .z
        .iter()
        .zip(&blocks)
        .map(|(f, rows)| {
            let (first, last) = (&rows[0], &rows[rows.len() - 1]);
            json!({ "z_over_gamma": f, "error_first": first.abs_error, "error_last": last.abs_error })
        })
        .collect();
    Ok((vec![table], json!({ "trend": trend }), Status::Ok))
}

fn chain(cfg: &ExperimentConfig, ctx: &Context) -> Outcome {
    let m = &ctx.model;
    let layer = ctx.layer("the chain experiment")?;
    let b = layer.beta;
    let l_star = (b / m.alpha).sqrt();
    let ells: Vec<f64> = cfg.grids.ell.iter().map(|f| f * l_star).collect();
    let (seed, jitter) = (cfg.seed, cfg.tolerances.jitter);
    let rows = sweep_with(m, b, &cfg.grids.n, &ells, |n, ell| {
        let mut starts = Starts::standard(n);
        if jitter > 0.0 {
            // one seeded perturbation of the affine start per cell
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).rotate_left(32) ^ ell.to_bits());
            let mut v = ChainState::affine(n, ell).v;
            for x in &mut v[1..] {
                *x += jitter * ell.max(1.0 / n as f64) * rng.gen_range(-1.0..1.0);
            }
            starts.extra.push(v);
        }
        starts
    })?;

    let scale = m.family.energy_scale();
    let mut table = Table::new(
        "chain",
        &[
            "n",
            "ell",
            "ell_over_lstar",
            "energy",
            "energy_normalized",
            "classification",
            "predicted",
            "relative_gap",
            "max_gap",
            "cracked_in_elastic_regime",
            "converged",
        ],
    );
    for r in &rows {
        table.push(vec![
            Cell::Int(r.n),
            Cell::Num(r.ell),
            Cell::Num(r.ell / l_star),
            Cell::Num(r.energy),
            Cell::Num(r.energy / scale),
            Cell::Text(match r.classification {
                Classification::Elastic => "elastic".into(),
                Classification::Fractured => "fractured".into(),
            }),
            Cell::Num(r.predicted),
            Cell::Num(r.relative_gap),
            Cell::Num(r.max_gap),
            Cell::Flag(r.cracked_in_elastic_regime),
            Cell::Flag(r.converged),
        ]);
    }
    let flagged = rows.iter().filter(|r| r.cracked_in_elastic_regime).count();
    let stalled = rows.iter().filter(|r| !r.converged).count();
    let status = if stalled > 0 {
        Status::NotConverged(format!("{stalled} chain cells stopped before the gradient tolerance"))
    } else {
        Status::Ok
    };
    let details = json!({ "l_star": l_star, "cells": rows.len(), "cracked_in_elastic_regime": flagged });
    Ok((vec![table], details, status))
}

fn profile_table(name: &str, ctx: &Context) -> Result<(Table, Vec<f64>), Error> {
    let m = &ctx.model;
    let layer = ctx.layer("the boundary layer")?;
    let p = &layer.split.profile;
    let residuals = if m.range() == 2 { equilibrium_residuals(m, &p.r)? } else { p.residuals.clone() };
    let mut table = Table::new(name, &["i", "r", "decay_bound", "residual"]);
    let mut bound = p.r[0];
    for (i, (r, res)) in p.r.iter().zip(&residuals).enumerate() {
        let b = ctx.decay.as_ref().map_or(Cell::Empty, |_| Cell::Num(bound));
        table.push(vec![Cell::Int(i + 1), Cell::Num(*r), b, Cell::Num(*res)]);
        bound *= ctx.decay.as_ref().map_or(1.0, |d| d.lambda);
    }
    Ok((table, residuals))
}

fn layer(ctx: &Context) -> Outcome {
    let layer = ctx.layer("the layer experiment")?;
    let (table, residuals) = profile_table("layer", ctx)?;
    let max_residual = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let d = ctx.decay.as_ref();
    let details = json!({
        "B": layer.b,
        "B_tilde": layer.b_tilde,
        "beta": layer.beta,
        "lambda": d.map(|d| d.lambda),
        "C_const": d.map(|d| d.c_const),
        "alpha_lb": d.map(|d| d.alpha_lb),
        "N": layer.n,
        "converged": layer.converged,
        "history": layer.split.history,
        "max_residual": max_residual,
    });
    let status = if layer.converged {
        Status::Ok
    } else {
        Status::NotConverged(format!("layer truncation reached N = {} without meeting the tolerance", layer.n))
    };
    Ok((vec![table], details, status))
}

fn decay(ctx: &Context) -> Outcome {
    let Some(report) = &ctx.decay else {
        return Err(Error::Unsupported(format!(
            "the decay certificate is stated for K = 2, got K = {}",
            ctx.model.range()
        )));
    };
    let (table, residuals) = profile_table("decay", ctx)?;
    let max_residual = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let status = if report.certified() {
        Status::Ok
    } else {
        Status::Inconsistent(format!(
            "decay certificate fails: violations {:?}, monotone break {:?}, window break {:?}",
            report.violations, report.monotone_witness, report.window_witness
        ))
    };
    Ok((
        vec![table],
        json!({ "certificate": report, "certified": report.certified(), "max_residual": max_residual }),
        status,
    ))
}
