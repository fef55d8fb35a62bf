use std::sync::Arc;

use anyhow::Result;
use gibbs_core::bethe::{
    bethe_free_energy, family_marginal_assignment, gibbs_uniqueness_check, nonreconstruction_estimate, MarginalAssignment, SearchMode,
    Verdict, DEFAULT_BOUNDARY_CAP,
};
use gibbs_core::local::{limit_tree, Family};
use gibbs_core::model::{concentration_probe, sample_graph};
use gibbs_core::rng::derive_seed;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{flag, grid, mean_se, or_aborted, row_seed, series, timed, Outcome};
use crate::output::ResultRow;
use crate::spec::{ExperimentSpec, SearchSpec};
use crate::RunContext;

#[derive(Clone, Debug, Serialize)]
struct UniquenessSummary {
    #[serde(flatten)]
    verdict: Verdict,
    worst_tv: f64,
    boundaries_checked: usize,
    /// Variable-rooted limit templates checked.
    templates: usize,
}

impl UniquenessSummary {
    fn value(&self) -> f64 {
        match self.verdict {
            Verdict::Unique => 1.0,
            Verdict::NotUnique => 0.0,
            Verdict::Unknown => f64::NAN,
        }
    }
}

/// Gibbs uniqueness of `p` over every variable-rooted key of the limit tree.
fn uniqueness(
    limit: &Family,
    p: &MarginalAssignment,
    eps: f64,
    ell: usize,
    search: SearchSpec,
    seed: u64,
) -> gibbs_core::Result<UniquenessSummary> {
    let theta = limit_tree(limit, ell + 1)?;
    let mode = match search {
        SearchSpec::Exhaustive => SearchMode::Exhaustive,
        SearchSpec::Sampled { samples } => SearchMode::Sampled { samples, seed },
    };
    let mut out = UniquenessSummary { verdict: Verdict::Unique, worst_tv: 0.0, boundaries_checked: 0, templates: 0 };
    for (_, e) in theta.variable_entries() {
        let r = gibbs_uniqueness_check(&e.template, p, eps, ell, mode, DEFAULT_BOUNDARY_CAP)?;
        out.worst_tv = out.worst_tv.max(r.worst_tv);
        out.boundaries_checked += r.boundaries_checked;
        out.templates += 1;
        out.verdict = match (&out.verdict, r.verdict) {
            (Verdict::NotUnique, _) | (_, Verdict::NotUnique) => Verdict::NotUnique,
            (Verdict::Unknown, _) | (_, Verdict::Unknown) => Verdict::Unknown,
            _ => Verdict::Unique,
        };
    }
    Ok(out)
}

/// Changes within this much of zero count as flat in trend flags.
const TREND_SLACK: f64 = 1e-12;

/// `{quantity}_change` between consecutive sizes and a final
/// `{quantity}_decreasing` (strict) or `{quantity}_nonincreasing` flag, per β.
pub(super) fn trend_rows(
    rows: &[ResultRow],
    template: &ResultRow,
    betas: &[f64],
    quantity: &str,
    magnitude: bool,
    strict: bool,
) -> Vec<ResultRow> {
    let mut out = Vec::new();
    for &beta in betas {
        let mut s = series(rows, beta, quantity);
        s.sort_by_key(|&(n, _)| n);
        if magnitude {
            s.iter_mut().for_each(|(_, v)| *v = v.abs());
        }
        let mut ok = true;
        for w in s.windows(2) {
            let change = w[1].1 - w[0].1;
            ok &= if strict { change < -TREND_SLACK } else { change <= TREND_SLACK };
            out.push(template.with(&format!("{quantity}_change"), change).n(w[1].0).beta(beta));
        }
        if let Some(&(n, _)) = s.last().filter(|_| s.len() > 1) {
            let name = if strict { "decreasing" } else { "nonincreasing" };
            out.push(template.with(&format!("{quantity}_{name}"), flag(ok)).n(n).beta(beta));
        }
    }
    out
}

struct BetaInfo {
    bethe: f64,
    uniqueness: Option<UniquenessSummary>,
}

pub fn verify_bethe(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Outcome> {
    let fam = spec.require_model()?;
    let sizes = spec.require_sizes()?;
    let betas = spec.require_betas()?;
    let samples = spec.require_samples()?;
    let (ell, id) = (spec.ell, spec.id.as_str());

    let infos: Vec<BetaInfo> = betas
        .par_iter()
        .map(|&beta| -> Result<BetaInfo> {
            let limit = fam.limit(beta);
            let p = family_marginal_assignment(&limit, ell, spec.m)?;
            let bethe = bethe_free_energy(&limit_tree(&limit, ell)?, &p)?;
            let uniqueness = match spec.eps {
                None => None,
                Some(eps) => {
                    let seed = derive_seed(ctx.seed, &format!("uniqueness/beta={beta}"), 0);
                    match uniqueness(&limit, &p, eps, ell, spec.search, seed) {
                        Ok(u) => Some(u),
                        Err(gibbs_core::Error::Budget { .. }) => None,
                        Err(e) => return Err(e.into()),
                    }
                }
            };
            Ok(BetaInfo { bethe, uniqueness })
        })
        .collect::<Result<_>>()?;

    let blocks: Vec<Vec<ResultRow>> = grid(sizes, betas)
        .par_iter()
        .map(|&(n, beta)| {
            let info = &infos[betas.iter().position(|&b| b == beta).expect("beta in grid")];
            let seed = row_seed(ctx, spec.command, n, beta);
            let base = ResultRow::new(id, seed, "", 0.0).n(n).beta(beta).ell(ell).samples(samples);
            let (res, ms) = timed(|| -> Result<Vec<ResultRow>> {
                let model = Arc::new(fam.model(n, beta)?);
                let r = concentration_probe(&model, samples, seed, ctx.budget)?;
                let nf = n as f64;
                let per_n = r.mean_log_z / nf;
                let se = (r.variance / samples as f64).sqrt() / nf;
                let mut rows = vec![
                    base.with("mean_log_z_per_n", per_n).band(se),
                    base.with("bethe", info.bethe),
                    base.with("gap", per_n - info.bethe).band(se),
                ];
                if spec.eps.is_some() {
                    rows.push(base.with("unique", info.uniqueness.as_ref().map_or(f64::NAN, UniquenessSummary::value)));
                }
                Ok(rows)
            });
            or_aborted(res, base.clone()).map(|rows| rows.into_iter().map(|r| r.wall(ms)).collect())
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<ResultRow> = blocks.into_iter().flatten().collect();
    let template = ResultRow::new(id, ctx.seed, "", 0.0).ell(ell);
    rows.extend(trend_rows(&rows, &template, betas, "gap", true, false));

    let per_beta: Vec<_> = betas
        .iter()
        .zip(&infos)
        .map(|(b, i)| json!({ "beta": b, "bethe": i.bethe, "uniqueness": i.uniqueness }))
        .collect();
    Ok(Outcome { rows, results: json!({ "extension": spec.m, "eps": spec.eps, "betas": per_beta }) })
}

pub fn uniqueness_scan(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Outcome> {
    let fam = spec.require_model()?;
    let betas = spec.require_betas()?;
    let eps = spec.require_eps()?;
    let (ell, id) = (spec.ell, spec.id.as_str());
    let blocks: Vec<(Vec<ResultRow>, Option<UniquenessSummary>)> = betas
        .par_iter()
        .map(|&beta| -> Result<_> {
            let seed = derive_seed(ctx.seed, &format!("uniqueness/beta={beta}"), 0);
            let base = ResultRow::new(id, seed, "", 0.0).beta(beta).ell(ell);
            let (res, ms) = timed(|| -> Result<UniquenessSummary> {
                let limit = fam.limit(beta);
                let p = family_marginal_assignment(&limit, ell, spec.m)?;
                Ok(uniqueness(&limit, &p, eps, ell, spec.search, seed)?)
            });
            let (rows, summary) = match res {
                Ok(u) => {
                    let rows = vec![
                        base.with("worst_tv", u.worst_tv),
                        base.with("unique", u.value()),
                        base.with("boundaries_checked", u.boundaries_checked as f64),
                    ];
                    (rows, Some(u))
                }
                Err(e) => (or_aborted(Err(e), base)?, None),
            };
            Ok((rows.into_iter().map(|r| r.wall(ms)).collect(), summary))
        })
        .collect::<Result<_>>()?;

    // verdicts in increasing β: monotone when no unique verdict follows a
    // non-unique one
    let mut order: Vec<usize> = (0..betas.len()).collect();
    order.sort_by(|&a, &b| betas[a].total_cmp(&betas[b]));
    let mut seen_not_unique = false;
    let mut monotone = true;
    for &i in &order {
        match blocks[i].1.as_ref().map(|u| &u.verdict) {
            Some(Verdict::NotUnique) => seen_not_unique = true,
            Some(Verdict::Unique) if seen_not_unique => monotone = false,
            _ => {}
        }
    }
    let results: Vec<_> = betas.iter().zip(&blocks).map(|(b, (_, u))| json!({ "beta": b, "uniqueness": u })).collect();
    let mut rows: Vec<ResultRow> = blocks.into_iter().flat_map(|(r, _)| r).collect();
    rows.push(ResultRow::new(id, ctx.seed, "verdict_monotone", flag(monotone)).ell(ell));
    Ok(Outcome { rows, results: json!({ "eps": eps, "betas": results }) })
}

pub fn nonrecon_scan(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Outcome> {
    let fam = spec.require_model()?;
    let sizes = spec.require_sizes()?;
    let betas = spec.require_betas()?;
    let samples = spec.require_samples()?;
    let (ell, id) = (spec.ell, spec.id.as_str());
    let assignments: Vec<MarginalAssignment> =
        betas.par_iter().map(|&b| Ok(family_marginal_assignment(&fam.limit(b), ell, spec.m)?)).collect::<Result<_>>()?;
    let blocks: Vec<Vec<ResultRow>> = grid(sizes, betas)
        .par_iter()
        .map(|&(n, beta)| {
            let p = &assignments[betas.iter().position(|&b| b == beta).expect("beta in grid")];
            let seed = row_seed(ctx, spec.command, n, beta);
            let base = ResultRow::new(id, seed, "", 0.0).n(n).beta(beta).ell(ell).samples(samples);
            let (res, ms) = timed(|| -> Result<Vec<ResultRow>> {
                let model = Arc::new(fam.model(n, beta)?);
                let values = (0..spec.graphs as u64)
                    .map(|i| {
                        let g = sample_graph(&model, derive_seed(seed, "graph", i))?;
                        Ok(nonreconstruction_estimate(&g, p, ell, samples, derive_seed(seed, "boundary", i), ctx.budget)?)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let (mean, se) = mean_se(&values);
                Ok(vec![base.with("nonreconstruction", mean).band(se)])
            });
            or_aborted(res, base.clone()).map(|rows| rows.into_iter().map(|r| r.wall(ms)).collect())
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<ResultRow> = blocks.into_iter().flatten().collect();
    let template = ResultRow::new(id, ctx.seed, "", 0.0).ell(ell);
    rows.extend(trend_rows(&rows, &template, betas, "nonreconstruction", false, false));
    Ok(Outcome { rows, results: json!({ "graphs": spec.graphs, "extension": spec.m }) })
}
