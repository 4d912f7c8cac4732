//! One runner per campaign target.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use super::{config_at, ExperimentPlan, Target};
use crate::continuum::{box_area, sample_ranked_lengths, simulate_limit_path, LimitParams};
use crate::exploration::{components, explore_until, ExplorationTrace, RootRule};
use crate::regimes::{c_theta, clustering_limit, scaling_set, Regime, RegimeConfig, ScalingSet};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sampler::{induce_intersection, sample_bipartite, BipartiteGraph};
use crate::surplus_triangles::{
    classify_surplus, clustering_coefficient_mc, count_triangles_exact, simple_point_measure, swapped_triangle_process,
    triangle_process, SurplusCase,
};
use crate::validation::{ks_critical_value, ks_distance, mean_report, mean_var, variance_report, StatReport};
use crate::{Error, Result};

/// Reports of one target plus its raw samples as CSV text.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetOutcome {
    pub reports: Vec<StatReport>,
    pub csv: String,
    pub pass: bool,
}

impl TargetOutcome {
    fn new(reports: Vec<StatReport>, csv: String) -> Self {
        let pass = !reports.is_empty() && reports.iter().all(|r| r.pass);
        TargetOutcome { reports, csv, pass }
    }
}

/// Grid times of the walk statistics, as fractions of `horizon_t`.
const WALK_TIMES: [f64; 3] = [0.25, 0.5, 1.0];

fn step_at(t: f64, scale: &ScalingSet, side: usize) -> Result<usize> {
    let k = (t * scale.time_scale).floor() as usize;
    if k == 0 {
        return Err(Error::InvalidPlan(format!("limit time {t} is below one exploration step")));
    }
    Ok(k.min(side))
}

/// Samples `B` (transposed in the heavy regime) and explores `steps` steps.
fn explore_replicate(config: &RegimeConfig, seed: u64, steps: usize) -> (BipartiteGraph, ExplorationTrace) {
    let mut graph = sample_bipartite(config, seed);
    if config.regime == Regime::Heavy {
        graph = graph.transposed();
    }
    let trace = explore_until(&graph, RootRule::UniformSeeded(derive_seed(seed, 1)), steps);
    (graph, trace)
}

fn limit_params(config: &RegimeConfig) -> LimitParams {
    match config.regime {
        Regime::Moderate => LimitParams::new(config.lambda, config.limit_theta()),
        _ => LimitParams::infinite(config.lambda),
    }
}

fn require_replicates(plan: &ExperimentPlan) -> Result<()> {
    if plan.replicates < 2 {
        return Err(Error::InvalidPlan("at least 2 replicates are needed for a standard error".into()));
    }
    Ok(())
}

/// Sample covariance against `reference`, with the standard error of the
/// mean of centred products.
fn covariance_report(name: String, x: &[f64], y: &[f64], reference: f64, z: f64) -> StatReport {
    let (mx, _) = mean_var(x);
    let (my, _) = mean_var(y);
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let n = prods.len() as f64;
    let (mean, var) = mean_var(&prods);
    let cov = mean * n / (n - 1.0);
    let se = (var / n).sqrt();
    StatReport::new(name, cov, reference, z * se, x.len(), se)
}

fn ks_report(name: String, a: &[f64], b: &[f64], tolerance: f64) -> StatReport {
    StatReport::new(name, ks_distance(a, b), 0.0, tolerance, a.len(), f64::NAN)
        .with_detail(format!("two-sample KS, {} vs {} samples", a.len(), b.len()))
}

/// `(R, S)` of the rescaled walk at the grid times, against the Gaussian
/// moments of the limit; `S` marginals also against exact Gaussian samples.
pub fn run_walk_law(plan: &ExperimentPlan, seed: u64) -> Result<TargetOutcome> {
    require_replicates(plan)?;
    let config = &plan.config;
    let scale = scaling_set(config);
    let (side, _) = config.explored_sides();
    let times = WALK_TIMES.map(|f| f * plan.horizon_t);
    let mut ks = [0usize; 3];
    for (i, &t) in times.iter().enumerate() {
        ks[i] = step_at(t, &scale, side)?;
    }
    let moderate = config.regime == Regime::Moderate;
    let centre = if moderate { config.limit_theta().sqrt() } else { 0.0 };
    let samples: Vec<[(f64, f64); 3]> = (0..plan.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let (_, trace) = explore_replicate(config, derive_seed(seed, r), ks[2]);
            ks.map(|k| {
                let rr = (trace.r[k] as f64 - centre * k as f64) * scale.community_scale;
                (rr, trace.s[k] as f64 * scale.walk_scale)
            })
        })
        .collect();

    let params = limit_params(config);
    let z = plan.tolerances.z;
    let ks_tol = ks_critical_value(plan.replicates, plan.replicates, plan.tolerances.ks_alpha);
    let mut reports = Vec::new();
    let mut csv = String::from("replicate,t,R,S\n");
    for (r, row) in samples.iter().enumerate() {
        for (c, &(rr, s)) in row.iter().enumerate() {
            writeln!(csv, "{r},{},{rr},{s}", times[c]).unwrap();
        }
    }
    for (c, &t) in times.iter().enumerate() {
        let rs: Vec<f64> = samples.iter().map(|row| row[c].0).collect();
        let ss: Vec<f64> = samples.iter().map(|row| row[c].1).collect();
        let var_s = params.variance_rate() * t;
        reports.push(mean_report(format!("walk_law.S.mean@{t}"), &ss, params.s_drift(t), z));
        reports.push(variance_report(format!("walk_law.S.var@{t}"), &ss, var_s, z));
        if moderate {
            let theta = config.limit_theta();
            reports.push(mean_report(format!("walk_law.R.mean@{t}"), &rs, params.r_drift(t), z));
            reports.push(variance_report(format!("walk_law.R.var@{t}"), &rs, theta.sqrt() * t, z));
            reports.push(covariance_report(format!("walk_law.RS.cov@{t}"), &rs, &ss, t, z));
        } else {
            reports.push(mean_report(format!("walk_law.R.mean@{t}"), &rs, t, z));
        }
        let mut rng = rng_from_seed(derive_seed(seed, u64::MAX - c as u64));
        let gauss: Vec<f64> = (0..plan.replicates)
            .map(|_| params.s_drift(t) + var_s.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        reports.push(ks_report(format!("walk_law.S.ks@{t}"), &ss, &gauss, ks_tol));
    }
    Ok(TargetOutcome::new(reports, csv))
}

/// Ranked continuum excursion lengths, padded with zeros to `ranks`.
fn continuum_lengths(plan: &ExperimentPlan, seed: u64, ranks: usize) -> Result<Vec<Vec<f64>>> {
    let params = limit_params(&plan.config);
    (0..plan.continuum_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut z = sample_ranked_lengths(params, plan.dt, plan.continuum_horizon, derive_seed(seed, i))?;
            z.resize(ranks.max(z.len()), 0.0);
            z.truncate(ranks);
            Ok(z)
        })
        .collect()
}

/// Stream offset keeping continuum draws apart from replicate draws.
const CONTINUUM_STREAM: u64 = 1 << 40;

/// Ranked component masses over the horizon against continuum excursion
/// lengths, rank by rank.
pub fn run_component_sizes(plan: &ExperimentPlan, seed: u64) -> Result<TargetOutcome> {
    require_replicates(plan)?;
    const RANKS: usize = 3;
    let config = &plan.config;
    let scale = scaling_set(config);
    let (side, _) = config.explored_sides();
    let steps = step_at(plan.continuum_horizon, &scale, side)?;
    let heavy = config.regime == Regime::Heavy;
    // (ranked masses, whether both vertex types give the same largest component)
    let discrete: Vec<(Vec<f64>, bool)> = (0..plan.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let (_, trace) = explore_replicate(config, derive_seed(seed, r), steps);
            let comps = components(&trace);
            let mass = |c: &crate::exploration::Component| {
                if heavy {
                    c.u_size as f64 * scale.mass_scale
                } else {
                    c.v_size as f64 * scale.mass_scale
                }
            };
            let mut z: Vec<f64> = comps.iter().take(RANKS).map(mass).collect();
            z.resize(RANKS, 0.0);
            let agree = match comps.first() {
                Some(top) => comps.iter().all(|c| c.u_size <= top.u_size),
                None => true,
            };
            (z, agree)
        })
        .collect();
    let continuum = continuum_lengths(plan, derive_seed(seed, CONTINUUM_STREAM), RANKS)?;

    let mut csv = String::from("source,index,rank,zeta\n");
    for (i, (z, _)) in discrete.iter().enumerate() {
        for (k, v) in z.iter().enumerate() {
            writeln!(csv, "discrete,{i},{},{v}", k + 1).unwrap();
        }
    }
    for (i, z) in continuum.iter().enumerate() {
        for (k, v) in z.iter().enumerate() {
            writeln!(csv, "continuum,{i},{},{v}", k + 1).unwrap();
        }
    }
    let mut reports = Vec::new();
    for k in 0..RANKS {
        let a: Vec<f64> = discrete.iter().map(|d| d.0[k]).collect();
        let b: Vec<f64> = continuum.iter().map(|z| z[k]).collect();
        reports.push(ks_report(format!("component_sizes.zeta{}.ks", k + 1), &a, &b, plan.tolerances.ks));
    }
    let disorder = discrete.iter().filter(|d| d.0.windows(2).any(|w| w[0] < w[1])).count();
    reports.push(
        StatReport::new("component_sizes.ordering_violations", disorder as f64, 0.0, 0.0, discrete.len(), 0.0)
            .with_detail("replicates with zeta_k < zeta_{k+1}"),
    );
    if heavy {
        let agree = discrete.iter().filter(|d| d.1).count() as f64 / discrete.len() as f64;
        reports.push(
            StatReport::new(
                "component_sizes.ranking_agreement",
                agree,
                1.0,
                1.0 - plan.tolerances.ranking_agreement,
                discrete.len(),
                (agree * (1.0 - agree) / discrete.len() as f64).sqrt(),
            )
            .with_detail("share of replicates whose largest component is the same by both vertex counts"),
        );
    }
    Ok(TargetOutcome::new(reports, csv))
}

/// Triangle process at time `t`, rescaled, from one exploration.
fn scaled_triangles(trace: &ExplorationTrace, k: usize, regime: Regime, scale: &ScalingSet) -> f64 {
    let t = if regime == Regime::Heavy { swapped_triangle_process(trace)[k] } else { triangle_process(trace)[k] };
    t as f64 * scale.triangle_scale
}

/// Process-level mean of the rescaled triangle count against its line.
fn triangle_process_report(
    plan: &ExperimentPlan,
    config: &RegimeConfig,
    seed: u64,
    name: &str,
) -> Result<(StatReport, Vec<f64>)> {
    let scale = scaling_set(config);
    let (side, _) = config.explored_sides();
    let t = plan.horizon_t;
    let k = step_at(t, &scale, side)?;
    let slope = match config.regime {
        Regime::Moderate => c_theta(config.limit_theta()),
        Regime::Light => 0.5,
        Regime::Heavy => 1.0 / 6.0,
    };
    let values: Vec<f64> = (0..plan.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let (_, trace) = explore_replicate(config, derive_seed(seed, r), k);
            scaled_triangles(&trace, k, config.regime, &scale)
        })
        .collect();
    let reference = slope * t;
    let rel = plan.tolerances.triangle_rel_for(config.regime);
    let rep = mean_report(name, &values, reference, 0.0).with_tolerance(rel * reference);
    let zscore = (rep.observed - reference) / rep.stderr;
    let rep = rep.with_detail(format!("n = {}, m = {}, t = {t}, relative tolerance {rel}, z = {zscore:.2}", config.n, config.m));
    Ok((rep, values))
}

pub fn run_triangles(plan: &ExperimentPlan, target: Target, seed: u64) -> Result<TargetOutcome> {
    require_replicates(plan)?;
    match target {
        Target::TriangleModerate => triangles_moderate(plan, seed),
        Target::TriangleLight => {
            let (rep, values) = triangle_process_report(plan, &plan.config, seed, "triangles.light.process")?;
            Ok(TargetOutcome::new(vec![rep], process_csv(&values, plan.horizon_t)))
        }
        Target::TriangleHeavy => triangles_heavy(plan, seed),
        Target::TriangleCritLight => triangles_crit_light(plan, seed),
        other => Err(Error::InvalidPlan(format!("{} is not a triangle target", other.as_str()))),
    }
}

fn process_csv(values: &[f64], t: f64) -> String {
    let mut csv = String::from("kind,index,value\n");
    for (i, v) in values.iter().enumerate() {
        writeln!(csv, "process@{t},{i},{v}").unwrap();
    }
    csv
}

fn triangles_moderate(plan: &ExperimentPlan, seed: u64) -> Result<TargetOutcome> {
    let config = &plan.config;
    let (process, values) = triangle_process_report(plan, config, seed, "triangles.moderate.process")?;
    let mut csv = process_csv(&values, plan.horizon_t);

    // component level: n^{-2/3} L_1 against c_theta zeta_1
    let scale = scaling_set(config);
    let steps = step_at(plan.continuum_horizon, &scale, config.n)?;
    let comp_seed = derive_seed(seed, CONTINUUM_STREAM + 1);
    let l1: Vec<f64> = (0..plan.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let (graph, trace) = explore_replicate(config, derive_seed(comp_seed, r), steps);
            match components(&trace).first() {
                Some(c) => {
                    let g = induce_intersection(&graph);
                    count_triangles_exact(&g, c.members(&trace)) as f64 * scale.triangle_scale
                }
                None => 0.0,
            }
        })
        .collect();
    let c = c_theta(config.limit_theta());
    let limit: Vec<f64> = continuum_lengths(plan, derive_seed(seed, CONTINUUM_STREAM), 1)?
        .into_iter()
        .map(|z| c * z[0])
        .collect();
    for (i, v) in l1.iter().enumerate() {
        writeln!(csv, "component,{i},{v}").unwrap();
    }
    for (i, v) in limit.iter().enumerate() {
        writeln!(csv, "continuum,{i},{v}").unwrap();
    }
    let component = ks_report("triangles.moderate.component.ks".into(), &l1, &limit, plan.tolerances.ks);
    Ok(TargetOutcome::new(vec![process, component], csv))
}

/// Process level at the plan's size; when that misses its tolerance and a
/// second size is given, a shrinking gap between the two sizes is accepted.
fn triangles_heavy(plan: &ExperimentPlan, seed: u64) -> Result<TargetOutcome> {
    let (main, values) = triangle_process_report(plan, &plan.config, seed, "triangles.heavy.process")?;
    let mut csv = process_csv(&values, plan.horizon_t);
    let mut reports = vec![main.clone()];
    let mut pass = main.pass;
    if let Some(n2) = plan.compare_n {
        let other_cfg = config_at(&plan.config, n2)?;
        let (other, values2) = triangle_process_report(plan, &other_cfg, derive_seed(seed, CONTINUUM_STREAM), "triangles.heavy.process.compare")?;
        for (i, v) in values2.iter().enumerate() {
            writeln!(csv, "compare_n{n2},{i},{v}").unwrap();
        }
        let (small, large) = if n2 < plan.config.n { (&other, &main) } else { (&main, &other) };
        let gap = |r: &StatReport| (r.observed - r.reference).abs();
        let trend = StatReport::new(
            "triangles.heavy.trend",
            gap(large),
            0.0,
            gap(small),
            plan.replicates,
            large.stderr,
        )
        .with_detail(format!("gap at the larger n against the gap at the smaller n ({} vs {})", plan.config.n, n2));
        pass = pass || trend.pass;
        reports.push(other);
        reports.push(trend);
    }
    Ok(TargetOutcome { reports, csv, pass })
}

/// Triangles of the largest component against half its rescaled size,
/// paired within each replicate.
fn triangles_crit_light(plan: &ExperimentPlan, seed: u64) -> Result<TargetOutcome> {
    let config = &plan.config;
    let scale = scaling_set(config);
    let steps = step_at(plan.continuum_horizon, &scale, config.n)?;
    let pairs: Vec<(f64, f64)> = (0..plan.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let (graph, trace) = explore_replicate(config, derive_seed(seed, r), steps);
            match components(&trace).first() {
                Some(c) => {
                    let g = induce_intersection(&graph);
                    (count_triangles_exact(&g, c.members(&trace)) as f64, c.v_size as f64 * scale.mass_scale)
                }
                None => (0.0, 0.0),
            }
        })
        .collect();
    let mut csv = String::from("replicate,L1,zeta1\n");
    for (i, (l, z)) in pairs.iter().enumerate() {
        writeln!(csv, "{i},{l},{z}").unwrap();
    }
    let diff: Vec<f64> = pairs.iter().map(|(l, z)| l - 0.5 * z).collect();
    let (ml, _) = mean_var(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let (mz, _) = mean_var(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let rep = mean_report("triangles.crit_light.L1_minus_half_zeta1", &diff, 0.0, plan.tolerances.crit_light_z)
        .with_detail(format!("mean L1 = {ml:.4}, half mean zeta1 = {:.4}", 0.5 * mz));
    Ok(TargetOutcome::new(vec![rep], csv))
}

/// Per-replicate surplus summary.
struct SurplusSample {
    in_box: usize,
    records: usize,
    siblings: usize,
}

fn surplus_samples(config: &RegimeConfig, plan: &ExperimentPlan, seed: u64) -> Result<Vec<SurplusSample>> {
    let scale = scaling_set(config);
    let steps = step_at(plan.horizon_t.max(plan.continuum_horizon), &scale, config.n)?;
    (0..plan.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let (graph, trace) = explore_replicate(config, derive_seed(seed, r), steps);
            let records = classify_surplus(&graph, &trace)?;
            let measure = simple_point_measure(&records, config.n);
            Ok(SurplusSample {
                in_box: measure.count_in_box(plan.horizon_t, plan.box_height),
                records: records.len(),
                siblings: records.iter().filter(|r| r.case == SurplusCase::SiblingOverlap).count(),
            })
        })
        .collect()
}

/// Atom counts of the simple surplus measure in `[0, t] x [0, L]` against
/// Poisson counts driven by the area under the reflected limit walk.
pub fn run_surplus(plan: &ExperimentPlan, seed: u64) -> Result<TargetOutcome> {
    require_replicates(plan)?;
    let config = &plan.config;
    if config.regime == Regime::Heavy {
        return Err(Error::InvalidPlan("the surplus measure is defined for the light and moderate regimes".into()));
    }
    let discrete = surplus_samples(config, plan, seed)?;
    let params = limit_params(config);
    let (t, height) = (plan.horizon_t, plan.box_height);
    let cont_seed = derive_seed(seed, CONTINUUM_STREAM);
    let continuum: Vec<(f64, f64)> = (0..plan.continuum_paths as u64)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(cont_seed, i);
            let path = simulate_limit_path(params, plan.dt, t, s)?;
            let area = box_area(&path, t, height);
            let count = if area > 0.0 {
                Poisson::new(area).expect("positive area").sample(&mut rng_from_seed(derive_seed(s, 1)))
            } else {
                0.0
            };
            Ok((area, count))
        })
        .collect::<Result<_>>()?;

    let mut csv = String::from("source,index,count,area\n");
    for (i, d) in discrete.iter().enumerate() {
        writeln!(csv, "discrete,{i},{},", d.in_box).unwrap();
    }
    for (i, (area, count)) in continuum.iter().enumerate() {
        writeln!(csv, "continuum,{i},{count},{area}").unwrap();
    }

    let counts: Vec<f64> = discrete.iter().map(|d| d.in_box as f64).collect();
    let areas: Vec<f64> = continuum.iter().map(|c| c.0).collect();
    let (mc, vc) = mean_var(&counts);
    let (ma, va) = mean_var(&areas);
    let se = (vc / counts.len() as f64 + va / areas.len() as f64).sqrt();
    let z = plan.tolerances.z;
    let mut reports = vec![
        StatReport::new("surplus.box.mean", mc, ma, z * se, counts.len(), se)
            .with_detail(format!("box [0, {t}] x [0, {height}], {} continuum paths", areas.len())),
        ks_report(
            "surplus.box.ks".into(),
            &counts,
            &continuum.iter().map(|c| c.1).collect::<Vec<_>>(),
            ks_critical_value(counts.len(), continuum.len(), plan.tolerances.ks_alpha),
        ),
    ];
    if let Some(n2) = plan.compare_n {
        let other_cfg = config_at(config, n2)?;
        let other = surplus_samples(&other_cfg, plan, seed)?;
        let (small, large) = if n2 < config.n { (&other, &discrete) } else { (&discrete, &other) };
        reports.push(sibling_trend(plan, small, large, config.n.min(n2), config.n.max(n2)));
    }
    Ok(TargetOutcome::new(reports, csv))
}

/// Replicates are split into paired batches; a batch shows the trend when the
/// pooled SiblingOverlap share is smaller at the larger size.
fn sibling_trend(
    plan: &ExperimentPlan,
    small: &[SurplusSample],
    large: &[SurplusSample],
    n_small: usize,
    n_large: usize,
) -> StatReport {
    let batches = plan.trend_batches.min(small.len()).max(1);
    let share = |xs: &[SurplusSample]| {
        let rec: usize = xs.iter().map(|x| x.records).sum();
        let sib: usize = xs.iter().map(|x| x.siblings).sum();
        if rec == 0 {
            f64::NAN
        } else {
            sib as f64 / rec as f64
        }
    };
    let size = small.len().div_ceil(batches);
    let mut hits = 0usize;
    let mut shares = Vec::new();
    for (a, b) in small.chunks(size).zip(large.chunks(size)) {
        let (sa, sb) = (share(a), share(b));
        if sb < sa {
            hits += 1;
        }
        shares.push(format!("{sa:.4}->{sb:.4}"));
    }
    let used = shares.len();
    let frac = hits as f64 / used as f64;
    StatReport::new("surplus.sibling_trend", frac, 1.0, 1.0 - plan.tolerances.trend_fraction, used, f64::NAN)
        .with_detail(format!("n = {n_small} -> {n_large}, sibling share per batch {}", shares.join(" ")))
}

/// Wedge-ratio estimate against the regime's clustering limit.
pub fn run_clustering(plan: &ExperimentPlan, seed: u64) -> Result<TargetOutcome> {
    require_replicates(plan)?;
    let est = clustering_coefficient_mc(&plan.config, plan.replicates, seed);
    let value = est
        .estimate
        .ok_or_else(|| Error::InvalidPlan("no two-paths observed; increase n or replicates".into()))?;
    let reference = clustering_limit(&plan.config);
    let rep = StatReport::new(
        "clustering.coefficient",
        value,
        reference,
        plan.tolerances.clustering_z * est.stderr,
        est.replicates,
        est.stderr,
    )
    .with_detail(format!("{} conditioning events", est.events));
    let csv = format!("estimate,stderr,events,replicates\n{value},{},{},{}\n", est.stderr, est.events, est.replicates);
    Ok(TargetOutcome::new(vec![rep], csv))
}
