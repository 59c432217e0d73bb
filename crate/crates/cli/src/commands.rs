use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use superhedge::hedging::{
    alpha_cost_bound, lift, verify_doubling, verify_lifted_path, DoublingHedge, DoublingReport, MonteCarloReport,
    PathOutcome, PathStatus,
};
use superhedge::lp::{DenseSimplex, LpStatus};
use superhedge::paths::GridFamily;
use superhedge::payoffs::{check_lipschitz_supnorm, check_lipschitz_timeshift, LipschitzReport};
use superhedge::pricing::{
    b_constant, check_no_arbitrage, dual_lp, duality_gap, kappa_tilde_lower, kappa_tilde_upper, lower_bound_value,
    lower_correction, upper_correction, primal_lp, primal_lp_subset,
    primal_lp_with_band, upper_bound_value, BoundInputs, BoundReport, ConsistentPriceSystem, GapReport, HedgePlan,
    NoArbitrageReport, PricingError, WitnessCheck,
};
use superhedge::tree::{build_tree, validate_tree, TreeConfig, TreeReport};

use crate::config::{ExperimentConfig, SamplerConfig};
use crate::error::CliError;
use crate::output::{num, Histogram, RunDir, HISTOGRAM_HEADER};

/// Everything a command needs besides its output directory.
pub struct Context {
    pub config: ExperimentConfig,
    pub solver: DenseSimplex,
    pub seed: u64,
    pub tolerance: f64,
}

fn rel_tol(tol: f64, v: f64) -> f64 {
    tol * (1.0 + v.abs())
}

#[derive(Serialize)]
struct ModelValue {
    support_leaves: usize,
    /// `None` when the support admits an arbitrage (value `−∞`).
    value: Option<f64>,
    below_free_price: bool,
}

#[derive(Serialize)]
struct PriceReport {
    payoff: String,
    kappa: f64,
    epsilon: f64,
    nodes: usize,
    leaves: usize,
    tree: TreeReport,
    primal_value: f64,
    dual_value: f64,
    gap: GapReport,
    model: Option<ModelValue>,
    ok: bool,
}

#[derive(Serialize)]
struct Witnesses {
    hedge_plan: HedgePlan,
    witness_check: WitnessCheck,
    price_system: ConsistentPriceSystem,
}

pub fn price(ctx: &Context, run: &mut RunDir) -> Result<bool, CliError> {
    let t0 = Instant::now();
    let cfg = &ctx.config;
    let market = cfg.market()?;
    let payoff = cfg.payoff()?;
    let tree = build_tree(&cfg.tree()?)?;
    let tree_report = validate_tree(&tree);
    let gap = duality_gap(&tree, &payoff, &market, &ctx.solver)?;
    let primal = primal_lp(&tree, &payoff, &market, &ctx.solver)?;
    let dual = dual_lp(&tree, &payoff, &market, &ctx.solver)?;

    let model = match &cfg.model_support {
        None => None,
        Some(positions) => {
            let ids = positions
                .iter()
                .map(|&p| {
                    tree.leaves().get(p).copied().ok_or_else(|| {
                        CliError::Config(format!("model_support position {p} but the tree has {} leaves", tree.leaves().len()))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let value = match primal_lp_subset(&tree, &payoff, &market, &ids, &ctx.solver) {
                Ok(o) => Some(o.value),
                Err(PricingError::UnexpectedStatus { status: LpStatus::Unbounded, .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let below = value.is_none_or(|v| v <= primal.value + rel_tol(ctx.tolerance, primal.value));
            Some(ModelValue { support_leaves: ids.len(), value, below_free_price: below })
        }
    };

    let ok = gap.ok
        && gap.gap <= rel_tol(ctx.tolerance, gap.primal_value)
        && tree_report.is_valid()
        && model.as_ref().is_none_or(|m| m.below_free_price);
    let report = PriceReport {
        payoff: payoff.name(),
        kappa: market.kappa(),
        epsilon: tree.epsilon(),
        nodes: tree.len(),
        leaves: tree.leaves().len(),
        tree: tree_report,
        primal_value: primal.value,
        dual_value: dual.value,
        gap,
        model,
        ok,
    };
    run.write_json("price.json", &report)?;
    run.write_json(
        "witnesses.json",
        &Witnesses { hedge_plan: primal.plan, witness_check: primal.witness, price_system: dual.cps },
    )?;
    run.task("price", ok, t0.elapsed().as_secs_f64());
    Ok(ok)
}

#[derive(Serialize)]
struct BoundsRow {
    epsilon: f64,
    lambda: f64,
    kappa_tilde_lower: Option<f64>,
    kappa_tilde_upper: Option<f64>,
    hat_c: f64,
    b: f64,
    lower_correction: f64,
    upper_correction: f64,
    /// `ok`, `infeasible` (bound is `−∞`) or `no_kappa_tilde`.
    lower_status: &'static str,
    lower: Option<BoundReport>,
    /// `ok` or `kappa_tilde_out_of_range`.
    upper_status: &'static str,
    upper: Option<BoundReport>,
    /// `lower ≤ upper` whenever both are finite.
    bracket_ok: bool,
}

#[derive(Serialize)]
struct BoundsReport {
    payoff: String,
    kappa: f64,
    inputs: BoundInputs,
    lower_times: Vec<f64>,
    upper_grid_i_max: usize,
    upper_max_jumps: usize,
    rows: Vec<BoundsRow>,
    /// Both corrections and `|κ̃ − κ|` strictly decrease as `ε` decreases.
    corrections_decreasing: bool,
    bracket_ok: bool,
}

const BOUNDS_HEADER: [&str; 18] = [
    "epsilon",
    "lambda",
    "kappa",
    "kappa_tilde_lower",
    "kappa_tilde_upper",
    "hat_c",
    "b",
    "lower_correction",
    "upper_correction",
    "lower_status",
    "lower_tree_primal",
    "lower_adjusted_sup",
    "lower_bound",
    "upper_status",
    "upper_tree_primal",
    "upper_adjusted_sup",
    "upper_bound",
    "bracket_ok",
];

fn bounds_csv_row(kappa: f64, r: &BoundsRow) -> Vec<String> {
    let lo = r.lower.as_ref();
    let up = r.upper.as_ref();
    let lower_bound = if r.lower_status == "infeasible" {
        "-inf".to_string()
    } else {
        num(lo.and_then(|l| l.lower_bound))
    };
    vec![
        r.epsilon.to_string(),
        r.lambda.to_string(),
        kappa.to_string(),
        num(r.kappa_tilde_lower),
        num(r.kappa_tilde_upper),
        r.hat_c.to_string(),
        r.b.to_string(),
        r.lower_correction.to_string(),
        r.upper_correction.to_string(),
        r.lower_status.to_string(),
        num(lo.map(|l| l.primal_value)),
        num(lo.and_then(|l| l.adjusted_sup)),
        lower_bound,
        r.upper_status.to_string(),
        num(up.map(|u| u.primal_value)),
        num(up.and_then(|u| u.adjusted_sup)),
        num(up.and_then(|u| u.upper_bound)),
        r.bracket_ok.to_string(),
    ]
}

/// Lower and upper bounds over the `ε × Λ` sweep. With `require_trend`
/// the corrections must also shrink as `ε` decreases.
pub fn bounds(ctx: &Context, run: &mut RunDir, require_trend: bool) -> Result<bool, CliError> {
    let t0 = Instant::now();
    let cfg = &ctx.config;
    let spec = cfg.bounds.as_ref().ok_or_else(|| CliError::Config("this command needs a `bounds` section".into()))?;
    if spec.epsilons.is_empty() || spec.lambdas.is_empty() {
        return Err(CliError::Config("bounds.epsilons and bounds.lambdas must be nonempty".into()));
    }
    if require_trend && spec.epsilons.len() < 2 {
        return Err(CliError::Config("converge needs at least two epsilons".into()));
    }
    let market = cfg.market()?;
    let payoff = cfg.payoff()?;
    let inputs = BoundInputs::from_market(&market, cfg.lipschitz()?)?;
    let kappa = market.kappa();
    let (l, hc) = (inputs.lipschitz, inputs.hat_c());
    let tol = ctx.tolerance;

    let per_eps = spec
        .epsilons
        .par_iter()
        .map(|&eps| -> Result<Vec<BoundsRow>, CliError> {
            let kt_lower = kappa_tilde_lower(kappa, eps);
            let kt_upper = kappa_tilde_upper(kappa, eps).ok();
            let (lower_status, lower) = if kt_lower.is_some() {
                let tree = build_tree(&TreeConfig::partition(eps, spec.lower_times.clone(), spec.horizon))?;
                let r = lower_bound_value(&tree, &payoff, &market, &inputs, &ctx.solver)?;
                (if r.lower_infeasible { "infeasible" } else { "ok" }, Some(r))
            } else {
                ("no_kappa_tilde", None)
            };
            let upper_tree = match kt_upper {
                Some(_) => Some(build_tree(&TreeConfig::dyadic(
                    eps,
                    GridFamily::uniform(spec.upper_i_max),
                    spec.upper_max_jumps,
                    spec.horizon,
                ))?),
                None => None,
            };
            spec.lambdas
                .iter()
                .map(|&lambda| {
                    let upper = match &upper_tree {
                        Some(t) => Some(upper_bound_value(t, &payoff, &market, &inputs, lambda, &ctx.solver)?),
                        None => None,
                    };
                    let bracket_ok = match (lower.as_ref().and_then(|r| r.lower_bound), upper.as_ref().and_then(|r| r.upper_bound)) {
                        (Some(lb), Some(ub)) => lb <= ub + rel_tol(tol, ub),
                        _ => true,
                    };
                    Ok(BoundsRow {
                        epsilon: eps,
                        lambda,
                        kappa_tilde_lower: kt_lower,
                        kappa_tilde_upper: kt_upper,
                        hat_c: hc,
                        b: b_constant(l, eps, kappa, hc, inputs.l_n),
                        lower_correction: lower_correction(l, hc, eps),
                        upper_correction: upper_correction(l, eps, hc, kappa),
                        lower_status,
                        lower: lower.clone(),
                        upper_status: if upper.is_some() { "ok" } else { "kappa_tilde_out_of_range" },
                        upper,
                        bracket_ok,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<BoundsRow> = per_eps.into_iter().flatten().collect();

    let mut by_eps: Vec<&BoundsRow> = rows.iter().collect();
    by_eps.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    by_eps.dedup_by(|a, b| a.epsilon == b.epsilon);
    let corrections_decreasing = by_eps.windows(2).all(|w| {
        let band_shrinks = match (w[0].kappa_tilde_upper, w[1].kappa_tilde_upper) {
            (Some(a), Some(b)) => (b - kappa).abs() < (a - kappa).abs(),
            _ => true,
        };
        w[1].lower_correction < w[0].lower_correction && w[1].upper_correction < w[0].upper_correction && band_shrinks
    });
    let bracket_ok = rows.iter().all(|r| r.bracket_ok);

    let csv_rows: Vec<Vec<String>> = rows.iter().map(|r| bounds_csv_row(kappa, r)).collect();
    let report = BoundsReport {
        payoff: payoff.name(),
        kappa,
        inputs,
        lower_times: spec.lower_times.clone(),
        upper_grid_i_max: spec.upper_i_max,
        upper_max_jumps: spec.upper_max_jumps,
        rows,
        corrections_decreasing,
        bracket_ok,
    };
    run.write_json("bounds.json", &report)?;
    run.write_csv("bounds.csv", &BOUNDS_HEADER, &csv_rows)?;
    let ok = bracket_ok && (!require_trend || corrections_decreasing);
    run.task(if require_trend { "converge" } else { "bounds" }, ok, t0.elapsed().as_secs_f64());
    Ok(ok)
}

#[derive(Serialize)]
struct DoublingSummary {
    kappa: f64,
    paths: usize,
    passed: usize,
    strict_violations: usize,
    adjusted_violations: usize,
    norm_violations: usize,
    alpha_violations: usize,
    chain_violations: usize,
    /// Smallest `Z − (1 − 8κ)/4 · max_j S²_{θ_j}`.
    min_margin: f64,
    /// Smallest margin after adding back the overshoot adjustment.
    min_adjusted_margin: f64,
    worst_stream: Option<u64>,
    max_overshoot: f64,
    max_big_k: usize,
    cost: f64,
    alpha_cost_bound: f64,
}

impl DoublingSummary {
    fn new(kappa: f64, cost: f64, bound: f64, reports: &[DoublingReport]) -> Self {
        let mut s = Self {
            kappa,
            paths: reports.len(),
            passed: 0,
            strict_violations: 0,
            adjusted_violations: 0,
            norm_violations: 0,
            alpha_violations: 0,
            chain_violations: 0,
            min_margin: f64::INFINITY,
            min_adjusted_margin: f64::INFINITY,
            worst_stream: None,
            max_overshoot: 0.0,
            max_big_k: 0,
            cost,
            alpha_cost_bound: bound,
        };
        for (i, r) in reports.iter().enumerate() {
            s.passed += usize::from(r.passes());
            s.strict_violations += usize::from(!r.strict_ok);
            s.adjusted_violations += usize::from(!r.adjusted_ok);
            s.norm_violations += usize::from(!r.norm_ok);
            s.alpha_violations += usize::from(!r.alpha_ok);
            s.chain_violations += usize::from(!r.chain_ok);
            if r.margin < s.min_margin {
                s.min_margin = r.margin;
                s.worst_stream = Some(i as u64);
            }
            s.min_adjusted_margin = s.min_adjusted_margin.min(r.margin + r.adjustment);
            s.max_overshoot = s.max_overshoot.max(r.overshoot);
            s.max_big_k = s.max_big_k.max(r.big_k);
        }
        s
    }
}

#[derive(Serialize)]
struct DoublingOutput {
    c_q: f64,
    k: f64,
    sampler: String,
    summaries: Vec<DoublingSummary>,
    ok: bool,
}

#[derive(Serialize)]
struct LiftSummary {
    sampler: String,
    report: MonteCarloReport,
    excluded_fraction: f64,
    mean_shortfall: Option<f64>,
    ok: bool,
}

#[derive(Serialize)]
struct LiftOutput {
    epsilon: f64,
    kappa: f64,
    band: f64,
    tree_nodes: usize,
    tree_value: f64,
    max_excluded_fraction: f64,
    samplers: Vec<LiftSummary>,
    ok: bool,
}

fn status_name(s: PathStatus) -> &'static str {
    match s {
        PathStatus::Verified => "verified",
        PathStatus::Violated => "violated",
        PathStatus::ExcludedFrozen => "excluded_frozen",
        PathStatus::ExcludedGrid => "excluded_grid",
    }
}

pub fn hedge_verify(ctx: &Context, run: &mut RunDir) -> Result<bool, CliError> {
    let cfg = &ctx.config;
    let spec = cfg.hedge.as_ref().ok_or_else(|| CliError::Config("this command needs a `hedge` section".into()))?;
    if spec.doubling.is_none() && spec.lift.is_none() {
        return Err(CliError::Config("hedge needs a `doubling` or `lift` section".into()));
    }
    let market = cfg.market()?;
    let mut all_ok = true;

    if let Some(d) = &spec.doubling {
        let t0 = Instant::now();
        let sampler = d.sampler.build()?;
        let (_, l_n, _) = market.statics().quadratic().map_err(CliError::config)?;
        let mut summaries = Vec::new();
        let mut hist_rows = Vec::new();
        for &kappa in &d.kappas {
            let m = market.with_kappa(kappa)?;
            let cost = DoublingHedge::new(d.c_q, &m)?.cost(&m);
            let reports = (0..d.paths as u64)
                .into_par_iter()
                .map(|s| verify_doubling(&sampler.sample(ctx.seed, s), &m, d.c_q, d.k))
                .collect::<Result<Vec<_>, _>>()?;
            let group = format!("kappa{kappa}");
            let margins: Vec<f64> = reports.iter().map(|r| r.margin).collect();
            hist_rows.extend(Histogram::new("margin", &margins, spec.histogram_bins).rows(&group));
            let adjusted: Vec<f64> = reports.iter().map(|r| r.margin + r.adjustment).collect();
            hist_rows.extend(Histogram::new("adjusted_margin", &adjusted, spec.histogram_bins).rows(&group));
            summaries.push(DoublingSummary::new(kappa, cost, alpha_cost_bound(kappa, d.c_q, l_n, d.k), &reports));
        }
        let ok = summaries.iter().all(|s| s.passed == s.paths);
        all_ok &= ok;
        let out = DoublingOutput { c_q: d.c_q, k: d.k, sampler: d.sampler.label(), summaries, ok };
        run.write_json("doubling.json", &out)?;
        run.write_csv("doubling_hist.csv", &HISTOGRAM_HEADER, &hist_rows)?;
        run.task("doubling", ok, t0.elapsed().as_secs_f64());
    }

    if let Some(l) = &spec.lift {
        let t0 = Instant::now();
        let payoff = cfg.payoff()?;
        let lipschitz = cfg.lipschitz()?;
        let grid = GridFamily::uniform(l.i_max);
        let tree = build_tree(&TreeConfig::dyadic(l.epsilon, grid.clone(), l.max_jumps, 1.0))?;
        let band = kappa_tilde_upper(market.kappa(), l.epsilon)?;
        let primal = primal_lp_with_band(&tree, &payoff, &market, band, &ctx.solver)?;
        let lifted = lift(&primal.plan, &tree, l.epsilon, &grid)?;

        let mut samplers = Vec::new();
        let mut hist_rows = Vec::new();
        let mut path_rows = Vec::new();
        for sc in &l.samplers {
            if sampler_horizon(sc) != 1.0 {
                return Err(CliError::Config("lift samplers must use horizon 1".into()));
            }
            let sampler = sc.build()?;
            let outcomes = (0..l.paths as u64)
                .into_par_iter()
                .map(|s| verify_lifted_path(&lifted, &sampler.sample(ctx.seed, s), s, &market, &payoff, lipschitz))
                .collect::<Result<Vec<PathOutcome>, _>>()?;
            let report = MonteCarloReport::from_outcomes(&outcomes);
            let label = sc.label();
            for (q, f) in [
                ("margin", (|o: &PathOutcome| o.margin) as fn(&PathOutcome) -> f64),
                ("shortfall", |o| o.shortfall),
                ("i_term", |o| o.i_term),
            ] {
                let vals: Vec<f64> = outcomes.iter().map(f).collect();
                hist_rows.extend(Histogram::new(q, &vals, spec.histogram_bins).rows(&label));
            }
            for o in &outcomes {
                path_rows.push(vec![
                    label.clone(),
                    o.stream.to_string(),
                    status_name(o.status).to_string(),
                    o.crossings.to_string(),
                    o.z.to_string(),
                    o.payoff.to_string(),
                    o.bound.to_string(),
                    o.margin.to_string(),
                    o.i_term.to_string(),
                ]);
            }
            let ok = report.violations == 0 && report.excluded_fraction() < l.max_excluded_fraction;
            samplers.push(LiftSummary {
                sampler: label,
                excluded_fraction: report.excluded_fraction(),
                mean_shortfall: report.mean_shortfall(),
                report,
                ok,
            });
        }
        let ok = samplers.iter().all(|s| s.ok);
        all_ok &= ok;
        let out = LiftOutput {
            epsilon: l.epsilon,
            kappa: market.kappa(),
            band,
            tree_nodes: tree.len(),
            tree_value: primal.value,
            max_excluded_fraction: l.max_excluded_fraction,
            samplers,
            ok,
        };
        run.write_json("lift.json", &out)?;
        run.write_csv("lift_hist.csv", &HISTOGRAM_HEADER, &hist_rows)?;
        run.write_csv(
            "lift_paths.csv",
            &["sampler", "stream", "status", "crossings", "z", "payoff", "bound", "margin", "i_term"],
            &path_rows,
        )?;
        run.task("lift", ok, t0.elapsed().as_secs_f64());
    }
    Ok(all_ok)
}

fn sampler_horizon(s: &SamplerConfig) -> f64 {
    match s {
        SamplerConfig::Gbm { horizon, .. } | SamplerConfig::ExpFbm { horizon, .. } => *horizon,
    }
}

#[derive(Serialize)]
struct Check {
    name: String,
    status: &'static str,
    detail: serde_json::Value,
}

impl Check {
    fn new(name: &str, pass: bool, detail: impl Serialize) -> Self {
        Self {
            name: name.to_string(),
            status: if pass { "PASS" } else { "FAIL" },
            detail: serde_json::to_value(detail).unwrap_or(serde_json::Value::Null),
        }
    }

    fn skip(name: &str, reason: String) -> Self {
        Self { name: name.to_string(), status: "SKIP", detail: serde_json::Value::String(reason) }
    }
}

#[derive(Serialize)]
struct QuadraticDetail {
    option: String,
    ask: f64,
    c_q: f64,
}

#[derive(Serialize)]
struct AssumptionsReport {
    checks: Vec<Check>,
    ok: bool,
}

pub fn check_assumptions(ctx: &Context, run: &mut RunDir) -> Result<bool, CliError> {
    let t0 = Instant::now();
    let cfg = &ctx.config;
    let market = cfg.market()?;
    let payoff = cfg.payoff()?;
    let trials = cfg.assumptions.trials;
    let mut checks = Vec::new();

    let kappa = market.kappa();
    checks.push(Check::new("kappa_range", kappa > 0.0 && kappa < 0.125, kappa));

    let mut payoff = payoff;
    if let Some(l) = cfg.lipschitz {
        payoff = payoff.with_lipschitz(Some(l));
    }
    let sup: LipschitzReport = check_lipschitz_supnorm(&payoff, trials, ctx.seed);
    checks.push(Check::new("payoff_lipschitz_supnorm", sup.pass, &sup));
    let shift = check_lipschitz_timeshift(&payoff, trials, ctx.seed);
    checks.push(Check::new("payoff_lipschitz_timeshift", shift.pass, &shift));

    for (i, opt) in market.statics().options().iter().enumerate() {
        let r = check_lipschitz_supnorm(opt, trials, ctx.seed.wrapping_add(i as u64 + 1));
        checks.push(Check::new(&format!("static_option_{i}_regularity"), r.pass, &r));
    }

    // Bounds and hedges read c_q and ℒ_N off the last option; plain pricing
    // does not need it.
    let needs_quadratic = cfg.bounds.is_some() || cfg.hedge.is_some();
    match market.statics().quadratic() {
        Ok((opt, ask, c_q)) => {
            checks.push(Check::new("quadratic_last_option", true, QuadraticDetail { option: opt.name(), ask, c_q }))
        }
        Err(e) if needs_quadratic => checks.push(Check::new("quadratic_last_option", false, e.to_string())),
        Err(e) => checks.push(Check::skip("quadratic_last_option", format!("not needed without bounds or hedge: {e}"))),
    }

    match &cfg.tree {
        Some(spec) => {
            let tree = build_tree(&spec.build())?;
            let report: NoArbitrageReport = check_no_arbitrage(&tree, &market, &ctx.solver)?;
            checks.push(Check::new("no_arbitrage", report.ok, &report));
        }
        None => checks.push(Check::skip("no_arbitrage", "no tree configured".into())),
    }

    let ok = checks.iter().all(|c| c.status != "FAIL");
    run.write_json("assumptions.json", &AssumptionsReport { checks, ok })?;
    run.task("check_assumptions", ok, t0.elapsed().as_secs_f64());
    Ok(ok)
}
