use qifs_core::holevo::{born_joint, holevo_information, induced_ensemble, mutual_information, povm_from_weights};
use qifs_core::markov::{embed_stochastic, markov_power_identity, stationary_vector};
use qifs_core::matcore::{von_neumann_entropy, DensityMatrix};
use qifs_core::random::{random_normalized_family, stream_rng};
use qifs_core::sim::{estimate_barycenter, estimate_entropy_integral, multichain};
use qifs_core::solvers::{solve_lambda_fixed_point, solve_ruelle_eigen, EigenResult};
use qifs_core::thermo::{
    classic_inequality_check, classic_maximizer, markov_entropy, maximizing_weights, pressure_check_coordinate_form,
    pressure_check_trace_form, qifs_entropy, renormalize_potential, PressureReport,
};
use qifs_core::{EmbeddingKind, KrausFamily, QifsError, QifsModel, SimConfig, SolveConfig};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Resolved, ScenarioConfig};
use crate::format::{complex_rows, num, nums, real_rows};
use crate::{CliError, Report, Task};

pub(crate) fn dispatch(
    task: Task,
    cfg: &ScenarioConfig,
    r: &Resolved,
    jobs: Option<usize>,
    report: &mut Report,
) -> Result<(), CliError> {
    match task {
        Task::Validate => validate(r, report),
        Task::Fixpoint => fixpoint(cfg, r, report),
        Task::Eigen => eigen(cfg, r, report).map(|_| ()),
        Task::Entropy => entropy(cfg, r, report),
        Task::Pressure => pressure(cfg, r, report),
        Task::Classic => classic(r, report),
        Task::Holevo => holevo(cfg, r, report),
        Task::MarkovCheck => markov_check(cfg, r, report),
        Task::Sample => sample(cfg, r, report),
        Task::Sweep => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| CliError::other(format!("worker pool: {e}")))?;
            pool.install(|| sweep(cfg, r, report))
        }
    }
}

fn solve_config(cfg: &ScenarioConfig) -> SolveConfig {
    let d = SolveConfig::default();
    SolveConfig {
        tol: cfg.solver.tol.unwrap_or(d.tol),
        max_iter: cfg.solver.max_iter.unwrap_or(d.max_iter),
        regularization_n0: cfg.solver.regularization_n0.unwrap_or(d.regularization_n0),
        seed_state: None,
    }
}

fn seed(cfg: &ScenarioConfig) -> u64 {
    cfg.seed.expect("randomized tasks check the seed up front")
}

fn validate(r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let v = r.v()?;
    let res = &mut report.results;
    res.insert("dim".into(), json!(v.dim()));
    res.insert("arity".into(), json!(v.arity()));
    res.insert("v_normalization_deviation".into(), num(v.normalization_deviation()));
    if let Some(m) = &r.model {
        res.insert("w_normalization_deviation".into(), num(m.w().normalization_deviation()));
        res.insert("homogeneous".into(), json!(m.v() == m.w()));
    } else {
        res.insert("w_normalization_deviation".into(), Value::Null);
    }
    res.insert("potential".into(), json!(r.h.is_some()));
    if let Some(k) = r.kind {
        res.insert("embedding".into(), json!(format!("{k:?}")));
    }
    Ok(())
}

fn fixed_point(cfg: &ScenarioConfig, m: &QifsModel, report: &mut Report) -> Result<DensityMatrix, CliError> {
    let fp = solve_lambda_fixed_point(m, &solve_config(cfg))?;
    report.residuals.insert("fixed_point".into(), num(fp.residual));
    report.iterations.insert("fixed_point".into(), json!(fp.iterations));
    Ok(fp.rho)
}

fn fixpoint(cfg: &ScenarioConfig, r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let rho = fixed_point(cfg, r.model()?, report)?;
    report.results.insert("rho_diag".into(), nums(&rho.diag()));
    report.results.insert("rho".into(), complex_rows(rho.matrix()));
    report.results.insert("von_neumann_entropy".into(), num(von_neumann_entropy(&rho).value()));
    Ok(())
}

fn eigen_pair(cfg: &ScenarioConfig, h: &KrausFamily, v: &KrausFamily, report: &mut Report) -> Result<EigenResult, CliError> {
    let e = solve_ruelle_eigen(h, v, &solve_config(cfg))?;
    report.residuals.insert("eigen".into(), num(e.residual));
    report.iterations.insert("eigen".into(), json!(e.iterations));
    Ok(e)
}

fn eigen(cfg: &ScenarioConfig, r: &Resolved, report: &mut Report) -> Result<EigenResult, CliError> {
    let e = eigen_pair(cfg, r.h()?, r.v()?, report)?;
    let res = &mut report.results;
    res.insert("beta".into(), num(e.beta));
    res.insert("log_beta".into(), num(e.beta.ln()));
    res.insert("rho_beta_diag".into(), nums(&e.rho_beta.diag()));
    res.insert("rho_beta".into(), complex_rows(e.rho_beta.matrix()));
    res.insert("regularization".into(), e.regularization.map(|n| json!(n)).unwrap_or(Value::Null));
    if let (Some(EmbeddingKind::PerronPotential), Some(a)) = (r.kind, &r.a) {
        let d = qifs_core::nalgebra::DVector::from_vec(e.rho_beta.diag());
        report.residuals.insert("perron".into(), num((a * &d - &d * e.beta).norm()));
    }
    Ok(e)
}

fn entropy(cfg: &ScenarioConfig, r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let m = r.model()?;
    let rho = fixed_point(cfg, m, report)?;
    let h = qifs_entropy(m, &rho)?;
    let res = &mut report.results;
    res.insert("entropy".into(), num(h.value()));
    res.insert("entropy_bits".into(), num(h.bits()));
    res.insert("log_arity".into(), num((m.arity() as f64).ln()));
    res.insert("rho_w_diag".into(), nums(&rho.diag()));
    if let (Some(kind), Some(p)) = (r.kind, &r.p) {
        let g = kind.governing(p, r.q.as_ref());
        let oracle = markov_entropy(g)?.value();
        res.insert("markov_entropy".into(), num(oracle));
        report.residuals.insert("markov_entropy".into(), num((h.value() - oracle).abs()));
    }
    Ok(())
}

fn report_pressure(res: &mut Map<String, Value>, prefix: &str, p: &PressureReport) {
    res.insert(format!("{prefix}entropy_term"), num(p.entropy_term));
    res.insert(format!("{prefix}potential_term"), num(p.potential_term));
    res.insert(format!("{prefix}lhs"), num(p.lhs));
    res.insert(format!("{prefix}log_beta"), num(p.log_beta));
    res.insert(format!("{prefix}gap"), num(p.gap));
    res.insert(format!("{prefix}equality_residual"), num(p.equality_residual));
}

fn pressure(cfg: &ScenarioConfig, r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let spec = cfg.pressure.clone().unwrap_or_default();
    let v = r.v()?;
    let mut h = r.h()?.clone();
    if let Some(alpha) = spec.renormalize {
        h = renormalize_potential(&h, alpha)?;
    }
    let eig = eigen_pair(cfg, &h, v, report)?;
    let model = if spec.maximize {
        let w = maximizing_weights(v, &h, &eig)?;
        report.results.insert(
            "weights".into(),
            Value::Array(w.ops().iter().map(|op| num(op[(0, 0)].re)).collect()),
        );
        report.results.insert("weights_normalization_deviation".into(), num(w.normalization_deviation()));
        QifsModel::new(v.clone(), w)?
    } else {
        r.model()?.clone()
    };
    let rho = fixed_point(cfg, &model, report)?;
    let trace = pressure_check_trace_form(&model, &h, &eig, &rho)?;
    report.results.insert("beta".into(), num(eig.beta));
    report_pressure(&mut report.results, "", &trace);
    if let Some([l, m]) = spec.coordinate {
        if l == 0 || m == 0 || l > v.dim() || m > v.dim() {
            return Err(CliError::validation(format!("coordinate ({l}, {m}) outside 1..={}", v.dim())));
        }
        match pressure_check_coordinate_form(&model, &h, &eig, &rho, l - 1, m - 1) {
            Ok(c) => report_pressure(&mut report.results, "coordinate_", &c),
            Err(e @ QifsError::CoordinateDegenerate { .. }) => {
                report.results.insert("coordinate_status".into(), json!(e.to_string()));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn classic(r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let a = r.a.as_ref().ok_or_else(|| CliError::validation("classic needs a potential matrix a"))?;
    let q = r.q.as_ref().ok_or_else(|| CliError::validation("classic needs a stochastic matrix q"))?;
    let c = classic_inequality_check(a, q)?;
    report_pressure(&mut report.results, "", &c);
    let best = classic_maximizer(a)?;
    let at_best = classic_inequality_check(a, &best)?;
    report.results.insert("maximizer".into(), real_rows(best.matrix()));
    report.results.insert("maximizer_gap".into(), num(at_best.gap));
    Ok(())
}

fn holevo(cfg: &ScenarioConfig, r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let m = r.model()?;
    let rho = fixed_point(cfg, m, report)?;
    let e = induced_ensemble(m, &rho)?;
    let xi = holevo_information(&e);
    let h = qifs_entropy(m, &rho)?.value();
    // The weights' own POVM, read out on the branch images of rho_W.
    let probes = (0..m.arity())
        .map(|j| m.branch_map(j, &rho).unwrap_or_else(|_| rho.clone()))
        .collect::<Vec<_>>();
    let povm = povm_from_weights(m.w())?.lift_to_labels(&probes)?;
    let info = mutual_information(&born_joint(&e, &povm)?)?.value();
    let res = &mut report.results;
    res.insert("holevo_information".into(), num(xi));
    res.insert("average_state_entropy".into(), num(von_neumann_entropy(&e.average()).value()));
    res.insert("average_entropy".into(), num(e.average_entropy()));
    res.insert("entropy".into(), num(h));
    res.insert("mutual_information".into(), num(info));
    res.insert("ensemble_probs".into(), nums(e.probs()));
    report.residuals.insert("entropy_identity".into(), num((e.average_entropy() - h).abs()));
    Ok(())
}

fn markov_check(cfg: &ScenarioConfig, r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let p = r.p.as_ref().ok_or_else(|| CliError::validation("markov-check needs a stochastic embedding (p or q)"))?;
    let q = r.q.as_ref().unwrap_or(p);
    let mut worst: f64 = 0.0;
    let mut worst_stationary: f64 = 0.0;
    for kind in [EmbeddingKind::Hom4, EmbeddingKind::NonHom4, EmbeddingKind::Hom2, EmbeddingKind::NonHom2] {
        let m = embed_stochastic(p, Some(q), kind)?;
        let fp = solve_lambda_fixed_point(&m, &solve_config(cfg))?;
        report.iterations.insert(format!("{kind:?}").to_lowercase(), json!(fp.iterations));
        let h = qifs_entropy(&m, &fp.rho)?.value();
        let g = kind.governing(p, Some(q));
        let oracle = markov_entropy(g)?.value();
        report.results.insert(format!("{}_entropy", format!("{kind:?}").to_lowercase()), num(h));
        worst = worst.max((h - oracle).abs());
        if kind.arity() == 4 {
            let pi = stationary_vector(g)?;
            for (x, y) in fp.rho.diag().iter().zip(&pi) {
                worst_stationary = worst_stationary.max((x - y).abs());
            }
        }
    }
    report.results.insert("markov_entropy_p".into(), num(markov_entropy(p)?.value()));
    report.results.insert("markov_entropy_q".into(), num(markov_entropy(q)?.value()));
    report.residuals.insert("entropy".into(), num(worst));
    report.residuals.insert("stationary".into(), num(worst_stationary));
    let mut power: f64 = 0.0;
    for n in 1..=6 {
        power = power.max(markov_power_identity(p, n, 10, seed(cfg))?.deviation);
    }
    let limit = markov_power_identity(p, 50, 10, seed(cfg))?.limit_deviation;
    report.residuals.insert("power_identity".into(), num(power));
    report.residuals.insert("limit_n50".into(), num(limit));
    Ok(())
}

fn sim_config(cfg: &ScenarioConfig) -> SimConfig {
    let d = SimConfig::new(seed(cfg));
    let s = cfg.sim.clone().unwrap_or_default();
    SimConfig {
        burn_in: s.burn_in.unwrap_or(d.burn_in),
        samples: s.samples.unwrap_or(d.samples),
        batches: s.batches.unwrap_or(d.batches),
        ..d
    }
}

fn sample(cfg: &ScenarioConfig, r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let m = r.model()?;
    let sc = sim_config(cfg);
    let b = estimate_barycenter(m, &sc)?;
    let h = estimate_entropy_integral(m, &sc)?;
    let res = &mut report.results;
    res.insert("barycenter_diag".into(), nums(&b.rho.diag()));
    res.insert("barycenter".into(), complex_rows(b.rho.matrix()));
    res.insert("barycenter_max_stderr".into(), num(b.max_stderr()));
    res.insert("entropy_integral".into(), num(h.mean));
    res.insert("entropy_integral_stderr".into(), num(h.stderr));
    report.iterations.insert("samples".into(), json!(sc.samples));
    report.iterations.insert("burn_in".into(), json!(sc.burn_in));
    if let Ok(fp) = solve_lambda_fixed_point(m, &solve_config(cfg)) {
        report.results.insert("fixed_point_diag".into(), nums(&fp.rho.diag()));
        report.residuals.insert("barycenter_z".into(), num(b.z_score(&fp.rho)));
        if let Ok(exact) = qifs_entropy(m, &fp.rho) {
            report.results.insert("entropy".into(), num(exact.value()));
        }
    }
    if let Some(chains) = cfg.sim.as_ref().and_then(|s| s.chains).filter(|c| *c > 0) {
        let mc = multichain(m, &[], chains, &sc)?;
        let means: Vec<f64> = mc.chains.iter().map(|c| c.entropy.mean).collect();
        report.results.insert("chain_entropy".into(), nums(&means));
        report.results.insert("chain_disagreement".into(), json!(mc.disagreement));
    }
    Ok(())
}

fn sweep(cfg: &ScenarioConfig, r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let v = r.v()?;
    let h = r.h()?;
    let samples = cfg.sweep.as_ref().and_then(|s| s.samples).unwrap_or(100);
    if samples == 0 {
        return Err(CliError::validation("sweep.samples must be at least 1"));
    }
    let eig = eigen_pair(cfg, h, v, report)?;
    let scfg = solve_config(cfg);
    let s = seed(cfg);
    let rows: Vec<Result<Map<String, Value>, CliError>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let w = random_normalized_family(&mut stream_rng(s, i as u64), v.dim(), v.arity());
            let m = QifsModel::new(v.clone(), w)?;
            let fp = solve_lambda_fixed_point(&m, &scfg)?;
            let p = pressure_check_trace_form(&m, h, &eig, &fp.rho)?;
            let mut row = Map::new();
            row.insert("sample".into(), json!(i));
            row.insert("stream".into(), json!(i));
            row.insert("entropy".into(), num(p.entropy_term));
            row.insert("lhs".into(), num(p.lhs));
            row.insert("gap".into(), num(p.gap));
            row.insert("equality_residual".into(), num(p.equality_residual));
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r["gap"].as_f64().unwrap_or(f64::NAN)).collect();
    report.results.insert("beta".into(), num(eig.beta));
    report.results.insert("samples".into(), json!(samples));
    report.results.insert("min_gap".into(), num(gaps.iter().copied().fold(f64::INFINITY, f64::min)));
    report.results.insert("max_gap".into(), num(gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
    report.rows = rows;
    Ok(())
}
