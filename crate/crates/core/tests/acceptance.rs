//! Acceptance checks. Each prints one PASS/FAIL line; the process exits
//! non-zero if any fails.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use conceptpref::acquisition::rank_queries;
use conceptpref::domain::{cosine_distance, FeedbackState, NormConstraint, PreferenceWeights, Query};
use conceptpref::envs::routing::{optimize_route, N_ROUTING_CONCEPTS};
use conceptpref::envs::{EnvKind, EnvSpec, Environment};
use conceptpref::humansim::{HumanConfig, InstructionTemplate, Rationality, SimulatedHuman, Style};
use conceptpref::inference::{bt_prob_from_values, map_estimate, random_point, sample_posterior, BTConfig, LanguagePrior, MCMCConfig};
use conceptpref::runner::*;
use conceptpref::seed;
use conceptpref::theory::{corollary_gap, empirical_eqsr, qsr_closed_form, validate_grid, GridSpec, Strategy, TheoryParams};
use conceptpref::Error;
use common::{brute_force_route, mean, random_graph, random_weights, se};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn oaqs_qsr(aqsr: f64, y0: f64, y1: f64) -> f64 {
    qsr_closed_form(Strategy::Oaqs, &TheoryParams::new(aqsr, y0, y1, 50, 2000).unwrap()).unwrap()
}

fn reported_qsr() -> Outcome {
    let a = oaqs_qsr(0.64, 0.62, 0.72);
    let b = oaqs_qsr(0.43, 0.62, 0.72);
    outcome((a - 0.77).abs() <= 0.005 && (b - 0.59).abs() <= 0.005, format!("AQSR 0.64 -> {a:.4}, EQSR 0.43 -> {b:.4}"))
}

fn monte_carlo_grid() -> Outcome {
    let r = validate_grid(&GridSpec::default_grid(), 100_000, 2024).unwrap();
    outcome(
        r.passed(),
        format!("{} cells, max z {:.2}, {:.2}% within 3 SE", r.cells.len(), r.max_z, 100.0 * r.within_3se),
    )
}

fn crossovers() -> Outcome {
    let step = 0.01;
    let mut flips_ok = true;
    let mut worst = 0.0f64;
    for &aqsr in &[0.3, 0.64, 0.9] {
        for &y1 in &[0.3, 0.5, 0.72, 0.9] {
            let beats = |y0: f64| oaqs_qsr(aqsr, y0, y1) > aqsr;
            // first y0 on a 0.01 grid where the ordering flips
            let flip = (0..=100).map(|i| i as f64 * step).find(|&y0| beats(y0));
            let boundary = 1.0 - y1;
            match flip {
                Some(y0) => {
                    worst = worst.max(y0 - boundary);
                    flips_ok &= y0 - boundary <= step + 1e-9 && y0 > boundary - 1e-9;
                }
                None => flips_ok = false,
            }
        }
    }
    let p = |y0, y1| TheoryParams::new(0.64, y0, y1, 50, 2000).unwrap();
    let mistral = corollary_gap(&p(0.17, 0.77)).unwrap().oaqs_beats_top_qsr || oaqs_qsr(0.64, 0.17, 0.77) > 0.64;
    let gemini = corollary_gap(&p(0.62, 0.72)).unwrap().oaqs_beats_top_qsr && oaqs_qsr(0.64, 0.62, 0.72) > 0.64;
    outcome(
        flips_ok && !mistral && gemini,
        format!(
            "flip lag <= {worst:.3}; (0.17, 0.77) -> {:.3} vs 0.64; (0.62, 0.72) -> {:.3} vs 0.64",
            oaqs_qsr(0.64, 0.17, 0.77),
            oaqs_qsr(0.64, 0.62, 0.72)
        ),
    )
}

fn bradley_terry() -> Outcome {
    let mut rng = seed::stream(7, "acceptance-bt", 0);
    let mut worst_anti = 0.0f64;
    let mut ok = true;
    for _ in 0..10_000 {
        let (u1, u2) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let beta = rng.random_range(0.0..50.0);
        worst_anti = worst_anti.max((bt_prob_from_values(u1, u2, beta) + bt_prob_from_values(u2, u1, beta) - 1.0).abs());
        ok &= bt_prob_from_values(u1, u2, 0.0) == 0.5;
        // values are utilities: raising the first one never lowers its win probability
        let gap = rng.random_range(0.0..1.0);
        ok &= bt_prob_from_values(u1 + gap, u2, beta) >= bt_prob_from_values(u1, u2, beta);
    }
    outcome(ok && worst_anti <= 1e-12, format!("10^4 trials, max |P(a,b)+P(b,a)-1| = {worst_anti:.1e}"))
}

fn posterior_recovery() -> Outcome {
    let counts = [5, 10, 20, 30];
    let mut at = vec![Vec::new(); counts.len()];
    let bt = BTConfig::default();
    let c = NormConstraint::UnitL2Nonnegative;
    for s in 0..20u64 {
        let pool = common::uniform_pool(200, s);
        let truth = PreferenceWeights::new(random_point(&mut seed::stream(s, "omega-star", 0), N_ROUTING_CONCEPTS, c), c).unwrap();
        let template = InstructionTemplate::new("synthetic", Style::Clear, "synthetic preference", truth.clone(), vec![]).unwrap();
        let cfg = HumanConfig {
            rationality: Rationality::Deterministic,
            clarification_prob: 0.0,
            skip_threshold: f64::MIN_POSITIVE,
            seed: s,
        };
        let mut human = SimulatedHuman::new(template, cfg).unwrap();
        let mut fb = FeedbackState::new("synthetic preference").unwrap();
        let mut post = sample_posterior(&[], &pool, &LanguagePrior::Flat, &bt, &MCMCConfig::default(), None).unwrap();
        let mut rng = seed::stream(s, "recovery-candidates", 0);
        let n = pool.len();
        for it in 1..=30u64 {
            let ids: Vec<_> = pool.trajectories().iter().map(|t| t.id.clone()).collect();
            let cands: Vec<Query> = (0..500)
                .filter_map(|_| {
                    let i = rng.random_range(0..n);
                    let j = (i + rng.random_range(1..n)) % n;
                    Query::new(ids[i].clone(), ids[j].clone()).ok().filter(|q| !fb.was_asked(q))
                })
                .collect();
            let q = rank_queries(&cands, &post, &pool, &bt).unwrap().top().clone();
            let choice = human.answer(&pool, &q).unwrap().choice.expect("deterministic human never skips here");
            fb.add_pairwise(q, choice).unwrap();
            let mcmc = MCMCConfig { seed: seed::derive_seed(s, "recovery-mcmc", it), ..MCMCConfig::default() };
            let init = map_estimate(&post).unwrap().clone();
            post = sample_posterior(fb.pairwise(), &pool, &LanguagePrior::Flat, &bt, &mcmc, Some(&init)).unwrap();
            if let Some(k) = counts.iter().position(|&c| c as u64 == it) {
                at[k].push(cosine_distance(map_estimate(&post).unwrap(), &truth).unwrap());
            }
        }
    }
    let curve: Vec<f64> = at.iter().map(|v| mean(v)).collect();
    let pass = curve[3] < 0.1 && curve.windows(2).all(|w| w[1] <= w[0]);
    outcome(pass, format!("mean cosine distance at 5/10/20/30: {curve:.3?}"))
}

fn prior_efficacy() -> Outcome {
    let mut base = SessionConfig::new(EnvSpec::new(EnvKind::Routing, 0), None, Method::MapleRandom, 5, 0);
    base.oracle = OracleSpec::Mock(MockParams { weight_noise_std: 0.1, ..MockParams::default() });
    let batch = BatchConfig {
        base,
        methods: vec![Method::MapleRandom, Method::Brex],
        instructions: vec!["natural-01".into()],
        seeds: (0..20).collect(),
        feedback_counts: vec![5],
    };
    let out = run_experiment(&batch).unwrap();
    let acc = |m: &str| -> Vec<f64> {
        out.rows.iter().filter(|r| r.method == m && r.metric == "test_accuracy").map(|r| r.value).collect()
    };
    let (maple, brex) = (acc("maple_random"), acc("brex"));
    let combined = (se(&maple).powi(2) + se(&brex).powi(2)).sqrt();
    let diff = mean(&maple) - mean(&brex);
    outcome(
        maple.len() == 20 && brex.len() == 20 && diff >= 3.0 * combined,
        format!("maple {:.4} vs brex {:.4}; diff {diff:.4} = {:.1} combined SE", mean(&maple), mean(&brex), diff / combined),
    )
}

fn oaqs_efficacy() -> Outcome {
    let env = Arc::new(Environment::generate(&EnvSpec::new(EnvKind::Routing, 0)).unwrap());
    let template = conceptpref::humansim::find_template(EnvKind::Routing, "natural-01").unwrap();
    let (mut wins, mut oaqs_answered, mut oaqs_asked) = (0, 0, 0);
    let mut top_log = Vec::new();
    for s in 0..20u64 {
        let mut cfg = SessionConfig::new(EnvSpec::new(EnvKind::Routing, 0), None, Method::MapleTop, 30, s);
        cfg.oracle = OracleSpec::Mock(MockParams { y0: 0.62, y1: 0.72, ..MockParams::default() });
        cfg.human.skip = SkipRule::TargetAqsr(0.6);
        let top = run_session_with(&cfg, Arc::clone(&env), template.clone()).unwrap();
        cfg.method = Method::MapleOaqs;
        let oaqs = run_session_with(&cfg, Arc::clone(&env), template.clone()).unwrap();
        wins += usize::from(oaqs.n_answered > top.n_answered);
        oaqs_answered += oaqs.n_answered;
        oaqs_asked += oaqs.records.len();
        top_log.extend(top.eqsr_log);
    }
    let eqsr = empirical_eqsr(&top_log).unwrap();
    let predicted = oaqs_qsr(eqsr, 0.62, 0.72);
    let qsr = oaqs_answered as f64 / oaqs_asked as f64;
    outcome(
        wins >= 16 && (qsr - predicted).abs() <= 0.05,
        format!("oaqs > top in {wins}/20 seeds; top EQSR {eqsr:.3}, predicted QSR {predicted:.3}, oaqs QSR {qsr:.3}"),
    )
}

fn shortest_paths() -> Outcome {
    let (mut checked, mut mismatches) = (0, 0);
    for s in 0..100u64 {
        let n = 2 + (s as usize % 9);
        let g = random_graph(n, 1000 + s);
        let w = random_weights(N_ROUTING_CONCEPTS, 1000 + s);
        for a in 0..n as u64 {
            for b in 0..n as u64 {
                checked += 1;
                let same = match (optimize_route(&g, a, b, &w), brute_force_route(&g, a, b, w.as_slice())) {
                    (Ok((route, cost)), Some((edges, best))) => route.edges == edges && cost == best,
                    (Err(Error::NoRoute { .. }), None) => true,
                    _ => false,
                };
                mismatches += usize::from(!same);
            }
        }
    }
    outcome(mismatches == 0, format!("100 graphs, {checked} pairs, {mismatches} mismatches"))
}

fn determinism() -> Outcome {
    let env = Arc::new(Environment::generate(&EnvSpec::new(EnvKind::HomeGrid, 3)).unwrap());
    let session = |m: Method| {
        let mut cfg = SessionConfig::new(EnvSpec::new(EnvKind::HomeGrid, 3), Some("clear-02".into()), m, 4, 9);
        cfg.oracle = OracleSpec::Mock(MockParams { y0: 0.62, y1: 0.72, ..MockParams::default() });
        let t = conceptpref::humansim::find_template(EnvKind::HomeGrid, "clear-02").unwrap();
        serde_json::to_string(&run_session_with(&cfg, Arc::clone(&env), t).unwrap()).unwrap()
    };
    let batch = || {
        let b = BatchConfig {
            base: SessionConfig::new(EnvSpec::new(EnvKind::Routing, 1), None, Method::Brex, 3, 0),
            methods: vec![Method::MapleOaqs, Method::Brex],
            instructions: vec!["clear-01".into(), "natural-02".into()],
            seeds: vec![4, 5],
            feedback_counts: vec![0, 3],
        };
        serde_json::to_string(&run_experiment(&b).unwrap()).unwrap()
    };
    let sessions_equal = Method::ALL.iter().all(|&m| session(m) == session(m));
    let batches_equal = batch() == batch();
    outcome(sessions_equal && batches_equal, format!("sessions identical: {sessions_equal}, batch identical: {batches_equal}"))
}

fn main() {
    let checks: [(&str, Duration, fn() -> Outcome); 9] = [
        ("closed-form QSR at reported operating points", Duration::from_secs(1), reported_qsr),
        ("Monte Carlo agrees with closed forms", Duration::from_secs(300), monte_carlo_grid),
        ("OAQS-vs-top crossover at Y0 + Y1 = 1", Duration::from_secs(1), crossovers),
        ("Bradley-Terry properties", Duration::from_secs(10), bradley_terry),
        ("posterior recovery, flat prior", Duration::from_secs(300), posterior_recovery),
        ("language prior beats flat prior at 5 feedbacks", Duration::from_secs(300), prior_efficacy),
        ("OAQS collects more answers than top", Duration::from_secs(300), oaqs_efficacy),
        ("route optimizer matches enumeration", Duration::from_secs(30), shortest_paths),
        ("byte-identical reruns", Duration::from_secs(300), determinism),
    ];
    let mut failed = 0;
    for (name, budget, check) in checks {
        let t0 = Instant::now();
        let o = check();
        let took = t0.elapsed();
        let pass = o.pass && took <= budget;
        failed += usize::from(!pass);
        let slow = if took > budget { format!(" [over {budget:?} budget]") } else { String::new() };
        println!("{} {name}: {} ({:.1?}){slow}", if pass { "PASS" } else { "FAIL" }, o.detail, took);
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
