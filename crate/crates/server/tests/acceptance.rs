//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p inoculate-server --test acceptance`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use inoculate_core::assessment::{delta_unchecked, grade, start_assessment, Phase, Topic, TopicTally};
use inoculate_core::engine::{replay, PlayerEvent};
use inoculate_core::pack::{default_pack, parse_pack, serialize_pack, validate_pack, Act, SceneKind};
use inoculate_core::sim::{
    brute_force_expectation, generate_graph, run_cascade, run_monte_carlo, run_profit, EngagementWeights,
    ProfitParams,
};
use serde_json::json;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(limit: Duration, started: Instant) -> Check {
    let elapsed = started.elapsed();
    ensure!(elapsed < limit, "took {elapsed:?}, limit {limit:?}");
    Ok(())
}

fn storyboard_playthrough() -> Check {
    let pack = default_pack();
    let log = common::storyboard();
    let started = Instant::now();
    let s = replay(&pack, log.seed, &log.events).map_err(|e| e.to_string())?;
    within(Duration::from_secs(1), started)?;
    let kinds: Vec<_> = s.completed_scenes.iter().map(|id| pack.scene(id).unwrap().kind).collect();
    for k in [SceneKind::TagSort, SceneKind::HeadlinePick] {
        ensure!(kinds.contains(&k), "never completed a {k:?} scene");
    }
    ensure!(s.flags.contains("bought_voter_data"), "voter data never bought");
    ensure!(s.flags.contains("traditional_failed"), "no failed traditional branch");
    ensure!(pack.scene(&s.scene_id).unwrap().kind == SceneKind::Terminal, "ended at {}", s.scene_id);
    ensure!(s.scene_id == "call_to_action", "ended at {}", s.scene_id);
    ensure!(s.flags.contains("opponent_discredited"), "flag opponent_discredited missing");
    ensure!(s.max_support == 50, "max_support {}", s.max_support);
    ensure!(s.apathy_multiplier == 0.25, "apathy {}", s.apathy_multiplier);
    Ok(())
}

fn content_fidelity() -> Check {
    let pack = default_pack();
    let labels = |voter: &str| -> Vec<String> {
        pack.tags.iter().filter(|t| t.correct_voter == voter).map(|t| t.label.to_lowercase()).collect()
    };
    let (bob, mandy) = (labels("bob"), labels("mandy"));
    for n in ["war veteran", "custody fight", "plant job", "climate change", "divorced"] {
        ensure!(bob.iter().any(|l| l.contains(n)), "bob lacks `{n}`");
    }
    for n in ["feminist literature", "sustainable agriculture", "plant-based cuisine", "local artists", "concerts and exhibitions"] {
        ensure!(mandy.iter().any(|l| l.contains(n)), "mandy lacks `{n}`");
    }
    let mut lecture_text = String::new();
    for s in pack.scenes.iter().filter(|s| s.kind == SceneKind::Lecture) {
        lecture_text.push_str(&s.body);
        for id in &s.lecture_ids {
            lecture_text.push_str(&pack.lecture(id).unwrap().body);
        }
    }
    let lecture_text = lecture_text.to_lowercase();
    for t in ["impersonation", "emotional language", "polarisation", "conspiracy theories", "discrediting", "trolling"] {
        ensure!(lecture_text.contains(t), "lectures omit `{t}`");
    }
    let cost = |id: &str| pack.choice(id).map(|(_, c)| c.money_cost);
    let (nuclear, takedown) = (cost("launch_ai_counter_campaign"), cost("pay_platform_takedown"));
    ensure!(matches!((nuclear, takedown), (Some(a), Some(b)) if a < b), "costs {nuclear:?} vs {takedown:?}");
    ensure!(
        pack.scenes.iter().any(|s| s.act == Act::Two
            && s.on_enter.max_support_multiplier.get() < 1.0
            && s.on_enter.apathy_multiplier.get() < 1.0),
        "no act two apathy effect"
    );
    ensure!(
        pack.scenes.iter().any(|s| s.kind == SceneKind::Terminal
            && s.body.contains("Ultimately, by staying informed and working together")),
        "call to action missing"
    );
    Ok(())
}

fn determinism_and_replay() -> Check {
    let started = Instant::now();
    let default = default_pack();
    for i in 0..100u64 {
        let pack = if i % 4 == 0 { default.clone() } else { common::random_pack(i) };
        let state = common::random_legal_session(&pack, 1_000 + i, 60);
        let json = serde_json::to_string(&state.event_log).unwrap();
        let events: Vec<PlayerEvent> = serde_json::from_str(&json).unwrap();
        let again = replay(&pack, state.rng_seed, &events).map_err(|e| format!("session {i}: {e}"))?;
        ensure!(again == state, "session {i} diverged on replay");
    }
    within(Duration::from_secs(10), started)
}

fn resource_invariants() -> Check {
    let started = Instant::now();
    let default = default_pack();
    let mut attempted = 0;
    for i in 0..40u64 {
        let pack = if i % 8 == 0 { default.clone() } else { common::random_pack(500 + i) };
        let stats = common::fuzz_pack(&pack, i, 300).map_err(|e| format!("pack {i}: {e}"))?;
        attempted += stats.attempted;
    }
    ensure!(attempted >= 10_000, "only {attempted} actions");
    within(Duration::from_secs(30), started)
}

fn oracle_equivalence() -> Check {
    let started = Instant::now();
    let runs = 10_000;
    for (name, graph) in common::oracle_family() {
        for base in [0.2, 0.5, 0.8] {
            for moderation in [0.0, 0.3, 0.6] {
                let params = common::uniform_params(base, moderation, 5);
                let exact = brute_force_expectation(&graph, &params).map_err(|e| e.to_string())?;
                let mc = run_monte_carlo(&graph, &params, runs, 2024);
                let tol = (3.0 * mc.total_shares.std_error(runs)).max(1e-9);
                let diff = (mc.total_shares.mean - exact.total_shares()).abs();
                ensure!(diff <= tol, "{name} base={base} mod={moderation}: |diff| {diff} > {tol}");
            }
        }
        let reach = |b: f64, m: f64| {
            brute_force_expectation(&graph, &common::uniform_params(b, m, 5)).unwrap().final_informed()
        };
        for m in [0.0, 0.3, 0.6] {
            let r: Vec<f64> = [0.0, 0.2, 0.5, 0.8, 1.0].iter().map(|&b| reach(b, m)).collect();
            ensure!(r.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{name}: not monotone in base_share {r:?}");
        }
        for b in [0.2, 0.5, 0.8] {
            let r: Vec<f64> = [0.0, 0.3, 0.6, 1.0].iter().map(|&m| reach(b, m)).collect();
            ensure!(r.windows(2).all(|w| w[0] + 1e-12 >= w[1]), "{name}: not monotone in moderation {r:?}");
        }
    }
    within(Duration::from_secs(60), started)
}

fn trivial_cascades() -> Check {
    for (name, graph) in common::oracle_family() {
        let silent = run_cascade(&graph, &common::uniform_params(0.0, 0.0, 6), 1);
        ensure!(silent.total_shares() == 1, "{name}: {} shares with zero probabilities", silent.total_shares());
        ensure!(
            silent.final_informed() == 1 + graph.out_neighbors(0).len(),
            "{name}: zero-share reach {}",
            silent.final_informed()
        );
        let moderated = run_cascade(&graph, &common::uniform_params(1.0, 1.0, 6), 1);
        ensure!(moderated.final_informed() == 1, "{name}: moderation 1 reached {}", moderated.final_informed());

        // Breadth-first distance from the seed.
        let mut dist = vec![usize::MAX; graph.len()];
        dist[0] = 0;
        let mut queue = std::collections::VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &v in graph.out_neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let radius = *dist.iter().max().unwrap();
        ensure!(radius != usize::MAX, "{name} not connected from the seed");
        let viral = run_cascade(&graph, &common::uniform_params(1.0, 0.0, radius as u32 + 2), 1);
        ensure!(
            viral.per_tick[radius].cumulative_informed == graph.len(),
            "{name}: {} informed at tick {radius}",
            viral.per_tick[radius].cumulative_informed
        );
    }
    Ok(())
}

fn profit_model() -> Check {
    let g = generate_graph(100, 2, 10, 3).unwrap();
    let params = common::uniform_params(0.4, 0.2, 15);
    let p = |ad_rate| ProfitParams {
        ad_rate,
        moderation_cost_rate: 0.05,
        engagement_weights: EngagementWeights::default(),
    };
    let zero = run_profit(&g, &params, &p(0.0), 6);
    ensure!(zero.per_tick.iter().all(|t| t.revenue == 0.0), "revenue with ad_rate 0");
    let one = run_profit(&g, &params, &p(0.02), 6);
    let two = run_profit(&g, &params, &p(0.04), 6);
    for (a, b) in one.per_tick.iter().zip(&two.per_tick) {
        ensure!(b.revenue == 2.0 * a.revenue, "tick {}: {} vs 2 x {}", a.tick, b.revenue, a.revenue);
    }
    let star = common::oracle_family().into_iter().find(|(n, _)| *n == "star").unwrap().1;
    let mut botted = star.clone();
    botted.set_bot(1, true);
    let w = EngagementWeights::default();
    for base in [0.0, 0.3, 0.7] {
        let mut params = common::uniform_params(base, 0.0, 5);
        params.bot_share = 1.0;
        let none = brute_force_expectation(&star, &params).unwrap().total_engagement(w);
        let one = brute_force_expectation(&botted, &params).unwrap().total_engagement(w);
        ensure!(one >= none, "base {base}: one bot {one} < no bots {none}");
    }
    Ok(())
}

fn parser_and_validator() -> Check {
    let pack = default_pack();
    let text = serialize_pack(&pack);
    let again = parse_pack(text.as_bytes()).map_err(|e| e.to_string())?;
    ensure!(again == pack && serialize_pack(&again) == text, "default pack round trip unstable");
    for seed in 0..50 {
        let p = common::random_pack(seed);
        let back = parse_pack(serialize_pack(&p).as_bytes()).map_err(|e| e.to_string())?;
        ensure!(back == p, "random pack {seed} round trip unstable");
    }
    let cases = common::malformed_cases();
    ensure!(cases.len() == 10, "{} malformed fixtures", cases.len());
    for (file, want) in &cases {
        let got = common::malformed_issues(file);
        ensure!(
            got.iter().any(|(c, p)| c == &want.code && p == &want.path),
            "{file}: wanted {} at {}, got {got:?}",
            want.code,
            want.path
        );
    }
    let report = validate_pack(&pack);
    ensure!(report.errors.is_empty() && report.warnings.is_empty(), "default pack: {report:?}");
    Ok(())
}

fn assessment() -> Check {
    #[derive(serde::Deserialize)]
    struct Sheet {
        answers: BTreeMap<String, usize>,
        expected_score: u32,
        expected_per_topic: BTreeMap<Topic, TopicTally>,
    }
    let pack = default_pack();
    let text = std::fs::read_to_string(common::fixtures_dir().join("graded_sheet.json")).unwrap();
    let sheet: Sheet = serde_json::from_str(&text).unwrap();
    let r = grade(&pack, Phase::Pre, &sheet.answers).map_err(|e| e.to_string())?;
    ensure!(r.score == sheet.expected_score, "score {} != {}", r.score, sheet.expected_score);
    ensure!(r.per_topic == sheet.expected_per_topic, "per-topic tallies differ");
    let d = delta_unchecked(&r, &r);
    ensure!(d.overall_delta == 0 && d.per_topic_delta.values().all(|&v| v == 0), "delta(r, r) != 0");
    for seed in 0..20 {
        let a = start_assessment(&pack, Phase::Pre, seed).unwrap();
        ensure!(a == start_assessment(&pack, Phase::Pre, seed).unwrap(), "shuffle {seed} not deterministic");
    }
    Ok(())
}

fn service() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let server = support::Server::spawn(dir.path());
    let (status, env) = server.request("POST", "/api/sessions", Some(&json!({"seed": 42})));
    ensure!(status == 201, "create returned {status}");
    let id = env["session_id"].as_str().unwrap().to_owned();
    for (i, body) in [
        json!({"kind": "choice", "payload": {"choice_id": "start_campaign"}}),
        json!({"kind": "tag_placement", "payload": {"tag_id": "tag_divorced", "voter_id": "bob"}}),
    ]
    .into_iter()
    .enumerate()
    {
        let mut body = body;
        body["expected_ordinal"] = json!(i);
        let (status, resp) = server.request("POST", &format!("/api/sessions/{id}/actions"), Some(&body));
        ensure!(status == 200, "action {i}: {status} {resp}");
    }
    let (_, before) = server.request("GET", &format!("/api/sessions/{id}"), None);
    server.kill();
    let server = support::Server::spawn(dir.path());
    let (status, after) = server.request("GET", &format!("/api/sessions/{id}"), None);
    ensure!(status == 200 && after == before, "envelope changed across a kill and restart");

    // Two clients racing on the same ordinal.
    let body = json!({"expected_ordinal": 2, "kind": "tag_placement", "payload": {"tag_id": "tag_war_veteran", "voter_id": "bob"}});
    let uri = format!("/api/sessions/{id}/actions");
    let (a, b) = std::thread::scope(|s| {
        let ha = s.spawn(|| server.request("POST", &uri, Some(&body)).0);
        let hb = s.spawn(|| server.request("POST", &uri, Some(&body)).0);
        (ha.join().unwrap(), hb.join().unwrap())
    });
    let mut statuses = [a, b];
    statuses.sort();
    ensure!(statuses == [200, 409], "racing actions returned {statuses:?}");
    Ok(())
}

fn main() {
    let checks: [Criterion; 10] = [
        ("storyboard playthrough", storyboard_playthrough),
        ("content fidelity", content_fidelity),
        ("determinism and replay", determinism_and_replay),
        ("resource invariants", resource_invariants),
        ("oracle equivalence", oracle_equivalence),
        ("trivial cascade cases", trivial_cascades),
        ("profit model", profit_model),
        ("parser and validator", parser_and_validator),
        ("assessment", assessment),
        ("service recovery and concurrency", service),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in checks {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS  {name} ({secs:.2}s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.2}s): {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
