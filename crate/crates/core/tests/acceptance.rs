//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use common::*;
use cosmos_core::context::{window_calls, window_events, TimeInstant, TimeWindow};
use cosmos_core::dtree::{
    choose_split, entropy, gain_ratio, train, Attribute, AttributeSchema, Dataset, Instance, TrainParams, Value,
};
use cosmos_core::harness::fixtures::{daily_routine, routine_user};
use cosmos_core::harness::{run_scenario, SimOutcome};
use cosmos_core::protocol::{
    build_context_xml, build_settings_xml, decode_sms, encode_sms, parse_context_xml, parse_settings_xml,
    SettingsDocument, SMS_MAX_LEN,
};
use cosmos_core::server::ServerParams;
use cosmos_core::settings::{CriticalServices, Setting, SettingsProfile, Switch};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn evaluate(table: &str, file: &str) -> (Vec<(String, f64)>, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_cosmos"))
        .args(["evaluate", table, data(file).to_str().unwrap()])
        .output()
        .expect("run cosmos evaluate");
    let elapsed = start.elapsed();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .skip(1)
        .filter_map(|l| {
            let mut f = l.split(',');
            let (_, k, v) = (f.next()?, f.next()?, f.next()?);
            Some((k.to_string(), v.parse().ok()?))
        })
        .collect();
    (metrics, elapsed)
}

fn get(metrics: &[(String, f64)], key: &str) -> f64 {
    metrics.iter().find(|(k, _)| k == key).map_or(f64::NAN, |(_, v)| *v)
}

fn table2() -> Outcome {
    let (m, t) = evaluate("--table2", "table2.csv");
    let (crs, prs, cis, cum) = (
        get(&m, "mean_crs"),
        get(&m, "mean_prs"),
        get(&m, "mean_cis"),
        get(&m, "cumulative_relevant"),
    );
    let pass = (crs - 79.97).abs() <= 0.01
        && (prs - 10.98).abs() <= 0.01
        && (cis - 9.05).abs() <= 0.01
        && (cum - 90.95).abs() <= 0.05
        && t < Duration::from_secs(1);
    check(
        pass,
        format!(
            "means {crs:.4}/{prs:.4}/{cis:.4}, cumulative {cum:.4}, {:.0} ms",
            t.as_secs_f64() * 1e3
        ),
    )
}

fn table1() -> Outcome {
    let (m, t) = evaluate("--table1", "table1.csv");
    let (normal, cosmos) = (get(&m, "mean_normal_hours"), get(&m, "mean_cosmos_hours"));
    let pass = (normal - 17.84).abs() <= 0.01 && (cosmos - 19.31).abs() <= 0.01 && t < Duration::from_secs(1);
    check(
        pass,
        format!("means {normal:.4}/{cosmos:.4}, {:.0} ms", t.as_secs_f64() * 1e3),
    )
}

fn tree_vs_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut disagreements = 0;
    let mut imperfect = 0;
    let unlimited = TrainParams {
        min_leaf: 1,
        max_depth: usize::MAX,
        prune: false,
    };
    for i in 0..200 {
        let missing = if i % 2 == 0 { 0.0 } else { 0.15 };
        let d = random_dataset(&mut rng, 6, 64, missing);
        let got = choose_split(&d).unwrap().map(|s| (s.attribute, s.threshold));
        let want = oracle_choose_split(d.schema(), d.rows()).map(|s| (s.attribute, s.threshold));
        if got != want {
            disagreements += 1;
        }
        let c = random_consistent_dataset(&mut rng, 6, 64);
        if train(&c, unlimited).unwrap().accuracy(&c).unwrap() != 1.0 {
            imperfect += 1;
        }
    }
    let t = start.elapsed();
    check(
        disagreements == 0 && imperfect == 0 && t < Duration::from_secs(30),
        format!(
            "200 datasets: {disagreements} split disagreements, {imperfect} imperfect classify-backs, {:.2} s",
            t.as_secs_f64()
        ),
    )
}

#[derive(Deserialize)]
struct Fixture {
    entropy_9_5: f64,
    info_gain_3way: f64,
    partition: Partition,
}

#[derive(Deserialize)]
struct Partition {
    branches: Vec<Vec<usize>>,
}

fn load_fixture() -> (Fixture, &'static str) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("oracles");
    let live = Command::new("python3").arg(dir.join("entropy_gain.py")).output();
    if let Ok(out) = live {
        if out.status.success() {
            if let Ok(f) = serde_json::from_slice(&out.stdout) {
                return (f, "live oracle script");
            }
        }
    }
    let text = std::fs::read_to_string(dir.join("entropy_gain.json")).unwrap();
    (serde_json::from_str(&text).unwrap(), "committed oracle output")
}

fn entropy_gain() -> Outcome {
    let (fx, source) = load_fixture();
    let h: f64 = entropy(&[9, 5]).unwrap();
    let h32: f32 = entropy(&[9, 5]).unwrap();
    // one row per (branch, class) count
    let schema = AttributeSchema::new(
        vec![Attribute::categorical("a", ["v0", "v1", "v2"])],
        "y",
        ["yes", "no"],
    )
    .unwrap();
    let mut rows = Vec::new();
    for (b, counts) in fx.partition.branches.iter().enumerate() {
        for (label, &n) in counts.iter().enumerate() {
            rows.extend((0..n).map(|_| Instance {
                values: vec![Value::Categorical(b)],
                label,
            }));
        }
    }
    let d: Dataset<f64> = Dataset::new(schema, rows).unwrap();
    let g = gain_ratio(&d, 0, None).unwrap().info_gain;
    let pass = (h - 0.94029).abs() <= 1e-4
        && (fx.entropy_9_5 - 0.94029).abs() <= 1e-4
        && (h - fx.entropy_9_5).abs() <= 1e-9
        && (f64::from(h32) - 0.94029).abs() <= 1e-4
        && (g - 0.2467).abs() <= 1e-3
        && (fx.info_gain_3way - 0.2467).abs() <= 1e-3
        && (g - fx.info_gain_3way).abs() <= 1e-9;
    check(
        pass,
        format!(
            "entropy {h:.6} (oracle {:.6}), gain {g:.6} (oracle {:.6}) via {source}",
            fx.entropy_9_5, fx.info_gain_3way
        ),
    )
}

fn window_filters() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let kappa = rng.random_range(1..7200);
        let now = if rng.random_bool(0.1) {
            rng.random_range(0..kappa)
        } else {
            rng.random_range(0..2_000_000_000u64)
        };
        let events = random_events(&mut rng, now, 2 * kappa);
        let calls = random_calls(&mut rng, now, 2 * kappa);
        let w = TimeWindow::new(kappa).unwrap();
        let now_t = TimeInstant(now);
        let lo = i128::from(now) - i128::from(kappa);
        let hi = i128::from(now) + i128::from(kappa);
        let want_e: Vec<_> = events
            .iter()
            .filter(|e| (lo..=hi).contains(&i128::from(e.start.0)))
            .cloned()
            .collect();
        let want_c: Vec<_> = calls
            .iter()
            .filter(|c| (lo..=i128::from(now)).contains(&i128::from(c.at.0)))
            .cloned()
            .collect();
        if window_events(&events, now_t, w) != want_e || window_calls(&calls, now_t, w) != want_c {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("1000 instances, {mismatches} mismatches"))
}

const GOLDEN: &str = "<cosmos version=\"1\" seq=\"7\" status=\"trained\">\n  <settings>\n    <bluetooth>on</bluetooth>\n    <gps>off</gps>\n    <wifi>on</wifi>\n    <brightness>50</brightness>\n    <ringvolume>25</ringvolume>\n    <vibration>on</vibration>\n  </settings>\n</cosmos>\n";

fn codecs() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut failures = 0;
    let mut longest = 0;
    let allowed = |c: char| c.is_ascii_alphanumeric() || ";=,.-".contains(c);
    for _ in 0..1000 {
        let doc = random_document(&mut rng);
        let sms = encode_sms(&doc);
        longest = longest.max(sms.len());
        let ok = parse_settings_xml(&build_settings_xml(&doc)).ok() == Some(doc)
            && decode_sms(&sms).ok() == Some(doc)
            && sms.len() <= SMS_MAX_LEN
            && sms.chars().all(allowed);
        let upload = random_upload(&mut rng);
        let bytes = build_context_xml(&upload);
        let ok = ok
            && parse_context_xml(&bytes).ok().as_ref() == Some(&upload)
            && build_context_xml(&parse_context_xml(&bytes).unwrap()) == bytes;
        if !ok {
            failures += 1;
        }
    }
    let golden_doc = SettingsDocument::trained(SettingsProfile::from_compact("1,0,1,50,25,1").unwrap(), 7);
    let golden = build_settings_xml(&golden_doc) == GOLDEN.as_bytes()
        && encode_sms(&golden_doc) == "COSMOS1;S=T;Q=7;B1;P0;W1;Y50;R25;V1";
    check(
        failures == 0 && golden,
        format!(
            "1000 documents + 1000 uploads, {failures} failures, longest SMS {longest} chars, golden bytes {}",
            if golden { "match" } else { "differ" }
        ),
    )
}

fn crs(outcome: &SimOutcome) -> f64 {
    outcome.tally.session::<f64>().map_or(0.0, |s| s.crs)
}

fn lifecycle() -> Outcome {
    let start = Instant::now();
    let params = ServerParams::default();
    let days = 4 * params.min_rows / 20;
    let clean = run_scenario(
        &daily_routine(days, 1),
        &routine_user(0.0).unwrap(),
        &params,
        &CriticalServices::default(),
    )
    .unwrap();
    let graded = clean.tally.total();
    let all_complete = graded > 0 && clean.tally.complete == graded;
    let clean_crs = crs(&clean);
    let noisy_user = routine_user(0.2).unwrap();
    let mut total = 0.0;
    for seed in 0..20 {
        total += crs(&run_scenario(
            &daily_routine(days, seed),
            &noisy_user,
            &params,
            &CriticalServices::default(),
        )
        .unwrap());
    }
    let noisy_mean = total / 20.0;
    let t = start.elapsed();
    check(
        all_complete && noisy_mean < clean_crs && t < Duration::from_secs(60),
        format!(
            "{} ticks, serving from tick {}, CRS {clean_crs:.1}% on {graded} graded ticks; noise 0.2 mean CRS {noisy_mean:.1}% over 20 seeds; {:.2} s",
            clean.trace.len(),
            clean.first_serving_tick().map_or("never".to_string(), |t| t.to_string()),
            t.as_secs_f64()
        ),
    )
}

fn battery_audit() -> Outcome {
    let params = ServerParams::default();
    let critical_sets = [
        CriticalServices::default(),
        CriticalServices::new([Setting::Wifi]),
        CriticalServices::new([Setting::Bluetooth, Setting::Gps]),
        CriticalServices::none(),
    ];
    let mut audited = 0;
    let mut violations = 0;
    for (i, critical) in critical_sets.iter().enumerate() {
        // the second user wants every radio on while in crisis
        let mut radios_on = routine_user(0.0).unwrap();
        radios_on.rules[0].profile = SettingsProfile::from_compact("1,1,1,100,50,1").unwrap();
        for user in [routine_user(0.0).unwrap(), radios_on, routine_user(0.3).unwrap()] {
            let outcome = run_scenario(&daily_routine(10, i as u64), &user, &params, critical).unwrap();
            let protected: BTreeSet<Setting> = critical.protected().collect();
            for t in outcome.trace.iter().filter(|t| t.row.crisis) {
                let Some(p) = t.suggested else { continue };
                audited += 1;
                for (s, v) in [
                    (Setting::Bluetooth, p.bluetooth),
                    (Setting::Gps, p.gps),
                    (Setting::Wifi, p.wifi),
                ] {
                    if v == Switch::On && !protected.contains(&s) {
                        violations += 1;
                    }
                }
            }
        }
    }
    check(
        audited > 0 && violations == 0,
        format!("{audited} crisis responses audited across 12 traces, {violations} violations"),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("table2-arithmetic", table2),
        ("table1-arithmetic", table1),
        ("tree-vs-oracle", tree_vs_oracle),
        ("entropy-gain-fixtures", entropy_gain),
        ("window-filter-equivalence", window_filters),
        ("codec-round-trips", codecs),
        ("lifecycle-property", lifecycle),
        ("battery-override-audit", battery_audit),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!(
        "N/A  field-measurements: per-session battery hours and user relevance grades are field data; \
         covered here by their arithmetic and by the property criteria above"
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
