// SPDX-License-Identifier: Apache-2.0

use xarlog_core::assessment::{render_table, AssessmentMatrix, Verdict};
use xarlog_core::chunk::{chunk_segment, SegmentRef, TokenBudget};
use xarlog_core::classify::{classify_all, segment_log, ClassifierRules, LogCategory};
use xarlog_core::extract::{reconstruct_blocks, BlockKind};
use xarlog_core::grounding::ground_answer;
use xarlog_core::log::{parse_file, serialize_record, Origin};
use xarlog_core::pddl::{
    brute_force_plan, parse_domain, parse_plan, parse_problem, validate_plan, GroundAction, GroundFact, PddlDomain,
    PddlProblem, Provenance,
};

fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn annex_models() -> (PddlDomain, PddlProblem) {
    let log = parse_file(&fixture("annex_a.log"));
    let blocks = reconstruct_blocks(&log.records).unwrap();
    let domain = parse_domain(&blocks[0].text).unwrap();
    let problem = parse_problem(&blocks[1].text, &domain).unwrap();
    (domain, problem)
}

#[test]
fn corpus_parses_cleanly() {
    let log = parse_file(&fixture("annex_a.log"));
    assert!(log.errors.is_empty(), "{:?}", log.errors);
    assert_eq!(log.records.len(), 170);
    let launch = log.records.iter().filter(|r| r.origin == Origin::LaunchFramework).count();
    let started = log
        .records
        .iter()
        .filter(|r| r.origin == Origin::LaunchFramework && r.message.contains("process started with pid"))
        .count();
    assert_eq!(launch, 14);
    // The corpus has twelve node processes; the other two launch lines are
    // the log-directory and default-logging notices.
    assert_eq!(started, 12);
}

#[test]
fn round_trip_modulo_continuations() {
    let src = fixture("annex_a.log");
    let log = parse_file(&src);
    let record_lines: Vec<&str> = src
        .lines()
        .filter(|l| l.split(' ').next().is_some_and(|t| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit() || b == b'.')))
        .collect();
    let serialized: Vec<&str> = log.records.iter().map(serialize_record).collect();
    assert_eq!(serialized, record_lines);
}

#[test]
fn golden_segment_sequence() {
    use LogCategory::*;
    let log = parse_file(&fixture("annex_a.log"));
    let segments = segment_log(&log.records, &ClassifierRules::default());
    let got: Vec<(LogCategory, usize, usize)> = segments
        .iter()
        .map(|s| {
            let sum = s.summary();
            (sum.category, sum.first_line, sum.last_line)
        })
        .collect();
    assert_eq!(
        got,
        [
            (StartUp, 1, 21),
            (WarningError, 22, 22),
            (Other, 23, 25),
            (WarningError, 26, 26),
            (StartUp, 27, 30),
            (Other, 31, 34),
            (WarningError, 35, 35),
            (Other, 36, 36),
            (WarningError, 37, 39),
            (StartUp, 40, 40),
            (WarningError, 41, 42),
            (Other, 43, 46),
            (WarningError, 47, 73),
            (Other, 74, 128),
            (Pddl, 129, 164),
            (Other, 165, 165),
            (Pddl, 166, 193),
            (Other, 194, 194),
        ]
    );
    assert_eq!(segments.iter().filter(|s| s.category == Pddl).count(), 2);
}

#[test]
fn dynamic_library_lines_are_warnings() {
    let log = parse_file(&fixture("annex_a.log"));
    let cats = classify_all(&log.records, &ClassifierRules::default());
    let mut seen = 0;
    for (r, c) in log.records.iter().zip(&cats) {
        if r.message.contains("Could not load dynamic library") {
            assert_eq!(*c, LogCategory::WarningError, "line {}", r.line_no);
            seen += 1;
        }
    }
    assert!(seen >= 3);
}

#[test]
fn problem_block_matches_listing() {
    let log = parse_file(&fixture("annex_a.log"));
    let blocks = reconstruct_blocks(&log.records).unwrap();
    assert_eq!(blocks.len(), 2);
    assert_eq!(blocks[0].kind, BlockKind::DomainText);
    assert_eq!(blocks[1].kind, BlockKind::ProblemText);
    assert_eq!(normalize_ws(&blocks[1].text), normalize_ws(&fixture("annex_d_problem.pddl")));
    assert_eq!(normalize_ws(&blocks[0].text), normalize_ws(&fixture("merlin2_domain.pddl")));
}

#[test]
fn parsed_models() {
    let (d, p) = annex_models();
    assert_eq!(d.name, "merlin2");
    assert_eq!(d.types.len(), 3);
    assert_eq!(d.predicates.len(), 4);
    assert_eq!(d.actions.len(), 2);
    assert!(d.actions.iter().all(|a| a.duration == 10.0));

    assert_eq!(p.objects.len(), 12);
    assert_eq!(p.objects.iter().filter(|o| o.ty == "sound").count(), 9);
    assert_eq!(p.init.len(), 3);
    assert_eq!(
        p.goal,
        [
            GroundFact::new("door_checked", &["door_entrance"]),
            GroundFact::new("robot_at", &["livingroom"]),
        ]
    );
}

#[test]
fn plan_adjudication() {
    let (d, p) = annex_models();
    let gpt4 = parse_plan(&fixture("gpt4.plan"), Provenance::LlmAnswer("gpt-4".into())).unwrap();
    let r = validate_plan(&d, &p, &gpt4).unwrap();
    assert!(r.valid);
    assert_eq!(r.makespan, Some(30.0));

    let gpt35 = parse_plan(&fixture("gpt35.plan"), Provenance::LlmAnswer("gpt-3.5".into())).unwrap();
    let r = validate_plan(&d, &p, &gpt35).unwrap();
    assert!(!r.valid);
    assert_eq!(r.failing_step, Some(0));
    assert_eq!(r.unmet_literal.as_deref(), Some("(door_at door_entrance livingroom)"));

    let found = brute_force_plan(&d, &p, 5).unwrap();
    assert_eq!(found.len(), 3);
    assert_eq!(found.steps, gpt4.steps);
    assert_eq!(found.steps[1], GroundAction::new("check_door", &["entrance", "door_entrance"]));
    assert!(validate_plan(&d, &p, &found).unwrap().valid);
}

#[test]
fn grounding_against_problem_chunk() {
    let log = parse_file(&fixture("annex_a.log"));
    let segments = segment_log(&log.records, &ClassifierRules::default());
    let (index, seg) = segments
        .iter()
        .enumerate()
        .filter(|(_, s)| s.category == LogCategory::Pddl)
        .nth(1)
        .unwrap();
    let chunks = chunk_segment(
        seg,
        SegmentRef {
            file_id: "annex_a".into(),
            segment_index: index,
        },
        &TokenBudget::default(),
    )
    .unwrap();
    assert_eq!(chunks.len(), 1);
    let chunk = &chunks[0].text;

    let alpaca = ground_answer(&fixture("alpaca_pddl_answer.txt"), chunk);
    assert!(alpaca.ungrounded_terms.contains("robotic arm"));
    assert!(!alpaca.grounded_terms.contains("robotic arm"));

    let gpt4 = ground_answer("The robot has listened to the tubular_bells sound.", chunk);
    assert!(gpt4.grounded_terms.contains("tubular_bells"));

    let full = ground_answer(&fixture("gpt4_pddl_answer.txt"), chunk);
    assert!(full.grounding_ratio > alpaca.grounding_ratio);
}

#[test]
fn table_fixture() {
    let m: AssessmentMatrix = serde_json::from_str(&fixture("table1.json")).unwrap();
    let get = |model: &str, cat, q: &str| m.verdict(&m.key(model, cat, q).unwrap());
    assert_eq!(get("GPT 4.0", LogCategory::Pddl, "Q.2"), Verdict::Yes);
    assert_eq!(get("GPT 4.0", LogCategory::StartUp, "Q.1"), Verdict::No);
    assert_eq!(get("GPT 3.5", LogCategory::WarningError, "Q.2"), Verdict::Yes);
    assert_eq!(get("Alpaca", LogCategory::Pddl, "Q.3"), Verdict::Yes);
    assert_eq!(m.cells().count(), 27);

    let questions: Vec<String> = ["Q1", "Q2", "Q3"].map(String::from).to_vec();
    let table = render_table(&m, m.models(), &questions);
    let rows: Vec<Vec<&str>> = table
        .lines()
        .skip(2)
        .map(|l| l.split('|').map(str::trim).filter(|c| !c.is_empty()).collect())
        .collect();
    assert_eq!(rows[0], ["Q.1", "No", "No", "No", "No", "No", "No", "No", "No", "No"]);
    assert_eq!(rows[1], ["Q.2", "Yes", "No", "No", "Yes", "Yes", "No", "Yes", "Yes", "Yes"]);
    assert_eq!(rows[2], ["Q.3", "Yes", "No", "No", "No", "No", "No", "Yes", "Yes", "Yes"]);

    let json = serde_json::to_string(&m).unwrap();
    let back: AssessmentMatrix = serde_json::from_str(&json).unwrap();
    assert_eq!(back, m);
}

fn startup_block() -> Vec<xarlog_core::log::LogRecord> {
    let log = parse_file(&fixture("annex_a.log"));
    log.records.into_iter().take(14).collect()
}

#[test]
fn startup_block_is_one_segment() {
    let records = startup_block();
    let segments = segment_log(&records, &ClassifierRules::default());
    assert_eq!(segments.len(), 1);
    assert_eq!(segments[0].category, LogCategory::StartUp);
    assert_eq!(segments[0].records.len(), 14);

    let synthetic: String = (1..=13)
        .map(|i| format!("{i}.5 [INFO] [node_{i}-{i}]: process started with pid [{}]\n", 1000 + i))
        .collect();
    let log = parse_file(&synthetic);
    let segments = segment_log(&log.records, &ClassifierRules::default());
    assert_eq!(segments.len(), 1);
    assert_eq!(segments[0].records.len(), 13);
}

#[test]
fn startup_block_splits_one_token_under_whole() {
    use xarlog_core::chunk::estimate_tokens;
    let records = startup_block();
    let segment = segment_log(&records, &ClassifierRules::default()).remove(0);
    let whole: String = records.iter().map(|r| format!("{}\n", r.raw())).collect();
    let est = estimate_tokens(&whole);
    let budget = TokenBudget::new(est - 1, 0).unwrap();
    let seg_ref = SegmentRef {
        file_id: "annex_a".into(),
        segment_index: 0,
    };
    let chunks = chunk_segment(&segment, seg_ref, &budget).unwrap();
    assert_eq!(chunks.len(), 2);
    assert_eq!((chunks[0].part, chunks[0].parts), (1, 2));
    assert_eq!(chunks[0].last_line + 1, chunks[1].first_line);
    assert!(chunks[0].text.ends_with('\n'));
    assert_eq!(format!("{}{}", chunks[0].text, chunks[1].text), whole);
}
