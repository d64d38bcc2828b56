use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conic-hypertope")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn verify_main_full_sweep_q5() {
    let out = bin(&["verify-main", "--p", "5", "--n", "1", "--mode", "full"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["triples"], 2300);
    assert_eq!(v["violations"], 0);
    assert_eq!(v["holds"], true);
}

#[test]
fn tangent_over_gf9_generates_pgl_2_3() {
    let out = bin(&["tangent", "--p", "3", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let g = &json(&out)["group"];
    assert_eq!(g["tag"], "PGL");
    assert_eq!(g["q0"], 3);
    assert_eq!(g["order"], 24);
}

#[test]
fn classify_degenerate_input_is_not_a_failure() {
    let out = bin(&["classify", "--p", "7", "--n", "1", "--points", "[1,0,0];[0,1,0];[0,0,1]"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "DegenerateInput");
}

#[test]
fn classify_collinear_triple() {
    // Three points on the line x0 = 0, none on the conic.
    let out = bin(&["classify", "--p", "7", "--points", "[0,1,0];[0,1,1];[0,1,2]"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "Collinear");
    assert_eq!(v["hypertope"], false);
}

#[test]
fn json_is_byte_identical_across_runs() {
    let args = ["enumerate", "--p", "7", "--sample", "40", "--seed", "11"];
    let a = bin(&args);
    let b = bin(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    // Keys come out sorted.
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.find("\"entries\"").unwrap() < text.find("\"evaluated\"").unwrap());
    assert!(text.ends_with('\n'));
}

#[test]
fn jobs_do_not_change_results() {
    let one = bin(&["enumerate", "--p", "5", "--jobs", "1", "--format", "tsv"]);
    let two = bin(&["enumerate", "--p", "5", "--jobs", "2", "--format", "tsv"]);
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn tsv_header_is_stable() {
    let out = bin(&["enumerate", "--p", "3", "--format", "tsv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some(conic_hypertope::triangles::TSV_HEADER));
    let counts: u64 = text.lines().skip(1).map(|l| l.split('\t').nth(2).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(counts, 84);
}

#[test]
fn sampling_everything_matches_full_mode() {
    let full = bin(&["enumerate", "--p", "3", "--format", "tsv"]);
    let sample = bin(&["enumerate", "--p", "3", "--sample", "84", "--seed", "5", "--format", "tsv"]);
    assert_eq!(full.stdout, sample.stdout);
}

#[test]
fn dot_output_parses() {
    let out = bin(&["geometry", "--p", "7", "--points", "[0,1,0];[1,1,2];[1,2,2]", "--format", "dot"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let ast = dot_parser::ast::Graph::try_from(text.as_str()).expect("valid DOT");
    assert!(!ast.is_digraph);
    let graph = dot_parser::canonical::Graph::from(ast);
    let report = json(&bin(&["geometry", "--p", "7", "--points", "[0,1,0];[1,1,2];[1,2,2]"]));
    let counts: u64 = report["geometry"]["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    let incidences = report["geometry"]["incidence"].as_array().unwrap().len();
    assert_eq!(graph.nodes.set.len() as u64, counts);
    assert_eq!(graph.edges.set.len(), incidences);
}

#[test]
fn out_is_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = bin(&["tangent", "--p", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    assert_eq!(written, bin(&["tangent", "--p", "5"]).stdout);
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn exit_codes() {
    // Parse errors.
    assert_eq!(bin(&["classify", "--p", "9"]).status.code(), Some(2));
    assert_eq!(bin(&["classify", "--p", "7", "--points", "[1,0,0]"]).status.code(), Some(2));
    assert_eq!(bin(&["classify", "--p", "7", "--points", "[1,0;[0,1,0];[0,0,1]"]).status.code(), Some(2));
    assert_eq!(bin(&["enumerate"]).status.code(), Some(2));
    assert_eq!(bin(&["bogus"]).status.code(), Some(2));
    assert_eq!(bin(&["triality", "--p", "7"]).status.code(), Some(2));
    assert_eq!(bin(&["enumerate", "--p", "3", "--n", "2", "--modulus", "2,0,1"]).status.code(), Some(2));
    // Budget.
    assert_eq!(bin(&["enumerate", "--p", "7", "--sample", "3", "--budget", "10"]).status.code(), Some(3));
    // Format.
    assert_eq!(bin(&["classify", "--p", "7", "--points", "[0,1,0];[1,1,2];[1,2,2]", "--format", "dot"]).status.code(), Some(4));
}

#[test]
fn custom_modulus_is_reported() {
    // x^2 + 1 is irreducible over GF(3).
    let out = bin(&["tangent", "--p", "3", "--n", "2", "--modulus", "1,0,1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["triangle"]["group_id"]["order"], 24);
}

#[test]
fn triality_q27_verifies() {
    let out = bin(&["triality", "--p", "3", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verified"], true);
    assert_eq!(v["checks"], 24);
    assert_eq!(v["matches"], 1);
}

#[test]
fn nonlinear_pgl_q5() {
    let out = bin(&["nonlinear-pgl", "--p", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["group_id"]["order"], 120);
    assert!(v["labels"].as_array().unwrap().iter().all(|x| x.as_u64().unwrap() > 2));
}

#[test]
fn experiment_psl_counts_add_up() {
    let out = bin(&["experiment-psl", "--p", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let s = &v["summary"];
    let psl3: u64 = v["table"]["entries"].as_array().unwrap().iter().map(|e| e["psl"][3].as_u64().unwrap()).sum();
    assert_eq!(s["all_psl"].as_u64().unwrap(), psl3);
    assert!(s["generating_psl_snsp"].as_u64() <= s["generating_psl"].as_u64());
}

#[test]
fn experiment_tau_needs_a_cube() {
    assert_eq!(bin(&["experiment-tau", "--p", "3", "--n", "2"]).status.code(), Some(2));
}
