use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use glint_cli::config::PipelineConfig;
use glint_core::envmap::{self, EquirectMap};
use proptest::prelude::*;

fn glint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glint")).args(args).output().expect("spawn glint")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A dim sky with one bright spot above the horizon.
fn write_map(dir: &Path, name: &str, spot: f64) -> PathBuf {
    let map = EquirectMap::from_fn(32, |theta, phi| {
        let d = ((theta - 0.8).powi(2) + (phi - 2.0).powi(2)).sqrt();
        let v = if d < 0.3 { spot } else { 0.2 + 0.1 * theta.cos() };
        [v, v * 0.9, v * 0.8]
    })
    .unwrap();
    let path = dir.join(name);
    envmap::save(&map, &path).unwrap();
    path
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("pipeline.conf");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn pipeline_writes_one_row_per_condition() {
    let dir = tempfile::tempdir().unwrap();
    write_map(dir.path(), "spot.pfm", 40.0);
    let cfg = write_config(dir.path(), "output_dir = out\nmap.spot = spot.pfm\nsize = 48\nmax_order = 8\n");
    let o = glint(&["pipeline", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let out = dir.path().join("out");
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 5);
    assert!(report.lines().skip(1).all(|l| l.contains(",spot,sphere,")));
    let catalog = fs::read_to_string(out.join("stimuli").join("catalog.csv")).unwrap();
    assert_eq!(catalog.lines().count(), 1 + 5);
    let powers = fs::read_to_string(out.join("powers.csv")).unwrap();
    assert_eq!(powers.lines().count(), 1 + 9);
}

#[test]
fn pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_map(dir.path(), "a.pfm", 40.0);
    write_map(dir.path(), "b.hdr", 5.0);
    let run = |out: &str| {
        let cfg = write_config(
            dir.path(),
            &format!("output_dir = {out}\nmap.a = a.pfm\nmap.b = b.hdr\nsize = 40\nmax_order = 6\nfilter = low:4\n"),
        );
        let o = glint(&["pipeline", "--config", cfg.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        dir.path().join(out)
    };
    let (first, second) = (run("one"), run("two"));
    for name in ["report.csv", "maps.csv", "powers.csv", "report.json"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn missing_map_is_an_io_error_in_the_envmap_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "output_dir = out\nmap.gone = gone.hdr\n");
    let o = glint(&["pipeline", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("envmap: gone"), "{}", stderr(&o));
}

#[test]
fn bad_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "output_dir = out\nmap.a = a.hdr\nsize = lots\n");
    let o = glint(&["pipeline", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config:"), "{}", stderr(&o));
}

#[test]
fn fresnel_curve_to_stdout() {
    let o = glint(&["fresnel-curve", "--n", "1.5", "--step", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (a, r) = l.split_once(',').unwrap();
            (a.parse().unwrap(), r.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.first().unwrap().0, 0.0);
    assert_eq!(rows.last().unwrap().0, 90.0);
    assert!((rows[0].1 - 0.04).abs() < 1e-12);
    assert!((rows.last().unwrap().1 - 1.0).abs() < 1e-12);
}

#[test]
fn fresnel_curve_rejects_bad_ior() {
    let o = glint(&["fresnel-curve", "--n", "-1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn map_tools_chain() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_map(dir.path(), "src.hdr", 30.0);
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_owned();
    let s = src.to_str().unwrap();

    let o = glint(&["desaturate", "--in", s, "--out", &p("gray.pfm")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let gray = envmap::load(p("gray.pfm")).unwrap();
    assert!(gray.pixels().iter().all(|px| px[0] == px[1] && px[1] == px[2]));

    let o = glint(&["scale", "--in", &p("gray.pfm"), "--factor", "2", "--out", &p("twice.pfm")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let twice = envmap::load(p("twice.pfm")).unwrap();
    for (a, b) in gray.pixels().iter().zip(twice.pixels()) {
        assert!((2.0 * a[0] - b[0]).abs() <= 1e-5 * b[0].max(1.0));
    }

    let o = glint(&["scale", "--in", s, "--factor", "0", "--out", &p("zero.pfm")]);
    assert_eq!(o.status.code(), Some(2));

    for mode in ["low", "high"] {
        let out = p(&format!("{mode}.pfm"));
        let o = glint(&["filter", "--in", s, "--width", "4", "--mode", mode, "--out", &out]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(envmap::load(&out).unwrap().height(), 32);
    }

    let o = glint(&["sh-analyze", "--in", &p("gray.pfm"), "--max-order", "6", "--out", &p("coeffs.csv")]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(p("coeffs.csv")).unwrap().lines().count(), 1 + 49);
    assert_eq!(fs::read_to_string(p("coeffs_powers.csv")).unwrap().lines().count(), 1 + 7);
    let metrics: serde_json::Value = serde_json::from_slice(&fs::read(p("coeffs_metrics.json")).unwrap()).unwrap();
    assert!(metrics["diffuseness"].as_f64().unwrap() > 0.0);
}

#[test]
fn render_then_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let map = write_map(dir.path(), "m.pfm", 50.0);
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_owned();
    let o = glint(&[
        "render",
        "--map",
        map.to_str().unwrap(),
        "--material",
        "metal",
        "--size",
        "48",
        "--out",
        &p("s.png"),
        "--mask",
        &p("s_mask.png"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let cov = |threshold: &str| {
        let o = glint(&["coverage", "--img", &p("s.png"), "--mask", &p("s_mask.png"), "--threshold", threshold, "--json"]);
        assert!(o.status.success(), "{}", stderr(&o));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()
    };
    let (lo, hi) = (cov("0"), cov("253"));
    assert_eq!(lo["coverage"].as_f64(), Some(1.0));
    assert!(hi["coverage"].as_f64().unwrap() > 0.0, "the brightest pixel is 254");
    assert!(hi["coverage"].as_f64().unwrap() < 1.0);
    assert_eq!(lo["object_pixels"], hi["object_pixels"]);

    let o = glint(&["coverage", "--img", &p("missing.png")]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bias_then_regress() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_owned();
    let mut ratings = String::from("observer,session,object,material,light_map,factor,metal,shiny_black,shiny_white,other\n");
    for (map, metal) in [("a", 70.0), ("b", 50.0), ("c", 30.0)] {
        for material in ["metal", "shiny_black"] {
            ratings += &format!("o1,1,sphere,{material},{map},1,{metal},{},0,{}\n", 100.0 - metal - 10.0, 10.0);
        }
    }
    fs::write(p("ratings.csv"), ratings).unwrap();
    fs::write(p("metrics.csv"), "light_map,diffuseness\na,0.1\nb,0.3\nc,0.5\n").unwrap();

    let o = glint(&["bias", "--ratings", &p("ratings.csv"), "--out", &p("bias.csv")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bias = fs::read_to_string(p("bias.csv")).unwrap();
    assert_eq!(bias.lines().next(), Some("light_map,bias_index"));
    let a: f64 = bias.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((a - 70.0 / 20.0).abs() < 1e-12);

    let x = format!("{}:diffuseness", p("metrics.csv"));
    let o = glint(&["regress", "--x", &x, "--y", &p("bias.csv")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(fit["slope"].as_f64().unwrap() < 0.0);

    let o = glint(&["regress", "--x", &p("metrics.csv"), "--y", &p("bias.csv")]);
    assert_eq!(o.status.code(), Some(2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn config_parser_never_panics(text in "[a-z_.=:, 0-9#\n]{0,200}") {
        let _ = PipelineConfig::parse(&text, Path::new("/base"));
    }

    #[test]
    fn accepted_sizes_round_trip(size in 0usize..10_000) {
        let text = format!("output_dir = o\nmap.a = a.hdr\nsize = {size}\n");
        match PipelineConfig::parse(&text, Path::new("/base")) {
            Ok(cfg) => {
                prop_assert_eq!(cfg.size, size);
                prop_assert!((32..=8192).contains(&size));
                prop_assert_eq!(cfg.output_dir, PathBuf::from("/base/o"));
            }
            Err(e) => {
                prop_assert!(!(32..=8192).contains(&size));
                prop_assert_eq!(e.line, 3);
            }
        }
    }
}
