use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dsme-lora"));
    c.env_remove("DSME_LORA_OUT");
    c
}

fn ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(out: Output) -> String {
    assert!(!out.status.success());
    String::from_utf8(out.stderr).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (headers, rows)
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

const OUTPUTS: [(&str, &str); 6] = [
    ("delay_cdf.csv", "delay_s,cdf"),
    ("prr.csv", "source,dest,scheduled,delivered,prr"),
    ("drops.csv", "reason,count,fraction"),
    (
        "airtime.csv",
        "node,role,band,airtime_s,airtime_per_hour_s,data_transmissions",
    ),
    ("queue_pmf.csv", "queue_length,probability"),
    ("energy.csv", "node,role,energy_mj,average_power_mw"),
];

#[test]
fn every_preset_runs() {
    let list = ok(&["simulate", "--list-presets"]);
    let names: Vec<&str> = list
        .lines()
        .skip(2)
        .filter_map(|l| l.split_whitespace().next())
        .collect();
    assert!(names.len() >= 18, "{names:?}");
    let dir = tempfile::tempdir().unwrap();
    for name in names {
        let out = dir.path().join(name);
        ok(&[
            "simulate",
            "--preset",
            name,
            "--duration",
            "120",
            "--out",
            out.to_str().unwrap(),
        ]);
        for (file, _) in OUTPUTS {
            assert!(out.join(file).exists(), "{name}: {file}");
        }
    }
}

#[test]
fn simulate_writes_stable_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let stdout = ok(&[
        "simulate",
        "--preset",
        "gts_unconfirmed",
        "--duration",
        "600",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(stdout.contains("prr"));
    for (file, want) in OUTPUTS {
        assert_eq!(header(&out.join(file)), want, "{file}");
    }
    let (_, rows) = csv_rows(&std::fs::read_to_string(out.join("prr.csv")).unwrap());
    let all = rows.last().unwrap();
    assert_eq!((all[0].as_str(), all[1].as_str()), ("all", "all"));
    let (_, cdf) = csv_rows(&std::fs::read_to_string(out.join("delay_cdf.csv")).unwrap());
    assert_eq!(cdf.len(), 1001);
    assert_eq!(cdf.last().unwrap()[1].parse::<f64>().unwrap(), 1.0);
    let (_, pmf) = csv_rows(&std::fs::read_to_string(out.join("queue_pmf.csv")).unwrap());
    let total: f64 = pmf.iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn replicas_get_their_own_directories() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rep");
    let o = out.to_str().unwrap();
    ok(&[
        "simulate",
        "--preset",
        "gts_unconfirmed",
        "--duration",
        "300",
        "--replicas",
        "3",
        "--seed",
        "5",
        "--out",
        o,
    ]);
    for seed in 5..8 {
        assert!(out.join(format!("replica_{seed}")).join("prr.csv").exists());
    }
    assert!(out.join("prr.csv").exists());
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_env");
    let status = bin()
        .args(["simulate", "--preset", "star", "--duration", "120"])
        .env("DSME_LORA_OUT", &out)
        .current_dir(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("prr.csv").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.log");
    let out = dir.path().join("o");
    ok(&[
        "simulate",
        "--preset",
        "gts_confirmed",
        "--duration",
        "60",
        "--trace",
        trace.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(std::fs::read_to_string(&trace).unwrap().lines().count() > 10);
    let err = fails(
        bin()
            .args([
                "simulate",
                "--preset",
                "star",
                "--replicas",
                "2",
                "--trace",
                "t.log",
            ])
            .current_dir(dir.path())
            .output()
            .unwrap(),
    );
    assert!(err.contains("single replica"), "{err}");
}

#[test]
fn tx_interval_override_scales_load() {
    let dir = tempfile::tempdir().unwrap();
    let scheduled = |tx: &str| {
        let out = dir.path().join(tx);
        ok(&[
            "simulate",
            "--preset",
            "model_validation",
            "--duration",
            "1800",
            "--tx-interval",
            tx,
            "--out",
            out.to_str().unwrap(),
        ]);
        let (_, rows) = csv_rows(&std::fs::read_to_string(out.join("prr.csv")).unwrap());
        rows.last().unwrap()[2].parse::<f64>().unwrap()
    };
    let ratio = scheduled("10") / scheduled("40");
    assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
}

#[test]
fn malformed_scenario_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\nduration_s = \"long\"\n").unwrap();
    let out = dir.path().join("never");
    let err = fails(
        bin()
            .args([
                "simulate",
                bad.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap(),
    );
    assert!(err.contains("bad.toml"), "{err}");
    assert!(!out.exists());

    let err = fails(
        bin()
            .args(["simulate", "--preset", "nope"])
            .output()
            .unwrap(),
    );
    assert!(err.contains("unknown preset"), "{err}");
    let err = fails(
        bin()
            .args([
                "simulate",
                "--preset",
                "star",
                "--sources",
                "0",
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap(),
    );
    assert!(err.contains("invalid scenario"), "{err}");
    assert!(!out.exists());
}

#[test]
fn model_table5_and_heatmap() {
    let (h, rows) = csv_rows(&ok(&["model", "--table5", "--csv"]));
    assert_eq!(h, ["mo", "t_msf_s", "rho_max", "throughput_pkt_per_h"]);
    let thr: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    for (g, w) in thr.iter().zip([401.24, 200.58, 100.29, 50.15]) {
        assert!((g - w).abs() / w < 1e-3, "{g}");
    }
    let (h, rows) = csv_rows(&ok(&[
        "model",
        "--heatmap",
        "--intervals",
        "5,160,900",
        "--csv",
    ]));
    assert_eq!(h, ["mo", "tx_5s", "tx_160s", "tx_900s"]);
    assert_eq!(rows[2][0], "5");
    assert_eq!(rows[2][2], "19.01");
    assert_eq!(rows[2][3], "15.90");
    assert_eq!(rows[0][1], "unstable");
}

#[test]
fn model_distribution() {
    let (h, rows) = csv_rows(&ok(&[
        "model",
        "--mo",
        "3",
        "--tx-interval",
        "20",
        "--max-queue",
        "10",
        "--csv",
    ]));
    assert_eq!(
        h,
        [
            "n",
            "embedded_pmf",
            "queue_pmf",
            "queue_cdf",
            "delay_bound_s",
            "delay_cdf"
        ]
    );
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][4], "7.680");
    let text = ok(&["model", "--rho", "0.5"]);
    assert!(text.contains("mean queue"));
    let err = fails(bin().args(["model", "--rho", "1.2"]).output().unwrap());
    assert!(err.contains("not below 1"), "{err}");
}

#[test]
fn plan_rates() {
    let (h, rows) = csv_rows(&ok(&[
        "plan",
        "--max-sources",
        "200",
        "--step",
        "5",
        "--bands",
        "1",
        "--csv",
    ]));
    assert_eq!(h, ["n_sources", "rate_1pct_per_h"]);
    let rates: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(rates.windows(2).all(|w| w[1] <= w[0]));
    fails(bin().args(["plan", "--step", "0"]).output().unwrap());
}

#[test]
fn energy_tables() {
    let (h, rows) = csv_rows(&ok(&["energy", "--csv"]));
    assert_eq!(h[0], "profile");
    assert_eq!(
        rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(),
        ["s1", "s2", "s3"]
    );
    let (_, sweep) = csv_rows(&ok(&["energy", "--bo-sweep", "--csv"]));
    assert_eq!(sweep[0][2], "2.7318");
    let (h, table) = csv_rows(&ok(&["energy", "--lifetime-table", "--csv"]));
    assert_eq!(
        h,
        [
            "mo",
            "mean_delay_s",
            "load_power_mw",
            "battery_power_mw",
            "lifetime_years"
        ]
    );
    assert_eq!(table[0][4], "1.820");

    let dir = tempfile::tempdir().unwrap();
    let consts = dir.path().join("c.toml");
    std::fs::write(&consts, "bs_rx = -1.0\n").unwrap();
    fails(
        bin()
            .args(["energy", "--constants", consts.to_str().unwrap()])
            .output()
            .unwrap(),
    );
}
