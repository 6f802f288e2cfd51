use std::collections::HashMap;

use lplab_cli::{run_with_env, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn lplab_env(args: &str, env: Option<&str>) -> Out {
    let argv = std::iter::once("lplab").chain(args.split_whitespace());
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = run_with_env(argv, env.map(String::from), &mut o, &mut e);
    Out { code, stdout: String::from_utf8(o).unwrap(), stderr: String::from_utf8(e).unwrap() }
}

fn lplab(args: &str) -> Out {
    lplab_env(args, None)
}

/// Data rows of a CSV output as column -> value maps.
fn rows(csv: &str) -> Vec<HashMap<String, String>> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines.map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect()).collect()
}

fn num(row: &HashMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap()
}

#[test]
fn quantile_command() {
    let out = lplab("quantile --n 10000 --i 1");
    assert_eq!(out.code, EXIT_OK);
    assert!((num(&rows(&out.stdout)[0], "xi") - 3.8906).abs() < 1e-4);
    assert_eq!(num(&rows(&lplab("quantile --alpha 0").stdout)[0], "xi"), 0.0);
    let out = lplab("quantile");
    assert_eq!(out.code, EXIT_USAGE);
    assert!(!out.stderr.is_empty());
    assert_eq!(lplab("quantile --alpha 0.5 --bogus").code, EXIT_USAGE);
    assert_eq!(lplab("--help").code, EXIT_OK);
}

#[test]
fn predict_command() {
    let r = rows(&lplab("predict --n 10000 --p 2").stdout);
    assert_eq!(r[0]["regime"], "LOW");
    assert!((num(&r[0], "predicted") - 2.0).abs() < 1e-12);
    let r = rows(&lplab("predict --n 10000 --p inf").stdout);
    assert!((num(&r[0], "predicted") - 1.0 / 10000f64.ln()).abs() < 1e-12);
    let out = lplab("predict --n 1000,10000 --p-grid auto");
    let r = rows(&out.stdout);
    assert!(r.len() > 40);
    for n in ["1000", "10000"] {
        let ps: Vec<f64> = r.iter().filter(|x| x["n"] == n).map(|x| num(x, "p")).collect();
        assert!(ps.windows(2).all(|w| w[0] <= w[1]));
    }
    let cols: Vec<&str> = out.stdout.lines().find(|l| !l.starts_with('#')).unwrap().split(',').collect();
    assert_eq!(cols[..4], ["n", "p", "regime", "predicted"]);
    assert_eq!(lplab("predict --n 50 --p 2").code, EXIT_USAGE);
}

#[test]
fn mc_command() {
    let out = lplab("mc --n 1 --p 2 --samples 100000 --seed 7");
    assert_eq!(out.code, EXIT_OK);
    let r = &rows(&out.stdout)[0];
    let want = 1.0 - 2.0 / std::f64::consts::PI;
    assert!((num(r, "variance") - want).abs() <= 4.0 * num(r, "stderr_variance"));
    assert_eq!(out.stdout, lplab("mc --n 1 --p 2 --samples 100000 --seed 7").stdout);
    assert_ne!(out.stdout, lplab("mc --n 1 --p 2 --samples 100000 --seed 8").stdout);

    let r = &rows(&lplab("mc --n 10000 --p 18.42 --samples 400").stdout)[0];
    let ratio = num(r, "ratio");
    assert!(ratio > 0.1 && ratio < 10.0, "{ratio}");

    let out = lplab("mc --n 1000000 --p 2 --samples 10 --set mem_guard_bytes=1000");
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains("memory guard"));

    let r = &rows(&lplab("mc --n 1000 --negative 2 1 --samples 2000").stdout)[0];
    assert!(num(r, "ratio") > 0.5 && num(r, "ratio") < 2.0);
    let r = &rows(&lplab("mc --n 1000 --truncate 3.3 --p 8 --samples 2000").stdout)[0];
    assert!(num(r, "gap2_mean") <= num(r, "tail_term"));
}

#[test]
fn orderstats_command() {
    let r = &rows(&lplab("orderstats --n 100 --beta 0.1 --i 1").stdout)[0];
    assert!((num(r, "exact") / 2.656e-5 - 1.0).abs() < 1e-3);
    assert!((num(r, "chernoff") / 6.738e-3 - 1.0).abs() < 1e-3);
    assert_eq!(r["dominates"], "true");
    let out = lplab("orderstats --n 1000 --i 1,32 --u 0.5");
    assert_eq!(rows(&out.stdout).len(), 2);
    assert_eq!(lplab("orderstats --n 10 --i 1").code, EXIT_USAGE);
}

#[test]
fn checks_command() {
    let out = lplab("checks --n 1000,10000 --p-grid auto");
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(rows(&out.stdout).iter().all(|r| r["passed"] == "true"));
    let out = lplab("checks --n 1000 --set c_a=5");
    assert_eq!(out.code, EXIT_CHECK_FAILED);
    assert!(out.stderr.contains("check h failed"));
}

#[test]
fn dvoretzky_command() {
    let out = lplab("dvoretzky --n 500 --k 2 --delta 0,0.5 --trials 20 --seed 3");
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let r = rows(&out.stdout);
    assert_eq!(r.len(), 3);
    assert_eq!((r[0]["in_window"].as_str(), r[1]["side"].as_str(), r[2]["side"].as_str()), ("true", "sub", "super"));
    for row in &r {
        let total: f64 = ["successes", "failures", "ambiguous"].iter().map(|c| num(row, c)).sum();
        assert_eq!(total, 20.0);
    }
    assert_eq!(out.stdout, lplab("dvoretzky --n 500 --k 2 --delta 0,0.5 --trials 20 --seed 3").stdout);
    assert_eq!(lplab("dvoretzky --n 100 --k 6 --trials 2").code, EXIT_USAGE);
    assert_eq!(lplab("dvoretzky --n 100 --k 6 --trials 2 --uncertified --directions 32").code, EXIT_OK);
}

#[test]
fn header_echoes_config() {
    let out = lplab("predict --n 1000 --p 3 --seed 42 --set c_a=0.3");
    let header: Vec<&str> = out.stdout.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(header[0].starts_with(&format!("# lplab {}", lplab_core::VERSION)));
    for want in ["# command = predict --n 1000 --p 3 --seed 42 --set c_a=0.3", "# seed = 42", "# constants.c_a = 0.3"] {
        assert!(header.contains(&want), "missing `{want}`");
    }
    assert_eq!(header.len(), 8 + lplab_core::Constants::KEYS.len());
}

#[test]
fn csv_and_json_agree() {
    let csv = lplab("predict --n 1000 --p-grid auto");
    let json = lplab("predict --n 1000 --p-grid auto --format json");
    let doc: serde_json::Value = serde_json::from_str(&json.stdout).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["config"]["output_format"], "json");
    let jrows = doc["rows"].as_array().unwrap();
    let crows = rows(&csv.stdout);
    assert_eq!(jrows.len(), crows.len());
    for (j, c) in jrows.iter().zip(&crows) {
        for (col, v) in c {
            let jv = &j[col.as_str()];
            match jv {
                serde_json::Value::Number(x) => assert_eq!(x.as_f64().unwrap(), v.parse::<f64>().unwrap(), "{col}"),
                serde_json::Value::String(s) => assert_eq!(s, v, "{col}"),
                other => panic!("{col}: {other}"),
            }
        }
    }
}

#[test]
fn constants_from_env_and_files() {
    let dir = std::env::temp_dir().join(format!("lplab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let env_file = dir.join("env.conf");
    std::fs::write(&env_file, "c_a = 0.2\n").unwrap();
    let flag_file = dir.join("flag.conf");
    std::fs::write(&flag_file, "c_a = 0.15\n").unwrap();
    let env = env_file.to_str();
    let out = lplab_env("predict --n 1000 --p 3", env);
    assert!(out.stdout.contains("# constants.c_a = 0.2\n"));
    let out = lplab_env(&format!("predict --n 1000 --p 3 --constants {}", flag_file.display()), env);
    assert!(out.stdout.contains("# constants.c_a = 0.15\n"));
    std::fs::write(&flag_file, "not_a_key = 1\n").unwrap();
    let out = lplab_env(&format!("predict --n 1000 --p 3 --constants {}", flag_file.display()), env);
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains("unknown key"));

    let path = dir.join("out.csv");
    let out = lplab(&format!("predict --n 1000 --p 3 --output {}", path.display()));
    assert_eq!((out.code, out.stdout.as_str()), (EXIT_OK, ""));
    assert!(std::fs::read_to_string(&path).unwrap().contains("LOW"));
    std::fs::remove_dir_all(&dir).unwrap();
}
