//! End-to-end checks of the binary: exit codes, file outputs, replay.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

const RATES_HEADER: &str =
    "scheme,speed_kmh,snr_db,seed,frame,rate_bps_hz,bits,frob_err,flag_err_mean";

fn latfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latfb")).args(args).output().expect("binary runs")
}

fn desk_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("desk.toml");
    fs::write(
        &path,
        "m = 2\nn_fft = 16\nn_pilots = 4\nlattice_order = 3\nn_frames = 3\nn_seeds = 2\n\
         speed_kmh = [10.0]\nsnr_db = [10.0]\n",
    )
    .unwrap();
    path
}

#[test]
fn simulate_track_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk_config(dir.path());
    let out = dir.path().join("results");

    let sim = latfb(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(sim.status.success(), "stderr: {}", String::from_utf8_lossy(&sim.stderr));

    let rates = fs::read_to_string(out.join("rates.csv")).unwrap();
    assert!(rates.starts_with(RATES_HEADER));
    assert!(rates.lines().count() > 1);

    // every transcript the simulation wrote must replay cleanly
    let transcripts: Vec<_> = fs::read_dir(out.join("transcripts"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert!(!transcripts.is_empty());
    for t in &transcripts {
        let trk = latfb(&["track", "--transcript", t.to_str().unwrap()]);
        assert!(trk.status.success(), "replay failed for {}", t.display());
        assert!(String::from_utf8_lossy(&trk.stdout).contains("transcript OK"));
    }

    // tampering flips a hex digit in some frame line; replay must fail
    // with the numerical-failure exit code
    let victim = &transcripts[0];
    let text = fs::read_to_string(victim).unwrap();
    let tampered: Vec<String> = text
        .lines()
        .map(|l| {
            if let Some(rest) = l.strip_prefix("frame 1 ") {
                let flipped: String = rest
                    .chars()
                    .rev()
                    .enumerate()
                    .map(|(i, c)| if i == 0 { if c == '0' { '1' } else { '0' } } else { c })
                    .collect::<Vec<_>>()
                    .into_iter()
                    .rev()
                    .collect();
                format!("frame 1 {flipped}")
            } else {
                l.to_string()
            }
        })
        .collect();
    let bad_path = dir.path().join("tampered.txt");
    fs::write(&bad_path, tampered.join("\n") + "\n").unwrap();
    let bad = latfb(&["track", "--transcript", bad_path.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&bad.stderr));

    // report over the persisted results
    let summary_dir = dir.path().join("summary");
    let rep = latfb(&[
        "report",
        "--in",
        out.to_str().unwrap(),
        "--out",
        summary_dir.to_str().unwrap(),
    ]);
    assert!(rep.status.success());
    let summary = fs::read_to_string(summary_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("scheme,speed_kmh,snr_db,n_seeds,mean_rate_bps_hz"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "m = 2\nunknown_knob = true\n").unwrap();
    let out = latfb(&[
        "simulate",
        "--config",
        bad.to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // missing file is also a configuration error
    let missing = latfb(&[
        "simulate",
        "--config",
        dir.path().join("nope.toml").to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        dir.path().join("y").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(2));

    let rep = latfb(&[
        "report",
        "--in",
        dir.path().join("empty").to_str().unwrap(),
        "--out",
        dir.path().join("z").to_str().unwrap(),
    ]);
    assert_eq!(rep.status.code(), Some(2));
}

#[test]
fn design_from_nodes_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = ChaCha12Rng::seed_from_u64(3);

    // samples of an actual order-3 lattice filter: representable, so the
    // fit must converge and the output record must parse back
    let truth = latfb_core::lattice::random_stable_params(2, 3, 0.5, &mut g);
    let nodes: Vec<(f64, latfb_core::CMat)> = [-2.0, -0.4, 1.3, 2.8]
        .iter()
        .map(|&w| (w, latfb_core::lattice::frequency_response(&truth, w).unwrap()))
        .collect();
    let nodes_path = dir.path().join("nodes.txt");
    let mut buf = Vec::new();
    latfb_core::serial::write_nodes(&mut buf, &nodes).unwrap();
    fs::write(&nodes_path, buf).unwrap();

    let out_path = dir.path().join("filter.txt");
    let run = latfb(&[
        "design",
        "--nodes",
        nodes_path.to_str().unwrap(),
        "--order",
        "3",
        "--out",
        out_path.to_str().unwrap(),
        "--tol",
        "1e-4",
    ]);
    assert!(run.status.success(), "stderr: {}", String::from_utf8_lossy(&run.stderr));
    let params = latfb_core::serial::read_lattice_params(std::io::BufReader::new(
        fs::File::open(&out_path).unwrap(),
    ))
    .unwrap();
    assert_eq!(params.order(), 3);
    assert!(latfb_core::lattice::stability_check(&params));

    // an impossible fit (two far-apart samples, constant filter) exits 3
    let far: Vec<(f64, latfb_core::CMat)> = vec![
        (0.0, latfb_core::matcore::random_unitary(2, &mut g)),
        (2.0, latfb_core::matcore::random_unitary(2, &mut g)),
    ];
    let far_path = dir.path().join("far.txt");
    let mut buf = Vec::new();
    latfb_core::serial::write_nodes(&mut buf, &far).unwrap();
    fs::write(&far_path, buf).unwrap();
    let fail = latfb(&[
        "design",
        "--nodes",
        far_path.to_str().unwrap(),
        "--order",
        "1",
        "--out",
        dir.path().join("nope.txt").to_str().unwrap(),
        "--tol",
        "1e-9",
    ]);
    assert_eq!(fail.status.code(), Some(3));
}
