//! CSV persistence and the summary report.
//!
//! The rates file carries exactly the documented schema
//! (`scheme,speed_kmh,snr_db,seed,frame,rate_bps_hz,bits,frob_err,flag_err_mean`)
//! with LF line endings and 17-significant-digit decimals, so identical
//! runs produce byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::feedback::write_transcript;
use crate::harness::RunResult;
use crate::textfmt::{fmt_f64, parse_f64};

pub const RATES_HEADER: &str =
    "scheme,speed_kmh,snr_db,seed,frame,rate_bps_hz,bits,frob_err,flag_err_mean";
pub const KAPPA_HEADER: &str = "scheme,speed_kmh,seed,frame,kappa_err";
pub const FLAG_HEADER: &str = "scheme,speed_kmh,seed,subcarrier,flag_err";
pub const SUMMARY_HEADER: &str =
    "scheme,speed_kmh,snr_db,n_seeds,mean_rate_bps_hz,ci95_lo,ci95_hi";

/// Write rates/kappa/flag CSVs plus one transcript file per tracked
/// (scheme, speed, seed) into `dir`.
pub fn write_outputs(res: &RunResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut rates = String::from(RATES_HEADER);
    rates.push('\n');
    for r in &res.rates {
        rates.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.scheme,
            fmt_f64(r.speed_kmh),
            fmt_f64(r.snr_db),
            r.seed,
            r.frame,
            fmt_f64(r.rate_bps_hz),
            r.bits,
            fmt_f64(r.frob_err),
            fmt_f64(r.flag_err_mean),
        ));
    }
    fs::write(dir.join("rates.csv"), rates)?;

    let mut kappa = String::from(KAPPA_HEADER);
    kappa.push('\n');
    for r in &res.kappa {
        kappa.push_str(&format!(
            "{},{},{},{},{}\n",
            r.scheme,
            fmt_f64(r.speed_kmh),
            r.seed,
            r.frame,
            fmt_f64(r.kappa_err),
        ));
    }
    fs::write(dir.join("kappa.csv"), kappa)?;

    let mut flag = String::from(FLAG_HEADER);
    flag.push('\n');
    for r in &res.flag_profile {
        flag.push_str(&format!(
            "{},{},{},{},{}\n",
            r.scheme,
            fmt_f64(r.speed_kmh),
            r.seed,
            r.subcarrier,
            fmt_f64(r.flag_err),
        ));
    }
    fs::write(dir.join("flag_profile.csv"), flag)?;

    if !res.transcripts.is_empty() {
        let tdir = dir.join("transcripts");
        fs::create_dir_all(&tdir)?;
        for nt in &res.transcripts {
            let mut buf = Vec::new();
            write_transcript(&mut buf, &nt.transcript)?;
            fs::write(tdir.join(&nt.name), buf)?;
        }
    }
    Ok(())
}

/// One parsed row of `rates.csv`.
struct ParsedRate {
    scheme: String,
    speed: f64,
    snr: f64,
    seed: u64,
    rate: f64,
}

fn parse_rates_csv(text: &str) -> Result<Vec<ParsedRate>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RATES_HEADER => {}
        other => {
            return Err(Error::Parse(format!("rates.csv: bad header {other:?}")));
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Parse(format!("rates.csv row {}: {} fields", i + 2, f.len())));
        }
        rows.push(ParsedRate {
            scheme: f[0].to_string(),
            speed: parse_f64(f[1])?,
            snr: parse_f64(f[2])?,
            seed: f[3].parse().map_err(|_| Error::Parse("bad seed".into()))?,
            rate: parse_f64(f[5])?,
        });
    }
    Ok(rows)
}

/// Aggregate persisted rates into per-(scheme, speed, SNR) means with a
/// 95% normal-approximation interval over seeds, written to
/// `summary.csv` and echoed as a table on stdout.
pub fn report(in_dir: &Path, out_dir: &Path) -> Result<()> {
    let text = fs::read_to_string(in_dir.join("rates.csv"))?;
    let rows = parse_rates_csv(&text)?;
    if rows.is_empty() {
        return Err(Error::InvalidInput("rates.csv has no data rows".into()));
    }

    // group in order of first appearance; key includes exact float bits
    type Key = (String, u64, u64);
    let mut order: Vec<Key> = Vec::new();
    let mut per_seed: Vec<Vec<(u64, f64, usize)>> = Vec::new(); // (seed, sum, count)
    for r in &rows {
        let key: Key = (r.scheme.clone(), r.speed.to_bits(), r.snr.to_bits());
        let gi = match order.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                order.push(key);
                per_seed.push(Vec::new());
                order.len() - 1
            }
        };
        match per_seed[gi].iter_mut().find(|(s, _, _)| *s == r.seed) {
            Some((_, sum, count)) => {
                *sum += r.rate;
                *count += 1;
            }
            None => per_seed[gi].push((r.seed, r.rate, 1)),
        }
    }

    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "{:<12} {:>10} {:>8} {:>8} {:>12} {:>12} {:>12}",
        "scheme", "speed", "snr_db", "seeds", "mean_rate", "ci95_lo", "ci95_hi"
    )?;
    for (key, seeds) in order.iter().zip(per_seed.iter()) {
        let means: Vec<f64> = seeds.iter().map(|(_, sum, n)| sum / *n as f64).collect();
        let n = means.len() as f64;
        let mean = means.iter().sum::<f64>() / n;
        let var = if means.len() > 1 {
            means.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let half = 1.96 * (var / n).sqrt();
        let (speed, snr) = (f64::from_bits(key.1), f64::from_bits(key.2));
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            key.0,
            fmt_f64(speed),
            fmt_f64(snr),
            means.len(),
            fmt_f64(mean),
            fmt_f64(mean - half),
            fmt_f64(mean + half),
        ));
        writeln!(
            stdout,
            "{:<12} {:>10} {:>8} {:>8} {:>12.4} {:>12.4} {:>12.4}",
            key.0,
            speed,
            snr,
            means.len(),
            mean,
            mean - half,
            mean + half
        )?;
    }
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("summary.csv"), summary)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_simulation, SimConfig};

    #[test]
    fn outputs_are_byte_deterministic() {
        let cfg = SimConfig::from_toml(
            "m = 2\nn_fft = 16\nn_pilots = 4\nlattice_order = 3\nn_frames = 3\nn_seeds = 2\n\
             speed_kmh = [10.0]\nsnr_db = [5.0, 15.0]\n",
        )
        .unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_outputs(&run_simulation(&cfg, 42).unwrap(), d1.path()).unwrap();
        write_outputs(&run_simulation(&cfg, 42).unwrap(), d2.path()).unwrap();
        for name in ["rates.csv", "kappa.csv", "flag_profile.csv"] {
            let a = fs::read(d1.path().join(name)).unwrap();
            let b = fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} must be byte-identical");
            assert!(!a.is_empty());
        }
        let t1 = fs::read_dir(d1.path().join("transcripts")).unwrap().count();
        assert!(t1 > 0);
    }

    #[test]
    fn rates_header_and_line_endings() {
        let cfg = SimConfig::from_toml(
            "m = 2\nn_fft = 8\nn_pilots = 2\nlattice_order = 1\nn_frames = 1\nn_seeds = 1\n\
             speed_kmh = [10.0]\nsnr_db = [10.0]\nschemes = [\"perfect\", \"lattice\"]\n",
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&run_simulation(&cfg, 1).unwrap(), dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
        assert!(text.starts_with(RATES_HEADER));
        assert!(!text.contains('\r'), "LF endings only");
        // one data row per (scheme, frame, snr)
        assert_eq!(text.lines().count(), 1 + 2);
    }

    #[test]
    fn report_round_trips() {
        let cfg = SimConfig::from_toml(
            "m = 2\nn_fft = 16\nn_pilots = 4\nlattice_order = 3\nn_frames = 3\nn_seeds = 3\n\
             speed_kmh = [10.0]\nsnr_db = [0.0, 10.0]\n",
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&run_simulation(&cfg, 4).unwrap(), dir.path()).unwrap();
        let out1 = tempfile::tempdir().unwrap();
        let out2 = tempfile::tempdir().unwrap();
        report(dir.path(), out1.path()).unwrap();
        report(dir.path(), out2.path()).unwrap();
        let a = fs::read(out1.path().join("summary.csv")).unwrap();
        let b = fs::read(out2.path().join("summary.csv")).unwrap();
        assert_eq!(a, b, "re-report of persisted results equals original");
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with(SUMMARY_HEADER));
        // 2 schemes x 1 speed x 2 snrs... all five schemes by default
        assert_eq!(text.lines().count(), 1 + 5 * 2);
    }

    #[test]
    fn report_rejects_missing_or_malformed() {
        let dir = tempfile::tempdir().unwrap();
        assert!(report(dir.path(), dir.path()).is_err());
        fs::write(dir.path().join("rates.csv"), "bogus\n").unwrap();
        assert!(report(dir.path(), dir.path()).is_err());
    }
}
