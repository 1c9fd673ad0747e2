use latfb_core::channel::{pdp_to_taps, evolve_ar1, freq_response, doppler_alpha, PowerDelayProfile, DopplerParams};
use latfb_core::precoder::optimal_precoders;
use latfb_core::snip::{snip_design, refine_design, SnipOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() {
    for speed in [10.0f64, 50.0] {
        let alpha = doppler_alpha(&DopplerParams { speed_kmh: speed, carrier_hz: 28e9, symbol_s: 75e-6 }).unwrap();
        let mut g = ChaCha12Rng::seed_from_u64(7);
        let mut ch = pdp_to_taps(&PowerDelayProfile::default_mmw(), 4, 400e6, &mut g).unwrap();
        let n_fft = 256usize;
        let idx: Vec<usize> = (0..4).map(|i| i * (n_fft - 1) / 3).collect();
        let omegas: Vec<f64> = idx.iter().map(|&k| {
            let w = 2.0 * std::f64::consts::PI * k as f64 / n_fft as f64;
            if w > std::f64::consts::PI { w - 2.0 * std::f64::consts::PI } else { w }
        }).collect();
        let mut prev_targets: Option<Vec<latfb_core::CMat>> = None;
        let mut nodes_of = |ch: &latfb_core::TappedChannel| -> Vec<(f64, latfb_core::CMat)> {
            let h: Vec<_> = omegas.iter().map(|&w| freq_response(ch, w)).collect();
            let grid = optimal_precoders(&h).unwrap();
            let aligned: Vec<latfb_core::CMat> = match &prev_targets {
                None => grid.mats,
                Some(prev) => prev.iter().zip(grid.mats.iter()).map(|(p, v)| latfb_core::precoder::align_precoder(p, v)).collect(),
            };
            prev_targets = Some(aligned.clone());
            omegas.iter().cloned().zip(aligned.into_iter()).collect()
        };
        let rep0 = match snip_design(&nodes_of(&ch), 3, &SnipOptions::default()) {
            Ok(r) => r, Err(e) => { println!("speed {speed}: COLD DESIGN failed: {e}"); continue; }
        };
        let mut params = rep0.params;
        println!("speed {speed}: alpha = {alpha:.4}, cold residual {:.2e} iters {}", rep0.residual, rep0.iterations);
        let mut max_drift: f64 = 0.0; let mut sum_drift = 0.0; let mut iters_sum = 0usize;
        let frames = 30;
        for t in 1..=frames {
            ch = evolve_ar1(&ch, alpha, &mut g).unwrap();
            let rep = match refine_design(&params, &nodes_of(&ch), &SnipOptions::default()) { Ok(r) => r, Err(e) => { println!("  t={t}: refit error: {e}"); break; } };
            let mut drift: f64 = 0.0;
            for (a, b) in params.kappas.iter().zip(rep.params.kappas.iter()) {
                drift = drift.max((a - b).norm());
            }
            let rdrift = (&params.residue - &rep.params.residue).norm();
            if t <= 3 || t == frames {
                println!("  t={t}: kappa drift {drift:.4}, residue drift {rdrift:.4}, refit iters {}, residual {:.2e}", rep.iterations, rep.residual);
            }
            max_drift = max_drift.max(drift); sum_drift += drift; iters_sum += rep.iterations;
            params = rep.params;
        }
        println!("  mean kappa drift/frame {:.4}, max {:.4}, mean refit iters {:.1}", sum_drift / frames as f64, max_drift, iters_sum as f64 / frames as f64);
    }
}
