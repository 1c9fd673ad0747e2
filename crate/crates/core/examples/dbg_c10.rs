use latfb_core::channel::*;
use latfb_core::precoder::*;
use latfb_core::snip::*;
use latfb_core::harness::{equispaced_indices, subcarrier_omega};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() {
    let n_fft = 256usize;
    let m = 4;
    let node_idx = equispaced_indices(4, n_fft).unwrap();
    let omegas: Vec<f64> = node_idx.iter().map(|&k| subcarrier_omega(k, n_fft)).collect();
    let alpha = doppler_alpha(&DopplerParams { speed_kmh: 10.0, carrier_hz: 28e9, symbol_s: 75e-6 }).unwrap();
    let mut failures = 0;
    for seed in 0..20u64 {
        let mut g = ChaCha12Rng::seed_from_u64(seed * 7 + 1);
        let mut ch = pdp_to_taps(&PowerDelayProfile::default_mmw(), m, 400e6, &mut g).unwrap();
        let mut prev: Option<Vec<latfb_core::CMat>> = None;
        let mut nodes_of = |ch: &TappedChannel| -> Vec<(f64, latfb_core::CMat)> {
            let h: Vec<_> = omegas.iter().map(|&w| freq_response(ch, w)).collect();
            let v = optimal_precoders(&h).unwrap().mats;
            let aligned: Vec<_> = match &prev {
                None => v,
                Some(p) => p.iter().zip(v.iter()).map(|(a, b)| align_precoder(a, b)).collect(),
            };
            prev = Some(aligned.clone());
            omegas.iter().cloned().zip(aligned.into_iter()).collect()
        };
        let mut params = match snip_design(&nodes_of(&ch), 3, &SnipOptions::default()) {
            Ok(r) => r.params,
            Err(e) => { println!("seed {seed}: cold fail {e}"); failures += 1; continue; }
        };
        for t in 1..=60 {
            ch = evolve_ar1(&ch, alpha, &mut g).unwrap();
            match refine_design(&params, &nodes_of(&ch), &SnipOptions::default()) {
                Ok(r) => params = r.params,
                Err(e) => { println!("seed {seed} frame {t}: {e}"); failures += 1; break; }
            }
        }
    }
    println!("failures: {failures}/20 trajectories");
}
