use latfb_core::channel::{pdp_to_taps, evolve_ar1, freq_response, doppler_alpha, PowerDelayProfile, DopplerParams};
use latfb_core::precoder::optimal_precoders;
use latfb_core::matcore::flag_distance;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() {
    let alpha = doppler_alpha(&DopplerParams { speed_kmh: 10.0, carrier_hz: 28e9, symbol_s: 75e-6 }).unwrap();
    let mut g = ChaCha12Rng::seed_from_u64(7);
    let mut ch = pdp_to_taps(&PowerDelayProfile::default_mmw(), 4, 400e6, &mut g).unwrap();
    let n_fft = 256usize;
    let idx: Vec<usize> = (0..4).map(|i| i * (n_fft - 1) / 3).collect();
    let omegas: Vec<f64> = idx.iter().map(|&k| {
        let w = 2.0 * std::f64::consts::PI * k as f64 / n_fft as f64;
        if w > std::f64::consts::PI { w - 2.0 * std::f64::consts::PI } else { w }
    }).collect();
    let grids = |ch: &latfb_core::TappedChannel| {
        let h: Vec<_> = omegas.iter().map(|&w| freq_response(ch, w)).collect();
        optimal_precoders(&h).unwrap().mats
    };
    let mut prev = grids(&ch);
    for t in 1..=10 {
        ch = evolve_ar1(&ch, alpha, &mut g).unwrap();
        let cur = grids(&ch);
        let vjump: f64 = prev.iter().zip(cur.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let fjump: f64 = prev.iter().zip(cur.iter()).map(|(a, b)| flag_distance(a, b).unwrap()).fold(0.0, f64::max);
        println!("t={t}: max |dV|_F = {vjump:.4}, max flag = {fjump:.4}");
        prev = cur;
    }
}
