use latfb_core::harness::{run_simulation, SimConfig};

fn main() {
    for speed in [10.0, 50.0] {
        for (step, sigma) in [(0.05, 1.5), (0.05, 1.3), (0.1, 1.3), (0.05, 1.2), (0.02, 1.2)] {
            let cfg = SimConfig::from_toml(&format!(
                "m = 4\nn_fft = 64\nn_pilots = 4\nlattice_order = 3\nn_frames = 30\nn_seeds = 20\n\
                 speed_kmh = [{speed}]\nsnr_db = [10.0]\nschemes = [\"lattice\"]\n\
                 initial_step = {step}\nsigma = {sigma}\nbootstrap = \"cold\"\n")).unwrap();
            let res = run_simulation(&cfg, 0xACC9).unwrap();
            let median = |frame: u64| -> f64 {
                let mut v: Vec<f64> = res.kappa.iter().filter(|r| r.frame == frame).map(|r| r.kappa_err).collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v[v.len() / 2]
            };
            let (e1, e15, e30) = (median(1), median(15), median(30));
            println!("speed {speed} step {step:<5} sigma {sigma}: err(1) {e1:.3} err(15) {e15:.3} err(30) {e30:.3} ratio {:.3}", e30 / e1);
        }
    }
}
