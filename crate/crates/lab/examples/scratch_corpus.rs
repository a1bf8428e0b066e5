use ddlab_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interior_peak(spec: &BumpCurveSpec) -> Option<(f64, f64)> {
    let n = 30_000usize;
    let v: Vec<f64> = (0..=n).map(|i| spec.mean(spec.t_max * i as f64 / n as f64)).collect();
    let mut best: Option<(usize, f64)> = None;
    for i in 1..n {
        if v[i] >= v[i-1] && v[i] >= v[i+1] && best.map_or(true, |(_, bv)| v[i] > bv) {
            best = Some((i, v[i]));
        }
    }
    let (idx, peak) = best?;
    let left_min = v[..idx].iter().copied().fold(f64::INFINITY, f64::min);
    let right_min = v[idx..].iter().copied().fold(f64::INFINITY, f64::min);
    Some((spec.t_max * idx as f64 / n as f64, peak - left_min.max(right_min)))
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let t_max = 100.0;
    let msw: f64 = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(20.0);
    let cfg = DetectorConfig { sg: Some(SgConfig { window: 11, order: 3 }), min_segment_width: msw, ..DetectorConfig::default() };
    let mut missed = vec![];
    let mut fp = 0;
    let mut n_b = 0;
    while n_b < 500 {
        let spec = BumpCurveSpec {
            decay_scale: rng.gen_range(8.0..16.0),
            bump_amplitude: rng.gen_range(0.15..0.6),
            bump_center: rng.gen_range(0.4..0.6) * t_max,
            bump_width: rng.gen_range(6.0..12.0),
            floor: rng.gen_range(0.0..0.3),
            noise_sigma: 0.0,
            n_points: 301, t_max, seed: rng.gen(),
        };
        let Some((peak_t, prom)) = interior_peak(&spec) else { continue };
        if prom < 0.1 { continue; }
        let sigma = prom / 12.0;
        let bspec = BumpCurveSpec { noise_sigma: sigma, ..spec };
        n_b += 1;
        let curve = gen_bump(&bspec).unwrap();
        let r = detect(&curve, curve.span(), &cfg).unwrap();
        if r.pattern != Pattern::DoubleDescent {
            missed.push((bspec, peak_t, prom, r.pattern, r.criticals.clone()));
        }
        // paired monotone
        let mspec = (rng.gen_range(10.0..50.0), rng.gen_range(0.0..0.3), sigma, rng.gen::<u64>());
        let mc = gen_monotone(mspec.0, mspec.1, mspec.2, 301, t_max, mspec.3).unwrap();
        let mr = detect(&mc, mc.span(), &cfg).unwrap();
        if mr.pattern == Pattern::DoubleDescent {
            fp += 1;
            if fp <= 8 {
                let c = mr.criticals.iter().map(|c| format!("{:?}@{:.0} p={:.3}", c.kind, c.t, c.prominence)).collect::<Vec<_>>().join(", ");
                println!("FP: tau={:.0} floor={:.2} sigma={:.3} -> crit [{c}] t_s={:?}", mspec.0, mspec.1, mspec.2, mr.t_s);
            }
        }
    }
    println!("missed {} / 500, fp {}", missed.len(), fp);
    for (s, pt, prom, pat, crit) in missed.iter().take(15) {
        let c = crit.iter().map(|c| format!("{:?}@{:.0} p={:.3}", c.kind, c.t, c.prominence)).collect::<Vec<_>>().join(", ");
        println!("MISS {pat:?}: tau={:.0} A={:.2} tp={:.0} w={:.0} c={:.2} sig={:.3} peak@{:.0} prom={:.2} -> [{c}]",
            s.decay_scale, s.bump_amplitude, s.bump_center, s.bump_width, s.floor, s.noise_sigma, pt, prom);
    }
}
