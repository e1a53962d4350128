//! Acceptance criteria AC1-AC8. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use edgemorph::edges::{edge_count, extract_edges, segmentation_edges};
use edgemorph::eval::{depth_metrics, Crop};
use edgemorph::io::{read_mask_pgm_from, read_pfm_from, write_mask_pgm_to, write_pfm_to};
use edgemorph::losses::{morph_loss, proxy_loss, reconstruction_loss, stereo_losses, StereoLossInputs, WarpDirection};
use edgemorph::morph::local_optimality_with_pairs;
use edgemorph::occlusion::{brute_force_occlusion, occlusion_mask};
use edgemorph::pipeline::{align_once, lc_against, run_pipeline, PipelineConfig};
use edgemorph::synth::{generate, perturb_edges, random_scene};
use edgemorph::{BinaryMask, Map, Map64, OcclusionParams, PairSet, PixelCoord, Thresholds, Unit, View};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn offset_for(i: u64) -> i64 {
    1 + (i % 8) as i64
}

fn ac1() -> Outcome {
    let th = Thresholds::default();
    let start = Instant::now();
    let (mut reduced, mut monotone) = (0, 0);
    let mut ratios = Vec::new();
    for i in 0..20u64 {
        let f = generate(&random_scene(i)).unwrap();
        let disp = perturb_edges(&f.disp_gt, &f.seg_gt, offset_for(i), 0, i).unwrap();
        let ts = segmentation_edges(&f.seg_gt, th.k1).unwrap();
        let first = align_once(&disp, &ts, &th).unwrap();
        let second = align_once(&first.morphed, &ts, &th).unwrap();
        let lc_second = lc_against(&first.pairs, &second.morphed, th.k1).unwrap();
        reduced += usize::from(first.lc_after < first.lc_before);
        monotone += usize::from(lc_second <= first.lc_after);
        ratios.push(1.0 - first.lc_after / first.lc_before);
    }
    let secs = start.elapsed().as_secs_f64();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let ok = reduced == 20 && mean >= 0.5 && monotone == 20 && secs < 10.0;
    (ok, format!("reduced {reduced}/20, mean reduction {:.1}%, second morph no increase {monotone}/20, {secs:.2}s", mean * 100.0))
}

fn ac2() -> Outcome {
    let th = Thresholds::default();
    let disp = Map64::from_fn(48, 32, Unit::DisparityNormalized, |x, _| 0.2 * x as f64).unwrap();
    let (q, p) = (PixelCoord::new(20, 16), PixelCoord::new(24, 16));
    let pairs = PairSet::from_pairs([(q, p)]);
    let (morphed, report) = local_optimality_with_pairs(&disp, &pairs, &th).unwrap();
    let ratio = report.gradient_ratio_samples[0];
    let within = (ratio / 0.5 - 1.0).abs() <= 0.10;
    let contains = extract_edges(&morphed, th.morphed_edge_threshold()).unwrap().contains(q);
    (within && contains, format!("gradient ratio {ratio:.4} (target 0.5 +-10%), q in morphed edges at t/(1+t)*k1: {contains}"))
}

fn random_row(rng: &mut ChaCha8Rng) -> Map {
    let width = rng.gen_range(2..=128);
    let mut row = Vec::with_capacity(width);
    while row.len() < width {
        let len = rng.gen_range(1..=24);
        let d = rng.gen_range(0..=160) as f32 * 0.25;
        row.extend(std::iter::repeat_n(d, len));
    }
    row.truncate(width);
    Map::from_vec(width, 1, row, Unit::DisparityPx).unwrap()
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let zero = OcclusionParams { search_width: None, k3: 0.0, view: View::Left };
    let matches = (0..100)
        .filter(|_| {
            let row = random_row(&mut rng);
            occlusion_mask(&row, &zero).unwrap() == brute_force_occlusion(&row)
        })
        .count();
    let step = Map::from_fn(100, 1, Unit::DisparityPx, |x, _| if x < 50 { 5.0 } else { 20.0 }).unwrap();
    let m = occlusion_mask(&step, &OcclusionParams { k3: 0.5, ..zero }).unwrap();
    let band: Vec<usize> = (0..100).filter(|&x| m.at(x, 0)).collect();
    let band_ok = band == (36..=49).collect::<Vec<_>>();
    (matches == 100 && band_ok, format!("oracle equality {matches}/100, step band {{36..49}} reproduced: {band_ok}"))
}

fn ac4() -> Outcome {
    let th = Thresholds::default();
    let mut worst_lr: f64 = 0.0;
    let (mut gate_ok, mut opened, mut neutral) = (0, 0usize, 0);
    let n = 20u64;
    for i in 0..n {
        let f = generate(&random_scene(i)).unwrap();
        let perfect = StereoLossInputs {
            left: &f.left,
            right: &f.right,
            disp: &f.disp_gt,
            morphed: None,
            proxy: None,
            mask: &f.occluded_gt,
        };
        worst_lr = worst_lr.max(stereo_losses(&perfect, &th).unwrap().1.mean_lr);

        // Gates: a misaligned prediction against the true map as both targets.
        let pred = perturb_edges(&f.disp_gt, &f.seg_gt, offset_for(i), 0, i).unwrap();
        let lr = |d: &Map| reconstruction_loss(&f.left, &f.right, d, WarpDirection::RightToLeft, th.alpha, Some(&f.occluded_gt)).unwrap();
        let (lr_pred, lr_gt) = (lr(&pred), lr(&f.disp_gt));
        let lg = morph_loss(&pred, &f.disp_gt, &f.left, &lr_pred, &lr_gt).unwrap();
        let lp = proxy_loss(&pred, &f.disp_gt, &lr_pred, &lr_gt).unwrap();
        let closed: Vec<usize> = (0..lr_pred.len()).filter(|&k| lr_gt.data()[k] >= lr_pred.data()[k]).collect();
        if closed.iter().all(|&k| lg.data()[k] == 0.0 && lp.data()[k] == 0.0) {
            gate_ok += 1;
        }
        opened += lp.data().iter().filter(|&&v| v > 0.0).count();

        // Masked-pixel neutrality with fixed targets.
        let mask = occlusion_mask(&pred, &OcclusionParams { search_width: th.search_width, k3: th.k3, view: View::Left }).unwrap();
        let run = |d: &Map| {
            let inputs = StereoLossInputs {
                left: &f.left,
                right: &f.right,
                disp: d,
                morphed: Some(&f.disp_gt),
                proxy: Some(&f.disp_gt),
                mask: &mask,
            };
            stereo_losses(&inputs, &th).unwrap().1.mean_joint
        };
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let mut shaken = pred.clone();
        for y in 0..pred.height() {
            for x in 0..pred.width() {
                if mask.at(x, y) {
                    shaken.set(x, y, rng.gen_range(0.0..40.0)).unwrap();
                }
            }
        }
        if mask.count() > 0 && run(&pred).to_bits() == run(&shaken).to_bits() {
            neutral += 1;
        }
    }
    let ok = worst_lr <= 1e-3 && gate_ok == n && opened > 0 && neutral == n;
    (
        ok,
        format!(
            "max mean l_r at true disparity {worst_lr:.2e}, closed gates exactly zero {gate_ok}/{n} ({opened} open pixels), masked perturbation bit-identical {neutral}/{n}"
        ),
    )
}

fn naive_metrics(pred: &Map64, gt: &Map64) -> [f64; 7] {
    let mut s = [0.0; 7];
    let mut n = 0.0;
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            let g = gt.at(x, y);
            if !(g > 0.0 && g <= 80.0) {
                continue;
            }
            let p = pred.at(x, y).clamp(1e-3, 80.0);
            n += 1.0;
            s[0] += (p - g).abs() / g;
            s[1] += (p - g) * (p - g) / g;
            s[2] += (p - g) * (p - g);
            s[3] += (p.ln() - g.ln()).powi(2);
            let r = f64::max(p / g, g / p);
            s[4] += f64::from(r < 1.25);
            s[5] += f64::from(r < 1.25f64.powi(2));
            s[6] += f64::from(r < 1.25f64.powi(3));
        }
    }
    let mut m = s.map(|v| v / n);
    m[2] = m[2].sqrt();
    m[3] = m[3].sqrt();
    m
}

fn ac5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut agree = 0;
    for _ in 0..50 {
        let (w, h) = (rng.gen_range(1..=32), rng.gen_range(1..=32));
        let mut gt = Map64::from_fn(w, h, Unit::DepthM, |_, _| rng.gen_range(0.5..85.0)).unwrap();
        gt.set(0, 0, 10.0).unwrap();
        let pred = Map64::from_fn(w, h, Unit::DepthM, |_, _| rng.gen_range(0.0..90.0)).unwrap();
        let row = depth_metrics(&pred, &gt, 80.0, Crop::None, None).unwrap();
        let err = row.values().iter().zip(naive_metrics(&pred, &gt)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
        agree += usize::from(err <= 1e-9);
    }
    let gt = Map64::from_fn(16, 16, Unit::DepthM, |x, y| 1.0 + (x + 16 * y) as f64 * 0.125).unwrap();
    let perfect = depth_metrics(&gt, &gt, 80.0, Crop::None, None).unwrap().values() == [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
    let scaled = gt.map(Unit::DepthM, |v| 1.25 * v).unwrap();
    let r = depth_metrics(&scaled, &gt, 80.0, Crop::None, None).unwrap();
    let ratio_ok = r.d1 == 0.0 && r.d2 == 1.0 && r.abs_rel == 0.25;
    (
        agree == 50 && perfect && ratio_ok,
        format!("oracle agreement {agree}/50 (max dev {worst:.1e}), perfect row exact: {perfect}, 1.25x row exact: {ratio_ok}"),
    )
}

fn ac6() -> Outcome {
    let (mut no_worse, mut abs_better) = (0, 0);
    for i in 0..20u64 {
        let cfg = PipelineConfig { offset_px: offset_for(i), perturb_seed: i, ..Default::default() };
        let r = run_pipeline(&random_scene(100 + i), &cfg).unwrap().report;
        no_worse += usize::from(r.metrics_no_worse);
        abs_better += usize::from(r.abs_rel_improved);
    }
    (no_worse == 20 && abs_better >= 18, format!("all seven no worse {no_worse}/20, AbsRel improved {abs_better}/20"))
}

fn ac7() -> Outcome {
    let mut wins = 0;
    let mut detail = Vec::new();
    for seed in 0..20u64 {
        let f = generate(&random_scene(seed)).unwrap();
        let bled = perturb_edges(&f.disp_gt, &f.seg_gt, 0, 6, seed).unwrap();
        let (clean, bleed) = (edge_count(&f.disp_gt, 0.11).unwrap(), edge_count(&bled, 0.11).unwrap());
        wins += usize::from(bleed > clean);
        if seed < 3 {
            detail.push(format!("{clean}->{bleed}"));
        }
    }
    (wins == 20, format!("bleeding count exceeds clean {wins}/20 (e.g. {})", detail.join(", ")))
}

fn ac8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut pfm_ok, mut pgm_ok) = (0, 0);
    for i in 0..1000 {
        let (w, h) = (rng.gen_range(1..=64), rng.gen_range(1..=64));
        let scale = if i % 3 == 0 { 1e30 } else { 100.0 };
        let map = Map::from_fn(w, h, Unit::Unitless, |_, _| (rng.gen_range(-1.0..1.0) * scale) as f32).unwrap();
        let mut bytes = Vec::new();
        write_pfm_to(&map, &mut bytes).unwrap();
        let back: Map = read_pfm_from(&bytes).unwrap();
        let same_bits = back.shape() == map.shape() && back.data().iter().zip(map.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        pfm_ok += usize::from(same_bits);

        let mask = BinaryMask::from_fn(w, h, |_, _| rng.gen_bool(0.5)).unwrap();
        let mut bytes = Vec::new();
        write_mask_pgm_to(&mask, &mut bytes).unwrap();
        pgm_ok += usize::from(read_mask_pgm_from(&bytes).unwrap() == mask);
    }
    (pfm_ok == 1000 && pgm_ok == 1000, format!("PFM identical {pfm_ok}/1000, PGM identical {pgm_ok}/1000"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC1", "consistency reduction", ac1),
        ("AC2", "local optimality", ac2),
        ("AC3", "occlusion oracle", ac3),
        ("AC4", "loss zeroing", ac4),
        ("AC5", "metric oracle", ac5),
        ("AC6", "morph at inference", ac6),
        ("AC7", "thinness", ac7),
        ("AC8", "format round-trips", ac8),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let (ok, detail) = check();
        println!("{id} {} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
