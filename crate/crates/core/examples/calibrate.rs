//! Scratch calibration probe (deleted before shipping).
use modeseek::density::*;
use modeseek::flow::*;
use modeseek::grid::GridSpec;
use modeseek::harness::*;
use modeseek::kde::*;
use modeseek::shift::*;
use std::time::Instant;

fn main() {
    let m = GaussianMixture::load("models/ref2d.json").unwrap();
    let bench = Workbench::prepare(m, &Default::default()).unwrap();
    println!("modes: {:?}", bench.modes.modes);
    println!("heights: {:?}", bench.modes.modes.iter().map(|p| bench.model.value(p)).collect::<Vec<_>>());
    println!("min_sep {:.3} kappa2 {:.4}", bench.modes.min_separation, bench.bounds.kappa2);
    let peak = bench.modes.max_value(&bench.model);

    // valley floors between each mode pair
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let a = &bench.modes.modes[i]; let b = &bench.modes.modes[j];
        let mut min_f: f64 = f64::INFINITY;
        for t in 0..=200 {
            let t = t as f64 / 200.0;
            min_f = min_f.min(bench.model.value(&[a[0]+(b[0]-a[0])*t, a[1]+(b[1]-a[1])*t]));
        }
        println!("valley {i}-{j}: {:.2}% of peak", 100.0 * min_f / peak);
    }

    let (lo, hi) = bench.model.suggested_box(3.0);
    let floor = 0.01 * peak;
    let grid = GridSpec::new(lo.clone(), hi.clone(), vec![75, 75]).unwrap();
    let starts: Vec<_> = grid.iter().filter(|p| bench.model.value(p) >= floor).collect();
    let t0 = Instant::now();
    let assigns = bench.oracle_assignments(&starts).unwrap();
    let resolved = assigns.iter().filter(|a| matches!(a, BasinAssignment::Mode(_))).count();
    println!("75x75 grid @1%: {} starts, {} resolved, oracle {:.1}s", starts.len(), resolved, t0.elapsed().as_secs_f64());

    // criterion 6a probe
    let sample = bench.model.sample(5000, 8).unwrap();
    let kde = Kde::new(sample, Bandwidth::Scott, KernelProfile::triweight()).unwrap();
    println!("scott h: {:.4}", kde.bandwidth());
    let stop = StopRule { f_improve_tol: 0.0, displacement_tol: 1e-10 * kde.bandwidth(), max_iters: 100_000 };
    let t0 = Instant::now();
    let mut within = 0; let mut res = 0; let mut steps = 0usize;
    for (x0, oa) in starts.iter().zip(&assigns) {
        if let BasinAssignment::Mode(o) = oa {
            res += 1;
            let t = mean_shift(&kde, x0, &stop).unwrap();
            steps += t.n_steps();
            if modeseek::point::dist(t.endpoint(), &bench.modes.modes[*o]) <= 0.1 { within += 1; }
        }
    }
    println!("mean shift: {within}/{res} within 0.1 ({:.2}%), avg steps {}, {:.1}s",
        100.0 * within as f64 / res as f64, steps / res, t0.elapsed().as_secs_f64());

    // criterion 6b probe: level-restricted mode hausdorff
    let s_level = 0.5 * bench.modes.modes.iter().map(|p| bench.model.value(p)).fold(f64::INFINITY, f64::min);
    for n in [2000usize, 20000] {
        let mut hs = Vec::new();
        for seed in 100..105u64 {
            let s = bench.model.sample(n, seed).unwrap();
            let kde = Kde::new(s, Bandwidth::Scott, KernelProfile::triweight()).unwrap();
            let mode_cfg = ModeFindConfig { mode_tol: 1e-8, escape_box: Some((lo.clone(), hi.clone())), ..Default::default() };
            match find_modes(&kde, &default_mode_seeds(&bench.model), &mode_cfg) {
                Ok(km) => {
                    let kept: Vec<_> = km.modes.iter().filter(|p| bench.model.value(p) >= s_level).cloned().collect();
                    if kept.is_empty() { println!("  n={n} seed={seed}: no in-level kde modes"); continue; }
                    hs.push(set_hausdorff(&kept, &bench.modes.modes));
                }
                _ => println!("  n={n} seed={seed}: find_modes failed"),
            }
        }
        hs.sort_by(f64::total_cmp);
        println!("n={n}: level-restricted hausdorff median {:.4} (all {:?})", hs[hs.len()/2], hs);
    }
}
