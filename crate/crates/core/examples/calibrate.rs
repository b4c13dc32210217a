//! Prints the calibration metrics of the canonical plant configurations:
//! step-response settling time, quasi-static hysteresis loop area and width,
//! and zero-input creep drift after the saturation reset. With `--scan` it
//! sweeps inertia, damping and pressure lag around the Setup 1 values.

use anodec_core::plant::{plant_step, reset_to_saturation, PlantConfig, PlantState};

const DT: f64 = 0.01;

fn settling_time(cfg: &PlantConfig, u: f64) -> (f64, f64) {
    let mut s = PlantState::rest(cfg);
    let trace: Vec<f64> = (0..500)
        .map(|_| {
            s = plant_step(&s, u, DT, cfg).unwrap();
            s.phi
        })
        .collect();
    // settle relative to the value at 1.5 s, band 5% of the excursion
    let reference = trace[149];
    let band = 0.05 * reference.abs();
    let last_out = trace[..150].iter().rposition(|phi| (phi - reference).abs() > band);
    (last_out.map_or(0.0, |i| (i + 1) as f64 * DT), reference)
}

/// Triangle sweep of amplitude `amp` and `period`; returns (loop area, max branch gap).
fn hysteresis(cfg: &PlantConfig, amp: f64, period: f64) -> (f64, f64) {
    let n = (period / DT).round() as usize;
    let tri = |k: usize| {
        let x = (k % n) as f64 / n as f64;
        if x < 0.25 {
            4.0 * x * amp
        } else if x < 0.75 {
            amp * (2.0 - 4.0 * x)
        } else {
            amp * (4.0 * x - 4.0)
        }
    };
    let mut s = PlantState::rest(cfg);
    for k in 0..n {
        s = plant_step(&s, tri(k), DT, cfg).unwrap();
    }
    let mut area = 0.0;
    let mut up = vec![f64::NAN; 41];
    let mut down = vec![f64::NAN; 41];
    let mut u_prev = tri(n);
    for k in n..2 * n {
        let u = tri(k);
        s = plant_step(&s, u, DT, cfg).unwrap();
        area += s.phi * (u - u_prev);
        let bin = (((u + amp) / (2.0 * amp)) * 40.0).round() as usize;
        if u > u_prev {
            up[bin] = s.phi;
        } else {
            down[bin] = s.phi;
        }
        u_prev = u;
    }
    let gap = up
        .iter()
        .zip(&down)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    (area.abs(), gap)
}

fn creep(cfg: &PlantConfig) -> f64 {
    let mut s = reset_to_saturation(cfg);
    for _ in 0..150 {
        s = plant_step(&s, 0.0, DT, cfg).unwrap();
    }
    let start = s.phi;
    for _ in 0..500 {
        s = plant_step(&s, 0.0, DT, cfg).unwrap();
    }
    (s.phi - start).abs()
}

fn main() {
    if std::env::args().any(|a| a == "--scan") {
        scan();
        return;
    }
    for (name, cfg) in [("setup1", PlantConfig::setup1()), ("setup2", PlantConfig::setup2())] {
        println!("== {name}");
        for u in [-4.0, -2.0, 1.0, 2.0, 4.0] {
            let (ts, level) = settling_time(&cfg, u);
            println!("step u={u:+.1} bar: settles in {ts:.2} s at {level:+.3} rad");
        }
        let (area, gap) = hysteresis(&cfg, 6.0, 20.0);
        let (area_slow, _) = hysteresis(&cfg, 6.0, 40.0);
        println!("hysteresis loop area {area:.4} rad·bar (slow {area_slow:.4}), max branch gap {gap:.3} rad");
        println!("creep drift after reset {:.4} rad", creep(&cfg));
        let r = reset_to_saturation(&cfg);
        println!("reset state {r:?}");
    }
}

fn max_rate(cfg: &PlantConfig) -> f64 {
    let mut s = reset_to_saturation(cfg);
    let mut worst = 0.0f64;
    for k in 0..500 {
        let u = if (k / 100) % 2 == 0 { -6.0 } else { 6.0 };
        let next = plant_step(&s, u, DT, cfg).unwrap();
        worst = worst.max((next.phi - s.phi).abs() / DT);
        s = next;
    }
    worst
}

fn scan() {
    for h in [0.5, 1.0] {
        for d in [1.0, 1.5, 2.0, 2.5] {
            for tp in [0.1, 0.2, 0.3] {
                let cfg = PlantConfig { hysteresis_torque: h, damping: d, pressure_time_constant: tp, ..PlantConfig::setup1() };
                let (a, gap) = hysteresis(&cfg, 6.0, 20.0);
                let (b, _) = hysteresis(&cfg, 6.0, 40.0);
                let st: Vec<String> = [-4.0, -2.0, 1.0, 2.0, 4.0].iter().map(|&u| format!("{:.2}", settling_time(&cfg, u).0)).collect();
                println!(
                    "h {h} d {d} tp {tp}: area {a:.3} gap {gap:.3} change {:.3} creep {:.4} reset {:.3} rate {:.2} settle {st:?}",
                    (a - b).abs() / a,
                    creep(&cfg),
                    reset_to_saturation(&cfg).phi,
                    max_rate(&cfg)
                );
            }
        }
    }
}
