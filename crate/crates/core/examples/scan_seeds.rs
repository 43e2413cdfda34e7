use std::time::Instant;
use swapplan_core::energy::{distance, soc_cost, travel_time};
use swapplan_core::planner::{plan, PlanError};
use swapplan_core::scenario::{generate_random_scenario, RandomScenarioParams};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lo: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let hi: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let cap: Option<f64> = args.get(3).and_then(|s| s.parse().ok()).filter(|c| *c > 0.0);
    let semi_lo: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(100.0);
    let semi_hi: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(300.0);
    let field: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(1000.0);
    let mut good = vec![];
    let mut planned = 0u32;
    for seed in lo..hi {
        let mut params = RandomScenarioParams::default();
        params.config.detour_time_cap = cap;
        params.config.timeout = Some(8.0);
        params.semi_axis_range = (semi_lo, semi_hi);
        params.field_size = (field, field);
        let scenario = generate_random_scenario(seed, &params).unwrap();

        // Cheap filter: estimated swap count per uav in 1..=3.
        let mut ok = true;
        for (u, m) in scenario.uavs.iter().zip(&scenario.missions) {
            let mut cost = 0.0;
            let mut pos = &u.start_position;
            for wp in &m.waypoints {
                let d = distance(pos, wp).unwrap();
                cost += soc_cost(travel_time(d, u.speed).unwrap(), u.max_flight_time).unwrap();
                pos = wp;
            }
            let spare = u.initial_soc.value() - 0.2;
            let est = if cost <= spare { 0.0 } else { ((cost - spare) / 0.75).ceil() };
            if !(1.0..=3.0).contains(&est) { ok = false; break; }
        }
        if !ok { continue; }
        planned += 1;
        let t0 = Instant::now();
        match plan(&scenario) {
            Ok((p, stats)) => {
                let mut per_uav = vec![0usize; scenario.uavs.len()];
                for a in &p.actions {
                    let u = scenario.uavs.iter().position(|u| u.id == a.uav_id).unwrap();
                    per_uav[u] += 1;
                }
                let ok13 = per_uav.iter().all(|&c| (1..=3).contains(&c));
                println!(
                    "seed {seed}: OK {:.2}s actions={} per_uav={:?} {} expanded={} peak={}",
                    t0.elapsed().as_secs_f64(), p.actions.len(), per_uav,
                    if ok13 {"ALL-1..3"} else {"-"}, stats.expanded, stats.peak_open_size
                );
                if ok13 { good.push(seed); }
            }
            Err(PlanError::Timeout(_)) => println!("seed {seed}: TIMEOUT"),
            Err(_) => {}
        }
    }
    println!("planned {planned}; ALL-1..3 seeds: {good:?}");
}
