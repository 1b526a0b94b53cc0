//! Simulates threshold-model events on synthetic seasonal temperatures,
//! fits the threshold and standard models, and prints retrodictive checks.

use std::time::Instant;

use threshold_survival::inference::FitSettings;
use threshold_survival::phenology::{seasonal_series, simulate_events, SeasonalConfig};
use threshold_survival::*;

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let arg = |i: usize, d: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let seed = arg(1, 7.0) as u64;
    let integration_time = arg(2, HmcConfig::default().integration_time);
    let series = seasonal_series(1987, 28, &SeasonalConfig::default(), seed);
    let truth = ParameterBlock::from_temperatures(2.0, 18.0, 30.0, Some(45.0), Some(2.0), None);
    let threshold = ModelTemplate::new(ModelKind::Threshold, ForcingFamily::SmoothBeta, 1.0);
    let events = simulate_events(&series, &threshold, &truth, 112, 155, 2, seed + 1)?;
    let data = ObservationSet::new(events, series)?;
    let ends: Vec<u32> = data.observations.iter().filter_map(|o| o.end_day).collect();
    println!(
        "events: {} occurred, day range {:?}..{:?}",
        ends.len(),
        ends.iter().min(),
        ends.iter().max()
    );
    for (kind, accept) in [(ModelKind::Threshold, 0.8), (ModelKind::Standard, 0.9)] {
        let settings = FitSettings {
            template: ModelTemplate::new(kind, ForcingFamily::SmoothBeta, 1.0),
            priors: PriorConfig::default(),
            likelihood: LikelihoodForm::DayInterval,
            hmc: HmcConfig {
                target_accept: accept,
                integration_time,
                seed,
                ..HmcConfig::default()
            },
        };
        let start = Instant::now();
        let fit = fit(&data, &settings)?;
        println!("{kind:?}: {:.1}s", start.elapsed().as_secs_f64());
        let d = &fit.diagnostics;
        for p in &d.parameters {
            println!(
                "  {:>6} mean {:8.3} q5 {:8.3} q95 {:8.3} rhat {:?} ess {:?}",
                p.name, p.mean, p.q5, p.q95, p.rhat, p.ess_bulk.map(|e| e.round())
            );
        }
        println!(
            "  divergences {:?} warmup {:?} eps {:?} accept {:?} steps {:?}",
            d.divergences,
            fit.chains.warmup_divergences,
            fit.chains.step_sizes,
            fit.chains.mean_accept,
            fit.chains.leapfrog_steps
        );
        let ribbon = retrodictive_histograms(
            &fit.all_blocks(),
            &data,
            &settings.template,
            seed,
            &BinSpec::default(),
        )?;
        println!("  observed {:?}", ribbon.observed);
        println!("  q10      {:?}", ribbon.band(10).unwrap());
        println!("  median   {:?}", ribbon.median);
        println!("  q90      {:?}", ribbon.band(90).unwrap());
        println!("  inside {} of 25", ribbon.bins_within(10, 90)?);
    }
    Ok(())
}
