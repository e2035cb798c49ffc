use ga_thermo::experiment::{preset, run_replica, simulate_campaign, ExperimentConfig, PresetTask};
use ga_thermo::learner::disorder_averaged_trajectory;
use ga_thermo::mcmc::{estimate_internal_energy, mean_and_stderr, McmcOptions};
use ga_thermo::rng::derive_seed;
use ga_thermo::spins::{sample_chain_disorder, Disorder, DisorderParams, Model};

fn sample_std(v: &[f64]) -> f64 {
    let (_, se) = mean_and_stderr(v);
    se * (v.len() as f64).sqrt()
}

#[test]
fn chain_energy_density_self_averages() {
    let p = DisorderParams::new(0.0, 1.0, Model::Chain).unwrap();
    let opts = McmcOptions {
        sweeps: 600,
        burn_in: 200,
        thinning: 2,
        chains: 2,
    };
    let spread: Vec<f64> = [100usize, 400, 1600]
        .iter()
        .map(|&n| {
            let u: Vec<f64> = (0..12u64)
                .map(|i| {
                    let d = Disorder::Chain(sample_chain_disorder(n, p, derive_seed(21, &[n as u64, i])).unwrap());
                    estimate_internal_energy(&d, 1.0, &opts, derive_seed(22, &[n as u64, i])).unwrap().mean / n as f64
                })
                .collect();
            sample_std(&u)
        })
        .collect();
    assert!(spread[0] > spread[1] && spread[1] > spread[2], "{spread:?}");
}

#[test]
fn trajectory_standard_error_scales_with_replica_count() {
    let mut cfg = ExperimentConfig::standard("se", Model::Chain, 40);
    cfg.ga.population_size = 20;
    cfg.generations = 1000;
    cfg.learner.learning_rate = 1e-3;
    cfg.learner.t0 = 2.0;
    let temps: Vec<Vec<f64>> = (0..40)
        .map(|r| run_replica(&cfg, r).unwrap().rows.iter().map(|row| row.temperature).collect())
        .collect();
    // mean standard error at t = 1000 over disjoint groups of R replicas
    let se_at = |r: usize| {
        let groups: Vec<f64> = temps
            .chunks(r)
            .map(|g| disorder_averaged_trajectory(g).unwrap().std_error[1000])
            .collect();
        groups.iter().sum::<f64>() / groups.len() as f64
    };
    let (se5, se10, se20) = (se_at(5), se_at(10), se_at(20));
    let ratio = se5 / se20;
    assert!(se5 > se10 && se10 > se20, "{se5} {se10} {se20}");
    assert!((1.4..=2.8).contains(&ratio), "SE(5)/SE(20) = {ratio}, expected about 2");
}

#[test]
fn sk_desk_run_shows_a_crossover() {
    let PresetTask::Campaigns(runs) = preset("fgSSK", true).unwrap().task else {
        panic!("campaign preset expected")
    };
    let (_, cfg) = runs.iter().find(|(_, c)| c.ga.tournament_size == 2).unwrap();
    let summary = simulate_campaign(cfg).unwrap();
    assert_eq!(summary.successful().count(), cfg.replicas);
    let crossover = summary.temperature_crossover.clone().unwrap();
    assert!(crossover.is_some(), "no crossover detected");
    let fitness = summary.fitness.as_ref().unwrap();
    assert!(fitness.mean[cfg.generations as usize] > fitness.mean[0]);
}
