//! Getting-it-right check for one or all schemes.
//!
//! ```text
//! cargo run --release --example geweke_check -- [scheme|all] [draws] [--mutate] [phi_a=20 ...]
//! ```

use svmcmc::diagnostics::geweke::{geweke_test, GewekeConfig};
use svmcmc::rng::stream_from_seed;
use svmcmc::Scheme;

fn main() -> svmcmc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let which = args.first().map(String::as_str).unwrap_or("all");
    let draws = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let mutate = args.iter().any(|a| a == "--mutate");
    let mut priors = svmcmc::diagnostics::geweke::geweke_priors();
    let mut seed = 2024;
    for kv in args.iter().filter_map(|a| a.split_once('=')) {
        let v: f64 = kv.1.parse().expect("numeric prior value");
        match kv.0 {
            "seed" => seed = v as u64,
            "mu_mean" => priors.mu_mean = v,
            "mu_variance" => priors.mu_variance = v,
            "phi_a" => priors.phi_a = v,
            "phi_b" => priors.phi_b = v,
            "sigma2_scale" => priors.sigma2_scale = v,
            k => panic!("unknown prior '{k}'"),
        }
    }
    let schemes: Vec<Scheme> = if which == "all" {
        Scheme::ALL.to_vec()
    } else {
        vec![which.parse()?]
    };
    for scheme in schemes {
        let cfg = GewekeConfig {
            scheme,
            draws,
            drop_initial_state_factor: mutate,
            priors,
            ..Default::default()
        };
        let report = geweke_test(&cfg, &mut stream_from_seed(seed + scheme.id()))?;
        println!("{scheme:>7}  max|z| = {:.2}", report.max_abs_z());
        for s in &report.stats {
            println!(
                "    {:<8} prior {:>10.5}  chain {:>10.5}  IF {:>8.1}  z {:>6.2}",
                s.name, s.mean_a, s.mean_b, s.if_b, s.z
            );
        }
    }
    Ok(())
}
