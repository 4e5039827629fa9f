//! Every sampler on one simulated dataset: acceptance rates, IFs and cost.
//! Pick (phi, sigma) near a grid corner to see either parameterization
//! break down while the interweaving schemes do not.
//!
//! ```text
//! cargo run --release --example compare_schemes -- [phi] [sigma] [draws]
//! ```

use svmcmc::diagnostics::inefficiency_factor;
use svmcmc::model::{linearize, simulate};
use svmcmc::rng::{derive_stream, stream_from_seed};
use svmcmc::samplers::{ChainState, Param};
use svmcmc::{run_chain, MixtureTable, Parameters, Priors, SamplerConfig, Scheme};

fn main() -> svmcmc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let phi = args.first().and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let sigma = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let draws = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10_000);

    let truth = Parameters::new(-10.0, phi, sigma)?;
    let (y, _) = simulate(&truth, 1000, &mut stream_from_seed(3))?;
    let data = linearize(&y, Some(0.0), false)?;
    let priors = Priors::centered_on(&truth);

    println!("phi = {phi}, sigma = {sigma}, T = 1000, {draws} draws");
    println!(
        "{:<7} {:>9} {:>9} {:>9} {:>10}",
        "scheme", "IF(mu)", "IF(phi)", "IF(sigma)", "s/1000"
    );
    for scheme in Scheme::ALL {
        let cfg = SamplerConfig::new(scheme, 1000, draws);
        let init = ChainState::initial(
            data.len(),
            truth,
            scheme,
            &MixtureTable::omori(),
            derive_stream(3, &[scheme.id()]),
        )?;
        let out = run_chain(&data, &priors, &cfg, init)?;
        let ifs = Param::ALL.map(|p| inefficiency_factor(&out.column(p)).unwrap_or(f64::NAN));
        println!(
            "{:<7} {:>9.1} {:>9.1} {:>9.1} {:>10.3}",
            scheme.name(),
            ifs[0],
            ifs[1],
            ifs[2],
            out.seconds_per_1000
        );
    }
    Ok(())
}
