use mimo_cfo::channel::{draw_channel, synthesize_rx, Purpose, RngStream};
use mimo_cfo::estimator::estimate_all;
use mimo_cfo::pilot::generate_all;
use mimo_cfo::system::{validate_config, CfoVector, PowerDelayProfile, SystemConfig};

fn main() -> mimo_cfo::Result<()> {
    let cfg = SystemConfig::new(40, 5, 2, 100);
    let cfo = CfoVector::uniform(5, std::f64::consts::PI / 2500.0);
    let (cfg, cfo) = validate_config(cfg, cfo)?.into_parts();
    let pdp = PowerDelayProfile::uniform(5, 2);
    let seeds = RngStream::new(7);
    let ch = draw_channel(&pdp, &cfg, &mut seeds.substream(0, Purpose::Channel))?;
    let pilots = generate_all(&cfg)?;
    let rx = synthesize_rx(&ch, &pilots, &cfo, &cfg, &mut seeds.substream(0, Purpose::Noise))?;
    let est = estimate_all(&rx, &cfg, &pdp)?;
    println!("{:?}", est.omega_hat);
    Ok(())
}
