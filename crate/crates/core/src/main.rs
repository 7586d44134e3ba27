use vbsim::fit::{guess_exp_decay, model_exp_decay, nlls_fit, FitOptions};
use vbsim::protocols::{echo_experiment, linspace, EnsembleSpec, PulsedContext};
use vbsim::spin::SpinSystemConfig;

fn main() {
    let ctx = PulsedContext::default();
    let cfg = SpinSystemConfig::default();
    let omega = 60.0;
    for (tau_max, noise, n) in [(0.18, 1e-4, 160), (0.22, 1e-4, 160), (0.25, 1e-4, 200), (0.22, 5e-5, 160)] {
        let taus = linspace(1.05 / (omega * std::f64::consts::SQRT_2), tau_max, n);
        let mut errs = Vec::new();
        let mut worst: f64 = 0.0;
        for seed in 7u64..17 {
            let ens = EnsembleSpec { seed, noise_sigma: noise, ..Default::default() };
            let series = echo_experiment(&cfg, &ctx, omega, &taus, &ens).unwrap();
            let model = model_exp_decay(false);
            let theta0 = guess_exp_decay(&series, false);
            let fit = nlls_fit(&model, &series, &theta0, &[], &FitOptions::default()).unwrap();
            let err = (fit.params[1] / 0.082121 - 1.0) * 100.0;
            worst = worst.max(err.abs());
            errs.push(format!("{err:+.1}"));
        }
        println!("τmax={tau_max} noise={noise:.0e} n={n}: {errs:?} worst {worst:.2}%");
    }
}
