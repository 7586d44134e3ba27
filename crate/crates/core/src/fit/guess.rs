//! Automatic starting values: spectral frequency estimates, envelope decay
//! constants and Lorentzian dip positions.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::Result;
use crate::fit::lm::{nlls_fit, FitOptions};
use crate::fit::model::{model_exp_decay, FitModel};
use crate::protocols::series::DataSeries;

/// Frequency estimates from the detrended amplitude spectrum.
///
/// The data are detrended with a fitted double-exponential background,
/// resampled onto a uniform grid, Fourier transformed, and the `n` largest
/// spectral peaks are returned with parabolic interpolation, lowest
/// frequency first on magnitude ties. Returns `(frequencies, truncated)`
/// where `truncated` is set when fewer than `n` resolvable peaks exist.
pub fn guess_frequencies(data: &DataSeries, n: usize) -> Result<(Vec<f64>, bool)> {
    data.validate()?;
    let len = data.len();
    if len < 8 || n == 0 {
        return Ok((Vec::new(), n > 0));
    }

    let detrended = detrend(data);

    // Uniform resample (linear interpolation) in case the grid is irregular.
    let x0 = data.x[0];
    let span = data.x[len - 1] - x0;
    let dx = span / (len - 1) as f64;
    let mut uniform = Vec::with_capacity(len);
    let mut k = 0usize;
    for i in 0..len {
        let xi = x0 + dx * i as f64;
        while k + 2 < len && data.x[k + 1] < xi {
            k += 1;
        }
        let (xa, xb) = (data.x[k], data.x[k + 1]);
        let t = ((xi - xa) / (xb - xa)).clamp(0.0, 1.0);
        uniform.push(detrended[k] * (1.0 - t) + detrended[k + 1] * t);
    }

    let mut buf: Vec<Complex64> = uniform.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let half = len / 2;
    let mags: Vec<f64> = (0..=half).map(|i| buf[i].norm()).collect();

    // Noise floor from the median magnitude (DC excluded).
    let mut sorted: Vec<f64> = mags[1..].to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let peak_floor = (3.0 * median).max(1e-12 * mags.iter().cloned().fold(0.0, f64::max));

    let mut peaks: Vec<(usize, f64)> = (1..half)
        .filter(|&i| mags[i] > mags[i - 1] && mags[i] >= mags[i + 1] && mags[i] > peak_floor)
        .map(|i| (i, mags[i]))
        .collect();
    // Largest magnitude first; equal magnitudes resolve to lower frequency.
    peaks.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    peaks.truncate(n);

    let mut freqs: Vec<f64> = peaks
        .iter()
        .map(|&(i, _)| {
            // Parabolic refinement on the magnitude triplet.
            let (ym, y0, yp) = (mags[i - 1], mags[i], mags[i + 1]);
            let denom = ym - 2.0 * y0 + yp;
            let delta = if denom.abs() > 1e-300 { 0.5 * (ym - yp) / denom } else { 0.0 };
            (i as f64 + delta.clamp(-0.5, 0.5)) / (len as f64 * dx)
        })
        .collect();
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let truncated = freqs.len() < n;
    Ok((freqs, truncated))
}

/// Subtract a fitted double-exponential background; fall back to the mean
/// when the background fit does not converge.
fn detrend(data: &DataSeries) -> Vec<f64> {
    let model = model_exp_decay(true);
    let theta0 = guess_exp_decay(data, true);
    let opts = FitOptions { max_iterations: 120, ..FitOptions::default() };
    // Unweighted fit: detrending must not depend on σ availability.
    let unweighted = DataSeries { y_sigma: None, ..data.clone() };
    match nlls_fit(&model, &unweighted, &theta0, &[], &opts) {
        Ok(fit) => data
            .x
            .iter()
            .zip(&data.y)
            .map(|(&x, &y)| y - model.eval(&fit.params, x))
            .collect(),
        Err(_) => {
            let mean = data.y.iter().sum::<f64>() / data.len() as f64;
            data.y.iter().map(|y| y - mean).collect()
        }
    }
}

/// Starting values for the exponential-decay models from the envelope:
/// offset from the tail, amplitude from the head, decay from a log-linear
/// regression of |y − c|.
pub fn guess_exp_decay(data: &DataSeries, double: bool) -> Vec<f64> {
    let n = data.len();
    let tail = n.max(5) / 5;
    let c: f64 = data.y[n - tail..].iter().sum::<f64>() / tail as f64;
    let a = data.y[0] - c;
    let span = data.x[n - 1] - data.x[0];

    // Log-linear regression on points that are clearly off the asymptote.
    let scale = a.abs().max(1e-12);
    let pts: Vec<(f64, f64)> = data
        .x
        .iter()
        .zip(&data.y)
        .filter(|(_, &y)| (y - c).abs() > 0.05 * scale && (y - c).signum() == a.signum())
        .map(|(&x, &y)| (x, (y - c).abs().ln()))
        .collect();
    let t = if pts.len() >= 3 {
        let nf = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
        if slope < -1e-12 { (-1.0 / slope).min(span * 20.0) } else { span }
    } else {
        span / 3.0
    };

    if double {
        // Split the amplitude over a fast and a slow component.
        vec![0.7 * a, (t / 4.0).max(span * 1e-3), 0.3 * a, t.max(span * 0.5), c]
    } else {
        vec![a, t.max(span * 1e-3), c]
    }
}

/// Starting values for an n-Lorentzian dip fit: baseline from the median,
/// centers from the deepest separated local minima.
pub fn guess_lorentzian_sum(data: &DataSeries, n: usize) -> Vec<f64> {
    let len = data.len();
    let mut sorted = data.y.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let baseline = sorted[len / 2];
    let span = data.x[len - 1] - data.x[0];

    // Local minima sorted by depth.
    let mut minima: Vec<(f64, f64)> = (1..len - 1)
        .filter(|&i| data.y[i] <= data.y[i - 1] && data.y[i] < data.y[i + 1])
        .map(|i| (data.x[i], data.y[i]))
        .collect();
    minima.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());

    // Greedily keep minima separated by at least span/(4n).
    let min_gap = span / (4.0 * n as f64);
    let mut picked: Vec<(f64, f64)> = Vec::new();
    for m in minima {
        if picked.iter().all(|p| (p.0 - m.0).abs() > min_gap) {
            picked.push(m);
        }
        if picked.len() == n {
            break;
        }
    }
    while picked.len() < n {
        let i = picked.len();
        picked.push((data.x[0] + span * (i as f64 + 0.5) / n as f64, baseline - 0.01));
    }
    picked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut theta = vec![baseline];
    for (x0, ymin) in picked {
        theta.push(ymin - baseline); // negative amplitude: a dip
        theta.push(x0);
        theta.push(span / 10.0);
    }
    theta
}

/// Starting values for the n-component damped-cosine model.
pub fn guess_damped_cosines(data: &DataSeries, n: usize) -> Result<(Vec<f64>, FitModel)> {
    let model = crate::fit::model::model_damped_cosines(n);
    let (freqs, _) = guess_frequencies(data, n)?;
    let len = data.len();
    let span = data.x[len - 1] - data.x[0];
    let ymin = data.y.iter().cloned().fold(f64::INFINITY, f64::min);
    let ymax = data.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let amp = 0.5 * (ymax - ymin);
    let mean = data.y.iter().sum::<f64>() / len as f64;

    let mut theta = Vec::new();
    for i in 0..n {
        let f = freqs.get(i).copied().unwrap_or((i + 1) as f64 * 2.0 / span);
        theta.push(amp / n as f64);
        theta.push(span / 2.0);
        theta.push(f.max(0.05 / span));
        theta.push(0.0);
    }
    theta.push(0.0); // background amplitude
    theta.push(span.max(1e-3)); // background decay
    theta.push(mean);
    Ok((theta, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::series::linspace;

    #[test]
    fn pure_cosine_frequency_found_within_interpolated_bin() {
        // Oracle: a 10 MHz cosine sampled at 4 ns over 2 µs.
        let xs = linspace(0.0, 2.0, 501);
        let y: Vec<f64> = xs
            .iter()
            .map(|&t| (2.0 * std::f64::consts::PI * 10.0 * t).cos())
            .collect();
        let data = DataSeries::new(xs, y, None).unwrap();
        let (freqs, truncated) = guess_frequencies(&data, 1).unwrap();
        assert!(!truncated);
        assert_eq!(freqs.len(), 1);
        assert!((freqs[0] - 10.0).abs() < 0.2, "estimated f = {}", freqs[0]);
    }

    #[test]
    fn constant_data_yields_no_peaks() {
        let xs = linspace(0.0, 1.0, 64);
        let data = DataSeries::new(xs, vec![0.7; 64], None).unwrap();
        let (freqs, truncated) = guess_frequencies(&data, 2).unwrap();
        assert!(freqs.is_empty(), "found spurious peaks {freqs:?}");
        assert!(truncated);
    }

    #[test]
    fn beat_of_two_tones_resolves_both() {
        let xs = linspace(0.0, 4.0, 1024);
        let y: Vec<f64> = xs
            .iter()
            .map(|&t| {
                (2.0 * std::f64::consts::PI * 8.0 * t).cos()
                    + 0.8 * (2.0 * std::f64::consts::PI * 11.0 * t).cos()
            })
            .collect();
        let data = DataSeries::new(xs, y, None).unwrap();
        let (freqs, _) = guess_frequencies(&data, 2).unwrap();
        assert_eq!(freqs.len(), 2);
        assert!((freqs[0] - 8.0).abs() < 0.2, "{freqs:?}");
        assert!((freqs[1] - 11.0).abs() < 0.2, "{freqs:?}");
    }

    #[test]
    fn detrending_removes_decaying_background() {
        // A strong double-exponential trend over a weak tone must not hide it.
        let xs = linspace(0.0, 3.0, 512);
        let y: Vec<f64> = xs
            .iter()
            .map(|&t| {
                2.0 * (-t / 0.3).exp() + 0.8 * (-t / 5.0).exp()
                    + 0.1 * (2.0 * std::f64::consts::PI * 6.0 * t).cos()
            })
            .collect();
        let data = DataSeries::new(xs, y, None).unwrap();
        let (freqs, _) = guess_frequencies(&data, 1).unwrap();
        assert_eq!(freqs.len(), 1, "no tone found");
        assert!((freqs[0] - 6.0).abs() < 0.3, "estimated {freqs:?}");
    }

    #[test]
    fn exp_guess_lands_near_truth() {
        let xs = linspace(0.0, 10.0, 200);
        let y: Vec<f64> = xs.iter().map(|&t| 1.4 * (-t / 2.5).exp() + 0.3).collect();
        let data = DataSeries::new(xs, y, None).unwrap();
        let theta = guess_exp_decay(&data, false);
        assert!((theta[0] - 1.4).abs() < 0.3, "amplitude {}", theta[0]);
        assert!((theta[1] - 2.5).abs() < 1.0, "decay {}", theta[1]);
        assert!((theta[2] - 0.3).abs() < 0.15, "offset {}", theta[2]);
    }

    #[test]
    fn lorentzian_guess_finds_two_dips() {
        let model = crate::fit::model::model_lorentzian_sum(2);
        let truth = [0.0, -1.0, 30.0, 8.0, -0.7, 70.0, 8.0];
        let xs = linspace(0.0, 100.0, 401);
        let y: Vec<f64> = xs.iter().map(|&x| model.eval(&truth, x)).collect();
        let data = DataSeries::new(xs, y, None).unwrap();
        let theta = guess_lorentzian_sum(&data, 2);
        assert!((theta[2] - 30.0).abs() < 3.0, "first center {}", theta[2]);
        assert!((theta[5] - 70.0).abs() < 3.0, "second center {}", theta[5]);
    }
}
