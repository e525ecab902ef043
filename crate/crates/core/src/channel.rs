//! Sub-THz link budget: band-integrated Shannon capacity with molecular
//! absorption, beam-misalignment loss, thermal noise, rate sharing, and
//! transmission latency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact SI values.
const BOLTZMANN: f64 = 1.380_649e-23;
const LIGHT_SPEED: f64 = 299_792_458.0;

/// Propagation path class for absorption lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathClass {
    /// Mostly exo-atmospheric (satellite to HAP).
    SpaceAir,
    /// Tropospheric (HAP or satellite to ground).
    AirGround,
}

/// Radio parameters feeding the capacity integral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkBudget {
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
    /// Total transmit power in W, spread uniformly over the band.
    pub total_tx_power_w: f64,
    pub tx_aperture_m: f64,
    pub rx_aperture_m: f64,
    /// Aperture efficiency applied to both antenna gains.
    pub aperture_efficiency: f64,
    pub temperature_k: f64,
    pub noise_figure_db: f64,
    /// Sub-band count for the capacity quadrature.
    pub sub_bands: usize,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            f_lo_hz: 94.1e9,
            f_hi_hz: 100e9,
            total_tx_power_w: 0.1,
            tx_aperture_m: 0.2,
            rx_aperture_m: 0.5,
            aperture_efficiency: 1.0,
            temperature_k: 220.0,
            noise_figure_db: 10.0,
            sub_bands: 64,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if self.f_lo_hz >= self.f_hi_hz {
            return Err(Error::invalid("band must satisfy f_lo < f_hi"));
        }
        if self.total_tx_power_w < 0.0 {
            return Err(Error::invalid("transmit power must be >= 0"));
        }
        if self.tx_aperture_m <= 0.0 || self.rx_aperture_m <= 0.0 {
            return Err(Error::invalid("apertures must be positive"));
        }
        if !(0.0 < self.aperture_efficiency && self.aperture_efficiency <= 1.0) {
            return Err(Error::invalid("aperture efficiency must lie in (0, 1]"));
        }
        if self.temperature_k <= 0.0 || self.sub_bands == 0 {
            return Err(Error::invalid("temperature and sub-band count must be positive"));
        }
        Ok(())
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.f_hi_hz - self.f_lo_hz
    }

    /// Transmit power spectral density in W/Hz.
    pub fn tx_psd(&self, _frequency_hz: f64) -> f64 {
        self.total_tx_power_w / self.bandwidth_hz()
    }

    /// Aperture antenna gain (pi * D * f / c)^2 * efficiency.
    pub fn gain(&self, aperture_m: f64, frequency_hz: f64) -> f64 {
        let x = std::f64::consts::PI * aperture_m * frequency_hz / LIGHT_SPEED;
        self.aperture_efficiency * x * x
    }
}

/// Per-path-class molecular absorption coefficients, linearly interpolated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbsorptionModel {
    /// (frequency_hz, kappa_per_km), sorted by frequency.
    pub space_air: Vec<(f64, f64)>,
    pub air_ground: Vec<(f64, f64)>,
}

impl Default for AbsorptionModel {
    fn default() -> Self {
        // Built-in coefficients: nearly transparent above the troposphere,
        // water-vapor dominated near the ground. Overridable from config.
        AbsorptionModel {
            space_air: vec![
                (90.0e9, 6.0e-6),
                (94.0e9, 8.0e-6),
                (97.0e9, 1.0e-5),
                (100.0e9, 1.3e-5),
                (105.0e9, 1.8e-5),
            ],
            air_ground: vec![
                (90.0e9, 0.045),
                (94.0e9, 0.052),
                (97.0e9, 0.060),
                (100.0e9, 0.068),
                (105.0e9, 0.080),
            ],
        }
    }
}

impl AbsorptionModel {
    pub fn validate(&self) -> Result<()> {
        for table in [&self.space_air, &self.air_ground] {
            if table.is_empty() {
                return Err(Error::invalid("absorption table must be nonempty"));
            }
            if table.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::invalid("absorption table must be sorted by frequency"));
            }
            if table.iter().any(|(_, k)| *k < 0.0) {
                return Err(Error::invalid("absorption coefficients must be >= 0"));
            }
        }
        Ok(())
    }

    fn table(&self, class: PathClass) -> &[(f64, f64)] {
        match class {
            PathClass::SpaceAir => &self.space_air,
            PathClass::AirGround => &self.air_ground,
        }
    }

    /// Interpolated absorption coefficient in 1/km.
    pub fn kappa(&self, frequency_hz: f64, class: PathClass) -> Result<f64> {
        let table = self.table(class);
        let (f_min, f_max) = (table[0].0, table[table.len() - 1].0);
        if frequency_hz < f_min || frequency_hz > f_max {
            return Err(Error::OutOfRange(format!(
                "frequency {frequency_hz} Hz outside absorption table [{f_min}, {f_max}]"
            )));
        }
        let idx = table.partition_point(|(f, _)| *f <= frequency_hz);
        if idx == 0 {
            return Ok(table[0].1);
        }
        if idx == table.len() {
            return Ok(table[table.len() - 1].1);
        }
        let (f0, k0) = table[idx - 1];
        let (f1, k1) = table[idx];
        let w = (frequency_hz - f0) / (f1 - f0);
        Ok(k0 + w * (k1 - k0))
    }

    /// Parses a two-column whitespace-separated table (frequency_hz kappa_per_km).
    /// Lines starting with '#' are skipped.
    pub fn parse_table(text: &str) -> Result<Vec<(f64, f64)>> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::BadData(format!("line {}: missing column", ln + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::BadData(format!("line {}: {e}", ln + 1)))
            };
            let f = parse(it.next())?;
            let k = parse(it.next())?;
            rows.push((f, k));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(rows)
    }
}

/// Beam geometry and misalignment for the pointing-loss factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointingModel {
    /// Fixed pointing error angle in radians.
    pub error_angle_rad: f64,
    /// Transmitter beam waist in m.
    pub beam_waist_tx_m: f64,
    /// Receiver aperture radius in m.
    pub rx_aperture_radius_m: f64,
    /// Optional zero-mean Gaussian error sampling (standard deviation, rad).
    #[serde(default)]
    pub gaussian_sigma_rad: Option<f64>,
}

impl Default for PointingModel {
    fn default() -> Self {
        PointingModel {
            error_angle_rad: 1e-6,
            beam_waist_tx_m: 0.1,
            rx_aperture_radius_m: 0.25,
            gaussian_sigma_rad: None,
        }
    }
}

impl PointingModel {
    pub fn validate(&self) -> Result<()> {
        if self.error_angle_rad < 0.0 || self.error_angle_rad >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid("pointing error must lie in [0, pi/2)"));
        }
        if self.beam_waist_tx_m <= 0.0 || self.rx_aperture_radius_m <= 0.0 {
            return Err(Error::invalid("beam waist and aperture radius must be positive"));
        }
        Ok(())
    }

    /// Draws a pointing error for one transmission: |N(0, sigma)| when
    /// Gaussian sampling is configured, the fixed angle otherwise.
    pub fn sample_error(&self, rng: &mut impl rand::Rng) -> f64 {
        match self.gaussian_sigma_rad {
            Some(sigma) => {
                // Box-Muller keeps the draw identical across platforms.
                let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                let n = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                (sigma * n).abs().min(std::f64::consts::FRAC_PI_2 * 0.999)
            }
            None => self.error_angle_rad,
        }
    }
}

/// Pointing-loss factor in (0, 1] for the configured fixed error angle.
pub fn pointing_loss(pm: &PointingModel, distance_m: f64, frequency_hz: f64) -> Result<f64> {
    pointing_loss_at(pm, pm.error_angle_rad, distance_m, frequency_hz)
}

/// Pointing-loss factor for an explicit error angle.
pub fn pointing_loss_at(
    pm: &PointingModel,
    error_angle_rad: f64,
    distance_m: f64,
    frequency_hz: f64,
) -> Result<f64> {
    pm.validate()?;
    if distance_m <= 0.0 {
        return Err(Error::invalid("distance must be positive"));
    }
    if error_angle_rad == 0.0 {
        return Ok(1.0);
    }
    let w_z = LIGHT_SPEED * distance_m / (std::f64::consts::PI * frequency_hz * pm.beam_waist_tx_m);
    let v = (std::f64::consts::PI / 2.0).sqrt() * pm.rx_aperture_radius_m / w_z;
    // As v -> 0 the waist ratio sqrt(pi)*erf(v)/(2v*exp(-v^2)) -> 1.
    let w_zeq_sq = if v < 1e-8 {
        w_z * w_z
    } else {
        w_z * w_z * std::f64::consts::PI.sqrt() * libm::erf(v) / (2.0 * v * (-v * v).exp())
    };
    let displacement = distance_m * error_angle_rad.tan();
    Ok((-2.0 * displacement * displacement / w_zeq_sq).exp())
}

/// Molecular absorption factor Psi >= 1 over a homogeneous path.
pub fn absorption(
    am: &AbsorptionModel,
    frequency_hz: f64,
    path_length_km: f64,
    class: PathClass,
) -> Result<f64> {
    if path_length_km < 0.0 {
        return Err(Error::invalid("path length must be >= 0"));
    }
    let kappa = am.kappa(frequency_hz, class)?;
    Ok((kappa * path_length_km).exp())
}

/// Thermal noise power spectral density k_B * T * 10^(N_f/10) in W/Hz.
pub fn noise_density(temperature_k: f64, noise_figure_db: f64) -> Result<f64> {
    if temperature_k <= 0.0 {
        return Err(Error::invalid("temperature must be positive"));
    }
    Ok(BOLTZMANN * temperature_k * 10f64.powf(noise_figure_db / 10.0))
}

/// Band-integrated Shannon capacity in bits/s over the configured sub-band
/// trapezoid quadrature, for a fixed pointing error.
pub fn capacity(
    lb: &LinkBudget,
    am: &AbsorptionModel,
    pm: &PointingModel,
    distance_m: f64,
    class: PathClass,
) -> Result<f64> {
    capacity_at_error(lb, am, pm, pm.error_angle_rad, distance_m, class)
}

/// Capacity for an explicit pointing error angle (used with sampled errors).
pub fn capacity_at_error(
    lb: &LinkBudget,
    am: &AbsorptionModel,
    pm: &PointingModel,
    error_angle_rad: f64,
    distance_m: f64,
    class: PathClass,
) -> Result<f64> {
    lb.validate()?;
    am.validate()?;
    if distance_m <= 0.0 {
        return Err(Error::invalid("distance must be positive"));
    }
    let n_tot = noise_density(lb.temperature_k, lb.noise_figure_db)?;
    let n = lb.sub_bands;
    let df = lb.bandwidth_hz() / n as f64;
    let spectral_rate = |f: f64| -> Result<f64> {
        let psi = absorption(am, f, distance_m / 1000.0, class)?;
        let h_pe = pointing_loss_at(pm, error_angle_rad, distance_m, f)?;
        let fspl = LIGHT_SPEED / (4.0 * std::f64::consts::PI * f * distance_m);
        let snr = lb.tx_psd(f) * lb.gain(lb.tx_aperture_m, f) * lb.gain(lb.rx_aperture_m, f)
            * fspl
            * fspl
            * h_pe
            / (psi * n_tot);
        Ok((1.0 + snr).log2())
    };
    let mut total = 0.5 * (spectral_rate(lb.f_lo_hz)? + spectral_rate(lb.f_hi_hz)?);
    for k in 1..n {
        total += spectral_rate(lb.f_lo_hz + k as f64 * df)?;
    }
    Ok(total * df)
}

/// Equal split of the total capacity among concurrently served satellites.
pub fn per_satellite_rate(total_capacity_bps: f64, n_sharing: usize) -> Result<f64> {
    if n_sharing == 0 {
        return Err(Error::invalid("sharing count must be >= 1"));
    }
    Ok(total_capacity_bps / n_sharing as f64)
}

/// Transmission latency of `payload_bytes` at `rate_bps`, in seconds.
pub fn transmission_latency(payload_bytes: f64, rate_bps: f64) -> Result<f64> {
    if rate_bps <= 0.0 {
        return Err(Error::invalid("rate must be positive"));
    }
    if payload_bytes < 0.0 {
        return Err(Error::invalid("payload must be >= 0"));
    }
    Ok(8.0 * payload_bytes / rate_bps)
}
