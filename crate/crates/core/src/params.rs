//! Model constants, unit conversion and parameter presets.
//!
//! Internally everything is in natural units (ħ = c = 1) with the tachyon
//! mass as the scale: μ = 1 and a = 1/μ = 1 for every preset.

use std::collections::BTreeMap;

/// ħc in eV·cm.
pub const HBAR_C_EV_CM: f64 = 1.973_269_804e-5;
/// Speed of light in cm/s.
pub const C_CM_PER_S: f64 = 2.997_924_58e10;
/// Planck mass in eV, so that G = 1/M_Pl².
pub const PLANCK_MASS_EV: f64 = 1.220_890e28;
/// Nucleon (proton) mass in eV.
pub const NUCLEON_MASS_EV: f64 = 938.272_088e6;
/// GRW collapse rate, 1/s.
pub const GRW_LAMBDA_PER_SEC: f64 = 1e-16;
/// GRW localization length, cm.
pub const GRW_A_CM: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamsError {
    #[error("{name} must be strictly positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("mu*a must equal 1, got {0}")]
    ScaleMismatch(f64),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
}

/// Physical meaning of one internal unit. Time and length share a unit
/// (c = 1) and energy is the inverse length (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub length_cm: f64,
    pub time_s: f64,
    pub energy_ev: f64,
}

impl UnitSystem {
    pub fn from_length_cm(length_cm: f64) -> Self {
        UnitSystem {
            length_cm,
            time_s: length_cm / C_CM_PER_S,
            energy_ev: HBAR_C_EV_CM / length_cm,
        }
    }

    pub fn rate_to_natural(&self, per_sec: f64) -> f64 {
        per_sec * self.time_s
    }
    pub fn rate_to_physical(&self, rate: f64) -> f64 {
        rate / self.time_s
    }
    pub fn length_to_natural(&self, cm: f64) -> f64 {
        cm / self.length_cm
    }
    pub fn length_to_physical(&self, len: f64) -> f64 {
        len * self.length_cm
    }
    pub fn mass_to_natural(&self, ev: f64) -> f64 {
        ev / self.energy_ev
    }
    pub fn mass_to_physical(&self, m: f64) -> f64 {
        m * self.energy_ev
    }
}

/// Validated model parameters in natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Collapse rate λ.
    pub lambda: f64,
    /// Localization length a.
    pub a: f64,
    /// Tachyon mass μ = 1/a.
    pub mu: f64,
    /// Relativistic coupling γ.
    pub gamma: f64,
    /// Particle mass M.
    pub mass: f64,
    /// M_i / M_N for mass-proportional coupling.
    pub mass_ratio: f64,
}

fn positive(name: &'static str, value: f64) -> Result<f64, ParamsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ParamsError::NotPositive { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, ParamsError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ParamsError::Negative { name, value })
    }
}

impl ModelParams {
    pub fn new(
        lambda: f64,
        a: f64,
        mu: f64,
        gamma: f64,
        mass: f64,
        mass_ratio: f64,
    ) -> Result<Self, ParamsError> {
        positive("lambda", lambda)?;
        positive("a", a)?;
        positive("mu", mu)?;
        positive("M", mass)?;
        non_negative("gamma", gamma)?;
        non_negative("mass_ratio", mass_ratio)?;
        if (mu * a - 1.0).abs() > 1e-12 {
            return Err(ParamsError::ScaleMismatch(mu * a));
        }
        Ok(ModelParams {
            lambda,
            a,
            mu,
            gamma,
            mass,
            mass_ratio,
        })
    }

    /// Builds parameters from a localization length, deriving μ = 1/a.
    pub fn from_length(
        lambda: f64,
        a: f64,
        gamma: f64,
        mass: f64,
        mass_ratio: f64,
    ) -> Result<Self, ParamsError> {
        positive("a", a)?;
        Self::new(lambda, a, 1.0 / a, gamma, mass, mass_ratio)
    }

    /// Whether γ = λ/μ holds (to round-off).
    pub fn gamma_tied(&self) -> bool {
        let tied = self.lambda / self.mu;
        (self.gamma - tied).abs() <= 1e-12 * tied.abs().max(self.gamma.abs())
    }

    pub fn m_over_mu(&self) -> f64 {
        self.mass / self.mu
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self, ParamsError> {
        Self::new(lambda, self.a, self.mu, self.gamma, self.mass, self.mass_ratio)
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self, ParamsError> {
        Self::new(self.lambda, self.a, self.mu, gamma, self.mass, self.mass_ratio)
    }

    pub fn with_mass(self, mass: f64) -> Result<Self, ParamsError> {
        Self::new(self.lambda, self.a, self.mu, self.gamma, mass, self.mass_ratio)
    }

    pub fn with_mass_ratio(self, mass_ratio: f64) -> Result<Self, ParamsError> {
        Self::new(self.lambda, self.a, self.mu, self.gamma, self.mass, mass_ratio)
    }

    /// Flat `key = value` rendering used in manifests.
    pub fn echo(&self) -> String {
        format!(
            "lambda = {:e}\na = {:e}\nmu = {:e}\ngamma = {:e}\nM = {:e}\nmass_ratio = {:e}\ngamma_tied = {}\n",
            self.lambda,
            self.a,
            self.mu,
            self.gamma,
            self.mass,
            self.mass_ratio,
            self.gamma_tied()
        )
    }
}

/// Physical-unit description of a parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub lambda_per_sec: f64,
    pub a_cm: f64,
    pub gamma: f64,
    pub mass_ev: f64,
    pub mass_ratio: f64,
}

impl PhysicalParams {
    pub fn units(&self) -> UnitSystem {
        UnitSystem::from_length_cm(self.a_cm)
    }

    pub fn to_natural(&self) -> Result<ModelParams, ParamsError> {
        let u = self.units();
        ModelParams::from_length(
            u.rate_to_natural(self.lambda_per_sec),
            u.length_to_natural(self.a_cm),
            self.gamma,
            u.mass_to_natural(self.mass_ev),
            self.mass_ratio,
        )
    }

    pub fn from_natural(p: &ModelParams, units: &UnitSystem) -> Self {
        PhysicalParams {
            lambda_per_sec: units.rate_to_physical(p.lambda),
            a_cm: units.length_to_physical(p.a),
            gamma: p.gamma,
            mass_ev: units.mass_to_physical(p.mass),
            mass_ratio: p.mass_ratio,
        }
    }
}

/// κ·G·M_N² with G = 1/M_Planck².
pub fn gamma_from_kappa(kappa: f64, nucleon_mass_ev: f64) -> Result<f64, ParamsError> {
    non_negative("kappa", kappa)?;
    positive("M_N", nucleon_mass_ev)?;
    let r = nucleon_mass_ev / PLANCK_MASS_EV;
    Ok(kappa * r * r)
}

/// GRW values: λ = 1e-16 /s, a = 1e-5 cm, nucleon mass, γ = λ/μ.
///
/// γ comes out near 3e-32, i.e. the order of magnitude quoted for this
/// choice; the preset carries no more precision than that.
pub fn preset_grw() -> ModelParams {
    let u = UnitSystem::from_length_cm(GRW_A_CM);
    let lambda = u.rate_to_natural(GRW_LAMBDA_PER_SEC);
    let mass = u.mass_to_natural(NUCLEON_MASS_EV);
    ModelParams::from_length(lambda, 1.0, lambda, mass, 1.0).expect("GRW preset is valid")
}

pub fn grw_units() -> UnitSystem {
    UnitSystem::from_length_cm(GRW_A_CM)
}

/// Desk-scale parameters: μ = a = 1, M = ratio, λ = γ = 1.
pub fn toy_params(m_over_mu: f64) -> Result<ModelParams, ParamsError> {
    positive("M/mu", m_over_mu)?;
    ModelParams::from_length(1.0, 1.0, 1.0, m_over_mu, 1.0)
}

/// Values read from a flat `key = value` config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamConfig {
    pub lambda_per_sec: Option<f64>,
    pub a_cm: Option<f64>,
    pub gamma: Option<f64>,
    pub m_over_mu: Option<f64>,
    pub mass_ratio: Option<f64>,
    pub kappa: Option<f64>,
}

impl ParamConfig {
    pub const KEYS: [&'static str; 6] =
        ["lambda_per_sec", "a_cm", "gamma", "M_over_mu", "mass_ratio", "kappa"];

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ParamsError> {
        let mut cfg = ParamConfig::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ParamsError::Config {
                line: i + 1,
                message: format!("expected key = value, got `{line}`"),
            })?;
            let key = k.trim();
            let value: f64 = v.trim().parse().map_err(|_| ParamsError::Config {
                line: i + 1,
                message: format!("`{}` is not a number", v.trim()),
            })?;
            if seen.insert(key.to_string(), i + 1).is_some() {
                return Err(ParamsError::Config {
                    line: i + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
            cfg.set(key, value).map_err(|message| ParamsError::Config {
                line: i + 1,
                message,
            })?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<(), String> {
        let slot = match key {
            "lambda_per_sec" => &mut self.lambda_per_sec,
            "a_cm" => &mut self.a_cm,
            "gamma" => &mut self.gamma,
            "M_over_mu" => &mut self.m_over_mu,
            "mass_ratio" => &mut self.mass_ratio,
            "kappa" => &mut self.kappa,
            other => return Err(format!("unknown key `{other}`")),
        };
        *slot = Some(value);
        Ok(())
    }

    /// Values from `other` take precedence.
    pub fn overlay(&self, other: &ParamConfig) -> ParamConfig {
        ParamConfig {
            lambda_per_sec: other.lambda_per_sec.or(self.lambda_per_sec),
            a_cm: other.a_cm.or(self.a_cm),
            gamma: other.gamma.or(self.gamma),
            m_over_mu: other.m_over_mu.or(self.m_over_mu),
            mass_ratio: other.mass_ratio.or(self.mass_ratio),
            kappa: other.kappa.or(self.kappa),
        }
    }

    /// Applies the config on top of `base`. A physical λ is converted with
    /// the length unit `a_cm` (GRW value when absent); γ is taken from
    /// `gamma`, else from `kappa`, else left as in `base` (re-tied to λ/μ if
    /// `base` was tied and λ changed).
    pub fn apply(&self, base: ModelParams) -> Result<ModelParams, ParamsError> {
        let mut p = base;
        if let Some(l) = self.lambda_per_sec {
            positive("lambda_per_sec", l)?;
            let u = UnitSystem::from_length_cm(self.a_cm.unwrap_or(GRW_A_CM));
            let tied = p.gamma_tied();
            p = p.with_lambda(u.rate_to_natural(l))?;
            if tied {
                p = p.with_gamma(p.lambda / p.mu)?;
            }
        }
        if let Some(r) = self.m_over_mu {
            positive("M_over_mu", r)?;
            p = p.with_mass(r * p.mu)?;
        }
        if let Some(r) = self.mass_ratio {
            p = p.with_mass_ratio(r)?;
        }
        if let Some(k) = self.kappa {
            p = p.with_gamma(gamma_from_kappa(k, NUCLEON_MASS_EV)?)?;
        }
        if let Some(g) = self.gamma {
            p = p.with_gamma(g)?;
        }
        Ok(p)
    }
}
