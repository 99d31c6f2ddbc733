use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::losses::{SphericalMode, DEFAULT_LAMBDA1, DEFAULT_LAMBDA2};
use crate::random::fnv1a;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossMode {
    Directional,
    Spherical,
    GeodesicTotal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    Constant,
    Cosine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Optimizer {
    /// Plain gradient descent.
    Gd,
    /// Adam with β = (0.9, 0.999), ε = 1e-8.
    Adam,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $($variant:path => [$name:literal $(, $alias:literal)*]),+ $(,)?) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($name $(| $alias)* => Ok($variant),)+
                    other => Err(Error::InvalidConfig(format!(concat!("unknown ", $what, " {:?}"), other))),
                }
            }
        }
    };
}

keyword_enum!(LossMode, "loss mode",
    LossMode::Directional => ["directional"],
    LossMode::Spherical => ["spherical"],
    LossMode::GeodesicTotal => ["geodesic-total", "geodesic_total"],
);
keyword_enum!(Schedule, "schedule",
    Schedule::Constant => ["constant"],
    Schedule::Cosine => ["cosine"],
);
keyword_enum!(Optimizer, "optimizer",
    Optimizer::Gd => ["gd", "sgd"],
    Optimizer::Adam => ["adam"],
);
keyword_enum!(SphericalMode, "spherical mode",
    SphericalMode::Canonical => ["canonical"],
    SphericalMode::Literal => ["literal"],
);

/// Everything that determines an inversion run.
#[derive(Clone, Debug, PartialEq)]
pub struct InversionConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub ensembles: usize,
    /// Requested subspace dimension; the effective one is capped by rank.
    pub subspace_dim: usize,
    pub loss_mode: LossMode,
    pub spherical_mode: SphericalMode,
    pub lambda1: f64,
    pub lambda2: f64,
    pub seed: u64,
    pub schedule: Schedule,
    pub optimizer: Optimizer,
    /// Use the summed-feature `E(x_ens) − N·E(x_s)` direction instead of
    /// averaging per-member losses.
    pub literal: bool,
    /// Include the `(1 − SSIM)/2` term in the total loss.
    pub perceptual: bool,
    pub sample_every: usize,
    /// Shared embedding dimension D.
    pub embed_dim: usize,
    /// Length of prompt input vectors.
    pub text_dim: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            epochs: 800,
            learning_rate: 2e-4,
            ensembles: 16,
            subspace_dim: 256,
            loss_mode: LossMode::GeodesicTotal,
            spherical_mode: SphericalMode::Canonical,
            lambda1: DEFAULT_LAMBDA1,
            lambda2: DEFAULT_LAMBDA2,
            seed: 0,
            schedule: Schedule::Cosine,
            optimizer: Optimizer::Adam,
            literal: false,
            perceptual: true,
            sample_every: 50,
            embed_dim: 32,
            text_dim: 64,
        }
    }
}

impl InversionConfig {
    pub const KEYS: [&'static str; 16] = [
        "epochs",
        "learning_rate",
        "ensembles",
        "subspace_dim",
        "loss",
        "spherical",
        "lambda1",
        "lambda2",
        "seed",
        "schedule",
        "optimizer",
        "literal",
        "perceptual",
        "sample_every",
        "embed_dim",
        "text_dim",
    ];

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.ensembles == 0 {
            return bad("ensembles must be at least 1");
        }
        // zero is allowed so a run can record losses without moving
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if self.subspace_dim == 0 || self.sample_every == 0 || self.embed_dim == 0 || self.text_dim == 0 {
            return bad("subspace_dim, sample_every, embed_dim and text_dim must be positive");
        }
        if !(self.lambda1.is_finite() && self.lambda2.is_finite()) {
            return bad("lambda1 and lambda2 must be finite");
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "epochs" => self.epochs.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "ensembles" => self.ensembles.to_string(),
            "subspace_dim" => self.subspace_dim.to_string(),
            "loss" => self.loss_mode.to_string(),
            "spherical" => self.spherical_mode.to_string(),
            "lambda1" => self.lambda1.to_string(),
            "lambda2" => self.lambda2.to_string(),
            "seed" => self.seed.to_string(),
            "schedule" => self.schedule.to_string(),
            "optimizer" => self.optimizer.to_string(),
            "literal" => self.literal.to_string(),
            "perceptual" => self.perceptual.to_string(),
            "sample_every" => self.sample_every.to_string(),
            "embed_dim" => self.embed_dim.to_string(),
            "text_dim" => self.text_dim.to_string(),
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.trim().parse().map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
        }
        match key.trim() {
            "epochs" => self.epochs = num(key, value)?,
            "learning_rate" | "lr" => self.learning_rate = num(key, value)?,
            "ensembles" => self.ensembles = num(key, value)?,
            "subspace_dim" => self.subspace_dim = num(key, value)?,
            "loss" => self.loss_mode = value.parse()?,
            "spherical" => self.spherical_mode = value.parse()?,
            "lambda1" => self.lambda1 = num(key, value)?,
            "lambda2" => self.lambda2 = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "schedule" => self.schedule = value.parse()?,
            "optimizer" => self.optimizer = value.parse()?,
            "literal" => self.literal = num(key, value)?,
            "perceptual" => self.perceptual = num(key, value)?,
            "sample_every" => self.sample_every = num(key, value)?,
            "embed_dim" => self.embed_dim = num(key, value)?,
            "text_dim" => self.text_dim = num(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Flat `key=value` lines in [`Self::KEYS`] order.
    pub fn to_kv(&self) -> String {
        Self::KEYS.iter().map(|k| format!("{k}={}\n", self.get(k).unwrap())).collect()
    }

    /// Applies `key=value` lines on top of `self`. Blank lines and `#`
    /// comments are ignored; keys this config does not know are returned.
    pub fn merge_kv(&mut self, text: &str) -> Result<Vec<(String, String)>> {
        let mut unknown = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::InvalidConfig(format!("line {}: expected key=value", i + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            if Self::KEYS.contains(&k) || k == "lr" {
                self.set(k, v)?;
            } else {
                unknown.push((k.to_string(), v.to_string()));
            }
        }
        Ok(unknown)
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some((k, _)) = cfg.merge_kv(text)?.into_iter().next() {
            return Err(Error::InvalidConfig(format!("unknown key {k:?}")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// FNV-1a of the canonical key=value form, as 16 hex digits.
    pub fn config_hash(&self) -> String {
        format!("{:016x}", fnv1a(self.to_kv().as_bytes()))
    }
}
