//! Run configuration: one TOML file with a section per subcommand. Missing
//! keys take the defaults below, unknown keys are rejected, and command
//! line flags override file values.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curves::{kappa_mn, BendingProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub frenet: FrenetConfig,
    pub ttransform: TTransformConfig,
    pub permute: PermuteConfig,
    pub soliton: SolitonConfig,
    pub lien: LienConfig,
    pub verify: VerifyConfig,
    pub export_torus: ExportTorusConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        RunConfig::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Hex SHA-256 of the JSON form of a resolved section.
pub fn config_hash<T: Serialize>(section: &T) -> Result<String> {
    let json = serde_json::to_vec(section)?;
    Ok(Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite, got {v}")))
    }
}

fn range(name: &str, lo: f64, hi: f64) -> Result<()> {
    finite(name, lo)?;
    finite(name, hi)?;
    if lo < hi {
        Ok(())
    } else {
        Err(Error::Config(format!("{name}: need min < max, got [{lo}, {hi}]")))
    }
}

fn sign(name: &str, v: i8) -> Result<()> {
    if v == 1 || v == -1 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be 1 or -1, got {v}")))
    }
}

/// A bending profile given as `mn:M,N`, `constant:K` or `sine`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Mn(i64, i64),
    Constant(f64),
    Sine,
}

impl ProfileSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unrecognized profile '{text}' (expected mn:M,N, constant:K or sine)"));
        let text = text.trim();
        if text == "sine" {
            return Ok(ProfileSpec::Sine);
        }
        let (kind, arg) = text.split_once(':').ok_or_else(bad)?;
        match kind.trim() {
            "mn" => {
                let (m, n) = arg.split_once(',').ok_or_else(bad)?;
                let m = m.trim().parse().map_err(|_| bad())?;
                let n = n.trim().parse().map_err(|_| bad())?;
                kappa_mn(m, n)?;
                Ok(ProfileSpec::Mn(m, n))
            }
            "constant" => {
                let k: f64 = arg.trim().parse().map_err(|_| bad())?;
                finite("constant bending", k)?;
                Ok(ProfileSpec::Constant(k))
            }
            _ => Err(bad()),
        }
    }

    pub fn profile(&self) -> Result<BendingProfile> {
        Ok(match self {
            ProfileSpec::Mn(m, n) => BendingProfile::Constant(kappa_mn(*m, *n)?),
            ProfileSpec::Constant(k) => BendingProfile::Constant(*k),
            ProfileSpec::Sine => BendingProfile::sine(),
        })
    }

    /// Default curve length: the closure period for closed constant
    /// profiles, `2π` otherwise.
    pub fn default_length(&self) -> Result<f64> {
        match self.profile()?.as_constant() {
            Some(k) if k < -1.0 => Ok(crate::curves::closure_period(k, 10_000)?.length),
            _ => Ok(2.0 * PI),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrenetConfig {
    pub profile: String,
    pub s0: f64,
    /// Curve length; defaults to [`ProfileSpec::default_length`].
    pub length: Option<f64>,
    pub h: f64,
    pub closure_tol: f64,
    pub out_dir: PathBuf,
}

impl Default for FrenetConfig {
    fn default() -> Self {
        FrenetConfig {
            profile: "mn:7,3".into(),
            s0: 0.0,
            length: None,
            h: 1e-4,
            closure_tol: 1e-6,
            out_dir: "out/frenet".into(),
        }
    }
}

impl FrenetConfig {
    pub fn validate(&self) -> Result<()> {
        ProfileSpec::parse(&self.profile)?;
        finite("s0", self.s0)?;
        if let Some(l) = self.length {
            positive("length", l)?;
        }
        positive("h", self.h)?;
        positive("closure_tol", self.closure_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TTransformConfig {
    pub profile: String,
    pub s0: f64,
    pub length: Option<f64>,
    pub h: f64,
    pub xi: f64,
    /// Riccati initial value `f(riccati_s0) = c`.
    pub c: f64,
    /// Defaults to `s0`.
    pub riccati_s0: Option<f64>,
    pub sign: i8,
    /// Transform each pole-free segment instead of failing on poles.
    pub segmented: bool,
    pub guard: usize,
    /// When both are set, use the constant-bending family instead.
    pub c_plus: Option<f64>,
    pub c_minus: Option<f64>,
    pub det_tol: f64,
    pub chi_tol: f64,
    pub out_dir: PathBuf,
}

impl Default for TTransformConfig {
    fn default() -> Self {
        TTransformConfig {
            profile: "mn:7,3".into(),
            s0: 0.0,
            length: None,
            h: 1e-3,
            xi: 1.01,
            c: 0.1,
            riccati_s0: None,
            sign: 1,
            segmented: false,
            guard: crate::ttransform::DEFAULT_GUARD,
            c_plus: None,
            c_minus: None,
            det_tol: 1e-8,
            chi_tol: 1e-8,
            out_dir: "out/ttransform".into(),
        }
    }
}

impl TTransformConfig {
    pub fn validate(&self) -> Result<()> {
        ProfileSpec::parse(&self.profile)?;
        finite("s0", self.s0)?;
        if let Some(l) = self.length {
            positive("length", l)?;
        }
        positive("h", self.h)?;
        finite("xi", self.xi)?;
        finite("c", self.c)?;
        sign("sign", self.sign)?;
        if self.c_plus.is_some() != self.c_minus.is_some() {
            return Err(Error::Config("c_plus and c_minus must be given together".into()));
        }
        positive("det_tol", self.det_tol)?;
        positive("chi_tol", self.chi_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PermuteConfig {
    pub profile: String,
    pub s0: f64,
    pub length: f64,
    pub h: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub c1: f64,
    pub c2: f64,
    pub tol: f64,
    pub g_tol: f64,
    pub out_dir: PathBuf,
}

impl Default for PermuteConfig {
    fn default() -> Self {
        PermuteConfig {
            profile: "mn:4,1".into(),
            s0: 0.0,
            length: 2.0,
            h: 1e-3,
            xi1: 0.8,
            xi2: 1.2,
            c1: -0.5,
            c2: 0.3,
            tol: 1e-6,
            g_tol: 1e-10,
            out_dir: "out/permute".into(),
        }
    }
}

impl PermuteConfig {
    pub fn validate(&self) -> Result<()> {
        ProfileSpec::parse(&self.profile)?;
        finite("s0", self.s0)?;
        positive("length", self.length)?;
        positive("h", self.h)?;
        for (n, v) in [("xi1", self.xi1), ("xi2", self.xi2), ("c1", self.c1), ("c2", self.c2)] {
            finite(n, v)?;
        }
        positive("tol", self.tol)?;
        positive("g_tol", self.g_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolitonConfig {
    pub m: i64,
    pub n: i64,
    pub p: f64,
    pub r: f64,
    pub c: f64,
    pub c_tilde: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub hs: f64,
    pub ht: f64,
    /// Bounds on `|κ̃(s,0) − κ₀|` and `|κ̂(s,0) − κ₀|` outside the window.
    pub decay_bound1: f64,
    pub decay_bound2: f64,
    pub decay_far: f64,
    pub decay_scan: f64,
    pub out_dir: PathBuf,
}

impl Default for SolitonConfig {
    fn default() -> Self {
        SolitonConfig {
            m: 4,
            n: 1,
            p: 1.4,
            r: 1.0,
            c: 0.0,
            c_tilde: 0.0,
            s_min: -10.0,
            s_max: 10.0,
            t_min: -0.5,
            t_max: 0.5,
            hs: 0.02,
            ht: 0.01,
            decay_bound1: 2.31e-9,
            decay_bound2: 1.73e-8,
            decay_far: 40.0,
            decay_scan: 0.05,
            out_dir: "out/soliton".into(),
        }
    }
}

impl SolitonConfig {
    pub fn validate(&self) -> Result<()> {
        kappa_mn(self.m, self.n)?;
        positive("p", self.p)?;
        positive("r", self.r)?;
        finite("c", self.c)?;
        finite("c_tilde", self.c_tilde)?;
        range("s range", self.s_min, self.s_max)?;
        range("t range", self.t_min, self.t_max)?;
        for (n, v) in [
            ("hs", self.hs),
            ("ht", self.ht),
            ("decay_bound1", self.decay_bound1),
            ("decay_bound2", self.decay_bound2),
            ("decay_far", self.decay_far),
            ("decay_scan", self.decay_scan),
        ] {
            positive(n, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LienConfig {
    /// `constant`, `soliton1` or `soliton2`.
    pub solution: String,
    pub m: i64,
    pub n: i64,
    pub p: f64,
    pub r: f64,
    pub c: f64,
    pub c_tilde: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub hs: f64,
    pub ht: f64,
    pub bending_tol: f64,
    pub out_dir: PathBuf,
}

impl Default for LienConfig {
    fn default() -> Self {
        LienConfig {
            solution: "soliton1".into(),
            m: 4,
            n: 1,
            p: 1.4,
            r: 1.0,
            c: 0.0,
            c_tilde: 0.0,
            s_min: -4.0,
            s_max: 4.0,
            t_min: -0.2,
            t_max: 0.2,
            hs: 0.002,
            ht: 0.01,
            bending_tol: 1e-3,
            out_dir: "out/lien".into(),
        }
    }
}

impl LienConfig {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.solution.as_str(), "constant" | "soliton1" | "soliton2") {
            return Err(Error::Config(format!(
                "solution must be constant, soliton1 or soliton2, got '{}'",
                self.solution
            )));
        }
        kappa_mn(self.m, self.n)?;
        positive("p", self.p)?;
        positive("r", self.r)?;
        range("s range", self.s_min, self.s_max)?;
        range("t range", self.t_min, self.t_max)?;
        positive("hs", self.hs)?;
        positive("ht", self.ht)?;
        positive("bending_tol", self.bending_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Curve CSV (`s, g11, g12, g21, g22, kappa`).
    pub curve: Option<PathBuf>,
    /// Frames CSV (`s` and the entries of `F₊`, `F₋`).
    pub frames: Option<PathBuf>,
    pub det_tol: f64,
    pub null_tol: f64,
    pub proper_time_tol: f64,
    pub bending_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { curve: None, frames: None, det_tol: 1e-8, null_tol: 1e-6, proper_time_tol: 1e-4, bending_tol: 1e-3 }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.curve.is_none() && self.frames.is_none() {
            return Err(Error::Config("verify needs a curve or a frames file".into()));
        }
        positive("det_tol", self.det_tol)?;
        positive("null_tol", self.null_tol)?;
        positive("proper_time_tol", self.proper_time_tol)?;
        positive("bending_tol", self.bending_tol)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportTorusConfig {
    pub frames: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl ExportTorusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames.is_none() || self.out.is_none() {
            return Err(Error::Config("export-torus needs frames and out paths".into()));
        }
        Ok(())
    }
}
