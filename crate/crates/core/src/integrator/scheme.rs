use std::fmt;

use crate::error::{Error, Result};

/// Kick coefficient of the 2-stage BCSS scheme.
pub const BCSS2_B: f64 = 0.211781;
/// Kick coefficient of the 2-stage minimum-error scheme.
pub const ME2_B: f64 = 0.193183;
/// Kick coefficient of the 3-stage BCSS scheme.
pub const BCSS3_B: f64 = 0.118880;
/// Kick coefficient of the 3-stage minimum-error scheme.
pub const ME3_B: f64 = 0.108991;

/// Name tag carried by a scheme, used in reports and trace files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeLabel {
    Vv,
    Vv2,
    Vv3,
    Bcss2,
    Bcss3,
    Me2,
    Me3,
    Aia,
    SAia,
    Custom,
}

impl fmt::Display for SchemeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SchemeLabel::Vv => "VV",
            SchemeLabel::Vv2 => "VV2",
            SchemeLabel::Vv3 => "VV3",
            SchemeLabel::Bcss2 => "BCSS2",
            SchemeLabel::Bcss3 => "BCSS3",
            SchemeLabel::Me2 => "ME2",
            SchemeLabel::Me3 => "ME3",
            SchemeLabel::Aia => "AIA",
            SchemeLabel::SAia => "sAIA",
            SchemeLabel::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Drift coefficient `a` paired with kick coefficient `b` on the 3-stage
/// stability hyperbola `6ab - 2a - b + 1/2 = 0`.
pub fn hyperbola_a(b: f64) -> f64 {
    (2.0 * b - 1.0) / (12.0 * b - 4.0)
}

/// Residual of the 3-stage hyperbola constraint.
pub fn hyperbola_residual(b: f64, a: f64) -> f64 {
    6.0 * a * b - 2.0 * a - b + 0.5
}

/// A palindromic k-stage kick/drift splitting integrator, k in {1, 2, 3}.
///
/// One step of length `h` applies kicks `kick[0] h, ..., kick[k] h` interleaved
/// with drifts `drift[0] h, ..., drift[k-1] h`, starting and ending with a kick.
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingScheme {
    stages: usize,
    b: f64,
    a: f64,
    label: SchemeLabel,
    kick: Vec<f64>,
    drift: Vec<f64>,
}

impl SplittingScheme {
    /// Standard 1-stage velocity Verlet.
    pub fn velocity_verlet() -> Self {
        SplittingScheme {
            stages: 1,
            b: 0.5,
            a: 1.0,
            label: SchemeLabel::Vv,
            kick: vec![0.5, 0.5],
            drift: vec![1.0],
        }
    }

    /// 2-stage scheme `B(bh) A(h/2) B((1-2b)h) A(h/2) B(bh)`.
    pub fn two_stage(b: f64) -> Result<Self> {
        check_open_half("b", b)?;
        Ok(SplittingScheme {
            stages: 2,
            b,
            a: 0.5,
            label: SchemeLabel::Custom,
            kick: vec![b, 1.0 - 2.0 * b, b],
            drift: vec![0.5, 0.5],
        })
    }

    /// 3-stage scheme `B(bh) A(ah) B((1/2-b)h) A((1-2a)h) B((1/2-b)h) A(ah) B(bh)`.
    pub fn three_stage(b: f64, a: f64) -> Result<Self> {
        check_open_half("b", b)?;
        check_open_half("a", a)?;
        Ok(SplittingScheme {
            stages: 3,
            b,
            a,
            label: SchemeLabel::Custom,
            kick: vec![b, 0.5 - b, 0.5 - b, b],
            drift: vec![a, 1.0 - 2.0 * a, a],
        })
    }

    /// 3-stage scheme with `a` taken from the stability hyperbola.
    pub fn three_stage_on_hyperbola(b: f64) -> Result<Self> {
        Self::three_stage(b, hyperbola_a(b))
    }

    /// Member of the k-stage family selected by `b` (k = 3 uses the hyperbola).
    pub fn from_family(stages: usize, b: f64) -> Result<Self> {
        match stages {
            1 => Ok(Self::velocity_verlet()),
            2 => Self::two_stage(b),
            3 => Self::three_stage_on_hyperbola(b),
            k => Err(Error::InvalidArgument(format!(
                "number of stages must be 1, 2 or 3, got {k}"
            ))),
        }
    }

    pub fn vv2() -> Self {
        Self::two_stage(0.25).unwrap().with_label(SchemeLabel::Vv2)
    }

    pub fn bcss2() -> Self {
        Self::two_stage(BCSS2_B).unwrap().with_label(SchemeLabel::Bcss2)
    }

    pub fn me2() -> Self {
        Self::two_stage(ME2_B).unwrap().with_label(SchemeLabel::Me2)
    }

    pub fn vv3() -> Self {
        Self::three_stage(1.0 / 6.0, 1.0 / 3.0)
            .unwrap()
            .with_label(SchemeLabel::Vv3)
    }

    pub fn bcss3() -> Self {
        Self::three_stage_on_hyperbola(BCSS3_B)
            .unwrap()
            .with_label(SchemeLabel::Bcss3)
    }

    pub fn me3() -> Self {
        Self::three_stage_on_hyperbola(ME3_B)
            .unwrap()
            .with_label(SchemeLabel::Me3)
    }

    pub fn with_label(mut self, label: SchemeLabel) -> Self {
        self.label = label;
        self
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Outer kick coefficient (0.5 for velocity Verlet).
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Outer drift coefficient (1 for velocity Verlet, 1/2 for 2-stage schemes).
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn label(&self) -> SchemeLabel {
        self.label
    }

    /// Kick weights, `stages + 1` entries, summing to one.
    pub fn kick_weights(&self) -> &[f64] {
        &self.kick
    }

    /// Drift weights, `stages` entries, summing to one.
    pub fn drift_weights(&self) -> &[f64] {
        &self.drift
    }
}

fn check_open_half(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "coefficient {name} = {v} must lie in (0, 0.5)"
        )))
    }
}
