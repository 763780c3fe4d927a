//! Classic multimodal test functions with their standard search boxes and
//! reference minima.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::core::{Bounds, ObjectiveSpec};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BenchmarkKind {
    Eggholder,
    Rastrigin,
    Schaffer4,
    CrossInTray,
    Griewank,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 5] = [
        BenchmarkKind::Eggholder,
        BenchmarkKind::Rastrigin,
        BenchmarkKind::Schaffer4,
        BenchmarkKind::CrossInTray,
        BenchmarkKind::Griewank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Eggholder => "eggholder",
            BenchmarkKind::Rastrigin => "rastrigin",
            BenchmarkKind::Schaffer4 => "schaffer4",
            BenchmarkKind::CrossInTray => "crossintray",
            BenchmarkKind::Griewank => "griewank",
        }
    }

    /// Whether the function is defined for arbitrary dimension.
    pub fn scalable(self) -> bool {
        matches!(self, BenchmarkKind::Rastrigin | BenchmarkKind::Griewank)
    }

    /// Dimension used when a name carries no explicit suffix.
    pub fn default_dimension(self) -> usize {
        match self {
            BenchmarkKind::Rastrigin => 5,
            _ => 2,
        }
    }

    /// Half-width of the symmetric search box.
    pub fn half_range(self) -> f64 {
        match self {
            BenchmarkKind::Eggholder => 512.0,
            BenchmarkKind::Rastrigin => 5.12,
            BenchmarkKind::Schaffer4 => 100.0,
            BenchmarkKind::CrossInTray => 10.0,
            BenchmarkKind::Griewank => 600.0,
        }
    }

    /// Reference global minimum value, used as the success-metric target.
    pub fn known_minimum(self) -> f64 {
        match self {
            BenchmarkKind::Eggholder => -959.6407,
            BenchmarkKind::Rastrigin => 0.0,
            BenchmarkKind::Schaffer4 => 0.292579,
            BenchmarkKind::CrossInTray => -2.06261,
            BenchmarkKind::Griewank => 0.0,
        }
    }

    pub fn evaluate(self, x: &[f64]) -> f64 {
        match self {
            BenchmarkKind::Eggholder => eggholder(x),
            BenchmarkKind::Rastrigin => rastrigin(x),
            BenchmarkKind::Schaffer4 => schaffer4(x),
            BenchmarkKind::CrossInTray => cross_in_tray(x),
            BenchmarkKind::Griewank => griewank(x),
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown benchmark function '{s}'")))
    }
}

/// A benchmark function pinned to a concrete dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchmarkId {
    kind: BenchmarkKind,
    dimension: usize,
}

impl BenchmarkId {
    pub fn new(kind: BenchmarkKind, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::config("benchmark dimension must be at least 1"));
        }
        if !kind.scalable() && dimension != 2 {
            return Err(Error::config(format!(
                "{kind} is only defined in 2 dimensions, got {dimension}"
            )));
        }
        Ok(Self { kind, dimension })
    }

    /// Parse names like `griewank5` or `rastrigin`; a bare name uses the
    /// function's conventional dimension. Full names win over suffix
    /// splitting, so `schaffer4` stays the 2-D function it names.
    pub fn parse(token: &str) -> Result<Self> {
        if let Ok(kind) = token.parse::<BenchmarkKind>() {
            return Self::new(kind, kind.default_dimension());
        }
        let split = token.trim_end_matches(|c: char| c.is_ascii_digit());
        let kind: BenchmarkKind = split
            .parse()
            .map_err(|_| Error::config(format!("unknown benchmark function '{token}'")))?;
        let suffix = &token[split.len()..];
        let dimension = if suffix.is_empty() {
            kind.default_dimension()
        } else {
            suffix
                .parse()
                .map_err(|_| Error::config(format!("bad dimension suffix in '{token}'")))?
        };
        Self::new(kind, dimension)
    }

    pub fn kind(&self) -> BenchmarkKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::symmetric(self.kind.half_range(), self.dimension)
            .expect("benchmark boxes are valid by construction")
    }

    pub fn objective(&self) -> ObjectiveSpec {
        let kind = self.kind;
        ObjectiveSpec::new(self.bounds(), move |x| kind.evaluate(x))
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind, self.dimension)
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

pub fn eggholder(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    -(b + 47.0) * (a / 2.0 + b + 47.0).abs().sqrt().sin()
        - a * (a - (b + 47.0)).abs().sqrt().sin()
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

pub fn schaffer4(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let numerator = (a * a - b * b).abs().sin().cos().powi(2) - 0.5;
    let denominator = (1.0 + 0.001 * (a * a + b * b)).powi(2);
    0.5 + numerator / denominator
}

pub fn cross_in_tray(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let inner = (100.0 - (a * a + b * b).sqrt() / PI).abs();
    -0.0001 * ((a.sin() * b.sin() * inner.exp()).abs() + 1.0).powf(0.1)
}

pub fn griewank(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let product: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    sum - product + 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::RngStream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn reference_minima() {
        assert!((eggholder(&[512.0, 404.2319]) - (-959.6407)).abs() < 1e-3);
        assert!((cross_in_tray(&[1.3491, -1.3491]) - (-2.0626)).abs() < 1e-3);
        assert!((schaffer4(&[0.0, 1.25313]) - 0.2926).abs() < 1e-3);
        assert_eq!(rastrigin(&[0.0; 5]), 0.0);
        assert_eq!(griewank(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn cross_in_tray_symmetry() {
        let value = cross_in_tray(&[1.3491, -1.3491]);
        for signs in [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            let v = cross_in_tray(&[1.3491 * signs[0], -1.3491 * signs[1]]);
            assert!((v - value).abs() < 1e-12);
        }
    }

    #[test]
    fn rastrigin_is_even() {
        let x = [1.3, -0.7, 4.1];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(rastrigin(&x), rastrigin(&neg));
    }

    #[test]
    fn griewank_is_not_coordinate_symmetric() {
        // The 1/sqrt(i) scaling makes axes inequivalent.
        assert_ne!(griewank(&[100.0, 200.0]), griewank(&[200.0, 100.0]));
    }

    #[test]
    fn dimension_rules() {
        assert!(BenchmarkId::new(BenchmarkKind::Eggholder, 3).is_err());
        assert!(BenchmarkId::new(BenchmarkKind::Rastrigin, 0).is_err());
        assert_eq!(
            BenchmarkId::new(BenchmarkKind::Rastrigin, 7).unwrap().dimension(),
            7
        );
    }

    #[test]
    fn name_parsing() {
        let g5 = BenchmarkId::parse("griewank5").unwrap();
        assert_eq!(g5.kind(), BenchmarkKind::Griewank);
        assert_eq!(g5.dimension(), 5);
        assert_eq!(BenchmarkId::parse("rastrigin").unwrap().dimension(), 5);
        assert_eq!(BenchmarkId::parse("eggholder").unwrap().dimension(), 2);
        // schaffer4 ends in a digit that is part of the name, not a dimension.
        let s4 = BenchmarkId::parse("schaffer4").unwrap();
        assert_eq!(s4.kind(), BenchmarkKind::Schaffer4);
        assert_eq!(s4.dimension(), 2);
        assert!(BenchmarkId::parse("nosuchfn").is_err());
    }

    #[test]
    fn objective_wires_bounds_and_values() {
        let id = BenchmarkId::new(BenchmarkKind::Rastrigin, 5).unwrap();
        let obj = id.objective();
        assert_eq!(obj.dimension(), 5);
        assert_eq!(obj.bounds().upper(), &[5.12; 5]);
        assert_eq!(obj.evaluate(&[0.0; 5]).unwrap(), 0.0);
    }

    #[test]
    fn finite_across_the_whole_box() {
        let mut rng = RngStream::new(11, 0).rng();
        for kind in BenchmarkKind::ALL {
            let id = BenchmarkId::new(kind, kind.default_dimension()).unwrap();
            let bounds = id.bounds();
            for _ in 0..100_000 {
                let x: Vec<f64> = (0..bounds.dimension())
                    .map(|d| rng.random_range(bounds.lower()[d]..=bounds.upper()[d]))
                    .collect();
                let v = kind.evaluate(&x);
                assert!(v.is_finite(), "{kind} not finite at {x:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn rastrigin_nonnegative(x in proptest::collection::vec(-5.12f64..5.12, 1..6)) {
            prop_assert!(rastrigin(&x) >= 0.0);
        }

        #[test]
        fn griewank_nonnegative(x in proptest::collection::vec(-600.0f64..600.0, 1..6)) {
            prop_assert!(griewank(&x) >= 0.0);
        }
    }
}
