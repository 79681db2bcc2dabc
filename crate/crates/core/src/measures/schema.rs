//! Document form of a measure: `{"domain", "components": [{"kind", "params", "mass"}]}`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::family::{AngularDensity, IntervalFamily, RadialDensity};
use super::{ComponentKind, Domain, MeasureComponent, SpectralMeasure};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub domain: String,
    pub components: Vec<ComponentSpec>,
}

struct Params<'a> {
    path: String,
    map: &'a BTreeMap<String, f64>,
}

impl Params<'_> {
    fn get(&self, key: &str) -> Result<f64> {
        self.map.get(key).copied().ok_or_else(|| {
            Error::Config(format!("{}.params: missing parameter '{key}'", self.path))
        })
    }

    fn get_or(&self, key: &str, default: f64) -> f64 {
        self.map.get(key).copied().unwrap_or(default)
    }

    fn uint(&self, key: &str) -> Result<u32> {
        let v = self.get_or(key, 0.0);
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(Error::Config(format!(
                "{}.params.{key}: expected a nonnegative integer, got {v}",
                self.path
            )));
        }
        Ok(v as u32)
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        for k in self.map.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Config(format!(
                    "{}.params.{k}: unknown parameter (expected one of {allowed:?})",
                    self.path
                )));
            }
        }
        Ok(())
    }
}

fn parse_domain(s: &str) -> Result<Domain> {
    match s {
        "disk" => Ok(Domain::Disk),
        "left-half-plane" => Ok(Domain::LeftHalfPlane),
        other => Err(Error::Config(format!(
            "domain: unknown domain '{other}' (expected 'disk' or 'left-half-plane')"
        ))),
    }
}

impl ComponentSpec {
    fn to_component(&self, path: &str) -> Result<MeasureComponent> {
        let p = Params {
            path: path.to_string(),
            map: &self.params,
        };
        let kind = match self.kind.as_str() {
            "atom" => {
                p.only(&["re", "im"])?;
                ComponentKind::Atom {
                    z: Complex64::new(p.get("re")?, p.get_or("im", 0.0)),
                }
            }
            "uniform" => {
                p.only(&["a", "b"])?;
                ComponentKind::Interval(IntervalFamily::Uniform {
                    a: p.get("a")?,
                    b: p.get("b")?,
                })
            }
            "power-law" => {
                p.only(&["gamma"])?;
                ComponentKind::Interval(IntervalFamily::PowerLaw {
                    gamma: p.get("gamma")?,
                })
            }
            "def-niu" => {
                p.only(&["a"])?;
                ComponentKind::Interval(IntervalFamily::DefNiu { a: p.get("a")? })
            }
            "exp-sqrt-log" => {
                p.only(&[])?;
                ComponentKind::Interval(IntervalFamily::ExpSqrtLog)
            }
            "arc" => {
                p.only(&["kappa", "m"])?;
                ComponentKind::Arc(AngularDensity {
                    kappa: p.get_or("kappa", 0.0),
                    m: p.uint("m")?,
                })
            }
            "polar" => {
                p.only(&["rho", "beta", "kappa", "m"])?;
                ComponentKind::Polar {
                    radial: RadialDensity {
                        rho: p.get("rho")?,
                        beta: p.get_or("beta", 0.0),
                    },
                    angular: AngularDensity {
                        kappa: p.get_or("kappa", 0.0),
                        m: p.uint("m")?,
                    },
                }
            }
            "imaginary-segment" => {
                p.only(&["half_width"])?;
                ComponentKind::ImaginarySegment {
                    half_width: p.get("half_width")?,
                }
            }
            "real-segment" => {
                p.only(&["lo", "hi"])?;
                ComponentKind::RealSegment {
                    lo: p.get("lo")?,
                    hi: p.get("hi")?,
                }
            }
            "half-plane-box" => {
                p.only(&["re_lo", "re_hi", "im_half_width"])?;
                ComponentKind::HalfPlaneBox {
                    re_lo: p.get("re_lo")?,
                    re_hi: p.get("re_hi")?,
                    im_half_width: p.get("im_half_width")?,
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "{path}.kind: unknown component kind '{other}'"
                )))
            }
        };
        Ok(MeasureComponent::new(kind, self.mass))
    }

    fn from_component(c: &MeasureComponent) -> Self {
        let mut params = BTreeMap::new();
        let mut put = |k: &str, v: f64| {
            params.insert(k.to_string(), v);
        };
        match c.kind {
            ComponentKind::Atom { z } => {
                put("re", z.re);
                put("im", z.im);
            }
            ComponentKind::Interval(IntervalFamily::Uniform { a, b }) => {
                put("a", a);
                put("b", b);
            }
            ComponentKind::Interval(IntervalFamily::PowerLaw { gamma }) => put("gamma", gamma),
            ComponentKind::Interval(IntervalFamily::DefNiu { a }) => put("a", a),
            ComponentKind::Interval(IntervalFamily::ExpSqrtLog) => {}
            ComponentKind::Arc(a) => {
                put("kappa", a.kappa);
                put("m", a.m as f64);
            }
            ComponentKind::Polar { radial, angular } => {
                put("rho", radial.rho);
                put("beta", radial.beta);
                put("kappa", angular.kappa);
                put("m", angular.m as f64);
            }
            ComponentKind::ImaginarySegment { half_width } => put("half_width", half_width),
            ComponentKind::RealSegment { lo, hi } => {
                put("lo", lo);
                put("hi", hi);
            }
            ComponentKind::HalfPlaneBox {
                re_lo,
                re_hi,
                im_half_width,
            } => {
                put("re_lo", re_lo);
                put("re_hi", re_hi);
                put("im_half_width", im_half_width);
            }
        }
        ComponentSpec {
            kind: c.kind.name().to_string(),
            params,
            mass: c.mass,
        }
    }
}

impl MeasureSpec {
    pub fn to_measure(&self) -> Result<SpectralMeasure> {
        let domain = parse_domain(&self.domain)?;
        let comps = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| c.to_component(&format!("components[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        SpectralMeasure::new(domain, comps).map_err(|e| match e {
            Error::InvalidMeasure(m) => Error::Config(m),
            other => other,
        })
    }

    pub fn from_measure(m: &SpectralMeasure) -> Self {
        MeasureSpec {
            domain: m.domain().name().to_string(),
            components: m
                .components()
                .iter()
                .map(ComponentSpec::from_component)
                .collect(),
        }
    }
}

impl SpectralMeasure {
    /// Parse the JSON document form; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: MeasureSpec = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Config(format!("{}: {}", e.path(), e.inner())))?;
        spec.to_measure()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeasureSpec::from_measure(self)).expect("plain data serializes")
    }
}
