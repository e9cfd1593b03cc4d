//! Scene files and the built-in scenes.
//!
//! A scene is a JSON document:
//!
//! ```json
//! {
//!   "schema": 1,
//!   "name": "my_triod",
//!   "topology": {
//!     "curve_count": 3,
//!     "junctions": [{"ends": [{"curve": 0, "end": "start"}, ...]}],
//!     "endpoints": [{"curve": 0, "end": "finish", "position": [1.0, 0.0]}, ...],
//!     "closed_curves": []
//!   },
//!   "curves": [{"type": "segment", "from": [0, 0], "to": [1, 0]}, ...],
//!   "params": {"mu": 1.0, "grid_n": 64, "dt": 1e-4, "t_end": 1.0},
//!   "admissibility": "enforce"
//! }
//! ```
//!
//! Curve types are `segment`, `arc`, `cubic_spline` and `bent`; omitted
//! parameters take their defaults.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FlowParams, NetworkTopology};
use crate::primitives::{Bump, Primitive};
use crate::vec2::Vec2;

pub const SCHEMA_VERSION: u32 = 1;

/// What to do with a network that fails the admissibility check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibilityMode {
    /// Refuse to run it.
    #[default]
    Enforce,
    /// Record the report and run anyway (the first step imposes the
    /// boundary conditions).
    Report,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub schema: u32,
    #[serde(default)]
    pub name: String,
    pub topology: NetworkTopology,
    pub curves: Vec<Primitive>,
    #[serde(default)]
    pub params: FlowParams,
    #[serde(default)]
    pub admissibility: AdmissibilityMode,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        if self.curves.len() != self.topology.curve_count {
            return Err(Error::Scene {
                path: "curves".into(),
                message: format!(
                    "topology declares {} curves but {} are given",
                    self.topology.curve_count,
                    self.curves.len()
                ),
            });
        }
        for (i, c) in self.curves.iter().enumerate() {
            c.validate().map_err(|message| Error::Scene {
                path: format!("curves[{i}]"),
                message,
            })?;
        }
        self.params.validate()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Parses and validates a scene document.
pub fn parse_scene(text: &str) -> Result<Scene> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Scene {
        path: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    match value.get("schema").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(Error::UnsupportedSchema(v.min(u32::MAX as u64) as u32)),
        None => {
            return Err(Error::Scene {
                path: "schema".into(),
                message: "missing or non-integer schema version".into(),
            })
        }
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    let scene: Scene = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Scene {
            path,
            message: format!("{inner} (line {} column {})", inner.line(), inner.column()),
        }
    })?;
    scene.validate()?;
    Ok(scene)
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    parse_scene(&std::fs::read_to_string(path)?)
}

/// Parameters of the parametrized built-in scenes.
#[derive(Clone, Debug, PartialEq)]
pub struct BuiltinArgs {
    /// Arc length of the two arcs of `theta_eps`.
    pub eps: f64,
    /// Radius of `circle`.
    pub radius: f64,
}

impl Default for BuiltinArgs {
    fn default() -> Self {
        BuiltinArgs { eps: 0.1, radius: 2.0 }
    }
}

pub const BUILTIN_SCENES: &[&str] = &[
    "steiner_triod",
    "perturbed_triod",
    "symmetric_triod",
    "theta_symmetric",
    "theta_eps",
    "circle",
    "segment",
    "bad_triod_90",
];

/// Looks up a built-in scene by name.
pub fn builtin(name: &str, args: &BuiltinArgs) -> Result<Scene> {
    let scene = match name {
        "steiner_triod" => steiner_triod(),
        "perturbed_triod" => bent_triod("perturbed_triod", [0.4, -0.3, 0.2]),
        "symmetric_triod" => bent_triod("symmetric_triod", [0.3; 3]),
        "theta_symmetric" => theta_symmetric(),
        "theta_eps" => theta_eps(args.eps),
        "circle" => circle(args.radius),
        "segment" => segment(),
        "bad_triod_90" => bad_triod_90(),
        _ => return Err(Error::UnknownScene(name.to_string())),
    };
    scene.validate()?;
    Ok(scene)
}

fn scene(name: &str, topology: NetworkTopology, curves: Vec<Primitive>, params: FlowParams) -> Scene {
    Scene {
        schema: SCHEMA_VERSION,
        name: name.to_string(),
        topology,
        curves,
        params,
        admissibility: AdmissibilityMode::Enforce,
    }
}

fn straight_triod(name: &str, ends: [Vec2; 3]) -> Scene {
    let curves = ends.iter().map(|&e| Primitive::Segment { from: Vec2::ZERO, to: e }).collect();
    let params = FlowParams {
        mu: 1.0,
        grid_n: 64,
        dt: 1e-3,
        t_end: 1.0,
        ..Default::default()
    };
    scene(name, NetworkTopology::triod(ends), curves, params)
}

/// Three unit segments from the origin at 120°.
fn steiner_triod() -> Scene {
    straight_triod("steiner_triod", [0, 1, 2].map(|i| Vec2::from_angle(2.0 * PI * i as f64 / 3.0)))
}

/// Three segments at 90°, 90° and 180°.
fn bad_triod_90() -> Scene {
    straight_triod("bad_triod_90", [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(-1.0, 0.0)])
}

/// Three unit-length curves leaving the origin at 120°, each bent by a
/// curvature bump in its middle; straight near both ends.
fn bent_triod(name: &str, turning: [f64; 3]) -> Scene {
    let curves: Vec<Primitive> = (0..3)
        .map(|i| Primitive::Bent {
            start: Vec2::ZERO,
            heading: 2.0 * PI * i as f64 / 3.0,
            length: 1.0,
            bumps: vec![Bump::new(0.2, 0.8, turning[i])],
        })
        .collect();
    let ends = [0, 1, 2].map(|i| curves[i].finish());
    let params = FlowParams {
        mu: 1.0,
        grid_n: 64,
        dt: 1e-4,
        t_end: 0.05,
        ..Default::default()
    };
    scene(name, NetworkTopology::triod(ends), curves, params)
}

/// Theta network symmetric under both reflections: a straight middle curve
/// from (-1, 0) to (1, 0) and two curved arcs that leave and enter at 120°.
fn theta_symmetric() -> Scene {
    let turn = -2.0 * PI / 3.0;
    let unit = |sign: f64, length: f64| Primitive::Bent {
        start: Vec2::new(-1.0, 0.0),
        heading: -sign * turn,
        length,
        bumps: vec![Bump::new(0.1, 0.4, sign * turn), Bump::new(0.6, 0.9, sign * turn)],
    };
    // the arcs close up by symmetry once their x-extent is 2
    let length = 2.0 / (unit(1.0, 1.0).finish().x + 1.0);
    let upper = unit(1.0, length);
    let lower = unit(-1.0, length);
    let middle = Primitive::Segment {
        from: Vec2::new(-1.0, 0.0),
        to: Vec2::new(1.0, 0.0),
    };
    let params = FlowParams {
        mu: 1.0,
        grid_n: 64,
        dt: 1e-4,
        t_end: 0.05,
        ..Default::default()
    };
    scene("theta_symmetric", NetworkTopology::theta(), vec![middle, upper, lower], params)
}

/// Two unit-circle arcs of length `eps` bounding a lens, plus its chord.
/// Junctions at `(∓ sin(eps/2), 0)`; the angles there are `eps/2`, `eps/2`
/// and `eps`, so the network is not admissible and runs in report mode.
fn theta_eps(eps: f64) -> Scene {
    let h = 0.5 * eps;
    let c = h.cos();
    let chord = Primitive::Segment {
        from: Vec2::new(-h.sin(), 0.0),
        to: Vec2::new(h.sin(), 0.0),
    };
    let upper = Primitive::Arc {
        center: Vec2::new(0.0, -c),
        radius: 1.0,
        start_angle: 0.5 * PI + h,
        sweep: -eps,
    };
    let lower = Primitive::Arc {
        center: Vec2::new(0.0, c),
        radius: 1.0,
        start_angle: -0.5 * PI - h,
        sweep: eps,
    };
    let params = FlowParams {
        mu: 1.0,
        grid_n: 128,
        dt: 1e-9,
        t_end: 1e-4,
        ..Default::default()
    };
    let mut s = scene("theta_eps", NetworkTopology::theta(), vec![chord, upper, lower], params);
    s.admissibility = AdmissibilityMode::Report;
    s
}

/// Counter-clockwise circle of radius `r` about the origin.
fn circle(r: f64) -> Scene {
    let arc = Primitive::Arc {
        center: Vec2::ZERO,
        radius: r,
        start_angle: 0.0,
        sweep: 2.0 * PI,
    };
    let params = FlowParams {
        mu: 4.0,
        grid_n: 128,
        dt: 1e-3,
        t_end: 5.0,
        ..Default::default()
    };
    scene("circle", NetworkTopology::closed(), vec![arc], params)
}

/// Unit segment with both ends fixed.
fn segment() -> Scene {
    let (a, b) = (Vec2::ZERO, Vec2::new(1.0, 0.0));
    let params = FlowParams {
        mu: 1.0,
        grid_n: 64,
        dt: 1e-3,
        t_end: 1.0,
        ..Default::default()
    };
    scene("segment", NetworkTopology::segment(a, b), vec![Primitive::Segment { from: a, to: b }], params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steiner_triod_layout() {
        let s = builtin("steiner_triod", &BuiltinArgs::default()).unwrap();
        assert_eq!(s.curves.len(), 3);
        assert!(s.curves.iter().all(|c| matches!(c, Primitive::Segment { .. })));
        assert_eq!(s.topology.junctions.len(), 1);
        assert_eq!(s.topology.endpoints.len(), 3);
    }

    #[test]
    fn theta_eps_has_two_short_arcs() {
        let eps = 0.05;
        let s = builtin("theta_eps", &BuiltinArgs { eps, ..Default::default() }).unwrap();
        assert_eq!(s.topology.junctions.len(), 2);
        let arcs: Vec<f64> = s
            .curves
            .iter()
            .filter(|c| matches!(c, Primitive::Arc { .. }))
            .map(|c| c.length())
            .collect::<Option<_>>()
            .unwrap();
        assert_eq!(arcs.len(), 2);
        assert!(arcs.iter().all(|l| (l - eps).abs() < 1e-14));
    }

    #[test]
    fn every_builtin_validates_and_round_trips() {
        for name in BUILTIN_SCENES {
            let s = builtin(name, &BuiltinArgs::default()).unwrap();
            s.validate().unwrap();
            assert_eq!(&s.name, name);
            let back = parse_scene(&s.to_json().unwrap()).unwrap();
            assert_eq!(back, s, "{name}");
        }
        assert!(builtin("nope", &BuiltinArgs::default()).is_err());
    }

    #[test]
    fn malformed_field_is_named() {
        let mut v: serde_json::Value =
            serde_json::from_str(&builtin("segment", &BuiltinArgs::default()).unwrap().to_json().unwrap()).unwrap();
        v["params"]["mu"] = serde_json::json!("heavy");
        match parse_scene(&v.to_string()) {
            Err(Error::Scene { path, .. }) => assert_eq!(path, "params.mu"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_scene("{"), Err(Error::Scene { .. })));
    }

    #[test]
    fn other_schema_versions_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&builtin("segment", &BuiltinArgs::default()).unwrap().to_json().unwrap()).unwrap();
        v["schema"] = serde_json::json!(7);
        assert!(matches!(parse_scene(&v.to_string()), Err(Error::UnsupportedSchema(7))));
        v.as_object_mut().unwrap().remove("schema");
        assert!(matches!(parse_scene(&v.to_string()), Err(Error::Scene { .. })));
    }
}
