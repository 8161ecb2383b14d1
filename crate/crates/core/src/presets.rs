//! Named built-in maps.

use crate::analytic::MapSpec;
use crate::error::{Error, Result};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub spec: fn() -> MapSpec,
}

fn scaled_shear(alpha: f64, power: u32, scale: f64) -> MapSpec {
    let mut g = vec![[0.0, 0.0]; power as usize + 1];
    g[power as usize] = [alpha / scale, 0.0];
    MapSpec::Polynomial {
        h: vec![[0.0, 0.0], [1.0 / scale, 0.0]],
        g,
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "identity",
        description: "f(z) = z",
        spec: || MapSpec::Polynomial {
            h: vec![[0.0, 0.0], [1.0, 0.0]],
            g: vec![],
        },
    },
    Preset {
        name: "rotation",
        description: "f(z) = e^{0.7i} z",
        spec: || MapSpec::Automorphism {
            a: [0.0, 0.0],
            rotation: 0.7,
        },
    },
    Preset {
        name: "automorphism-0.5",
        description: "f(z) = (z - 0.5) / (1 - 0.5 z)",
        spec: || MapSpec::Automorphism {
            a: [0.5, 0.0],
            rotation: 0.0,
        },
    },
    Preset {
        name: "example1-affine-0.5",
        description: "f(z) = z + 0.5 conj(z)",
        spec: || MapSpec::Affine { alpha: [0.5, 0.0] },
    },
    Preset {
        name: "affine-selfmap-0.5",
        description: "f(z) = (z + 0.5 conj(z)) / 1.5",
        spec: || scaled_shear(0.5, 1, 1.5),
    },
    Preset {
        name: "remark-shear-0.3",
        description: "f(z) = z + 0.3 conj(z)^2",
        spec: || MapSpec::Shear {
            alpha: [0.3, 0.0],
            power: 2,
        },
    },
    Preset {
        name: "shear-selfmap-0.3",
        description: "f(z) = (z + 0.3 conj(z)^2) / 1.3",
        spec: || scaled_shear(0.3, 2, 1.3),
    },
    Preset {
        name: "shear-0.1",
        description: "f(z) = z + 0.1 conj(z)^2",
        spec: || MapSpec::Shear {
            alpha: [0.1, 0.0],
            power: 2,
        },
    },
];

pub fn preset(name: &str) -> Result<MapSpec> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(|p| (p.spec)())
        .ok_or_else(|| {
            let known: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
            Error::Parse(format!(
                "unknown preset {name:?}; known presets: {}",
                known.join(", ")
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::construct_map;
    use crate::distortion::boundary_sup;

    #[test]
    fn every_preset_builds() {
        for p in PRESETS {
            construct_map(&(p.spec)()).unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }

    #[test]
    fn selfmap_presets_are_selfmaps() {
        for name in [
            "affine-selfmap-0.5",
            "shear-selfmap-0.3",
            "rotation",
            "identity",
        ] {
            let f = construct_map(&preset(name).unwrap()).unwrap();
            assert!(boundary_sup(&f, 1024).unwrap() <= 1.0 + 1e-12, "{name}");
        }
    }

    #[test]
    fn unknown_name_is_a_parse_error() {
        assert!(matches!(preset("nope"), Err(Error::Parse(_))));
    }
}
