//! Scene descriptions for both domains. Every numeric default is an assumed
//! value; all of them can be overridden from a scenario file.

use serde::{Deserialize, Serialize};

use crate::robot::{Config, SerialArm};
use crate::spatial::Transform;

/// A manipulator mounted in the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmPlacement {
    pub name: String,
    /// `[x, y, z, yaw]` of the arm base.
    pub base: [f64; 4],
    pub model: SerialArm,
    pub home: Config,
    /// Stiffest Cartesian impedance setting, `[N/m ×3, N·m/rad ×3]`.
    pub stiffness: [f64; 6],
}

impl Default for ArmPlacement {
    fn default() -> Self {
        Self {
            name: "r1".into(),
            base: [0.0, 0.0, 0.0, 0.0],
            model: SerialArm::seven_dof(),
            home: SerialArm::seven_dof_home(),
            stiffness: [3000.0, 3000.0, 3000.0, 50.0, 50.0, 50.0],
        }
    }
}

impl ArmPlacement {
    pub fn named(name: &str, base: [f64; 4]) -> Self {
        Self {
            name: name.into(),
            base,
            ..Self::default()
        }
    }

    pub fn base_pose(&self) -> Transform {
        let [x, y, z, yaw] = self.base;
        Transform::rot_z(yaw).with_translation(x, y, z)
    }
}

/// Axis-aligned rectangle on the table top.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub center: [f64; 2],
    pub size: [f64; 2],
    /// Height of the region's surface above the table.
    #[serde(default)]
    pub height: f64,
    /// Friction between the region and the object resting on it.
    pub mu: f64,
}

impl Region {
    pub fn contains(&self, x: f64, y: f64, clearance: f64) -> bool {
        (x - self.center[0]).abs() <= self.size[0] / 2.0 - clearance
            && (y - self.center[1]).abs() <= self.size[1] / 2.0 - clearance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BottleSpec {
    pub mass: f64,
    pub radius: f64,
    /// Base to top of the lid.
    pub height: f64,
    pub lid_radius: f64,
    /// Height of the side grasp used to carry the bottle.
    pub grasp_height: f64,
    pub position: [f64; 2],
}

impl Default for BottleSpec {
    fn default() -> Self {
        Self {
            mass: 0.3,
            radius: 0.04,
            height: 0.15,
            lid_radius: 0.03,
            grasp_height: 0.07,
            position: [0.5, 0.05],
        }
    }
}

/// Gripper parameters shared by all contacts made with the hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandSpec {
    /// Squeeze force of the parallel jaws.
    pub grip_force: f64,
    /// Friction of the jaw pads.
    pub mu: f64,
    pub palm_mu: f64,
    pub palm_radius: f64,
    pub finger_mu: f64,
    /// Distance of each fingertip pad center from the lid axis.
    pub finger_offset: f64,
    /// Side length of a square fingertip or jaw pad.
    pub pad_size: f64,
}

impl Default for HandSpec {
    fn default() -> Self {
        Self {
            grip_force: 60.0,
            mu: 0.8,
            palm_mu: 0.5,
            palm_radius: 0.04,
            finger_mu: 0.5,
            finger_offset: 0.015,
            pad_size: 0.02,
        }
    }
}

/// A stubby driver standing tip-down in a holder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolSpec {
    pub position: [f64; 2],
    /// Height of the tip above the table while in the holder.
    pub holder_height: f64,
    /// Tip to top of the handle.
    pub length: f64,
    pub tip_radius: f64,
    pub tip_mu: f64,
    pub mass: f64,
}

impl Default for ToolSpec {
    fn default() -> Self {
        Self {
            position: [0.35, -0.3],
            holder_height: 0.05,
            length: 0.12,
            tip_radius: 0.025,
            tip_mu: 0.9,
            mass: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViseSpec {
    pub position: [f64; 2],
}

impl Default for ViseSpec {
    fn default() -> Self {
        Self {
            position: [0.45, 0.25],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSurface {
    Table,
    Mat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BottleScene {
    /// The first arm twists; a second arm can fixture.
    pub arms: Vec<ArmPlacement>,
    pub table: Region,
    pub mat: Option<Region>,
    pub vise: Option<ViseSpec>,
    pub tool: Option<ToolSpec>,
    pub bottle: BottleSpec,
    pub start: StartSurface,
    pub hand: HandSpec,
    /// Largest extra downward force the planner may choose.
    pub max_down_force: f64,
}

impl Default for BottleScene {
    fn default() -> Self {
        Self {
            arms: vec![
                ArmPlacement::named("r1", [0.0, 0.0, 0.0, 0.0]),
                ArmPlacement::named("r2", [1.0, 0.0, 0.0, std::f64::consts::PI]),
            ],
            table: Region {
                center: [0.5, 0.0],
                size: [1.2, 0.9],
                height: 0.0,
                mu: 0.2,
            },
            mat: Some(Region {
                center: [0.45, -0.22],
                size: [0.16, 0.16],
                height: 0.005,
                mu: 0.8,
            }),
            vise: Some(ViseSpec::default()),
            tool: Some(ToolSpec::default()),
            bottle: BottleSpec::default(),
            start: StartSurface::Table,
            hand: HandSpec::default(),
            max_down_force: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSpec {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub mass: f64,
    /// Friction between beam and table.
    pub mu: f64,
    /// Center of the beam; the beam runs along world `y`.
    pub position: [f64; 2],
}

impl Default for BeamSpec {
    fn default() -> Self {
        Self {
            length: 0.6,
            width: 0.06,
            height: 0.04,
            mass: 0.5,
            mu: 0.2,
            position: [0.5, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NutSpec {
    /// Height of the nut center above the beam top.
    pub height: f64,
    pub across_flats: f64,
}

impl Default for NutSpec {
    fn default() -> Self {
        Self {
            height: 0.03,
            across_flats: 0.017,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub mass: f64,
    /// Where the weight waits on the table.
    pub position: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpannerSpec {
    pub position: [f64; 2],
    /// Nut axis to the middle of the handle.
    pub lever: f64,
}

impl Default for SpannerSpec {
    fn default() -> Self {
        Self {
            position: [0.3, -0.3],
            lever: 0.12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NutScene {
    pub arms: Vec<ArmPlacement>,
    pub beam: BeamSpec,
    pub nut: NutSpec,
    pub weights: Vec<WeightSpec>,
    /// Length of every weight along the beam.
    pub weight_extent: f64,
    /// Width and height of every weight.
    pub weight_width: f64,
    /// Keep weights at least this far from the bolt.
    pub bolt_clearance: f64,
    /// Largest offset of a weight grasp from the weight's center.
    pub grasp_offset: f64,
    pub spanner: Option<SpannerSpec>,
    pub hand: HandSpec,
}

impl Default for NutScene {
    fn default() -> Self {
        Self {
            arms: vec![ArmPlacement::named("r1", [0.0, 0.0, 0.0, 0.0])],
            beam: BeamSpec::default(),
            nut: NutSpec::default(),
            weights: vec![
                WeightSpec {
                    mass: 0.2,
                    position: [0.35, -0.3],
                },
                WeightSpec {
                    mass: 1.0,
                    position: [0.35, 0.3],
                },
                WeightSpec {
                    mass: 4.0,
                    position: [0.25, 0.0],
                },
            ],
            weight_extent: 0.08,
            weight_width: 0.04,
            bolt_clearance: 0.02,
            grasp_offset: 0.03,
            spanner: None,
            hand: HandSpec {
                grip_force: 30.0,
                ..HandSpec::default()
            },
        }
    }
}
