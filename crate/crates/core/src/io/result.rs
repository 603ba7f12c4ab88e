use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Quaternion;

use super::{fixed, fixed_vec, parse_f64, parse_usize, parse_vec, read_text, write_text, Cursor, PRECISE_DECIMALS};
use crate::calibration::{AccumulatorConfig, BodyMeasurements, CenterEstimate, HeadCenter, HeadGridConfig};
use crate::coupling::{Binding, OffsetSet};
use crate::device_id::{BodyRole, RoleAssignment, TPoseHeights};
use crate::error::{Error, Result};
use crate::geometry::{Quat, Vec3};
use crate::skeleton::JointName;

pub const RESULT_FORMAT: &str = "calibration-result";
pub const RESULT_VERSION: u32 = 1;

/// How a sphere-fit centre was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterProvenance {
    pub config: AccumulatorConfig,
    pub accepted: usize,
    pub samples: usize,
    pub radius: f64,
    pub rms_residual: f64,
}

impl From<&CenterEstimate> for CenterProvenance {
    fn from(e: &CenterEstimate) -> Self {
        Self {
            config: e.config,
            accepted: e.accepted,
            samples: e.samples,
            radius: e.fit.radius,
            rms_residual: e.fit.rms_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub tool_version: String,
    /// (label, sha256) of every input stream.
    pub inputs: Vec<(String, String)>,
    pub roles: RoleAssignment,
    pub measurements: BodyMeasurements,
    pub lshoulder: CenterProvenance,
    pub rshoulder: CenterProvenance,
    pub neck: CenterProvenance,
    pub head_grid: HeadGridConfig,
    pub head: HeadCenter,
    pub offsets: Option<OffsetSet>,
}

fn q_fields(q: &Quat) -> String {
    let q = q.quaternion();
    [q.w, q.i, q.j, q.k]
        .iter()
        .map(|v| fixed(*v, PRECISE_DECIMALS))
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_center(out: &mut String, name: &str, c: &CenterProvenance) {
    let f = |v| fixed(v, PRECISE_DECIMALS);
    writeln!(
        out,
        "center {name} {} {} {} {} {} {} {}",
        c.config.min_points,
        f(c.config.min_spacing),
        f(c.config.tolerance),
        c.accepted,
        c.samples,
        f(c.radius),
        f(c.rms_residual)
    )
    .unwrap();
}

impl CalibrationResult {
    pub fn to_text(&self) -> String {
        let f = |v| fixed(v, PRECISE_DECIMALS);
        let v = |x: &Vec3| fixed_vec(x, PRECISE_DECIMALS);
        let m = &self.measurements;
        let mut out = String::new();
        writeln!(out, "format {RESULT_FORMAT} {RESULT_VERSION}").unwrap();
        writeln!(out, "tool_version {}", self.tool_version).unwrap();
        for (label, digest) in &self.inputs {
            writeln!(out, "input {label} {digest}").unwrap();
        }
        let roles: Vec<String> = BodyRole::ALL
            .iter()
            .map(|r| format!("{r} {}", self.roles.device(*r)))
            .collect();
        writeln!(out, "roles {}", roles.join(" ")).unwrap();
        let h = &self.roles.tpose_heights;
        writeln!(out, "tpose_heights {} {} {} {}", f(h.hmd), f(h.root), f(h.lfoot), f(h.rfoot)).unwrap();
        for (name, x) in [
            ("c_lshoulder", &m.c_lshoulder),
            ("c_rshoulder", &m.c_rshoulder),
            ("c_neck", &m.c_neck),
            ("c_head", &m.c_head),
            ("head_local", &m.head_local),
        ] {
            writeln!(out, "measure {name} {}", v(x)).unwrap();
        }
        for (name, x) in [
            ("l_arm_left", m.l_arm_left),
            ("l_arm_right", m.l_arm_right),
            ("l_leg", m.l_leg),
            ("l_torso", m.l_torso),
            ("l_neck", m.l_neck),
            ("l_eyes", m.l_eyes),
            ("shoulder_width", m.shoulder_width),
            ("hmd_height", m.hmd_height),
            ("root_height", m.root_height),
            ("foot_height", m.foot_height),
        ] {
            writeln!(out, "measure {name} {}", f(x)).unwrap();
        }
        write_center(&mut out, "lshoulder", &self.lshoulder);
        write_center(&mut out, "rshoulder", &self.rshoulder);
        write_center(&mut out, "neck", &self.neck);
        let g = &self.head_grid;
        writeln!(
            out,
            "head_grid {} {} {} {} {} {} {} {}",
            g.rows,
            g.cols,
            f(g.cell_size),
            self.head.cell.0,
            self.head.cell.1,
            f(self.head.max_displacement),
            v(&self.head.local),
            v(&self.head.world)
        )
        .unwrap();
        if let Some(o) = &self.offsets {
            writeln!(out, "offsets {}", f(o.timestamp)).unwrap();
            for b in &o.bindings {
                writeln!(out, "binding {} {} {} {}", b.role, b.joint, v(&b.offset), q_fields(&b.rotation)).unwrap();
            }
            writeln!(out, "head_anchor {}", v(&o.head_anchor)).unwrap();
            writeln!(out, "spine_rest_axis {}", v(&o.spine_rest_axis)).unwrap();
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut cur = Cursor::new(file, text);
        cur.expect_header(RESULT_FORMAT, RESULT_VERSION)?;
        let (_, fields) = cur.expect("tool_version")?;
        let tool_version = fields.join(" ");
        let mut inputs = Vec::new();
        while cur.peek_key() == Some("input") {
            let (n, fields) = cur.expect("input")?;
            match fields.as_slice() {
                [label, digest] => inputs.push((label.to_string(), digest.to_string())),
                _ => return Err(cur.err(n, "input takes: label digest")),
            }
        }

        let (n, fields) = cur.expect("roles")?;
        if fields.len() != 12 {
            return Err(cur.err(n, "roles lists six role/device pairs"));
        }
        let mut devices = [usize::MAX; 6];
        for pair in fields.chunks(2) {
            let role: BodyRole = pair[0].parse().map_err(|e: Error| cur.err(n, e.to_string()))?;
            let k = BodyRole::ALL.iter().position(|r| *r == role).expect("known role");
            devices[k] = parse_usize(file, n, pair[1])?;
        }
        if devices.contains(&usize::MAX) {
            return Err(cur.err(n, "roles must name all six roles"));
        }
        let (n, fields) = cur.expect("tpose_heights")?;
        if fields.len() != 4 {
            return Err(cur.err(n, "tpose_heights takes four values"));
        }
        let hv: Vec<f64> = fields
            .iter()
            .map(|s| parse_f64(file, n, s))
            .collect::<Result<_>>()?;
        let roles = RoleAssignment::new(
            devices,
            TPoseHeights {
                hmd: hv[0],
                root: hv[1],
                lfoot: hv[2],
                rfoot: hv[3],
            },
        );

        let mut vecs = Vec::new();
        for name in ["c_lshoulder", "c_rshoulder", "c_neck", "c_head", "head_local"] {
            let (n, fields) = cur.expect("measure")?;
            if fields.first() != Some(&name) {
                return Err(cur.err(n, format!("expected measure {name}")));
            }
            vecs.push(parse_vec(file, n, &fields[1..])?);
        }
        let mut scalars = Vec::new();
        for name in [
            "l_arm_left",
            "l_arm_right",
            "l_leg",
            "l_torso",
            "l_neck",
            "l_eyes",
            "shoulder_width",
            "hmd_height",
            "root_height",
            "foot_height",
        ] {
            let (n, fields) = cur.expect("measure")?;
            match fields.as_slice() {
                [k, x] if *k == name => scalars.push(parse_f64(file, n, x)?),
                _ => return Err(cur.err(n, format!("expected measure {name} <value>"))),
            }
        }
        let measurements = BodyMeasurements {
            c_lshoulder: vecs[0],
            c_rshoulder: vecs[1],
            c_neck: vecs[2],
            c_head: vecs[3],
            head_local: vecs[4],
            l_arm_left: scalars[0],
            l_arm_right: scalars[1],
            l_leg: scalars[2],
            l_torso: scalars[3],
            l_neck: scalars[4],
            l_eyes: scalars[5],
            shoulder_width: scalars[6],
            hmd_height: scalars[7],
            root_height: scalars[8],
            foot_height: scalars[9],
        };

        let mut center = |want: &str| -> Result<CenterProvenance> {
            let (n, fields) = cur.expect("center")?;
            if fields.len() != 8 || fields[0] != want {
                return Err(cur.err(n, format!("expected center {want} with seven values")));
            }
            Ok(CenterProvenance {
                config: AccumulatorConfig {
                    min_points: parse_usize(file, n, fields[1])?,
                    min_spacing: parse_f64(file, n, fields[2])?,
                    tolerance: parse_f64(file, n, fields[3])?,
                },
                accepted: parse_usize(file, n, fields[4])?,
                samples: parse_usize(file, n, fields[5])?,
                radius: parse_f64(file, n, fields[6])?,
                rms_residual: parse_f64(file, n, fields[7])?,
            })
        };
        let lshoulder = center("lshoulder")?;
        let rshoulder = center("rshoulder")?;
        let neck = center("neck")?;

        let (n, fields) = cur.expect("head_grid")?;
        if fields.len() != 12 {
            return Err(cur.err(n, "head_grid takes rows cols s i j M local(3) world(3)"));
        }
        let head_grid = HeadGridConfig {
            rows: parse_usize(file, n, fields[0])?,
            cols: parse_usize(file, n, fields[1])?,
            cell_size: parse_f64(file, n, fields[2])?,
        };
        let head = HeadCenter {
            cell: (parse_usize(file, n, fields[3])?, parse_usize(file, n, fields[4])?),
            max_displacement: parse_f64(file, n, fields[5])?,
            local: parse_vec(file, n, &fields[6..9])?,
            world: parse_vec(file, n, &fields[9..12])?,
        };

        let mut offsets = None;
        if cur.peek_key() == Some("offsets") {
            let (n, fields) = cur.expect("offsets")?;
            let timestamp = match fields.as_slice() {
                [t] => parse_f64(file, n, t)?,
                _ => return Err(cur.err(n, "offsets takes a timestamp")),
            };
            let mut bindings = Vec::new();
            while cur.peek_key() == Some("binding") {
                let (n, fields) = cur.expect("binding")?;
                if fields.len() != 9 {
                    return Err(cur.err(n, "binding takes: role joint x y z qw qx qy qz"));
                }
                let role: BodyRole = fields[0].parse().map_err(|e: Error| cur.err(n, e.to_string()))?;
                let joint: JointName = fields[1].parse().map_err(|e: Error| cur.err(n, e.to_string()))?;
                let offset = parse_vec(file, n, &fields[2..5])?;
                let q: Vec<f64> = fields[5..9]
                    .iter()
                    .map(|s| parse_f64(file, n, s))
                    .collect::<Result<_>>()?;
                bindings.push(Binding {
                    role,
                    joint,
                    offset,
                    rotation: Quat::new_unchecked(Quaternion::new(q[0], q[1], q[2], q[3])),
                });
            }
            let (n, fields) = cur.expect("head_anchor")?;
            let head_anchor = parse_vec(file, n, &fields)?;
            let (n, fields) = cur.expect("spine_rest_axis")?;
            let spine_rest_axis = parse_vec(file, n, &fields)?;
            offsets = Some(OffsetSet {
                bindings,
                head_anchor,
                spine_rest_axis,
                timestamp,
                warnings: Vec::new(),
            });
        }
        cur.expect("end")?;
        cur.finish()?;

        Ok(Self {
            tool_version,
            inputs,
            roles,
            measurements,
            lshoulder,
            rshoulder,
            neck,
            head_grid,
            head,
            offsets,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::yaw;

    fn prov(n: usize) -> CenterProvenance {
        CenterProvenance {
            config: AccumulatorConfig::SHOULDER,
            accepted: n,
            samples: 4 * n,
            radius: 0.6 + 1.0 / 3.0 * 1e-3,
            rms_residual: 1e-4,
        }
    }

    fn result(with_offsets: bool) -> CalibrationResult {
        let third = 1.0 / 3.0;
        CalibrationResult {
            tool_version: "bodyfit 0.1.0".into(),
            inputs: vec![("stream".into(), "ab".repeat(32))],
            roles: RoleAssignment::new(
                [0, 4, 2, 3, 5, 1],
                TPoseHeights {
                    hmd: 1.62,
                    root: 0.95 + third * 1e-4,
                    lfoot: 0.09,
                    rfoot: 0.09,
                },
            ),
            measurements: BodyMeasurements {
                c_lshoulder: Vec3::new(-0.18, 1.41, third),
                c_rshoulder: Vec3::new(0.18, 1.41, 0.0),
                c_neck: Vec3::new(0.0, 1.48, -0.03),
                c_head: Vec3::new(0.0, 1.62, -0.01),
                head_local: Vec3::new(0.0, 0.0, 0.09),
                l_arm_left: 0.6,
                l_arm_right: 0.6,
                l_leg: 0.86,
                l_torso: 0.46,
                l_neck: 0.07,
                l_eyes: 0.14,
                shoulder_width: 0.36,
                hmd_height: 1.62,
                root_height: 0.95,
                foot_height: 0.09,
            },
            lshoulder: prov(70),
            rshoulder: prov(71),
            neck: CenterProvenance {
                config: AccumulatorConfig::NECK,
                ..prov(60)
            },
            head_grid: HeadGridConfig::default(),
            head: HeadCenter {
                local: Vec3::new(0.0, 0.0, 0.09),
                world: Vec3::new(0.0, 1.62, -0.01),
                cell: (9, 10),
                max_displacement: 0.0,
            },
            offsets: with_offsets.then(|| OffsetSet {
                bindings: vec![Binding {
                    role: BodyRole::Root,
                    joint: JointName::Hips,
                    offset: Vec3::new(0.0, 0.04, 0.1),
                    rotation: yaw(third),
                }],
                head_anchor: Vec3::new(0.0, 0.0, 0.09),
                spine_rest_axis: Vec3::y(),
                timestamp: 12.5,
                warnings: Vec::new(),
            }),
        }
    }

    #[test]
    fn write_read_write_is_byte_identical() {
        for with_offsets in [false, true] {
            let text = result(with_offsets).to_text();
            let back = CalibrationResult::parse(&text, "mem").unwrap();
            assert_eq!(back.to_text(), text);
            assert_eq!(back.roles.device(BodyRole::LWrist), 4);
            assert_eq!(back.offsets.is_some(), with_offsets);
        }
    }

    #[test]
    fn truncated_file_fails() {
        let text = result(true).to_text();
        let cut = text.replace("end\n", "");
        assert!(matches!(CalibrationResult::parse(&cut, "f"), Err(Error::Parse { .. })));
    }
}
