use std::fmt::Write as _;

use super::{fixed, fixed_vec, parse_f64, parse_vec, Cursor, PRECISE_DECIMALS};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::skeleton::{AvatarVariant, Joint, JointName, Skeleton};

pub const SKELETON_FORMAT: &str = "skeleton";
pub const SKELETON_VERSION: u32 = 1;

const EYE_HEIGHT_TOLERANCE: f64 = 1e-8;

fn round(v: f64) -> f64 {
    fixed(v, PRECISE_DECIMALS).parse().expect("formatted number")
}

fn round_vec(v: &Vec3) -> Vec3 {
    v.map(round)
}

/// Canonical text: offsets are rounded first and the eye height is derived
/// from the rounded values, so reading and rewriting is byte-stable.
pub fn write_skeleton(sk: &Skeleton) -> String {
    let joints: Vec<Joint> = sk
        .joints()
        .iter()
        .map(|j| Joint {
            offset: round_vec(&j.offset),
            ..*j
        })
        .collect();
    let rounded = Skeleton::new(joints, round_vec(&sk.eye()), sk.variant).expect("rounding keeps topology");

    let mut out = String::new();
    writeln!(out, "format {SKELETON_FORMAT} {SKELETON_VERSION}").unwrap();
    if let Some(v) = rounded.variant {
        writeln!(out, "variant {v}").unwrap();
    }
    for j in rounded.joints() {
        let parent = j
            .parent
            .map(|p| rounded.joints()[p].name.as_str())
            .unwrap_or("-");
        writeln!(out, "joint {} {parent} {}", j.name, fixed_vec(&j.offset, PRECISE_DECIMALS)).unwrap();
    }
    writeln!(out, "eye Head {}", fixed_vec(&rounded.eye(), PRECISE_DECIMALS)).unwrap();
    writeln!(out, "eye_height {}", fixed(rounded.eye_height(), PRECISE_DECIMALS)).unwrap();
    out
}

pub fn parse_skeleton(text: &str, file: &str) -> Result<Skeleton> {
    let mut cur = Cursor::new(file, text);
    cur.expect_header(SKELETON_FORMAT, SKELETON_VERSION)?;
    let mut variant = None;
    if cur.peek_key() == Some("variant") {
        let (n, fields) = cur.expect("variant")?;
        match fields.as_slice() {
            [v] => variant = Some(v.parse::<AvatarVariant>().map_err(|e| cur.err(n, e.to_string()))?),
            _ => return Err(cur.err(n, "variant takes one name")),
        }
    }
    let mut joints: Vec<Joint> = Vec::new();
    while cur.peek_key() == Some("joint") {
        let (n, fields) = cur.expect("joint")?;
        if fields.len() != 5 {
            return Err(cur.err(n, "joint takes: name parent x y z"));
        }
        let name: JointName = fields[0].parse().map_err(|e: Error| cur.err(n, e.to_string()))?;
        let parent = match fields[1] {
            "-" => None,
            p => {
                let p: JointName = p.parse().map_err(|e: Error| cur.err(n, e.to_string()))?;
                Some(
                    joints
                        .iter()
                        .position(|j| j.name == p)
                        .ok_or_else(|| cur.err(n, format!("parent {p} must be listed before {name}")))?,
                )
            }
        };
        let offset = parse_vec(file, n, &fields[2..])?;
        joints.push(Joint { name, parent, offset });
    }
    let (n, fields) = cur.expect("eye")?;
    if fields.first() != Some(&"Head") || fields.len() != 4 {
        return Err(cur.err(n, "eye takes: Head x y z"));
    }
    let eye = parse_vec(file, n, &fields[1..])?;
    let (n, fields) = cur.expect("eye_height")?;
    let declared = match fields.as_slice() {
        [h] => parse_f64(file, n, h)?,
        _ => return Err(cur.err(n, "eye_height takes one value")),
    };
    let file_name = cur.file();
    cur.finish()?;

    let sk = Skeleton::new(joints, eye, variant).map_err(|e| Error::parse(file_name, 0, e.to_string()))?;
    if (sk.eye_height() - declared).abs() > EYE_HEIGHT_TOLERANCE {
        return Err(Error::parse(
            file_name,
            n,
            format!(
                "declared eye height {declared} does not match the joint tree ({})",
                fixed(sk.eye_height(), PRECISE_DECIMALS)
            ),
        ));
    }
    Ok(sk)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_identical() {
        let sk = Skeleton::standard(1.6180339887).unwrap();
        let text = write_skeleton(&sk);
        let back = parse_skeleton(&text, "mem").unwrap();
        assert_eq!(write_skeleton(&back), text);
        assert_eq!(back.variant, Some(AvatarVariant::Sa));
        assert!((back.eye_height() - sk.eye_height()).abs() < 1e-8);
    }

    #[test]
    fn loader_enforces_topology() {
        let text = write_skeleton(&Skeleton::standard(1.6).unwrap());
        let no_hand: String = text
            .lines()
            .filter(|l| !l.starts_with("joint LeftHand "))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(parse_skeleton(&no_hand, "f"), Err(Error::Parse { .. })));

        let wrong_height = text.replace("eye_height 1.600000000", "eye_height 1.700000000");
        assert!(parse_skeleton(&wrong_height, "f").is_err());

        let orphan = text.replacen("joint Spine Hips", "joint Spine Chest", 1);
        assert!(parse_skeleton(&orphan, "f").is_err());
    }
}
