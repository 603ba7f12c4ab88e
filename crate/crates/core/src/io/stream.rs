use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Quaternion;

use super::{fixed, parse_f64, parse_usize, read_text, sha256_hex, write_text, Cursor, POSITION_DECIMALS, PRECISE_DECIMALS};
use crate::device_id::{BodyRole, DeviceKind};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Quat, Vec3};

pub const STREAM_FORMAT: &str = "tracker-stream";
pub const STREAM_VERSION: u32 = 1;
pub const FRAME_CONVENTION: &str = "world=right-handed,y-up,metres device=forward-z,right+x,up+y";

const QUAT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceEntry {
    pub index: usize,
    pub kind: DeviceKind,
    pub role: Option<BodyRole>,
}

/// Named frame range `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub position: Vec3,
    /// (w, x, y, z) as stored; unit within tolerance.
    pub orientation: [f64; 4],
    pub valid: bool,
}

impl Sample {
    pub fn from_pose(pose: &Pose) -> Self {
        let q = pose.orientation.quaternion();
        Self {
            position: pose.position,
            orientation: [q.w, q.i, q.j, q.k],
            valid: true,
        }
    }

    pub fn quat(&self) -> Quat {
        let [w, x, y, z] = self.orientation;
        Quat::from_quaternion(Quaternion::new(w, x, y, z))
    }
}

/// One sample per device, in device-table order.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub timestamp: f64,
    pub samples: Vec<Sample>,
}

impl Frame {
    pub fn pose(&self, device: usize) -> Pose {
        let s = &self.samples[device];
        Pose::new(s.position, s.quat(), self.timestamp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerStream {
    pub rate_hz: f64,
    pub devices: Vec<DeviceEntry>,
    pub segments: Vec<Segment>,
    pub frames: Vec<Frame>,
}

impl TrackerStream {
    pub fn new(rate_hz: f64, devices: Vec<DeviceEntry>) -> Self {
        Self {
            rate_hz,
            devices,
            segments: Vec::new(),
            frames: Vec::new(),
        }
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn segment_frames(&self, name: &str) -> Result<&[Frame]> {
        let seg = self
            .segment(name)
            .ok_or_else(|| Error::InvalidArgument(format!("stream has no `{name}` segment")))?;
        Ok(&self.frames[seg.start..seg.end])
    }

    /// Device index carrying `role` in the header, if roles were recorded.
    pub fn device_with_role(&self, role: BodyRole) -> Option<usize> {
        self.devices.iter().find(|d| d.role == Some(role)).map(|d| d.index)
    }

    /// Appends a frame and extends (or opens) the named segment.
    pub fn push_frame(&mut self, segment: &str, timestamp: f64, poses: &[Pose]) {
        assert_eq!(poses.len(), self.devices.len(), "one pose per device");
        let idx = self.frames.len();
        self.frames.push(Frame {
            timestamp,
            samples: poses.iter().map(Sample::from_pose).collect(),
        });
        match self.segments.last_mut() {
            Some(s) if s.name == segment && s.end == idx => s.end += 1,
            _ => self.segments.push(Segment {
                name: segment.to_string(),
                start: idx,
                end: idx + 1,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.rate_hz > 0.0) {
            return bad(format!("rate must be positive, got {}", self.rate_hz));
        }
        for (i, d) in self.devices.iter().enumerate() {
            if d.index != i {
                return bad(format!("device table must list indices 0..n in order, found {} at {i}", d.index));
            }
        }
        let mut prev = f64::NEG_INFINITY;
        for (k, f) in self.frames.iter().enumerate() {
            if f.samples.len() != self.devices.len() {
                return bad(format!("frame {k} has {} samples", f.samples.len()));
            }
            if f.timestamp < prev {
                return bad(format!("timestamps decrease at frame {k}"));
            }
            prev = f.timestamp;
            for s in &f.samples {
                let n = s.orientation.iter().map(|c| c * c).sum::<f64>().sqrt();
                if (n - 1.0).abs() > QUAT_TOLERANCE {
                    return bad(format!("frame {k}: quaternion norm {n}"));
                }
            }
        }
        for s in &self.segments {
            if s.start >= s.end || s.end > self.frames.len() {
                return bad(format!("segment `{}` range {}..{} is invalid", s.name, s.start, s.end));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "format {STREAM_FORMAT} {STREAM_VERSION}").unwrap();
        writeln!(out, "rate_hz {}", fixed(self.rate_hz, POSITION_DECIMALS)).unwrap();
        writeln!(out, "frame_convention {FRAME_CONVENTION}").unwrap();
        for d in &self.devices {
            write!(out, "device {} {}", d.index, d.kind.as_str()).unwrap();
            if let Some(r) = d.role {
                write!(out, " {r}").unwrap();
            }
            out.push('\n');
        }
        for s in &self.segments {
            writeln!(out, "segment {} {} {}", s.name, s.start, s.end).unwrap();
        }
        out.push_str("end_header\n");
        for f in &self.frames {
            let t = fixed(f.timestamp, POSITION_DECIMALS);
            for (i, s) in f.samples.iter().enumerate() {
                let p = |v| fixed(v, POSITION_DECIMALS);
                let q = |v| fixed(v, PRECISE_DECIMALS);
                writeln!(
                    out,
                    "{t} {i} {} {} {} {} {} {} {} {}",
                    p(s.position.x),
                    p(s.position.y),
                    p(s.position.z),
                    q(s.orientation[0]),
                    q(s.orientation[1]),
                    q(s.orientation[2]),
                    q(s.orientation[3]),
                    u8::from(s.valid)
                )
                .unwrap();
            }
        }
        out
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut cur = Cursor::new(file, text);
        cur.expect_header(STREAM_FORMAT, STREAM_VERSION)?;
        let (n, fields) = cur.expect("rate_hz")?;
        let rate_hz = match fields.as_slice() {
            [r] => parse_f64(file, n, r)?,
            _ => return Err(cur.err(n, "rate_hz takes one value")),
        };
        let (n, fields) = cur.expect("frame_convention")?;
        if fields.join(" ") != FRAME_CONVENTION {
            return Err(cur.err(n, format!("unsupported frame convention `{}`", fields.join(" "))));
        }
        let mut stream = TrackerStream::new(rate_hz, Vec::new());
        while cur.peek_key() == Some("device") {
            let (n, fields) = cur.expect("device")?;
            let (index, kind, role) = match fields.as_slice() {
                [i, k] => (i, k, None),
                [i, k, r] => (i, k, Some(r)),
                _ => return Err(cur.err(n, "device takes: index kind [role]")),
            };
            let index = parse_usize(file, n, index)?;
            let kind: DeviceKind = kind.parse().map_err(|e: Error| cur.err(n, e.to_string()))?;
            let role = role
                .map(|r| r.parse::<BodyRole>())
                .transpose()
                .map_err(|e| cur.err(n, e.to_string()))?;
            stream.devices.push(DeviceEntry { index, kind, role });
        }
        while cur.peek_key() == Some("segment") {
            let (n, fields) = cur.expect("segment")?;
            match fields.as_slice() {
                [name, start, end] => stream.segments.push(Segment {
                    name: name.to_string(),
                    start: parse_usize(file, n, start)?,
                    end: parse_usize(file, n, end)?,
                }),
                _ => return Err(cur.err(n, "segment takes: name start end")),
            }
        }
        cur.expect("end_header")?;

        let count = stream.devices.len();
        if count == 0 {
            return Err(cur.err(n, "no devices declared"));
        }
        let mut frame: Option<Frame> = None;
        while let Some((n, fields)) = cur.next() {
            if fields.len() != 10 {
                return Err(cur.err(n, format!("record needs 10 fields, got {}", fields.len())));
            }
            let t = parse_f64(file, n, fields[0])?;
            let device = parse_usize(file, n, fields[1])?;
            let num = |k: usize| parse_f64(file, n, fields[k]);
            let sample = Sample {
                position: Vec3::new(num(2)?, num(3)?, num(4)?),
                orientation: [num(5)?, num(6)?, num(7)?, num(8)?],
                valid: match fields[9] {
                    "1" => true,
                    "0" => false,
                    v => return Err(cur.err(n, format!("validity flag must be 0 or 1, got `{v}`"))),
                },
            };
            let f = frame.get_or_insert_with(|| Frame {
                timestamp: t,
                samples: Vec::with_capacity(count),
            });
            if device != f.samples.len() || t != f.timestamp {
                return Err(cur.err(
                    n,
                    format!("expected device {} at t={}", f.samples.len(), fixed(f.timestamp, 6)),
                ));
            }
            f.samples.push(sample);
            if f.samples.len() == count {
                stream.frames.push(frame.take().expect("frame in progress"));
            }
        }
        if frame.is_some() {
            return Err(Error::parse(file, 0, "last frame is incomplete"));
        }
        stream
            .validate()
            .map_err(|e| Error::parse(file, 0, e.to_string()))?;
        Ok(stream)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text())
    }

    /// SHA-256 of the canonical text.
    pub fn digest(&self) -> String {
        sha256_hex(self.to_text().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::yaw;

    fn sample_stream() -> TrackerStream {
        let mut s = TrackerStream::new(
            90.0,
            vec![
                DeviceEntry {
                    index: 0,
                    kind: DeviceKind::HeadMounted,
                    role: Some(BodyRole::Hmd),
                },
                DeviceEntry {
                    index: 1,
                    kind: DeviceKind::GenericTracker,
                    role: None,
                },
            ],
        );
        for k in 0..4 {
            let t = k as f64 / 90.0;
            let poses = [
                Pose::new(Vec3::new(0.0, 1.6, 0.01 * k as f64), yaw(0.1 * k as f64), t),
                Pose::new(Vec3::new(-0.1, 0.9, -0.1), Quat::identity(), t),
            ];
            s.push_frame(if k < 2 { "tpose" } else { "arms" }, t, &poses);
        }
        s
    }

    #[test]
    fn canonical_text_round_trips() {
        let s = sample_stream();
        let text = s.to_text();
        let back = TrackerStream::parse(&text, "mem").unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.segments.len(), 2);
        assert_eq!(back.segment("arms").unwrap().start, 2);
        assert_eq!(back.devices[0].role, Some(BodyRole::Hmd));
        assert_eq!(back.digest(), s.digest());
    }

    #[test]
    fn rejects_bad_files() {
        let text = sample_stream().to_text();
        let no_version = text.replacen("format tracker-stream 1\n", "", 1);
        assert!(matches!(TrackerStream::parse(&no_version, "f"), Err(Error::Parse { .. })));

        let v2 = text.replacen("tracker-stream 1", "tracker-stream 2", 1);
        assert!(TrackerStream::parse(&v2, "f").is_err());

        // a stretched quaternion
        let lines: Vec<&str> = text.lines().collect();
        let rec = lines.iter().position(|l| l.starts_with("0.000000 1 ")).unwrap();
        let mut broken = lines.clone();
        let bad = lines[rec].replace(" 1.000000000 ", " 1.100000000 ");
        broken[rec] = &bad;
        let err = TrackerStream::parse(&broken.join("\n"), "f").unwrap_err();
        assert!(err.to_string().contains("quaternion"), "{err}");

        // truncated final frame
        let truncated: Vec<&str> = lines[..lines.len() - 1].to_vec();
        assert!(TrackerStream::parse(&truncated.join("\n"), "f").is_err());
    }

    #[test]
    fn decreasing_time_is_rejected() {
        let mut s = sample_stream();
        s.frames[3].timestamp = 0.0;
        let err = TrackerStream::parse(&s.to_text(), "f").unwrap_err();
        assert!(err.to_string().contains("decrease"), "{err}");
    }
}
