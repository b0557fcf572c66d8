//! The `OHE1` episode container.
//!
//! All integers and reals are little-endian; strings are a `u32` byte length
//! followed by UTF-8.
//!
//! ```text
//! magic "OHE1" | version u16 | flags u16 (bit0 validity, bit1 actions) | file length u64
//! config_id | episode_id | dataset_id | task_prompt            (strings)
//! split u8 | control_space u8 | T u32 | S u32 | camera count u32
//! per camera: view_id, width u32, height u32, channels u8,
//!             source u8 (0 raw, 1 external), frame count N u32, [uri if external]
//! kinematics   T·S f32, row-major
//! timestamps   T f64
//! per camera:  T u32 frame references, then N·H·W·C bytes if raw
//! validity     T u8 (0 or 1)                    if flag bit0
//! actions      rows u32, mask u64, rows·44 f64  if flag bit1
//! trailer      FNV-1a-64 of every preceding byte
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::checksum::fnv1a64;
use super::StoreError;
use crate::kinematics::{UnifiedActionChunk, ACTION_WIDTH};
use crate::schema::{CameraStream, ControlSpace, EpisodeRecord, FrameSource, Split};

pub const MAGIC: [u8; 4] = *b"OHE1";
pub const CONTAINER_VERSION: u16 = 1;

const FLAG_VALIDITY: u16 = 1;
const FLAG_ACTIONS: u16 = 2;
const PREAMBLE_LEN: usize = 16;
const TRAILER_LEN: usize = 8;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) -> Result<(), StoreError> {
        self.u32(len32(s.len(), "string")?);
        self.0.extend_from_slice(s.as_bytes());
        Ok(())
    }
}

fn len32(n: usize, what: &str) -> Result<u32, StoreError> {
    u32::try_from(n).map_err(|_| StoreError::Encode(format!("{what} length {n} exceeds u32")))
}

fn check_encodable(r: &EpisodeRecord) -> Result<(), StoreError> {
    let t = r.sample_count();
    let bad = |m: String| Err(StoreError::Encode(m));
    if r.kinematics.len() != t * r.state_width {
        return bad(format!("kinematics has {} values for {t}×{}", r.kinematics.len(), r.state_width));
    }
    for cam in &r.cameras {
        if cam.frame_refs.len() != t {
            return bad(format!("camera {} has {} frame refs for {t} samples", cam.view_id, cam.frame_refs.len()));
        }
        if let FrameSource::Raw { frame_count, data } = &cam.source {
            if data.len() != *frame_count as usize * cam.frame_len() {
                return bad(format!("camera {} stores {} bytes for {frame_count} frames", cam.view_id, data.len()));
            }
        }
    }
    if r.validity.as_ref().is_some_and(|v| v.len() != t) {
        return bad("validity length differs from sample count".into());
    }
    if let Some(a) = &r.actions {
        if a.actions.ncols() != ACTION_WIDTH {
            return bad(format!("actions have {} columns", a.actions.ncols()));
        }
    }
    Ok(())
}

/// Serializes a record into container bytes.
pub fn encode_episode(r: &EpisodeRecord) -> Result<Vec<u8>, StoreError> {
    check_encodable(r)?;
    let mut w = Writer(Vec::with_capacity(1024 + r.kinematics.len() * 4));
    w.0.extend_from_slice(&MAGIC);
    w.u16(CONTAINER_VERSION);
    let flags =
        if r.validity.is_some() { FLAG_VALIDITY } else { 0 } | if r.actions.is_some() { FLAG_ACTIONS } else { 0 };
    w.u16(flags);
    w.u64(0); // patched below
    for s in [&r.config_id, &r.episode_id, &r.dataset_id, &r.task_prompt] {
        w.str(s)?;
    }
    w.u8(match r.split {
        Split::Train => 0,
        Split::Test => 1,
    });
    w.u8(r.control_space.to_byte());
    w.u32(len32(r.sample_count(), "sample count")?);
    w.u32(len32(r.state_width, "state width")?);
    w.u32(len32(r.cameras.len(), "camera count")?);
    for cam in &r.cameras {
        w.str(&cam.view_id)?;
        w.u32(cam.width);
        w.u32(cam.height);
        w.u8(cam.channels);
        match &cam.source {
            FrameSource::Raw { frame_count, .. } => {
                w.u8(0);
                w.u32(*frame_count);
            }
            FrameSource::External { uri, frame_count } => {
                w.u8(1);
                w.u32(*frame_count);
                w.str(uri)?;
            }
        }
    }
    r.kinematics.iter().for_each(|v| w.f32(*v));
    r.timestamps.iter().for_each(|v| w.f64(*v));
    for cam in &r.cameras {
        cam.frame_refs.iter().for_each(|v| w.u32(*v));
        if let FrameSource::Raw { data, .. } = &cam.source {
            w.0.extend_from_slice(data);
        }
    }
    if let Some(v) = &r.validity {
        v.iter().for_each(|b| w.u8(*b as u8));
    }
    if let Some(a) = &r.actions {
        w.u32(len32(a.actions.nrows(), "action rows")?);
        w.u64(a.mask_bits());
        a.actions.iter().for_each(|v| w.f64(*v));
    }
    let total = (w.0.len() + TRAILER_LEN) as u64;
    w.0[8..16].copy_from_slice(&total.to_le_bytes());
    let sum = fnv1a64(&w.0);
    w.u64(sum);
    Ok(w.0)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail(&self, message: impl Into<String>) -> StoreError {
        StoreError::Inconsistent { offset: self.pos as u64, message: message.into() }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], StoreError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len());
        match end {
            Some(end) => {
                let out = &self.buf[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(self.fail(format!("{what} runs past the payload"))),
        }
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N], StoreError> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }
    fn u8(&mut self, what: &str) -> Result<u8, StoreError> {
        Ok(self.take(1, what)?[0])
    }
    fn u32(&mut self, what: &str) -> Result<u32, StoreError> {
        self.array(what).map(u32::from_le_bytes)
    }
    fn u64(&mut self, what: &str) -> Result<u64, StoreError> {
        self.array(what).map(u64::from_le_bytes)
    }
    fn str(&mut self, what: &str) -> Result<String, StoreError> {
        let n = self.u32(what)? as usize;
        let start = self.pos;
        let bytes = self.take(n, what)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| StoreError::Inconsistent { offset: start as u64, message: format!("{what} is not UTF-8") })
    }
    /// Reads `count` fixed-width items, checking the total size first.
    fn items<T, const N: usize>(
        &mut self,
        count: usize,
        what: &str,
        f: fn([u8; N]) -> T,
    ) -> Result<Vec<T>, StoreError> {
        let bytes = count.checked_mul(N).ok_or_else(|| self.fail(format!("{what} size overflows")))?;
        let raw = self.take(bytes, what)?;
        Ok(raw.chunks_exact(N).map(|c| f(c.try_into().expect("exact chunk"))).collect())
    }
}

/// Parses container bytes, verifying magic, version, length and checksum
/// before any field is interpreted.
pub fn decode_episode(bytes: &[u8]) -> Result<EpisodeRecord, StoreError> {
    let actual = bytes.len() as u64;
    if bytes.len() < MAGIC.len() {
        return Err(StoreError::Truncated { expected: (PREAMBLE_LEN + TRAILER_LEN) as u64, actual });
    }
    let found: [u8; 4] = bytes[..4].try_into().expect("length checked");
    if found != MAGIC {
        return Err(StoreError::BadMagic { found });
    }
    if bytes.len() < PREAMBLE_LEN + TRAILER_LEN {
        return Err(StoreError::Truncated { expected: (PREAMBLE_LEN + TRAILER_LEN) as u64, actual });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != CONTAINER_VERSION {
        return Err(StoreError::UnknownVersion(version));
    }
    let declared = u64::from_le_bytes(bytes[8..16].try_into().expect("length checked"));
    if actual < declared {
        return Err(StoreError::Truncated { expected: declared, actual });
    }
    if actual > declared {
        return Err(StoreError::Inconsistent {
            offset: declared,
            message: format!("{} trailing bytes after the declared end", actual - declared),
        });
    }
    let body_end = bytes.len() - TRAILER_LEN;
    let stored = u64::from_le_bytes(bytes[body_end..].try_into().expect("length checked"));
    let computed = fnv1a64(&bytes[..body_end]);
    if stored != computed {
        return Err(StoreError::Checksum { start: 0, end: body_end as u64, stored, computed });
    }
    let flags = u16::from_le_bytes([bytes[6], bytes[7]]);
    let mut r = Reader { buf: &bytes[..body_end], pos: PREAMBLE_LEN };
    if flags & !(FLAG_VALIDITY | FLAG_ACTIONS) != 0 {
        return Err(StoreError::Inconsistent { offset: 6, message: format!("unknown flags {flags:#06x}") });
    }
    let config_id = r.str("config_id")?;
    let episode_id = r.str("episode_id")?;
    let dataset_id = r.str("dataset_id")?;
    let task_prompt = r.str("task_prompt")?;
    let split = match r.u8("split")? {
        0 => Split::Train,
        1 => Split::Test,
        b => return Err(r.fail(format!("unknown split byte {b}"))),
    };
    let cs = r.u8("control space")?;
    let control_space =
        ControlSpace::from_byte(cs).ok_or_else(|| r.fail(format!("unknown control space byte {cs}")))?;
    let t = r.u32("sample count")? as usize;
    let s = r.u32("state width")? as usize;
    let camera_count = r.u32("camera count")? as usize;
    let mut headers = Vec::new();
    for i in 0..camera_count {
        let what = format!("camera {i}");
        let view_id = r.str(&what)?;
        let width = r.u32(&what)?;
        let height = r.u32(&what)?;
        let channels = r.u8(&what)?;
        let kind = r.u8(&what)?;
        let frame_count = r.u32(&what)?;
        let uri = match kind {
            0 => None,
            1 => Some(r.str(&what)?),
            k => return Err(r.fail(format!("{what}: unknown frame source {k}"))),
        };
        headers.push((view_id, width, height, channels, frame_count, uri));
    }
    let kin_len = t.checked_mul(s).ok_or_else(|| r.fail("kinematics size overflows"))?;
    let kinematics = r.items(kin_len, "kinematics", f32::from_le_bytes)?;
    let timestamps = r.items(t, "timestamps", f64::from_le_bytes)?;
    let mut cameras = Vec::with_capacity(camera_count);
    for (view_id, width, height, channels, frame_count, uri) in headers {
        let frame_refs = r.items(t, "frame references", u32::from_le_bytes)?;
        if let Some(bad) = frame_refs.iter().find(|f| **f >= frame_count) {
            return Err(r.fail(format!("camera {view_id}: frame reference {bad} ≥ frame count {frame_count}")));
        }
        let source = match uri {
            Some(uri) => FrameSource::External { uri, frame_count },
            None => {
                let len = (width as usize)
                    .checked_mul(height as usize)
                    .and_then(|v| v.checked_mul(channels as usize))
                    .and_then(|v| v.checked_mul(frame_count as usize))
                    .ok_or_else(|| r.fail(format!("camera {view_id}: frame block size overflows")))?;
                FrameSource::Raw { frame_count, data: r.take(len, "frames")?.to_vec() }
            }
        };
        cameras.push(CameraStream { view_id, width, height, channels, frame_refs, source });
    }
    let validity = if flags & FLAG_VALIDITY != 0 {
        let start = r.pos;
        let raw = r.take(t, "validity")?;
        if let Some(i) = raw.iter().position(|b| *b > 1) {
            return Err(StoreError::Inconsistent {
                offset: (start + i) as u64,
                message: format!("validity byte {}", raw[i]),
            });
        }
        Some(raw.iter().map(|b| *b == 1).collect())
    } else {
        None
    };
    let actions = if flags & FLAG_ACTIONS != 0 {
        let rows = r.u32("action rows")? as usize;
        let bits = r.u64("action mask")?;
        if bits >> ACTION_WIDTH != 0 {
            return Err(r.fail(format!("action mask {bits:#x} sets bits beyond slot {ACTION_WIDTH}")));
        }
        let n = rows.checked_mul(ACTION_WIDTH).ok_or_else(|| r.fail("action block size overflows"))?;
        let values = r.items(n, "actions", f64::from_le_bytes)?;
        Some(UnifiedActionChunk {
            actions: Array2::from_shape_vec((rows, ACTION_WIDTH), values).expect("length checked"),
            occupancy_mask: UnifiedActionChunk::mask_from_bits(bits),
        })
    } else {
        None
    };
    if r.pos != body_end {
        return Err(r.fail(format!("{} unparsed bytes before the trailer", body_end - r.pos)));
    }
    Ok(EpisodeRecord {
        episode_id,
        dataset_id,
        config_id,
        task_prompt,
        split,
        control_space,
        state_width: s,
        kinematics,
        timestamps,
        cameras,
        validity,
        actions,
    })
}

pub fn write_episode(record: &EpisodeRecord, path: &Path) -> Result<(), StoreError> {
    let bytes = encode_episode(record)?;
    fs::write(path, bytes).map_err(|e| StoreError::io(path, e))
}

pub fn read_episode(path: &Path) -> Result<EpisodeRecord, StoreError> {
    let bytes = fs::read(path).map_err(|e| StoreError::io(path, e))?;
    decode_episode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> EpisodeRecord {
        let t = 5;
        EpisodeRecord {
            episode_id: "ep".into(),
            dataset_id: "ds".into(),
            config_id: "cfg".into(),
            task_prompt: "suture".into(),
            split: Split::Test,
            control_space: ControlSpace::RelativeEef,
            state_width: 8,
            kinematics: (0..t * 8).map(|i| i as f32 * 0.25).collect(),
            timestamps: (0..t).map(|i| i as f64 / 10.0).collect(),
            cameras: vec![
                CameraStream {
                    view_id: "left".into(),
                    width: 2,
                    height: 2,
                    channels: 3,
                    frame_refs: vec![0, 1, 1, 2, 2],
                    source: FrameSource::Raw { frame_count: 3, data: (0..36).collect() },
                },
                CameraStream {
                    view_id: "us".into(),
                    width: 64,
                    height: 64,
                    channels: 1,
                    frame_refs: vec![0; t],
                    source: FrameSource::External { uri: "file:///us.mp4".into(), frame_count: 1 },
                },
            ],
            validity: Some(vec![true, true, false, true, true]),
            actions: Some(UnifiedActionChunk {
                actions: Array2::from_shape_fn((4, ACTION_WIDTH), |(i, j)| if j < 10 { (i * j) as f64 } else { 0.0 }),
                occupancy_mask: UnifiedActionChunk::arm_mask(1),
            }),
        }
    }

    #[test]
    fn round_trip() {
        let r = record();
        let bytes = encode_episode(&r).unwrap();
        assert_eq!(&bytes[..4], b"OHE1");
        let back = decode_episode(&bytes).unwrap();
        assert_eq!(back, r);
        assert_eq!(encode_episode(&back).unwrap(), bytes);
    }

    #[test]
    fn errors_are_distinguished() {
        let bytes = encode_episode(&record()).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_episode(&bad), Err(StoreError::BadMagic { .. })));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode_episode(&bad), Err(StoreError::UnknownVersion(9))));
        assert!(matches!(decode_episode(&bytes[..bytes.len() - 3]), Err(StoreError::Truncated { .. })));
        assert!(matches!(decode_episode(&bytes[..2]), Err(StoreError::Truncated { .. })));
        let mut bad = bytes.clone();
        let mid = bytes.len() / 2;
        bad[mid] ^= 0x10;
        match decode_episode(&bad) {
            Err(StoreError::Checksum { start, end, .. }) => {
                assert_eq!(start, 0);
                assert_eq!(end, bytes.len() as u64 - 8);
                assert!((start..end).contains(&(mid as u64)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_single_byte_flip_is_detected() {
        let bytes = encode_episode(&record()).unwrap();
        for i in 0..bytes.len() {
            let mut bad = bytes.clone();
            bad[i] ^= 0xA5;
            assert!(decode_episode(&bad).is_err(), "flip at {i} undetected");
        }
    }

    #[test]
    fn rejects_unencodable_records() {
        let mut r = record();
        r.kinematics.pop();
        assert!(matches!(encode_episode(&r), Err(StoreError::Encode(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("episode_000000.ohe");
        write_episode(&record(), &path).unwrap();
        assert_eq!(read_episode(&path).unwrap(), record());
        let err = read_episode(&dir.path().join("missing.ohe")).unwrap_err();
        assert!(err.is_io());
    }
}
