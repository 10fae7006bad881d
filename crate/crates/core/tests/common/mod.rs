//! Synthetic sequences, flow directories and stub estimators shared by the
//! integration tests.
#![allow(dead_code)]

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use flowcodec::io::flo::flo_bytes;
use flowcodec::model::{DenseFlowField, FlowVector, Frame, Plane, PlaneId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
  ChaCha8Rng::seed_from_u64(seed)
}

/// Random noise smoothed by two 3×3 box passes, stretched to the full range.
pub fn texture(w: usize, h: usize, seed: u64) -> Plane {
  let mut r = rng(seed);
  let mut v: Vec<f64> = (0..w * h).map(|_| r.gen_range(0.0..255.0)).collect();
  for _ in 0..2 {
    let src = v.clone();
    for y in 0..h {
      for x in 0..w {
        let mut acc = 0.0;
        for dy in -1i64..=1 {
          for dx in -1i64..=1 {
            let xx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
            let yy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
            acc += src[yy * w + xx];
          }
        }
        v[y * w + x] = acc / 9.0;
      }
    }
  }
  let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
  let data = v.iter().map(|x| ((x - lo) / (hi - lo) * 230.0 + 12.0).round() as u8).collect();
  Plane::new(w, h, data).unwrap()
}

fn crop(src: &Plane, x0: i64, y0: i64, w: usize, h: usize) -> Plane {
  let mut out = Plane::filled(w, h, 0);
  for y in 0..h {
    for x in 0..w {
      out.set(x, y, src.get_clamped(x0 + x as i64, y0 + y as i64));
    }
  }
  out
}

/// `n` frames of a texture panning so that `frame_k(x) = frame_{k-1}(x + (vx, vy))`.
/// Chroma moves by the halved (truncated) displacement.
pub fn translating(w: usize, h: usize, n: usize, vx: i64, vy: i64, seed: u64) -> Vec<Frame> {
  let margin = |v: i64| (v.unsigned_abs() as usize) * n + 8;
  let (tw, th) = (w + 2 * margin(vx), h + 2 * margin(vy));
  let luma = texture(tw, th, seed);
  let cu = texture(tw / 2, th / 2, seed ^ 0x55);
  let cv = texture(tw / 2, th / 2, seed ^ 0xaa);
  let (mx, my) = (margin(vx) as i64, margin(vy) as i64);
  (0..n)
    .map(|k| {
      let (ox, oy) = (mx + vx * k as i64, my + vy * k as i64);
      let y = crop(&luma, ox, oy, w, h);
      let u = crop(&cu, ox / 2, oy / 2, w / 2, h / 2);
      let v = crop(&cv, ox / 2, oy / 2, w / 2, h / 2);
      Frame::from_planes(w, h, k, y.data().to_vec(), u.data().to_vec(), v.data().to_vec()).unwrap()
    })
    .collect()
}

/// A panning background with a square patch moving independently, plus the
/// exact backward flow of every frame (index 0 is all zero).
pub fn two_layer(w: usize, h: usize, n: usize, seed: u64) -> (Vec<Frame>, Vec<DenseFlowField>) {
  let bg = translating(w, h, n, 1, 0, seed);
  let fg_tex = texture(w / 3, h / 3, seed ^ 0x77);
  let (fw, fh) = (fg_tex.width(), fg_tex.height());
  let pos = |k: usize| ((w / 4 + 2 * k) as i64, (h / 4 + k) as i64);
  let mut frames = Vec::with_capacity(n);
  let mut flows = Vec::with_capacity(n);
  for (k, mut f) in bg.into_iter().enumerate() {
    let (px, py) = pos(k);
    let mut flow = vec![FlowVector::new(1.0, 0.0); w * h];
    for y in 0..fh {
      for x in 0..fw {
        let (gx, gy) = (px as usize + x, py as usize + y);
        if gx < w && gy < h {
          f.plane_mut(PlaneId::Y).set(gx, gy, fg_tex.get(x, y));
          flow[gy * w + gx] = FlowVector::new(-2.0, -1.0);
        }
      }
    }
    if k == 0 {
      flow.iter_mut().for_each(|v| *v = FlowVector::new(0.0, 0.0));
    }
    frames.push(f);
    flows.push(DenseFlowField::new(w, h, flow).unwrap());
  }
  (frames, flows)
}

/// Constant backward flow `(vx, vy)` for frames `1..n`.
pub fn constant_flows(w: usize, h: usize, n: usize, vx: f32, vy: f32) -> Vec<DenseFlowField> {
  (0..n).map(|_| DenseFlowField::constant(w, h, FlowVector::new(vx, vy))).collect()
}

/// Write `flows[k]` to `<dir>/<seq>/frame_%04d.flo` for `k >= 1`.
pub fn write_flow_dir(dir: &Path, seq: &str, flows: &[DenseFlowField]) {
  let sub = dir.join(seq);
  std::fs::create_dir_all(&sub).unwrap();
  for (k, f) in flows.iter().enumerate().skip(1) {
    std::fs::write(sub.join(format!("frame_{k:04}.flo")), flo_bytes(f)).unwrap();
  }
}

pub fn write_script(dir: &Path, name: &str, body: &str) -> PathBuf {
  let path = dir.join(name);
  std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
  std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
  path
}

/// Estimator that copies `<flow_dir>/<seq>/frame_NNNN.flo`, NNNN taken from
/// the output file name `<seq>_NNNN.flo`.
pub fn copy_stub(dir: &Path, flow_dir: &Path, seq: &str) -> PathBuf {
  let body = format!(
    "base=$(basename \"$3\" .flo)\nidx=${{base##*_}}\ncp \"{}/{seq}/frame_$idx.flo\" \"$3\"",
    flow_dir.display()
  );
  write_script(dir, "copy_flow.sh", &body)
}

pub fn random_frame(w: usize, h: usize, r: &mut impl Rng) -> Frame {
  let mut f = Frame::new(w, h, 0).unwrap();
  for id in PlaneId::ALL {
    f.plane_mut(id).data_mut().iter_mut().for_each(|p| *p = r.gen());
  }
  f
}

/// Signed exp-Golomb length, counted bit by bit.
pub fn se_bits(v: i64) -> u32 {
  let k = if v > 0 { 2 * v as u64 - 1 } else { 2 * v.unsigned_abs() };
  let mut n = k + 1;
  let mut len = 0;
  while n > 1 {
    n >>= 1;
    len += 1;
  }
  2 * len + 1
}

/// Bilinear quarter-pel luma sample with edge clamping, from first principles.
pub fn qpel_sample(p: &Plane, qx: i64, qy: i64) -> u8 {
  let (ix, iy) = (qx.div_euclid(4), qy.div_euclid(4));
  let (a, b) = (qx.rem_euclid(4), qy.rem_euclid(4));
  let s = |x: i64, y: i64| p.get_clamped(x, y) as i64;
  let v = (4 - a) * (4 - b) * s(ix, iy)
    + a * (4 - b) * s(ix + 1, iy)
    + (4 - a) * b * s(ix, iy + 1)
    + a * b * s(ix + 1, iy + 1);
  ((v + 8) / 16) as u8
}

/// Luma SAD of the `edge`-square block at `(x0, y0)` displaced by `(dx, dy)` qpel.
pub fn block_sad(
  cur: &Plane,
  reference: &Plane,
  x0: usize,
  y0: usize,
  edge: usize,
  dx: i32,
  dy: i32,
) -> u32 {
  let mut acc = 0;
  for y in 0..edge {
    for x in 0..edge {
      let (cx, cy) = (x0 + x, y0 + y);
      let c = cur.get_clamped(cx as i64, cy as i64) as i32;
      let r = qpel_sample(reference, 4 * cx as i64 + dx as i64, 4 * cy as i64 + dy as i64) as i32;
      acc += (c - r).unsigned_abs();
    }
  }
  acc
}

pub fn with_index(f: &Frame, index: usize) -> Frame {
  let mut g = f.clone();
  g.index = index;
  g
}
