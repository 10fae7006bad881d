//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.
//!
//! Criterion 8 runs on a synthetic two-layer clip unless
//! `FLOWCODEC_E2E_Y4M` (a Y4M file) and `FLOWCODEC_E2E_FLOW_DIR` (backward
//! flow laid out as `<dir>/<file stem>/frame_%04d.flo`) are set.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use flowcodec::block_match::{
  diamond_search, full_search, hex_search, BlockTarget, RdParams, SearchConfig,
};
use flowcodec::codec::{
  decode_sequence, encode_sequence, transform, CodecConfig, EncodeOutput, MotionMode,
};
use flowcodec::flow_adapt::{block_vector_median, vector_median, BlockRect};
use flowcodec::io::records::{
  read_metrics, write_csv_with_header, MetricsFormat, METRICS_CSV_HEADER,
};
use flowcodec::io::{write_y4m, Rational, SequenceHeader};
use flowcodec::metrics::{bd_psnr, bd_rate, epe};
use flowcodec::model::{
  quantize_to_quarter_pel, BlockSize, DenseFlowField, FlowVector, Frame, MotionVector, Plane,
  PlaneId, RdCurve, RdPoint, DEFAULT_MV_BOUND,
};
use flowcodec::provider::{CommandFlowProvider, FileFlowProvider, ProvenanceMode};
use flowcodec::sweep::{self, Sequence};
use rand::Rng;
use rayon::prelude::*;

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
  if cond {
    Ok(())
  } else {
    Err(msg())
  }
}

fn lambda(q: u32) -> f64 {
  2f64.powf(q as f64 / 6.0 - 2.0)
}

#[allow(clippy::too_many_arguments)]
fn oracle_cost(
  cur: &Plane,
  reference: &Plane,
  x0: usize,
  y0: usize,
  edge: usize,
  mv: MotionVector,
  pred: MotionVector,
  q: u32,
) -> (u32, u32, f64) {
  let sad = block_sad(cur, reference, x0, y0, edge, mv.dx, mv.dy);
  let bits = se_bits((mv.dx - pred.dx) as i64) + se_bits((mv.dy - pred.dy) as i64);
  (sad, bits, lambda(q) * bits as f64 + sad as f64)
}

fn flow_dir_for(frames_flows: &[DenseFlowField], seq: &str) -> tempfile::TempDir {
  let dir = tempfile::tempdir().unwrap();
  write_flow_dir(dir.path(), seq, frames_flows);
  dir
}

fn encode_with_files(frames: &[Frame], cfg: &CodecConfig, dir: &Path, seq: &str) -> EncodeOutput {
  let mut p = FileFlowProvider::new(ProvenanceMode::T0, dir, seq).unwrap();
  encode_sequence(frames, cfg, Some(&mut p)).unwrap()
}

fn criterion_1() -> Outcome {
  let (frames, flows) = two_layer(64, 64, 16, 101);
  let dir = flow_dir_for(&flows, "c1");
  let jobs: Vec<(MotionMode, u32)> =
    MotionMode::ALL.iter().flat_map(|&m| [1, 5, 25, 45].map(move |q| (m, q))).collect();
  let failures: Vec<String> = jobs
    .par_iter()
    .filter_map(|&(mode, q)| {
      let cfg = CodecConfig::new(q, mode);
      let out = encode_with_files(&frames, &cfg, dir.path(), "c1");
      let decoded = decode_sequence(&out.bitstream, &cfg).ok()?;
      if decoded != out.recon {
        return Some(format!("{mode} q={q}: reconstruction mismatch"));
      }
      if out.total_bits() != 8 * out.bitstream.len() as u64 {
        return Some(format!(
          "{mode} q={q}: {} bits reported, stream has {}",
          out.total_bits(),
          8 * out.bitstream.len()
        ));
      }
      None
    })
    .collect();
  check(failures.is_empty(), || failures.join("; "))?;
  Ok(format!("{} encodes bit-identical, bit counts exact", jobs.len()))
}

fn criterion_2() -> Outcome {
  let mut r = rng(202);
  let big = texture(96, 96, 7);
  let reference = {
    let mut f = Frame::new(64, 64, 0).unwrap();
    for y in 0..64 {
      for x in 0..64 {
        f.plane_mut(PlaneId::Y).set(x, y, big.get(x + 16, y + 16));
      }
    }
    f
  };
  let blocks = 150;
  for i in 0..blocks {
    let (sx, sy) = (r.gen_range(-8i64..=8), r.gen_range(-8i64..=8));
    let mut cur = Frame::new(64, 64, 1).unwrap();
    for y in 0..64 {
      for x in 0..64 {
        let v = big.get((x as i64 + 16 + sx) as usize, (y as i64 + 16 + sy) as usize) as i32
          + r.gen_range(-3..=3);
        cur.plane_mut(PlaneId::Y).set(x, y, v.clamp(0, 255) as u8);
      }
    }
    let bs = [BlockSize::B4, BlockSize::B8, BlockSize::B16][i % 3];
    let edge = bs.pixels();
    let (x0, y0) = (r.gen_range(8..=56 - edge), r.gen_range(8..=56 - edge));
    let pred = MotionVector::new(r.gen_range(-32..=32), r.gen_range(-32..=32));
    let q = r.gen_range(1..=51);
    let target = BlockTarget::new(&cur, &reference, x0, y0, bs, pred, RdParams::new(q).unwrap());
    let cfg = SearchConfig { search_range: 8, block_size: bs, refine_subpel: false };

    let (cp, rp) = (cur.plane(PlaneId::Y), reference.plane(PlaneId::Y));
    let mut best = f64::INFINITY;
    for dy in -8..=8 {
      for dx in -8..=8 {
        best =
          best.min(oracle_cost(cp, rp, x0, y0, edge, MotionVector::from_pel(dx, dy), pred, q).2);
      }
    }
    let full = full_search(&target, &cfg).best;
    let (sad, bits, cost) = oracle_cost(cp, rp, x0, y0, edge, full.mv, pred, q);
    check(sad == full.distortion && bits == full.bits, || {
      format!("block {i}: full-search candidate misreported")
    })?;
    check((cost - best).abs() <= 1e-9, || {
      format!("block {i}: full search {cost} vs exhaustive minimum {best}")
    })?;
    for (name, res) in [
      ("diamond", diamond_search(&target, &cfg, &[pred])),
      ("hex", hex_search(&target, &cfg, &[pred])),
    ] {
      check(res.cost() >= full.cost - 1e-9, || {
        format!("block {i}: {name} {} below full {}", res.cost(), full.cost)
      })?;
    }
    let refined = full_search(&target, &SearchConfig { refine_subpel: true, ..cfg }).best;
    check(refined.cost <= best + 1e-9, || {
      format!("block {i}: quarter-pel refinement lost the integer optimum")
    })?;
  }
  Ok(format!("{blocks} blocks, full search matches exhaustive minimum; diamond/hex never below it"))
}

/// First minimiser of the L2 distance sum, with ties to smaller magnitude, then u, then v.
fn brute_median(set: &[FlowVector]) -> (FlowVector, Vec<f64>) {
  let sums: Vec<f64> = set
    .iter()
    .map(|a| {
      set
        .iter()
        .map(|b| {
          let (du, dv) = (a.u as f64 - b.u as f64, a.v as f64 - b.v as f64);
          (du * du + dv * dv).sqrt()
        })
        .sum()
    })
    .collect();
  let mut best = 0;
  for i in 1..set.len() {
    let key = |k: usize| {
      let m = (set[k].u as f64).powi(2) + (set[k].v as f64).powi(2);
      (sums[k], m, set[k].u, set[k].v)
    };
    let (a, b) = (key(i), key(best));
    if a.0 < b.0
      || (a.0 == b.0 && (a.1 < b.1 || (a.1 == b.1 && (a.2 < b.2 || (a.2 == b.2 && a.3 < b.3)))))
    {
      best = i;
    }
  }
  (set[best], sums)
}

fn criterion_3() -> Outcome {
  let mut r = rng(303);
  let sets = 1500;
  let mut ties = 0;
  for i in 0..sets {
    let k = r.gen_range(1..=64);
    let set: Vec<FlowVector> = match i % 3 {
      // coarse grid: duplicates and exact ties are common
      0 => (0..k)
        .map(|_| FlowVector::new(r.gen_range(-2..=2) as f32, r.gen_range(-2..=2) as f32))
        .collect(),
      // symmetric pairs tie on distance sums
      1 => {
        let (u, v) = (r.gen_range(-8..=8) as f32 * 0.5, r.gen_range(-8..=8) as f32 * 0.5);
        vec![FlowVector::new(u, v), FlowVector::new(-u, -v)]
      }
      _ => (0..k)
        .map(|_| FlowVector::new(r.gen_range(-20.0..20.0), r.gen_range(-20.0..20.0)))
        .collect(),
    };
    let (want, sums) = brute_median(&set);
    let min = sums.iter().cloned().fold(f64::INFINITY, f64::min);
    if sums.iter().filter(|&&s| s == min).count() > 1 {
      ties += 1;
    }
    let got = vector_median(&set, false).ok_or("empty result")?;
    check(got == want, || format!("set {i}: median {got:?}, brute force {want:?}"))?;
    let field = DenseFlowField::new(set.len(), 1, set.clone()).unwrap();
    let block = block_vector_median(
      &field,
      BlockRect { x0: 0, y0: 0, width: set.len(), height: 1 },
      false,
      DEFAULT_MV_BOUND,
    )
    .map_err(|e| e.to_string())?;
    let expect = quantize_to_quarter_pel(want.u as f64, want.v as f64, DEFAULT_MV_BOUND);
    check(block == expect, || format!("set {i}: block median {block} vs {expect}"))?;
  }
  check(ties > 100, || format!("only {ties} tie cases generated"))?;
  Ok(format!("{sets} sets ({ties} with tied sums) match the brute-force minimiser"))
}

fn median3(a: i32, b: i32, c: i32) -> i32 {
  a.max(b).min(a.min(b).max(c))
}

fn check_hybrid_blocks(
  frames: &[Frame],
  out: &EncodeOutput,
  cfg: &CodecConfig,
) -> Result<usize, String> {
  let b = cfg.block_size.pixels();
  let mut blocks = 0;
  for (n, decisions) in out.decisions.iter().enumerate().skip(1) {
    let (cur, reference) = (frames[n].plane(PlaneId::Y), out.recon[n - 1].plane(PlaneId::Y));
    let cols = decisions.iter().map(|d| d.col).max().unwrap_or(0) + 1;
    for d in decisions {
      let at = |c: usize, r: usize| decisions[r * cols + c].mv();
      let left = if d.col > 0 { at(d.col - 1, d.row) } else { MotionVector::ZERO };
      let top = if d.row > 0 { at(d.col, d.row - 1) } else { MotionVector::ZERO };
      let tr =
        if d.row > 0 && d.col + 1 < cols { at(d.col + 1, d.row - 1) } else { MotionVector::ZERO };
      let pred =
        MotionVector::new(median3(left.dx, top.dx, tr.dx), median3(left.dy, top.dy, tr.dy));
      check(pred == d.predictor, || format!("frame {n} block ({}, {}): predictor", d.col, d.row))?;
      let (s, f) = (d.search.ok_or("no search candidate")?, d.flow.ok_or("no flow candidate")?);
      let eval = |mv| oracle_cost(cur, reference, d.col * b, d.row * b, b, mv, pred, cfg.q).2;
      let (cs, cf) = (eval(s.mv), eval(f.mv));
      let (want_mv, want_cost) = if cf < cs { (f.mv, cf) } else { (s.mv, cs) };
      check(
        d.mv() == want_mv
          && (eval(d.mv()) - want_cost).abs() <= 1e-9
          && (d.cost() - want_cost).abs() <= 1e-9,
        || {
          format!(
            "frame {n} block ({}, {}): chose {} at {}, candidates {}@{cs} / {}@{cf}",
            d.col,
            d.row,
            d.mv(),
            d.cost(),
            s.mv,
            f.mv
          )
        },
      )?;
      blocks += 1;
    }
  }
  Ok(blocks)
}

fn criterion_4() -> Outcome {
  let (frames, flows) = two_layer(96, 64, 8, 404);
  let dir = flow_dir_for(&flows, "c4");
  let mut blocks = 0;
  let mut flow_wins = 0;
  for mode in [MotionMode::HybridMean, MotionMode::HybridMedian] {
    for q in [4, 20, 40] {
      for bs in [BlockSize::B8, BlockSize::B16] {
        let cfg = CodecConfig::new(q, mode).with_block_size(bs);
        let out = encode_with_files(&frames, &cfg, dir.path(), "c4");
        blocks +=
          check_hybrid_blocks(&frames, &out, &cfg).map_err(|e| format!("{mode} q={q}: {e}"))?;
        flow_wins +=
          out.decisions.iter().flatten().filter(|d| d.flow.is_some_and(|f| f.mv == d.mv())).count();
      }
    }
  }
  Ok(format!("{blocks} hybrid blocks equal min of re-evaluated candidates ({flow_wins} choose the flow vector)"))
}

fn criterion_5() -> Outcome {
  let reference = RdCurve::new(
    [
      (5, 2400.0, 41.2),
      (10, 1350.0, 38.1),
      (15, 910.0, 35.9),
      (20, 640.0, 34.2),
      (25, 500.0, 32.6),
    ]
    .map(|(q, rate, psnr)| RdPoint { q, rate, psnr })
    .to_vec(),
  );
  let map =
    |f: &dyn Fn(&RdPoint) -> RdPoint| RdCurve::new(reference.points().iter().map(f).collect());
  let e = |r: Result<f64, _>| r.map_err(|e: flowcodec::metrics::MetricsError| e.to_string());
  let (same_rate, same_psnr) =
    (e(bd_rate(&reference, &reference))?, e(bd_psnr(&reference, &reference))?);
  check(same_rate.abs() <= 1e-9 && same_psnr.abs() <= 1e-9, || {
    format!("self deltas {same_rate}, {same_psnr}")
  })?;
  let scaled = e(bd_rate(&reference, &map(&|p| RdPoint { rate: p.rate * 1.1, ..*p })))?;
  check((scaled - 10.0).abs() <= 1e-6, || format!("rate x1.1 gives {scaled}%"))?;
  let lifted = e(bd_psnr(&reference, &map(&|p| RdPoint { psnr: p.psnr + 0.5, ..*p })))?;
  check((lifted - 0.5).abs() <= 1e-6, || format!("PSNR +0.5 gives {lifted} dB"))?;
  Ok(format!("self 0, rate x1.1 -> {scaled:.9}%, PSNR +0.5 -> {lifted:.9} dB"))
}

fn criterion_6() -> Outcome {
  let start = Instant::now();
  let seq = Sequence { name: "pan".into(), frames: translating(96, 96, 50, 2, 0, 606) };
  let qs: Vec<u32> = (5..=45).step_by(5).collect();
  let rows = sweep::run_sweep(
    &[seq],
    &[MotionMode::Zero, MotionMode::InternalHex],
    &qs,
    &CodecConfig::default(),
    None,
  )
  .map_err(|e| e.to_string())?;
  let agg = sweep::aggregate(&rows).map_err(|e| e.to_string())?;
  let zero = sweep::curve_of(&agg, sweep::MEDIAN_LABEL, "zero");
  let hex = sweep::curve_of(&agg, sweep::MEDIAN_LABEL, "internal-hex");
  let rate = bd_rate(&zero, &hex).map_err(|e| e.to_string())?;
  let secs = start.elapsed().as_secs_f64();
  check(rate <= -40.0, || format!("BD-rate {rate:.2}% (needs <= -40%)"))?;
  check(secs < 120.0, || format!("took {secs:.0} s"))?;
  Ok(format!("internal-hex vs zero BD-rate {rate:.2}% in {secs:.1} s"))
}

fn stats_csv(out: &EncodeOutput) -> Vec<u8> {
  let mut buf = Vec::new();
  write_csv_with_header(&mut buf, flowcodec::codec::STATS_CSV_HEADER, &out.stats).unwrap();
  buf
}

fn criterion_7() -> Outcome {
  let (frames, flows) = two_layer(64, 48, 8, 707);
  let dir = flow_dir_for(&flows, "c7");
  let stub = copy_stub(dir.path(), dir.path(), "c7");
  let mut compared = 0;
  for mode in [MotionMode::FlowMean, MotionMode::FlowMedian, MotionMode::HybridMedian] {
    for q in [5, 25] {
      let cfg = CodecConfig::new(q, mode).with_block_size(BlockSize::B8);
      let mut t1 = FileFlowProvider::new(ProvenanceMode::T1, dir.path(), "c7").unwrap();
      let mut t2 = CommandFlowProvider::new(stub.to_str().unwrap(), "c7").unwrap();
      let a = encode_sequence(&frames, &cfg, Some(&mut t1)).map_err(|e| e.to_string())?;
      let b = encode_sequence(&frames, &cfg, Some(&mut t2)).map_err(|e| e.to_string())?;
      check(stats_csv(&a) == stats_csv(&b) && a.bitstream == b.bitstream, || {
        format!("{mode} q={q}: T1 and T2 differ")
      })?;
      compared += 1;
    }
  }
  Ok(format!("{compared} T1/T2 runs with byte-identical stats and streams"))
}

fn criterion_8() -> Outcome {
  let start = Instant::now();
  let tmp = tempfile::tempdir().unwrap();
  let (input, flow_dir, name): (PathBuf, PathBuf, String) =
    match (std::env::var_os("FLOWCODEC_E2E_Y4M"), std::env::var_os("FLOWCODEC_E2E_FLOW_DIR")) {
      (Some(y4m), Some(dir)) => {
        let p = PathBuf::from(y4m);
        let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
        (p, dir.into(), stem)
      }
      _ => {
        let (frames, flows) = two_layer(128, 96, 10, 808);
        let path = tmp.path().join("desk.y4m");
        let header = SequenceHeader::new(128, 96, Rational { num: 24, den: 1 });
        write_y4m(std::fs::File::create(&path).unwrap(), &header, &frames).unwrap();
        write_flow_dir(&tmp.path().join("flow"), "desk", &flows);
        (path, tmp.path().join("flow"), "desk".into())
      }
    };
  let csv = tmp.path().join("rd.csv");
  let out = Command::new(env!("CARGO_BIN_EXE_flowcodec"))
    .args([
      "rd-sweep",
      "--modes",
      "zero,internal-hex,flow-median,hybrid-median",
      "--q",
      "5:10:45",
      "--provenance",
      "T1",
    ])
    .arg("--inputs")
    .arg(&input)
    .arg("--flow-dir")
    .arg(&flow_dir)
    .arg("--out")
    .arg(&csv)
    .output()
    .map_err(|e| e.to_string())?;
  check(out.status.success(), || {
    format!("rd-sweep failed: {}", String::from_utf8_lossy(&out.stderr))
  })?;
  let text = std::fs::read_to_string(&csv).map_err(|e| e.to_string())?;
  check(text.lines().next() == Some(METRICS_CSV_HEADER), || "bad CSV header".into())?;
  let rows = read_metrics(text.as_bytes(), MetricsFormat::Csv).map_err(|e| e.to_string())?;
  check(rows.len() == 20, || format!("{} rows, expected 20", rows.len()))?;
  for mode in ["zero", "internal-hex", "flow-median", "hybrid-median"] {
    let qs: Vec<u32> =
      rows.iter().filter(|r| r.mode == mode && r.sequence == name).map(|r| r.q).collect();
    check(qs == [5, 15, 25, 35, 45], || format!("{mode}: q grid {qs:?}"))?;
  }
  check(
    rows.iter().all(|r| r.rate_bits_per_frame > 0.0 && r.psnr_db.is_finite() && r.psnr_db > 0.0),
    || "non-finite row".into(),
  )?;

  let frames =
    flowcodec::io::read_y4m_all(std::io::BufReader::new(std::fs::File::open(&input).unwrap()))
      .map_err(|e| e.to_string())?
      .1;
  let mut blocks = 0;
  for q in [5, 15, 25, 35, 45] {
    let cfg = CodecConfig::new(q, MotionMode::HybridMedian);
    let mut p = FileFlowProvider::new(ProvenanceMode::T1, &flow_dir, &name).unwrap();
    let out = encode_sequence(&frames, &cfg, Some(&mut p)).map_err(|e| e.to_string())?;
    for d in out.decisions.iter().flatten() {
      let hex = d.search.ok_or("missing internal-hex candidate")?;
      check(d.cost() <= hex.cost, || {
        format!(
          "q={q}: block ({}, {}) cost {} above internal-hex {}",
          d.col,
          d.row,
          d.cost(),
          hex.cost
        )
      })?;
      blocks += 1;
    }
    check_hybrid_blocks(&frames, &out, &cfg).map_err(|e| format!("q={q}: {e}"))?;
  }
  Ok(format!(
    "20-row RD CSV for {name}; {blocks} hybrid blocks never above internal-hex; {:.1} s",
    start.elapsed().as_secs_f64()
  ))
}

fn criterion_9() -> Outcome {
  let mut r = rng(909);
  let (mut worst_inv, mut worst_parseval) = (0f64, 0f64);
  for _ in 0..2000 {
    let x: [f64; 64] = std::array::from_fn(|_| r.gen_range(-255.0..255.0));
    let c = transform::dct8_forward(&x);
    let y = transform::dct8_inverse(&c);
    worst_inv = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(worst_inv, f64::max);
    let (ex, ec) = (x.iter().map(|v| v * v).sum::<f64>(), c.iter().map(|v| v * v).sum::<f64>());
    worst_parseval = worst_parseval.max((ex - ec).abs() / ex);
  }
  check(worst_inv <= 1e-6, || format!("inverse error {worst_inv:e}"))?;
  check(worst_parseval <= 1e-6, || format!("Parseval error {worst_parseval:e}"))?;
  let dc = transform::dct8_forward(&[7.0; 64]);
  check((dc[0] - 56.0).abs() <= 1e-9 && dc[1..].iter().all(|v| v.abs() <= 1e-9), || {
    "constant block".into()
  })?;
  let mut checked = 0;
  for q in 1..=64u32 {
    let coeffs: Vec<f64> = (0..4000).map(|_| r.gen_range(-4096.0..4096.0)).collect();
    let back = transform::dequantize(&transform::quantize(&coeffs, q), q);
    for (c, b) in coeffs.iter().zip(&back) {
      check((b - c).abs() <= q as f64 / 2.0, || format!("q={q}: {c} -> {b}"))?;
      checked += 1;
    }
  }
  Ok(format!("inverse {worst_inv:.1e}, Parseval {worst_parseval:.1e}, {checked} quantiser samples within q/2"))
}

fn random_field(w: usize, h: usize, r: &mut impl Rng) -> DenseFlowField {
  let v = (0..w * h)
    .map(|_| FlowVector::new(r.gen_range(-30.0..30.0), r.gen_range(-30.0..30.0)))
    .collect();
  DenseFlowField::new(w, h, v).unwrap()
}

fn criterion_10() -> Outcome {
  let mut r = rng(1010);
  for i in 0..100 {
    let (w, h) = (r.gen_range(1..40), r.gen_range(1..30));
    let (a, b, c) =
      (random_field(w, h, &mut r), random_field(w, h, &mut r), random_field(w, h, &mut r));
    let d = |x: &DenseFlowField, y: &DenseFlowField| epe(x, y).unwrap();
    check(d(&a, &a) == 0.0 && d(&b, &b) == 0.0, || format!("triple {i}: identity"))?;
    check(d(&a, &b) > 0.0 && d(&a, &b) == d(&b, &a), || {
      format!("triple {i}: positivity/symmetry")
    })?;
    check(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12, || format!("triple {i}: triangle"))?;
  }
  let zero = DenseFlowField::constant(17, 9, FlowVector::new(0.0, 0.0));
  let offset = DenseFlowField::constant(17, 9, FlowVector::new(3.0, 4.0));
  let e = epe(&zero, &offset).unwrap();
  check(e == 5.0, || format!("(3,4) offset gives {e}"))?;
  Ok("100 random triples satisfy the metric axioms; (3,4) offset = 5".into())
}

fn main() {
  let criteria: [Criterion; 10] = [
    ("closed-loop integrity", criterion_1),
    ("search optimality oracle", criterion_2),
    ("vector median oracle", criterion_3),
    ("hybrid min property", criterion_4),
    ("BD analytic cases", criterion_5),
    ("motion vs zero-motion BD-rate", criterion_6),
    ("T1/T2 flow injection equivalence", criterion_7),
    ("end-to-end rd-sweep", criterion_8),
    ("transform/quantiser numerics", criterion_9),
    ("EPE metric properties", criterion_10),
  ];
  let mut failed = 0;
  for (i, (name, f)) in criteria.iter().enumerate() {
    match std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into())) {
      Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
      Err(why) => {
        failed += 1;
        println!("criterion {:>2} {name}: FAIL ({why})", i + 1);
      }
    }
  }
  println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
  if failed > 0 {
    std::process::exit(1);
  }
}
