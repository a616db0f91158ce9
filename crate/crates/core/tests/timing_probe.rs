use std::time::Instant;
use segfix_core::*;

#[test]
fn timing_probe() {
    let cfg = SynthConfig { seed: 80, height: 1024, width: 2048, num_classes: 19, num_shapes: 60, min_shape_extent: 24 };
    let t = Instant::now();
    let gt = generate_labels(&cfg).unwrap();
    println!("generate: {:?}", t.elapsed());

    let t = Instant::now();
    let fused = fused_distance_map(&gt);
    println!("fused EDT (19 classes): {:?}", t.elapsed());

    let t = Instant::now();
    let boundary = boundary_from_distance(&fused, 5.0).unwrap();
    println!("threshold: {:?} ({} boundary px)", t.elapsed(), boundary.count());

    let t = Instant::now();
    let (b2, dirs) = gt_direction_pipeline(&gt, 5.0, 8).unwrap();
    println!("full pipeline (EDT+sobel+quantize): {:?}", t.elapsed());

    let t = Instant::now();
    let field = build_offset_field(&dirs, &b2, 1).unwrap();
    println!("offsets: {:?}", t.elapsed());

    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    io::write_label_png(&gt, &dir.path().join("l.png")).unwrap();
    println!("png write: {:?}", t.elapsed());
    let t = Instant::now();
    let _back = io::read_label_png(&dir.path().join("l.png"), 19, IGNORE_ID).unwrap();
    println!("png read: {:?}", t.elapsed());
    let t = Instant::now();
    io::write_npy_offsets(&dir.path().join("o.npy"), field.grid()).unwrap();
    io::write_npy_u8(&dir.path().join("d.npy"), dirs.grid()).unwrap();
    io::write_npy_bool(&dir.path().join("b.npy"), boundary.grid()).unwrap();
    println!("npy writes: {:?}", t.elapsed());

    let t = Instant::now();
    let scaled = field.rescaled(2).unwrap();
    let _refined = refine_labels(&gt, &scaled).unwrap();
    println!("refine: {:?}", t.elapsed());
}
