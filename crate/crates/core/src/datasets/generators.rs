//! Procedural image constructors for the benchmark families.
//!
//! All geometry lives here: glyph point sets, placement with bounded
//! retries, and the moving-sequence builder. Every function takes an
//! explicit RNG so generation stays a pure function of (spec, seed).

use rand::Rng;

use super::{BinaryImage, BoundaryPolicy, DatasetSpec, ImageSequence, Popup};
use crate::error::{CoreError, Result};
use crate::rng::ChaCha8Rng;

/// Side of the square / triangle bounding box (odd so triangles have a
/// centered apex).
pub const SHAPE_SIZE: usize = 11;
/// Arm length of each L-piece in the corners family.
pub const CORNER_ARM: usize = 3;
/// A new object may share at most this fraction of its pixels with the
/// objects already placed (bars and digit families excepted).
const OVERLAP_CAP: f64 = 0.25;
const PLACE_RETRIES: usize = 80;

pub const N_SHAPE_KINDS: u8 = 3;

fn gen_err(spec: &DatasetSpec, reason: impl Into<String>) -> CoreError {
    CoreError::Generation {
        spec: spec.describe(),
        reason: reason.into(),
    }
}

/// Integer line segment, both endpoints included.
fn bresenham(a: (i64, i64), b: (i64, i64), out: &mut Vec<(usize, usize)>) {
    let (mut r, mut c) = a;
    let dr = (b.0 - a.0).abs();
    let dc = (b.1 - a.1).abs();
    let sr = if a.0 < b.0 { 1 } else { -1 };
    let sc = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dc - dr;
    loop {
        out.push((r as usize, c as usize));
        if (r, c) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= -dr {
            err -= dr;
            c += sc;
        }
        if e2 <= dc {
            err += dc;
            r += sr;
        }
    }
}

/// Outline glyph for shape `kind` (0 square, 1 triangle up, 2 triangle
/// down) in an s×s bounding box, as (row, col) points relative to the
/// box corner.
pub fn shape_points(kind: u8, s: usize) -> Vec<(usize, usize)> {
    let hi = (s - 1) as i64;
    let mid = hi / 2;
    let mut pts = Vec::new();
    match kind {
        0 => {
            for c in 0..s {
                pts.push((0, c));
                pts.push((s - 1, c));
            }
            for r in 1..s - 1 {
                pts.push((r, 0));
                pts.push((r, s - 1));
            }
        }
        1 => {
            bresenham((0, mid), (hi, 0), &mut pts);
            bresenham((0, mid), (hi, hi), &mut pts);
            bresenham((hi, 0), (hi, hi), &mut pts);
        }
        2 => {
            bresenham((hi, mid), (0, 0), &mut pts);
            bresenham((hi, mid), (0, hi), &mut pts);
            bresenham((0, 0), (0, hi), &mut pts);
        }
        _ => panic!("unknown shape kind {kind}"),
    }
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// The four unconnected L-pieces marking the corners of a virtual s×s
/// square; one ground-truth object.
pub fn corner_points(s: usize, arm: usize) -> Vec<(usize, usize)> {
    let hi = s - 1;
    let mut pts = Vec::new();
    for d in 0..arm {
        // top-left
        pts.push((0, d));
        pts.push((d, 0));
        // top-right
        pts.push((0, hi - d));
        pts.push((d, hi));
        // bottom-left
        pts.push((hi, d));
        pts.push((hi - d, 0));
        // bottom-right
        pts.push((hi, hi - d));
        pts.push((hi - d, hi));
    }
    pts.sort_unstable();
    pts.dedup();
    pts
}

fn translate(points: &[(usize, usize)], r0: usize, c0: usize) -> Vec<(usize, usize)> {
    points.iter().map(|&(r, c)| (r + r0, c + c0)).collect()
}

fn overlap_fraction(img: &BinaryImage, points: &[(usize, usize)]) -> f64 {
    let shared = points
        .iter()
        .filter(|&&(r, c)| img.pixels[img.idx(r, c)] == 1)
        .count();
    shared as f64 / points.len() as f64
}

/// Place a glyph at a random in-bounds offset, retrying while the overlap
/// cap is exceeded. `make` maps a candidate (r0, c0) to canvas points.
fn place_capped(
    img: &mut BinaryImage,
    rng: &mut ChaCha8Rng,
    spec: &DatasetSpec,
    extent: (usize, usize),
    label: u8,
    points: &[(usize, usize)],
) -> Result<()> {
    let (ph, pw) = extent;
    if ph > spec.height || pw > spec.width {
        return Err(gen_err(spec, "object does not fit on the canvas"));
    }
    for _ in 0..PLACE_RETRIES {
        let r0 = rng.random_range(0..=spec.height - ph);
        let c0 = rng.random_range(0..=spec.width - pw);
        let placed = translate(points, r0, c0);
        if img.n_objects == 0 || overlap_fraction(img, &placed) <= OVERLAP_CAP {
            img.add_object(&placed, label);
            return Ok(());
        }
    }
    Err(gen_err(spec, "placement failed: overlap cap unsatisfiable"))
}

/// Bars: one-pixel-thick full-width horizontal or full-height vertical
/// bars at distinct offsets. Label 0 = horizontal, 1 = vertical.
pub fn bars_image(spec: &DatasetSpec, rng: &mut ChaCha8Rng, n_obj: u8) -> Result<BinaryImage> {
    if (n_obj as usize) > spec.height + spec.width {
        return Err(gen_err(spec, "more bars than rows plus columns"));
    }
    let mut img = BinaryImage::empty(spec.width, spec.height);
    let mut used: Vec<(u8, usize)> = Vec::new();
    for _ in 0..n_obj {
        let mut placed = false;
        for _ in 0..PLACE_RETRIES {
            let orient: u8 = rng.random_range(0..2);
            let offset = if orient == 0 {
                rng.random_range(0..spec.height)
            } else {
                rng.random_range(0..spec.width)
            };
            if used.contains(&(orient, offset)) {
                continue;
            }
            used.push((orient, offset));
            let points: Vec<(usize, usize)> = if orient == 0 {
                (0..spec.width).map(|c| (offset, c)).collect()
            } else {
                (0..spec.height).map(|r| (r, offset)).collect()
            };
            img.add_object(&points, orient);
            placed = true;
            break;
        }
        if !placed {
            return Err(gen_err(spec, "could not draw a distinct bar"));
        }
    }
    Ok(img)
}

/// Shapes: square / triangle outlines at random positions with bounded
/// mutual overlap. Label = shape kind.
pub fn shapes_image(spec: &DatasetSpec, rng: &mut ChaCha8Rng, n_obj: u8) -> Result<BinaryImage> {
    let mut img = BinaryImage::empty(spec.width, spec.height);
    for _ in 0..n_obj {
        let kind = rng.random_range(0..N_SHAPE_KINDS);
        let pts = shape_points(kind, SHAPE_SIZE);
        place_capped(&mut img, rng, spec, (SHAPE_SIZE, SHAPE_SIZE), kind, &pts)?;
    }
    Ok(img)
}

/// Corners: each object is four unconnected L-pieces forming a virtual
/// square (4·n connected components, n ground-truth groups).
pub fn corners_image(spec: &DatasetSpec, rng: &mut ChaCha8Rng, n_obj: u8) -> Result<BinaryImage> {
    let pts = corner_points(SHAPE_SIZE, CORNER_ARM);
    let mut img = BinaryImage::empty(spec.width, spec.height);
    for _ in 0..n_obj {
        place_capped(&mut img, rng, spec, (SHAPE_SIZE, SHAPE_SIZE), 0, &pts)?;
    }
    Ok(img)
}

fn digit_points(digit: &BinaryImage) -> Vec<(usize, usize)> {
    let mut pts = Vec::new();
    for r in 0..digit.height {
        for c in 0..digit.width {
            if digit.pixels[digit.idx(r, c)] == 1 {
                pts.push((r, c));
            }
        }
    }
    pts
}

/// Draw a pool digit with a class not yet in `used_classes`.
fn draw_digit<'a>(
    spec: &DatasetSpec,
    rng: &mut ChaCha8Rng,
    pool: &'a [BinaryImage],
    used_classes: &[u8],
) -> Result<&'a BinaryImage> {
    for _ in 0..PLACE_RETRIES {
        let digit = &pool[rng.random_range(0..pool.len())];
        let class = *digit
            .object_labels
            .first()
            .ok_or_else(|| gen_err(spec, "pool digit without class label"))?;
        if digit.foreground_count() < 20 {
            continue;
        }
        if !used_classes.contains(&class) {
            return Ok(digit);
        }
    }
    Err(gen_err(spec, "could not draw enough distinct digit classes"))
}

/// MultiMnist: n binarized digits at random offsets, OR-composed. Digit
/// classes within one image are distinct. Label = digit class.
pub fn multi_mnist_image(
    spec: &DatasetSpec,
    rng: &mut ChaCha8Rng,
    n_obj: u8,
    pool: &[BinaryImage],
) -> Result<BinaryImage> {
    let mut img = BinaryImage::empty(spec.width, spec.height);
    let mut used = Vec::new();
    for _ in 0..n_obj {
        let digit = draw_digit(spec, rng, pool, &used)?;
        if digit.height > spec.height || digit.width > spec.width {
            return Err(gen_err(spec, "digit larger than canvas"));
        }
        let r0 = rng.random_range(0..=spec.height - digit.height);
        let c0 = rng.random_range(0..=spec.width - digit.width);
        let class = digit.object_labels[0];
        img.add_object(&translate(&digit_points(digit), r0, c0), class);
        used.push(class);
    }
    Ok(img)
}

/// MnistShape: one digit plus one shape outline (n_obj = 2), or a 50/50
/// single draw (n_obj = 1, the DAE training mode). Shape labels are offset
/// by 10 to stay disjoint from digit classes.
pub fn mnist_shape_image(
    spec: &DatasetSpec,
    rng: &mut ChaCha8Rng,
    n_obj: u8,
    pool: &[BinaryImage],
) -> Result<BinaryImage> {
    if n_obj > 2 {
        return Err(gen_err(spec, "mnist_shape holds at most one digit and one shape"));
    }
    let mut img = BinaryImage::empty(spec.width, spec.height);
    let place_digit = |img: &mut BinaryImage, rng: &mut ChaCha8Rng| -> Result<()> {
        let digit = draw_digit(spec, rng, pool, &[])?;
        let r0 = rng.random_range(0..=spec.height - digit.height);
        let c0 = rng.random_range(0..=spec.width - digit.width);
        img.add_object(
            &translate(&digit_points(digit), r0, c0),
            digit.object_labels[0],
        );
        Ok(())
    };
    let place_shape = |img: &mut BinaryImage, rng: &mut ChaCha8Rng| -> Result<()> {
        let kind = rng.random_range(0..N_SHAPE_KINDS);
        let pts = shape_points(kind, SHAPE_SIZE);
        place_capped(img, rng, spec, (SHAPE_SIZE, SHAPE_SIZE), 10 + kind, &pts)
    };
    if n_obj == 1 {
        if rng.random_range(0..2) == 0 {
            place_digit(&mut img, rng)?;
        } else {
            place_shape(&mut img, rng)?;
        }
    } else {
        place_digit(&mut img, rng)?;
        place_shape(&mut img, rng)?;
    }
    Ok(img)
}

/// One object of a moving sequence.
#[derive(Debug, Clone, Copy)]
pub struct MovingObject {
    pub kind: u8,
    /// Initial (row, col) of the bounding-box corner at the spawn frame.
    pub pos: (i32, i32),
    /// (dy, dx) per frame; axis-aligned unit vectors in generated data.
    pub vel: (i32, i32),
    pub spawn: usize,
}

/// Assemble a sequence from explicit objects. Popup objects must carry the
/// highest ids (spawn order equals id order) so group bits stay stable.
pub fn sequence_from_objects(
    width: usize,
    height: usize,
    objects: &[MovingObject],
    n_frames: usize,
    boundary: BoundaryPolicy,
) -> ImageSequence {
    let glyphs: Vec<Vec<(usize, usize)>> = objects
        .iter()
        .map(|o| shape_points(o.kind, SHAPE_SIZE))
        .collect();
    let mut frames = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let mut img = BinaryImage::empty(width, height);
        for (o, glyph) in objects.iter().zip(&glyphs) {
            if f < o.spawn {
                continue;
            }
            let steps = (f - o.spawn) as i32;
            let r0 = o.pos.0 + steps * o.vel.0;
            let c0 = o.pos.1 + steps * o.vel.1;
            let mut pts = Vec::with_capacity(glyph.len());
            for &(r, c) in glyph {
                let rr = r0 + r as i32;
                let cc = c0 + c as i32;
                match boundary {
                    BoundaryPolicy::Wrap => pts.push((
                        rr.rem_euclid(height as i32) as usize,
                        cc.rem_euclid(width as i32) as usize,
                    )),
                    BoundaryPolicy::Clip => {
                        if rr >= 0 && cc >= 0 && (rr as usize) < height && (cc as usize) < width {
                            pts.push((rr as usize, cc as usize));
                        }
                    }
                }
            }
            pts.sort_unstable();
            pts.dedup();
            img.add_object(&pts, o.kind);
        }
        frames.push(img);
    }
    ImageSequence {
        frames,
        velocities: objects.iter().map(|o| o.vel).collect(),
        spawn_times: objects.iter().map(|o| o.spawn).collect(),
    }
}

const UNIT_VELOCITIES: [(i32, i32); 4] = [(0, 1), (0, -1), (1, 0), (-1, 0)];

/// Random moving-shapes sequence: base objects from frame 0, speed one
/// pixel per frame along a fixed axis, optional popup.
pub fn moving_shapes(
    spec: &DatasetSpec,
    rng: &mut ChaCha8Rng,
    n_frames: usize,
    popup: Option<Popup>,
) -> Result<ImageSequence> {
    if SHAPE_SIZE > spec.height || SHAPE_SIZE > spec.width {
        return Err(gen_err(spec, "canvas smaller than the shape glyph"));
    }
    let n_base = spec.n_objects.draw(rng) as usize;
    let mut objects: Vec<MovingObject> = Vec::new();
    let mut probe = BinaryImage::empty(spec.width, spec.height);
    for _ in 0..n_base {
        let kind = rng.random_range(0..N_SHAPE_KINDS);
        let glyph = shape_points(kind, SHAPE_SIZE);
        let mut chosen = None;
        for _ in 0..PLACE_RETRIES {
            let r0 = rng.random_range(0..=spec.height - SHAPE_SIZE);
            let c0 = rng.random_range(0..=spec.width - SHAPE_SIZE);
            let placed = translate(&glyph, r0, c0);
            if probe.n_objects == 0 || overlap_fraction(&probe, &placed) <= OVERLAP_CAP {
                probe.add_object(&placed, kind);
                chosen = Some((r0 as i32, c0 as i32));
                break;
            }
        }
        let pos = chosen.ok_or_else(|| gen_err(spec, "initial placement failed"))?;
        let vel = UNIT_VELOCITIES[rng.random_range(0..UNIT_VELOCITIES.len())];
        objects.push(MovingObject { kind, pos, vel, spawn: 0 });
    }
    if let Some(p) = popup {
        let r0 = rng.random_range(0..=spec.height - SHAPE_SIZE) as i32;
        let c0 = rng.random_range(0..=spec.width - SHAPE_SIZE) as i32;
        let vel = UNIT_VELOCITIES[rng.random_range(0..UNIT_VELOCITIES.len())];
        objects.push(MovingObject {
            kind: p.shape_kind,
            pos: (r0, c0),
            vel,
            spawn: p.frame,
        });
    }
    if objects.len() > super::MAX_OBJECTS {
        return Err(gen_err(spec, "too many objects including popup"));
    }
    Ok(sequence_from_objects(
        spec.width,
        spec.height,
        &objects,
        n_frames,
        spec.boundary,
    ))
}

/// One probe image for the feature-neuron sweep: a single shape with both
/// factor labels attached.
#[derive(Debug, Clone)]
pub struct ProbeSample {
    pub image: BinaryImage,
    pub shape_label: u8,
    pub position_label: u16,
}

/// Deterministic shape × position sweep used to identify selective latent
/// units: every shape kind stamped at every stride-spaced position.
pub fn shape_position_probe(width: usize, height: usize, stride: usize) -> Vec<ProbeSample> {
    let mut out = Vec::new();
    for kind in 0..N_SHAPE_KINDS {
        let glyph = shape_points(kind, SHAPE_SIZE);
        let mut position = 0u16;
        for r0 in (0..=height - SHAPE_SIZE).step_by(stride) {
            for c0 in (0..=width - SHAPE_SIZE).step_by(stride) {
                let mut img = BinaryImage::empty(width, height);
                img.add_object(&translate(&glyph, r0, c0), kind);
                out.push(ProbeSample {
                    image: img,
                    shape_label: kind,
                    position_label: position,
                });
                position += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{DatasetKind, DatasetSpec, ObjectCount};
    use crate::rng::stream;

    fn spec(kind: DatasetKind, n: u8) -> DatasetSpec {
        DatasetSpec::new(kind, ObjectCount::Fixed(n), 1, 11)
    }

    #[test]
    fn single_bar_spans_the_canvas() {
        let s = spec(DatasetKind::Bars, 1);
        let img = bars_image(&s, &mut stream(3, "t", 0), 1).unwrap();
        assert_eq!(img.n_objects, 1);
        let px = img.foreground_count();
        assert!(px == s.width || px == s.height);
        let pts = img.object_pixels(0);
        let rows: Vec<usize> = pts.iter().map(|i| i / s.width).collect();
        let cols: Vec<usize> = pts.iter().map(|i| i % s.width).collect();
        let one_row = rows.iter().all(|&r| r == rows[0]);
        let one_col = cols.iter().all(|&c| c == cols[0]);
        assert!(one_row || one_col);
    }

    #[test]
    fn crossing_bars_share_one_overlap_pixel() {
        // Draw until we get one horizontal and one vertical bar.
        let s = spec(DatasetKind::Bars, 2);
        for i in 0..50 {
            let img = bars_image(&s, &mut stream(17, "t", i), 2).unwrap();
            if img.object_labels == vec![0, 1] || img.object_labels == vec![1, 0] {
                let overlaps = (0..img.n()).filter(|&i| img.is_overlap(i)).count();
                assert_eq!(overlaps, 1);
                let i = (0..img.n()).find(|&i| img.is_overlap(i)).unwrap();
                assert_eq!(img.groups[i], 0b11);
                return;
            }
        }
        panic!("no crossing pair drawn in 50 tries");
    }

    #[test]
    fn shape_glyphs_fit_their_box() {
        for kind in 0..N_SHAPE_KINDS {
            let pts = shape_points(kind, SHAPE_SIZE);
            assert!(!pts.is_empty());
            assert!(pts.iter().all(|&(r, c)| r < SHAPE_SIZE && c < SHAPE_SIZE));
            // outline, not filled
            assert!(pts.len() < SHAPE_SIZE * SHAPE_SIZE / 2);
        }
    }

    #[test]
    fn corners_make_four_components_per_object() {
        // one object is always exactly four detached L pieces
        let s1 = spec(DatasetKind::Corners, 1);
        for i in 0..10 {
            let img = corners_image(&s1, &mut stream(5, "t", i), 1).unwrap();
            assert_eq!(components(&img), 4);
        }
        // two objects may touch, which can fuse pieces but never split them
        let s2 = spec(DatasetKind::Corners, 2);
        for i in 0..10 {
            let img = corners_image(&s2, &mut stream(5, "t", i), 2).unwrap();
            assert_eq!(img.n_objects, 2);
            let c = components(&img);
            assert!((2..=8).contains(&c), "components: {c}");
        }
    }

    #[test]
    fn moving_object_translates_one_pixel_per_frame() {
        let obj = MovingObject { kind: 0, pos: (4, 3), vel: (0, 1), spawn: 0 };
        let seq = sequence_from_objects(28, 28, &[obj], 4, BoundaryPolicy::Wrap);
        let base = shape_points(0, SHAPE_SIZE);
        for (f, frame) in seq.frames.iter().enumerate() {
            let want: Vec<usize> = {
                let mut v: Vec<usize> = base
                    .iter()
                    .map(|&(r, c)| frame.idx(r + 4, (c + 3 + f) % 28))
                    .collect();
                v.sort_unstable();
                v
            };
            assert_eq!(frame.object_pixels(0), want);
        }
    }

    #[test]
    fn popup_appears_at_spawn_frame_only() {
        let objs = [
            MovingObject { kind: 0, pos: (2, 2), vel: (0, 1), spawn: 0 },
            MovingObject { kind: 1, pos: (14, 14), vel: (1, 0), spawn: 3 },
        ];
        let seq = sequence_from_objects(28, 28, &objs, 6, BoundaryPolicy::Wrap);
        for f in 0..3 {
            assert_eq!(seq.frames[f].n_objects, 1);
        }
        for f in 3..6 {
            assert_eq!(seq.frames[f].n_objects, 2);
            assert!(!seq.frames[f].object_pixels(1).is_empty());
        }
    }

    #[test]
    fn probe_sweep_covers_all_kinds_and_positions() {
        let probes = shape_position_probe(28, 28, 6);
        let per_kind = probes.len() / N_SHAPE_KINDS as usize;
        assert_eq!(probes.len() % N_SHAPE_KINDS as usize, 0);
        assert!(per_kind >= 9);
        for p in &probes {
            assert_eq!(p.image.n_objects, 1);
            p.image.validate().unwrap();
        }
    }

    /// 4-connected component count over foreground pixels.
    fn components(img: &BinaryImage) -> usize {
        let mut seen = vec![false; img.n()];
        let mut count = 0;
        for start in 0..img.n() {
            if img.pixels[start] == 0 || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (r, c) = (i / img.width, i % img.width);
                let mut push = |rr: i64, cc: i64| {
                    if rr >= 0 && cc >= 0 && (rr as usize) < img.height && (cc as usize) < img.width
                    {
                        let j = rr as usize * img.width + cc as usize;
                        if img.pixels[j] == 1 && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                };
                push(r as i64 - 1, c as i64);
                push(r as i64 + 1, c as i64);
                push(r as i64, c as i64 - 1);
                push(r as i64, c as i64 + 1);
            }
        }
        count
    }
}
