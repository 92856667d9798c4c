use std::collections::VecDeque;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{highrisk_mask, Cell, EnvConfig, Move, Poacher, Uav, WorldState, SPAWN_RADIUS};
use crate::error::{Error, Result};

/// Terrain and hotspots derived from `config.seed`.
struct Layout {
    occlusion: Vec<bool>,
    hotspots: Vec<Cell>,
}

/// Starts a new episode.
///
/// `mode` picks the hotspot cluster that poachers favour; `None` draws it
/// uniformly from `rng`. The terrain is regenerated from `config.seed`, so
/// two resets with the same config always share a map.
pub fn reset<R: Rng + ?Sized>(
    config: &EnvConfig,
    mode: Option<usize>,
    rng: &mut R,
) -> Result<WorldState> {
    config.validate()?;
    if let Some(m) = mode {
        if m >= config.n_modes {
            return Err(Error::InvalidConfig(format!(
                "mode {m} out of range for {} modes",
                config.n_modes
            )));
        }
    }
    let layout = build_layout(config)?;
    let mode = match mode {
        Some(m) => m,
        None => rng.gen_range(0..config.n_modes),
    };

    let free = |c: Cell| config.in_bounds(c) && !layout.occlusion[config.index(c)];

    // UAVs spawn on the westmost columns that hold enough free cells.
    let mut candidates = Vec::new();
    for x in 0..config.grid_w as i32 {
        candidates.extend(
            (0..config.grid_h as i32)
                .map(|y| Cell::new(x, y))
                .filter(|&c| free(c)),
        );
        if candidates.len() >= config.n_agents {
            break;
        }
    }
    let mut picks = index::sample(rng, candidates.len(), config.n_agents).into_vec();
    picks.sort_unstable();
    let uavs: Vec<Uav> = picks
        .into_iter()
        .map(|i| Uav {
            pos: candidates[i],
            last_move: Move::Stay,
            energy_spent: 0.0,
        })
        .collect();

    let n_hot = config.n_hotspots;
    let mut poachers = Vec::with_capacity(config.n_poachers);
    for _ in 0..config.n_poachers {
        let target = (mode + rng.gen_range(0..2)) % n_hot;
        let centre = layout.hotspots[target];
        let mut spots: Vec<Cell> = Vec::new();
        for dy in -SPAWN_RADIUS..=SPAWN_RADIUS {
            for dx in -SPAWN_RADIUS..=SPAWN_RADIUS {
                let c = centre.offset(dx, dy);
                if free(c) && uavs.iter().all(|u| u.pos != c) {
                    spots.push(c);
                }
            }
        }
        let pos = if spots.is_empty() {
            centre
        } else {
            spots[rng.gen_range(0..spots.len())]
        };
        poachers.push(Poacher {
            pos,
            target_hotspot: target,
            alive: true,
        });
    }

    let highrisk = highrisk_mask(&layout.hotspots, config);
    let highrisk_total = highrisk.iter().filter(|&&h| h).count();
    let cells = config.grid_w * config.grid_h;
    Ok(WorldState {
        config: config.clone(),
        occlusion: layout.occlusion,
        hotspots: layout.hotspots,
        highrisk,
        highrisk_total,
        uavs,
        poachers,
        scenario_mode: mode,
        visited: vec![false; cells],
        visited_count: 0,
        t: 0,
        mailbox: vec![None; config.n_agents],
    })
}

fn build_layout(config: &EnvConfig) -> Result<Layout> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (w, h) = (config.grid_w, config.grid_h);
    let mut occlusion: Vec<bool> = (0..w * h)
        .map(|_| rng.gen_bool(config.occlusion_fraction))
        .collect();
    connect_free_cells(&mut occlusion, w, h);

    let free: Vec<Cell> = (0..w * h)
        .filter(|&i| !occlusion[i])
        .map(|i| Cell::new((i % w) as i32, (i / w) as i32))
        .collect();
    let needed = config.n_agents + config.n_poachers;
    if free.len() < needed || free.len() < config.n_hotspots {
        return Err(Error::NotEnoughFreeCells {
            free: free.len(),
            needed: needed.max(config.n_hotspots),
        });
    }

    let mut hotspots = farthest_point_sample(&free, config.n_hotspots, &mut rng);
    sort_clockwise(&mut hotspots, w, h);
    Ok(Layout { occlusion, hotspots })
}

/// Labels 4-connected components of free cells; returns (labels, count).
fn components(occlusion: &[bool], w: usize, h: usize) -> (Vec<usize>, usize) {
    const NONE: usize = usize::MAX;
    let mut label = vec![NONE; w * h];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if occlusion[start] || label[start] != NONE {
            continue;
        }
        label[start] = count;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if !occlusion[j] && label[j] == NONE {
                    label[j] = count;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        count += 1;
    }
    (label, count)
}

/// Carves L-shaped corridors until the free cells form one 4-connected region.
fn connect_free_cells(occlusion: &mut [bool], w: usize, h: usize) {
    loop {
        let (label, count) = components(occlusion, w, h);
        if count <= 1 {
            return;
        }
        let mut sizes = vec![0usize; count];
        for &l in label.iter().filter(|&&l| l != usize::MAX) {
            sizes[l] += 1;
        }
        // Largest component, lowest label on ties.
        let main = (0..count).max_by_key(|&l| (sizes[l], usize::MAX - l)).unwrap();
        let cells_of = |l: usize| -> Vec<usize> { (0..w * h).filter(|&i| label[i] == l).collect() };
        let main_cells = cells_of(main);
        let other = (0..count).find(|&l| l != main).unwrap();
        let mut best = (usize::MAX, 0, 0);
        for &a in &cells_of(other) {
            for &b in &main_cells {
                let d = (a % w).abs_diff(b % w) + (a / w).abs_diff(b / w);
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        let (_, from, to) = best;
        let (mut x, mut y) = (from % w, from / w);
        let (tx, ty) = (to % w, to / w);
        while x != tx {
            x = if x < tx { x + 1 } else { x - 1 };
            occlusion[y * w + x] = false;
        }
        while y != ty {
            y = if y < ty { y + 1 } else { y - 1 };
            occlusion[y * w + x] = false;
        }
    }
}

fn farthest_point_sample<R: Rng + ?Sized>(free: &[Cell], n: usize, rng: &mut R) -> Vec<Cell> {
    let dist2 = |a: Cell, b: Cell| {
        let (dx, dy) = ((a.x - b.x) as i64, (a.y - b.y) as i64);
        dx * dx + dy * dy
    };
    let mut chosen = vec![free[rng.gen_range(0..free.len())]];
    let mut nearest: Vec<i64> = free.iter().map(|&c| dist2(c, chosen[0])).collect();
    while chosen.len() < n {
        let (best, _) = nearest
            .iter()
            .enumerate()
            .fold((0, -1), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        let c = free[best];
        chosen.push(c);
        for (d, &f) in nearest.iter_mut().zip(free) {
            *d = (*d).min(dist2(f, c));
        }
    }
    chosen
}

/// Orders cells by compass bearing (north = 0, east = 90 degrees) around the
/// grid centre.
fn sort_clockwise(cells: &mut [Cell], w: usize, h: usize) {
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let bearing = |c: &Cell| {
        let b = (c.x as f64 - cx).atan2(cy - c.y as f64);
        if b < 0.0 {
            b + std::f64::consts::TAU
        } else {
            b
        }
    };
    cells.sort_by(|a, b| bearing(a).total_cmp(&bearing(b)).then(a.cmp(b)));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn single_mode_always_zero() {
        let cfg = EnvConfig { n_modes: 1, ..Default::default() };
        let mut r = rng(3);
        for _ in 0..20 {
            assert_eq!(reset(&cfg, None, &mut r).unwrap().scenario_mode, 0);
        }
    }

    #[test]
    fn reset_is_deterministic() {
        let cfg = EnvConfig::default();
        let a = reset(&cfg, Some(2), &mut rng(11)).unwrap();
        let b = reset(&cfg, Some(2), &mut rng(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_occlusion_gives_clear_map() {
        let cfg = EnvConfig { occlusion_fraction: 0.0, ..Default::default() };
        let s = reset(&cfg, None, &mut rng(0)).unwrap();
        assert!(s.occlusion.iter().all(|&o| !o));
    }

    #[test]
    fn free_cells_are_connected() {
        for seed in 0..20 {
            let cfg = EnvConfig { occlusion_fraction: 0.35, seed, ..Default::default() };
            let s = reset(&cfg, None, &mut rng(seed)).unwrap();
            let (_, count) = components(&s.occlusion, cfg.grid_w, cfg.grid_h);
            assert_eq!(count, 1, "seed {seed}");
        }
    }

    #[test]
    fn rejects_crowded_configs() {
        let cfg = EnvConfig { occlusion_fraction: 1.0, ..Default::default() };
        assert!(matches!(
            reset(&cfg, None, &mut rng(0)),
            Err(Error::NotEnoughFreeCells { .. })
        ));
        let cfg = EnvConfig {
            grid_w: 5,
            grid_h: 5,
            n_agents: 24,
            n_poachers: 3,
            occlusion_fraction: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            reset(&cfg, None, &mut rng(0)),
            Err(Error::NotEnoughFreeCells { free: 25, needed: 27 })
        ));
    }

    #[test]
    fn rejects_out_of_range_mode() {
        let cfg = EnvConfig::default();
        assert!(reset(&cfg, Some(4), &mut rng(0)).is_err());
    }

    #[test]
    fn spawn_positions_follow_layout_rules() {
        let cfg = EnvConfig::default();
        for seed in 0..30 {
            let s = reset(&cfg, None, &mut rng(seed)).unwrap();
            assert_eq!(s.hotspots.len(), cfg.n_hotspots);
            let mut seen = std::collections::HashSet::new();
            for u in &s.uavs {
                assert!(s.is_free(u.pos));
                assert!(u.pos.x <= 1, "UAV spawned away from the west edge");
                assert!(seen.insert(u.pos));
            }
            for p in &s.poachers {
                let m = s.scenario_mode;
                assert!(p.target_hotspot == m % 6 || p.target_hotspot == (m + 1) % 6);
                assert!(p.pos.chebyshev(s.hotspots[p.target_hotspot]) <= SPAWN_RADIUS);
                assert!(s.is_free(p.pos));
            }
        }
    }

    #[test]
    fn hotspots_are_clockwise() {
        let cfg = EnvConfig::default();
        let s = reset(&cfg, None, &mut rng(0)).unwrap();
        let c = (12.0, 12.0);
        let bearings: Vec<f64> = s
            .hotspots
            .iter()
            .map(|h| {
                let b = (h.x as f64 - c.0).atan2(c.1 - h.y as f64);
                b.rem_euclid(std::f64::consts::TAU)
            })
            .collect();
        assert!(bearings.windows(2).all(|w| w[0] <= w[1]), "{bearings:?}");
    }

    #[test]
    fn modes_are_separable() {
        let cfg = EnvConfig::default();
        let mut r = rng(99);
        let centroids: Vec<(f64, f64)> = (0..cfg.n_modes)
            .map(|m| {
                let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
                for _ in 0..200 {
                    let s = reset(&cfg, Some(m), &mut r).unwrap();
                    for p in &s.poachers {
                        sx += p.pos.x as f64;
                        sy += p.pos.y as f64;
                        n += 1.0;
                    }
                }
                (sx / n, sy / n)
            })
            .collect();
        for a in 0..centroids.len() {
            for b in a + 1..centroids.len() {
                let (ca, cb) = (centroids[a], centroids[b]);
                let gap = (ca.0 - cb.0).abs().max((ca.1 - cb.1).abs());
                assert!(gap >= 4.0, "modes {a},{b}: {ca:?} vs {cb:?}");
            }
        }
    }
}
