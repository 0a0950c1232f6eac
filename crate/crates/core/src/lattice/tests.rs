use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use proptest::prelude::*;

use super::*;

fn two_states() -> Arc<StateSet> {
    Arc::new(StateSet::new(["FREE", "OCC"]).unwrap())
}

fn coords(list: &[Neighbor]) -> Vec<(i64, i64)> {
    list.iter().map(|n| (n.coord().row, n.coord().col)).collect()
}

#[test]
fn nominal_sizes() {
    assert_eq!(Neighborhood::Moore(1).size(), 8);
    assert_eq!(Neighborhood::VonNeumann(1).size(), 4);
    assert_eq!(Neighborhood::Hex(1).size(), 6);
    assert_eq!(Neighborhood::Hex(2).size(), 18);
    for n in [
        Neighborhood::Moore(1),
        Neighborhood::Moore(2),
        Neighborhood::VonNeumann(1),
        Neighborhood::VonNeumann(3),
        Neighborhood::Hex(1),
        Neighborhood::Hex(2),
    ] {
        assert_eq!(n.offsets(0).len(), n.size(), "{n}");
        assert_eq!(n.offsets(1).len(), n.size(), "{n}");
    }
}

#[test]
fn von_neumann_corner_on_torus() {
    let g = Geometry::square(5, 5).unwrap();
    let list = neighbors(&g, &Boundary::Periodic, &Neighborhood::VonNeumann(1), Coord::new(0, 0))
        .unwrap();
    // canonical (row delta, col delta) order: up, left, right, down
    assert_eq!(coords(&list), vec![(4, 0), (0, 4), (0, 1), (1, 0)]);
    let as_set: BTreeSet<_> = coords(&list).into_iter().collect();
    let expected: BTreeSet<_> = [(4, 0), (0, 4), (1, 0), (0, 1)].into_iter().collect();
    assert_eq!(as_set, expected);
    assert!(list.iter().all(Neighbor::is_inside));
}

#[test]
fn moore_corner_under_fixed_boundary() {
    let g = Geometry::square(5, 5).unwrap();
    let list = neighbors(
        &g,
        &Boundary::Fixed(StateId(0)),
        &Neighborhood::Moore(1),
        Coord::new(0, 0),
    )
    .unwrap();
    assert_eq!(list.len(), 8);
    assert_eq!(list.iter().filter(|n| !n.is_inside()).count(), 5);
    assert_eq!(list[0], Neighbor::Outside(Coord::new(-1, -1)));
    assert_eq!(list[7], Neighbor::Inside(Coord::new(1, 1)));
}

#[test]
fn hex_spec_on_square_geometry_is_rejected() {
    let g = Geometry::square(6, 6).unwrap();
    let err = neighbors(&g, &Boundary::Periodic, &Neighborhood::Hex(1), Coord::new(0, 0));
    assert!(matches!(err, Err(Error::Config(_))));
    let h = Geometry::hex(6, 6).unwrap();
    let err = neighbors(&h, &Boundary::Periodic, &Neighborhood::Moore(1), Coord::new(0, 0));
    assert!(matches!(err, Err(Error::Config(_))));
    let odd = Geometry::hex(6, 5).unwrap();
    assert!(neighbors(&odd, &Boundary::Periodic, &Neighborhood::Hex(1), Coord::new(0, 0)).is_err());
}

#[test]
fn out_of_range_cell_is_rejected() {
    let g = Geometry::square(3, 3).unwrap();
    assert!(neighbors(&g, &Boundary::Periodic, &Neighborhood::Moore(1), Coord::new(3, 0)).is_err());
}

/// Independent walker: breadth-first search over the six odd-r adjacency
/// directions, no distance formula involved.
fn hex_walk(row: i64, col: i64, layers: usize) -> BTreeSet<(i64, i64)> {
    fn step(row: i64, col: i64) -> [(i64, i64); 6] {
        if row.rem_euclid(2) == 0 {
            [(row - 1, col - 1), (row - 1, col), (row, col - 1), (row, col + 1), (row + 1, col - 1), (row + 1, col)]
        } else {
            [(row - 1, col), (row - 1, col + 1), (row, col - 1), (row, col + 1), (row + 1, col), (row + 1, col + 1)]
        }
    }
    let mut seen: HashSet<(i64, i64)> = HashSet::from([(row, col)]);
    let mut frontier = vec![(row, col)];
    for _ in 0..layers {
        let mut next = Vec::new();
        for (r, c) in frontier {
            for n in step(r, c) {
                if seen.insert(n) {
                    next.push(n);
                }
            }
        }
        frontier = next;
    }
    seen.remove(&(row, col));
    seen.into_iter().collect()
}

#[test]
fn hex_offsets_match_walker() {
    for layers in [1usize, 2] {
        for row in [0i64, 1] {
            let walked = hex_walk(row, 0, layers);
            let ours: BTreeSet<(i64, i64)> = Neighborhood::Hex(layers as u32)
                .offsets(row as usize)
                .into_iter()
                .map(|(dr, dc)| (row + dr as i64, dc as i64))
                .collect();
            assert_eq!(ours, walked, "layers={layers} row={row}");
        }
    }
}

#[test]
fn hex2_on_6x6_torus_gives_18_distinct_cells() {
    let g = Geometry::hex(6, 6).unwrap();
    for i in 0..g.cell_count() {
        let c = g.coord(i);
        let list = neighbors(&g, &Boundary::Periodic, &Neighborhood::Hex(2), c).unwrap();
        assert_eq!(list.len(), 18);
        let distinct: HashSet<_> = list.iter().map(Neighbor::coord).collect();
        assert_eq!(distinct.len(), 18, "cell {c}");
        assert!(!distinct.contains(&c));
        let walked: HashSet<(i64, i64)> = hex_walk(c.row, c.col, 2)
            .into_iter()
            .map(|(r, cc)| (r.rem_euclid(6), cc.rem_euclid(6)))
            .collect();
        let ours: HashSet<(i64, i64)> = distinct.iter().map(|c| (c.row, c.col)).collect();
        assert_eq!(ours, walked);
    }
}

#[test]
fn periodic_neighborhoods_are_symmetric() {
    let specs = [
        (GridKind::Square, Neighborhood::Moore(1)),
        (GridKind::Square, Neighborhood::Moore(2)),
        (GridKind::Square, Neighborhood::VonNeumann(1)),
        (GridKind::Square, Neighborhood::VonNeumann(2)),
        (GridKind::Hex, Neighborhood::Hex(1)),
        (GridKind::Hex, Neighborhood::Hex(2)),
    ];
    for (kind, spec) in specs {
        for (w, h) in [(10, 10), (7, 8), (10, 4)] {
            let g = Geometry::new(kind, w, h).unwrap();
            let mut edges = HashSet::new();
            for i in 0..g.cell_count() {
                let a = g.coord(i);
                for n in neighbors(&g, &Boundary::Periodic, &spec, a).unwrap() {
                    edges.insert((a, n.coord()));
                }
            }
            for &(a, b) in &edges {
                assert!(edges.contains(&(b, a)), "{spec} {w}x{h}: {a} -> {b}");
            }
        }
    }
}

#[test]
fn enumeration_is_stable() {
    let g = Geometry::hex(8, 8).unwrap();
    for i in 0..g.cell_count() {
        let c = g.coord(i);
        let a = neighbors(&g, &Boundary::Periodic, &Neighborhood::Hex(2), c).unwrap();
        let b = neighbors(&g, &Boundary::Periodic, &Neighborhood::Hex(2), c).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn histogram_examples() {
    let states = two_states();
    let g = Geometry::square(3, 3).unwrap();
    let mut l = Lattice::filled(g, Boundary::Periodic, states.clone(), StateId(0)).unwrap();
    assert_eq!(state_histogram(&l), vec![9, 0]);
    l.set(Coord::new(1, 1), StateId(1)).unwrap();
    assert_eq!(state_histogram(&l), vec![8, 1]);

    let life = Arc::new(StateSet::new(["DEAD", "ALIVE"]).unwrap());
    let mut blinker =
        Lattice::filled(Geometry::square(5, 5).unwrap(), Boundary::Periodic, life, StateId(0))
            .unwrap();
    for r in 1..=3 {
        blinker.set(Coord::new(r, 2), StateId(1)).unwrap();
    }
    assert_eq!(blinker.histogram(), vec![22, 3]);
}

#[test]
fn digest_is_deterministic() {
    let g = Geometry::square(3, 3).unwrap();
    let a = Lattice::filled(g, Boundary::Periodic, two_states(), StateId(0)).unwrap();
    let b = Lattice::filled(g, Boundary::Periodic, two_states(), StateId(0)).unwrap();
    assert_eq!(lattice_digest(&a), lattice_digest(&b));
    assert_eq!(a.digest(), a.digest());
}

#[test]
fn digest_matches_reference_fnv() {
    // width=1,height=2 as u32 LE, then cells [0, 1]
    let bytes = [1u8, 0, 0, 0, 2, 0, 0, 0, 0, 1];
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let l = Lattice::from_cells(
        Geometry::square(1, 2).unwrap(),
        Boundary::Periodic,
        two_states(),
        vec![StateId(0), StateId(1)],
    )
    .unwrap();
    assert_eq!(l.digest(), h);
}

#[test]
fn single_cell_flips_change_digest() {
    let g = Geometry::square(16, 16).unwrap();
    let states = Arc::new(StateSet::new(["A", "B", "C", "D"]).unwrap());
    let mut x: u64 = 0x2545F4914F6CDD1D;
    let mut next = || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        x
    };
    let cells: Vec<StateId> = (0..g.cell_count()).map(|_| StateId((next() % 4) as u8)).collect();
    let base = Lattice::from_cells(g, Boundary::Periodic, states, cells).unwrap();
    let mut collisions = 0;
    for _ in 0..1000 {
        let mut flipped = base.clone();
        let c = g.coord((next() % g.cell_count() as u64) as usize);
        let old = flipped.get(c).unwrap();
        let new = StateId(((old.0 as u64 + 1 + next() % 3) % 4) as u8);
        flipped.set(c, new).unwrap();
        if flipped.digest() == base.digest() {
            collisions += 1;
        }
    }
    assert_eq!(collisions, 0, "digest collisions over 1000 flips");
}

#[test]
fn state_set_rules() {
    assert!(StateSet::new(["ONLY"]).is_err());
    assert!(StateSet::new(["A", "A"]).is_err());
    assert!(StateSet::new(["A", ""]).is_err());
    assert!(StateSet::new(["A", "9x"]).is_err());
    let s = StateSet::new(["FREE", "OCC_1"]).unwrap();
    assert_eq!(s.id("OCC_1"), Some(StateId(1)));
    assert_eq!(s.name(StateId(0)), "FREE");
}

#[test]
fn snapshot_text_round_trip() {
    let life = Arc::new(StateSet::new(["DEAD", "ALIVE"]).unwrap());
    let g = Geometry::square(4, 3).unwrap();
    let mut l = Lattice::filled(g, Boundary::Periodic, life.clone(), StateId(0)).unwrap();
    l.set(Coord::new(2, 3), StateId(1)).unwrap();
    let text = l.to_snapshot_text();
    assert!(text.starts_with("4 3\n"));
    assert_eq!(text.lines().nth(3), Some("DEAD DEAD DEAD ALIVE"));
    let back = Lattice::from_snapshot_text(&text, GridKind::Square, Boundary::Periodic, life).unwrap();
    assert_eq!(back, l);
}

#[test]
fn snapshot_errors_are_positioned() {
    let life = Arc::new(StateSet::new(["DEAD", "ALIVE"]).unwrap());
    let err = Lattice::from_snapshot_text("2 1\nDEAD  GHOST\n", GridKind::Square, Boundary::Periodic, life.clone())
        .unwrap_err();
    match err {
        Error::Parse { position, .. } => assert_eq!(position, Position::new(2, 7)),
        e => panic!("{e}"),
    }
    assert!(Lattice::from_snapshot_text("2 2\nDEAD DEAD\n", GridKind::Square, Boundary::Periodic, life)
        .is_err());
}

#[test]
fn pgm_gray_levels() {
    let s = Arc::new(StateSet::new(["A", "B", "C"]).unwrap());
    let l = Lattice::from_cells(
        Geometry::square(3, 1).unwrap(),
        Boundary::Periodic,
        s,
        vec![StateId(0), StateId(1), StateId(2)],
    )
    .unwrap();
    assert_eq!(l.to_pgm(), "P2\n3 1\n255\n0 127 254\n");
}

#[test]
fn fixed_boundary_reads_fixed_state() {
    let s = two_states();
    let l = Lattice::filled(Geometry::square(2, 2).unwrap(), Boundary::Fixed(StateId(1)), s, StateId(0))
        .unwrap();
    assert_eq!(l.read(Coord::new(-1, 0)), StateId(1));
    assert_eq!(l.read(Coord::new(0, 0)), StateId(0));
}

use crate::error::Position;

proptest! {
    #[test]
    fn neighbor_lists_have_nominal_length(
        w in 1usize..9, h in 1usize..9, r in 1u32..3, moore in any::<bool>(), fixed in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let g = Geometry::square(w, h).unwrap();
        let spec = if moore { Neighborhood::Moore(r) } else { Neighborhood::VonNeumann(r) };
        let b = if fixed { Boundary::Fixed(StateId(0)) } else { Boundary::Periodic };
        let c = g.coord((seed % g.cell_count() as u64) as usize);
        let list = neighbors(&g, &b, &spec, c).unwrap();
        prop_assert_eq!(list.len(), spec.size());
        if !fixed {
            prop_assert!(list.iter().all(Neighbor::is_inside));
        }
    }
}
