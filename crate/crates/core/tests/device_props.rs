use memsvm::device::{
    energy_of, max_ladder_gap, state_ladder, DeviceParams, LadderShape, MemtransistorCell, Polarity, PulseLog,
};
use proptest::prelude::*;

fn params(num_states: usize, shape: LadderShape) -> DeviceParams {
    DeviceParams {
        num_states,
        ladder_shape: shape,
        ..DeviceParams::default()
    }
}

fn shape() -> impl Strategy<Value = LadderShape> {
    prop_oneof![Just(LadderShape::Linear), Just(LadderShape::Exponential)]
}

proptest! {
    #[test]
    fn ladder_is_strictly_increasing_with_pinned_ends(n in 2usize..400, s in shape()) {
        let p = params(n, s);
        let ladder = state_ladder(&p).unwrap();
        prop_assert_eq!(ladder.len(), n);
        prop_assert_eq!(ladder[0], p.g_min);
        prop_assert_eq!(ladder[n - 1], p.g_max);
        prop_assert!(ladder.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn potentiation_never_decreases_memductance(n in 2usize..120, s in shape(), start in 0usize..120, k in 0usize..200) {
        let p = params(n, s);
        let ladder = state_ladder(&p).unwrap();
        let mut cell = MemtransistorCell::at_state(start % n);
        let mut log = PulseLog::default();
        let mut prev = cell.memductance(&ladder, &p);
        for _ in 0..k {
            cell.apply_pulse(Polarity::Negative, &p, &mut log);
            let g = cell.memductance(&ladder, &p);
            prop_assert!(g >= prev);
            prev = g;
        }
        prop_assert_eq!(cell.state_index, (start % n + k).min(n - 1));
        prop_assert_eq!(log, PulseLog::new(k as u64, 0));
    }

    #[test]
    fn depression_never_increases_memductance(n in 2usize..120, start in 0usize..120, k in 0usize..200) {
        let p = params(n, LadderShape::Linear);
        let ladder = state_ladder(&p).unwrap();
        let mut cell = MemtransistorCell::at_state(start % n);
        let mut log = PulseLog::default();
        let mut prev = cell.memductance(&ladder, &p);
        for _ in 0..k {
            cell.apply_pulse(Polarity::Positive, &p, &mut log);
            let g = cell.memductance(&ladder, &p);
            prop_assert!(g <= prev);
            prev = g;
        }
        prop_assert_eq!(cell.state_index, (start % n).saturating_sub(k));
        prop_assert_eq!(log, PulseLog::new(0, k as u64));
    }

    #[test]
    fn up_then_down_round_trips_away_from_boundaries(n in 3usize..200, start in 0usize..200, k in 0usize..200) {
        let p = params(n, LadderShape::Linear);
        let start = start % n;
        let k = k % (n - start);
        let mut cell = MemtransistorCell::at_state(start);
        let mut log = PulseLog::default();
        for _ in 0..k {
            cell.apply_pulse(Polarity::Negative, &p, &mut log);
        }
        for _ in 0..k {
            cell.apply_pulse(Polarity::Positive, &p, &mut log);
        }
        prop_assert_eq!(cell.state_index, start);
    }

    #[test]
    fn energy_is_additive(a in 0u64..10_000, b in 0u64..10_000, c in 0u64..10_000, d in 0u64..10_000) {
        let p = DeviceParams::default();
        let x = PulseLog::new(a, b);
        let y = PulseLog::new(c, d);
        let whole = energy_of(&(x + y), &p);
        let parts = energy_of(&x, &p) + energy_of(&y, &p);
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1e-30));
    }
}

#[test]
fn boundary_pulses_saturate_but_cost_energy() {
    let p = DeviceParams::default();
    let mut log = PulseLog::default();
    let mut top = MemtransistorCell::at_state(p.num_states - 1);
    top.apply_pulse(Polarity::Negative, &p, &mut log);
    assert_eq!(top.state_index, p.num_states - 1);
    let mut bottom = MemtransistorCell::at_state(0);
    bottom.apply_pulse(Polarity::Positive, &p, &mut log);
    assert_eq!(bottom.state_index, 0);
    assert_eq!(log, PulseLog::new(1, 1));
    assert!((energy_of(&log, &p) - (0.7e-9 + 0.5e-12)).abs() < 1e-24);
}

#[test]
fn energy_constants() {
    let p = DeviceParams::default();
    assert!((energy_of(&PulseLog::new(1, 0), &p) - 0.7e-9).abs() < 1e-24);
    assert!((energy_of(&PulseLog::new(3, 2), &p) - 2.101e-9).abs() < 1e-21);
    assert_eq!(energy_of(&PulseLog::new(0, 0), &p), 0.0);
}

#[test]
fn dense_ladder_gap_shrinks() {
    let ladder = state_ladder(&params(1_000_000, LadderShape::Linear)).unwrap();
    assert!(max_ladder_gap(&ladder) < 1.01e-6);
}
