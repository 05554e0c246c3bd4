use proptest::prelude::*;

use subharnack::harnack::random_max_principle_problem;
use subharnack::solver::{read_binary, solve_subdiffusion};
use subharnack::KernelTable;

#[test]
fn binary_offsets_match_the_documented_layout() {
    let spec = random_max_principle_problem(3, true, false).unwrap();
    let result = solve_subdiffusion(&spec).unwrap();
    let mut bytes = Vec::new();
    result.write_binary(&mut bytes).unwrap();
    let (nt, nx, ny) = (result.u.len(), spec.space.axis(0).nodes(), spec.space.axis(1).nodes());
    assert_eq!(bytes.len(), 76 + 8 * nt * nx * ny);
    assert_eq!(&bytes[..4], b"SHSR");
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    assert_eq!((u64_at(12), u64_at(20), u64_at(28)), (nt, nx, ny));
    assert_eq!(f64_at(36), spec.time.dt());
    let (n, ix, iy) = (nt - 1, nx / 2, ny / 2);
    let v = f64_at(76 + 8 * ((n * nx + ix) * ny + iy));
    assert_eq!(v, result.level(n)[spec.space.index(ix, iy)]);
    let back = read_binary(&bytes[..]).unwrap();
    assert_eq!(back.value(n, ix, iy), v);
    assert!(read_binary(&bytes[..60]).is_err());
}

#[test]
fn solve_csv_has_one_row_per_node_and_level() {
    let spec = random_max_principle_problem(5, false, true).unwrap();
    let result = solve_subdiffusion(&spec).unwrap();
    let mut out = Vec::new();
    result.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,u"));
    assert_eq!(lines.count(), result.u.len() * spec.space.nodes());
}

proptest! {
    #[test]
    fn kernel_csv_round_trips_exactly(
        dt in 1e-4f64..1.0,
        values in proptest::collection::vec(-1e6f64..1e6, 2..40),
    ) {
        let table = KernelTable::custom(dt, values.clone()).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let back = KernelTable::read_csv(&buf[..]).unwrap();
        prop_assert_eq!(back.values(), &values[..]);
        prop_assert!((back.dt() - dt).abs() <= 1e-12 * dt);
    }
}
