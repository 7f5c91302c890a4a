use std::collections::HashMap;

use levelfit::fit::{assemble, build_grid};
use levelfit::lp::mps::to_mps_string;
use levelfit::lp::{LpProblem, RowOrigin};
use levelfit::moments::moment_vector;
use levelfit::{BoxDomain, GridSpec, PointCloud, PolyBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a reader recovers from a fixed-format MPS file with `G` rows, free
/// columns and a minimized objective.
#[derive(Debug, Default)]
struct Parsed {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    bounds: Vec<f64>,
    free: Vec<bool>,
    minimize: bool,
}

fn read_mps(text: &str) -> Parsed {
    let mut section = "";
    let mut objective_row = String::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut entries: Vec<(usize, Option<usize>, f64)> = Vec::new();
    let mut rhs: Vec<(usize, f64)> = Vec::new();
    let mut free = Vec::new();
    let mut parsed = Parsed::default();
    for line in text.lines() {
        if !line.starts_with(' ') {
            let mut words = line.split_whitespace();
            section = match words.next() {
                Some("NAME") => "NAME",
                Some("OBJSENSE") => "OBJSENSE",
                Some("ROWS") => "ROWS",
                Some("COLUMNS") => "COLUMNS",
                Some("RHS") => "RHS",
                Some("BOUNDS") => "BOUNDS",
                Some("ENDATA") => break,
                other => panic!("unknown section {other:?}"),
            };
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match section {
            "OBJSENSE" => parsed.minimize = f == ["MIN"],
            "ROWS" => match f[..] {
                ["N", name] => objective_row = name.to_string(),
                ["G", name] => {
                    let k = row_index.len();
                    row_index.insert(name.to_string(), k);
                }
                _ => panic!("unexpected row line {line:?}"),
            },
            "COLUMNS" => {
                let [col, row, value] = f[..] else { panic!("{line:?}") };
                let k = col_index.len();
                let j = *col_index.entry(col.to_string()).or_insert(k);
                let i = if row == objective_row { None } else { Some(row_index[row]) };
                entries.push((j, i, value.parse().unwrap()));
            }
            "RHS" => {
                let [_, row, value] = f[..] else { panic!("{line:?}") };
                rhs.push((row_index[row], value.parse().unwrap()));
            }
            "BOUNDS" => {
                let ["FR", _, col] = f[..] else { panic!("{line:?}") };
                free.push(col_index[col]);
            }
            _ => panic!("data outside a section: {line:?}"),
        }
    }
    let (m, n) = (row_index.len(), col_index.len());
    parsed.objective = vec![0.0; n];
    parsed.rows = vec![vec![0.0; n]; m];
    parsed.bounds = vec![0.0; m];
    parsed.free = vec![false; n];
    for (j, i, v) in entries {
        match i {
            Some(i) => parsed.rows[i][j] = v,
            None => parsed.objective[j] = v,
        }
    }
    for (i, v) in rhs {
        parsed.bounds[i] = v;
    }
    for j in free {
        parsed.free[j] = true;
    }
    parsed
}

fn assert_round_trip(lp: &LpProblem) -> Parsed {
    let parsed = read_mps(&to_mps_string(lp, "TEST"));
    assert!(parsed.minimize);
    assert!(parsed.free.iter().all(|&f| f));
    assert_eq!(parsed.objective, lp.objective());
    assert_eq!(parsed.rows.len(), lp.num_rows());
    for (i, row) in parsed.rows.iter().enumerate() {
        assert_eq!(row.as_slice(), lp.row(i), "row {i}");
    }
    assert_eq!(parsed.bounds, lp.bounds());
    parsed
}

#[test]
fn single_variable_problem() {
    let mut lp = LpProblem::new(vec![2.0]).unwrap();
    lp.add_row(&[1.0], 1.0, RowOrigin::Containment).unwrap();
    let parsed = assert_round_trip(&lp);
    assert_eq!((parsed.rows.len(), parsed.objective.len()), (1, 1));
}

#[test]
fn random_values_survive_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 5;
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1e3..1e3)).collect();
    let mut lp = LpProblem::new(c).unwrap();
    for _ in 0..40 {
        // a spread of magnitudes, exact zeros and subnormal-adjacent values
        let row: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..4) {
                0 => 0.0,
                1 => rng.random_range(-1.0..1.0) * 1e-300,
                2 => rng.random_range(-1.0..1.0) * 1e12,
                _ => rng.random::<f64>() / 3.0,
            })
            .collect();
        lp.add_row(&row, rng.random_range(-5.0..5.0), RowOrigin::Generic).unwrap();
    }
    assert_round_trip(&lp);
}

#[test]
fn three_point_cloud_degree_two() {
    let domain = BoxDomain::cube(1, -1.0, 1.0).unwrap();
    let cloud = PointCloud::new(vec![vec![-0.5], vec![0.0], vec![0.25]]).unwrap();
    let basis = PolyBasis::monomial(1, 2).unwrap();
    let y = moment_vector(&basis, &domain).unwrap();
    let grid = build_grid(&domain, &GridSpec::Tensor { points_per_axis: 2001 }).unwrap();
    let lp = assemble(&cloud, &grid, &basis, &y).unwrap();
    let parsed = assert_round_trip(&lp);
    assert_eq!(parsed.rows.len(), 2004);
    assert_eq!(parsed.objective.len(), 3);
}
