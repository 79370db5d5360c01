//! Propagated kernels against dense matrix powers on a window the walk cannot
//! leave in the time considered.

use std::collections::HashMap;

use combwalk::kernel::{collision_series, kernel, DistVector, SixAdic};
use combwalk::{Comb, Vertex};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

fn window(comb: &Comb, radius: u64) -> (Vec<Vertex>, HashMap<Vertex, usize>) {
    let vs = comb.ball(Vertex::ORIGIN, radius).unwrap().members;
    let index = vs.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    (vs, index)
}

fn transition(comb: &Comb, vs: &[Vertex], index: &HashMap<Vertex, usize>) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(vs.len(), vs.len());
    for (i, v) in vs.iter().enumerate() {
        let nb = comb.neighbors(*v).unwrap();
        for w in &nb {
            if let Some(&j) = index.get(w) {
                p[(i, j)] += 1.0 / nb.len() as f64;
            }
        }
    }
    p
}

#[test]
fn kernel_matches_matrix_power() {
    for alpha in [0.5, 1.0, 2.0] {
        let comb = Comb::log(alpha).unwrap();
        let (vs, index) = window(&comb, 24);
        let p = transition(&comb, &vs, &index);
        let starts = [Vertex::ORIGIN, Vertex::new(3, 1), Vertex::backbone(-5)];
        let mut power = DMatrix::<f64>::identity(vs.len(), vs.len());
        for n in 0..=10 {
            if n > 0 {
                power = &power * &p;
            }
            for &x in &starts {
                let i = index[&x];
                for (j, &y) in vs.iter().enumerate() {
                    if comb.distance(Vertex::ORIGIN, y).unwrap() > 12 {
                        continue;
                    }
                    let want = power[(i, j)] / comb.degree(y).unwrap() as f64;
                    let got = kernel(&comb, x, y, n, None).unwrap().value;
                    assert!(
                        (got - want).abs() < 1e-14,
                        "alpha={alpha} n={n} x={x} y={y}"
                    );
                }
            }
        }
    }
}

#[test]
fn exact_masses_match_rational_matrix_power() {
    let comb = Comb::log(1.0).unwrap();
    let (vs, index) = window(&comb, 10);
    let x = Vertex::new(2, 0);
    let mut law = vec![BigRational::zero(); vs.len()];
    law[index[&x]] = BigRational::from_integer(BigInt::from(1));
    let mut d = DistVector::<SixAdic>::point(&comb, x, None).unwrap();
    for _ in 0..6 {
        let mut next = vec![BigRational::zero(); vs.len()];
        for (i, v) in vs.iter().enumerate() {
            if law[i].is_zero() {
                continue;
            }
            let nb = comb.neighbors(*v).unwrap();
            let share = &law[i] / BigInt::from(nb.len());
            for w in &nb {
                next[index[w]] += &share;
            }
        }
        law = next;
        d = d.step();
        for (i, v) in vs.iter().enumerate() {
            assert_eq!(d.exact_prob(*v), law[i]);
        }
    }
}

#[test]
fn triple_collisions_by_enumeration() {
    // Sum over the common position of the product of the three laws, taken
    // from the dense matrix power.
    let comb = Comb::log(1.0).unwrap();
    let (vs, index) = window(&comb, 20);
    let p = transition(&comb, &vs, &index);
    let starts = [Vertex::ORIGIN, Vertex::backbone(2), Vertex::new(3, 1)];
    let series = collision_series(&comb, &starts, 8, None).unwrap();
    let mut power = DMatrix::<f64>::identity(vs.len(), vs.len());
    for (n, got) in series.iter().enumerate() {
        if n > 0 {
            power = &power * &p;
        }
        let rows: Vec<usize> = starts.iter().map(|s| index[s]).collect();
        let want: f64 = (0..vs.len())
            .map(|j| rows.iter().map(|&i| power[(i, j)]).product::<f64>())
            .sum();
        assert!((got - want).abs() < 1e-14, "n={n}");
    }
}
