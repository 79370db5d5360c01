use combwalk::resistance::{exit_times, exit_times_dense, exit_times_exact, pair_resistance};
use combwalk::{Comb, CombSpec, Vertex};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vertex(comb: &Comb, rng: &mut ChaCha8Rng, span: i64) -> Vertex {
    let n = rng.gen_range(-span..=span);
    Vertex::new(n, rng.gen_range(0..=comb.tooth_height(n)))
}

#[test]
fn tree_resistance_is_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for alpha in [0.5, 1.0, 2.0] {
        let comb = Comb::log(alpha).unwrap();
        for _ in 0..40 {
            let u = random_vertex(&comb, &mut rng, 40);
            let v = random_vertex(&comb, &mut rng, 40);
            let r = pair_resistance(&comb, u, v).unwrap();
            assert!(
                (r - comb.distance(u, v).unwrap() as f64).abs() < 1e-9,
                "{u} {v}"
            );
        }
    }
}

#[test]
fn forest_and_dense_exit_times_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let comb = Comb::log(1.0).unwrap();
    for _ in 0..10 {
        let x = random_vertex(&comb, &mut rng, 50);
        let r = rng.gen_range(1..=15);
        let ball = comb.ball(x, r).unwrap().members;
        let a = exit_times(&comb, &ball).unwrap();
        let b = exit_times_dense(&comb, &ball).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-9 * q.max(1.0));
        }
    }
}

#[test]
fn line_exit_time_is_square() {
    let line = Comb::new(CombSpec::line());
    for m in [1u64, 10, 57, 100] {
        let ball = line.ball(Vertex::ORIGIN, m).unwrap().members;
        let t = exit_times_exact(&line, &ball).unwrap();
        let centre = ball.iter().position(|v| *v == Vertex::ORIGIN).unwrap();
        assert_eq!(
            t[centre],
            BigRational::from_integer(BigInt::from((m + 1) * (m + 1)))
        );
    }
}
