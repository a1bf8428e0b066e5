use ddlab_train::*;
use std::time::Instant;

fn main() {
    let train_ds = gen_gaussian_pair(300, 20, 4.0, 1).unwrap();
    let val_ds = gen_gaussian_pair(300, 20, 4.0, 2).unwrap();
    let tx = inject_swap_noise(&train_ds, 0.1, 3).unwrap();
    let vx = inject_swap_noise(&val_ds, 0.1, 4).unwrap();
    let cfg = TrainConfig {
        optimizer: OptimizerConfig::with_lr(OptimizerKind::Adam, 1e-3),
        epochs: 2000,
        eval_every: 1,
        batch: BatchMode::Full,
        seed: 0,
        halt: None,
    };
    let mut model = MlpModel::init(&[20, 64, 128, 1], 0).unwrap();
    let t0 = Instant::now();
    let out = train(&mut model, &tx.x, &tx.labels_f64(), &vx.x, &vx.labels_f64(), &cfg).unwrap();
    let dt = t0.elapsed();
    println!("2000 epochs in {:.2?} ({:.1} ms/epoch)", dt, dt.as_secs_f64() * 1e3 / 2000.0);
    println!("final train {:.4} val {:.4}", out.train.last().unwrap().1, out.val.last().unwrap().1);
}
