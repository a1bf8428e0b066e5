use ddlab_train::*;
use std::fs;
use std::time::Instant;

#[allow(clippy::too_many_arguments)]
fn run_cell(
    arch: &[usize],
    kind: OptimizerKind,
    lr: f64,
    sep: f64,
    seed: u64,
    epochs: usize,
    tag: &str,
) {
    let base = 1000 + seed * 10;
    let pool = gen_gaussian_pair(600, 20, sep, base).unwrap();
    let (tr0, va0) = split_balanced(&pool, 300).unwrap();
    let tr = inject_swap_noise(&tr0, 0.1, base + 2).unwrap();
    let va = inject_swap_noise(&va0, 0.1, base + 3).unwrap();

    let clean_idx: Vec<usize> = (0..va.n()).filter(|&i| !va.noise_mask[i]).collect();
    let noisy_idx: Vec<usize> = (0..va.n()).filter(|&i| va.noise_mask[i]).collect();
    let sub = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            idx.iter().map(|&i| va.x[i].clone()).collect(),
            idx.iter().map(|&i| f64::from(va.y[i])).collect(),
        )
    };
    let (cx, cy) = sub(&clean_idx);
    let (nx, ny) = sub(&noisy_idx);

    let mut dims = vec![20];
    dims.extend_from_slice(arch);
    dims.push(1);
    let mut model = MlpModel::init(&dims, base + 5).unwrap();
    let mut opt = OptimizerState::new(OptimizerConfig::with_lr(kind, lr), &model);

    let ty = tr.labels_f64();
    let vy = va.labels_f64();
    let mut out = String::from("epoch,train,val,val_clean,val_noisy\n");
    for epoch in 1..=epochs {
        let (grads, loss) = grad_and_loss(&model, &tr.x, &ty).unwrap();
        let deltas = opt.step(&grads);
        model.apply_deltas(&deltas);
        if epoch % 4 == 0 || epoch < 50 {
            let v = mean_loss(&model, &va.x, &vy).unwrap();
            let vc = mean_loss(&model, &cx, &cy).unwrap();
            let vn = mean_loss(&model, &nx, &ny).unwrap();
            out.push_str(&format!("{epoch},{loss},{v},{vc},{vn}\n"));
        }
    }
    fs::write(format!("/tmp/calib4/{tag}.csv"), out).unwrap();
}

fn main() {
    let t0 = Instant::now();
    fs::create_dir_all("/tmp/calib4").unwrap();
    let opts: [(&str, OptimizerKind, f64); 6] = [
        ("sgd0.5", OptimizerKind::Sgd, 0.5),
        ("sgd2", OptimizerKind::Sgd, 2.0),
        ("sgd5", OptimizerKind::Sgd, 5.0),
        ("sgd10", OptimizerKind::Sgd, 10.0),
        ("adadelta1", OptimizerKind::Adadelta, 1.0),
        ("adadelta0.1", OptimizerKind::Adadelta, 0.1),
    ];
    for (oname, kind, lr) in opts {
        let tag = format!("{oname}_s0");
        run_cell(&[64, 128], kind, lr, 4.0, 0, 4000, &tag);
        println!("{tag} done at {:.1?}", t0.elapsed());
    }
}
