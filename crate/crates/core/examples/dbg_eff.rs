use magspec::chart::{GaugeChart, SlowPoint};
use magspec::config::RunConfig;
use magspec::effective::assemble_grid_weyl;
use magspec::hermite::mu1;
use magspec::registry;
use magspec::sweep::{direct_cell, prepare};
use magspec::C64;
use std::sync::Arc;

fn main() {
    let model = Arc::new(registry::builtin("radial_well").unwrap());
    let chart = GaugeChart::new(model.clone());
    let mu0 = C64::new(1.0, 0.0);
    let x0 = SlowPoint::new(0.0, 0.0);

    for n in [64usize, 96] {
        let v = mu1(&chart, x0, mu0, n, mu0).unwrap();
        println!("mu1(X0) at N = {n}: {:.8} {:+.3e}i", v.re, v.im);
    }
    // mu1 slightly off-center
    for (xi, x) in [(0.3, 0.0), (0.0, 0.3), (0.5, -0.4)] {
        let v = mu1(&chart, SlowPoint::new(xi, x), mu0, 64, mu0).unwrap();
        println!("mu1(xi={xi}, x={x}) = {:.8} {:+.3e}i", v.re, v.im);
    }

    // bare ground state of Op_h(Bhat) vs direct lambda_1/h at two h's:
    // the difference per h estimates the subprincipal shift c1 = mu1(X0)
    for h in [0.1, 0.05] {
        let op = assemble_grid_weyl(
            |x, xi| chart.p_hat(SlowPoint::new(xi, x)),
            256,
            4.0,
            h,
            x0,
        )
        .unwrap();
        let mut eigs = op.matrix.eigenvalues().unwrap();
        eigs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let bare = eigs[0].re;

        let cfg = RunConfig {
            h_list: vec![h],
            ..Default::default()
        };
        let setup = prepare(&cfg, (1.0, 0.0)).unwrap();
        let cell = direct_cell(&cfg, &setup, 0).unwrap();
        let lam1 = cell
            .eigenvalues
            .iter()
            .map(|l| l.re)
            .fold(f64::INFINITY, f64::min);
        println!(
            "h = {h}: bare nu1 = {:.8}, direct lambda1/h = {:.8}, implied c1 = {:.6}",
            bare,
            lam1 / h,
            (lam1 / h - bare) / h
        );
    }
}
