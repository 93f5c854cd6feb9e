use tobit_bart::bart::{fit_bart_regression, BartConfig, Covariates, McmcSize};
use tobit_bart::estimands::{metrics, summarize};
use tobit_bart::model::{run_chain, ChainConfig, ErrorModel, EvalPoints, MeanModel, SamplerKind};
use tobit_bart::rng::RngStream;
use tobit_bart::sim::{generate, DgpFamily, DgpSpec, ErrorKind, PriorSpec};
use tobit_bart::stats::{mean, variance};

fn main() {
    for (dgp, rho) in [(1u8, 0.9), (2u8, 0.45), (2u8, 0.9)] {
        let spec = DgpSpec {
            family: DgpFamily::Brewer { id: dgp },
            rho,
            error_kind: ErrorKind::Normal,
            n_train: 2500,
            n_test: 500,
            reps: 1,
            seed: 7_000 + dgp as u64 * 100 + (rho * 100.0) as u64,
        };
        let data = generate(&spec, &RngStream::new(spec.seed)).unwrap();
        // naive baseline sees every covariate (w contains x here)
        let sel_rows: Vec<usize> = data.train.selected_indices();
        let w_sel = Covariates::from_rows(&sel_rows.iter().map(|&i| data.train.w.row(i)).collect::<Vec<_>>());
        let y_sel = data.train.selected_outcomes();
        let reg = fit_bart_regression(&w_sel, &y_sel, &data.w_test,
            &BartConfig { m: 200, ..BartConfig::outcome_default() },
            &McmcSize::new(1500, 500, 1), &RngStream::new(spec.seed + 2));
        let bm = metrics(&summarize(&reg.f_test), &data.truth_test.f_y).unwrap();
        println!("dgp{dgp} rho={rho}: BART(all covs): rmse {:.3}, coverage {:.3}, interval len {:.3}, sigma2 {:.3}",
            bm.rmse, bm.coverage, bm.interval_length, mean(&reg.sigma2));
        if dgp == 2 {
            let sigma2 = variance(&data.train.selected_outcomes());
            let prior = PriorSpec::vh_default().calibrate(sigma2).unwrap();
            let mean_model = MeanModel::Trees {
                selection: BartConfig { m: 50, ..BartConfig::selection_default() },
                outcome: BartConfig { m: 200, ..BartConfig::outcome_default() },
            };
            let cfg = ChainConfig::new(McmcSize::new(1500, 500, 1));
            let eval = EvalPoints { x_test: Some(data.x_test.clone()), w_test: None };
            let fit = run_chain(&data.train, &mean_model, &ErrorModel::Gaussian(prior),
                SamplerKind::Standard, &cfg, &eval, &RngStream::new(spec.seed + 1)).unwrap();
            let tm = metrics(&summarize(&fit.draws.fy_test), &data.truth_test.f_y).unwrap();
            println!("   tobart rmse {:.3}, ratio {:.3}", tm.rmse, tm.rmse / bm.rmse);
        }
    }
}
