#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use cone_blowup::ground_state::{solve_ground_state, GroundState, GroundStateOptions};
use cone_blowup::inner::{build_inner, InnerProfile};
use cone_blowup::linearized::LinearizedOperator;
use cone_blowup::self_similar::{solve_low_orders, SelfSimilarProfile, SsGridOptions};
use cone_blowup::Config;

pub fn ground_state() -> Arc<GroundState> {
    static GS: OnceLock<Arc<GroundState>> = OnceLock::new();
    GS.get_or_init(|| Arc::new(solve_ground_state(&GroundStateOptions::default()).unwrap())).clone()
}

pub fn operator() -> Arc<LinearizedOperator> {
    static OP: OnceLock<Arc<LinearizedOperator>> = OnceLock::new();
    OP.get_or_init(|| Arc::new(LinearizedOperator::new(ground_state()).unwrap())).clone()
}

pub fn inner() -> &'static InnerProfile {
    static IP: OnceLock<InnerProfile> = OnceLock::new();
    IP.get_or_init(|| build_inner(&Config::default(), operator()).unwrap())
}

pub fn self_similar() -> &'static SelfSimilarProfile {
    static SS: OnceLock<SelfSimilarProfile> = OnceLock::new();
    SS.get_or_init(|| solve_low_orders(inner(), &SsGridOptions::default()).unwrap())
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
}

pub fn composite(n_remote: usize) -> cone_blowup::composite::CompositeApprox {
    use cone_blowup::composite::CompositeApprox;
    use cone_blowup::remote::build_remote;
    let ss = Arc::new(SelfSimilarProfile {
        config: Config { n_remote, ..Config::default() },
        ..self_similar().clone()
    });
    let rp = Arc::new(build_remote(&ss, 800).unwrap());
    CompositeApprox::new(Arc::new(inner().clone()), ss, rp).unwrap()
}
