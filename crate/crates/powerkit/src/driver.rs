//! Parallel Monte Carlo driver and the ratification run.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use powerkit_core::design::TestKind;
use powerkit_core::oracle::{PowerEstimate, SimPlan, Simulator, Tally};
use powerkit_core::ratify::{self, PointReport, SizeReport, Status};
use powerkit_core::Result;
use rayon::prelude::*;

/// Same estimate as the sequential oracle: batches run on the rayon pool
/// and tallies are summed, so the thread count does not matter.
pub fn simulate(plan: &SimPlan) -> Result<PowerEstimate> {
    let sim = Simulator::new(&plan.spec, &plan.allocation)?;
    let tally = (0..plan.batches())
        .into_par_iter()
        .map(|b| sim.run_batch(plan.seed, b, plan.batch_len(b)))
        .reduce(Tally::default, |a, b| a.merge(&b));
    Ok(tally.estimate(plan.seed))
}

#[derive(Debug, Clone)]
pub struct Ratification {
    pub points: Vec<PointReport>,
    pub sizes: Vec<SizeReport>,
    pub elapsed: Duration,
}

impl Ratification {
    pub fn grid_failures(&self) -> usize {
        self.points.iter().filter(|p| p.status == Status::Fail).count()
    }

    pub fn size_failures(&self) -> usize {
        self.sizes.iter().filter(|s| !s.pass).count()
    }

    pub fn passed(&self) -> bool {
        self.grid_failures() == 0 && self.size_failures() == 0
    }

    /// Structured plain-text report; same seeds give the same bytes.
    pub fn text(&self) -> String {
        ratify::render(&self.points, &self.sizes)
    }

    /// Tab-separated table, one row per grid point and per size case.
    pub fn table(&self) -> String {
        let mut out = String::from("kind\ttest\tlabel\tgoal\tn_per_arm\tclosed\tp_hat\tse\tlower\tupper\tz\tstatus\n");
        let arms = |n: &[u64]| n.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        for p in &self.points {
            let _ = writeln!(
                out,
                "power\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.3}\t{}",
                p.test.id(),
                p.label,
                p.goal,
                arms(&p.n_per_arm),
                p.closed_power,
                p.estimate.p_hat,
                p.estimate.mc_standard_error,
                p.lower,
                p.upper,
                p.z,
                p.status.as_str()
            );
        }
        for s in &self.sizes {
            let _ = writeln!(
                out,
                "size\t{}\t{}\t\t{}\t{}\t{:.6}\t{:.6}\t\t\t{:.3}\t{}",
                s.test.id(),
                s.label,
                arms(&s.n_per_arm),
                s.alpha,
                s.p_hat,
                s.standard_error,
                s.z,
                if s.pass { "pass" } else { "FAIL" }
            );
        }
        out
    }
}

/// Runs the bundled grid and size suite at `replications` per point,
/// optionally restricted to one test.
pub fn ratify(replications: u64, only: Option<TestKind>) -> Result<Ratification> {
    let start = Instant::now();
    let keep = |k: TestKind| only.is_none_or(|o| o == k);
    let mut points = Vec::new();
    for point in ratify::grid().into_iter().filter(|p| keep(p.spec.kind)) {
        let prepared = ratify::prepare(&point)?;
        let estimate = simulate(&ratify::power_plan(&point, &prepared, replications))?;
        points.push(ratify::assess(&point, &prepared, estimate));
    }
    let mut sizes = Vec::new();
    for case in ratify::size_suite()?.into_iter().filter(|c| keep(c.spec.kind)) {
        let estimate = simulate(&ratify::size_plan(&case, replications))?;
        sizes.push(ratify::assess_size(&case, &estimate));
    }
    Ok(Ratification { points, sizes, elapsed: start.elapsed() })
}
