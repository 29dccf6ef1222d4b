//! Single-runway landing sequencing as a time-windowed tour problem.
//!
//! The model carries the pairwise separation matrix, per-flight landing
//! windows and (configurable, default zero) depot legs. `solve_exact` runs a
//! depth-first branch-and-bound over landing orders with earliest-feasible
//! time propagation, which is exact for this model class: once the order is
//! fixed, scheduling every landing as early as its window and the preceding
//! separation allow minimizes the completion time. `brute_force` is the
//! independent permutation oracle and `check_constraints` evaluates the
//! literal MILP inequalities on any returned solution.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::domain::{EtaDistribution, Flight, ScheduleSolution, SolverStats};
use crate::separation::{
    build_separation_matrix, QuantileConvention, ReferenceMatrix, SeparationMatrix, WindowConfig,
};

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchedulerError {
    #[error("instance has {n} aircraft, solver cap is {n_max}")]
    TooManyAircraft { n: usize, n_max: usize },
    #[error("empty instance")]
    EmptyInstance,
    #[error("brute force limited to 9 aircraft, got {0}")]
    InstanceTooLarge(usize),
    #[error(transparent)]
    Separation(#[from] crate::separation::SeparationError),
}

/// Tie-break between equal-makespan solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieBreak {
    /// Lexicographically smallest landing order by entry sequence.
    #[default]
    EntrySequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Cap on aircraft per solve.
    pub n_max: usize,
    /// Wall-clock limit per solve, seconds.
    pub time_limit_s: f64,
    /// Accepted optimality gap in seconds; 0 proves optimality.
    pub gap: f64,
    pub tie_break: TieBreak,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_max: 9,
            time_limit_s: 10.0,
            gap: 0.0,
            tie_break: TieBreak::EntrySequence,
        }
    }
}

/// The sequencing model: separations, windows and depot legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleModel {
    pub n: usize,
    pub separation: SeparationMatrix,
    /// Separation from the depot to each first landing (`t_0i`).
    pub depot_to: Vec<f64>,
    /// Return leg from each landing to the depot (`t_i0`).
    pub depot_from: Vec<f64>,
    /// Set when preprocessing already shows no feasible order exists.
    pub infeasible_pre: bool,
}

impl ScheduleModel {
    fn earliest_start(&self, i: usize) -> f64 {
        self.separation.earliest[i].max(self.depot_to[i]).max(0.0)
    }

    fn min_separation(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    m = m.min(self.separation.sep[i][j]);
                }
            }
        }
        m
    }
}

/// Build the model from a separation matrix. Depot legs default to zero so
/// the completion time is the last touchdown.
pub fn build_model(
    separation: SeparationMatrix,
    cfg: &SolverConfig,
) -> Result<ScheduleModel, SchedulerError> {
    build_model_with_depot(
        separation.clone(),
        vec![0.0; separation.n],
        vec![0.0; separation.n],
        cfg,
    )
}

pub fn build_model_with_depot(
    separation: SeparationMatrix,
    depot_to: Vec<f64>,
    depot_from: Vec<f64>,
    cfg: &SolverConfig,
) -> Result<ScheduleModel, SchedulerError> {
    let n = separation.n;
    if n == 0 {
        return Err(SchedulerError::EmptyInstance);
    }
    if n > cfg.n_max {
        return Err(SchedulerError::TooManyAircraft { n, n_max: cfg.n_max });
    }
    let mut model = ScheduleModel {
        n,
        separation,
        depot_to,
        depot_from,
        infeasible_pre: false,
    };
    model.infeasible_pre = preprocess_infeasible(&model);
    Ok(model)
}

/// Sound (not complete) infeasibility test: a flight that cannot meet its own
/// window, or a pair that cannot be ordered either way given that every
/// landing after the first is at least the global minimum separation later.
fn preprocess_infeasible(model: &ScheduleModel) -> bool {
    for i in 0..model.n {
        if model.earliest_start(i) > model.separation.latest[i] + TIME_EPS {
            return true;
        }
    }
    if model.n < 2 {
        return false;
    }
    let min_sep = model.min_separation();
    for i in 0..model.n {
        for j in (i + 1)..model.n {
            let i_first_ok =
                model.earliest_start(i) + min_sep <= model.separation.latest[j] + TIME_EPS;
            let j_first_ok =
                model.earliest_start(j) + min_sep <= model.separation.latest[i] + TIME_EPS;
            if !i_first_ok && !j_first_ok {
                return true;
            }
        }
    }
    false
}

/// Earliest-feasible landing times for a fixed order. Returns None when some
/// landing misses its window.
pub fn schedule_order(model: &ScheduleModel, order: &[usize]) -> Option<(Vec<f64>, f64)> {
    let mut times = vec![f64::NAN; model.n];
    let mut prev: Option<usize> = None;
    let mut completion: f64 = 0.0;
    for &k in order {
        let t = match prev {
            None => model.earliest_start(k),
            Some(p) => (times[p] + model.separation.sep[p][k])
                .max(model.separation.earliest[k])
                .max(0.0),
        };
        if t > model.separation.latest[k] + TIME_EPS {
            return None;
        }
        times[k] = t;
        completion = completion.max(t + model.depot_from[k]);
        prev = Some(k);
    }
    Some((times, completion))
}

/// Exact branch-and-bound over landing orders.
///
/// Children are explored in entry-sequence (index) order and an incumbent is
/// replaced only when strictly better, so the returned optimum is the
/// lexicographically smallest one. Subtrees are pruned when a lower bound on
/// their completion time exceeds the incumbent.
pub fn solve_exact(model: &ScheduleModel, cfg: &SolverConfig) -> ScheduleSolution {
    let start = Instant::now();
    let mut stats = SolverStats { nodes: 0, wall_time_s: 0.0, proven: true };
    if model.infeasible_pre {
        stats.wall_time_s = start.elapsed().as_secs_f64();
        return ScheduleSolution::infeasible(model.n, stats);
    }

    struct Search<'a> {
        model: &'a ScheduleModel,
        cfg: &'a SolverConfig,
        start: Instant,
        min_sep: f64,
        best: Option<(Vec<usize>, Vec<f64>, f64)>,
        nodes: u64,
        timed_out: bool,
    }

    impl Search<'_> {
        fn dfs(
            &mut self,
            used: u64,
            order: &mut Vec<usize>,
            times: &mut Vec<f64>,
            last_time: f64,
            completion: f64,
        ) {
            self.nodes += 1;
            if self.nodes % 1024 == 0
                && self.start.elapsed().as_secs_f64() > self.cfg.time_limit_s
            {
                self.timed_out = true;
            }
            if self.timed_out {
                return;
            }
            let n = self.model.n;
            if order.len() == n {
                let better = match &self.best {
                    None => true,
                    Some((_, _, best)) => completion < best - TIME_EPS,
                };
                if better {
                    self.best = Some((order.clone(), times.clone(), completion));
                }
                return;
            }
            // Lower bound on the completion of any extension.
            let remaining = (n - order.len()) as f64;
            let mut lb = completion;
            if !order.is_empty() {
                lb = lb.max(last_time + remaining * self.min_sep);
            }
            for k in 0..n {
                if used & (1 << k) == 0 {
                    lb = lb.max(self.model.earliest_start(k) + self.model.depot_from[k]);
                }
            }
            if let Some((_, _, best)) = &self.best {
                let cutoff = best - self.cfg.gap;
                if lb > cutoff + TIME_EPS {
                    return;
                }
            }
            for k in 0..n {
                if used & (1 << k) != 0 {
                    continue;
                }
                let t = if order.is_empty() {
                    self.model.earliest_start(k)
                } else {
                    (last_time + self.model.separation.sep[*order.last().unwrap()][k])
                        .max(self.model.separation.earliest[k])
                        .max(0.0)
                };
                if t > self.model.separation.latest[k] + TIME_EPS {
                    continue;
                }
                order.push(k);
                times[k] = t;
                self.dfs(
                    used | (1 << k),
                    order,
                    times,
                    t,
                    completion.max(t + self.model.depot_from[k]),
                );
                order.pop();
            }
        }
    }

    let mut search = Search {
        model,
        cfg,
        start,
        min_sep: if model.n > 1 { model.min_separation() } else { 0.0 },
        best: None,
        nodes: 0,
        timed_out: false,
    };
    let mut order = Vec::with_capacity(model.n);
    let mut times = vec![f64::NAN; model.n];
    search.dfs(0, &mut order, &mut times, 0.0, 0.0);

    stats.nodes = search.nodes;
    stats.proven = !search.timed_out;
    stats.wall_time_s = start.elapsed().as_secs_f64();
    match search.best {
        Some((order, times, completion)) => ScheduleSolution {
            order,
            landing_times: times,
            makespan: completion,
            objective: completion,
            feasible: true,
            stats,
        },
        None => ScheduleSolution::infeasible(model.n, stats),
    }
}

/// Verification oracle: enumerate every landing order in lexicographic
/// (entry-sequence) order, schedule each one greedily and keep the strictly
/// best. Deliberately shares no code with `solve_exact`.
pub fn brute_force(model: &ScheduleModel) -> Result<ScheduleSolution, SchedulerError> {
    if model.n > 9 {
        return Err(SchedulerError::InstanceTooLarge(model.n));
    }
    let start = Instant::now();
    let n = model.n;
    let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None;
    let mut perms: u64 = 0;

    fn visit(
        model: &ScheduleModel,
        order: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut Option<(Vec<usize>, Vec<f64>, f64)>,
        perms: &mut u64,
    ) {
        let n = model.n;
        if order.len() == n {
            *perms += 1;
            // Evaluate the full order from scratch.
            let mut times = vec![f64::NAN; n];
            let mut completion: f64 = 0.0;
            let mut ok = true;
            for (pos, &k) in order.iter().enumerate() {
                let mut t = model.separation.earliest[k].max(model.depot_to[k]).max(0.0);
                if pos > 0 {
                    let p = order[pos - 1];
                    t = t.max(times[p] + model.separation.sep[p][k]);
                }
                if t > model.separation.latest[k] + TIME_EPS {
                    ok = false;
                    break;
                }
                times[k] = t;
                completion = completion.max(t + model.depot_from[k]);
            }
            if ok {
                let better = match best {
                    None => true,
                    Some((_, _, b)) => completion < *b - TIME_EPS,
                };
                if better {
                    *best = Some((order.clone(), times, completion));
                }
            }
            return;
        }
        for k in 0..n {
            if used[k] {
                continue;
            }
            used[k] = true;
            order.push(k);
            visit(model, order, used, best, perms);
            order.pop();
            used[k] = false;
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut used = vec![false; n];
    visit(model, &mut order, &mut used, &mut best, &mut perms);

    let stats = SolverStats {
        nodes: perms,
        wall_time_s: start.elapsed().as_secs_f64(),
        proven: true,
    };
    Ok(match best {
        Some((order, times, completion)) => ScheduleSolution {
            order,
            landing_times: times,
            makespan: completion,
            objective: completion,
            feasible: true,
            stats,
        },
        None => ScheduleSolution::infeasible(n, stats),
    })
}

/// First-come-first-served baseline: land in TMA entry order (ties broken by
/// id) at the earliest feasible time. Window violations flag the solution
/// infeasible; the order is never repaired.
pub fn fcfs(flights: &[Flight], model: &ScheduleModel) -> ScheduleSolution {
    assert_eq!(flights.len(), model.n);
    let start = Instant::now();
    let mut order: Vec<usize> = (0..model.n).collect();
    order.sort_by(|&a, &b| {
        flights[a]
            .entry_time
            .partial_cmp(&flights[b].entry_time)
            .unwrap()
            .then_with(|| flights[a].id.cmp(&flights[b].id))
    });

    let mut times = vec![f64::NAN; model.n];
    let mut completion: f64 = 0.0;
    let mut feasible = true;
    let mut prev: Option<usize> = None;
    for &k in &order {
        let mut t = model.earliest_start(k);
        if let Some(p) = prev {
            t = t.max(times[p] + model.separation.sep[p][k]);
        }
        if t > model.separation.latest[k] + TIME_EPS {
            feasible = false;
        }
        times[k] = t;
        completion = completion.max(t + model.depot_from[k]);
        prev = Some(k);
    }
    ScheduleSolution {
        order,
        landing_times: times,
        makespan: completion,
        objective: completion,
        feasible,
        stats: SolverStats {
            nodes: 0,
            wall_time_s: start.elapsed().as_secs_f64(),
            proven: true,
        },
    }
}

/// Look-ahead horizon: the first `n_max` flights by entry time (ties by id).
pub fn select_horizon<'a>(flights: &'a [Flight], cfg: &SolverConfig) -> Vec<&'a Flight> {
    let mut sorted: Vec<&Flight> = flights.iter().collect();
    sorted.sort_by(|a, b| {
        a.entry_time
            .partial_cmp(&b.entry_time)
            .unwrap()
            .then_with(|| a.id.cmp(&b.id))
    });
    sorted.truncate(cfg.n_max.min(flights.len()));
    sorted
}

/// One literal constraint violation found by the checker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub detail: String,
}

/// Independent checker: reconstructs the adjacency variables from the landing
/// order and evaluates the literal MILP inequalities (separation activation
/// in big-M form, degree constraints, completion bound, windows, binaries,
/// non-negativity) without reusing any solver logic.
pub fn check_constraints(model: &ScheduleModel, solution: &ScheduleSolution) -> Vec<Violation> {
    let mut violations = Vec::new();
    macro_rules! fail {
        ($constraint:expr, $detail:expr $(,)?) => {
            violations.push(Violation { constraint: $constraint.to_string(), detail: $detail })
        };
    }
    if !solution.feasible {
        fail!("feasible", "solution is not feasible".to_string());
        return violations;
    }
    let n = model.n;
    let t = &solution.landing_times;
    let t_completion = solution.makespan;

    // Each flight appears exactly once in the order.
    let mut seen = vec![0usize; n];
    for &k in &solution.order {
        if k >= n {
            fail!("order", format!("index {k} out of range"));
            return violations;
        }
        seen[k] += 1;
    }
    for (k, &c) in seen.iter().enumerate() {
        if c != 1 {
            fail!("order", format!("flight {k} appears {c} times"));
        }
    }
    if !violations.is_empty() {
        return violations;
    }

    // Adjacency variables over nodes {0 (depot), 1..n}; y[i][j] = 1 when j
    // lands right after i. Depot arcs close the tour.
    let mut y = vec![vec![0u8; n + 1]; n + 1];
    y[0][solution.order[0] + 1] = 1;
    for w in solution.order.windows(2) {
        y[w[0] + 1][w[1] + 1] = 1;
    }
    y[solution.order[n - 1] + 1][0] = 1;

    // t_i >= t_0i * y_0i
    for i in 0..n {
        if t[i] + TIME_EPS < model.depot_to[i] * f64::from(y[0][i + 1]) {
            fail!("depot-start", format!("t[{i}] = {} < t_0{i} ", t[i]));
        }
    }
    // Big-M separation activation for every ordered pair of real aircraft:
    // t_i - t_j + (u_i - l_j + sep_ij) * y_ij <= u_i - l_j
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let u_i = model.separation.latest[i];
            let l_j = model.separation.earliest[j];
            let big_m = u_i - l_j + model.separation.sep[i][j];
            let lhs = t[i] - t[j] + big_m * f64::from(y[i + 1][j + 1]);
            if lhs > u_i - l_j + 1e-6 {
                fail!(
                    "separation",
                    format!("pair ({i},{j}): lhs {lhs} > {}", u_i - l_j),
                );
            }
        }
    }
    // Degree constraints: one predecessor and one successor per aircraft.
    for j in 0..n {
        let in_deg: u32 = (0..=n).map(|i| u32::from(y[i][j + 1])).sum();
        if in_deg != 1 {
            fail!("degree-in", format!("aircraft {j} has in-degree {in_deg}"));
        }
    }
    for i in 0..n {
        let out_deg: u32 = (0..=n).map(|j| u32::from(y[i + 1][j])).sum();
        if out_deg != 1 {
            fail!("degree-out", format!("aircraft {i} has out-degree {out_deg}"));
        }
    }
    // t_i + t_i0 <= t_{n+1}
    for i in 0..n {
        if t[i] + model.depot_from[i] > t_completion + 1e-6 {
            fail!(
                "completion",
                format!("t[{i}] + return leg exceeds completion {t_completion}"),
            );
        }
    }
    // Windows and non-negativity.
    for i in 0..n {
        if t[i] + 1e-6 < model.separation.earliest[i] || t[i] > model.separation.latest[i] + 1e-6 {
            fail!(
                "window",
                format!(
                    "t[{i}] = {} outside [{}, {}]",
                    t[i], model.separation.earliest[i], model.separation.latest[i]
                ),
            );
        }
        if t[i] < -TIME_EPS {
            fail!("non-negative", format!("t[{i}] = {}", t[i]));
        }
    }
    violations
}

/// Side-by-side result of the optimizer and the FCFS baseline on one
/// separation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub optimized: ScheduleSolution,
    pub fcfs: ScheduleSolution,
    /// `(fcfs_makespan - optimized_makespan) / fcfs_makespan`, when both are
    /// feasible.
    pub reduction_makespan: Option<f64>,
    /// Same statistic on the first-to-last landing span.
    pub reduction_span: Option<f64>,
    /// Landing-position shift per flight (entry position minus landing
    /// position), when the optimized schedule is feasible.
    pub shifts: Vec<i64>,
    pub max_shift: i64,
}

/// Predict-separate-solve for one set of flights, against FCFS.
#[allow(clippy::too_many_arguments)]
pub fn compare(
    flights: &[Flight],
    etas: &[EtaDistribution],
    reference: &ReferenceMatrix,
    p_c: f64,
    windows: &WindowConfig,
    convention: QuantileConvention,
    cfg: &SolverConfig,
) -> Result<ComparisonReport, SchedulerError> {
    let sep = build_separation_matrix(flights, etas, reference, p_c, windows, convention)?;
    let model = build_model(sep, cfg)?;
    let optimized = solve_exact(&model, cfg);
    let baseline = fcfs(flights, &model);
    Ok(compare_solutions(optimized, baseline))
}

pub fn compare_solutions(
    optimized: ScheduleSolution,
    baseline: ScheduleSolution,
) -> ComparisonReport {
    let both = optimized.feasible && baseline.feasible;
    let reduction_makespan = both.then(|| {
        (baseline.makespan - optimized.makespan) / baseline.makespan
    });
    let reduction_span = both.then(|| {
        let span = |s: &ScheduleSolution| {
            let first = s.landing_times[s.order[0]];
            let last = s.landing_times[*s.order.last().unwrap()];
            last - first
        };
        let b = span(&baseline);
        if b > 0.0 {
            (b - span(&optimized)) / b
        } else {
            0.0
        }
    });
    let mut shifts = Vec::new();
    let mut max_shift = 0i64;
    if both {
        // Entry position comes from the FCFS order, landing position from the
        // optimized order.
        let n = optimized.order.len();
        let mut entry_pos = vec![0usize; n];
        for (pos, &k) in baseline.order.iter().enumerate() {
            entry_pos[k] = pos;
        }
        let mut landing_pos = vec![0usize; n];
        for (pos, &k) in optimized.order.iter().enumerate() {
            landing_pos[k] = pos;
        }
        for k in 0..n {
            let shift = entry_pos[k] as i64 - landing_pos[k] as i64;
            max_shift = max_shift.max(shift.abs());
            shifts.push(shift);
        }
    }
    ComparisonReport {
        optimized,
        fcfs: baseline,
        reduction_makespan,
        reduction_span,
        shifts,
        max_shift,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FeatureSchema, FeatureVector, WeightClass};

    fn uniform_matrix(l: Vec<f64>, u: Vec<f64>, sep: f64) -> SeparationMatrix {
        let n = l.len();
        SeparationMatrix {
            n,
            sep: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 0.0 } else { sep }).collect())
                .collect(),
            sigma: vec![vec![0.0; n]; n],
            earliest: l,
            latest: u,
            conflict_probability: 0.5,
        }
    }

    fn flight(id: &str, entry: f64) -> Flight {
        let schema = FeatureSchema::standard(vec!["B738".into()]);
        Flight {
            id: id.into(),
            callsign: id.into(),
            ac_type: "B738".into(),
            weight_class: WeightClass::Large,
            entry_time: entry,
            features: FeatureVector::from_values(&schema, vec![0.0; 28]).unwrap(),
            observed_duration: None,
        }
    }

    #[test]
    fn chain_of_separations() {
        let cfg = SolverConfig::default();
        let m = build_model(
            uniform_matrix(vec![0.0; 3], vec![300.0; 3], 64.0),
            &cfg,
        )
        .unwrap();
        let s = solve_exact(&m, &cfg);
        assert!(s.feasible);
        assert_eq!(s.makespan, 128.0);
        assert_eq!(s.order, vec![0, 1, 2]); // tie-break: entry sequence
        let mut times: Vec<f64> = s.landing_times.clone();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(times, vec![0.0, 64.0, 128.0]);
        assert!(check_constraints(&m, &s).is_empty());
    }

    #[test]
    fn window_forces_reorder() {
        // Flight 1 (index 1) cannot land before t=100; optimal order puts it
        // last: (0, 2, 1) with times (0, 64, 128).
        let cfg = SolverConfig::default();
        let m = build_model(
            uniform_matrix(vec![0.0, 100.0, 0.0], vec![300.0; 3], 64.0),
            &cfg,
        )
        .unwrap();
        let s = solve_exact(&m, &cfg);
        assert!(s.feasible);
        assert_eq!(s.order, vec![0, 2, 1]);
        assert_eq!(s.makespan, 128.0);
        let oracle = brute_force(&m).unwrap();
        assert_eq!(oracle.order, s.order);
        assert_eq!(oracle.makespan, s.makespan);
    }

    #[test]
    fn preprocessing_flags_impossible_pair() {
        let cfg = SolverConfig::default();
        let m = build_model(
            uniform_matrix(vec![0.0, 0.0], vec![50.0, 50.0], 64.0),
            &cfg,
        )
        .unwrap();
        assert!(m.infeasible_pre);
        let s = solve_exact(&m, &cfg);
        assert!(!s.feasible);
    }

    #[test]
    fn single_aircraft_lands_at_earliest() {
        let cfg = SolverConfig::default();
        let m = build_model(uniform_matrix(vec![42.0], vec![100.0], 64.0), &cfg).unwrap();
        let s = brute_force(&m).unwrap();
        assert!(s.feasible);
        assert_eq!(s.landing_times[0], 42.0);
        assert_eq!(s.makespan, 42.0);
    }

    #[test]
    fn build_model_errors() {
        let cfg = SolverConfig { n_max: 3, ..SolverConfig::default() };
        let m = uniform_matrix(vec![0.0; 5], vec![900.0; 5], 64.0);
        assert!(matches!(
            build_model(m, &cfg),
            Err(SchedulerError::TooManyAircraft { n: 5, n_max: 3 })
        ));
        let empty = uniform_matrix(vec![], vec![], 64.0);
        assert!(matches!(build_model(empty, &cfg), Err(SchedulerError::EmptyInstance)));
    }

    #[test]
    fn fcfs_entry_order_and_symmetric_optimality() {
        let cfg = SolverConfig::default();
        let m = build_model(
            uniform_matrix(vec![0.0; 3], vec![900.0; 3], 64.0),
            &cfg,
        )
        .unwrap();
        let flights = vec![flight("a", 10.0), flight("b", 20.0), flight("c", 30.0)];
        let base = fcfs(&flights, &m);
        assert!(base.feasible);
        assert_eq!(base.order, vec![0, 1, 2]);
        // Uniform symmetric instance: FCFS already optimal.
        let opt = solve_exact(&m, &cfg);
        assert_eq!(opt.makespan, base.makespan);
    }

    #[test]
    fn fcfs_infeasible_is_not_repaired() {
        let cfg = SolverConfig::default();
        // Entry order (0, 1) but flight 1's window closes before the
        // separation after flight 0 can elapse.
        let m = build_model(
            uniform_matrix(vec![100.0, 0.0], vec![900.0, 50.0], 64.0),
            &cfg,
        )
        .unwrap();
        let flights = vec![flight("a", 1.0), flight("b", 2.0)];
        let base = fcfs(&flights, &m);
        assert!(!base.feasible);
        assert_eq!(base.order, vec![0, 1]);
    }

    #[test]
    fn horizon_selection() {
        let cfg = SolverConfig::default();
        let flights: Vec<Flight> = (0..17).map(|i| flight(&format!("f{i:02}"), i as f64)).collect();
        let selected = select_horizon(&flights, &cfg);
        assert_eq!(selected.len(), 9);
        assert_eq!(selected[0].id, "f00");
        assert_eq!(selected[8].id, "f08");

        let few: Vec<Flight> = (0..5).map(|i| flight(&format!("f{i}"), i as f64)).collect();
        assert_eq!(select_horizon(&few, &cfg).len(), 5);

        // Entry-time ties broken by id.
        let tied = vec![flight("b", 5.0), flight("a", 5.0)];
        let sel = select_horizon(&tied, &cfg);
        assert_eq!(sel[0].id, "a");
    }

    #[test]
    fn comparison_identical_schedules() {
        let cfg = SolverConfig::default();
        let m = build_model(
            uniform_matrix(vec![0.0; 3], vec![900.0; 3], 64.0),
            &cfg,
        )
        .unwrap();
        let flights = vec![flight("a", 1.0), flight("b", 2.0), flight("c", 3.0)];
        let report = compare_solutions(solve_exact(&m, &cfg), fcfs(&flights, &m));
        assert_eq!(report.reduction_makespan, Some(0.0));
        assert_eq!(report.max_shift, 0);
    }

    #[test]
    fn case_study_shape_nine_large() {
        // Nine medium aircraft, 64 s separation everywhere, wide windows.
        let cfg = SolverConfig::default();
        let m = build_model(
            uniform_matrix(vec![0.0; 9], vec![3600.0; 9], 64.0),
            &cfg,
        )
        .unwrap();
        let s = solve_exact(&m, &cfg);
        assert!(s.feasible);
        assert_eq!(s.makespan, 8.0 * 64.0);
        assert!(check_constraints(&m, &s).is_empty());
        assert!(s.stats.proven);
    }
}
