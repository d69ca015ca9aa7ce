//! Experiment runner behind the command line: dispatches a config to the
//! checks and writes CSV, PGM and JSON artefacts plus a run summary.

use std::fs;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{ExperimentConfig, Kind};
use crate::dynamics::{self, BasinTarget, Classification, OrbitCoords, OrbitParams, Window};
use crate::error::{Error, Result};
use crate::g_example;
use crate::inf_space;
use crate::local_metrics::{self, SamplingConfig};
use crate::map_catalog::{DilatationProfile, MapSpec};
use crate::point::Point;
use crate::poly_type;
use crate::report::{fmt_f64, write_csv_file, CheckLine, RunSummary};

/// Process exit status for a finished or failed run.
pub fn exit_code(result: &Result<RunSummary>) -> i32 {
    match result {
        Ok(s) if s.pass => 0,
        Ok(_) => 1,
        Err(Error::Precision { .. }) => 3,
        Err(_) => 2,
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    sampling: SamplingConfig,
    summary: RunSummary,
}

impl Ctx<'_> {
    fn path(&mut self, name: &str) -> std::path::PathBuf {
        self.summary.files.push(name.to_string());
        self.cfg.out.join(name)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let p = self.path(name);
        write_csv_file(&p, header, rows)
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.summary.check(CheckLine::new(name, pass, detail));
    }
}

fn marked_point(map: &MapSpec, cfg: &ExperimentConfig) -> Result<Point> {
    match cfg.point("x0")? {
        Some(p) if p.dim() == map.dimension() => Ok(p),
        Some(p) if p.is_origin() => Ok(Point::origin(map.dimension())),
        Some(_) => Err(Error::Config("x0 has the wrong dimension".into())),
        None => map
            .marked_point()
            .map(|m| m.0)
            .ok_or_else(|| Error::Config(format!("{} has no marked point; give x0", map.name()))),
    }
}

/// Runs one experiment. Files written before an error are kept.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let start = Instant::now();
    fs::create_dir_all(&cfg.out)?;
    let sampling = SamplingConfig { tol: cfg.f64_or("tol", local_metrics::DEFAULT_TOL)?, seed: cfg.seed, sample_scale: 1 };
    let mut ctx = Ctx { cfg, sampling, summary: RunSummary::new(cfg.kind.as_str(), cfg.echo()) };
    match cfg.kind {
        Kind::ShellBounds => shell_bounds(&mut ctx)?,
        Kind::Holder => holder(&mut ctx)?,
        Kind::Monotonicity => monotonicity(&mut ctx)?,
        Kind::Orbit => orbit(&mut ctx)?,
        Kind::Basin => basin(&mut ctx)?,
        Kind::RateCompare => rate_compare(&mut ctx)?,
        Kind::ModulusGrowth => modulus_growth(&mut ctx)?,
        Kind::MinModulus => min_modulus(&mut ctx)?,
        Kind::Escape => escape(&mut ctx)?,
        Kind::GExample => g_example_run(&mut ctx)?,
        Kind::InfSpace => inf_space_run(&mut ctx)?,
    }
    ctx.summary.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    ctx.summary.write(&cfg.out)?;
    Ok(ctx.summary)
}

fn shell_bounds(ctx: &mut Ctx) -> Result<()> {
    let map = ctx.cfg.map()?;
    let x0 = marked_point(map, ctx.cfg)?;
    let j_max = ctx.cfg.usize_or("j_max", 8)? as u32;
    let ts = ctx.cfg.f64_list("t_grid")?.unwrap_or_else(local_metrics::default_t_grid);
    let grid = local_metrics::shell_grid(map, &x0, j_max, &ts, &ctx.sampling)?;
    let finer = local_metrics::shell_grid(map, &x0, j_max, &ts, &ctx.sampling.doubled())?;
    let p = grid.rows[0].profile;
    ctx.csv(
        "shell_bounds.csv",
        &["r", "T", "L_r_over_l_Tr", "l_r_over_L_Tr", "T^-mu", "T^-nu", "lower_ok", "upper_ok", "implied_C"],
        grid.rows.iter().map(|s| {
            vec![
                fmt_f64(s.r),
                fmt_f64(s.t),
                fmt_f64(s.ratio_max_min),
                fmt_f64(s.ratio_min_max),
                fmt_f64(s.t.powf(-p.mu)),
                fmt_f64(s.t.powf(-p.nu)),
                s.lower_ok.to_string(),
                s.upper_ok.to_string(),
                fmt_f64(s.implied_c),
            ]
        }),
    )?;
    let c = grid.max_implied_c;
    let change = (finer.max_implied_c / c - 1.0).abs();
    ctx.check("lower bounds", grid.all_lower_ok, format!("worst slack factor {}", fmt_f64(grid.worst_lower_margin)));
    ctx.check("upper bounds", grid.all_upper_ok, format!("with implied C = {}", fmt_f64(c)));
    ctx.check("implied C finite", c.is_finite(), fmt_f64(c));
    ctx.check("implied C stable under sample doubling", change < 0.01, format!("relative change {}", fmt_f64(change)));
    if p.k_inner == 1.0 && p.k_outer == 1.0 {
        ctx.check("conformal equality", c <= 1.0 + 1e-6, format!("implied C = {}", fmt_f64(c)));
    }
    ctx.summary.data = json!({ "r0": grid.r0, "implied_C": c, "implied_C_doubled": finer.max_implied_c, "profile": p });
    Ok(())
}

fn holder(ctx: &mut Ctx) -> Result<()> {
    let map = ctx.cfg.map()?;
    let x0 = marked_point(map, ctx.cfg)?;
    let n = ctx.cfg.usize_or("samples", 1000)?;
    let r0 = local_metrics::r0(map, &x0, &ctx.sampling)?;
    let ys = local_metrics::ball_samples(&x0, r0 * (1.0 - 1e-9), n, ctx.cfg.seed);
    let rep = local_metrics::check_holder_envelope(map, &x0, &ys, &ctx.sampling)?;
    ctx.csv(
        "holder.csv",
        &["dist", "image_dist"],
        rep.pairs.iter().map(|&(d, v)| vec![fmt_f64(d), fmt_f64(v)]),
    )?;
    ctx.check("envelope fit", rep.ok, format!("A = {}, B = {}", fmt_f64(rep.a), fmt_f64(rep.b)));
    if ctx.cfg.bool_or("unit_envelope", false)? {
        ctx.check("envelope with A = B = 1", rep.holds_with(1.0, 1.0, 1e-9), format!("mu = {}, nu = {}", rep.mu, rep.nu));
    }
    ctx.summary.data = json!({ "r0": r0, "mu": rep.mu, "nu": rep.nu, "A": rep.a, "B": rep.b });
    Ok(())
}

fn monotonicity(ctx: &mut Ctx) -> Result<()> {
    let map = ctx.cfg.map()?;
    let x0 = marked_point(map, ctx.cfg)?;
    let n = ctx.cfg.usize_or("points", 64)?;
    let r0 = local_metrics::r0(map, &x0, &ctx.sampling)?;
    let grid: Vec<f64> = (1..=n).map(|i| r0 * i as f64 / (n + 1) as f64).collect();
    let rep = local_metrics::check_monotonicity(map, &x0, &grid, &ctx.sampling)?;
    ctx.csv(
        "monotonicity.csv",
        &["r", "l", "L"],
        (0..grid.len()).map(|i| vec![fmt_f64(rep.radii[i]), fmt_f64(rep.l[i]), fmt_f64(rep.big_l[i])]),
    )?;
    ctx.check("l and L nondecreasing", rep.ok, format!("{} violations", rep.violations));
    ctx.summary.data = json!({ "r0": r0 });
    Ok(())
}

fn orbit_params(cfg: &ExperimentConfig, map: &MapSpec, x0: &Point, k_max: usize) -> Result<OrbitParams> {
    let mut p = if dynamics::uses_log_coords(map, x0) { OrbitParams::radial(k_max) } else { OrbitParams::sampled(k_max) };
    p.eps_conv = cfg.f64_or("eps", p.eps_conv)?;
    p.r_esc = cfg.f64_or("r_esc", p.r_esc)?;
    Ok(p)
}

fn orbit(ctx: &mut Ctx) -> Result<()> {
    let map = ctx.cfg.map()?;
    let x0 = marked_point(map, ctx.cfg)?;
    let x = ctx.cfg.point("x")?.ok_or_else(|| Error::Config("orbit needs x".into()))?;
    let k_max = ctx.cfg.usize_or("k_max", 100)?;
    let params = orbit_params(ctx.cfg, map, &x0, k_max)?;
    let t = dynamics::iterate_orbit(map, &x, &x0, &params)?;
    let dirs: Vec<String> = match &t.coords {
        OrbitCoords::Log(ps) => ps.iter().map(|p| p.dir.to_string()).collect(),
        OrbitCoords::Cartesian(ps) => ps.iter().map(|p| p.to_string()).collect(),
    };
    ctx.csv(
        "orbit.csv",
        &["k", "point_or_direction", "u", "a"],
        (0..t.len()).map(|k| {
            vec![k.to_string(), dirs[k].clone(), fmt_f64(t.u[k]), t.rate_seq[k].map(fmt_f64).unwrap_or_default()]
        }),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let ks: Vec<usize> = (0..3).map(|_| rng.gen_range(0..t.len().max(1))).collect();
    ctx.check("recurrence spot check", t.verify_recurrence(map, &ks)?, format!("k = {ks:?}"));
    let sw = dynamics::check_sandwich(map, &t, 1e-9, &ctx.sampling)?;
    ctx.check("sandwich by iterated extrema", sw.ok, format!("{} iterates, worst {}", sw.checked, fmt_f64(sw.worst_violation)));
    ctx.summary.data = json!({ "classification": t.classification, "iterates": t.len() - 1 });
    Ok(())
}

fn window(cfg: &ExperimentConfig, default: f64) -> Result<Window> {
    match cfg.f64_list("window")? {
        None => Ok(Window::square(default)),
        Some(v) if v.len() == 4 && v[0] < v[1] && v[2] < v[3] => {
            Ok(Window { x_min: v[0], x_max: v[1], y_min: v[2], y_max: v[3] })
        }
        Some(_) => Err(Error::Config("window must be xmin,xmax,ymin,ymax with min < max".into())),
    }
}

fn resolution(cfg: &ExperimentConfig, default: usize) -> Result<(usize, usize)> {
    let v = cfg.get("res").map(|s| {
        s.split([',', 'x'])
            .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad resolution '{s}'"))))
            .collect::<Result<Vec<usize>>>()
    });
    match v.transpose()?.as_deref() {
        None => Ok((default, default)),
        Some([n]) if *n > 0 => Ok((*n, *n)),
        Some([w, h]) if *w > 0 && *h > 0 => Ok((*w, *h)),
        _ => Err(Error::Config("res must be N or W,H".into())),
    }
}

fn basin(ctx: &mut Ctx) -> Result<()> {
    let map = ctx.cfg.map()?;
    let w = window(ctx.cfg, 1.5)?;
    let res = resolution(ctx.cfg, 512)?;
    let k_max = ctx.cfg.usize_or("k_max", 200)?;
    let (target, params) = match ctx.cfg.get("target").unwrap_or("origin") {
        "infinity" => (BasinTarget::Infinity, orbit_params(ctx.cfg, map, &Point::origin(2), k_max)?),
        s => {
            let p = crate::config::parse_point(s)?;
            (BasinTarget::Point(p), orbit_params(ctx.cfg, map, &p, k_max)?)
        }
    };
    let grid = dynamics::classify_basin_grid(map, target, w, res, &params, ctx.cfg.bool_or("override", false)?)?;
    let p = ctx.path("basin.pgm");
    fs::write(p, grid.to_pgm())?;
    let p = ctx.path("basin_iterations.csv");
    grid.write_iterations_csv(fs::File::create(p)?)?;
    let counts = json!({
        "converged": grid.count(Classification::ConvergedToFixedPoint),
        "preimage": grid.count(Classification::HitPreimageOfFixedPoint),
        "escaped": grid.count(Classification::EscapedDomain),
        "max_iter": grid.count(Classification::MaxIter),
    });
    ctx.check("grid classified", grid.classes.len() == res.0 * res.1, format!("{counts}"));
    ctx.summary.data = json!({ "width": res.0, "height": res.1, "window": w, "counts": counts });
    Ok(())
}

fn ratio_rows(pairs: &[(usize, usize, Vec<f64>)], j: usize) -> Vec<Vec<String>> {
    pairs
        .iter()
        .flat_map(|(a, b, rs)| {
            rs.iter().enumerate().map(move |(i, r)| vec![a.to_string(), b.to_string(), (i + j).to_string(), fmt_f64(*r)])
        })
        .collect()
}

fn rate_compare(ctx: &mut Ctx) -> Result<()> {
    let map = ctx.cfg.map()?;
    let pts = ctx.cfg.points("points")?.ok_or_else(|| Error::Config("rate-compare needs points".into()))?;
    if pts.len() < 2 {
        return Err(Error::Config("rate-compare needs at least two points".into()));
    }
    let k_max = ctx.cfg.usize_or("k_max", 50)?;
    let (cmp, alpha, shift) = if ctx.cfg.get("target") == Some("infinity") {
        let (c, p) = poly_type::escape_rate_compare(map, &pts[0], &pts[1], k_max)?;
        let (a, _) = poly_type::escape_alpha(map, &pts, k_max)?;
        (c, a, p)
    } else {
        let x0 = marked_point(map, ctx.cfg)?;
        let c = dynamics::find_overtake_lag(map, &pts[0], &pts[1], &x0, k_max)?;
        (c, dynamics::estimate_alpha(map, &pts, &x0, k_max)?, 0)
    };
    ctx.csv("rate_compare.csv", &["a", "b", "k", "log_ratio"], ratio_rows(&alpha.pair_ratios, alpha.j))?;
    ctx.check("overtaking lag found", cmp.n_found.is_some(), format!("N = {:?}, j = {}", cmp.n_found, cmp.j));
    ctx.check(
        "alpha stabilised",
        alpha.stabilized,
        format!("alpha = {} (at k_max {}), partial = {}", fmt_f64(alpha.alpha_est), fmt_f64(alpha.alpha_at_k_max), alpha.partial),
    );
    ctx.summary.data = json!({ "comparison": cmp, "alpha": alpha.alpha_est, "alpha_at_k_max": alpha.alpha_at_k_max,
        "j": alpha.j, "k_used": alpha.k_used, "shift": shift });
    Ok(())
}

fn decade_grid(lo: f64, decades: usize, per: usize) -> Vec<f64> {
    (0..=decades * per).map(|i| lo * 10f64.powf(i as f64 / per as f64)).collect()
}

fn modulus_growth(ctx: &mut Ctx) -> Result<()> {
    let map = ctx.cfg.map()?;
    let s = ctx.cfg.f64_or("S", 2.0)?;
    let grid = decade_grid(ctx.cfg.f64_or("r_min", 2.0)?, ctx.cfg.usize_or("decades", 4)?, ctx.cfg.usize_or("per_decade", 8)?);
    let rep = poly_type::check_m_ratio_bounded(map, s, &grid, &ctx.sampling)?;
    let mods: Vec<poly_type::Modulus> =
        grid.iter().map(|&r| poly_type::modulus(map, r, &ctx.sampling)).collect::<Result<_>>()?;
    ctx.csv(
        "modulus_table.csv",
        &["r", "M", "m"],
        mods.iter().map(|m| vec![fmt_f64(m.r), fmt_f64(m.big_m()), fmt_f64(m.small_m())]),
    )?;
    ctx.csv("m_ratio.csv", &["r", "ratio"], rep.log_ratios.iter().map(|&(r, l)| vec![fmt_f64(r), fmt_f64(l.exp())]))?;
    let routes = mods.iter().all(|m| m.routes_agree(poly_type::ROUTE_TOL));
    if rep.transcendental {
        ctx.check("ratio unbounded (transcendental contrast)", rep.ok, format!("sup ratio {}", fmt_f64(rep.sup_ratio)));
    } else {
        ctx.check(
            "ratio bounded",
            rep.ok,
            format!("sup {}, last decade {}", fmt_f64(rep.sup_ratio), fmt_f64(rep.last_decade_max)),
        );
        ctx.check("direct and conjugate modulus agree", routes, format!("tolerance {}", poly_type::ROUTE_TOL));
    }
    ctx.summary.data = json!({ "S": s, "sup_ratio": rep.sup_ratio, "transcendental": rep.transcendental });
    Ok(())
}

fn min_modulus(ctx: &mut Ctx) -> Result<()> {
    let map = ctx.cfg.map()?;
    poly_type::check_degree_gate(map)?;
    let table = poly_type::ModulusTable::build(map, 60.0, 241, &ctx.sampling)?;
    let (s0, r_min) = poly_type::search_s0_r(&table)
        .ok_or_else(|| Error::Inapplicable(format!("{}: no S0 on the search grid", map.name())))?;
    let ss = ctx.cfg.f64_list("S")?.unwrap_or_else(|| vec![2.0 * s0]);
    let r = ctx.cfg.f64_or("r", r_min)?;
    let k_max = ctx.cfg.usize_or("k_max", 20)?;
    let rep = poly_type::check_min_modulus_growth(map, &ss, r, k_max, &ctx.sampling)?;
    ctx.csv("iterated.csv", &["k", "logM_k", "logm_k"], table.iterated_rows(r, ss[0] * r, k_max))?;
    ctx.csv(
        "min_modulus.csv",
        &["S", "r", "k", "log_S_M_k", "log_m_k_Sr"],
        rep.rows.iter().map(|w| vec![fmt_f64(w.s), fmt_f64(w.r), w.k.to_string(), fmt_f64(w.lhs), fmt_f64(w.rhs)]),
    )?;
    ctx.check(
        "S M^k(r) < m^k(S r)",
        rep.violations == 0,
        format!("S0 = {}, R = {}, worst log margin {}", fmt_f64(rep.s0), fmt_f64(rep.r_min), fmt_f64(rep.worst_log_margin)),
    );
    ctx.check("table cross-check", rep.table_cross_check <= poly_type::ROUTE_TOL, fmt_f64(rep.table_cross_check));
    ctx.summary.data = json!({ "S0": rep.s0, "R": rep.r_min, "S": ss, "r": r });
    Ok(())
}

/// Smallest `R = 2^j >= 1` passing the escape-radius precondition.
fn default_escape_radius(map: &MapSpec, cfg: &SamplingConfig) -> Result<f64> {
    (0..40)
        .map(|j| 2f64.powi(j))
        .find(|&r| poly_type::check_escape_radius(map, r, cfg).is_ok())
        .ok_or_else(|| Error::Config(format!("{}: no escape radius found", map.name())))
}

fn escape(ctx: &mut Ctx) -> Result<()> {
    let map = ctx.cfg.map()?;
    let big_r = match ctx.cfg.get("R") {
        Some(_) => ctx.cfg.f64_or("R", 0.0)?,
        None => default_escape_radius(map, &ctx.sampling)?,
    };
    let w = window(ctx.cfg, 4.0)?;
    let (nx, ny) = resolution(ctx.cfg, 32)?;
    let k_max = ctx.cfg.usize_or("k_max", 100)?;
    let max_l = ctx.cfg.usize_or("max_L", 5)?;
    let starts: Vec<Point> = (0..ny).flat_map(|j| (0..nx).map(move |i| w.pixel_center(i, j, nx, ny))).collect();
    let vs = poly_type::escape_verdicts(map, &starts, big_r, k_max, &ctx.sampling)?;
    ctx.csv(
        "verdicts.csv",
        &["x", "in_I", "in_A", "L"],
        starts.iter().zip(&vs).map(|(x, v)| {
            vec![x.to_string(), v.in_i.to_string(), v.in_a.to_string(), v.l_witness.map(|l| l.to_string()).unwrap_or_default()]
        }),
    )?;
    let in_i = vs.iter().filter(|v| v.in_i).count();
    let artefacts = vs.iter().filter(|v| v.horizon_artifact).count();
    let worst_l = vs.iter().filter_map(|v| v.l_witness).max();
    let good = vs.iter().all(|v| !v.in_i || v.l_witness.is_some_and(|l| l <= max_l));
    ctx.check(
        "escaping points escape fast",
        good,
        format!("{in_i} escaping, {artefacts} horizon artefacts, largest L {worst_l:?}"),
    );
    let cutoff = crate::map_catalog::inversion_cutoff(map)?;
    let defect = poly_type::conjugation_identity_defect(map, &decade_grid(2.0 * cutoff, 4, 4), &ctx.sampling)?;
    ctx.check("conjugation identities", defect <= 1e-6, format!("largest defect {}", fmt_f64(defect)));
    ctx.summary.data = json!({ "R": big_r, "starts": vs.len(), "escaping": in_i, "largest_L": worst_l });
    Ok(())
}

fn g_example_run(ctx: &mut Ctx) -> Result<()> {
    let sched = crate::config::schedule_from(&ctx.cfg.params, &ctx.cfg.base_dir)?;
    let k_max = ctx.cfg.usize_or("k_max", 100_000)?;
    let tol = ctx.cfg.f64_or("tol", 0.05)?;
    let p = ctx.path("schedule.json");
    fs::write(p, sched.to_json()? + "\n")?;
    let rep = g_example::verify_oscillation(&sched, k_max);
    ctx.csv(
        "oscillation.csv",
        &["k", "average"],
        rep.averages.iter().map(|&(k, a)| vec![k.to_string(), fmt_f64(a)]),
    )?;
    ctx.csv(
        "blocks.csv",
        &["branch", "start", "len", "rate"],
        rep.block_rates
            .iter()
            .map(|b| vec![if b.fast { "fast" } else { "slow" }.into(), b.start.to_string(), b.len.to_string(), fmt_f64(b.rate)]),
    )?;
    let defect = sched.continuity_defect();
    ctx.check("continuity at the seams", defect <= 1e-9, format!("largest log defect {}", fmt_f64(defect)));
    ctx.check("boundaries interlace", sched.interlaced(), format!("{} pairs", sched.pairs()));
    let sim = sched.simulate_counts(k_max.max(1_000_000));
    ctx.check("counts realised", sim == sched.counts, format!("{:?}", sched.counts));
    ctx.check(
        "window extremes near log(2K)",
        rep.dist_hi <= tol,
        format!("max {} vs {} (distance {})", fmt_f64(rep.window_max), fmt_f64(rep.target_hi), fmt_f64(rep.dist_hi)),
    );
    ctx.check(
        "window extremes near log(2/K)",
        rep.dist_lo <= tol,
        format!("min {} vs {} (distance {})", fmt_f64(rep.window_min), fmt_f64(rep.target_lo), fmt_f64(rep.dist_lo)),
    );
    ctx.summary.data = json!({
        "window": rep.window, "window_min": rep.window_min, "window_max": rep.window_max,
        "k_reached": rep.k_reached, "truncated": sched.truncated, "pairs": sched.pairs(),
    });
    Ok(())
}

fn inf_space_run(ctx: &mut Ctx) -> Result<()> {
    let map = ctx.cfg.map()?;
    let x0 = marked_point(map, ctx.cfg)?;
    let r0 = local_metrics::r0(map, &x0, &ctx.sampling)?;
    let r_seq = inf_space::default_r_seq(r0, ctx.cfg.usize_or("j_max", 10)? as i32);
    let moduli = inf_space::default_moduli(ctx.cfg.usize_or("moduli", 64)?);
    let rep = inf_space::check_infinitesimal_envelope(map, &x0, &r_seq, &moduli, &ctx.sampling)?;
    let p = ctx.path("inf_space.csv");
    rep.write_csv(fs::File::create(p)?)?;
    ctx.check(
        "rescaled maps inside the envelope",
        rep.ok,
        format!("C = {}, {} violations, worst log margin {}", fmt_f64(rep.c), rep.violations, fmt_f64(rep.worst_log_margin)),
    );
    ctx.summary.data = json!({ "r0": r0, "implied_C": rep.implied_c, "bracket_slack": rep.bracket_slack, "C": rep.c });
    Ok(())
}

fn profile_text(p: &DilatationProfile) -> String {
    format!("K_I={} K_O={} i={} mu={} nu={}", p.k_inner, p.k_outer, p.local_index, fmt_num(p.mu), fmt_num(p.nu))
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Families, parameter grammar and certified profile constants.
pub fn list_catalog() -> String {
    let rows: [(&str, &str, &str); 7] = [
        ("winding{K=<int>}", "planar (r,theta) -> (r,K theta)", "K_I=K_O=K, i=K at 0 and infinity; not strongly superattracting"),
        ("power{d=<int>}", "planar z -> z^d", "conformal: K_I=K_O=1, i=d, mu=nu=d"),
        ("radial_stretch{alpha=<real>,n=<2|3>}", "x -> x |x|^(alpha-1) in R^n", "K_I=alpha, K_O=alpha^(n-1), i=1"),
        (
            "stretch_square{lambda=<real>}",
            "planar (x + i lambda y)^2",
            "K_I=K_O=lambda, i=2; strongly superattracting at infinity iff lambda<2",
        ),
        (
            "pure_annulus_power{K=<real>,branch=<fast|slow>}",
            "planar z^2 |z|^(2K-2) or z^2 |z|^(2/K-2)",
            "K_I=K_O=K, i=2, mu=2/K, nu=2K",
        ),
        (
            "g_example{K=<real>,c=<int>,m=<int>,u0=<real>} | g_example{schedule=<path.json>}",
            "piecewise power map on the closed unit disc with fast and slow annuli; schedule JSON input with fields K, start_u, u_boundaries_r, u_boundaries_s, logA, logB, counts",
            "K_I=K_O=K, i=2 at 0, mu=2/K, nu=2K",
        ),
        ("conformal_exp", "planar z -> e^z (transcendental contrast)", "conformal, locally injective at 0"),
    ];
    let examples: [Result<MapSpec>; 6] = [
        MapSpec::winding(3),
        MapSpec::power(2),
        MapSpec::radial_stretch(2.0, 3),
        MapSpec::stretch_square(1.5),
        MapSpec::pure_annulus_power(1.5, crate::map_catalog::Branch::Fast),
        Ok(MapSpec::conformal_exp()),
    ];
    let mut out = String::new();
    for (i, (grammar, what, consts)) in rows.iter().enumerate() {
        out.push_str(&format!("{grammar}\n    {what}\n    {consts}\n"));
        let ex = match i {
            0..=4 => examples[i].as_ref().ok(),
            6 => examples[5].as_ref().ok(),
            _ => None,
        };
        if let Some(m) = ex {
            if let Some((_, p)) = m.marked_point() {
                out.push_str(&format!("    e.g. {}: {}\n", m.name(), profile_text(&p)));
            }
        }
    }
    out
}
