"""Acceptance criteria. Each test prints one PASS/FAIL line before asserting."""
import time

import numpy as np
import pytest

import lori.optimizer as opt_mod
import lori.simulation as sim_mod
from lori import experiments as X
from lori.config import load_config, with_seeds
from lori.costs import bpr_travel_time, co_emission_rate
from lori.graph import EdgeAttributes
from lori.optimizer import OptimizerParams, optimize_signal
from lori.qre import NormalFormGame, QreParams, logit_response, solve_qre
from lori.signaling import Signal, psi_recursion

from conftest import desk_context
from oracles import damped_fixed_point, grid_rows
from test_signaling import brute_force_counts


@pytest.fixture
def verdict(capsys):
    def report(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        assert ok, detail
    return report


def _residual(game, profile, alpha):
    return max(float(np.max(np.abs(profile[i] - logit_response(game, profile, i, alpha))))
               for i in range(game.n_players))


# ----- 1 ---------------------------------------------------------------------------------------

def test_criterion1_cost_model_values(verdict):
    t0 = time.perf_counter()
    errs = []
    for f, c, l in [(5.0, 10, 2.0), (2.85, 2, 6.6), (1.0, 1, 0.5), (12.5, 7, 3.0)]:
        e = EdgeAttributes(mode="car", model="road", free_flow_time=f, capacity=c, length_km=l)
        errs.append(abs(bpr_travel_time(e, 0) - f))
        errs.append(abs(bpr_travel_time(e, c) - f * 1.15))
    flat = EdgeAttributes(mode="car", model="road", free_flow_time=1.0, capacity=1, length_km=0.0)
    for tt in (0.5, 1.0, 5.75, 10.0, 42.0):
        errs.append(abs(co_emission_rate(flat, tt) - 0.2038 * tt))
    dt = time.perf_counter() - t0
    ok = max(errs) <= 1e-12 and dt < 1.0
    verdict(1, ok, f"max error {max(errs):.2e} (tol 1e-12), {dt:.3f} s")


# ----- 2 ---------------------------------------------------------------------------------------

def test_criterion2_psi_oracle(verdict):
    t0 = time.perf_counter()
    worst = worst_mean = 0.0
    for case in range(200):
        rng = np.random.default_rng([case, 2])
        n = int(rng.integers(0, 13))
        rhos = rng.random(n)
        rhos[rng.random(n) < 0.1] = 1.0
        got = psi_recursion(rhos, n)
        worst = max(worst, float(np.max(np.abs(got - brute_force_counts(rhos)))))
        worst_mean = max(worst_mean, abs(float(got @ np.arange(n + 1)) - float(rhos.sum())))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and worst_mean <= 1e-12 and dt < 10
    verdict(2, ok, f"200 cases, max |psi - brute force| {worst:.2e}, max mean error {worst_mean:.2e}, {dt:.2f} s")


# ----- 3 ---------------------------------------------------------------------------------------

def _shipped_games(monkeypatch):
    """Every game solved while running one seed of each Scenario 1 experiment."""
    games = []
    real = opt_mod.solve_qre

    def spy(game, params, warm_start=None):
        res = real(game, params, warm_start)
        games.append((game, params.target_alpha, res.profile))
        return res

    monkeypatch.setattr(opt_mod, "solve_qre", spy)
    cfg = with_seeds(load_config(), [0])
    specs = (X.experiment1_specs(cfg)[:2] + X.experiment2_specs(cfg)[::4] + X.experiment3_specs(cfg))
    X.run_all(cfg, specs, workers=1)
    return games


def test_criterion3_qre(verdict, monkeypatch):
    t0 = time.perf_counter()
    # (a) alpha = 0 is exactly uniform
    rng = np.random.default_rng(3)
    a_ok = True
    for _ in range(20):
        shape = tuple(int(rng.integers(2, 5)) for _ in range(int(rng.integers(1, 4))))
        game = NormalFormGame([rng.random(shape) for _ in shape])
        prof = solve_qre(game, QreParams(target_alpha=0.0)).profile
        a_ok &= all(np.array_equal(v, np.full(k, 1.0 / k)) for v, k in zip(prof.vectors, shape))

    # (b) residual on every game the shipped scenarios solve
    games = _shipped_games(monkeypatch)
    multi = [g for g in games if g[0].n_players > 1]
    b_res = max(_residual(g, p, a) for g, a, p in games)

    # (c) agreement with damped fixed-point iteration
    compared, c_err = 0, 0.0
    for seed in range(120):
        r = np.random.default_rng([seed, 3])
        shape = tuple(int(r.integers(2, 5)) for _ in range(int(r.integers(1, 4))))
        costs = [r.random(shape) for _ in shape]
        alpha = float(r.uniform(0.5, 4.0))
        res = solve_qre(NormalFormGame(costs), QreParams(target_alpha=alpha))
        ref, converged = damped_fixed_point(costs, alpha)
        if converged:
            compared += 1
            c_err = max(c_err, max(float(np.max(np.abs(x - y))) for x, y in zip(ref, res.profile.vectors)))

    # (d) symmetric 2x2 game stays at (0.5, 0.5) along the whole trace
    m = np.array([[1.0, -1.0], [-1.0, 1.0]])
    trace = solve_qre(NormalFormGame([m, -m]), QreParams(target_alpha=10.0)).trace
    d_err = max(float(np.max(np.abs(x - 0.5))) for _, x in trace)

    dt = time.perf_counter() - t0
    ok = a_ok and b_res < 1e-6 and compared >= 100 and c_err <= 1e-6 and d_err <= 1e-9 and dt < 60
    verdict(3, ok, f"(a) uniform {a_ok}; (b) max residual {b_res:.2e} over {len(games)} shipped games "
                   f"({len(multi)} multi-player); (c) {compared} oracle games, max diff {c_err:.2e}; "
                   f"(d) symmetric drift {d_err:.1e} over {len(trace)} trace points; {dt:.1f} s")


# ----- 4 ---------------------------------------------------------------------------------------

def test_criterion4_signal_optimizer_oracle(verdict):
    t0 = time.perf_counter()
    gaps, row_errs, start_ok = [], [], True
    for observed in range(3):
        ctx, road = desk_context(observed=observed)
        res = optimize_signal(ctx, OptimizerParams(restarts=3))
        grid_best = np.inf
        for row in grid_rows(3, 0.05):
            mat = np.eye(3)
            mat[observed] = row
            grid_best = min(grid_best, ctx.system_cost(Signal({road: mat})))
        gaps.append(res.objective - grid_best)
        row_errs.append(res.signal.max_row_error())
        start_ok &= res.objective <= min(res.start_objectives["identity"], res.start_objectives["uniform"]) + 1e-12
    dt = time.perf_counter() - t0
    ok = max(gaps) <= 1e-3 and max(row_errs) <= 1e-9 and start_ok and dt < 300
    verdict(4, ok, f"objective - grid optimum: {', '.join(f'{g:+.2e}' for g in gaps)} (tol 1e-3); "
                   f"row error {max(row_errs):.1e}; beats identity/uniform starts {start_ok}; {dt:.1f} s")


# ----- 5 ---------------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion5_scenario1_directions(verdict):
    t0 = time.perf_counter()
    cfg = load_config()
    assert len(cfg.seeds) >= 10
    curves = X.experiment2_curves(X.run_all(cfg, X.experiment2_specs(cfg)))
    weights = sorted(curves["lori"])
    gaps = {a: curves["sssp"][a] - curves["lori"][a] for a in weights}
    a_ok = all(curves["lori"][a] <= curves["sssp"][a] + 1e-6 for a in weights)
    b_ok = max(gaps, key=gaps.get) == 0.0
    summary = X.experiment1_summary(X.run_all(cfg, X.experiment1_specs(cfg)))
    c_ok = summary["lori"]["system_cost"] < summary["sssp"]["system_cost"]
    dt = time.perf_counter() - t0
    ok = a_ok and b_ok and c_ok and dt < 30 * 60
    verdict(5, ok, f"{len(cfg.seeds)} seeds; (a) pointwise LoRI <= SSSP {a_ok}; (b) largest gap at weight "
                   f"{max(gaps, key=gaps.get):g} ({gaps[0.0] / curves['sssp'][0.0]:.1%}); (c) experiment 1 "
                   f"{summary['lori']['system_cost']:.4f} vs {summary['sssp']['system_cost']:.4f}; {dt:.0f} s")


# ----- 6 ---------------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion6_scenario2_trends(verdict):
    t0 = time.perf_counter()
    cfg = load_config()
    s2 = cfg.scenario2
    reports = []
    for x in s2.lori_counts:
        reports += X.run_all(cfg, X.scenario2_specs(cfg, x))
    for x in s2.runtime_counts:
        if x not in s2.lori_counts:
            reports += X.run_all(cfg, X.scenario2_specs(cfg, x, budget_s=s2.runtime_budget_s, include_sssp=False))
    lori = {x: X.mean_by([r for r in reports if r.spec.arm == "lori" and r.spec.lori_travelers == x],
                         lambda r: 0)[0] for x in s2.lori_counts}
    sssp = {x: X.mean_by([r for r in reports if r.spec.arm == "sssp" and r.spec.run.split("-x")[1].startswith(f"{x}-")],
                         lambda r: 0)[0] for x in s2.lori_counts}
    below = all(lori[x] < sssp[x] for x in s2.lori_counts)
    xs = sorted(s2.lori_counts)
    monotone = all(lori[b] <= lori[a] for a, b in zip(xs, xs[1:]))
    rt = X.runtime_summary(reports)
    per_dec = {x: rt[x][0] for x in sorted(rt)}
    ratio = {x: rt[x][0] / rt[x][1] for x in sorted(rt)}
    rxs = sorted(per_dec)
    increasing = all(per_dec[b] > per_dec[a] for a, b in zip(rxs, rxs[1:]))
    superlinear = ratio[4] / ratio[3] > ratio[3] / ratio[2]
    dt = time.perf_counter() - t0
    ok = below and monotone and increasing and superlinear and dt < 60 * 60
    costs = ", ".join(f"x={x}: {lori[x]:.4f} vs {sssp[x]:.4f}" for x in xs)
    times = ", ".join(f"x={x}: {per_dec[x] * 1e3:.1f} ms" for x in rxs)
    verdict(6, ok, f"LoRI < SSSP {below} ({costs}); non-increasing {monotone}; per-decision {times} "
                   f"increasing {increasing}; ratio(4)/ratio(3) = {ratio[4] / ratio[3]:.2f} vs "
                   f"ratio(3)/ratio(2) = {ratio[3] / ratio[2]:.2f}; {dt:.0f} s")


# ----- 7 ---------------------------------------------------------------------------------------

def test_criterion7_determinism(verdict, tmp_path):
    cfg = with_seeds(load_config(), [0, 1])
    specs = (X.experiment1_specs(cfg)[:4] + X.experiment2_specs(cfg)[:4] + X.experiment3_specs(cfg)[:4]
             + X.scenario2_specs(cfg, 2, seeds=[0]))
    first = X.write_outputs(tmp_path / "first", X.run_all(cfg, specs, workers=1))
    second = X.write_outputs(tmp_path / "second", X.run_all(cfg, specs, workers=2))
    same = {k: first[k].read_bytes() == second[k].read_bytes() for k in ("report", "timeline", "signals")}
    verdict(7, all(same.values()), f"{len(specs)} runs re-run (serial vs 2 workers); identical files: {same}")


# ----- 8 ---------------------------------------------------------------------------------------

def test_criterion8_conservation(verdict, monkeypatch):
    stats = {"ticks": 0, "beliefs": 0, "signals": 0, "psi": 0, "profiles": 0}
    worst = {"count": 0, "row": 0.0}

    def rows_ok(a):
        a = np.asarray(a, dtype=float)
        worst["row"] = max(worst["row"], float(np.max(np.abs(a.sum(axis=-1) - 1.0))))

    real_bayes = sim_mod.bayes_update

    def bayes_spy(prior, signal):
        for v in prior.values():
            rows_ok(v)
            stats["beliefs"] += 1
        for m in signal.matrices.values():
            rows_ok(m)
            stats["signals"] += 1
        post = real_bayes(prior, signal)
        for v in post.values():
            rows_ok(v)
            stats["beliefs"] += 1
        return post

    real_pb = opt_mod.poisson_binomial

    def pb_spy(rhos):
        out = real_pb(rhos)
        rows_ok(out)
        stats["psi"] += 1
        return out

    real_qre = opt_mod.solve_qre

    def qre_spy(game, params, warm_start=None):
        res = real_qre(game, params, warm_start)
        for v in res.profile.vectors:
            rows_ok(v)
            stats["profiles"] += 1
        return res

    real_step = sim_mod.Simulation.step

    def step_spy(self):
        chosen = real_step(self)
        on_edges = np.zeros_like(self.state.counts)
        for r in self.state.travelers.values():
            if r.en_route:
                on_edges[r.edge] += 1
        worst["count"] = max(worst["count"], int(np.max(np.abs(on_edges - self.state.counts))),
                             abs(int(self.state.counts.sum()) - len(self.state.en_route_ids())))
        stats["ticks"] += 1
        return chosen

    monkeypatch.setattr(sim_mod, "bayes_update", bayes_spy)
    monkeypatch.setattr(opt_mod, "bayes_update", bayes_spy)
    monkeypatch.setattr(opt_mod, "poisson_binomial", pb_spy)
    monkeypatch.setattr(opt_mod, "solve_qre", qre_spy)
    monkeypatch.setattr(sim_mod.Simulation, "step", step_spy)

    cfg = with_seeds(load_config(), [0, 1])
    specs = (X.experiment1_specs(cfg) + X.experiment3_specs(cfg) + X.scenario2_specs(cfg, 3, seeds=[0]))
    reports = X.run_all(cfg, specs, workers=1)
    checked = sum(r.result.conservation_checks for r in reports)
    ok = worst["count"] == 0 and worst["row"] <= 1e-9 and stats["ticks"] == checked > 0
    verdict(8, ok, f"{stats['ticks']} ticks, count mismatch {worst['count']}; max row error {worst['row']:.1e} over "
                   f"{stats['beliefs']} beliefs, {stats['signals']} signals, {stats['psi']} psi batches, "
                   f"{stats['profiles']} QRE profiles")
