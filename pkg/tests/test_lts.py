import numpy as np
import pytest

from alelts.errors import ConfigurationError, DeadlockError, InvalidStateError, MeshTanglingError
from alelts.lts import (
    Solver,
    ale_speeds,
    causal_step_bound,
    local_cfl_step,
    next_times,
    updatable_mask,
)
from alelts.systems import Euler


def random_problem(seed, contrast=0.5):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 20))
    M = int(rng.integers(1, 4))
    nodes = np.concatenate(([0.0], np.cumsum(rng.uniform(0.2, 1.8, n))))
    w = np.column_stack((
        rng.uniform(1 - contrast, 1 + contrast, n),
        rng.uniform(-contrast, contrast, n),
        rng.uniform(1 - contrast, 1 + contrast, n),
    ))
    return nodes, w, M, 0.3 * nodes[-1] / n


def sod(n=40, M=2, **kw):
    e = Euler(1.4)
    nodes = np.linspace(-0.5, 0.5, n + 1)
    w = np.where((0.5 * (nodes[1:] + nodes[:-1]) < 0.0)[:, None], [1.0, 0.0, 1.0], [0.125, 0.0, 0.1])
    return Solver(e, nodes, e.to_conserved(w), M, kw.pop("t_end", 0.1), **kw)


# --------------------------------------------------------------- scheduler
def test_updatable_mask_ties_and_blocking():
    t = np.zeros(5)
    assert updatable_mask(t, np.full(5, 1.0), 2.0, 2).all()
    t_next = np.array([1.0, 0.5, 1.0, 1.0, 1.0])
    # cells within radius 1 of the earliest target must wait
    assert updatable_mask(t, t_next, 2.0, 1).tolist() == [False, True, False, True, True]
    assert updatable_mask(t, t_next, 2.0, 2).tolist() == [False, True, False, False, True]


def test_updatable_mask_waits_for_stencil_data():
    t_cell = np.array([0.0, 0.0, 0.8])
    t_next = np.array([0.5, 1.0, 1.5])
    # cell 1 targets 1.0 but its left neighbour only reaches 0.5
    assert updatable_mask(t_cell, t_next, 2.0, 1).tolist() == [True, False, False]
    # a neighbour already past the target cannot supply data at 1.0
    t_cell = np.array([0.0, 1.2])
    assert updatable_mask(t_cell, np.array([1.0, 2.0]), 2.0, 1).tolist() == [False, False]


def test_finished_cells_are_never_updatable():
    t = np.array([1.0, 1.0])
    assert not updatable_mask(t, t, 1.0, 1).any()


def test_next_times_snap_to_end():
    np.testing.assert_array_equal(next_times(np.array([0.0, 0.9]), np.array([0.5, 0.1 - 1e-16]), 1.0), [0.5, 1.0])


def test_local_cfl_step():
    dt = local_cfl_step([[1.0, 2.0, np.nan]], [[2.0, 1.0, np.nan]], 0.5, 0.0, 10.0)
    assert dt[0] == pytest.approx(0.25)
    assert local_cfl_step([[1.0]], [[1.0]], 0.5, 9.9, 10.0)[0] == pytest.approx(0.1)
    with pytest.raises(MeshTanglingError):
        local_cfl_step([[0.0]], [[1.0]], 0.5, 0.0, 1.0)


def test_causal_step_bound_uses_distant_cells():
    widths = np.ones(5)
    speeds = np.array([100.0, 1.0, 1.0, 1.0, 1.0])
    bound = causal_step_bound(np.array([2, 4]), widths, speeds, 0.5)
    # cell 0 reaches cell 2 after crossing cells 1 and 0 itself: 2 widths
    assert bound[0] == pytest.approx(0.5 * 2.0 / 100.0)
    assert bound[1] == pytest.approx(0.5 * 4.0 / 100.0)


def test_ale_speeds_use_edge_velocities():
    e = Euler(1.4)
    q = e.to_conserved(np.array([[1.0, 0.0, 1.0 / 1.4], [1.0, 2.0, 1.0 / 1.4], [1.0, 2.0, 1.0 / 1.4]]))
    s = ale_speeds(e, q, np.ones(3, dtype=bool), "fluid-u")
    # middle cell: edge speeds 1 and 2, own u = 2, c = 1 -> max |2 +- 1 - 1|
    assert s[1] == pytest.approx(2.0)
    assert s[2] == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(100))
def test_scheduler_progress_on_random_data(seed):
    nodes, w, M, t_end = random_problem(seed)
    e = Euler(1.4)
    s = Solver(e, nodes, e.to_conserved(w), M, t_end, velocity=("fluid-u", "zero")[seed % 2])
    report = s.run()
    assert np.all(s.t_cell == t_end)
    assert report.cycles <= 50 * len(w)
    assert report.conservation_rel.max() <= 1e-12


# ------------------------------------------------------------- invariants
@pytest.mark.parametrize("M", [1, 2, 3])
def test_constant_state_preserved_over_50_lts_cycles(M):
    e = Euler(1.4)
    rng = np.random.default_rng(M)
    nodes = np.concatenate(([0.0], np.cumsum(rng.uniform(0.2, 2.0, 30))))
    q0 = e.to_conserved(np.array([1.3, 0.6, 2.0]))
    s = Solver(e, nodes, np.tile(q0, (30, 1)), M, t_end=1e3)
    for _ in range(50):
        s.step()
    assert len(np.unique(s.t_cell)) > 1  # genuinely local steps
    assert np.max(np.abs(s.Q - q0)) <= 1e-12 * np.max(np.abs(q0))
    # the mesh is carried rigidly by the uniform flow
    np.testing.assert_allclose(s.dx, np.diff(nodes), rtol=1e-12)


def test_memory_variable_shadow_ledger():
    s = sod(n=40, M=2, log_fluxes=True)
    mass0 = s.dx[:, None] * s.Q
    scale = 1.0
    checked = 0
    while not s.done:
        s.step()
        log = s.flux_log
        edge = np.array([r[1] for r in log])
        t_a = np.array([r[2] for r in log])
        F = np.array([r[4] for r in log])
        for i in range(s.n_cells):
            pend = t_a >= s.t_cell[i]
            shadow = F[pend & (edge == i)].sum(axis=0) - F[pend & (edge == i + 1)].sum(axis=0)
            assert np.max(np.abs(shadow - s.QM[i])) <= 1e-12 * scale
        checked += 1
    assert checked > 10
    # over the whole run every cell has received exactly its two edge integrals
    edge = np.array([r[1] for r in s.flux_log])
    F = np.array([r[4] for r in s.flux_log])
    for i in range(s.n_cells):
        expected = mass0[i] + F[edge == i].sum(axis=0) - F[edge == i + 1].sum(axis=0)
        np.testing.assert_allclose(s.dx[i] * s.Q[i], expected, rtol=0, atol=1e-12)


def test_node_times_follow_updates():
    s = sod(n=30, M=2)
    for _ in range(15):
        before = s.t_cell.copy()
        s.step()
        moved = np.flatnonzero(s.t_cell != before)
        np.testing.assert_array_equal(s.t_node[moved], s.t_cell[moved])
        np.testing.assert_array_equal(s.t_node[moved + 1], s.t_cell[moved])


def test_gts_has_no_hanging_nodes():
    s = sod(n=30, M=2, mode="gts")
    while not s.done:
        s.step()
        assert np.all(s.t_cell == s.t_cell[0])
        assert np.all(s.t_node == s.t_node[0])
        assert np.all(s.QM == 0.0)


def test_lts_needs_fewer_updates_than_gts():
    lts = sod(n=60, M=2, mode="lts").run()
    gts = sod(n=60, M=2, mode="gts").run()
    assert lts.updates <= gts.updates
    assert lts.cycles > gts.cycles
    assert max(lts.conservation_rel.max(), gts.conservation_rel.max()) <= 1e-13


def test_mesh_log_records_every_update():
    s = sod(n=20, M=1, log_mesh=True)
    r = s.run()
    assert r.mesh.shape == (r.updates, 7)
    cell, xl0, xr0, t0, xl1, xr1, t1 = r.mesh.T
    assert np.all(t1 > t0) and np.all(xr0 > xl0) and np.all(xr1 > xl1)
    last = {int(c): k for k, c in enumerate(cell)}
    np.testing.assert_allclose([xl1[last[i]] for i in range(20)], r.x_node[:-1])


def test_report_geometry():
    r = sod(n=20, M=1).run()
    np.testing.assert_allclose(r.widths.sum(), r.x_node[-1] - r.x_node[0])
    assert np.all(np.diff(r.centers) > 0)
    assert r.updates == r.updates_per_cell.sum()
    assert set(r.extra) == {"limited_cells", "damped_predictors"}


# ---------------------------------------------------------------- errors
def test_constructor_validation():
    e = Euler(1.4)
    nodes = np.linspace(0, 1, 5)
    q = np.tile([1.0, 0.0, 2.5], (4, 1))
    for kw in ({"mode": "async"}, {"flux": "hllc"}, {"velocity": "swirl"}, {"cfl": 1.5},
               {"cfl_speed": "mesh"}, {"t_end": 0.0}):
        args = {"t_end": 1.0, **kw}
        with pytest.raises(ConfigurationError):
            Solver(e, nodes, q, 2, **args)
    with pytest.raises(MeshTanglingError):
        Solver(e, nodes[::-1], q, 2, 1.0)
    with pytest.raises(ConfigurationError):
        Solver(e, nodes, q[:3], 2, 1.0)
    with pytest.raises(InvalidStateError):
        Solver(e, nodes, np.tile([1.0, 0.0, -1.0], (4, 1)), 2, 1.0)


def test_cycle_limit_is_reported_as_deadlock():
    s = sod(n=20, M=1, max_cycles=3)
    with pytest.raises(DeadlockError) as info:
        s.run()
    assert info.value.category == "deadlock"


def test_frozen_scheduler_raises_deadlock():
    s = sod(n=10, M=1)
    # alternate cells sit beyond their neighbours' targets: nobody may move
    s.t_cell[1::2] = 0.05
    s.t_next[0::2] = 0.04
    s.t_next[1::2] = 0.09
    with pytest.raises(DeadlockError):
        s.step()
