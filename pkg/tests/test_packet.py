import unittest
from dataclasses import replace

import numpy as np
import pytest

from config import PACKET_INITIAL_RATE_REL
from rcp.entities import CONVERGED, InitialCondition, PacketSimConfig, PacketTrace, SimConfig
from rcp.errors import ConfigError, Inconclusive
from rcp.fluid import analyze_trajectory, simulate
from rcp.model import equilibrium
from rcp.packet import (
    PacketSim,
    load_packet_config,
    parse_packet_config,
    queue_stats,
    run_packet_sim,
    validate_packet_config,
)
from rcp.repro import check_packet_scenarios
from rcp.stability import is_locally_stable
from scenario_catalog import load_scenario_catalog

LOOP_SCENARIOS = ["packet-no-queue-feedback", "packet-queue-feedback", "packet-subcritical"]


def _small_config(**overrides) -> PacketSimConfig:
    values = dict(num_flows=10, C=100.0, tau=1.0, a=0.5, beta=0.5, slot=0.01, update_interval=0.05, horizon=20.0)
    values.update(overrides)
    return PacketSimConfig(**values)


def _trace(queue) -> PacketTrace:
    queue = np.asarray(queue, dtype=float)
    times = np.arange(len(queue), dtype=float)
    return PacketTrace(times=times, queue_lengths=queue, fair_rates=np.ones_like(queue), utilization=np.ones_like(queue))


class TestPacketSim(unittest.TestCase):
    """Slot-level bookkeeping of the bottleneck queue and the fair rate."""

    def test_queue_balance_per_slot(self):
        sim = PacketSim(_small_config(initial_rate=15.0))
        service = sim.cfg.C * sim.slot
        for _ in range(300):
            before = sim.queue
            arrivals = sim.cfg.num_flows * sim.in_flight[0] * sim.slot
            sim.tick()
            self.assertAlmostEqual(max(0.0, before + arrivals - service), sim.queue, places=9)
            self.assertGreaterEqual(sim.queue, 0.0)
            self.assertGreater(sim.rate, 0.0)

    def test_rate_reaches_sources_after_forward_delay(self):
        sim = PacketSim(_small_config())
        self.assertEqual(98, sim.forward_slots)
        self.assertEqual(5, sim.update_slots)
        for _ in range(5):
            sim.tick()
        updated = sim.rate
        self.assertNotEqual(sim.cfg.initial_rate, updated)
        sim.tick()
        self.assertEqual(updated, sim.in_flight[-1])
        for _ in range(96):
            sim.tick()
        self.assertEqual(sim.cfg.initial_rate, sim.in_flight[0])
        sim.tick()
        self.assertEqual(updated, sim.in_flight[0])

    def test_samples_once_per_update_interval(self):
        trace = run_packet_sim(_small_config())
        self.assertEqual(400, len(trace))
        np.testing.assert_allclose(np.diff(trace.times), 0.05)
        self.assertTrue(np.all(trace.queue_lengths >= 0.0))
        self.assertTrue(np.all(trace.fair_rates > 0.0))

    def test_runs_are_deterministic(self):
        first = run_packet_sim(_small_config())
        second = run_packet_sim(_small_config())
        np.testing.assert_array_equal(first.queue_lengths, second.queue_lengths)
        np.testing.assert_array_equal(first.fair_rates, second.fair_rates)

    def test_event_log_is_bounded_and_narrates(self):
        trace = run_packet_sim(_small_config(initial_rate=15.0))
        self.assertLessEqual(len(trace.event_log), 50)
        self.assertTrue(trace.event_log[-1].startswith("Packet sim finished"))
        self.assertTrue(any(line.startswith("Queue ") for line in trace.event_log))

    def test_max_queue_drops_excess(self):
        sim = PacketSim(_small_config(initial_rate=30.0, max_queue=2.0))
        for _ in range(100):
            sim.tick()
            self.assertLessEqual(sim.queue, 2.0)
        self.assertGreater(sim.dropped, 0.0)

    def test_router_reacts_to_backlog_unless_clamped(self):
        signed = PacketSim(_small_config(initial_rate=5.0))
        clamped = PacketSim(_small_config(initial_rate=5.0, clamp_queue=True))
        for sim in (signed, clamped):
            for _ in range(5):
                sim.tick()
            self.assertEqual(0.0, sim.queue)
            self.assertAlmostEqual(-2.5, sim.backlog, places=9)
        # y = 50 against C = 100; only the signed backlog adds 0.5 * 2.5.
        self.assertAlmostEqual(5.0 * (1.0 + 0.05 * 26.25 / 100.0), signed.rate, places=12)
        self.assertAlmostEqual(5.0 * (1.0 + 0.05 * 25.0 / 100.0), clamped.rate, places=12)

    def test_default_update_interval_splits_the_loop_delay(self):
        sim = PacketSim(_small_config(update_interval=None))
        self.assertEqual(100, sim.update_slots)
        self.assertEqual(50, sim.forward_slots)


def test_defaults_are_resolved():
    cfg = validate_packet_config(PacketSimConfig(num_flows=4, C=8.0, tau=2.0, a=0.5, beta=0.0))
    assert cfg.slot == pytest.approx(0.02)
    assert cfg.update_interval == 2.0
    assert cfg.horizon == 600.0
    assert cfg.initial_rate == pytest.approx(1.8)


@pytest.mark.parametrize(
    "overrides, key",
    [
        ({"num_flows": 0}, "num_flows"),
        ({"C": -1.0}, "C"),
        ({"beta": -0.1}, "beta"),
        ({"slot": 0.5}, "slot"),
        ({"update_interval": 0.001}, "update_interval"),
        ({"horizon": 10.0}, "horizon"),
        ({"initial_rate": 0.0}, "initial_rate"),
        ({"max_queue": -3.0}, "max_queue"),
        ({"clamp_queue": 1}, "clamp_queue"),
    ],
)
def test_invalid_configs_name_the_key(overrides, key):
    with pytest.raises(ConfigError) as excinfo:
        validate_packet_config(_small_config(**overrides))
    assert excinfo.value.key == key


def test_queue_stats_on_flat_and_trending_traces():
    flat = queue_stats(_trace([3.0] * 100))
    assert flat.mean == 3.0
    assert not flat.oscillating

    steady = queue_stats(_trace([0.0, 10.0] * 50))
    assert steady.oscillating
    assert steady.amplitude == 5.0

    growing = np.arange(100, dtype=float) * np.array([0.0, 1.0] * 50)
    with pytest.raises(Inconclusive):
        queue_stats(_trace(growing))


def test_catalog_packet_runs():
    passed, detail = check_packet_scenarios()
    assert passed, detail


def test_parse_packet_config():
    cfg = parse_packet_config("# bottleneck\nnum_flows = 20\nC=50\ntau=0.5  # seconds\na=0.4\nbeta=0.2\n\nslot=0.01\n")
    assert cfg.num_flows == 20
    assert cfg.C == 50.0
    assert cfg.tau == 0.5
    assert cfg.slot == 0.01
    assert cfg.horizon is None
    assert cfg.clamp_queue is False
    assert parse_packet_config("num_flows=1\nC=1\ntau=1\na=1\nbeta=0\nclamp_queue = TRUE\n").clamp_queue is True


@pytest.mark.parametrize(
    "text, key",
    [
        ("num_flows=1\nC=1\ntau=1\na=1\n", "beta"),
        ("num_flows=1\nC=1\ntau=1\na=1\nbeta=0\nwindow=3\n", "window"),
        ("num_flows=1\nnum_flows=2\n", "num_flows"),
        ("num_flows=lots\n", "num_flows"),
        ("C 10\n", "C 10"),
        ("num_flows=1\nclamp_queue=maybe\n", "clamp_queue"),
    ],
)
def test_parse_packet_config_errors(text, key):
    with pytest.raises(ConfigError) as excinfo:
        parse_packet_config(text)
    assert excinfo.value.key == key


def test_load_packet_config(tmp_path):
    path = tmp_path / "link.cfg"
    path.write_text("num_flows=5\nC=10\ntau=1\na=0.5\nbeta=0.1\n", encoding="utf-8")
    assert load_packet_config(path).num_flows == 5
    with pytest.raises(ConfigError, match="cannot read"):
        load_packet_config(tmp_path / "missing.cfg")


@pytest.mark.parametrize("key", LOOP_SCENARIOS)
def test_backlog_feedback_oscillates_iff_linearly_unstable(key):
    scenario = load_scenario_catalog()[key]
    stats = queue_stats(run_packet_sim(scenario.packet_config()))
    assert stats.oscillating == (not is_locally_stable(scenario.params()))


@pytest.mark.parametrize("key", LOOP_SCENARIOS)
def test_clamped_queue_agrees_with_clamped_fluid(key):
    scenario = load_scenario_catalog()[key]
    cfg = replace(scenario.packet_config(), clamp_queue=True)
    packet = queue_stats(run_packet_sim(cfg))

    p = scenario.params()
    traj = simulate(
        p,
        InitialCondition(R0=PACKET_INITIAL_RATE_REL * p.C),
        SimConfig(horizon=cfg.horizon, clamp_queue=True),
    )
    fluid = analyze_trajectory(traj, equilibrium(p))
    assert (fluid.kind, packet.oscillating) == (CONVERGED, False)


def test_supercritical_cycles_stay_small():
    catalog = load_scenario_catalog()
    sub = run_packet_sim(catalog["packet-subcritical"].packet_config())
    sup = run_packet_sim(catalog["packet-supercritical"].packet_config())
    assert np.ptp(sup.queue_lengths[len(sup) // 2:]) * 100 < np.ptp(sub.queue_lengths[len(sub) // 2:])
