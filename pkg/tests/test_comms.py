import random

import pytest

from snakeforge.comms import (
    BusTopology,
    CommandStream,
    CommsError,
    frames_csv,
    max_control_rate,
    model_latency,
    round_trip_latency,
    run_event_simulation,
    stats_table,
)


def topo(n=10, jitter=0.0):
    return BusTopology(node_count=n, jitter_bound_s=jitter)


class TestLatencyModel:
    def test_first_node(self):
        assert round_trip_latency(topo(), 1) == 0.73e-3

    def test_tenth_node(self):
        assert round_trip_latency(topo(), 10) == pytest.approx(8.92e-3, rel=1e-12)

    def test_second_node(self):
        assert round_trip_latency(topo(), 2) == pytest.approx(1.64e-3, rel=1e-12)

    def test_affine_increment(self):
        t = topo()
        for n in range(1, t.node_count):
            delta = model_latency(t, n + 1) - model_latency(t, n)
            assert delta == pytest.approx(t.per_node_rtt_increment_s, rel=1e-9)

    def test_index_out_of_range(self):
        with pytest.raises(CommsError):
            round_trip_latency(topo(), 0)
        with pytest.raises(CommsError):
            round_trip_latency(topo(), 11)

    def test_jitter_requires_rng(self):
        with pytest.raises(CommsError):
            round_trip_latency(topo(jitter=1e-4), 1)
        rng = random.Random(1)
        sample = round_trip_latency(topo(jitter=1e-4), 1, rng)
        assert abs(sample - 0.73e-3) <= 1e-4


class TestMaxControlRate:
    def test_ten_nodes(self):
        assert max_control_rate(topo(10)) == pytest.approx(112.1, abs=0.05)

    def test_one_node(self):
        assert max_control_rate(topo(1)) == pytest.approx(1369.9, abs=0.1)

    def test_jitter_worst_case(self):
        t = topo(10, jitter=1e-4)
        assert max_control_rate(t) == pytest.approx(1.0 / (8.92e-3 + 1e-4), rel=1e-9)

    def test_strictly_decreasing_in_node_count(self):
        rates = [max_control_rate(topo(n)) for n in range(1, 12)]
        assert all(b < a for a, b in zip(rates, rates[1:]))


class TestEventSimulation:
    def test_zero_jitter_means_equal_model_exactly(self):
        run = run_event_simulation(
            topo(), [CommandStream(n, 50.0) for n in (1, 4, 10)], 2.0
        )
        t = topo()
        for stats in run.node_stats:
            assert stats.mean_rtt_s == model_latency(t, stats.node)
            assert stats.max_rtt_s == model_latency(t, stats.node)

    def test_thousand_samples_first_node(self):
        # the measurement protocol: 1000 round trips to node 1
        run = run_event_simulation(topo(), [CommandStream(1, 1000.0)], 1.0)
        stats = run.node_stats[0]
        assert stats.frame_count == 1000
        assert stats.mean_rtt_s == 0.73e-3

    def test_jitter_mean_converges(self):
        # uniform +/-0.1 ms, 1e4 samples: mean within 0.01 ms of the model
        run = run_event_simulation(
            topo(4, jitter=1e-4), [CommandStream(2, 100.0)], 100.0, seed=7
        )
        stats = run.node_stats[0]
        assert stats.frame_count == 10000
        assert abs(stats.mean_rtt_s - model_latency(topo(4), 2)) < 1e-5

    def test_determinism_under_fixed_seed(self):
        schedule = [CommandStream(n, 40.0) for n in (1, 3, 7)]
        a = run_event_simulation(topo(8, jitter=2e-4), schedule, 3.0, seed=42)
        b = run_event_simulation(topo(8, jitter=2e-4), schedule, 3.0, seed=42)
        assert a.frames == b.frames
        c = run_event_simulation(topo(8, jitter=2e-4), schedule, 3.0, seed=43)
        assert c.frames != a.frames

    def test_fifo_per_node(self):
        run = run_event_simulation(
            topo(5, jitter=4e-4), [CommandStream(5, 900.0)], 0.5, seed=3
        )
        completions = [f.completion_s for f in run.frames if f.node == 5]
        assert completions == sorted(completions)

    def test_overload_reported_not_dropped(self):
        # 10 nodes polled at 100 Hz each offers ~4.8 s of bus time per second
        schedule = [CommandStream(n, 100.0) for n in range(1, 11)]
        run = run_event_simulation(topo(), schedule, 0.5)
        assert run.overloaded
        assert run.utilization > 1.0
        assert len(run.frames) == 10 * 50  # every frame still simulated

    def test_missed_deadline_count(self):
        # at a 200 Hz loop the 5 ms budget is missed by far nodes only
        run = run_event_simulation(
            topo(), [CommandStream(1, 50.0), CommandStream(10, 50.0)], 1.0,
            loop_rate_hz=200.0,
        )
        by_node = {s.node: s for s in run.node_stats}
        assert by_node[1].missed_deadlines == 0
        assert by_node[10].missed_deadlines == 50

    def test_bad_schedule_rejected(self):
        with pytest.raises(CommsError):
            run_event_simulation(topo(), [], 1.0)
        with pytest.raises(CommsError):
            run_event_simulation(topo(), [CommandStream(1, 0.0)], 1.0)
        with pytest.raises(CommsError):
            run_event_simulation(topo(), [CommandStream(99, 10.0)], 1.0)


def test_renderings_smoke():
    run = run_event_simulation(topo(3), [CommandStream(1, 10.0)], 0.5, loop_rate_hz=100.0)
    table = stats_table(run)
    assert "mean_rtt_ms" in table
    csv = frames_csv(run.frames)
    assert csv.splitlines()[0] == "node,payload_bytes,enqueue_s,completion_s,rtt_s"


def test_topology_validation():
    with pytest.raises(CommsError):
        BusTopology(node_count=0)
    with pytest.raises(CommsError):
        BusTopology(node_count=3, first_hop_rtt_s=0.0)
    with pytest.raises(CommsError):
        BusTopology(node_count=3, jitter_bound_s=-1e-5)
