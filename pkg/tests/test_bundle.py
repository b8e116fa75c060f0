import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from temphist import bundle, histories as hist, twotime
from temphist.bundle import HistoryBundle, Section
from temphist.linalg import SX, SZ, ket, random_dichotomic, random_state, random_unitary
from temphist.scenarios import xx_bundle, random_bundle_trial

X, Z = twotime.Setting("X", SX), twotime.Setting("Z", SZ)
seeds = st.integers(0, 2**63 - 1)

XX_DOT = """\
digraph "bundle" {
  rankdir=LR;
  t0_0 [label="pre"];
  t1_p [label="X+"];
  t1_m [label="X-"];
  t2_p [label="X+"];
  t2_m [label="X-"];
  t3_0 [label="post"];
  t0_0 -> t1_p [label="++: 0.5"];
  t1_p -> t2_p [label="++: 0.5"];
  t2_p -> t3_0 [label="++: 0.5"];
  t0_0 -> t1_p [label="+-: 0", style=dashed, class="inconsistent"];
  t1_p -> t2_m [label="+-: 0", style=dashed, class="inconsistent"];
  t2_m -> t3_0 [label="+-: 0", style=dashed, class="inconsistent"];
  t0_0 -> t1_m [label="-+: 0", style=dashed, class="inconsistent"];
  t1_m -> t2_p [label="-+: 0", style=dashed, class="inconsistent"];
  t2_p -> t3_0 [label="-+: 0", style=dashed, class="inconsistent"];
  t0_0 -> t1_m [label="--: 0.5"];
  t1_m -> t2_m [label="--: 0.5"];
  t2_m -> t3_0 [label="--: 0.5"];
}
"""


def two_time_bundle(pre="z+", post="z+"):
    grid = hist.TimeGrid.of_length(2, 2)
    return HistoryBundle(grid, None, ket(pre), ket(post))


@pytest.mark.parametrize("states,w", [(("z+", "z+"), 1.0), (("z+", "z-"), 0.0), (("z+", "x+"), 0.5)])
def test_section_examples(states, w):
    b = two_time_bundle()
    sh = bundle.section_to_history(b, Section(tuple(ket(s) for s in states)))
    assert sh.weight == pytest.approx(w, abs=1e-12)
    assert sh.consistent == (w > 0)


@given(seeds, st.floats(0, 2 * np.pi))
def test_section_weight_phase_invariant(seed, phase):
    rng = np.random.default_rng(seed)
    grid = hist.TimeGrid.of_length(3, 2)
    b = HistoryBundle(grid, [random_unitary(rng, 2) for _ in range(2)], random_state(rng, 2))
    states = [random_state(rng, 2) for _ in range(3)]
    w0 = bundle.section_to_history(b, Section(tuple(states))).weight
    states[1] = np.exp(1j * phase) * states[1]
    assert bundle.section_to_history(b, Section(tuple(states))).weight == pytest.approx(w0, abs=1e-12)


def test_section_validation():
    b = two_time_bundle()
    with pytest.raises(ValueError):
        bundle.section_to_history(b, Section((ket("z+"),)))
    with pytest.raises(ValueError):
        Section(([1, 1],))
    with pytest.raises(ValueError):
        HistoryBundle.for_slots(1, ket("z+"), [1, 1])


def test_fibers_examples():
    b = HistoryBundle.for_slots(1, ket("z+"), ket("x-"))
    f = bundle.fibers_for_settings(b, [X])
    assert [(x.outcome, x.abl_weight) for x in f] == [((1,), 0.0), ((-1,), pytest.approx(1.0))]
    assert not f[0].consistent and f[1].consistent

    b = HistoryBundle.for_slots(1, ket("z+"), ket("z+"))
    f = bundle.fibers_for_settings(b, [Z])
    assert [x.abl_weight for x in f] == [pytest.approx(1.0), 0.0]

    b, s = xx_bundle()
    f = bundle.fibers_for_settings(b, s)
    d = twotime.joint_distribution(ket("z+"), s, post=ket("z+"))
    assert len(f) == 4
    for x in f:
        assert x.abl_weight == d[x.outcome]
        assert x.settings == ("X", "X")


def test_fiber_errors():
    b = HistoryBundle.for_slots(1, ket("z+"))
    with pytest.raises(ValueError):
        bundle.fibers_for_settings(b, [X])
    b = HistoryBundle.for_slots(1, ket("z+"), ket("z-"))
    with pytest.raises(twotime.PostSelectionError, match="post-selection impossible"):
        bundle.fibers_for_settings(b, [Z])
    b = HistoryBundle.for_slots(2, ket("z+"), ket("z+"))
    with pytest.raises(ValueError):
        bundle.fibers_for_settings(b, [X])


def test_xx_correspondence_tight():
    b, s = xx_bundle()
    assert bundle.verify_weight_correspondence(b, s).max_deviation <= 1e-12


def test_correspondence_on_random_bundles():
    rng = np.random.default_rng(7)
    worst = 0.0
    for t in range(100):
        for dim in (2, 3):
            b, s = random_bundle_trial(rng, dim, 1 + t % 3)
            f = bundle.fibers_for_settings(b, s)
            assert sum(x.abl_weight for x in f) == pytest.approx(1, abs=1e-9)
            rep = bundle.verify_weight_correspondence(b, s)
            assert rep.passed
            worst = max(worst, rep.max_deviation)
    assert worst <= 1e-9


def test_three_slot_qutrit_correspondence(rng):
    b = HistoryBundle.for_slots(3, random_state(rng, 3), random_state(rng, 3),
                                [random_unitary(rng, 3) for _ in range(4)])
    s = [twotime.Setting(f"A{i}", random_dichotomic(rng, 3)) for i in range(3)]
    assert bundle.verify_weight_correspondence(b, s).passed


@given(seeds)
@settings(max_examples=20)
def test_graph_has_one_source_and_one_sink(seed):
    rng = np.random.default_rng(seed)
    b, s = random_bundle_trial(rng, 2, 2)
    g = bundle.bundle_graph(b, bundle.fibers_for_settings(b, s))
    ids = {n["id"] for n in g["nodes"]}
    sources = ids - {e["target"] for e in g["edges"]}
    sinks = ids - {e["source"] for e in g["edges"]}
    assert sources == {"t0_0"} and sinks == {"t3_0"}


def test_dot_golden():
    b, s = xx_bundle()
    doc, dot = bundle.export_bundle(b, bundle.fibers_for_settings(b, s))
    assert dot == XX_DOT
    assert set(doc) == {"grid", "pre", "post", "settings", "fibers", "graph"}
    assert [f["outcome"] for f in doc["fibers"]] == ["++", "+-", "-+", "--"]


def test_single_fiber_is_a_path():
    b, s = xx_bundle()
    f = bundle.fibers_for_settings(b, s)[:1]
    g = bundle.bundle_graph(b, f)
    assert [n["id"] for n in g["nodes"]] == ["t0_0", "t1_p", "t2_p", "t3_0"]
    assert [(e["source"], e["target"]) for e in g["edges"]] == [
        ("t0_0", "t1_p"), ("t1_p", "t2_p"), ("t2_p", "t3_0")]
    assert "dashed" not in bundle.to_dot(g)


def test_fiber_history_json_round_trip():
    b, s = xx_bundle()
    doc, _ = bundle.export_bundle(b, bundle.fibers_for_settings(b, s))
    h = hist.history_from_json(doc["fibers"][0]["history"])
    assert hist.weight(h) == pytest.approx(0.25)
