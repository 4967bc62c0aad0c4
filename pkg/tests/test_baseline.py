import numpy as np
import pytest

from qaoabatch.baseline import (
    CSV_FIELDS,
    FAMILY_PRESETS,
    cut_ratio_experiment,
    gw_partitioned,
    gw_relax,
    gw_solve,
    read_ratio_csv,
    summarize_ratios,
    write_ratio_csv,
)
from qaoabatch.graph import Graph, circulant_graph, complete_graph, gnp_graph, max_cut_bruteforce, star_graph

TWO_TRIANGLES = Graph(6, ((0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)))


def test_gw_small_exact():
    assert gw_solve(complete_graph(3))[0] == 2
    assert gw_solve(circulant_graph(4, (1,)))[0] == 4


def test_relaxation_monotone_and_upper_bound():
    for seed in range(5):
        g = gnp_graph(14, 0.4, seed)
        relax = gw_relax(g, seed)
        assert np.all(np.diff(relax.history) >= -1e-9)
        assert max_cut_bruteforce(g)[0] <= relax.objective + 1e-6
        assert np.allclose(np.linalg.norm(relax.vectors, axis=1), 1.0)


def test_gw_deterministic():
    g = gnp_graph(12, 0.5, 2)
    assert gw_solve(g, 4) == gw_solve(g, 4)


def test_partitioned_full_fraction_is_plain_gw():
    g = gnp_graph(12, 0.5, 1)
    assert gw_partitioned(g, 1.0, 3)[0] == gw_solve(g, 3)[0]


def test_partitioned_components_lossless():
    assert gw_partitioned(TWO_TRIANGLES, 0.5, 0)[0] == gw_solve(TWO_TRIANGLES, 0)[0] == 4


def test_fraction_validation():
    with pytest.raises(ValueError):
        gw_partitioned(TWO_TRIANGLES, 0.0)


def test_experiment_records_and_csv(tmp_path):
    records = cut_ratio_experiment(["circulant", "star"], [12, 16], [0.25, 0.75], range(2))
    assert len(records) == 2 * 2 * 2 * 2
    for r in records:
        assert r.ratio == pytest.approx(r.c_part / r.c_unpart)
    path = tmp_path / "ratio.csv"
    write_ratio_csv(path, records)
    assert path.read_text().splitlines()[0] == ",".join(CSV_FIELDS)
    assert read_ratio_csv(path) == records
    summary = summarize_ratios(records)
    assert summary[("star", 0.25)]["count"] == 4
    assert ("*", 0.75) in summary


def test_star_graph_runs():
    # a star is bipartite; the hub on one side cuts everything
    assert gw_solve(star_graph(9))[0] == 8
    assert gw_partitioned(star_graph(24), 0.25, 0)[0] <= 23


def test_presets_cover_sweep_families():
    assert set(FAMILY_PRESETS) == {"circulant", "gnp", "regular-4", "bipartite", "star"}


@pytest.mark.slow
def test_circulant_12_median_trend_n40():
    g = circulant_graph(40, (1, 2))
    medians = []
    for frac in (0.25, 0.5, 0.75):
        medians.append(np.median([gw_partitioned(g, frac, s)[0] / gw_solve(g, s)[0] for s in range(10)]))
    assert medians[0] <= medians[1] <= medians[2]
