# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import json
import math

import numpy as np
import pandas as pd
import pytest

import socialgame.core.errors as err
from socialgame.core.explain.graph import neighborhood_glasso


def _standardized(values):
    return (values - values.mean(axis=0)) / values.std(axis=0)


@pytest.fixture()
def chain(rng):
    """WHEN a -> b -> c form a Markov chain and d is independent of them."""
    n = 600
    a = rng.normal(size=n)
    b = a + 0.5 * rng.normal(size=n)
    c = b + 0.5 * rng.normal(size=n)
    d = rng.normal(size=n)
    return pd.DataFrame(_standardized(np.column_stack([a, b, c, d])), columns=list("abcd"))


def test_chain_edges_are_recovered(chain):
    graph = neighborhood_glasso(chain, folds=5, combine="AND", one_standard_error=True)
    assert graph.names == ("a", "b", "c", "d")
    assert graph.edges == ((0, 1), (1, 2))
    assert graph.edge_names() == [("a", "b"), ("b", "c")]
    assert 1 in graph.neighborhood(0)
    assert np.all(np.diag(graph.coefficients) == 0.0)


def test_or_graph_contains_the_and_graph(chain):
    union = neighborhood_glasso(chain, combine="OR")
    intersection = neighborhood_glasso(chain, combine="AND")
    assert set(intersection.edges) <= set(union.edges)
    assert {(0, 1), (1, 2)} <= set(union.edges)


def test_independent_columns_have_no_edge(rng):
    values = _standardized(rng.normal(size=(500, 4)))
    graph = neighborhood_glasso(values, combine="AND", one_standard_error=True)
    assert graph.edges == ()
    assert graph.names == ("x0", "x1", "x2", "x3")


def test_orthogonal_column_gets_an_empty_neighborhood(rng):
    base = rng.normal(size=(40, 2))
    base[:, 1] += base[:, 0]
    span = np.column_stack([np.ones(40), base])
    draw = rng.normal(size=40)
    coefficients, *_ = np.linalg.lstsq(span, draw, rcond=None)
    orthogonal = draw - span @ coefficients
    graph = neighborhood_glasso(np.column_stack([base, orthogonal]), folds=4)
    assert math.isnan(graph.penalties[2])
    assert graph.neighborhood(2) == []
    assert graph.edges == ((0, 1),)
    assert graph.to_adjacency()["penalties"]["x2"] is None


def test_graph_files(chain, tmp_path):
    graph = neighborhood_glasso(chain, combine="AND", one_standard_error=True)
    graph.write_edge_list(tmp_path / "edges.tsv")
    graph.write_adjacency(tmp_path / "adjacency.json")
    lines = (tmp_path / "edges.tsv").read_text().splitlines()
    assert lines[0] == "source\ttarget\tweight_source\tweight_target"
    assert [line.split("\t")[:2] for line in lines[1:]] == [["a", "b"], ["b", "c"]]
    adjacency = json.loads((tmp_path / "adjacency.json").read_text())
    assert adjacency["adjacency"]["b"] == ["a", "c"]
    assert adjacency["combine"] == "AND"


def test_graph_errors(rng):
    with pytest.raises(err.FoldTooSmallError):
        neighborhood_glasso(rng.normal(size=(3, 2)), folds=5)
    with pytest.raises(err.InvalidArguments):
        neighborhood_glasso(rng.normal(size=(30, 2)), combine="XOR")
    with pytest.raises(err.InvalidArguments):
        neighborhood_glasso(np.array([[np.nan, 1.0], [1.0, 2.0]]))
    single = neighborhood_glasso(rng.normal(size=(10, 1)))
    assert single.edges == ()


def _gaussian_chain(seed, n=2000, length=5, weight=0.6):
    generator = np.random.default_rng(seed)
    columns = [generator.normal(size=n)]
    for _ in range(length - 1):
        columns.append(weight * columns[-1] + generator.normal(size=n))
    return _standardized(np.column_stack(columns))


def test_default_settings_recover_a_gaussian_chain():
    """WHEN x_k = 0.6 x_(k-1) + noise over 5 columns, 18 of 20 seeds must give the chain."""
    expected = ((0, 1), (1, 2), (2, 3), (3, 4))
    exact = sum(neighborhood_glasso(_gaussian_chain(seed)).edges == expected for seed in range(20))
    assert exact >= 18


def test_default_settings_keep_independent_columns_apart():
    hits = 0
    for seed in range(20):
        values = _standardized(np.random.default_rng(seed).normal(size=(2000, 5)))
        hits += neighborhood_glasso(values).edges == ()
    assert hits >= 18


def test_min_coefficient(chain):
    full = neighborhood_glasso(chain, min_coefficient=0.0)
    default = neighborhood_glasso(chain)
    assert set(default.edges) <= set(full.edges)
    assert np.all((default.coefficients != 0) <= (full.coefficients != 0))
    strict = neighborhood_glasso(chain, min_coefficient=10.0)
    assert strict.edges == ()
    with pytest.raises(err.InvalidArguments):
        neighborhood_glasso(chain, min_coefficient=-1.0)
