import pytest

from tailnet.copula import Gaussian, MarshallOlkin
from tailnet.errors import ScenarioError
from tailnet.network import AdjacencyMatrix, BipartiteNetwork
from tailnet.scenario import parse_scenario


def base(**over):
    doc = {"margin": {"alpha": 1.0, "theta": 1.0},
           "dependence": {"kind": "iid", "d": 2}}
    doc.update(over)
    return doc


def test_minimal_iid():
    sc = parse_scenario(base())
    assert sc.model.d == 2
    assert sc.network is None and sc.study is None


def test_gaussian_dimension_from_sigma():
    sc = parse_scenario(base(dependence={"kind": "gaussian",
                                         "sigma": [[1, 0.2], [0.2, 1]]}))
    assert isinstance(sc.model.dependence, Gaussian)
    assert sc.model.d == 2


def test_mo_general_rates_one_based_keys():
    rates = {"1": 1.0, "2": 2.0, "1,2": 0.5}
    sc = parse_scenario(base(dependence={"kind": "mo", "d": 2,
                                         "mo_variant": "general",
                                         "rates": rates}))
    fam = sc.model.dependence.rates
    assert isinstance(sc.model.dependence, MarshallOlkin)
    assert fam.rate((0, 1)) == 0.5
    assert fam.rate((1,)) == 2.0


def test_field_paths_in_errors():
    with pytest.raises(ScenarioError, match="margin.alpha"):
        parse_scenario({"margin": {"theta": 1.0},
                        "dependence": {"kind": "iid", "d": 2}})
    with pytest.raises(ScenarioError, match="dependence.kind"):
        parse_scenario(base(dependence={"kind": "clayton", "d": 2}))
    with pytest.raises(ScenarioError, match="study.mc_budget"):
        parse_scenario(base(study={"grid": [1.0, 2.0], "mc_budget": 100,
                                   "seed": 0}))
    with pytest.raises(ScenarioError, match="study.grid"):
        parse_scenario(base(study={"grid": [1.0, 3.0, 2.0], "mc_budget": 10_000,
                                   "seed": 0}))


def test_network_matrix_and_random_forms():
    sc = parse_scenario(base(network={"matrix": [[1.0, 0.0], [0.0, 1.0]]}))
    assert isinstance(sc.network, AdjacencyMatrix)
    sc2 = parse_scenario(base(network={"q": 3, "d": 2, "edge_prob": 0.5,
                                       "weights": {"kind": "uniform",
                                                   "lo": 0.5, "hi": 1.5}}))
    assert isinstance(sc2.network, BipartiteNetwork)
    assert sc2.network.q == 3


def test_network_dimension_mismatch():
    with pytest.raises(ScenarioError, match="network"):
        parse_scenario(base(network={"matrix": [[1.0, 0.0, 0.0],
                                               [0.0, 1.0, 0.0]]}))


def test_agents_validated_against_q():
    net = {"q": 2, "d": 2, "edge_prob": 1.0,
           "weights": {"kind": "point", "lo": 1.0, "hi": 1.0}}
    study = {"grid": [10.0], "mc_budget": 10_000, "seed": 0, "agents": [1, 3]}
    with pytest.raises(ScenarioError, match="study.agents"):
        parse_scenario(base(network=net, study=study))


def test_raw_echo_preserved():
    doc = base(study={"grid": [10.0, 100.0], "mc_budget": 10_000, "seed": 4})
    sc = parse_scenario(doc)
    assert sc.raw == doc
    assert sc.study.grid == (10.0, 100.0)
