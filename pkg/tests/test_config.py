import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nehari_fem.config import MeshSpec, RunConfig, WeightSpec, format_config, parse_config
from nehari_fem.errors import InvalidInputError


def test_defaults_round_trip():
    cfg = RunConfig()
    assert parse_config(format_config(cfg)) == cfg


def test_comments_and_blank_lines():
    cfg = parse_config("# reference\n\nmesh.nx = 8   # coarse\nparams.lambda = 2.5\n")
    assert cfg.mesh.nx == 8
    assert cfg.params.lam == 2.5


@pytest.mark.parametrize(
    "text",
    ["mesh.bogus = 1", "params.p", "mesh.nx = eight", "sweep.solve = maybe", "params.gamma = 1.5"],
)
def test_rejected(text):
    with pytest.raises(InvalidInputError):
        parse_config(text)


def test_validate_checks_dimension():
    cfg = parse_config("mesh.kind = rect\nmesh.nx = 4\nmesh.ny = 4\nparams.p = 1.5\nparams.r = 7\n")
    with pytest.raises(InvalidInputError):
        cfg.validate()


def test_unknown_kinds():
    with pytest.raises(InvalidInputError):
        MeshSpec(kind="sphere").build()
    with pytest.raises(InvalidInputError):
        WeightSpec(kind="random").build(MeshSpec(nx=4).build())


finite = st.floats(0.1, 100.0, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(
    nx=st.integers(2, 500),
    xi=finite,
    a=finite,
    split=st.one_of(st.none(), st.floats(0.0, 1.0)),
    p=st.floats(1.1, 3.0),
    gamma=st.floats(0.01, 0.99),
    dr=st.floats(0.1, 3.0),
    lam=finite,
    seed=st.integers(0, 2**31),
    lambdas=st.lists(finite, min_size=1, max_size=5),
    solve=st.booleans(),
    tol=st.floats(1e-14, 1e-2),
)
def test_round_trip(nx, xi, a, split, p, gamma, dr, lam, seed, lambdas, solve, tol):
    text = "\n".join(
        [
            f"mesh.nx = {nx}",
            "weights.kind = step",
            f"weights.xi = {xi!r}",
            f"weights.a = {a!r}",
            f"weights.split = {'' if split is None else repr(split)}",
            f"params.p = {p!r}",
            f"params.gamma = {gamma!r}",
            f"params.r = {p + dr!r}",
            f"params.lambda = {lam!r}",
            f"solver.tol_grad = {tol!r}",
            f"run.seed = {seed}",
            f"sweep.lambdas = {','.join(repr(v) for v in lambdas)}",
            f"sweep.solve = {solve}",
        ]
    )
    cfg = parse_config(text)
    echoed = format_config(cfg)
    assert parse_config(echoed) == cfg
    assert format_config(parse_config(echoed)) == echoed
