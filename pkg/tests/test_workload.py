import pytest

from trickleflow.errors import ConflictError, NotFoundError
from trickleflow.workload import (ParameterDocument, Step, UnresolvedPlaceholders,
                                  WorkloadDescription, WorkloadFailure,
                                  WorkloadRunner, description_from_dict,
                                  description_to_dict, params_from_yaml,
                                  resolve)


def run_doc(**values):
    return ParameterDocument(id="run", scope="RUN", values=values)


def machine_doc(**values):
    return ParameterDocument(id="m", scope="MACHINE", values=values)


# -- resolve ---------------------------------------------------------------------

def test_resolve_substitutes_native_values():
    template = {"members": "${n_members}", "label": "run-${region}",
                "nested": {"seed": "${seed}"}, "keep": 7}
    out = resolve(template, run_doc(n_members=10, region="rome", seed=42),
                  machine_doc())
    assert out == {"members": 10, "label": "run-rome",
                   "nested": {"seed": 42}, "keep": 7}


def test_resolve_run_scope_wins():
    out = resolve({"v": "${x}"}, run_doc(x="run"), machine_doc(x="machine"))
    assert out == {"v": "run"}


def test_resolve_missing_keys_all_reported():
    with pytest.raises(UnresolvedPlaceholders) as err:
        resolve({"a": "${seed}", "b": "${other}"}, run_doc(), machine_doc())
    assert err.value.missing == ["other", "seed"]
    assert "seed" in str(err.value)


def test_resolve_lists():
    out = resolve({"xs": ["${a}", "${b}", 3]}, run_doc(a=1, b=2),
                  machine_doc())
    assert out == {"xs": [1, 2, 3]}


# -- execution ----------------------------------------------------------------------

@pytest.fixture
def runner(tmp_path):
    return WorkloadRunner(workdir_root=tmp_path / "workdir")


def test_three_step_workload(runner):
    calls = []

    def make_op(name):
        def op(params, workdir):
            calls.append((name, params["tag"]))
            (workdir / f"{name}.out").write_text(name)
            return [f"{name}-data"]
        return op

    for name in ("one", "two", "three"):
        runner.register_operation(f"op.{name}", make_op(name))
    runner.register_description(WorkloadDescription(
        id="w", steps=tuple(
            Step(name=n, operation=f"op.{n}", param_template={"tag": "${tag}"})
            for n in ("one", "two", "three"))))
    runner.register_params(run_doc(tag="T"))

    outcomes = runner.execute_workload("w", "run", "alpha", "j1")
    assert [o.step_name for o in outcomes] == ["one", "two", "three"]
    assert all(o.ok for o in outcomes)
    assert [o.produced_data_ids for o in outcomes] == \
        [["one-data"], ["two-data"], ["three-data"]]
    assert calls == [("one", "T"), ("two", "T"), ("three", "T")]
    workdir = runner.workdir_root / "alpha" / "j1"
    assert (workdir / "two.out").read_text() == "two"


def test_failure_aborts_remaining_steps(runner):
    ran = []
    runner.register_operation("op.ok", lambda p, w: ran.append("ok") or [])

    def fail(params, workdir):
        raise RuntimeError("step exploded")

    runner.register_operation("op.fail", fail)
    runner.register_description(WorkloadDescription(id="w", steps=(
        Step(name="a", operation="op.ok"),
        Step(name="b", operation="op.fail"),
        Step(name="c", operation="op.ok"),
    )))
    runner.register_params(run_doc())
    with pytest.raises(WorkloadFailure) as err:
        runner.execute_workload("w", "run", "alpha", "j2")
    outcomes = err.value.outcomes
    assert [(o.step_name, o.ok) for o in outcomes] == [("a", True),
                                                       ("b", False)]
    assert "step exploded" in outcomes[1].error_text
    assert ran == ["ok"]


def test_empty_workload_completes(runner):
    runner.register_description(WorkloadDescription(id="empty", steps=()))
    runner.register_params(run_doc())
    assert runner.execute_workload("empty", "run", "alpha", "j3") == []


def test_unknown_operation_fails_that_step(runner):
    runner.register_description(WorkloadDescription(id="w", steps=(
        Step(name="mystery", operation="op.unknown"),)))
    runner.register_params(run_doc())
    with pytest.raises(WorkloadFailure) as err:
        runner.execute_workload("w", "run", "alpha", "j4")
    assert "unknown operation" in err.value.outcomes[0].error_text


def test_duplicate_operation_conflicts(runner):
    runner.register_operation("op.x", lambda p, w: [])
    with pytest.raises(ConflictError):
        runner.register_operation("op.x", lambda p, w: [])


def test_unknown_description_or_params(runner):
    runner.register_params(run_doc())
    with pytest.raises(NotFoundError):
        runner.execute_workload("ghost", "run", "alpha", "j5")
    runner.register_description(WorkloadDescription(id="w", steps=()))
    with pytest.raises(NotFoundError):
        runner.execute_workload("w", "ghost-params", "alpha", "j6")


def test_machine_agnosticism(runner):
    """Same description and RUN params on machines with identical
    MACHINE params produce bit-equal output files."""
    def op(params, workdir):
        (workdir / "out.txt").write_text(
            f"{params['scale']}:{params['tag']}")
        return []

    runner.register_operation("op.write", op)
    runner.register_description(WorkloadDescription(id="w", steps=(
        Step(name="s", operation="op.write",
             param_template={"scale": "${scale}", "tag": "${tag}"}),)))
    runner.register_params(run_doc(tag="T"))
    runner.register_params(ParameterDocument(
        id="alpha", scope="MACHINE", values={"scale": 4}))
    runner.register_params(ParameterDocument(
        id="beta", scope="MACHINE", values={"scale": 4}))

    runner.execute_workload("w", "run", "alpha", "j7")
    runner.execute_workload("w", "run", "beta", "j7")
    a = (runner.workdir_root / "alpha" / "j7" / "out.txt").read_bytes()
    b = (runner.workdir_root / "beta" / "j7" / "out.txt").read_bytes()
    assert a == b


def test_step_names_unique():
    with pytest.raises(ValueError):
        WorkloadDescription(id="w", steps=(
            Step(name="same", operation="a"),
            Step(name="same", operation="b")))


def test_description_round_trip():
    desc = WorkloadDescription(id="w", steps=(
        Step(name="s", operation="op.x", param_template={"k": "${v}"}),))
    assert description_from_dict(description_to_dict(desc)) == desc


def test_params_from_yaml(tmp_path):
    path = tmp_path / "params.yaml"
    path.write_text("n_members: 10\nregion: rome\n")
    doc = params_from_yaml(path, "run")
    assert doc.values == {"n_members": 10, "region": "rome"}
    bad = tmp_path / "bad.yaml"
    bad.write_text("- just\n- a list\n")
    with pytest.raises(ValueError):
        params_from_yaml(bad, "run")
