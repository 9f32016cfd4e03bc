import csv
import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from blowuplab.cli import EXIT_CHECK, EXIT_INVALID, EXIT_OK, dispatch
from blowuplab.config import LabConfig, emit, parse_text, updated
from blowuplab.errors import ParseError, ValidationError

MIXED = """
[solver]
n = 2
p = 2
q = 2
c1 = 1
c2 = 1
"""


def _call(argv):
    out, err = io.StringIO(), io.StringIO()
    code = dispatch(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def test_empty_defaults():
    cfg = parse_text("")
    assert cfg == LabConfig()
    assert cfg.metric.family == "flat" and cfg.damping_profile().is_zero
    assert cfg.solver.cfl == 0.5 and cfg.solver.threshold == 1e8


def test_non_integrable_damping():
    with pytest.raises(ValidationError) as exc:
        parse_text("damping.beta = 0.9\n")
    assert exc.value.cause == "NonIntegrableDamping"


def test_mixed_regime():
    assert parse_text(MIXED).regime().regime == "Z"


@pytest.mark.parametrize("text, line", [("[solver]\nn = 3\nfoo = 1\n", 3),
                                        ("[solver]\nh = abc\n", 2),
                                        ("[nope]\nx = 1\n", 1),
                                        ("n = 3\n", 1),
                                        ("[solver]\nn = 3\nn = 4\n", 3),
                                        ("[solver]\njunk line\n", 2)])
def test_parse_errors(text, line):
    with pytest.raises(ParseError) as exc:
        parse_text(text)
    assert exc.value.line == line


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(1.01, 5.0), st.floats(1e-4, 0.5), st.integers(2, 6),
       st.floats(1.01, 4.0), st.sampled_from(["original", "transformed"]))
def test_round_trip(mu, beta, eps, n, p, mode):
    cfg = updated(LabConfig(), damping_mu=mu, damping_beta=beta, data_eps=eps, solver_n=n,
                  solver_p=p, solver_mode=mode)
    assert parse_text(emit(cfg)) == cfg


def test_exponents_table():
    code, out, _ = _call(["exponents", "--dim", "3", "--csv"])
    assert code == EXIT_OK
    rows = [r for r in csv.reader(l for l in out.splitlines() if not l.startswith("#"))]
    assert rows[0] == ["n", "p_S", "p_G"]
    assert float(rows[1][1]) == pytest.approx(2.414213562373095) and float(rows[1][2]) == 2.0


def test_unknown_subcommand():
    assert _call(["frobnicate"])[0] == EXIT_INVALID
    assert _call([])[0] == EXIT_INVALID


def test_invalid_config_status(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("damping.beta = 0.9\n")
    code, _, err = _call(["run", "--config", str(path)])
    assert code == EXIT_INVALID and "NonIntegrableDamping" in err


def test_kato_cli():
    code, out, _ = _call(["kato", "--p", "2", "--eps", "0.1"])
    assert code == EXIT_OK and json.loads(out)["T"] == pytest.approx(10.0)
    assert _call(["kato", "--p", "2", "--a", "3", "--eps", "0.1"])[0] == EXIT_INVALID


def test_bit_identical_outputs(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[solver]\np = 1.5\nc1 = 1\nh = 0.1\nt_max = 300\ncfl = 0.9\n[data]\nR0 = 2\neps = 0.2\n")
    outs = []
    for k in range(2):
        path = tmp_path / f"trace{k}.csv"
        assert _call(["run", "--config", str(cfg), "--out", str(path)])[0] == EXIT_OK
        outs.append(path.read_bytes())
        assert (tmp_path / f"trace{k}.csv.manifest.json").exists()
    assert outs[0] == outs[1]
    assert outs[0].startswith(b"# tool = blowuplab")


def test_sweep_cli(tmp_path):
    path = tmp_path / "sweep.csv"
    code, out, _ = _call(["sweep", "--mode", "ode", "--eps-start", "1e-2", "--eps-factor", "0.1",
                          "--eps-count", "5", "--out", str(path)])
    assert code == EXIT_OK
    summary = json.loads((tmp_path / "sweep.csv.summary.json").read_text())
    # default template: n = 3, p = 2 gives a = 1, the logarithmic law with exponent p - 1
    assert summary["predicted_alpha"] == pytest.approx(1.0)
    assert summary["clock"] == "log(1+T)"


def test_check_cli_status(tmp_path):
    cfg = tmp_path / "check.cfg"
    cfg.write_text("[solver]\np = 1.5\nc1 = 1\nh = 0.05\ncfl = 0.97\nt_max = 2000\n[data]\neps = 0.05\n")
    code, out, _ = _call(["check", "--config", str(cfg)])
    assert code == EXIT_OK and json.loads(out)["blown_up"]


def test_check_cli_violation_status(tmp_path, monkeypatch):
    from blowuplab import diagnostics

    real = diagnostics.check_inequalities

    def failing(trace, **kw):
        rep = real(trace, **kw)
        rep.passed["FG_growth"] = False
        return rep

    monkeypatch.setattr(diagnostics, "check_inequalities", failing)
    cfg = tmp_path / "check.cfg"
    cfg.write_text("[solver]\np = 1.5\nc1 = 1\nh = 0.1\ncfl = 0.9\nt_max = 500\n[data]\neps = 0.1\n")
    code, out, _ = _call(["check", "--config", str(cfg)])
    assert code == EXIT_CHECK and json.loads(out)["passed"]["FG_growth"] is False


def test_inline_comments():
    cfg = parse_text('[metric]\nfamily = "power_perturbation"   # or flat\na = 0.1 ; amplitude\n')
    assert cfg.metric.family == "power_perturbation" and cfg.metric.a == 0.1
