import json
from pathlib import Path

import pytest

from finslercurv import zoo
from finslercurv.cli import build_report, main, strip_timing, structured
from finslercurv.config import RunConfig, parse_config, serialize_config
from finslercurv.errors import DimensionMismatch, ParseError, UnknownSymbol
from finslercurv.expr import evaluate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

MINIMAL = """
command = "validate"
[metric]
kind = "riemannian"
coords = [{name = "x1"}, {name = "x2"}]
g = [["1", "0"], ["0", "1"]]
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.seed == 0 and cfg.samples == 50 and cfg.format == "text" and cfg.metric.dim == 2


def test_warp_expression_is_parsed():
    cfg = parse_config((CONFIGS / "circle_randers_fiber.toml").read_text())
    assert float(evaluate(cfg.metric.warp, {"theta": 0.0})) == pytest.approx(3.0)


def test_misspelled_field_is_named_and_located():
    text = MINIMAL.replace("command", "comand")
    with pytest.raises(ParseError) as ei:
        parse_config(text)
    msgs = [m for *_, m in ei.value.errors]
    assert any("comand" in m for m in msgs)
    assert ei.value.errors[0][0] == 2


def test_unknown_symbol_located_in_file():
    text = MINIMAL.replace('["0", "1"]]', '["0", "1 + z"]]')
    with pytest.raises(UnknownSymbol) as ei:
        parse_config(text)
    line, col, msg = ei.value.errors[0]
    assert line == 6 and "z" in msg
    assert text.splitlines()[line - 1][col - 1] == "z"


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        parse_config(MINIMAL.replace('g = [["1", "0"], ["0", "1"]]', 'g = [["1"]]'))


def test_toml_syntax_error_located():
    with pytest.raises(ParseError) as ei:
        parse_config("command = \n")
    assert ei.value.errors[0][0] == 1


def _zoo_configs():
    specs = [zoo.euclidean(2), zoo.round_sphere(), zoo.randers_varying(), zoo.randers_constant([0.3, -0.2], periodic=True),
             zoo.hyperbolic_warped(), zoo.circle_warp("randers"), zoo.sphere_product(), zoo.randers_base_warp(),
             zoo.random_periodic_warp(3, base_dim=2), zoo.hyperbolic_product()]
    return [RunConfig(command="curvature", metric=s, seed=i, params={"flag_u": [0.0, 1.0]}) for i, s in enumerate(specs)]


@pytest.mark.parametrize("cfg", _zoo_configs(), ids=lambda c: c.metric.kind)
def test_round_trip(cfg):
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.toml")))
def test_shipped_configs_parse(name):
    cfg = parse_config((CONFIGS / name).read_text())
    assert parse_config(serialize_config(cfg)) == cfg


def test_warped_check_report(tmp_path):
    out = tmp_path / "r.json"
    code = main(["warped-check", "--config", str(CONFIGS / "hyperbolic_warped.toml"), "--out", str(out),
                 "--format", "structured", "--seed", "3"])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["seed"] == 3
    for tag in ("f2", "f10", "eq4", "1.6"):
        assert tag in rep["result"]["residuals"] and rep["result"]["residuals"][tag] < 1e-6
    assert "timing" in rep and rep["status"]["exit"] == 0


def test_text_report_shows_both_laplacian_conventions(capsys):
    assert main(["warped-check", "--config", str(CONFIGS / "hyperbolic_warped.toml")]) == 0
    out = capsys.readouterr().out
    assert "-tr Hess f" in out and "div grad f" in out


def test_audit_reports_violation_with_exit_zero(tmp_path):
    out = tmp_path / "a.json"
    code = main(["audit", "--config", str(CONFIGS / "audit_circle.toml"), "--out", str(out), "--format", "structured"])
    assert code == 0
    assert json.loads(out.read_text())["result"]["report"]["verdict"] == "einstein-violated"


def test_validate_bad_randers_fails(capsys):
    code = main(["validate", "--config", str(CONFIGS / "randers_bad.toml")])
    assert code != 0
    assert "NotPositiveDefinite" in capsys.readouterr().err


def test_config_errors_exit_two(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text(MINIMAL.replace("kind", "knd"))
    assert main(["validate", "--config", str(p)]) == 2
    assert f"{p}:" in capsys.readouterr().err


def test_volume_report_has_ht_tag(tmp_path):
    out = tmp_path / "v.json"
    assert main(["volume", "--config", str(CONFIGS / "randers_volume.toml"), "--out", str(out),
                 "--format", "structured", "--budget", "100000"]) == 0
    rep = json.loads(out.read_text())
    assert rep["result"]["tag"] == "2.02" and rep["budget"] == 100000


def test_geodesic_command():
    cfg = parse_config((CONFIGS / "sphere_geodesic.toml").read_text())
    rep, code, _ = build_report(cfg)
    assert code == 0 and rep["result"]["speed_drift"] < 1e-6


def test_engine_error_exit():
    cfg = parse_config(MINIMAL.replace('"validate"', '"warped-check"'))
    rep, code, msg = build_report(cfg)
    assert code == 3 and rep["error"]["type"] == "FinslerError"


def test_reports_reproducible():
    cfg = parse_config((CONFIGS / "sphere_curvature.toml").read_text())
    a = strip_timing(structured(build_report(cfg)[0]))
    b = strip_timing(structured(build_report(cfg)[0]))
    assert a == b
