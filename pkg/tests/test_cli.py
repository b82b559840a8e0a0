import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from fracmech.cli import format_csv, parse_function_spec, read_csv, run
from fracmech.errors import DomainError, FunctionSpecError
from fracmech.frac_ops import ClosedFormFn, Grid, GridFn, Side, interior_mask


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def parse_csv_text(text):
    lines = text.strip().splitlines()
    assert lines[0] == "t,value"
    return np.array([[float(x) for x in line.split(",")] for line in lines[1:]])


# {{{ function specs


def test_parse_power():
    fn = parse_function_spec("pow:0.5")
    assert fn.terms[0].exponent == 0.5
    assert fn.terms[0].anchor is Side.Left


def test_parse_sum():
    fn = parse_function_spec("2*pow:1 + const:3")
    t = np.linspace(0, 1, 5)
    np.testing.assert_allclose(fn(t), 2 * t + 3)


def test_parse_right_and_interval():
    fn = parse_function_spec("-1.5e0 * rpow:2+pow:0", a=1.0, b=3.0)
    np.testing.assert_allclose(fn(np.array([1.0, 2.0])), [-1.5 * 4 + 1, -1.5 + 1])


@pytest.mark.parametrize(("spec", "position"), [
    ("pow:-1.5", 4), ("sin:1", 0), ("pow:1 - const:2", 6), ("pow:1 +", 7), ("", 0)])
def test_parse_errors(spec, position):
    with pytest.raises(FunctionSpecError) as exc:
        parse_function_spec(spec)
    assert exc.value.position == position


# }}}


# {{{ csv


def test_csv_round_trip(tmp_path):
    grid = Grid(0.0, 2.0, 10)
    f = GridFn(grid, np.exp(grid.nodes) / 3)
    path = tmp_path / "f.csv"
    path.write_text(format_csv(f))
    g = read_csv(path)
    assert g.grid == grid
    np.testing.assert_array_equal(g.values, f.values)


def test_csv_rejects_non_uniform(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,value\n0,1\n0.1,1\n0.3,1\n")
    code, _, err = invoke("deriv", "--input", str(path))
    assert code == 1
    assert "uniform" in err


# }}}


# {{{ subcommands


def test_deriv_power_half():
    code, out, _ = invoke("deriv", "--fn", "pow:0.5", "--alpha", "0.5", "--a", "0", "--b", "1",
                          "--grid-n", "1024", "--scheme", "gl")
    assert code == 0
    data = parse_csv_text(out)
    assert data.shape == (1025, 2)
    mask = data[:, 0] >= 0.1
    np.testing.assert_allclose(data[mask, 1], 0.8862269254527579, rtol=0.02)


def test_deriv_digits():
    _, out, _ = invoke("deriv", "--fn", "pow:0.5", "--grid-n", "8")
    row = out.splitlines()[3].split(",")
    assert all(len(x.replace(".", "").replace("-", "").lstrip("0")) >= 12 for x in row[1:])


def test_deriv_deterministic():
    argv = ("deriv", "--fn", "pow:0.5 + 2*rpow:1.5", "--alpha", "0.3", "--grid-n", "300")
    assert invoke(*argv)[1] == invoke(*argv)[1]


def both_schemes(spec, alpha):
    base = ("deriv", "--fn", spec, "--alpha", alpha, "--grid-n", "1024")
    gl = parse_csv_text(invoke(*base, "--scheme", "gl")[1])
    quad = parse_csv_text(invoke(*base, "--scheme", "quad")[1])
    mask = interior_mask(Grid(0.0, 1.0, 1024))
    return gl[mask, 1], quad[mask, 1]


@pytest.mark.parametrize("spec", ["pow:0.5", "pow:1", "pow:2", "2*pow:1 + const:3", "pow:1.5 + rpow:1"])
@pytest.mark.parametrize("alpha", ["0.25", "0.5", "0.75"])
def test_scheme_cross_check(spec, alpha):
    gl, quad = both_schemes(spec, alpha)
    np.testing.assert_allclose(gl, quad, rtol=0.01)


@pytest.mark.parametrize("alpha", ["0.25", "0.5", "0.75"])
def test_scheme_cross_check_near_cancellation(alpha):
    # the left derivative of this mix dips close to zero near t = 1, where a
    # pointwise relative gap is ill-conditioned; measure against the sup norm
    gl, quad = both_schemes("pow:1.5 + rpow:2", alpha)
    assert np.max(np.abs(gl - quad)) <= 0.01 * np.max(np.abs(quad))


def test_round_trip_deriv_integral(tmp_path):
    d = tmp_path / "d.csv"
    i = tmp_path / "i.csv"
    base = ("--alpha", "0.4", "--grid-n", "512")
    assert invoke("deriv", "--fn", "pow:2 + pow:1", *base, "--output", str(d))[0] == 0
    assert invoke("integral", "--input", str(d), *base, "--output", str(i))[0] == 0
    back = read_csv(i)
    expected = back.t**2 + back.t
    mask = interior_mask(back.grid)
    np.testing.assert_allclose(back.values[mask], expected[mask], rtol=1e-8)


def test_integral_right():
    code, out, _ = invoke("integral", "--fn", "const:1", "--alpha", "1", "--side", "right",
                          "--grid-n", "100")
    data = parse_csv_text(out)
    np.testing.assert_allclose(data[:, 1], 1 - data[:, 0] + 0.01, rtol=1e-10)


def test_integral_quad_rejected():
    assert invoke("integral", "--fn", "const:1", "--scheme", "quad")[0] == 1


def test_el_check_free_particle():
    code, out, _ = invoke("el-check", "--fn", "pow:1", "--alpha", "1", "--beta", "1",
                          "--mass", "1,0,0", "--grid-n", "64")
    assert code == 0
    report = json.loads(out)
    assert report["residuals"]["el_residual"]["max_abs"] < 1e-9
    lo, hi = report["residuals"]["el_residual"]["t_range"]
    assert lo >= 0.1 and hi <= 0.9


def test_hj_solve_diagonal():
    code, out, _ = invoke("hj-solve", "--mass", "2,0,3", "--energy", "1", "--split", "0.2,0.8")
    assert code == 0
    results = json.loads(out)["results"]
    assert results["hamiltonian_kind"] == "FullRank"
    assert results["w1_coef"] == pytest.approx(math.sqrt(0.8))
    assert results["w2_coef"] == pytest.approx(math.sqrt(4.8))
    assert abs(results["hjpde_residual"]) < 1e-14


def test_example1(tmp_path):
    out = tmp_path / "ex1.json"
    code, _, _ = invoke("example1", "--energy", "2", "--alpha", "0.75", "--grid-n", "2048",
                        "--output", str(out))
    assert code == 0
    report = json.loads(out.read_text())
    assert report["results"]["p_alpha"] == 2.0
    assert report["results"]["hjpde_residual"] == 0.0
    assert report["residuals"]["closure_residual"]["max_abs"] < 0.02 * 2.0
    assert any(w.startswith("known-nonzero: el_residual") for w in report["warnings"])

    traj = read_csv(tmp_path / report["series"]["trajectory"]["file"])
    expected = 2 * traj.t**0.75 / math.gamma(1.75)
    np.testing.assert_allclose(traj.values, expected, rtol=1e-13)


def test_example2():
    code, out, _ = invoke("example2", "--energy", "0.5", "--alpha", "0.5", "--beta", "0.5")
    assert code == 0
    report = json.loads(out)
    results = report["results"]
    assert results["p_alpha"] == results["p_beta"] == pytest.approx(1.0, rel=1e-15)
    assert results["constraint"] is True
    assert any(w.startswith("known-nonzero: operator_residual") for w in report["warnings"])
    series = report["series"]["operator_residual"]
    k = series["t"].index(0.5)
    assert series["value"][k] == pytest.approx(1.5957691216057308, rel=0.02)
    assert series["value"][0] is None or math.isfinite(series["value"][0])


def test_example2_csv_output():
    code, out, _ = invoke("example2", "--grid-n", "16", "--format", "csv")
    assert code == 0
    assert parse_csv_text(out).shape == (17, 2)


def test_hj_solve_has_no_csv():
    assert invoke("hj-solve", "--format", "csv")[0] == 1


# }}}


# {{{ exit codes


@pytest.mark.parametrize("argv", [
    ("deriv",),
    ("deriv", "--fn", "pow:-1.5"),
    ("deriv", "--fn", "pow:1", "--grid-n", "1"),
    ("deriv", "--fn", "pow:1", "--a", "1", "--b", "0"),
    ("example1", "--energy", "-1"),
    ("bogus",),
    ("deriv", "--fn", "pow:1", "--scheme", "fft"),
    ("hj-solve", "--mass", "1,2"),
    ("deriv", "--fn", "pow:1", "--scheme", "quad", "--alpha", "1.5"),
])
def test_config_errors(argv):
    code, out, err = invoke(*argv)
    assert code == 1
    assert out == ""
    assert err.startswith("fracmech: error")


@pytest.mark.parametrize("argv", [
    ("hj-solve", "--mass", "1,0.5,1"),
    ("hj-solve", "--mass", "1,0,1", "--potential", "0,0,1"),
    ("hj-solve", "--mass", "1,0,-1"),
    ("el-check", "--fn", "pow:-0.5"),
])
def test_numerical_failures(argv):
    code, _, err = invoke(*argv)
    if argv[0] == "el-check":
        # a singular trajectory is an input error for the finite-value GL scheme
        assert code == 1
    else:
        assert code == 2
        assert err.startswith("fracmech: numerical failure")


def test_numerical_failure_from_power_rule():
    with pytest.raises(DomainError):
        ClosedFormFn.power(1.0, -1.5)


def test_main_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fracmech", "deriv", "--fn", "pow:1",
                           "--grid-n", "4", "--alpha", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "t,value"


# }}}
