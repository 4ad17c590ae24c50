import numpy as np
import pytest

import gpfusion.pursuits
from gpfusion.bench import csv_body_without_wall
from gpfusion.cli import main, parse_config_text
from gpfusion.ensemble import RngSeed, SignalSpec, gen_sensing_matrix, gen_sparse_signal, write_matrix, write_vector
from gpfusion.errors import ConfigInvalid
from gpfusion.pursuits import PursuitConfig, fugp

FULL_SCALE = """\
# Gaussian sparse signals, clean measurements
N = 500
K = 20
alphas = 0.18
S = 2
T = 2
distribution = gaussian
noise = clean
algorithms = omp,sp,fugp,ifugp
seed = 0
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text(FULL_SCALE)
    return path


def test_parse_config_text():
    settings = parse_config_text(FULL_SCALE)
    assert settings["n"] == "500" and settings["algorithms"] == "omp,sp,fugp,ifugp"
    with pytest.raises(ConfigInvalid):
        parse_config_text("bogus = 1")
    with pytest.raises(ConfigInvalid):
        parse_config_text("no equals sign")


def test_bench_overrides_to_four_rows(config, capsys):
    code = main(["bench", "--config", str(config), "--set", "alphas=0.5",
                 "--set", "S=1", "--set", "T=1", "--stdout"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 5
    assert {line.split(",")[2] for line in lines[1:]} == {"omp", "sp", "fugp", "ifugp"}


def test_bench_writes_csv_and_manifest(config, tmp_path):
    out = tmp_path / "res" / "out.csv"
    assert main(["bench", "--config", str(config), "--set", f"output={out}"]) == 0
    assert out.read_text().startswith("alpha,M,algorithm")
    manifest = (tmp_path / "res" / "out.csv.manifest").read_text()
    assert "seed = 0" in manifest and "N = 500" in manifest


def test_bench_fusion_beats_omp(config, capsys):
    assert main(["bench", "--config", str(config), "--set", "S=4", "--set", "T=10", "--stdout"]) == 0
    rows = {line.split(",")[2]: line.split(",") for line in capsys.readouterr().out.splitlines()[1:]}
    assert float(rows["fugp"][5]) > float(rows["omp"][5])


def test_bench_non_integer_measurements(config, capsys):
    assert main(["bench", "--config", str(config), "--set", "alphas=0.123"]) == 2
    assert "0.123" in capsys.readouterr().err


def test_bench_unknown_key(config):
    assert main(["bench", "--config", str(config), "--set", "colour=red"]) == 2


def test_bench_missing_config(tmp_path):
    assert main(["bench", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_bench_io_failure(config, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code = main(["bench", "--config", str(config), "--set", "S=1", "--set", "T=1",
                 "--set", f"output={blocker / 'sub' / 'x.csv'}"])
    assert code == 3


def test_unknown_flag_rejected(config):
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--config", str(config), "--frobnicate"])
    assert exc.value.code == 2


def test_seed_flag_reproduces_csv_body(config, capsys):
    bodies = []
    for _ in range(2):
        main(["bench", "--config", str(config), "--seed", "42", "--stdout"])
        bodies.append(csv_body_without_wall(capsys.readouterr().out))
    main(["bench", "--config", str(config), "--seed", "43", "--stdout"])
    assert bodies[0] == bodies[1] != csv_body_without_wall(capsys.readouterr().out)


def test_seed_env_fallback(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(FULL_SCALE.replace("seed = 0\n", ""))
    monkeypatch.setenv("GPFUSION_SEED", "42")
    main(["bench", "--config", str(cfg), "--stdout"])
    from_env = csv_body_without_wall(capsys.readouterr().out)
    main(["bench", "--config", str(cfg), "--seed", "42", "--stdout"])
    assert from_env == csv_body_without_wall(capsys.readouterr().out)


def test_noisy_config(config, capsys):
    code = main(["bench", "--config", str(config), "--set", "noise=noisy", "--set", "smnr_db=15",
                 "--set", "S=1", "--set", "T=2", "--stdout"])
    assert code == 0
    assert main(["bench", "--config", str(config), "--set", "noise=noisy"]) == 2


@pytest.fixture
def identity_files(tmp_path):
    write_matrix(tmp_path / "A.csv", np.eye(5))
    write_vector(tmp_path / "b.csv", np.array([0, 0, 7.0, 0, 0]))
    return tmp_path / "A.csv", tmp_path / "b.csv"


@pytest.mark.parametrize("algo", ["omp", "sp", "fugp", "ifugp"])
def test_recover_identity(identity_files, algo, capsys):
    A, b = identity_files
    assert main(["recover", "--matrix", str(A), "--measurement", str(b),
                 "--sparsity", "1", "--algo", algo]) == 0
    assert capsys.readouterr().out == "support: 2\ncoefficients: 7\nresidual_norm: 0\n"


def test_recover_one_based_and_out(identity_files, tmp_path, capsys):
    A, b = identity_files
    out = tmp_path / "xhat.csv"
    assert main(["recover", "--matrix", str(A), "--measurement", str(b), "--sparsity", "1",
                 "--algo", "omp", "--index-base", "1", "--out", str(out)]) == 0
    assert capsys.readouterr().out.startswith("support: 3\n")
    np.testing.assert_array_equal(np.loadtxt(out), [0, 0, 7, 0, 0])


def test_recover_round_trip_matches_library(tmp_path, capsys):
    rs = RngSeed(77)
    A = gen_sensing_matrix(24, 60, rs.matrix_rng(0, 0))
    x, _ = gen_sparse_signal(SignalSpec(60, 5), rs.trial_rng(0, 0, 0))
    b = A @ x
    write_matrix(tmp_path / "A.csv", A)
    write_vector(tmp_path / "b.csv", b)
    assert main(["recover", "--matrix", str(tmp_path / "A.csv"), "--measurement", str(tmp_path / "b.csv"),
                 "--sparsity", "5", "--algo", "fugp", "--out", str(tmp_path / "x.csv")]) == 0
    est, _ = fugp(A, b, PursuitConfig(5))
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "support: " + " ".join(map(str, est.support))
    assert [float(c) for c in lines[1].split()[1:]] == list(est.coefficients)
    assert np.array_equal(np.loadtxt(tmp_path / "x.csv"), est.to_dense())


def test_recover_bad_input(tmp_path, identity_files):
    A, b = identity_files
    (tmp_path / "short.csv").write_text("1\n2\n")
    assert main(["recover", "--matrix", str(A), "--measurement", str(tmp_path / "short.csv"),
                 "--sparsity", "1", "--algo", "omp"]) == 2
    (tmp_path / "junk.csv").write_text("a,b\n")
    assert main(["recover", "--matrix", str(tmp_path / "junk.csv"), "--measurement", str(b),
                 "--sparsity", "1", "--algo", "omp"]) == 2
    assert main(["recover", "--matrix", str(A), "--measurement", str(b),
                 "--sparsity", "5", "--algo", "omp"]) == 2


def test_recover_algorithm_error(tmp_path, capsys):
    A = np.ones((6, 4))
    write_matrix(tmp_path / "A.csv", A)
    write_vector(tmp_path / "b.csv", np.ones(6))
    assert main(["recover", "--matrix", str(tmp_path / "A.csv"), "--measurement", str(tmp_path / "b.csv"),
                 "--sparsity", "2", "--algo", "omp"]) == 4


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4


def test_selftest_catches_flipped_tie_rule(monkeypatch, capsys):
    real = gpfusion.pursuits.argmax_correlation

    def highest_index_wins(c, exclude=(), magnitude=True):
        score = np.abs(c) if magnitude else np.array(c, dtype=float)
        score[list(exclude)] = -np.inf
        return int(len(score) - 1 - np.argmax(score[::-1]))

    monkeypatch.setattr(gpfusion.pursuits, "argmax_correlation", highest_index_wins)
    assert main(["selftest"]) == 1
    assert "determinism" in [line.split()[0] for line in capsys.readouterr().out.splitlines() if "FAIL" in line]
    assert real is not highest_index_wins
