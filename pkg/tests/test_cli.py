import numpy as np
import pytest

from noslink.cli import main
from noslink.codebook import save_codebook
from noslink.receiver import save_weights

from util import make_weights, orthogonal_codebook


@pytest.fixture
def setup(tmp_path):
    cb = orthogonal_codebook(v=4, d=128, m=16)
    cb_path = tmp_path / "cb.nosc"
    save_codebook(cb, cb_path)
    w = make_weights(np.random.default_rng(0), v=4, d=128, m=16, n_t=4, n_r=4)
    w_path = tmp_path / "w.nosw"
    save_weights(w, w_path)
    cfg_path = tmp_path / "sim.cfg"
    cfg_path.write_text(f"""
system = nos
codebook = {cb_path}
v = 4
m = 16
d = 128
nt = 4
nr = 4
snr_db = 0
k = 8
iter = 2
min_errors = 5
max_packets = 128
seed = 3
""")
    return tmp_path, str(cb_path), str(w_path), str(cfg_path)


def test_simulate_writes_csv(setup, capsys):
    tmp_path, _, _, cfg = setup
    out = tmp_path / "result.csv"
    rc = main(["simulate", "--config", cfg, "--out", str(out), "--quiet"])
    assert rc == 0
    text = out.read_text()
    assert text.startswith("snr_db,packets,pkt_errors,per,per_lo,per_hi,ber,"
                           "metric_evals")
    assert len(text.strip().splitlines()) == 2
    shown = capsys.readouterr().out
    assert "PER" in shown


def test_simulate_deterministic_csv(setup):
    tmp_path, _, _, cfg = setup
    out1 = tmp_path / "r1.csv"
    out2 = tmp_path / "r2.csv"
    assert main(["simulate", "--config", cfg, "--out", str(out1), "--quiet"]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(out2), "--quiet"]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_validate_artifacts_cli(setup, capsys):
    _, cb_path, w_path, _ = setup
    rc = main(["validate-artifacts", "--codebook", cb_path, "--weights", w_path])
    assert rc == 0
    assert "[ok ]" in capsys.readouterr().out


def test_validate_artifacts_cli_failure(tmp_path, capsys):
    bad = tmp_path / "bad.nosc"
    bad.write_bytes(b"junk")
    rc = main(["validate-artifacts", "--codebook", str(bad)])
    assert rc == 1
    assert "[FAIL]" in capsys.readouterr().out


def test_analyze_codebook_cli(setup, tmp_path, capsys):
    _, cb_path, _, _ = setup
    prefix = tmp_path / "hist"
    rc = main(["analyze-codebook", "--codebook", cb_path, "--channels", "2",
               "--nt", "4", "--nr", "4", "--out", str(prefix)])
    assert rc == 0
    pre_inter = (tmp_path / "hist_pre_inter.csv").read_text()
    assert pre_inter.splitlines()[0] == "bin_low_db,bin_high_db,count"
    # orthogonal codebook: all inter entries clamp to the lowest bin
    first_row = pre_inter.splitlines()[1].split(",")
    assert int(first_row[2]) == 4 * 3 * 16 * 16
    assert (tmp_path / "hist_post_intra.csv").exists()


def test_decode_one_cli(setup, capsys):
    _, _, _, cfg = setup
    rc = main(["decode-one", "--config", cfg, "--snr-db", "0", "--packet", "2"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "best candidate" in out
    assert "crc_pass=" in out


def test_miss_rate_cli(setup, capsys):
    _, _, _, cfg = setup
    rc = main(["miss-rate", "--config", cfg, "--iters", "0,2",
               "--packets", "16", "--quiet"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "rate" in out
