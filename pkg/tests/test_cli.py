"""Command-line behavior: artifacts, exit codes, determinism."""
import numpy as np
import pytest

from dnacodec.cli import main


def _write_payload(tmp_path, rng, n=300, name="input.bin"):
    data = rng.integers(0, 256, size=n, dtype=np.uint8).tobytes()
    path = tmp_path / name
    path.write_bytes(data)
    return path, data


def _encode(tmp_path, inp, tag=""):
    pool = tmp_path / f"pool{tag}.fasta"
    manifest = tmp_path / f"manifest{tag}.json"
    rc = main(["encode", str(inp), "-o", str(pool), "-m", str(manifest)])
    assert rc == 0
    return pool, manifest


# ---------------------------------------------------------------------------
# happy paths


def test_encode_decode_round_trip(tmp_path, rng):
    inp, data = _write_payload(tmp_path, rng)
    pool, manifest = _encode(tmp_path, inp)
    out = tmp_path / "out.bin"
    rc = main(["decode", str(pool), "-m", str(manifest), "-o", str(out), "--strict"])
    assert rc == 0
    assert out.read_bytes() == data


def test_artifacts_are_byte_deterministic(tmp_path, rng):
    inp, _ = _write_payload(tmp_path, rng)
    pool_a, man_a = _encode(tmp_path, inp, tag="a")
    pool_b, man_b = _encode(tmp_path, inp, tag="b")
    assert pool_a.read_bytes() == pool_b.read_bytes()
    assert man_a.read_bytes() == man_b.read_bytes()


def test_simulate_then_decode_reads(tmp_path, rng):
    inp, data = _write_payload(tmp_path, rng, n=200)
    pool, manifest = _encode(tmp_path, inp)
    reads = tmp_path / "reads.fasta"
    rc = main(["simulate", str(pool), "-m", str(manifest), "-o", str(reads), "--seed", "5"])
    assert rc == 0
    out = tmp_path / "out.bin"
    # headers say >read|..., so auto-detection must take the reads path
    rc = main(["decode", str(reads), "-m", str(manifest), "-o", str(out), "--strict"])
    assert rc == 0
    assert out.read_bytes() == data

    again = tmp_path / "reads2.fasta"
    rc = main(["simulate", str(pool), "-m", str(manifest), "-o", str(again), "--seed", "5"])
    assert rc == 0
    assert again.read_bytes() == reads.read_bytes()


def test_stats_reports_the_pool(tmp_path, rng, capsys):
    inp, _ = _write_payload(tmp_path, rng, n=38 * 6)
    pool, manifest = _encode(tmp_path, inp)
    rc = main(["stats", str(pool), "-m", str(manifest)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "bits per nucleotide" in text
    assert "mode                      full" in text
    assert "max homopolymer (payload) 3" in text


def test_ablate_prints_four_rows(tmp_path, rng, capsys):
    inp, _ = _write_payload(tmp_path, rng, n=38 * 4)
    rc = main(["ablate", str(inp)])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    modes = [l.split()[0] for l in lines[2:]]
    assert modes == ["naive", "kron_only", "fsm_only", "full"]
    assert "2.00" in lines[2]


def test_verbose_goes_to_stderr(tmp_path, rng, capsys):
    inp, _ = _write_payload(tmp_path, rng, n=100)
    pool = tmp_path / "pool.fasta"
    manifest = tmp_path / "manifest.json"
    rc = main(["encode", str(inp), "-o", str(pool), "-m", str(manifest), "-v"])
    assert rc == 0
    captured = capsys.readouterr()
    assert "encoded 100 B" in captured.err
    assert captured.out == ""


def test_mode_flag_reaches_the_manifest(tmp_path, rng):
    inp, data = _write_payload(tmp_path, rng, n=150)
    pool = tmp_path / "pool.fasta"
    manifest = tmp_path / "manifest.json"
    rc = main(["encode", str(inp), "-o", str(pool), "-m", str(manifest), "--mode", "naive"])
    assert rc == 0
    assert '"mode": "naive"' in manifest.read_text()
    out = tmp_path / "out.bin"
    assert main(["decode", str(pool), "-m", str(manifest), "-o", str(out)]) == 0
    assert out.read_bytes() == data


# ---------------------------------------------------------------------------
# erasures and --strict


def test_strict_fails_on_dropped_strand(tmp_path, rng, capsys):
    inp, data = _write_payload(tmp_path, rng)
    pool, manifest = _encode(tmp_path, inp)
    lines = pool.read_text().splitlines(keepends=True)
    pool.write_text("".join(lines[:2] + lines[4:]))  # remove strand 1 entirely
    out = tmp_path / "out.bin"

    rc = main(["decode", str(pool), "-m", str(manifest), "-o", str(out), "--strict"])
    captured = capsys.readouterr()
    assert rc == 1
    assert "erasure offset=" in captured.err
    assert "cause=dropout" in captured.err

    rc = main(["decode", str(pool), "-m", str(manifest), "-o", str(out)])
    assert rc == 0
    assert len(out.read_bytes()) == len(data)
    assert out.read_bytes() != data


# ---------------------------------------------------------------------------
# exit codes


def test_missing_input_is_a_usage_error(tmp_path, capsys):
    rc = main(["encode", str(tmp_path / "nope.bin"),
               "-o", str(tmp_path / "p.fasta"), "-m", str(tmp_path / "m.json")])
    assert rc == 2
    assert "cannot read" in capsys.readouterr().err


def test_tampered_manifest_is_a_data_error(tmp_path, rng, capsys):
    inp, _ = _write_payload(tmp_path, rng, n=120)
    pool, manifest = _encode(tmp_path, inp)
    text = manifest.read_text().replace('"mode": "full"', '"mode": "naive"')
    manifest.write_text(text)
    rc = main(["decode", str(pool), "-m", str(manifest), "-o", str(tmp_path / "out.bin")])
    assert rc == 1
    assert "checksum" in capsys.readouterr().err


def test_wrong_input_kind_is_a_data_error(tmp_path, rng):
    inp, _ = _write_payload(tmp_path, rng, n=200)
    pool, manifest = _encode(tmp_path, inp)
    reads = tmp_path / "reads.fasta"
    assert main(["simulate", str(pool), "-m", str(manifest), "-o", str(reads)]) == 0
    rc = main(["decode", str(reads), "-m", str(manifest), "-o", str(tmp_path / "out.bin"),
               "--input-kind", "pool"])
    assert rc == 1


def test_argparse_violations_exit_two(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["decode"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_bad_threads_value_is_a_usage_error(tmp_path, rng, capsys):
    inp, _ = _write_payload(tmp_path, rng, n=50)
    rc = main(["ablate", str(inp), "--threads", "0"])
    assert rc == 2
    assert "--threads" in capsys.readouterr().err


def test_bad_rate_flag_rejected_by_parser(tmp_path, rng):
    inp, _ = _write_payload(tmp_path, rng, n=50)
    pool, manifest = _encode(tmp_path, inp)
    with pytest.raises(SystemExit) as exc:
        main(["simulate", str(pool), "-m", str(manifest), "-o", str(tmp_path / "r.fasta"),
              "--dropout-rate", "1.5"])
    assert exc.value.code == 2
