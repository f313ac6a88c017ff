"""Command-line smoke tests: file outputs, exit codes, determinism."""

import os

import pytest

from mechlogic.cli import main
from mechlogic.isa import MemoryImage, assemble, sieve_program


def run(args, tmp_path, extra=()):
    return main(["--outdir", str(tmp_path), *extra, *args])


def test_truth_table_golden(tmp_path):
    rc = run(["truth-table", "--golden"], tmp_path)
    assert rc == 0
    lines = (tmp_path / "truth_table.csv").read_text().splitlines()
    assert lines[0] == "in1,in2,amplitude,level"
    assert [l.split(",")[-1] for l in lines[1:]] == ["ONE", "ZERO", "ZERO", "ZERO"]


def test_nor_map(tmp_path):
    rc = run(["nor-map", "--n", "5"], tmp_path)
    assert rc == 0
    lines = (tmp_path / "nor_map.csv").read_text().splitlines()
    assert lines[0] == "F_G1,F_G2,u_C_amplitude,level"
    assert len(lines) == 1 + 25


def test_adder_golden(tmp_path):
    rc = run(["adder", "--golden"], tmp_path)
    assert rc == 0
    text = (tmp_path / "adder_golden.csv").read_text()
    assert text.count("\n") == 17


def test_sqrt_golden(tmp_path):
    assert run(["sqrt", "--golden", "--n", "2809"], tmp_path) == 0
    assert run(["sqrt", "--golden", "--n", "0"], tmp_path) == 0


def test_assemble_and_emulate_sieve(tmp_path):
    src = tmp_path / "sieve.s"
    src.write_text(sieve_program())
    out = tmp_path / "sieve.bin"
    rc = main(["--outdir", str(tmp_path), "assemble", str(src), "-o", str(out)])
    assert rc == 0 and out.exists()
    rc = main(["--outdir", str(tmp_path), "emulate", "--image", str(out),
               "--check-sieve"])
    assert rc == 0
    hex_text = (tmp_path / "memory.hex").read_text()
    assert len(hex_text.splitlines()) == 16


def test_emulate_default_is_sieve(tmp_path):
    rc = run(["emulate", "--check-sieve"], tmp_path)
    assert rc == 0


def test_cpu_run_golden_sieve(tmp_path):
    rc = run(["cpu-run", "--golden"], tmp_path)
    assert rc == 0
    assert (tmp_path / "events.csv").exists()


def test_utm_run(tmp_path):
    rc = run(["utm-run", "--steps", "500", "--seed", "3"], tmp_path)
    assert rc == 0
    assert (tmp_path / "utm_tape.csv").exists()


def test_calibrate_narrow_grid(tmp_path):
    from mechlogic.calibrate import operating_template
    t, _ = operating_template()
    rc = run(["calibrate", "--grid-points", "3",
              "--omega-min", str(0.99 * t.omega),
              "--omega-max", str(1.01 * t.omega)], tmp_path)
    assert rc == 0
    assert (tmp_path / "operating.calib").exists()


def test_determinism_of_outputs(tmp_path):
    a = tmp_path / "a"; b = tmp_path / "b"
    run(["nor-map", "--n", "4"], a)
    run(["nor-map", "--n", "4"], b)
    assert (a / "nor_map.csv").read_text() == (b / "nor_map.csv").read_text()
