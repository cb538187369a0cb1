"""Artifact files: bit-exact field storage, traces, digest manifests."""

import hashlib
import json

import numpy as np
import pytest

from sbpbox.exceptions import ConfigError, GridMismatch, InvalidParameter
from sbpbox.grid import (CENTERED, DIRICHLET_SINE, NEUMANN_COSINE, NODAL,
                         BoxDomain, ScalarField, make_grid, random_band_field)
from sbpbox.runio import (OUTPUT_ROOT_ENV, load_field, output_root,
                          prepare_run_dir, read_json, read_manifest,
                          read_trace, sha256_file, save_field, verify_manifest,
                          write_json, write_manifest, write_trace)
from sbpbox.solver import TraceRow


@pytest.mark.parametrize("boundary_class", [DIRICHLET_SINE, NEUMANN_COSINE])
def test_spectral_field_round_trip(tmp_path, grid8, rng, boundary_class):
    f = random_band_field(grid8, boundary_class, rng)
    names = save_field(tmp_path, "u", f)
    assert set(names) == {"u.bin", "u.json"}
    g = load_field(tmp_path, "u", grid8)
    assert g.boundary_class == boundary_class
    assert np.array_equal(g.coeffs, f.coeffs)


def test_nodal_field_round_trip(tmp_path, grid8, rng):
    base = random_band_field(grid8, NEUMANN_COSINE, rng)
    f = ScalarField(grid8, NODAL, values=base.values.copy(), node_set=CENTERED)
    save_field(tmp_path, "w", f)
    g = load_field(tmp_path, "w")
    assert g.boundary_class == NODAL
    assert g.node_set == CENTERED
    assert np.array_equal(g.values, f.values)
    assert g.grid.lengths == grid8.lengths


def test_load_field_grid_checks(tmp_path, grid8, rng):
    f = random_band_field(grid8, DIRICHLET_SINE, rng)
    save_field(tmp_path, "u", f)
    other = make_grid(BoxDomain((2.0, 2.0, 2.0)), 8)
    with pytest.raises(GridMismatch):
        load_field(tmp_path, "u", other)
    # reconstructing the grid from the header works without one
    g = load_field(tmp_path, "u")
    assert g.grid.lengths == grid8.lengths
    assert g.grid.n == grid8.n


def test_load_field_version_check(tmp_path, grid8, rng):
    f = random_band_field(grid8, DIRICHLET_SINE, rng)
    save_field(tmp_path, "u", f)
    header = json.loads((tmp_path / "u.json").read_text())
    header["format_version"] = 99
    (tmp_path / "u.json").write_text(json.dumps(header))
    with pytest.raises(InvalidParameter):
        load_field(tmp_path, "u", grid8)


def test_field_file_is_raw_little_endian(tmp_path, grid8, rng):
    f = random_band_field(grid8, DIRICHLET_SINE, rng)
    save_field(tmp_path, "u", f)
    raw = np.frombuffer((tmp_path / "u.bin").read_bytes(), dtype="<f8")
    assert np.array_equal(raw.reshape(grid8.sine_shape), f.coeffs)


def test_trace_round_trip_exact(tmp_path):
    trace = [
        TraceRow(iteration=0, J=1.0 / 3.0, grad_norm=1e-3, omega=29.608813203268074,
                 mu=None, c1_residual=-1.1102230246251565e-16, c2_residual=0.0),
        TraceRow(iteration=1, J=0.3330000000000001, grad_norm=9.999999999999999e-05,
                 mu=0.125, omega=29.6, c1_residual=0.0, c2_residual=2e-13),
    ]
    path = tmp_path / "trace.csv"
    write_trace(path, trace)
    rows = read_trace(path)
    assert len(rows) == 2
    for given, got in zip(trace, rows):
        assert got["iteration"] == given.iteration
        assert got["J"] == given.J
        assert got["grad_norm"] == given.grad_norm
        assert got["omega"] == given.omega
        assert got["mu"] == given.mu
        assert got["c1_residual"] == given.c1_residual
        assert got["c2_residual"] == given.c2_residual


def test_json_round_trip(tmp_path):
    payload = {"J": -0.123456789012345678, "status": "converged", "trace": [1, 2]}
    write_json(tmp_path / "out.json", payload)
    assert read_json(tmp_path / "out.json") == payload


def test_sha256_matches_hashlib(tmp_path):
    p = tmp_path / "blob.bin"
    p.write_bytes(b"\x00\x01payload" * 1000)
    assert sha256_file(p) == hashlib.sha256(p.read_bytes()).hexdigest()


def test_manifest_digests_and_verification(tmp_path, grid8, rng):
    f = random_band_field(grid8, DIRICHLET_SINE, rng)
    save_field(tmp_path, "u", f)
    write_json(tmp_path / "solution.json", {"J": 1.0})
    manifest = write_manifest(tmp_path, command="solve-navier",
                              config_text="command = \"solve-navier\"\n",
                              seed=0, wall_time_s=0.1,
                              verification=[["sphere-constraint", 0.0, 1e-8]])
    assert set(manifest["files"]) == {"u.bin", "u.json", "solution.json"}
    assert verify_manifest(tmp_path) == []
    stored = read_manifest(tmp_path)
    assert stored["command"] == "solve-navier"
    assert stored["seed"] == 0
    # tamper with one artifact
    raw = bytearray((tmp_path / "u.bin").read_bytes())
    raw[0] ^= 0xFF
    (tmp_path / "u.bin").write_bytes(bytes(raw))
    assert verify_manifest(tmp_path) == ["u.bin"]


def test_manifest_missing(tmp_path):
    with pytest.raises(ConfigError):
        read_manifest(tmp_path)


def test_output_root_env_override(tmp_path, monkeypatch):
    monkeypatch.delenv(OUTPUT_ROOT_ENV, raising=False)
    assert output_root("some/dir") == output_root("some/dir")
    assert str(output_root("some/dir")) == "some/dir"
    assert str(output_root(None)) == "runs"
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "override"))
    assert output_root("some/dir") == tmp_path / "override"


def test_prepare_run_dir(tmp_path):
    d = prepare_run_dir(tmp_path, "exp-001")
    assert d.is_dir()
    again = prepare_run_dir(tmp_path, "exp-001")
    assert again == d
