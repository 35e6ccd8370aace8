"""End-to-end command-line tests, each through a fresh subprocess."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from tring.bench import gen_tr_tensor
from tring.dense import DenseTensor
from tring.formats import read_dense, read_ring, write_dense, write_ring
from tring.ring import TRTensor

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def run_cli(*argv, module="tring.cli", env=None):
    cmd = [sys.executable, "-m", module] + [str(a) for a in argv]
    return subprocess.run(cmd, capture_output=True, text=True, env=env)


def write_random_ring(path, dims, ranks, seed):
    tr, dense = gen_tr_tensor(dims, ranks, seed)
    write_ring(path, tr)
    return tr, dense


class TestCompress:
    def test_bals_rank_one_synthetic(self, tmp_path):
        _, dense = gen_tr_tensor((4,) * 10, (1,) * 10, seed=0)
        src = tmp_path / "t.trt"
        dst = tmp_path / "t.trc"
        write_dense(src, dense)
        proc = run_cli("compress", src, dst, "--alg", "bals", "--eps", "1e-3")
        assert proc.returncode == 0, proc.stderr
        report = json.loads(proc.stdout)
        assert report["n_params"] == 40
        assert report["eps"] <= 1e-3
        tr = read_ring(dst)
        assert tr.ranks == (1,) * 10

    def test_tr_svd_constant_all_unit_ranks(self, tmp_path):
        src = tmp_path / "c.trt"
        dst = tmp_path / "c.trc"
        write_dense(src, DenseTensor((3, 4, 5), np.full(60, 2.0)))
        proc = run_cli("compress", src, dst, "--alg", "tr-svd", "--eps", "1e-3")
        assert proc.returncode == 0, proc.stderr
        report = json.loads(proc.stdout)
        assert report["ranks"] == [1, 1, 1]
        assert read_ring(dst).num_params() == 3 + 4 + 5

    def test_tr_als_with_true_ranks(self, tmp_path):
        _, dense = gen_tr_tensor((4,) * 6, (1,) * 6, seed=3)
        src = tmp_path / "t.trt"
        dst = tmp_path / "t.trc"
        write_dense(src, dense)
        proc = run_cli(
            "compress", src, dst, "--alg", "tr-als", "--ranks", "1,1,1,1,1,1", "--seed", "5"
        )
        assert proc.returncode == 0, proc.stderr
        report = json.loads(proc.stdout)
        assert report["eps"] <= 1e-6
        assert report["converged"] is True
        assert report["seed"] == 5

    def test_tau_gates_alsar_growth(self, tmp_path):
        _, dense = gen_tr_tensor((4,) * 6, (2,) * 6, seed=3)
        src = tmp_path / "t.trt"
        write_dense(src, dense)
        # an enormous acceptance threshold vetoes every bond-growth trial
        vetoed = run_cli(
            "compress", src, tmp_path / "a.trc", "--alg", "alsar", "--eps", "1e-3",
            "--max-sweeps", "30", "--tau", "1e9",
        )
        assert vetoed.returncode == 0, vetoed.stderr
        blocked = json.loads(vetoed.stdout)
        assert blocked["ranks"] == [1] * 6
        assert blocked["eps"] > 1e-2
        allowed = run_cli(
            "compress", src, tmp_path / "b.trc", "--alg", "alsar", "--eps", "1e-3",
            "--max-sweeps", "30",
        )
        assert allowed.returncode == 0, allowed.stderr
        grown = json.loads(allowed.stdout)
        assert grown["eps"] <= 1e-3
        assert max(grown["ranks"]) > 1

    def test_flag_combinations_rejected(self, tmp_path):
        src = tmp_path / "t.trt"
        write_dense(src, DenseTensor((2, 2), np.arange(4.0)))
        dst = tmp_path / "t.trc"
        checks = [
            (["--alg", "tr-als"], "needs --ranks"),
            (["--alg", "tr-als", "--ranks", "1,1", "--eps", "1e-3"], "not --eps"),
            (["--alg", "tr-svd", "--ranks", "1,1", "--eps", "1e-3"], "not --ranks"),
            (["--alg", "tr-svd"], "needs --eps"),
            (["--alg", "frobnicate", "--eps", "1e-3"], "unknown algorithm"),
        ]
        for flags, needle in checks:
            proc = run_cli("compress", src, dst, *flags)
            assert proc.returncode == 2
            assert needle in proc.stderr

    def test_missing_input_file(self, tmp_path):
        proc = run_cli(
            "compress", tmp_path / "ghost.trt", tmp_path / "o.trc", "--alg", "tr-svd",
            "--eps", "1e-3",
        )
        assert proc.returncode == 2
        assert proc.stdout == ""


class TestReconstruct:
    def test_round_trip_tight_eps(self, tmp_path):
        rng = np.random.default_rng(2)
        original = DenseTensor((4, 4, 4), rng.standard_normal(64))
        src = tmp_path / "t.trt"
        ring = tmp_path / "t.trc"
        back = tmp_path / "back.trt"
        write_dense(src, original)
        proc = run_cli("compress", src, ring, "--alg", "tr-svd", "--eps", "1e-12")
        assert proc.returncode == 0, proc.stderr
        proc = run_cli("reconstruct", ring, back)
        assert proc.returncode == 0, proc.stderr
        restored = read_dense(back)
        rel = np.linalg.norm(restored.data - original.data) / np.linalg.norm(original.data)
        assert rel <= 1e-10

    def test_corrupt_magic_names_format(self, tmp_path):
        ring = tmp_path / "t.trc"
        write_random_ring(ring, (2, 3), (1, 2), seed=0)
        payload = bytearray(ring.read_bytes())
        payload[:4] = b"XXXX"
        ring.write_bytes(bytes(payload))
        proc = run_cli("reconstruct", ring, tmp_path / "o.trt")
        assert proc.returncode == 2
        assert "TRC1" in proc.stderr

    def test_zero_ring_reconstructs_zero(self, tmp_path):
        cores = [np.zeros((1, 2, 1)), np.zeros((1, 3, 1))]
        ring = tmp_path / "z.trc"
        write_ring(ring, TRTensor(cores))
        out = tmp_path / "z.trt"
        assert run_cli("reconstruct", ring, out).returncode == 0
        assert np.array_equal(read_dense(out).data, np.zeros(6))

    def test_oversized_reconstruction_is_numeric_failure(self, tmp_path):
        cores = [np.ones((1, 2, 1))] * 40
        ring = tmp_path / "big.trc"
        write_ring(ring, TRTensor(cores))
        proc = run_cli("reconstruct", ring, tmp_path / "big.trt")
        assert proc.returncode == 3
        assert proc.stderr != ""


class TestInfo:
    def test_ring_summary(self, tmp_path):
        ring = tmp_path / "t.trc"
        _, dense = write_random_ring(ring, (4,) * 10, (1,) * 10, seed=0)
        proc = run_cli("info", ring)
        assert proc.returncode == 0, proc.stderr
        info = json.loads(proc.stdout)
        assert info["format"] == "TRC1"
        assert info["order"] == 10
        assert info["dims"] == [4] * 10
        assert info["ranks"] == [1] * 10
        assert info["n_params"] == 40
        assert info["r_max"] == 1
        assert info["r_avg"] == 1.0
        oracle = float(np.linalg.norm(dense.data))
        assert info["fro_norm"] == pytest.approx(oracle, rel=1e-10)

    def test_dense_summary_has_no_rank_fields(self, tmp_path):
        src = tmp_path / "t.trt"
        rng = np.random.default_rng(4)
        t = DenseTensor((3, 5), rng.standard_normal(15))
        write_dense(src, t)
        proc = run_cli("info", src)
        assert proc.returncode == 0, proc.stderr
        info = json.loads(proc.stdout)
        assert info["format"] == "TRT1"
        assert info["n_values"] == 15
        assert info["fro_norm"] == pytest.approx(float(np.linalg.norm(t.data)), rel=1e-10)
        assert not {"ranks", "n_params", "r_avg", "r_max"} & info.keys()

    def test_unrecognized_file(self, tmp_path):
        junk = tmp_path / "junk.bin"
        junk.write_bytes(b"\x00\x01\x02\x03plus some trailing junk")
        proc = run_cli("info", junk)
        assert proc.returncode == 2
        assert "magic" in proc.stderr


class TestAlgebra:
    def test_norm_of_all_ones(self, tmp_path):
        cores = [np.ones((1, 2, 1)), np.ones((1, 3, 1)), np.ones((1, 4, 1))]
        ring = tmp_path / "ones.trc"
        write_ring(ring, TRTensor(cores))
        proc = run_cli("algebra", "norm", ring)
        assert proc.returncode == 0, proc.stderr
        assert json.loads(proc.stdout) == pytest.approx(math.sqrt(24.0), rel=1e-12)

    def test_inner_with_zero(self, tmp_path):
        a = tmp_path / "a.trc"
        z = tmp_path / "z.trc"
        write_random_ring(a, (2, 3, 2), (2, 2, 2), seed=1)
        write_ring(z, TRTensor([np.zeros((1, 2, 1)), np.zeros((1, 3, 1)), np.zeros((1, 2, 1))]))
        proc = run_cli("algebra", "inner", a, z)
        assert proc.returncode == 0, proc.stderr
        assert json.loads(proc.stdout) == 0.0

    def test_add_then_info_ranks_sum(self, tmp_path):
        a = tmp_path / "a.trc"
        b = tmp_path / "b.trc"
        out = tmp_path / "sum.trc"
        _, dense_a = write_random_ring(a, (2, 3, 2), (1, 2, 2), seed=2)
        _, dense_b = write_random_ring(b, (2, 3, 2), (2, 1, 1), seed=3)
        proc = run_cli("algebra", "add", a, b, out)
        assert proc.returncode == 0, proc.stderr
        assert json.loads(proc.stdout)["ranks"] == [3, 3, 3]
        info = json.loads(run_cli("info", out).stdout)
        assert info["ranks"] == [3, 3, 3]
        total = read_ring(out).to_dense()
        assert np.allclose(total.data, dense_a.data + dense_b.data, atol=1e-12)

    def test_hadamard_ranks_multiply(self, tmp_path):
        a = tmp_path / "a.trc"
        b = tmp_path / "b.trc"
        out = tmp_path / "prod.trc"
        _, dense_a = write_random_ring(a, (2, 2, 3), (2, 2, 2), seed=4)
        _, dense_b = write_random_ring(b, (2, 2, 3), (1, 2, 1), seed=5)
        proc = run_cli("algebra", "hadamard", a, b, out)
        assert proc.returncode == 0, proc.stderr
        assert json.loads(proc.stdout)["ranks"] == [2, 4, 2]
        product = read_ring(out).to_dense()
        assert np.allclose(product.data, dense_a.data * dense_b.data, atol=1e-12)

    def test_mvprod_matches_dense_contraction(self, tmp_path):
        ring = tmp_path / "t.trc"
        _, dense = write_random_ring(ring, (2, 3, 2), (2, 2, 2), seed=6)
        rng = np.random.default_rng(7)
        vecs = [rng.standard_normal(n) for n in (2, 3, 2)]
        vec_paths = []
        for i, v in enumerate(vecs):
            path = tmp_path / f"u{i}.trt"
            write_dense(path, DenseTensor((len(v),), v))
            vec_paths.append(path)
        argv = ["algebra", "mvprod", ring]
        for path in vec_paths:
            argv += ["--vec", path]
        proc = run_cli(*argv)
        assert proc.returncode == 0, proc.stderr
        cube = dense.data.reshape((2, 3, 2), order="F")
        oracle = float(np.einsum("abc,a,b,c->", cube, *vecs))
        assert json.loads(proc.stdout) == pytest.approx(oracle, rel=1e-12)

    def test_mvprod_wrong_vector_count(self, tmp_path):
        ring = tmp_path / "t.trc"
        write_random_ring(ring, (2, 3), (1, 2), seed=8)
        u = tmp_path / "u.trt"
        write_dense(u, DenseTensor((2,), np.ones(2)))
        proc = run_cli("algebra", "mvprod", ring, "--vec", u)
        assert proc.returncode == 2

    def test_mvprod_rejects_matrix_vector(self, tmp_path):
        ring = tmp_path / "t.trc"
        write_random_ring(ring, (2, 2), (1, 2), seed=9)
        m = tmp_path / "m.trt"
        write_dense(m, DenseTensor((2, 2), np.ones(4)))
        proc = run_cli("algebra", "mvprod", ring, "--vec", m, "--vec", m)
        assert proc.returncode == 2
        assert "order-1" in proc.stderr

    def test_shape_mismatch(self, tmp_path):
        a = tmp_path / "a.trc"
        b = tmp_path / "b.trc"
        write_random_ring(a, (2, 3), (1, 2), seed=10)
        write_random_ring(b, (3, 2), (1, 2), seed=11)
        proc = run_cli("algebra", "add", a, b, tmp_path / "o.trc")
        assert proc.returncode == 2
        assert "shape mismatch" in proc.stderr

    def test_wrong_path_count(self, tmp_path):
        a = tmp_path / "a.trc"
        write_random_ring(a, (2, 3), (1, 2), seed=12)
        assert run_cli("algebra", "norm", a, a).returncode == 2
        assert run_cli("algebra", "add", a, a).returncode == 2


class TestConvert:
    def test_cp_descriptor(self, tmp_path):
        rng = np.random.default_rng(13)
        factors = [rng.standard_normal((3, 2)), rng.standard_normal((4, 2))]
        paths = []
        for i, f in enumerate(factors):
            path = tmp_path / f"f{i}.trt"
            write_dense(path, DenseTensor(f.shape, f.ravel(order="F")))
            paths.append(path.name)
        desc = tmp_path / "model.json"
        desc.write_text(json.dumps({"kind": "cp", "factors": paths}))
        out = tmp_path / "cp.trc"
        proc = run_cli("convert", desc, out)
        assert proc.returncode == 0, proc.stderr
        summary = json.loads(proc.stdout)
        assert summary["kind"] == "cp"
        assert summary["ranks"] == [2, 2]
        dense = read_ring(out).to_dense().data.reshape((3, 4), order="F")
        oracle = factors[0] @ factors[1].T
        assert np.allclose(dense, oracle, atol=1e-12)

    def test_bad_descriptor(self, tmp_path):
        desc = tmp_path / "model.json"
        desc.write_text(json.dumps({"kind": "polyadic", "factors": []}))
        proc = run_cli("convert", desc, tmp_path / "o.trc")
        assert proc.returncode == 2


class TestBench:
    def test_table3_bals_rank_two(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"r_true": [2], "algorithms": ["tr_bals"], "seed": 0}))
        out_dir = tmp_path / "out"
        proc = run_cli("bench", "table3", "--config", config, "--out", out_dir)
        assert proc.returncode == 0, proc.stderr
        summary = json.loads(proc.stdout)
        assert summary["rows"] == 1
        lines = (out_dir / "table3.ndjson").read_text().splitlines()
        row = json.loads(lines[0])
        assert row["algorithm"] == "tr_bals"
        assert row["n_params"] == 160
        assert row["eps"] <= 1e-3
        saved = json.loads((out_dir / "table3_config.json").read_text())
        assert saved["seed"] == 0
        assert saved["r_true"] == [2]
        assert (out_dir / "table3.png").read_bytes()[:8] == PNG_MAGIC

    def test_functions_study_small(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(
            json.dumps(
                {
                    "kinds": ["f1"],
                    "dims": [4, 4, 4],
                    "eps": 1e-3,
                    "algorithms": ["tt_svd", "tr_svd", "tr_als"],
                    "seed": 0,
                }
            )
        )
        out_dir = tmp_path / "out"
        proc = run_cli("bench", "functions", "--config", config, "--out", out_dir)
        assert proc.returncode == 0, proc.stderr
        rows = [
            json.loads(line) for line in (out_dir / "functions.ndjson").read_text().splitlines()
        ]
        assert [r["algorithm"] for r in rows] == ["tt_svd", "tr_svd", "tr_als"]
        for row in rows:
            assert row["eps"] <= 1e-3
        assert (out_dir / "functions.png").read_bytes()[:8] == PNG_MAGIC

    def test_shift_study_small(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(
            json.dumps(
                {
                    "kind": "f3",
                    "dims": [4, 4, 4],
                    "shifts": [1, 2],
                    "algorithms": ["tt_svd", "tr_als"],
                    "seed": 0,
                }
            )
        )
        out_dir = tmp_path / "out"
        proc = run_cli("bench", "shift", "--config", config, "--out", out_dir)
        assert proc.returncode == 0, proc.stderr
        rows = [json.loads(line) for line in (out_dir / "shift.ndjson").read_text().splitlines()]
        assert len(rows) == 4
        als_params = {r["n_params"] for r in rows if r["algorithm"] == "tr_als"}
        assert len(als_params) == 1
        assert (out_dir / "shift.png").read_bytes()[:8] == PNG_MAGIC

    def test_empty_algorithm_set(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"r_true": [1], "algorithms": [], "seed": 0}))
        proc = run_cli("bench", "table3", "--config", config, "--out", tmp_path / "out")
        assert proc.returncode == 2
        assert "empty" in proc.stderr

    def test_invalid_config_json(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text("not json {")
        proc = run_cli("bench", "table3", "--config", config, "--out", tmp_path / "out")
        assert proc.returncode == 2

    def test_unknown_study_rejected(self, tmp_path):
        proc = run_cli("bench", "table9", "--out", tmp_path)
        assert proc.returncode == 2


class TestHarness:
    def test_package_module_entry_point(self, tmp_path):
        ring = tmp_path / "t.trc"
        write_random_ring(ring, (2, 2), (1, 1), seed=0)
        proc = run_cli("info", ring, module="tring")
        assert proc.returncode == 0, proc.stderr
        assert json.loads(proc.stdout)["format"] == "TRC1"

    def test_invalid_thread_env_warns_but_runs(self, tmp_path):
        import os

        ring = tmp_path / "t.trc"
        write_random_ring(ring, (2, 2), (1, 1), seed=0)
        env = dict(os.environ, TRING_THREADS="abc")
        proc = run_cli("info", ring, env=env)
        assert proc.returncode == 0
        assert "TRING_THREADS" in proc.stderr

    def test_no_subcommand_is_usage_error(self):
        proc = run_cli()
        assert proc.returncode == 2
