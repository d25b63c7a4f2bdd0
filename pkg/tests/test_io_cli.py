"""File formats and the command-line interface.

CLI commands run in-process through main(argv), so exit codes and written
artifacts are checked directly.
"""

import json
import os

import numpy as np
import pytest

from spdstats.cli import main
from spdstats.errors import ShapeError, ValidationError
from spdstats.io import ManifestEntry, load_manifest, read_matrix, write_manifest, write_matrix
from spdstats.sample import rspdnorm
from spdstats.metrics import AIRM

from helpers import random_spd


class TestMatrixIO:
    def test_roundtrip_exact(self, tmp_path):
        # bitwise round-trip holds for exactly symmetric input; the reader
        # symmetrizes, which is a no-op there
        rng = np.random.default_rng(0)
        s = random_spd(rng, 5)
        s = (s + s.T) / 2.0
        path = tmp_path / "m.csv"
        write_matrix(path, s)
        back = read_matrix(path)
        np.testing.assert_array_equal(back, s)

    def test_rejects_asymmetric(self, tmp_path):
        path = tmp_path / "bad.csv"
        np.savetxt(path, np.array([[1.0, 2.0], [0.5, 1.0]]), delimiter=",")
        with pytest.raises(ValidationError):
            read_matrix(path)

    def test_rejects_nonsquare(self, tmp_path):
        path = tmp_path / "bad.csv"
        np.savetxt(path, np.zeros((2, 3)), delimiter=",")
        with pytest.raises(ValidationError):
            read_matrix(path)

    def test_rejects_nonfinite(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,nan\nnan,1.0\n")
        with pytest.raises(ValidationError):
            read_matrix(path)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("hello,world\n")
        with pytest.raises(ValidationError):
            read_matrix(path)

    def test_symmetrizes_rounding_noise(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1.0,0.30000000000000004\n0.3,1.0\n")
        back = read_matrix(path)
        np.testing.assert_allclose(back, back.T)

    def test_one_by_one(self, tmp_path):
        path = tmp_path / "m.csv"
        write_matrix(path, np.array([[2.5]]))
        assert read_matrix(path).shape == (1, 1)


class TestManifest:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(1)
        mats = [(m + m.T) / 2.0 for m in (random_spd(rng, 3) for _ in range(4))]
        entries = []
        for i, m in enumerate(mats):
            name = f"c{i}.csv"
            write_matrix(tmp_path / name, m)
            entries.append(ManifestEntry(path=name, group="g", site="s"))
        man = write_manifest(tmp_path, entries)
        stack, groups, sites, back = load_manifest(man)
        assert stack.shape == (4, 3, 3)
        np.testing.assert_array_equal(stack, np.stack(mats))
        assert groups == ["g"] * 4
        assert sites == ["s"] * 4

    def test_missing_file(self, tmp_path):
        man = write_manifest(tmp_path, [ManifestEntry(path="gone.csv", group="g")])
        with pytest.raises(ValidationError):
            load_manifest(man)

    def test_mixed_dims(self, tmp_path):
        write_matrix(tmp_path / "a.csv", np.eye(2))
        write_matrix(tmp_path / "b.csv", np.eye(3))
        man = write_manifest(
            tmp_path,
            [ManifestEntry(path="a.csv", group="g"), ManifestEntry(path="b.csv", group="g")],
        )
        with pytest.raises(ValidationError):
            load_manifest(man)

    def test_empty_manifest(self, tmp_path):
        man = write_manifest(tmp_path, [])
        with pytest.raises(ValidationError):
            load_manifest(man)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError):
            load_manifest(path)


def _read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestGenCommand:
    def test_deterministic_bytes(self, tmp_path, capsys):
        d1 = tmp_path / "a"
        d2 = tmp_path / "b"
        for d in (d1, d2):
            assert main([
                "gen", "--n", "4", "--p", "3", "--seed", "9", "--out-dir", str(d),
            ]) == 0
        capsys.readouterr()
        for name in sorted(os.listdir(d1)):
            assert _read_bytes(d1 / name) == _read_bytes(d2 / name), name

    def test_written_sample_loads(self, tmp_path, capsys):
        d = tmp_path / "data"
        main(["gen", "--n", "5", "--p", "4", "--seed", "2", "--out-dir", str(d),
              "--group", "grp", "--site", "st"])
        capsys.readouterr()
        stack, groups, sites, _ = load_manifest(d / "manifest.json")
        assert stack.shape == (5, 4, 4)
        assert groups == ["grp"] * 5
        assert sites == ["st"] * 5
        for s in stack:
            assert np.linalg.eigvalsh(s).min() > 0

    def test_matches_library_call(self, tmp_path, capsys):
        d = tmp_path / "data"
        main(["gen", "--n", "3", "--p", "3", "--metric", "airm", "--seed", "5",
              "--out-dir", str(d)])
        capsys.readouterr()
        stack, _, _, _ = load_manifest(d / "manifest.json")
        sam = rspdnorm(3, np.eye(3), np.eye(6), AIRM, seed=5)
        sam.compute_unvec()
        sam.compute_conns()
        np.testing.assert_array_equal(stack, sam.conns)

    def test_bad_dispersion_dim_message(self, tmp_path, capsys):
        # p = 30 needs a dispersion of dimension 465
        disp = tmp_path / "disp.csv"
        write_matrix(disp, np.eye(4))
        code = main([
            "gen", "--n", "2", "--p", "30", "--dispersion", str(disp),
            "--out-dir", str(tmp_path / "out"),
        ])
        err = capsys.readouterr().err
        assert code == 2
        assert "465" in err

    def test_label_runs(self, tmp_path, capsys):
        d = tmp_path / "data"
        main(["gen", "--n", "5", "--p", "3", "--seed", "0", "--out-dir", str(d),
              "--group", "a:2,b:3", "--site", "s1:4,s2:1"])
        capsys.readouterr()
        _, groups, sites, _ = load_manifest(d / "manifest.json")
        assert groups == ["a", "a", "b", "b", "b"]
        assert sites == ["s1", "s1", "s1", "s1", "s2"]

    def test_label_run_count_mismatch(self, tmp_path, capsys):
        code = main(["gen", "--n", "5", "--p", "3", "--out-dir",
                     str(tmp_path / "d"), "--group", "a:2,b:2"])
        err = capsys.readouterr().err
        assert code == 2
        assert "counts sum to 4" in err


class TestFmeanCommand:
    def _gen(self, tmp_path, capsys, n=6, p=3, seed=1):
        d = tmp_path / "data"
        main(["gen", "--n", str(n), "--p", str(p), "--seed", str(seed),
              "--out-dir", str(d)])
        capsys.readouterr()
        return d / "manifest.json"

    def test_report_echoes_defaults(self, tmp_path, capsys):
        man = self._gen(tmp_path, capsys)
        rep = tmp_path / "rep.json"
        out = tmp_path / "mean.csv"
        code = main(["fmean", "--manifest", str(man), "--out", str(out),
                     "--report", str(rep)])
        capsys.readouterr()
        assert code in (0, 4)
        payload = json.loads(rep.read_text())
        cfg = payload["config"]
        assert cfg["learning_rate"] == 0.2
        assert cfg["tolerance"] == 0.05
        assert cfg["max_iterations"] == 20
        assert cfg["batch_size"] == 6
        assert cfg["seed"] == 0
        assert cfg["threads"] == 1
        assert payload["result"]["epochs"] >= 1

    def test_two_copies_mean(self, tmp_path, capsys):
        # the mean of two copies of A is A itself
        rng = np.random.default_rng(3)
        a = random_spd(rng, 3)
        d = tmp_path / "dup"
        d.mkdir()
        write_matrix(d / "a0.csv", a)
        write_matrix(d / "a1.csv", a)
        write_manifest(
            d,
            [ManifestEntry(path="a0.csv", group="g"), ManifestEntry(path="a1.csv", group="g")],
        )
        out = tmp_path / "mean.csv"
        code = main(["fmean", "--manifest", str(d / "manifest.json"),
                     "--lr", "1.0", "--tol", "1e-10", "--max-iter", "30",
                     "--out", str(out)])
        capsys.readouterr()
        assert code == 0
        np.testing.assert_allclose(read_matrix(out), a, atol=1e-8)

    def test_exit_4_on_non_convergence(self, tmp_path, capsys):
        man = self._gen(tmp_path, capsys)
        code = main(["fmean", "--manifest", str(man), "--tol", "1e-15",
                     "--max-iter", "1", "--out", str(tmp_path / "m.csv")])
        capsys.readouterr()
        assert code == 4

    def test_exit_2_on_missing_manifest(self, tmp_path, capsys):
        code = main(["fmean", "--manifest", str(tmp_path / "none.json"),
                     "--out", str(tmp_path / "m.csv")])
        capsys.readouterr()
        assert code == 2

    def test_exit_3_on_bad_matrix(self, tmp_path, capsys):
        d = tmp_path / "bad"
        d.mkdir()
        write_matrix(d / "m.csv", np.diag([1.0, -1.0]))
        write_manifest(d, [ManifestEntry(path="m.csv", group="g")])
        code = main(["fmean", "--manifest", str(d / "manifest.json"),
                     "--out", str(tmp_path / "m.csv")])
        err = capsys.readouterr().err
        assert code == 3
        assert "error" in err

    def test_bad_batch_size_string(self, tmp_path, capsys):
        man = self._gen(tmp_path, capsys)
        code = main(["fmean", "--manifest", str(man), "--batch-size", "half",
                     "--out", str(tmp_path / "m.csv")])
        capsys.readouterr()
        assert code == 2


class TestAnovaCommand:
    def _two_group_manifest(self, tmp_path, capsys):
        d = tmp_path / "ab"
        d.mkdir()
        entries = []
        for g, seed in (("a", 1), ("b", 2)):
            sam = rspdnorm(6, np.eye(3), 0.5 * np.eye(6), AIRM, seed=seed)
            sam.compute_unvec()
            sam.compute_conns()
            for i, m in enumerate(sam.conns):
                name = f"{g}{i}.csv"
                write_matrix(d / name, m)
                entries.append(ManifestEntry(path=name, group=g, site=g))
        return write_manifest(d, entries)

    def test_frechet_report(self, tmp_path, capsys):
        man = self._two_group_manifest(tmp_path, capsys)
        rep = tmp_path / "rep.json"
        code = main(["anova", "--manifest", str(man), "--test", "frechet",
                     "--iterations", "19", "--seed", "3", "--report", str(rep)])
        capsys.readouterr()
        assert code == 0
        payload = json.loads(rep.read_text())
        assert payload["config"]["groups"] == ["a", "b"]
        assert 0.0 < payload["result"]["p_permutation"] <= 1.0
        assert payload["result"]["n_permutations"] == 19

    def test_riem_report(self, tmp_path, capsys):
        man = self._two_group_manifest(tmp_path, capsys)
        rep = tmp_path / "rep.json"
        code = main(["anova", "--manifest", str(man), "--test", "riem",
                     "--stat", "pillai", "--iterations", "19", "--report", str(rep)])
        capsys.readouterr()
        assert code == 0
        payload = json.loads(rep.read_text())
        assert payload["result"]["stat"] == "pillai"
        assert 0.0 < payload["result"]["p_value"] <= 1.0

    def test_single_group_rejected(self, tmp_path, capsys):
        d = tmp_path / "one"
        d.mkdir()
        write_matrix(d / "m.csv", np.eye(2))
        write_matrix(d / "m2.csv", 2 * np.eye(2))
        man = write_manifest(
            d,
            [ManifestEntry(path="m.csv", group="g"), ManifestEntry(path="m2.csv", group="g")],
        )
        code = main(["anova", "--manifest", str(man)])
        capsys.readouterr()
        assert code == 2


class TestHarmonizeCommand:
    def _two_site_manifest(self, tmp_path, sites=("s1", "s2")):
        d = tmp_path / "sites"
        d.mkdir()
        entries = []
        for site, (scale, seed) in zip(sites, ((1.0, 1), (1.5, 2))):
            sam = rspdnorm(8, scale * np.eye(3), 0.2 * np.eye(6), AIRM, seed=seed)
            sam.compute_unvec()
            sam.compute_conns()
            for i, m in enumerate(sam.conns):
                name = f"{site}_{i}.csv"
                write_matrix(d / name, m)
                entries.append(ManifestEntry(path=name, group="g", site=site))
        return write_manifest(d, entries)

    @pytest.mark.parametrize("method", ["combat", "rigid"])
    def test_writes_harmonized_set(self, tmp_path, capsys, method):
        man = self._two_site_manifest(tmp_path)
        out = tmp_path / "out"
        rep = tmp_path / "rep.json"
        code = main(["harmonize", "--manifest", str(man), "--method", method,
                     "--out-dir", str(out), "--report", str(rep)])
        capsys.readouterr()
        assert code == 0
        stack, _, sites, _ = load_manifest(out / "manifest.json")
        assert stack.shape == (16, 3, 3)
        assert sorted(set(sites)) == ["s1", "s2"]
        payload = json.loads(rep.read_text())
        assert "silhouette" in payload["result"]["quality_before"]
        assert "davies_bouldin" in payload["result"]["quality_after"]

    def test_missing_sites_rejected(self, tmp_path, capsys):
        d = tmp_path / "nosite"
        d.mkdir()
        write_matrix(d / "a.csv", np.eye(2))
        write_matrix(d / "b.csv", 2 * np.eye(2))
        man = write_manifest(
            d,
            [ManifestEntry(path="a.csv", group="g"), ManifestEntry(path="b.csv", group="g")],
        )
        code = main(["harmonize", "--manifest", str(man), "--out-dir", str(tmp_path / "o")])
        capsys.readouterr()
        assert code == 2

    def test_rigid_transportless_metric_exit_3(self, tmp_path, capsys):
        man = self._two_site_manifest(tmp_path)
        code = main(["harmonize", "--manifest", str(man), "--method", "rigid",
                     "--metric", "log-cholesky", "--out-dir", str(tmp_path / "o")])
        capsys.readouterr()
        assert code == 3


class TestBenchCommand:
    def test_csv_contract(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        code = main(["bench", "--n-list", "6,8", "--p-list", "3", "--threads-list", "1",
                     "--batch-list", "n", "--repeats", "1", "--out", str(out)])
        capsys.readouterr()
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "n,p,threads,batch_size,repeat,seconds"
        assert len(lines) == 3
        row = lines[1].split(",")
        assert row[0] == "6" and row[1] == "3" and row[2] == "1" and row[3] == "6"
        assert float(row[5]) >= 0.0

    def test_summary_printed_with_repeats(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        main(["bench", "--n-list", "6", "--p-list", "3", "--threads-list", "1",
              "--batch-list", "n", "--repeats", "3", "--out", str(out)])
        text = capsys.readouterr().out
        assert "median" in text

    def test_bad_list_exit_2(self, tmp_path, capsys):
        code = main(["bench", "--n-list", "6;8", "--out", str(tmp_path / "b.csv")])
        capsys.readouterr()
        assert code == 2
