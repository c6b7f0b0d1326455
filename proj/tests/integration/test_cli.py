"""End-to-end checks of the rcd command-line tool.

Usage: test_cli.py <path-to-rcd> <data-dir>
"""

import json
import os
import random
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

RCD = None
DATA = None


def run(*args, env=None, check=None):
    full_env = dict(os.environ)
    full_env.pop("RCD_THREADS", None)
    if env:
        full_env.update(env)
    proc = subprocess.run([RCD, *map(str, args)], capture_output=True, text=True, env=full_env)
    if check is not None and proc.returncode != check:
        raise AssertionError(f"exit {proc.returncode} != {check}\nstdout:\n{proc.stdout}\nstderr:\n{proc.stderr}")
    return proc


def write_tsv(path, header, rows):
    with open(path, "w") as fh:
        fh.write("\t".join(header) + "\n")
        for r in rows:
            fh.write("\t".join(str(x) for x in r) + "\n")


# Arrays and the tissues on (Cy3, Cy5); every tissue pair is co-hybridized on two arrays.
ARRAYS = [
    ("A1", "N", "C"), ("A2", "C", "N"), ("A3", "N", "T"),
    ("A4", "T", "N"), ("A5", "C", "T"), ("A6", "T", "C"),
    ("A7", "N", "C"), ("A8", "C", "N"),
]

GENES = {
    "GA": [(100, 200), (150, 250), (120, 260)],
    "GB": [(1000, 1100), (1050, 1200)],
}

LEVELS = {"N": [9.0, 10.0, 8.0], "C": [10.5, 8.5, 8.0], "T": [9.0, 10.0, 8.2]}


def toy_dataset(directory, constant_gene=None, drop_channel=False, seed=3):
    rng = random.Random(seed)
    probes, design, rows = [], [], []
    for gene, junctions in GENES.items():
        for j, (j5, j3) in enumerate(junctions):
            probes.append((f"{gene}_{j + 1}", gene, j5, j3))
    for array, cy3, cy5 in ARRAYS:
        design.append((array, "Cy3", cy3, 1))
        design.append((array, "Cy5", cy5, 1))
    for array, cy3, cy5 in ARRAYS:
        for pid, gene, _, _ in probes:
            j = int(pid.split("_")[1]) - 1
            spot = rng.gauss(0, 0.2)
            for channel, tissue in (("Cy3", cy3), ("Cy5", cy5)):
                if drop_channel and array == "A1" and channel == "Cy5" and pid == "GA_1":
                    continue
                value = 7.0 if gene == constant_gene else LEVELS[tissue][j] + spot + rng.gauss(0, 0.15)
                rows.append((pid, array, channel, 2.0 ** value))
    d = Path(directory)
    write_tsv(d / "probes.tsv", ["probe_id", "gene", "j5", "j3"], probes)
    write_tsv(d / "design.tsv", ["array_id", "channel", "tissue", "replicate"], design)
    write_tsv(d / "intensities.tsv", ["probe_id", "array_id", "channel", "value"], rows)
    return d


def read_table(path):
    lines = Path(path).read_text().splitlines()
    header = lines[0].split("\t")
    return header, [dict(zip(header, line.split("\t"))) for line in lines[1:]]


class CliTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def analyze(self, data, out, *extra, check=0, env=None):
        return run("analyze", "--probes", data / "probes.tsv", "--design", data / "design.tsv",
                   "--intensities", data / "intensities.tsv", "--out", out, *extra, check=check, env=env)

    def test_analyze_writes_four_files(self):
        data = toy_dataset(self.tmp)
        out = self.tmp / "out"
        self.analyze(data, out, "--seed", 7, "--draws", 2000)
        self.assertEqual(sorted(p.name for p in out.iterdir()),
                         ["anosva_calls.tsv", "manifest.json", "rcd_calls.tsv", "sets.tsv"])
        header, rows = read_table(out / "rcd_calls.tsv")
        self.assertEqual(header, ["set_id", "gene", "junction", "t1", "t2", "U", "D", "E", "call", "M", "seed"])
        self.assertEqual({(r["t1"], r["t2"]) for r in rows}, {("C", "N"), ("C", "T"), ("N", "T")})
        for r in rows:
            self.assertAlmostEqual(float(r["U"]) + float(r["D"]) + float(r["E"]), 1.0, places=12)
        header, rows = read_table(out / "anosva_calls.tsv")
        self.assertEqual(header, ["set_id", "gene", "t1", "t2", "F", "df1", "df2", "p", "q", "lfdr"])
        manifest = json.loads((out / "manifest.json").read_text())
        self.assertEqual(manifest["seed"], 7)
        self.assertEqual(manifest["seed_source"], "flag")
        self.assertEqual(len(manifest["inputs"]["probes"]["sha256"]), 64)
        self.assertEqual(manifest["parameters"]["kappa"], 0.9)
        self.assertEqual(manifest["counts"]["failed_tasks"], 0)
        self.assertFalse([p for p in out.iterdir() if p.name.startswith(".")])

    def test_missing_design_is_a_usage_error(self):
        data = toy_dataset(self.tmp)
        proc = run("analyze", "--probes", data / "probes.tsv", "--intensities", data / "intensities.tsv",
                   "--out", self.tmp / "out", check=2)
        self.assertIn("--design", proc.stderr)
        self.assertFalse((self.tmp / "out").exists())

    def test_fixed_seed_is_byte_identical(self):
        data = toy_dataset(self.tmp)
        self.analyze(data, self.tmp / "a", "--seed", 7, "--draws", 1000)
        self.analyze(data, self.tmp / "b", "--seed", 7, "--draws", 1000, "--threads", 1)
        for name in ("rcd_calls.tsv", "anosva_calls.tsv", "sets.tsv"):
            self.assertEqual((self.tmp / "a" / name).read_bytes(), (self.tmp / "b" / name).read_bytes(), name)

    def test_seed_from_entropy_is_recorded_and_replayable(self):
        data = toy_dataset(self.tmp)
        self.analyze(data, self.tmp / "a", "--draws", 1000)
        manifest = json.loads((self.tmp / "a" / "manifest.json").read_text())
        self.assertEqual(manifest["seed_source"], "entropy")
        self.analyze(data, self.tmp / "b", "--draws", 1000, "--seed", manifest["seed"])
        self.assertEqual((self.tmp / "a" / "rcd_calls.tsv").read_bytes(),
                         (self.tmp / "b" / "rcd_calls.tsv").read_bytes())

    def test_tissue_restriction_and_fits(self):
        data = toy_dataset(self.tmp)
        out = self.tmp / "out"
        self.analyze(data, out, "--seed", 1, "--draws", 1000, "--tissues", "N,C", "--dump-fits")
        _, rows = read_table(out / "rcd_calls.tsv")
        self.assertEqual({(r["t1"], r["t2"]) for r in rows}, {("N", "C")})
        self.assertTrue((out / "fits.tsv").exists())
        self.analyze(data, self.tmp / "bad", "--tissues", "N", check=2)

    def test_validation_failure_writes_nothing(self):
        data = toy_dataset(self.tmp, drop_channel=True)
        proc = self.analyze(data, self.tmp / "out", "--seed", 1, check=2)
        self.assertIn("unpaired spot", proc.stderr)
        self.assertFalse((self.tmp / "out").exists())

    def test_failure_threshold(self):
        data = toy_dataset(self.tmp, constant_gene="GB")
        proc = self.analyze(data, self.tmp / "out", "--seed", 1, "--draws", 1000, "--max-failures", 0, check=3)
        self.assertIn("failure:", proc.stderr)
        self.assertFalse((self.tmp / "out").exists())
        self.analyze(data, self.tmp / "ok", "--seed", 1, "--draws", 1000, "--max-failures", 0.9)
        manifest = json.loads((self.tmp / "ok" / "manifest.json").read_text())
        self.assertGreater(manifest["counts"]["failed_tasks"], 0)
        self.assertTrue(any("failed for set" in w for w in manifest["warnings"]))

    def test_bad_thread_environment(self):
        data = toy_dataset(self.tmp)
        self.analyze(data, self.tmp / "out", "--seed", 1, check=2, env={"RCD_THREADS": "many"})
        self.analyze(data, self.tmp / "out2", "--seed", 1, "--draws", 1000, env={"RCD_THREADS": "2"})

    def test_build_sets_chain(self):
        write_tsv(self.tmp / "p.tsv", ["probe_id", "gene", "j5", "j3"],
                  [("j1", "G", 100, 200), ("j2", "G", 150, 250), ("j3", "G", 220, 300)])
        run("build-sets", "--probes", self.tmp / "p.tsv", "--out", self.tmp / "sets", check=0)
        _, rows = read_table(self.tmp / "sets" / "sets.tsv")
        got = {r["anchor_probe"]: r["member_probes"] for r in rows}
        self.assertEqual(got, {"j1": "j1,j2", "j2": "j1,j2,j3", "j3": "j2,j3"})
        self.assertTrue((self.tmp / "sets" / "manifest.json").exists())

    def test_simulate_fpr_table(self):
        run("simulate", "--study", "fpr", "--sims", 50, "--seed", 1, "--draws", 1000,
            "--out", self.tmp / "sim", check=0)
        header, rows = read_table(self.tmp / "sim" / "fpr_table.tsv")
        self.assertEqual(header[:5], ["scenario", "anosva_fpr", "rcd_fpr", "n_sims", "mc_se"])
        self.assertEqual(len(rows), 4)
        run("simulate", "--study", "nope", "--out", self.tmp / "x", check=2)

    def test_simulate_power_curves(self):
        run("simulate", "--study", "power", "--sims", 20, "--seed", 2, "--draws", 1000, "--n", 4,
            "--out", self.tmp / "pow", check=0)
        header, rows = read_table(self.tmp / "pow" / "power_curves.tsv")
        self.assertEqual(header, ["response", "method", "effect_log2", "n", "detect_rate", "n_sims"])
        self.assertEqual(len(rows), 2 * (7 + 7))

    def test_enrich(self):
        data = toy_dataset(self.tmp)
        self.analyze(data, self.tmp / "run", "--seed", 1, "--draws", 1000)
        genes = self.tmp / "genes.txt"
        genes.write_text("GA\n")
        proc = run("enrich", "--calls", self.tmp / "run" / "rcd_calls.tsv", "--genes", genes,
                   "--cutoff", "posterior:0.9", "--cutoff", "posterior:0.99", "--perms", 200, "--seed", 4, check=0)
        doc = json.loads(proc.stdout)
        self.assertEqual(len(doc["results"]), 2)
        r = doc["results"][0]
        for key in ("gene_set", "cutoff", "n_sig_in", "n_total_in", "n_sig_out", "n_total_out",
                    "ratio", "perm_p", "n_perm"):
            self.assertIn(key, r)
        self.assertEqual(r["n_total_in"] + r["n_total_out"], 3 * (3 + 2))
        run("enrich", "--calls", self.tmp / "run" / "anosva_calls.tsv", "--genes", genes, "--perms", 200,
            "--seed", 4, "--out", self.tmp / "enr", check=0)
        self.assertTrue((self.tmp / "enr" / "enrichment.json").exists())
        self.assertTrue((self.tmp / "enr" / "manifest.json").exists())

    def test_enrich_disjoint_gene_set(self):
        data = toy_dataset(self.tmp)
        self.analyze(data, self.tmp / "run", "--seed", 1, "--draws", 1000)
        known = Path(DATA) / "known_genes.txt"
        proc = run("enrich", "--calls", self.tmp / "run" / "rcd_calls.tsv", "--genes", known, "--seed", 1, check=2)
        self.assertIn("disjoint", proc.stderr)


if __name__ == "__main__":
    RCD, DATA = sys.argv[1], sys.argv[2]
    unittest.main(argv=sys.argv[:1], verbosity=2)
