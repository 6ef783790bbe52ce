# Copyright 2026 The GRC Authors
# SPDX-License-Identifier: Apache-2.0
"""End-to-end checks of the grc command line tool.

Usage: cli_test.py <path-to-grc> <source-dir>
"""

import hashlib
import json
import os
import struct
import subprocess
import sys
import tempfile
import time
import unittest

import jsonschema

GRC = None
SRC = None


def run(*args, timeout=600):
    return subprocess.run([GRC, *map(str, args)], capture_output=True, text=True, timeout=timeout)


def schema(name):
    with open(os.path.join(SRC, "schemas", name + ".schema.json")) as f:
        return json.load(f)


def digest_tree(root):
    h = hashlib.sha256()
    for dirpath, _, files in sorted(os.walk(root)):
        for name in sorted(files):
            path = os.path.join(dirpath, name)
            h.update(os.path.relpath(path, root).encode())
            with open(path, "rb") as f:
                h.update(f.read())
    return h.hexdigest()


def read_pgm_header(path):
    with open(path, "rb") as f:
        tokens = []
        while len(tokens) < 4:
            line = f.readline()
            if line.startswith(b"#"):
                continue
            tokens += line.split()
    assert tokens[0] == b"P5", tokens
    return int(tokens[1]), int(tokens[2]), int(tokens[3])


class Cli(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory(prefix="grc_cli_")
        cls.root = cls.tmp.name
        cls.spec = os.path.join(SRC, "configs", "scene_urban4.json")
        cls.data = os.path.join(cls.root, "data")
        r = run("gen", "--spec", cls.spec, "--count", 3, "--out", cls.data, "--seed", 7)
        assert r.returncode == 0, r.stderr
        with open(os.path.join(cls.data, "manifest.json")) as f:
            cls.manifest = json.load(f)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def config(self, **overrides):
        with open(os.path.join(SRC, "configs", "train_overfit.json")) as f:
            doc = json.load(f)
        doc["data"] = self.data
        doc.update(overrides)
        path = os.path.join(self.root, "run_%d.json" % len(os.listdir(self.root)))
        with open(path, "w") as f:
            json.dump(doc, f)
        return path

    def train_small(self, name, steps=10):
        out = os.path.join(self.root, name)
        r = run("train", "--config", self.config(), "--ablation", "gb", "--steps", steps, "--out", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        return out

    def test_help_lists_flags(self):
        r = run("--help")
        self.assertEqual(r.returncode, 0)
        for sub in ("gen", "train", "eval", "verify", "inspect"):
            self.assertIn(sub, r.stdout)
        r = run("train", "--help")
        for flag in ("--config", "--ablation", "--steps", "--seed", "--resume"):
            self.assertIn(flag, r.stdout)

    def test_unknown_flag_is_usage_error(self):
        self.assertEqual(run("gen", "--frobnicate").returncode, 1)
        self.assertEqual(run("nosuchcommand").returncode, 1)

    def test_manifest_validates(self):
        jsonschema.validate(self.manifest, schema("dataset_manifest"))
        jsonschema.validate(self.manifest["spec"], schema("scene_spec"))
        self.assertEqual(self.manifest["count"], 3)
        self.assertEqual(len(self.manifest["scenes"]), 3)

    def test_gen_count_zero_writes_manifest_only(self):
        out = os.path.join(self.root, "empty")
        r = run("gen", "--spec", self.spec, "--count", 0, "--out", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(sorted(os.listdir(out)), ["manifest.json"])
        with open(os.path.join(out, "manifest.json")) as f:
            self.assertEqual(json.load(f)["scenes"], [])

    def test_gen_is_byte_identical(self):
        out = os.path.join(self.root, "again")
        r = run("gen", "--spec", self.spec, "--count", 3, "--out", out, "--seed", 7)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(digest_tree(out), digest_tree(self.data))

    def test_generated_scan_is_well_formed(self):
        scene = self.manifest["scenes"][0]
        with open(os.path.join(self.data, scene["bin"]), "rb") as f:
            raw = f.read()
        with open(os.path.join(self.data, scene["label"]), "rb") as f:
            labels = f.read()
        self.assertEqual(len(raw) % 16, 0)
        n = len(raw) // 16
        self.assertEqual(n, scene["points"])
        self.assertEqual(len(labels), 4 * n)
        for i in range(0, n, max(1, n // 200)):
            x, y, z, r = struct.unpack_from("<4f", raw, 16 * i)
            self.assertTrue(0.0 <= r <= 1.0)
            self.assertLess(struct.unpack_from("<I", labels, 4 * i)[0] & 0xFFFF, 4)
        out = os.path.join(self.root, "reparse")
        r = run("inspect", "--scan", os.path.join(self.data, scene["bin"]), "--out", out)
        self.assertEqual(r.returncode, 0, r.stderr)

    def test_missing_data_dir_is_data_error(self):
        out = os.path.join(self.root, "never")
        cfg = self.config(data=os.path.join(self.root, "does_not_exist"))
        r = run("train", "--config", cfg, "--out", out)
        self.assertEqual(r.returncode, 2, r.stderr)
        self.assertFalse(os.path.exists(out))

    def test_malformed_config_names_keys(self):
        cfg = self.config(learning_rate=0.1)
        with open(cfg) as f:
            doc = json.load(f)
        doc["model"]["heds"] = 4
        with open(cfg, "w") as f:
            json.dump(doc, f)
        r = run("train", "--config", cfg, "--out", os.path.join(self.root, "never2"))
        self.assertEqual(r.returncode, 1)
        self.assertIn("learning_rate", r.stderr)
        doc.pop("learning_rate")
        with open(cfg, "w") as f:
            json.dump(doc, f)
        r = run("train", "--config", cfg, "--out", os.path.join(self.root, "never2"))
        self.assertEqual(r.returncode, 1)
        self.assertIn("model.heds", r.stderr)

    def test_class_count_mismatch(self):
        cfg = self.config()
        with open(cfg) as f:
            doc = json.load(f)
        doc["model"]["num_classes"] = 5
        with open(cfg, "w") as f:
            json.dump(doc, f)
        r = run("train", "--config", cfg, "--steps", 1, "--out", os.path.join(self.root, "never3"))
        self.assertEqual(r.returncode, 2)
        self.assertIn("classes", r.stderr)

    def test_train_and_eval(self):
        start = time.monotonic()
        out = self.train_small("train10")
        self.assertLess(time.monotonic() - start, 60.0)
        ckpt = os.path.join(out, "model.grcw")
        with open(ckpt + ".json") as f:
            jsonschema.validate(json.load(f), schema("checkpoint_sidecar"))
        with open(os.path.join(out, "metrics.csv")) as f:
            rows = f.read().strip().splitlines()
        self.assertEqual(len(rows), 11)

        report = os.path.join(self.root, "eval.json")
        r = run("eval", "--checkpoint", ckpt, "--data", self.data, "--preset", "all", "--report", report)
        self.assertEqual(r.returncode, 0, r.stderr)
        with open(report) as f:
            doc = json.load(f)
        jsonschema.validate(doc, schema("eval_report"))
        presets = [row["preset"] for row in doc["results"]]
        self.assertIn("none", presets)
        self.assertIn("fog_dense", presets)

        r = run("eval", "--checkpoint", ckpt, "--data", self.data, "--preset", "none", "--json")
        self.assertEqual(r.returncode, 0, r.stderr)
        doc = json.loads(r.stdout)
        jsonschema.validate(doc, schema("eval_report"))
        self.assertEqual([row["preset"] for row in doc["results"]], ["none"])
        self.assertEqual(doc["results"][0]["points"], sum(s["points"] for s in self.manifest["scenes"]))

        r = run("eval", "--checkpoint", ckpt, "--data", self.data, "--preset", "haze")
        self.assertEqual(r.returncode, 1)

    def test_eval_class_count_mismatch(self):
        out = self.train_small("train_mismatch", steps=1)
        other = os.path.join(self.root, "data5")
        with open(self.spec) as f:
            spec = json.load(f)
        spec["num_classes"] = 5
        path = os.path.join(self.root, "spec5.json")
        with open(path, "w") as f:
            json.dump(spec, f)
        self.assertEqual(run("gen", "--spec", path, "--count", 1, "--out", other).returncode, 0)
        r = run("eval", "--checkpoint", os.path.join(out, "model.grcw"), "--data", other, "--preset", "none")
        self.assertEqual(r.returncode, 2)
        self.assertIn("classes", r.stderr)

    def test_inspect_outputs(self):
        scene = self.manifest["scenes"][1]
        out = os.path.join(self.root, "inspect")
        r = run("inspect", "--scan", os.path.join(self.data, scene["bin"]),
                "--label", os.path.join(self.data, scene["label"]), "--out", out,
                "--bins", 25, "--height", 32, "--width", 256, "--preset", "fog_dense", "--seed", 3)
        self.assertEqual(r.returncode, 0, r.stderr)
        for name in ("distance_hist.csv", "reflectance_hist.csv"):
            with open(os.path.join(out, name)) as f:
                lines = f.read().strip().splitlines()
            self.assertEqual(lines[0].split(",")[:3], ["bin_lo", "bin_hi", "count"])
            self.assertEqual(len(lines) - 1, 25)
            self.assertEqual(sum(int(l.split(",")[2]) for l in lines[1:]), scene["points"])
        for name in ("range.pgm", "reflectance.pgm", "mask.pgm"):
            w, h, maxval = read_pgm_header(os.path.join(out, name))
            self.assertEqual((w, h, maxval), (256, 32, 65535))
            self.assertGreaterEqual(os.path.getsize(os.path.join(out, name)), 2 * w * h)
        with open(os.path.join(out, "inspect.json")) as f:
            doc = json.load(f)
        jsonschema.validate(doc, schema("inspect"))
        cmp = doc["comparison"]
        self.assertGreater(cmp["reflectance_shift"], cmp["distance_shift"])

    def test_inspect_class_map(self):
        scene = self.manifest["scenes"][0]
        cmap = os.path.join(SRC, "configs", "class_map_semantickitti4.json")
        with open(cmap) as f:
            jsonschema.validate(json.load(f), schema("class_map"))
        out = os.path.join(self.root, "inspect_map")
        r = run("inspect", "--scan", os.path.join(self.data, scene["bin"]), "--class-map", cmap, "--out", out)
        self.assertEqual(r.returncode, 1)
        r = run("inspect", "--scan", os.path.join(self.data, scene["bin"]),
                "--label", os.path.join(self.data, scene["label"]), "--class-map", cmap, "--out", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        with open(os.path.join(out, "inspect.json")) as f:
            counts = json.load(f)["label_counts"]
        self.assertEqual(sum(counts.values()), scene["points"])

    def test_verify_suites(self):
        report = os.path.join(self.root, "verify.json")
        for suite in ("kl", "projection"):
            r = run("verify", "--suite", suite, "--report", report)
            self.assertEqual(r.returncode, 0, r.stdout + r.stderr)
            with open(report) as f:
                doc = json.load(f)
            jsonschema.validate(doc, schema("verify_report"))
            self.assertTrue(all(s["passed"] for s in doc["suites"]))

    def test_presets_file_validates(self):
        with open(os.path.join(SRC, "configs", "corruption_presets.json")) as f:
            jsonschema.validate(json.load(f), schema("corruption_presets"))


if __name__ == "__main__":
    GRC, SRC = os.path.abspath(sys.argv[1]), os.path.abspath(sys.argv[2])
    unittest.main(argv=sys.argv[:1], verbosity=2)
