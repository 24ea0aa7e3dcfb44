import filecmp
import glob
import json
import logging
import os

import pytest

from hcinduce.__main__ import DuplicateMessageFilter, main as hcinduce

from . import make_temp_copy, DATA_DIR


TOY = "%s/toy.csv" % DATA_DIR
TOY_CFG = "%s/toy.cfg" % DATA_DIR


def bench(tmpdir, *extra, out="out"):
    out_dir = str(tmpdir / out)
    code = hcinduce(["bench", "-c", TOY_CFG, "--dataset.path", TOY,
                     "--output.dir", out_dir] + list(extra))
    return code, out_dir


def test_bench(tmpdir, capsys):
    code, out_dir = bench(tmpdir)
    assert code == 0
    names = set(os.listdir(out_dir))
    assert {"report.json", "report.csv", "timings.csv"} <= names
    assert {"fold%d.nwk" % k for k in range(5)} <= names
    assert {"fold%d_projection.json" % k for k in range(5)} <= names

    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["scheme", "mean_f1", "le", "seconds"]
    assert [line.split()[0] for line in lines[1:]] == [
        "fc", "global", "lcpn", "lcpn_plus", "lcpn_plus_f"]

    with open(os.path.join(out_dir, "report.json")) as fp:
        report = json.load(fp)
    # the summary prints the serialized values
    for line in lines[1:]:
        scheme, mean_f1, le = line.split()[:3]
        assert float(mean_f1) == report["schemes"][scheme]["mean_f1"]
        if scheme != "fc":
            assert float(le) == report["schemes"][scheme]["le"]


def test_bench_is_deterministic(tmpdir):
    _, first = bench(tmpdir, out="first")
    _, second = bench(tmpdir, out="second")
    names = ["report.json", "report.csv"] + [
        os.path.basename(p) for p in glob.glob("%s/fold*" % first)]
    match, mismatch, errors = filecmp.cmpfiles(first, second, names,
                                               shallow=False)
    assert mismatch == [] and errors == []
    assert len(match) == len(names)


def test_bench_missing_dataset(tmpdir):
    out_dir = str(tmpdir / "out")
    code = hcinduce(["bench", "--dataset.path", str(tmpdir / "nope.csv"),
                     "--classifier.kind", "gaussian_nb",
                     "--output.dir", out_dir])
    assert code == 3
    assert not os.path.exists(out_dir)


def test_bench_config_error(tmpdir):
    code, out_dir = bench(tmpdir, "--hierarchy.method", "ternary")
    assert code == 2
    assert not os.path.exists(out_dir)


def test_bench_numeric_failure(tmpdir):
    path = str(tmpdir / "flat.csv")
    with open(path, "w") as fp:
        fp.write("x,label\n" + "".join("1.0,%s\n" % "ab"[i % 2]
                                       for i in range(20)))
    code = hcinduce(["bench", "--dataset.path", path,
                     "--classifier.kind", "gaussian_nb",
                     "--output.dir", str(tmpdir / "out")])
    assert code == 4


def test_traceback_reraises(tmpdir):
    with pytest.raises(Exception):
        hcinduce(["bench", "--traceback", "--dataset.path",
                  str(tmpdir / "nope.csv"), "--classifier.kind",
                  "gaussian_nb"])


def test_tree_two_classes(tmpdir, capsys):
    out_dir = str(tmpdir / "tree")
    code = hcinduce(["tree", "--dataset.path", "%s/toy2.csv" % DATA_DIR,
                     "--dataset.label_column", "label",
                     "--classifier.kind", "gaussian_nb",
                     "--output.dir", out_dir])
    assert code == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "(a,b);"
    with open(os.path.join(out_dir, "tree.nwk")) as fp:
        assert fp.read() == "(a,b);\n"
    with open(os.path.join(out_dir, "tree.json")) as fp:
        assert len(json.load(fp)) == 3


@pytest.mark.parametrize("method", ["divisive", "agglomerative"])
def test_tree_methods(tmpdir, capsys, method):
    code = hcinduce(["tree", "-c", TOY_CFG, "--dataset.path", TOY,
                     "--hierarchy.method", method,
                     "--output.dir", str(tmpdir / method)])
    assert code == 0
    newick = capsys.readouterr().out.splitlines()[0]
    for name in ("alpha", "beta", "gamma", "delta"):
        assert name in newick
    with open(str(tmpdir / method / "tree.json")) as fp:
        assert len(json.load(fp)) == 7


def test_tree_time_series(tmpdir, capsys):
    path = make_temp_copy(tmpdir, "%s/toy_ucr.tsv" % DATA_DIR)
    code = hcinduce(["tree", "--dataset.path", path,
                     "--dataset.format", "ucr_tsv",
                     "--classifier.kind", "ts_forest",
                     "--output.dir", str(tmpdir / "out")])
    assert code == 0
    newick = capsys.readouterr().out.splitlines()[0]
    assert newick.count(",") == 2


def test_sweep(tmpdir):
    out_dir = str(tmpdir / "sweep")
    code = hcinduce(["sweep", "-c", TOY_CFG, "--dataset.path", TOY,
                     "--schemes", "lcpn_plus_f",
                     "--output.dir", out_dir])
    assert code == 0
    with open(os.path.join(out_dir, "le_table.csv")) as fp:
        rows = fp.read().splitlines()
    assert rows[0] == "method,reduce,global,lcpn,lcpn_plus,lcpn_plus_f"
    assert len(rows) == 5


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        hcinduce(["--version"])
    assert info.value.code == 0


def test_doc_config(capsys):
    with pytest.raises(SystemExit):
        hcinduce(["--doc-config"])
    captured = capsys.readouterr()
    assert "dataset.path" in captured.out + captured.err


def test_unknown_command():
    with pytest.raises(SystemExit):
        hcinduce(["train"])


def write_csv(tmpdir, name, rows):
    path = str(tmpdir / name)
    with open(path, "w") as fp:
        fp.write("x1,x2,label\n")
        fp.writelines("%s,%s,%s\n" % row for row in rows)
    return path


def test_tree_too_few_rows_is_a_data_error(tmpdir):
    path = write_csv(tmpdir, "three.csv",
                     [(0.1, 0.5, "a"), (0.7, 0.2, "b"), (0.4, 0.9, "c")])
    code = hcinduce(["tree", "--dataset.path", path,
                     "--classifier.kind", "gaussian_nb",
                     "--output.dir", str(tmpdir / "out")])
    assert code == 3


def test_bench_small_training_split_is_a_data_error(tmpdir):
    path = write_csv(tmpdir, "six.csv",
                     [(0.1, 0.5, "a"), (0.2, 0.4, "a"), (0.7, 0.2, "b"),
                      (0.8, 0.1, "b"), (0.4, 0.9, "c"), (0.5, 0.8, "c")])
    code = hcinduce(["bench", "--dataset.path", path, "--cv.folds", "2",
                     "--classifier.kind", "gaussian_nb",
                     "--output.dir", str(tmpdir / "out")])
    assert code == 3


def test_ts_forest_on_short_series_is_a_data_error(tmpdir):
    code = hcinduce(["bench", "--dataset.path", "%s/toy2.csv" % DATA_DIR,
                     "--dataset.label_column", "label",
                     "--classifier.kind", "ts_forest", "--schemes", "fc",
                     "--output.dir", str(tmpdir / "out")])
    assert code == 3


def test_duplicate_filter_only_on_own_handler(tmpdir, caplog):
    root = logging.getLogger()
    before = list(root.handlers)
    hcinduce(["bench", "--dataset.path", str(tmpdir / "nope.csv"),
              "--classifier.kind", "gaussian_nb"])
    assert root.handlers == before
    assert not any(isinstance(f, DuplicateMessageFilter)
                   for h in root.handlers for f in h.filters)

    data_log = logging.getLogger("hcinduce.data")
    data_log.warning("Class q has 1 members for 5 folds")
    data_log.warning("Class q has 1 members for 5 folds")
    msgs = [r.getMessage() for r in caplog.records]
    assert msgs.count("Class q has 1 members for 5 folds") == 2


def test_log_file_drops_repeated_messages(tmpdir):
    log_path = str(tmpdir / "run.log")
    for _ in range(2):
        hcinduce(["bench", "--log", log_path,
                  "--dataset.path", str(tmpdir / "nope.csv"),
                  "--classifier.kind", "gaussian_nb"])
    with open(log_path) as fp:
        lines = fp.read().splitlines()
    # each invocation starts with an empty filter
    assert len(lines) == 2
    assert all(line.startswith("ERROR: ") for line in lines)
