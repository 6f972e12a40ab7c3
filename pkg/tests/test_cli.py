import pytest

from vrcflow.cli import main
from conftest import write_kernel_xdf, write_run_manifest


@pytest.fixture()
def project(tmp_path, yuv_file):
    write_kernel_xdf(tmp_path)
    yuv_file(64, 32, frames=2)
    return tmp_path


def merge_args(project):
    return ["merge", "-o", str(project / "out"),
            str(project / "sobel.xdf"), str(project / "roberts.xdf")]


def test_merge_success(project, capsys):
    assert main(merge_args(project)) == 0
    out = capsys.readouterr().out
    assert "functional actors: 18" in out
    assert (project / "out" / "merged.xdf").exists()
    assert (project / "out" / "ctab.txt").exists()
    assert (project / "out" / "mdcInfo.xml").exists()


def test_merge_single_input_identity(project, capsys):
    assert main(["merge", "-o", str(project / "solo"),
                 str(project / "roberts.xdf")]) == 0
    ctab = (project / "solo" / "ctab.txt").read_text()
    assert ctab.strip() == "config 1 roberts:"  # no SBox entries
    assert "sboxes: 0" in capsys.readouterr().out


def test_merge_missing_file_exits_2(project, capsys):
    code = main(["merge", "-o", str(project / "out"),
                 str(project / "missing.xdf")])
    assert code == 2
    assert "missing.xdf" in capsys.readouterr().err


def test_run_and_report_flow(project, capsys):
    assert main(merge_args(project)) == 0
    manifest = write_run_manifest(project, iterations=2)
    assert main(["run", "-m", str(manifest)]) == 0
    out = capsys.readouterr().out
    assert "throughput" in out and "FpS" in out
    assert "trace rows: 28" in out  # 2 iterations x (8 + 3*2)

    csv_dir = str(project / "results" / "papify-output")
    assert main(["report", csv_dir]) == 0
    out = capsys.readouterr().out
    assert "EdgeMDC_hw_filter" in out
    assert "total rows: 28" in out
    assert "slowest actors" in out


def test_run_monitoring_off_writes_no_rows(project, capsys):
    assert main(merge_args(project)) == 0
    manifest = write_run_manifest(project, monitoring="off")
    assert main(["run", "-m", str(manifest)]) == 0
    out = capsys.readouterr().out
    assert "trace rows: 0" in out
    assert (project / "results" / "report.json").exists()
    assert not (project / "results" / "papify-output").exists()


def test_run_both_modes_prints_overhead_table(project, capsys):
    assert main(merge_args(project)) == 0
    manifest = write_run_manifest(project, monitoring="both", iterations=3)
    assert main(["run", "-m", str(manifest)]) == 0
    out = capsys.readouterr().out
    assert "Overhead" in out and "St.Dev" in out


def test_run_missing_manifest_exits_2(project, capsys):
    assert main(["run", "-m", str(project / "nope.ini")]) == 2


def test_report_with_event_timeline(project, capsys):
    assert main(merge_args(project)) == 0
    manifest = write_run_manifest(project)
    assert main(["run", "-m", str(manifest)]) == 0
    capsys.readouterr()
    csv_dir = str(project / "results" / "papify-output")
    assert main(["report", csv_dir, "--event", "MDC_CLOCK_CYCLE"]) == 0
    assert "MDC_CLOCK_CYCLE" in capsys.readouterr().out


def test_report_missing_dir_exits_2(project):
    assert main(["report", str(project / "ghost")]) == 2


def test_cli_artifacts_only_no_hidden_state(project, tmp_path):
    """cmd_run consumes only what cmd_merge emitted: moving the artifact
    directory elsewhere still works."""
    import shutil
    assert main(merge_args(project)) == 0
    moved = tmp_path / "relocated"
    shutil.copytree(project / "out", moved / "out")
    shutil.copy(project / "clip.yuv", moved / "clip.yuv")
    manifest = write_run_manifest(moved)
    assert main(["run", "-m", str(manifest)]) == 0
